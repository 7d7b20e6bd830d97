"""Convolutional polar coded modulation.

``L`` codewords of length ``N`` are staggered over ``L + m - 1`` transmission
blocks of ``N/m`` symbols each.  Bit ``i`` (1-based) of codeword ``l`` goes
to level ``j`` with ``j = i (mod m)``, in block ``l + (m - (i mod m)) mod m``,
tuple ``ceil(i/m)`` of that block.  Hence every bit of a codeword lands in a
different symbol, and codeword ``l`` sees level ``m`` in its own block and
level 1 in block ``l + m - 1``.

Codeword indices are 0-based in this module's API; bit positions and levels
follow the conventions above (1-based levels).
"""
from __future__ import annotations

import csv
import enum
import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .channels import Constellation, demap
from .polar import PolarCode, sc_decode

FROZEN = -1


@dataclass(frozen=True)
class CpcmLayout:
    """Cell bookkeeping for one ``(m, N, L)`` configuration."""

    m: int
    N: int
    L: int
    codeword_tuple: np.ndarray = field(repr=False)  # (L, N) 0-based tuple index
    codeword_level: np.ndarray = field(repr=False)  # (N,) 1-based level
    owner: np.ndarray = field(repr=False)  # (T, m) codeword index or FROZEN
    bit_index: np.ndarray = field(repr=False)  # (T, m) 0-based bit position or -1

    @property
    def block_size(self) -> int:
        return self.N // self.m

    @property
    def T(self) -> int:
        return (self.L + self.m - 1) * self.block_size

    @property
    def n_blocks(self) -> int:
        return self.L + self.m - 1

    def block_of(self, t) -> np.ndarray:
        return np.asarray(t) // self.block_size


@functools.lru_cache(maxsize=64)
def cpcm_layout(m: int, N: int, L: int) -> CpcmLayout:
    if m < 1 or N % m:
        raise ValueError(f"m={m} must divide N={N}; shorten the code first")
    if L < 1:
        raise ValueError("need at least one codeword")
    bs = N // m
    i = np.arange(1, N + 1)
    q = i % m
    level = np.where(q == 0, m, q)
    k_off = (m - q) % m  # block offset relative to the codeword index
    t0 = k_off * bs + (i - 1) // m
    tuples = t0[None, :] + bs * np.arange(L)[:, None]
    T = (L + m - 1) * bs
    owner = np.full((T, m), FROZEN, dtype=np.int64)
    bit = np.full((T, m), -1, dtype=np.int64)
    for l in range(L):
        owner[tuples[l], level - 1] = l
        bit[tuples[l], level - 1] = i - 1
    for a in (tuples, level, owner, bit):
        a.flags.writeable = False
    return CpcmLayout(m, N, L, tuples, level, owner, bit)


@dataclass
class CpcmFrame:
    layout: CpcmLayout
    tuples: np.ndarray  # (T, m) bits, column j-1 = v_j

    @property
    def frozen_mask(self) -> np.ndarray:
        return self.layout.owner == FROZEN


def cpcm_map(codewords, m: int, rng: np.random.Generator) -> CpcmFrame:
    """Place ``L`` codewords into ``T`` bit tuples.

    Every cell starts as a fair coin flip from ``rng``; cells that carry
    codeword bits are then overwritten.
    """
    codewords = np.asarray(codewords, dtype=np.int8)
    L, N = codewords.shape
    lay = cpcm_layout(m, N, L)
    tuples = rng.integers(0, 2, size=(lay.T, m), dtype=np.int8)
    tuples[lay.codeword_tuple, np.broadcast_to(lay.codeword_level - 1, (L, N))] = codewords
    return CpcmFrame(lay, tuples)


def cpcm_unmap(frame: CpcmFrame, l: int):
    """Cells ``(tuple, level)`` of codeword ``l`` in bit order, and the bits there."""
    lay = frame.layout
    t = lay.codeword_tuple[l]
    lev = lay.codeword_level
    return t, lev, frame.tuples[t, lev - 1]


def rate_cm(m: int, R, L: int) -> Fraction:
    """Information bits per symbol, ``m R L / (L + m - 1)``, as an exact fraction."""
    return Fraction(m) * Fraction(R) * L / (L + m - 1)


def frame_to_csv(frame: CpcmFrame, path) -> None:
    lay = frame.layout
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "N", "L"])
        w.writerow([lay.m, lay.N, lay.L])
        w.writerow(["t", "level", "bit", "owner", "bit_index"])
        for t in range(lay.T):
            for j in range(lay.m):
                w.writerow([t, j + 1, int(frame.tuples[t, j]), int(lay.owner[t, j]),
                            int(lay.bit_index[t, j])])


def frame_from_csv(path) -> CpcmFrame:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        m, N, L = (int(v) for v in next(r))
        next(r)
        lay = cpcm_layout(m, N, L)
        tuples = np.zeros((lay.T, m), dtype=np.int8)
        for t, j, b, owner, bi in r:
            t, j = int(t), int(j)
            if int(owner) != lay.owner[t, j - 1] or int(bi) != lay.bit_index[t, j - 1]:
                raise ValueError(f"provenance mismatch at tuple {t}, level {j}")
            tuples[t, j - 1] = int(b)
    return CpcmFrame(lay, tuples)


# ----------------------------------------------------------------- detectors

def crc_remainder(bits, poly: int, r: int) -> np.ndarray:
    """CRC-``r`` of a bit vector; ``poly`` omits the leading ``x^r`` term."""
    reg = 0
    top = 1 << (r - 1)
    mask = (1 << r) - 1
    for b in np.asarray(bits, dtype=np.int64):
        fb = ((reg & top) != 0) ^ int(b)
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly
    return ((reg >> np.arange(r - 1, -1, -1)) & 1).astype(np.int8)


@dataclass(frozen=True)
class Crc:
    r: int = 16
    poly: int = 0x1021

    def attach(self, payload) -> np.ndarray:
        payload = np.asarray(payload, dtype=np.int8)
        return np.concatenate([payload, crc_remainder(payload, self.poly, self.r)])

    def check(self, bits) -> bool:
        bits = np.asarray(bits, dtype=np.int8)
        return bool(np.array_equal(crc_remainder(bits[: -self.r], self.poly, self.r),
                                   bits[-self.r:]))


class GenieDetector:
    """Declares a codeword decoded iff ``u_hat`` equals the transmitted ``u``."""

    def __init__(self, true_u):
        self.true_u = np.asarray(true_u)

    def __call__(self, l: int, u_hat) -> bool:
        return bool(np.array_equal(u_hat, self.true_u[l]))


class CrcDetector:
    def __init__(self, code: PolarCode, crc: Crc):
        self.code = code
        self.crc = crc

    def __call__(self, l: int, u_hat) -> bool:
        return self.crc.check(np.asarray(u_hat)[self.code.info_positions])


# ------------------------------------------------------------------ decoding

class Status(enum.IntEnum):
    PENDING = 0
    OK = 1
    FAILED = 2


@dataclass
class CpcmDecodeState:
    status: np.ndarray
    attempts: np.ndarray
    idx_forward: Optional[int] = None
    idx_backward: Optional[int] = None
    trace: list = field(default_factory=list)  # (pass, codeword, ok)

    @property
    def failures(self) -> int:
        """Codewords still undecoded at the end."""
        return int(np.sum(self.status == Status.FAILED))

    @property
    def rejections(self) -> int:
        """Attempts the detector rejected, over all passes."""
        return sum(1 for _, _, ok in self.trace if not ok)


@dataclass
class CpcmDecodeResult:
    u_hat: np.ndarray  # (L, N); last attempt for failed codewords
    state: CpcmDecodeState


def cpcm_decode(received, code: PolarCode, const: Constellation, sigma: float,
                frozen_tuples, detector: Callable[[int, np.ndarray], bool], L: int,
                exact: bool = True) -> CpcmDecodeResult:
    """Bidirectional decoding of a CPCM frame.

    Every LLR is computed from its own symbol with the other levels of that
    symbol either known (frozen cells and cells of codewords already decoded
    successfully) or marginalized as noise (everything else, including cells
    of codewords whose decoding failed).

    1. Forward: codewords ``0, 1, ...`` until the detector rejects one; its
       index becomes ``idx_forward``.
    2. Backward: codewords ``L-1, L-2, ...`` down to ``idx_forward + 1``, then
       a second attempt at ``idx_forward`` which now knows its upper levels.
       A rejection stops the pass and sets ``idx_backward``.
    3. Middle: codewords ``idx_forward + 1 .. idx_backward``, each once, in
       forward order; successes feed the following codewords.  Finally
       ``idx_forward`` is tried again if what is known about its symbols
       changed since its last attempt.

    Only ``idx_forward`` and ``idx_backward`` are ever decoded more than once.

    ``frozen_tuples`` is a ``(T, m)`` array whose entries at frozen cells are
    the values the transmitter used there (other entries are ignored).
    """
    lay = cpcm_layout(const.m, code.N, L)
    y = np.asarray(received, dtype=float)
    if y.shape != (lay.T,):
        raise ValueError(f"expected {lay.T} received samples, got {y.shape}")
    known = lay.owner == FROZEN
    vals = np.where(known, np.asarray(frozen_tuples, dtype=np.int8), 0).astype(np.int8)
    lev = lay.codeword_level
    u_hat = np.zeros((L, code.N), dtype=np.int8)
    state = CpcmDecodeState(np.zeros(L, dtype=np.int8), np.zeros(L, dtype=np.int64))

    context = {}

    def attempt(l, name):
        t = lay.codeword_tuple[l]
        context[l] = known[t].copy()
        llr = demap(const, y[t], sigma, lev, known[t], vals[t])
        res = sc_decode(code, llr, exact=exact)
        ok = bool(detector(l, res.u_hat))
        state.attempts[l] += 1
        state.trace.append((name, l, ok))
        u_hat[l] = res.u_hat
        if ok:
            state.status[l] = Status.OK
            known[t, lev - 1] = True
            vals[t, lev - 1] = res.x_hat
        else:
            state.status[l] = Status.FAILED
        return ok

    for l in range(L):
        if not attempt(l, "forward"):
            state.idx_forward = l
            break
    if state.idx_forward is None:
        return CpcmDecodeResult(u_hat, state)

    f = state.idx_forward
    for l in range(L - 1, f, -1):
        if not attempt(l, "backward"):
            state.idx_backward = l
            break
    else:
        if f < L - 1 and not attempt(f, "backward"):
            state.idx_backward = f

    b = state.idx_backward
    if b is not None and b > f:
        for l in range(f + 1, b + 1):
            attempt(l, "middle")
        if state.status[f] == Status.FAILED and not np.array_equal(
                known[lay.codeword_tuple[f]], context[f]):
            attempt(f, "middle")
    assert state.idx_backward is None or state.idx_forward <= state.idx_backward
    return CpcmDecodeResult(u_hat, state)
