"""Binary polar codes: encoding and successive cancellation decoding.

The generator matrix is ``G_N = B_N F^{(x)n}`` with
``F = [[1, 0], [1, 1]]`` and ``B_N`` the bit-reversal permutation.  With
this convention the first polarization stage on the channel side combines
adjacent code bits ``(x_{2k}, x_{2k+1})``, which is what the channel
assignments in :mod:`polarcm.interleave` are written against.  Synthesized
bits ``u`` are decoded in natural index order.

LLRs use the convention ``ln P(bit=0) / P(bit=1)``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

#: Stand-in for an infinite LLR magnitude.
LLR_INF = 300.0


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@functools.lru_cache(maxsize=None)
def bit_reversal(N: int) -> np.ndarray:
    """Bit-reversal permutation of ``range(N)`` (read-only, cached)."""
    n = N.bit_length() - 1
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.flags.writeable = False
    return rev


@dataclass(frozen=True)
class PolarCode:
    """A polar code of length ``N = 2**n``.

    Parameters
    ----------
    frozen_mask : array of bool
        ``True`` at frozen synthesized positions.
    frozen_values : array of int, optional
        Values of the frozen bits; entries at unfrozen positions are ignored.
        Defaults to all zeros.
    """

    frozen_mask: np.ndarray
    frozen_values: Optional[np.ndarray] = None
    info_positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mask = np.asarray(self.frozen_mask, dtype=bool).copy()
        if not is_power_of_two(mask.size):
            raise ValueError(f"block length must be a power of two, got {mask.size}")
        if self.frozen_values is None:
            fv = np.zeros(mask.size, dtype=np.int8)
        else:
            fv = np.asarray(self.frozen_values, dtype=np.int8).copy()
            if fv.shape != mask.shape:
                raise ValueError("frozen_values must have the same length as frozen_mask")
        fv[~mask] = 0
        mask.flags.writeable = False
        fv.flags.writeable = False
        info = np.flatnonzero(~mask)
        info.flags.writeable = False
        object.__setattr__(self, "frozen_mask", mask)
        object.__setattr__(self, "frozen_values", fv)
        object.__setattr__(self, "info_positions", info)

    @classmethod
    def from_info_set(cls, N: int, info_set, frozen_values=None) -> "PolarCode":
        mask = np.ones(N, dtype=bool)
        mask[np.asarray(list(info_set), dtype=np.int64)] = False
        return cls(mask, frozen_values)

    @property
    def N(self) -> int:
        return self.frozen_mask.size

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def K(self) -> int:
        return self.info_positions.size

    @property
    def rate(self) -> float:
        return self.K / self.N

    def place(self, info_bits) -> np.ndarray:
        """Build ``u`` from info bits (ascending index order) and frozen values."""
        info_bits = np.asarray(info_bits, dtype=np.int8)
        if info_bits.shape[-1] != self.K:
            raise ValueError(f"expected {self.K} info bits, got {info_bits.shape[-1]}")
        u = np.broadcast_to(self.frozen_values, info_bits.shape[:-1] + (self.N,)).copy()
        u[..., self.info_positions] = info_bits
        return u


def polar_transform(u) -> np.ndarray:
    """Return ``u G_N`` over GF(2); works on the last axis of a batch."""
    x = np.array(u, dtype=np.int8, copy=True)
    N = x.shape[-1]
    if not is_power_of_two(N):
        raise ValueError(f"length must be a power of two, got {N}")
    lead = x.shape[:-1]
    h = N // 2
    while h >= 1:
        v = x.reshape(lead + (-1, 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h //= 2
    return x[..., bit_reversal(N)]


def polar_encode(code: PolarCode, info_bits) -> np.ndarray:
    return polar_transform(code.place(info_bits))


@numba.njit(cache=True, inline="always")
def _f(a, b, exact):
    s = 1.0
    if (a < 0.0) != (b < 0.0):
        s = -1.0
    m = min(abs(a), abs(b))
    if not exact:
        return s * m
    return s * m + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


@numba.njit(cache=True)
def _sc_core(llr, frozen, fvals, exact, genie, true_u, u_out, x_out):
    """SC over a natural-order transform.  Returns the first genie error index or -1."""
    N = llr.size
    n = 0
    while (1 << n) < N:
        n += 1
    alpha = np.empty(2 * N)
    beta = np.zeros(2 * N, dtype=np.int8)
    xa = np.empty(N, dtype=np.int8)
    xb = np.empty(N, dtype=np.int8)
    for k in range(N):
        alpha[N + k] = min(max(llr[k], -LLR_INF), LLR_INF)
    first_err = -1
    for i in range(N):
        if i == 0:
            d = 0
        else:
            t = 0
            while ((i >> t) & 1) == 0:
                t += 1
            d = n - 1 - t
            h = 1 << t
            for k in range(h):
                a = alpha[2 * h + k]
                b = alpha[3 * h + k]
                if beta[h + k]:
                    alpha[h + k] = b - a
                else:
                    alpha[h + k] = b + a
            d += 1
        while d < n:
            h = N >> (d + 1)
            for k in range(h):
                alpha[h + k] = _f(alpha[2 * h + k], alpha[3 * h + k], exact)
            d += 1
        if frozen[i]:
            bit = fvals[i]
        else:
            bit = 0 if alpha[1] >= 0.0 else 1
            if genie and bit != true_u[i]:
                if first_err < 0:
                    first_err = i
                bit = true_u[i]
        u_out[i] = bit
        # propagate partial sums upward
        xa[0] = bit
        xlen = 1
        d = n
        while d > 0:
            if ((i >> (n - d)) & 1) == 0:
                for k in range(xlen):
                    beta[xlen + k] = xa[k]
                break
            for k in range(xlen):
                xb[k] = beta[xlen + k] ^ xa[k]
                xb[xlen + k] = xa[k]
            for k in range(2 * xlen):
                xa[k] = xb[k]
            xlen *= 2
            d -= 1
    for k in range(N):
        x_out[k] = xa[k]
    return first_err


@numba.njit(cache=True)
def _sc_batch(llrs, frozen, fvals, exact, genie, true_u, u_out, x_out, first_err):
    for r in range(llrs.shape[0]):
        first_err[r] = _sc_core(llrs[r], frozen, fvals, exact, genie, true_u[r],
                                u_out[r], x_out[r])


@dataclass
class DecodeResult:
    """Outcome of one SC decode.  ``x_hat`` is always ``u_hat G_N``."""

    u_hat: np.ndarray
    x_hat: np.ndarray
    first_error_index: Optional[int] = None
    block_error: Optional[bool] = None


def _run_sc(code, llrs, true_u, genie, exact):
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != code.N:
        raise ValueError(f"expected {code.N} LLRs, got {llrs.shape[-1]}")
    rev = bit_reversal(code.N)
    batch = np.ascontiguousarray(llrs.reshape(-1, code.N)[:, rev])
    rows = batch.shape[0]
    if true_u is None:
        tu = np.zeros((rows, code.N), dtype=np.int8)
    else:
        tu = np.ascontiguousarray(np.asarray(true_u, dtype=np.int8).reshape(rows, code.N))
    u = np.empty((rows, code.N), dtype=np.int8)
    x = np.empty((rows, code.N), dtype=np.int8)
    ferr = np.empty(rows, dtype=np.int64)
    _sc_batch(batch, code.frozen_mask, code.frozen_values, exact, genie, tu, u, x, ferr)
    shape = llrs.shape
    return u.reshape(shape), x[:, rev].reshape(shape), ferr.reshape(shape[:-1])


def sc_decode(code: PolarCode, llrs, exact: bool = True) -> DecodeResult:
    """Successive cancellation decoding.

    ``exact=False`` switches the check-node combine to min-sum.  Ties
    (LLR exactly 0) decide 0.  ``llrs`` may carry leading batch axes, in
    which case the result arrays do too.
    """
    u, x, _ = _run_sc(code, llrs, None, False, exact)
    return DecodeResult(u, x)


def sc_decode_genie(code: PolarCode, llrs, true_u, exact: bool = True) -> DecodeResult:
    """Genie-aided SC: wrong decisions are recorded, then replaced by the truth.

    Only the first error of each block is reported, so ``block_error`` is
    exactly the event that plain SC fails on the same LLRs.
    """
    u, x, ferr = _run_sc(code, llrs, true_u, True, exact)
    if ferr.ndim == 0:
        fe = int(ferr)
        return DecodeResult(u, x, None if fe < 0 else fe, fe >= 0)
    return DecodeResult(u, x, ferr, ferr >= 0)


def bpsk_llr(y, sigma: float) -> np.ndarray:
    """LLRs of bits sent as ``1 - 2x`` over real AWGN with std ``sigma``."""
    return 2.0 * np.asarray(y) / sigma**2
