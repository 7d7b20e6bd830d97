"""Channel models, 2^m-PAM constellations and demappers.

Amplitudes are the odd integers ``-(2^m-1), ..., -1, 1, ..., 2^m-1`` scaled
to unit average energy.  Bit tuples are written ``(v_1, ..., v_m)`` and
stored as arrays whose column ``j-1`` holds ``v_j``.

Noise is real AWGN with variance ``sigma**2``, so for a unit-energy
constellation ``Es/N0 = 1 / (2 sigma^2)``.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

LOG2 = math.log(2.0)


class Labeling(str, enum.Enum):
    SET_PARTITION = "sp"
    GRAY = "gray"


class Principle(str, enum.Enum):
    MLC = "mlc"
    BICM = "bicm"


class ChannelKind(str, enum.Enum):
    BEC = "bec"
    BIAWGN = "biawgn"


@dataclass(frozen=True)
class ChannelSpec:
    """One binary-input channel: a BEC with erasure probability ``param`` or a
    bi-AWGN channel (BPSK, unit amplitude) with noise std ``param``."""

    kind: ChannelKind
    param: float

    def __post_init__(self):
        kind = ChannelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ChannelKind.BEC and not 0.0 <= self.param <= 1.0:
            raise ValueError(f"erasure probability out of range: {self.param}")
        if kind is ChannelKind.BIAWGN and not self.param > 0.0:
            raise ValueError(f"noise std must be positive: {self.param}")

    @classmethod
    def bec(cls, z):
        return cls(ChannelKind.BEC, float(z))

    @classmethod
    def biawgn(cls, sigma):
        return cls(ChannelKind.BIAWGN, float(sigma))

    @property
    def initial_llr_mean(self) -> float:
        if self.kind is not ChannelKind.BIAWGN:
            raise AttributeError("LLR mean is only defined for bi-AWGN channels")
        return 2.0 / self.param**2

    def capacity(self) -> float:
        if self.kind is ChannelKind.BEC:
            return bec_capacity(self.param)
        return biawgn_capacity(self.param)


@dataclass(frozen=True)
class Constellation:
    """Unit-energy 2^m-PAM with a bit labeling.

    ``labels[b]`` is the tuple ``(v_1, ..., v_m)`` of the ``b``-th point in
    ascending amplitude order.
    """

    m: int
    labeling: Labeling
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    energy_norm: float
    _index_of_label: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return 1 << self.m

    def point_index(self, tuples) -> np.ndarray:
        """Point indices for bit tuples of shape ``(..., m)``."""
        tuples = np.asarray(tuples, dtype=np.int64)
        key = (tuples << np.arange(self.m)).sum(axis=-1)
        return self._index_of_label[key]

    def modulate(self, tuples) -> np.ndarray:
        return self.points[self.point_index(tuples)]


@functools.lru_cache(maxsize=None)
def make_constellation(m: int, labeling="sp") -> Constellation:
    """Build a normalized 2^m-PAM constellation.

    Set partitioning is natural binary labeling with ``v_1`` as the least
    significant bit, so fixing ``v_1, ..., v_j`` leaves a subset whose minimum
    distance is ``2^j`` times the full-set distance.  Gray labeling uses the
    reflected binary code ``b ^ (b >> 1)`` of the point index with ``v_1``
    again the least significant bit.
    """
    labeling = Labeling(labeling)
    if not 1 <= m <= 6:
        raise ValueError(f"bits per symbol must be in 1..6, got {m}")
    M = 1 << m
    b = np.arange(M)
    raw = 2 * b - (M - 1)
    norm = 1.0 / math.sqrt(np.mean(raw.astype(float) ** 2))
    code = b if labeling is Labeling.SET_PARTITION else b ^ (b >> 1)
    labels = ((code[:, None] >> np.arange(m)) & 1).astype(np.int8)
    index_of = np.empty(M, dtype=np.int64)
    index_of[code] = b
    points = raw * norm
    for arr in (points, labels, index_of):
        arr.flags.writeable = False
    return Constellation(m, labeling, points, labels, norm, index_of)


@dataclass
class SymbolBlock:
    tuples: np.ndarray
    symbols: np.ndarray
    received: np.ndarray | None = None


def awgn_transmit(symbols, sigma: float, rng: np.random.Generator) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=float)
    return symbols + sigma * rng.standard_normal(symbols.shape)


def sigma_from_ebn0(ebn0_db: float, rate_cm: float) -> float:
    """Noise std for a unit-energy constellation carrying ``rate_cm`` bits/symbol."""
    return math.sqrt(1.0 / (2.0 * rate_cm * 10.0 ** (ebn0_db / 10.0)))


def ebn0_from_sigma(sigma: float, rate_cm: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate_cm * sigma**2))


# ---------------------------------------------------------------- demapping

def demap(const: Constellation, y, sigma: float, level, known_mask, known_values) -> np.ndarray:
    """Vectorized LLR of ``v_level`` given partial knowledge of the other bits.

    Parameters
    ----------
    y : array, shape (n,)
    level : int or array of shape (n,)
        1-based level per observation.
    known_mask, known_values : arrays of shape (n, m)
        Which levels are known and their values.  The entry for ``level``
        itself is ignored.  Unknown levels are marginalized with a uniform
        prior.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = y.size
    lvl = np.broadcast_to(np.asarray(level, dtype=np.int64) - 1, (n,))
    km = np.broadcast_to(np.asarray(known_mask, dtype=bool), (n, const.m)).copy()
    kv = np.broadcast_to(np.asarray(known_values, dtype=np.int8), (n, const.m))
    rows = np.arange(n)
    km[rows, lvl] = False
    labels = const.labels  # (M, m)
    clash = km[:, None, :] & (labels[None, :, :] != kv[:, None, :])
    allowed = ~clash.any(axis=2)  # (n, M)
    bit = labels[:, lvl].T  # (n, M)
    metric = -((y[:, None] - const.points[None, :]) ** 2) / (2.0 * sigma**2)
    neg = np.full_like(metric, -np.inf)
    num = logsumexp(np.where(allowed & (bit == 0), metric, neg), axis=1)
    den = logsumexp(np.where(allowed & (bit == 1), metric, neg), axis=1)
    return num - den


def llr_conditional(const: Constellation, y, sigma: float, level: int, known_bits=()) -> np.ndarray:
    """LLR of ``v_level`` when ``v_1..v_{level-1}`` are known (multistage style).

    Levels above ``level`` are marginalized.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    known_bits = np.asarray(known_bits, dtype=np.int8)
    if known_bits.shape[-1:] != (level - 1,) and not (level == 1 and known_bits.size == 0):
        raise ValueError("known_bits must fix exactly the levels below `level`")
    mask = np.zeros((y.size, const.m), dtype=bool)
    vals = np.zeros((y.size, const.m), dtype=np.int8)
    mask[:, : level - 1] = True
    if level > 1:
        vals[:, : level - 1] = known_bits
    return demap(const, y, sigma, level, mask, vals)


def llr_marginalized(const: Constellation, y, sigma: float, level: int, known=None) -> np.ndarray:
    """LLR of ``v_level`` treating every level not in ``known`` as noise.

    ``known`` maps 1-based level to a bit (scalar or per-observation array).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mask = np.zeros((y.size, const.m), dtype=bool)
    vals = np.zeros((y.size, const.m), dtype=np.int8)
    for lev, v in (known or {}).items():
        if lev == level:
            raise ValueError("the decoded level cannot be known")
        mask[:, lev - 1] = True
        vals[:, lev - 1] = v
    return demap(const, y, sigma, level, mask, vals)


# --------------------------------------------------------------- capacities

@functools.lru_cache(maxsize=None)
def _hermgauss(nodes: int):
    t, w = np.polynomial.hermite.hermgauss(nodes)
    return t * math.sqrt(2.0), w / math.sqrt(math.pi)


def _expected_log_ratio(const, sigma, num_sets, den_sets, nodes, monte_carlo, rng):
    """E[log2 (mean_{num} p(y|s) / mean_{den} p(y|s))] for uniform transmitted points.

    ``num_sets``/``den_sets`` are (M, M) boolean matrices: row ``i`` selects
    the points averaged when point ``i`` was sent.
    """
    M = const.M
    if monte_carlo:
        rng = rng if rng is not None else np.random.default_rng(0)
        samples = max(1, monte_carlo // M)
        noise = rng.standard_normal(samples)
        weights = np.full(samples, 1.0 / samples)
    else:
        noise, weights = _hermgauss(nodes)
    y = const.points[:, None] + sigma * noise[None, :]  # (M, K)
    metric = -((y[:, :, None] - const.points[None, None, :]) ** 2) / (2.0 * sigma**2)
    neg = -np.inf

    def lse(sets):
        masked = np.where(sets[:, None, :], metric, neg)
        return logsumexp(masked, axis=2) - np.log(sets.sum(axis=1))[:, None]

    ratio = lse(num_sets) - lse(den_sets)  # (M, K)
    return float(np.mean(ratio @ weights) / LOG2)


def _level_sets(const, level, principle):
    lab = const.labels
    j = level - 1
    if principle is Principle.MLC:
        num = (lab[:, None, : j + 1] == lab[None, :, : j + 1]).all(axis=2)
        den = (lab[:, None, :j] == lab[None, :, :j]).all(axis=2)
    else:
        num = lab[:, None, j] == lab[None, :, j]
        den = np.ones((const.M, const.M), dtype=bool)
    return num, den


def bit_level_capacity(const: Constellation, sigma: float, level: int, principle="mlc",
                       nodes: int = 64, monte_carlo: int = 0, rng=None) -> float:
    """Capacity of bit level ``level`` in bits per channel use.

    ``principle="mlc"`` gives ``I(V_j; Y | V_1..V_{j-1})`` and ``"bicm"``
    gives ``I(V_j; Y)``.  Gauss-Hermite quadrature over the noise by default;
    ``monte_carlo=n`` switches to an ``n``-sample estimate.
    """
    principle = Principle(principle)
    if not 1 <= level <= const.m:
        raise ValueError(f"level must be in 1..{const.m}")
    num, den = _level_sets(const, level, principle)
    return _expected_log_ratio(const, sigma, num, den, nodes, monte_carlo, rng)


def bit_level_capacities(const: Constellation, sigma: float, principle="mlc", **kw) -> np.ndarray:
    return np.array([bit_level_capacity(const, sigma, j, principle, **kw)
                     for j in range(1, const.m + 1)])


def constellation_capacity(const: Constellation, sigma: float, nodes: int = 64,
                           monte_carlo: int = 0, rng=None) -> float:
    """``I(S; Y)`` for uniformly used points; independent of the labeling."""
    M = const.M
    num = np.eye(M, dtype=bool)
    den = np.ones((M, M), dtype=bool)
    return _expected_log_ratio(const, sigma, num, den, nodes, monte_carlo, rng)


def bec_capacity(z: float) -> float:
    return 1.0 - z


def biawgn_capacity(sigma: float, nodes: int = 64) -> float:
    return constellation_capacity(make_constellation(1), sigma, nodes)


def biawgn_sigma_for_capacity(capacity: float, tol: float = 1e-9) -> float:
    """Noise std of the bi-AWGN channel with the given capacity (bisection in log sigma)."""
    if not 0.0 < capacity < 1.0:
        raise ValueError(f"capacity must lie in (0, 1), got {capacity}")
    lo, hi = math.log(1e-2), math.log(1e4)  # capacity(lo) ~ 1, capacity(hi) ~ 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        c = biawgn_capacity(math.exp(mid))
        if abs(c - capacity) < tol * 0.1:
            return math.exp(mid)
        if c > capacity:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def frozen_value_indifference_check(const: Constellation, level: int, sigma: float,
                                    rng: np.random.Generator, n_samples: int = 2000,
                                    atol: float = 1e-9) -> bool:
    """Check that ``|LLR|`` at ``level`` does not depend on the lower-level values.

    For every assignment of ``v_1..v_{level-1}`` the same noise samples and
    the same upper bits are used, the lower bits are treated as known, and
    the resulting ``|LLR|`` arrays are compared pairwise.  Holds for set
    partitioning, where every lower-level coset is a translate of the others.
    """
    m = const.m
    if level < 2:
        return True
    noise = sigma * rng.standard_normal(n_samples)
    upper = rng.integers(0, 2, size=(n_samples, m - level + 1))
    ref = None
    for low in range(1 << (level - 1)):
        low_bits = (low >> np.arange(level - 1)) & 1
        tuples = np.concatenate([np.broadcast_to(low_bits, (n_samples, level - 1)), upper], axis=1)
        y = const.modulate(tuples) + noise
        mag = np.abs(llr_conditional(const, y, sigma, level,
                                     np.broadcast_to(low_bits, (n_samples, level - 1))))
        if ref is None:
            ref = mag
        elif not np.allclose(mag, ref, rtol=0.0, atol=atol):
            return False
    return True
