"""Reliability of synthesized bit-channels over heterogeneous channels.

Leaf values are given per code position (use
:meth:`ChannelAssignment.leaf_values` to spread per-type values).  Both
recursions follow the structure of the SC decoder in :mod:`polarcm.polar`.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import ndtr

from .channels import (
    Constellation,
    Principle,
    bit_level_capacities,
    biawgn_sigma_for_capacity,
)
from .interleave import ChannelAssignment
from .polar import PolarCode, bit_reversal

#: LLR mean used for a (numerically) noiseless channel.
MAX_LLR_MEAN = 1000.0
CAPACITY_EPS = 1e-9


class Metric(str, enum.Enum):
    BHATTACHARYYA = "z"
    LLR_MEAN = "llr_mean"
    ERROR_PROB = "pe"


@dataclass(frozen=True)
class ReliabilityProfile:
    per_position: np.ndarray
    metric: Metric
    assignment: ChannelAssignment | None = None
    source: tuple | None = None

    @property
    def N(self) -> int:
        return self.per_position.size

    def error_metric(self) -> np.ndarray:
        """Per-position quantity summed by the union bound (Z or P_e)."""
        if self.metric is Metric.LLR_MEAN:
            return error_prob_from_mean(self.per_position)
        return self.per_position


def _evolve(leaves, minus, plus):
    v = np.asarray(leaves, dtype=float)[bit_reversal(len(leaves))].copy()
    N = v.size
    h = N // 2
    while h >= 1:
        w = v.reshape(-1, 2, h)
        a = w[:, 0, :].copy()
        b = w[:, 1, :].copy()
        w[:, 0, :] = minus(a, b)
        w[:, 1, :] = plus(a, b)
        h //= 2
    return v


def bec_evolve_leaves(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    return _evolve(z, lambda a, b: a + b - a * b, lambda a, b: a * b)


def bec_evolve(assignment: ChannelAssignment, z_per_type) -> ReliabilityProfile:
    """Exact Bhattacharyya parameters of all synthesized channels for BECs."""
    z = bec_evolve_leaves(assignment.leaf_values(z_per_type))
    return ReliabilityProfile(z, Metric.BHATTACHARYYA, assignment, tuple(np.ravel(z_per_type)))


# ------------------------------------------------------------- Gaussian approx.

_A, _B, _C = 0.4527, 0.86, 0.0218
#: Where the fit switches to its large-argument form.
PHI_SWITCH = 10.0
_LOG_PHI_SWITCH = -_A * PHI_SWITCH**_B + _C
#: Below this argument log(phi) is the chord from (0, 0) to the fit.
PHI_KNEE = 0.1
_LOG_PHI_KNEE = -_A * PHI_KNEE**_B + _C


def log_phi(x) -> np.ndarray:
    """Logarithm of the standard GA fit of phi(x) = 1 - E[tanh(L/2)].

    The small-argument fit exceeds 1 for ``x`` below about 0.03, so on
    ``[0, 0.1]`` it is replaced by the straight line (in ``log phi``) from
    ``phi(0) = 1`` to the fit at 0.1.  The large-argument form starts above
    the small-argument one at 10, so it is capped there (flat until about
    10.08).  Both changes keep phi continuous and non-increasing, which is
    what makes the recursion monotone in its inputs.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    knee = (x > 0) & (x < PHI_KNEE)
    small = (x >= PHI_KNEE) & (x < PHI_SWITCH)
    large = x >= PHI_SWITCH
    out[knee] = x[knee] * (_LOG_PHI_KNEE / PHI_KNEE)
    out[small] = -_A * x[small] ** _B + _C
    xl = x[large]
    out[large] = np.minimum(
        0.5 * np.log(np.pi / xl) - xl / 4.0 + np.log1p(-10.0 / (7.0 * xl)), _LOG_PHI_SWITCH)
    return out


def phi(x) -> np.ndarray:
    return np.exp(log_phi(x))


def phi_inverse_log(log_y, tol: float = 1e-10) -> np.ndarray:
    """Invert :func:`log_phi`.

    Each branch of the fit is inverted on its own: the chord near 0 and the
    small-argument fit in closed form, the large-argument one by bisection on ``[10, inf)``.  The
    flat piece just above 10 is never returned: its value maps to 10.
    ``log_y >= 0`` maps to 0.
    """
    ly = np.minimum(np.asarray(log_y, dtype=float), 0.0)
    out = np.zeros_like(ly)
    knee = ly > _LOG_PHI_KNEE
    out[knee] = ly[knee] * (PHI_KNEE / _LOG_PHI_KNEE)
    small = ~knee & (ly >= _LOG_PHI_SWITCH)
    out[small] = ((_C - ly[small]) / _A) ** (1.0 / _B)
    large = ly < _LOG_PHI_SWITCH
    if np.any(large):
        t = ly[large]
        lo = np.full_like(t, PHI_SWITCH)
        hi = np.maximum(20.0, -4.0 * t + 40.0)
        iters = int(math.ceil(math.log2(hi.max() / tol))) + 1
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            above = log_phi(mid) > t
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[large] = 0.5 * (lo + hi)
    return out


def phi_inverse(y, tol: float = 1e-10) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return phi_inverse_log(np.log(np.asarray(y, dtype=float)), tol)


def ga_check_node(ma, mb) -> np.ndarray:
    """Mean at the degraded output: phi^-1(1 - (1 - phi(ma)) (1 - phi(mb))).

    Evaluated in the log domain so means in the thousands do not underflow.
    """
    la, lb = log_phi(ma), log_phi(mb)
    s = np.logaddexp(la, lb)
    ly = s + np.log1p(-np.exp(la + lb - s))
    return phi_inverse_log(ly)


def ga_variable_node(ma, mb) -> np.ndarray:
    return np.asarray(ma, dtype=float) + np.asarray(mb, dtype=float)


def ga_evolve_leaves(means) -> np.ndarray:
    means = np.asarray(means, dtype=float)
    if np.any(means < 0):
        raise ValueError("LLR means must be non-negative")
    return _evolve(means, ga_check_node, ga_variable_node)


def ga_evolve(assignment: ChannelAssignment, means_per_type) -> ReliabilityProfile:
    """Gaussian-approximation density evolution with per-type initial LLR means."""
    mu = ga_evolve_leaves(assignment.leaf_values(means_per_type))
    return ReliabilityProfile(mu, Metric.LLR_MEAN, assignment, tuple(np.ravel(means_per_type)))


def error_prob_from_mean(llr_mean) -> np.ndarray:
    """``Q(sqrt(mean / 2))``: error probability of a consistent Gaussian LLR."""
    mu = np.asarray(llr_mean, dtype=float)
    return ndtr(-np.sqrt(mu / 2.0))


# ----------------------------------------------------------- info sets, bounds

def select_info_set(profile: ReliabilityProfile, K: int, exclude=()) -> np.ndarray:
    """Indices (ascending) of the ``K`` most reliable positions.

    Ties go to the lower index.  Positions in ``exclude`` are never chosen.
    """
    N = profile.N
    if not 0 <= K <= N - len(exclude):
        raise ValueError(f"K={K} out of range")
    if profile.metric is Metric.LLR_MEAN:
        key = -profile.per_position
    else:
        key = np.asarray(profile.per_position, dtype=float).copy()
    key = key.astype(float)
    key[np.asarray(exclude, dtype=np.int64)] = np.inf
    order = np.argsort(key, kind="stable")
    return np.sort(order[:K])


def union_bound(profile: ReliabilityProfile, info_set) -> float:
    info_set = np.asarray(info_set, dtype=np.int64)
    return float(np.sum(profile.error_metric()[info_set]))


def code_from_profile(profile: ReliabilityProfile, K: int, exclude=()) -> PolarCode:
    return PolarCode.from_info_set(profile.N, select_info_set(profile, K, exclude))


# ------------------------------------------------------------ PAM surrogates

def mean_for_capacity(capacity: float) -> float:
    """Initial LLR mean ``2/sigma^2`` of the bi-AWGN channel with this capacity."""
    if capacity >= 1.0 - CAPACITY_EPS:
        return MAX_LLR_MEAN
    if capacity <= CAPACITY_EPS:
        return 0.0
    sigma = biawgn_sigma_for_capacity(capacity)
    return min(2.0 / sigma**2, MAX_LLR_MEAN)


def surrogate_means_from_pam(const: Constellation, sigma: float, principle="mlc") -> np.ndarray:
    """Per-level bi-AWGN LLR means with the same capacities as the PAM bit levels."""
    caps = bit_level_capacities(const, sigma, Principle(principle))
    return np.array([mean_for_capacity(c) for c in caps])


# ------------------------------------------------------------------ Table I

def table1_instances() -> list[tuple[float, float, float, float]]:
    """The twenty four-channel capacity vectors (each summing to 2.8)."""
    text = resources.files("polarcm").joinpath("data/table1.csv").read_text()
    rows = csv.DictReader(text.splitlines())
    return [tuple(float(r[f"I_W{k}"]) for k in range(1, 5)) for r in rows]
