"""Multi-level coding and bit-interleaved coded modulation with polar codes.

Both schemes transmit ``N`` code bits in ``N/m`` symbols.  MLC uses ``m``
component codes of length ``N/m`` (one per level, set-partition labeling)
decoded in level order 1..m.  BICM uses one length-``N`` code whose bit
``i`` rides on level ``(i mod m) + 1`` of symbol ``i // m`` (0-based), Gray
labeling, and demaps every level without conditioning.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import Constellation, demap
from .construction import (
    Metric,
    ReliabilityProfile,
    ga_evolve,
    ga_evolve_leaves,
    select_info_set,
    surrogate_means_from_pam,
)
from .interleave import interleaver2
from .polar import PolarCode, polar_transform, sc_decode, sc_decode_genie


@dataclass(frozen=True)
class MlcScheme:
    const: Constellation
    codes: tuple  # one PolarCode per level

    @property
    def N(self) -> int:
        return sum(c.N for c in self.codes)

    @property
    def K(self) -> int:
        return sum(c.K for c in self.codes)

    @property
    def level_K(self) -> list[int]:
        return [c.K for c in self.codes]


@dataclass(frozen=True)
class BicmScheme:
    const: Constellation
    code: PolarCode

    @property
    def N(self) -> int:
        return self.code.N

    @property
    def K(self) -> int:
        return self.code.K


def mlc_rate_allocate(const: Constellation, sigma: float, N: int, K: int) -> MlcScheme:
    """Choose the ``K`` best bit-channels across all levels.

    Each level's length-``N/m`` code is evaluated by GA on the bi-AWGN
    surrogate of its MLC bit-level capacity; the per-level channels are laid
    end to end in level order and the ``K`` largest LLR means win (ties to the
    earlier level, then the lower index).
    """
    m = const.m
    if N % m:
        raise ValueError(f"m={m} must divide N={N}")
    n_level = N // m
    means = surrogate_means_from_pam(const, sigma, "mlc")
    profile = np.concatenate([ga_evolve_leaves(np.full(n_level, mu)) for mu in means])
    chosen = select_info_set(ReliabilityProfile(profile, Metric.LLR_MEAN), K)
    codes = []
    for j in range(m):
        local = chosen[(chosen >= j * n_level) & (chosen < (j + 1) * n_level)] - j * n_level
        codes.append(PolarCode.from_info_set(n_level, local))
    return MlcScheme(const, tuple(codes))


def bicm_construct(const: Constellation, sigma: float, N: int, K: int) -> BicmScheme:
    """One polar code built by GA over the BICM bit-level surrogates, interleaver-2."""
    means = surrogate_means_from_pam(const, sigma, "bicm")
    profile = ga_evolve(interleaver2(N, const.m), means)
    return BicmScheme(const, PolarCode.from_info_set(N, select_info_set(profile, K)))


def mlc_transmit_decode(scheme: MlcScheme, info, sigma: float, noise, genie: bool = True,
                        exact: bool = True):
    """Send a batch of MLC frames and decode them by multistage decoding.

    Parameters
    ----------
    info : list of arrays
        Per level, a ``(B, K_j)`` array of information bits.
    noise : array, shape (B, N/m)
        Standard normal samples (scaled by ``sigma`` here).
    genie : bool
        Condition level ``j`` on the true lower-level bits instead of the
        decoded ones.

    Returns
    -------
    level_errors : bool array, shape (B, m)
    """
    const = scheme.const
    m = const.m
    B = noise.shape[0]
    n_level = scheme.codes[0].N
    u_true = [c.place(b) for c, b in zip(scheme.codes, info)]
    x_true = np.stack([polar_transform(u) for u in u_true], axis=-1)  # (B, n_level, m)
    y = const.modulate(x_true) + sigma * noise
    known = np.zeros((B, n_level, m), dtype=bool)
    vals = np.zeros((B, n_level, m), dtype=np.int8)
    errors = np.zeros((B, m), dtype=bool)
    for j in range(m):
        llr = demap(const, y.ravel(), sigma, j + 1, known.reshape(-1, m), vals.reshape(-1, m))
        res = sc_decode(scheme.codes[j], llr.reshape(B, n_level), exact=exact)
        errors[:, j] = (res.u_hat != u_true[j]).any(axis=1)
        known[:, :, j] = True
        vals[:, :, j] = x_true[:, :, j] if genie else res.x_hat
    return errors


def bicm_transmit_decode(scheme: BicmScheme, info, sigma: float, noise, genie: bool = True,
                         exact: bool = True):
    """Send a batch of BICM frames; returns the per-frame block-error flags.

    ``genie`` only changes how the block error is scored (first-error event
    of genie-aided SC), which coincides with plain SC failure.
    """
    const = scheme.const
    m = const.m
    B = noise.shape[0]
    code = scheme.code
    u = code.place(info)
    x = polar_transform(u)
    tuples = x.reshape(B, code.N // m, m)
    y = const.modulate(tuples) + sigma * noise
    levels = np.tile(np.arange(1, m + 1), B * (code.N // m))
    llr = demap(const, np.repeat(y, m, axis=-1).ravel(), sigma, levels,
                np.zeros((B * code.N, m), dtype=bool), np.zeros((B * code.N, m), dtype=np.int8))
    llr = llr.reshape(B, code.N)
    if genie:
        return np.asarray(sc_decode_genie(code, llr, u, exact=exact).block_error)
    return (sc_decode(code, llr, exact=exact).u_hat != u).any(axis=1)
