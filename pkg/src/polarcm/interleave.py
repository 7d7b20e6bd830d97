"""Assignments of code-bit positions to channel types.

An assignment is a length-N vector of 1-based channel-type indices.  With
the encoder in :mod:`polarcm.polar`, positions ``2k`` and ``2k+1`` (0-based)
are combined by the first polarization stage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelAssignment:
    assignment: np.ndarray
    m: int
    kind: str
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64).copy()
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    @property
    def N(self) -> int:
        return self.assignment.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment - 1, minlength=self.m)

    def is_balanced(self) -> bool:
        return bool(np.all(self.counts() == self.N // self.m)) and self.N % self.m == 0

    def leaf_values(self, per_type) -> np.ndarray:
        """Spread one value per channel type over the code positions."""
        per_type = np.asarray(per_type, dtype=float)
        if per_type.size != self.m:
            raise ValueError(f"need {self.m} per-type values, got {per_type.size}")
        return per_type[self.assignment - 1]


def _check(N, m):
    if m < 1:
        raise ValueError("m must be positive")
    if N % m:
        raise ValueError(f"m={m} does not divide N={N}; shorten the code first")


def interleaver2(N: int, m: int) -> ChannelAssignment:
    """Cyclic assignment: position ``i`` (1-based) gets type ``((i-1) mod m) + 1``."""
    _check(N, m)
    return ChannelAssignment(np.arange(N) % m + 1, m, "interleaver2")


def interleaver1(N: int, m: int) -> ChannelAssignment:
    """Contiguous blocks of ``N/m`` positions per type."""
    _check(N, m)
    return ChannelAssignment(np.repeat(np.arange(1, m + 1), N // m), m, "interleaver1")


def random_interleaver(N: int, m: int, seed: int) -> ChannelAssignment:
    """Uniformly random balanced assignment (a shuffle of the type multiset)."""
    _check(N, m)
    rng = np.random.default_rng(seed)
    a = np.repeat(np.arange(1, m + 1), N // m)
    rng.shuffle(a)
    return ChannelAssignment(a, m, "random", seed)


def all_balanced_assignments(N: int, m: int = 2):
    """Every balanced assignment for two channel types (exhaustive, small N only)."""
    from itertools import combinations

    if m != 2:
        raise NotImplementedError("exhaustive enumeration is only provided for m=2")
    for ones in combinations(range(N), N // 2):
        a = np.full(N, 2)
        a[list(ones)] = 1
        yield ChannelAssignment(a, 2, "exhaustive")


def stage1_even_bhattacharyya_sum(assignment: ChannelAssignment, z) -> float:
    """Sum of the upgraded (even-indexed) Bhattacharyya parameters after the
    first polarization stage, for BEC erasure probabilities ``z`` per type."""
    leaf = assignment.leaf_values(z)
    return float(np.sum(leaf[0::2] * leaf[1::2]))


@dataclass(frozen=True)
class Shortening:
    N: int
    N_s: int
    shortened: np.ndarray  # 0-based code positions forced to zero
    frozen: np.ndarray  # 0-based synthesized positions that must be frozen to zero


def shorten(N: int, m: int) -> Shortening:
    """Shorten a length-``N`` code to ``N_s = m * floor(N / m)``.

    The last ``N - N_s`` code positions are shortened: they always carry 0
    and the decoder feeds them an infinite LLR.  With the bit-reversed
    generator this is guaranteed by freezing (to 0) the synthesized positions
    at the bit-reversed images of the shortened positions.
    """
    from .polar import bit_reversal

    N_s = m * (N // m)
    shortened = np.arange(N_s, N)
    frozen = np.sort(bit_reversal(N)[shortened])
    return Shortening(N, N_s, shortened, frozen)
