"""Monte Carlo campaigns and bound sweeps.

Every frame draws its randomness from ``numpy.random.default_rng([seed,
frame_index])``.  Frames are processed in fixed batches and the stopping
rule is checked after each batch in index order, so results do not depend on
the number of worker processes.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import baselines
from .channels import make_constellation, sigma_from_ebn0
from .construction import (
    bec_evolve_leaves,
    code_from_profile,
    ga_evolve,
    ga_evolve_leaves,
    mean_for_capacity,
    select_info_set,
    surrogate_means_from_pam,
    union_bound,
    ReliabilityProfile,
    Metric,
    MAX_LLR_MEAN,
)
from .cpcm import Crc, CrcDetector, GenieDetector, cpcm_decode, cpcm_map, rate_cm
from .interleave import interleaver1, interleaver2, random_interleaver, shorten
from .polar import PolarCode, is_power_of_two, polar_transform

log = logging.getLogger(__name__)

STANDARD_RATES = tuple(Fraction(k, 8) for k in range(1, 8))
SCHEMES = ("cpcm", "mlc", "bicm")
DEFAULT_LABELING = {"cpcm": "sp", "mlc": "sp", "bicm": "gray"}


@dataclass
class SimConfig:
    scheme: str = "cpcm"
    m: int = 2
    N: int = 128
    L: int = 10
    rate_set: tuple = STANDARD_RATES
    ebn0_grid_db: tuple = (2.0, 3.0, 4.0, 5.0, 6.0)
    bler_target: float = 1e-2
    max_frames: int = 100_000
    max_errors: int = 100
    seed: int = 1
    labeling: Optional[str] = None
    detector: str = "genie"
    crc_r: int = 16
    crc_poly: int = 0x1021
    exact: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.labeling is None:
            self.labeling = DEFAULT_LABELING[self.scheme]
        if self.detector not in ("genie", "crc"):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.m < 1 or self.L < 1:
            raise ValueError("m and L must be positive")
        if not is_power_of_two(self.N):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if self.N % self.m:
            raise ValueError(f"m={self.m} must divide N={self.N}")
        if not self.rate_set or not self.ebn0_grid_db:
            raise ValueError("rate set and Eb/N0 grid must be non-empty")
        self.rate_set = tuple(Fraction(r).limit_denominator(1 << 20) for r in self.rate_set)
        if any(not 0 < r < 1 for r in self.rate_set):
            raise ValueError("rates must lie in (0, 1)")
        if self.max_frames < 1:
            raise ValueError("max_frames must be positive")
        if self.max_errors < 20:
            raise ValueError("max_errors below 20 gives unusable BLER estimates")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


#: Named presets.  ``paper`` is the full-scale setting and is not meant for CI.
PROFILES = {
    "desk": dict(N=128, L=10, bler_target=1e-2, max_errors=100, max_frames=200_000),
    "paper": dict(N=512, L=100, bler_target=1e-5, max_errors=100, max_frames=10**9),
}


def config_for_profile(profile: str, **overrides) -> SimConfig:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    return SimConfig(**{**PROFILES[profile], **overrides})


def frame_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval; the ends are exactly 0 or 1 when all trials agree."""
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


# --------------------------------------------------------------------- links

def k_for_rate(N: int, R) -> int:
    return int(round(Fraction(R) * N))


def scheme_rate_cm(config: SimConfig, K: int) -> Fraction:
    R = Fraction(K, config.N)
    if config.scheme == "cpcm":
        return rate_cm(config.m, R, config.L)
    return config.m * R


@dataclass
class CpcmLink:
    config: SimConfig
    code: PolarCode
    sigma: float
    crc: Optional[Crc]
    frames_per_batch: int = 1

    @property
    def codewords_per_frame(self) -> int:
        return self.config.L

    def run(self, frames):
        cfg = self.config
        const = make_constellation(cfg.m, cfg.labeling)
        errors = trials = attempts = 0
        for f in frames:
            rng = frame_rng(cfg.seed, f)
            if self.crc is None:
                info = rng.integers(0, 2, size=(cfg.L, self.code.K), dtype=np.int8)
            else:
                payload = rng.integers(0, 2, size=(cfg.L, self.code.K - self.crc.r), dtype=np.int8)
                info = np.stack([self.crc.attach(p) for p in payload])
            u = self.code.place(info)
            frame = cpcm_map(polar_transform(u), cfg.m, rng)
            y = const.modulate(frame.tuples) + self.sigma * rng.standard_normal(frame.layout.T)
            det = GenieDetector(u) if self.crc is None else CrcDetector(self.code, self.crc)
            res = cpcm_decode(y, self.code, const, self.sigma, frame.tuples, det, cfg.L,
                              exact=cfg.exact)
            errors += int((res.u_hat != u).any(axis=1).sum())
            trials += cfg.L
            attempts += int(res.state.attempts.sum())
        return errors, trials, attempts


@dataclass
class MlcLink:
    config: SimConfig
    scheme: baselines.MlcScheme
    sigma: float
    frames_per_batch: int = 256

    def run(self, frames):
        cfg = self.config
        n_sym = cfg.N // cfg.m
        rngs = [frame_rng(cfg.seed, f) for f in frames]
        info = [np.stack([r.integers(0, 2, size=c.K, dtype=np.int8) for r in rngs])
                for c in self.scheme.codes]
        noise = np.stack([r.standard_normal(n_sym) for r in rngs])
        err = baselines.mlc_transmit_decode(self.scheme, info, self.sigma, noise,
                                            genie=True, exact=cfg.exact)
        return int(err.any(axis=1).sum()), len(rngs), len(rngs) * cfg.m


@dataclass
class BicmLink:
    config: SimConfig
    scheme: baselines.BicmScheme
    sigma: float
    frames_per_batch: int = 256

    def run(self, frames):
        cfg = self.config
        rngs = [frame_rng(cfg.seed, f) for f in frames]
        info = np.stack([r.integers(0, 2, size=self.scheme.K, dtype=np.int8) for r in rngs])
        noise = np.stack([r.standard_normal(cfg.N // cfg.m) for r in rngs])
        err = baselines.bicm_transmit_decode(self.scheme, info, self.sigma, noise,
                                             genie=True, exact=cfg.exact)
        return int(np.sum(err)), len(rngs), len(rngs)


def build_link(config: SimConfig, R, ebn0_db: float):
    """Construct the code(s) for this operating point and return a link."""
    K = k_for_rate(config.N, R)
    rcm = float(scheme_rate_cm(config, K))
    sigma = sigma_from_ebn0(ebn0_db, rcm)
    const = make_constellation(config.m, config.labeling)
    if config.scheme == "cpcm":
        means = surrogate_means_from_pam(const, sigma, "mlc")
        code = code_from_profile(ga_evolve(interleaver2(config.N, config.m), means), K)
        crc = Crc(config.crc_r, config.crc_poly) if config.detector == "crc" else None
        if crc is not None and crc.r >= K:
            raise ValueError("CRC longer than the information block")
        return CpcmLink(config, code, sigma, crc, max(1, 32 // config.L))
    if config.scheme == "mlc":
        return MlcLink(config, baselines.mlc_rate_allocate(const, sigma, config.N, K), sigma)
    return BicmLink(config, baselines.bicm_construct(const, sigma, config.N, K), sigma)


def _run_batch(link, frames):
    return link.run(frames)


@dataclass
class SweepRow:
    ebn0_db: float
    R: Fraction
    K: int
    R_cm: Fraction
    bler: float
    codewords: int
    errors: int
    wilson_lo: float
    wilson_hi: float
    attempts_per_codeword: float
    sigma: float
    selected: bool = True

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["R"] = str(self.R)
        d["R_cm"] = f"{float(self.R_cm):.10g}"
        return d


def _simulate(link, config: SimConfig):
    B = link.frames_per_batch
    cw_per_frame = getattr(link, "codewords_per_frame", 1)
    max_frames = max(1, math.ceil(config.max_frames / cw_per_frame))
    starts = range(0, max_frames, B)
    errors = trials = attempts = 0

    def batches():
        for s in starts:
            yield range(s, min(s + B, max_frames))

    if config.threads <= 1:
        results = (link.run(fr) for fr in batches())
        for e, t, a in results:
            errors, trials, attempts = errors + e, trials + t, attempts + a
            if errors >= config.max_errors:
                break
        return errors, trials, attempts

    with ProcessPoolExecutor(max_workers=config.threads) as pool:
        pending = []
        it = batches()
        done = False
        while not done:
            while len(pending) < 2 * config.threads:
                fr = next(it, None)
                if fr is None:
                    break
                pending.append(pool.submit(_run_batch, link, fr))
            if not pending:
                break
            e, t, a = pending.pop(0).result()
            errors, trials, attempts = errors + e, trials + t, attempts + a
            done = errors >= config.max_errors
        for p in pending:
            p.cancel()
    return errors, trials, attempts


def run_bler(config: SimConfig, R, ebn0_db: float) -> SweepRow:
    """Estimate the block error rate (per codeword) at one operating point."""
    link = build_link(config, R, ebn0_db)
    K = k_for_rate(config.N, R)
    errors, trials, attempts = _simulate(link, config)
    lo, hi = wilson_interval(errors, trials)
    row = SweepRow(float(ebn0_db), Fraction(R), K, scheme_rate_cm(config, K),
                   errors / trials, trials, errors, lo, hi, attempts / trials, link.sigma)
    log.info("%s m=%d N=%d R=%s Eb/N0=%.2f dB: BLER=%.3g (%d/%d)", config.scheme, config.m,
             config.N, R, ebn0_db, row.bler, errors, trials)
    return row


def spectral_efficiency_sweep(config: SimConfig) -> list[SweepRow]:
    """For each Eb/N0, the largest rate in the rate set meeting the BLER target.

    Rates are tried from the highest down; a grid point where no rate
    qualifies yields a row with ``selected=False`` for the lowest rate.
    """
    rows = []
    for ebn0 in config.ebn0_grid_db:
        best = None
        for R in sorted(config.rate_set, reverse=True):
            row = run_bler(config, R, ebn0)
            if row.bler <= config.bler_target:
                best = row
                break
        if best is None:
            best = dataclasses.replace(row, selected=False)
        rows.append(best)
    return rows


def required_ebn0(config: SimConfig, R, grid_db, target: Optional[float] = None):
    """Eb/N0 at which the BLER crosses ``target``, by log-linear interpolation.

    Scans ``grid_db`` upward and stops at the first point at or below the
    target.  Returns ``(ebn0_db, rows)``; ``ebn0_db`` is ``nan`` if the target
    is never reached and ``-inf`` if the first point already meets it.
    """
    target = config.bler_target if target is None else target
    rows = []
    for e in grid_db:
        rows.append(run_bler(config, R, e))
        if rows[-1].bler <= target:
            break
    last = rows[-1]
    if last.bler > target:
        return float("nan"), rows
    if len(rows) == 1:
        return float("-inf"), rows
    prev = rows[-2]
    la, lb = math.log10(prev.bler), math.log10(max(last.bler, 1e-300))
    frac = (la - math.log10(target)) / (la - lb)
    return prev.ebn0_db + frac * (last.ebn0_db - prev.ebn0_db), rows


# -------------------------------------------------------------- bound sweeps

def capacity_grid(m: int, average: float = 0.7, step: float = 0.05):
    """Capacity tuples with the given average: the first ``m-1`` entries on a
    grid of ``step``, the last one fixed by the average and kept in [0, 1]."""
    ticks = np.round(np.arange(0, 1 + step / 2, step), 10)
    out = []
    for head in np.array(np.meshgrid(*[ticks] * (m - 1), indexing="ij")).reshape(m - 1, -1).T:
        last = round(m * average - head.sum(), 10)
        if 0.0 <= last <= 1.0:
            out.append(tuple(float(v) for v in head) + (last,))
    return out


def _leaves(assignment_vec, per_type, perfect, N):
    leaves = np.full(N, perfect, dtype=float)
    leaves[: assignment_vec.size] = np.asarray(per_type, dtype=float)[assignment_vec - 1]
    return leaves


def union_bound_sweep(m: int, N: int, instances, channel: str = "awgn", R=Fraction(1, 2),
                      n_random: int = 100, seed: int = 0) -> list[dict]:
    """BLER union bounds of interleaver-1, interleaver-2 and random assignments.

    ``instances`` are capacity tuples.  For BECs the erasure probability is
    ``1 - C``; for AWGN the bi-AWGN channel of capacity ``C`` is used.  When
    ``m`` does not divide ``N`` the code is shortened and the shortened
    positions act as perfect channels that are never selected.
    """
    sh = shorten(N, m)
    K = k_for_rate(sh.N_s, R)
    rows = []
    for idx, caps in enumerate(instances, start=1):
        if channel == "bec":
            per_type = [round(1.0 - c, 12) for c in caps]
            perfect, evolve, metric = 0.0, bec_evolve_leaves, Metric.BHATTACHARYYA
        elif channel == "awgn":
            per_type = [mean_for_capacity(c) for c in caps]
            perfect, evolve, metric = MAX_LLR_MEAN, ga_evolve_leaves, Metric.LLR_MEAN
        else:
            raise ValueError(f"unknown channel type {channel!r}")
        kinds = [("interleaver2", None, interleaver2(sh.N_s, m)),
                 ("interleaver1", None, interleaver1(sh.N_s, m))]
        kinds += [("random", s, random_interleaver(sh.N_s, m, seed * 100_003 + s))
                  for s in range(n_random)]
        for kind, s, a in kinds:
            prof = ReliabilityProfile(evolve(_leaves(a.assignment, per_type, perfect, N)), metric)
            info = select_info_set(prof, K, exclude=sh.frozen)
            rows.append(dict(instance=idx, capacities=" ".join(f"{c:g}" for c in caps),
                             interleaver=kind, seed="" if s is None else s, N=N, N_s=sh.N_s,
                             K=K, bound=union_bound(prof, info)))
    return rows


def summarize_union_bounds(rows):
    """Per instance: interleaver-2 bound, interleaver-1 bound, min over random."""
    out = {}
    for r in rows:
        d = out.setdefault(r["instance"], {"random_min": math.inf})
        if r["interleaver"] == "random":
            d["random_min"] = min(d["random_min"], r["bound"])
        else:
            d[r["interleaver"]] = r["bound"]
    return out


def shannon_bound(rate_cm) -> np.ndarray:
    """Minimum Eb/N0 (dB) for real-valued AWGN at ``rate_cm`` bits per symbol."""
    r = np.asarray(rate_cm, dtype=float)
    return 10.0 * np.log10((np.power(2.0, 2.0 * r) - 1.0) / (2.0 * r))
