import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binomtest

from polarcm.construction import table1_instances
from polarcm.cpcm import rate_cm
from polarcm.sim import (
    CpcmLink,
    SimConfig,
    build_link,
    capacity_grid,
    config_for_profile,
    run_bler,
    scheme_rate_cm,
    shannon_bound,
    spectral_efficiency_sweep,
    summarize_union_bounds,
    union_bound_sweep,
    wilson_interval,
)


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_contains_estimate_and_matches_scipy(errors, trials):
    errors = min(errors, trials)
    lo, hi = wilson_interval(errors, trials)
    assert 0.0 <= lo <= errors / trials <= hi <= 1.0
    ref = binomtest(errors, trials).proportion_ci(0.95, method="wilson")
    assert lo == pytest.approx(ref.low, abs=1e-9)
    assert hi == pytest.approx(ref.high, abs=1e-9)


def test_wilson_zero_errors_is_one_sided():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and 0 < hi < 0.004


@pytest.mark.parametrize("scheme", ["cpcm", "mlc", "bicm"])
def test_saturated_snr_has_no_errors(scheme):
    cfg = SimConfig(scheme=scheme, m=2, N=64, L=10, max_frames=1000, max_errors=100, seed=3)
    row = run_bler(cfg, Fraction(1, 2), 30.0)
    assert row.bler == 0.0 and row.errors == 0
    assert row.codewords == 1000
    assert row.wilson_lo == 0.0


def test_same_seed_same_row():
    cfg = SimConfig(scheme="cpcm", m=2, N=32, L=4, max_frames=400, max_errors=40, seed=9)
    a = run_bler(cfg, Fraction(1, 2), 3.0)
    b = run_bler(cfg, Fraction(1, 2), 3.0)
    assert a == b
    c = run_bler(SimConfig(**{**cfg.__dict__, "seed": 10}), Fraction(1, 2), 3.0)
    assert c != a


@pytest.mark.parametrize("scheme", ["mlc", "cpcm"])
def test_thread_count_does_not_change_results(scheme):
    base = dict(scheme=scheme, m=2, N=32, L=4, max_frames=3000, max_errors=60, seed=4)
    one = run_bler(SimConfig(**base, threads=1), Fraction(1, 2), 2.0)
    two = run_bler(SimConfig(**base, threads=3), Fraction(1, 2), 2.0)
    assert one == two


def test_cpcm_counts_codewords_not_frames():
    cfg = SimConfig(scheme="cpcm", m=2, N=32, L=5, max_frames=200, max_errors=10**6, seed=2)
    link = build_link(cfg, Fraction(3, 4), 0.0)
    assert isinstance(link, CpcmLink)
    errors, trials, attempts = link.run(range(6))
    assert trials == 6 * 5
    assert 0 < errors <= trials
    row = run_bler(cfg, Fraction(3, 4), 0.0)
    assert row.codewords % cfg.L == 0
    assert row.bler == row.errors / row.codewords


def test_attempts_bounded_by_failures():
    cfg = SimConfig(scheme="cpcm", m=2, N=64, L=10, max_frames=300, max_errors=10**6, seed=1)
    link = build_link(cfg, Fraction(1, 2), 3.0)
    for f in range(30):
        e, t, a = link.run([f])
        assert t <= a <= 3 * t


def test_rate_cm_column():
    cfg = SimConfig(scheme="cpcm", m=2, L=10)
    assert scheme_rate_cm(cfg, 64) == Fraction(2 * 64 * 10, 128 * 11)
    assert scheme_rate_cm(SimConfig(scheme="mlc", m=4), 32) == 1


def test_rate_loss_ratio():
    ratio = rate_cm(2, Fraction(1, 2), 10) / rate_cm(2, Fraction(1, 2), 100)
    assert ratio == Fraction(10 * 101, 11 * 100) == Fraction(101, 110)
    assert 1 - rate_cm(2, Fraction(1, 2), 10) / (2 * Fraction(1, 2)) == Fraction(1, 11)
    assert 1 - rate_cm(2, Fraction(1, 2), 100) / (2 * Fraction(1, 2)) == Fraction(1, 101)


def test_shannon_bound():
    assert shannon_bound(1.0) == pytest.approx(10 * math.log10(1.5), abs=1e-12)
    assert shannon_bound(1e-9) == pytest.approx(10 * math.log10(math.log(2)), abs=1e-6)
    assert shannon_bound(1e-9) == pytest.approx(-1.59, abs=5e-3)
    curve = shannon_bound(np.linspace(0.01, 4, 400))
    assert np.all(np.diff(curve) > 0)


def test_capacity_grid():
    grid = capacity_grid(2, 0.7, 0.05)
    assert (0.7, 0.7) in grid and (0.4, 1.0) in grid and (1.0, 0.4) in grid
    assert len(grid) == 13
    assert all(sum(g) == pytest.approx(1.4) for g in grid)
    assert all(abs(sum(g) - 2.8) < 1e-9 for g in capacity_grid(4, 0.7, 0.25))


@pytest.mark.parametrize("channel", ["bec", "awgn"])
def test_identical_channels_give_identical_bounds(channel):
    rows = union_bound_sweep(2, 128, [(0.7, 0.7)], channel, n_random=5)
    bounds = {r["bound"] for r in rows}
    assert len(bounds) == 1 and len(rows) == 7


def test_union_bound_sweep_shortens():
    rows = union_bound_sweep(3, 64, [(0.5, 0.7, 0.9)], "bec", n_random=2)
    assert all(r["N_s"] == 63 and r["K"] == 32 for r in rows)
    s = summarize_union_bounds(rows)[1]
    assert set(s) == {"interleaver1", "interleaver2", "random_min"}


def test_union_bound_sweep_table1_shape():
    rows = union_bound_sweep(4, 64, table1_instances()[:2], "awgn", n_random=3)
    assert len(rows) == 2 * 5
    assert [r["instance"] for r in rows[:5]] == [1] * 5


def test_spectral_efficiency_monotone():
    cfg = SimConfig(scheme="mlc", m=2, N=64, rate_set=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)),
                    ebn0_grid_db=(0.0, 3.0, 6.0, 10.0), bler_target=0.1, max_frames=2000,
                    max_errors=50, seed=5)
    rows = spectral_efficiency_sweep(cfg)
    selected = [r.R if r.selected else Fraction(0) for r in rows]
    assert selected == sorted(selected)
    assert rows[-1].R == Fraction(3, 4) and rows[-1].selected


def test_profiles():
    desk = config_for_profile("desk", scheme="mlc")
    assert (desk.N, desk.L, desk.bler_target) == (128, 10, 1e-2)
    assert config_for_profile("paper").bler_target == 1e-5
    with pytest.raises(ValueError):
        config_for_profile("huge")


@pytest.mark.parametrize("bad", [
    dict(scheme="qam"), dict(N=100), dict(m=3, N=64), dict(rate_set=(Fraction(1),)),
    dict(rate_set=()), dict(ebn0_grid_db=()), dict(max_errors=10), dict(max_frames=0),
    dict(threads=0), dict(detector="oracle"), dict(L=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SimConfig(**bad)
