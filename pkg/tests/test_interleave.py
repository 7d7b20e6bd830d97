import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarcm.interleave import (
    all_balanced_assignments,
    interleaver1,
    interleaver2,
    random_interleaver,
    shorten,
    stage1_even_bhattacharyya_sum,
)
from polarcm.polar import LLR_INF, PolarCode, polar_transform, sc_decode


def test_definitions():
    assert interleaver2(8, 2).assignment.tolist() == [1, 2, 1, 2, 1, 2, 1, 2]
    assert interleaver2(8, 4).assignment.tolist() == [1, 2, 3, 4, 1, 2, 3, 4]
    assert interleaver1(8, 2).assignment.tolist() == [1, 1, 1, 1, 2, 2, 2, 2]
    assert interleaver1(8, 4).assignment.tolist() == [1, 1, 2, 2, 3, 3, 4, 4]


def test_requires_divisibility():
    for make in (interleaver1, interleaver2):
        with pytest.raises(ValueError):
            make(8, 3)
    with pytest.raises(ValueError):
        random_interleaver(10, 4, 0)


def test_stage1_example():
    z = (0.2, 0.4)
    assert stage1_even_bhattacharyya_sum(interleaver2(4, 2), z) == pytest.approx(0.16)
    assert stage1_even_bhattacharyya_sum(interleaver1(4, 2), z) == pytest.approx(0.20)


def test_exhaustive_enumeration_counts():
    assert sum(1 for _ in all_balanced_assignments(4)) == 6
    assert sum(1 for _ in all_balanced_assignments(8)) == 70


@given(st.integers(1, 7), st.integers(1, 4), st.integers(0, 2**31))
def test_all_kinds_balanced(n, m, seed):
    N = m << n
    for a in (interleaver1(N, m), interleaver2(N, m), random_interleaver(N, m, seed)):
        assert a.is_balanced() and a.N == N
        assert np.all(a.counts() == N // m)


def test_random_reproducible():
    a = random_interleaver(64, 4, 9)
    b = random_interleaver(64, 4, 9)
    np.testing.assert_array_equal(a.assignment, b.assignment)
    assert a.seed == 9 and a.kind == "random"
    assert not np.array_equal(a.assignment, random_interleaver(64, 4, 10).assignment)


def test_assignment_is_read_only():
    a = interleaver2(8, 2)
    with pytest.raises(ValueError):
        a.assignment[0] = 2


def test_leaf_values():
    a = interleaver1(4, 2)
    assert a.leaf_values([0.1, 0.9]).tolist() == [0.1, 0.1, 0.9, 0.9]
    with pytest.raises(ValueError):
        a.leaf_values([0.1, 0.2, 0.3])


def test_shorten_examples():
    s = shorten(8, 3)
    assert s.N_s == 6
    assert (s.shortened + 1).tolist() == [7, 8]
    s = shorten(512, 4)
    assert s.N_s == 512 and s.shortened.size == 0 and s.frozen.size == 0


@pytest.mark.parametrize("N,m", [(8, 3), (16, 3), (32, 5), (64, 6), (128, 3)])
def test_shortened_code_roundtrip(N, m):
    rng = np.random.default_rng(N + m)
    sh = shorten(N, m)
    free = np.setdiff1d(np.arange(N), sh.frozen)
    info = rng.choice(free, size=free.size // 2, replace=False)
    code = PolarCode.from_info_set(N, info)
    for _ in range(20):
        u = code.place(rng.integers(0, 2, code.K))
        x = polar_transform(u)
        assert not x[sh.shortened].any()
        llr = np.where(x == 0, 4.0, -4.0)
        llr[sh.shortened] = LLR_INF
        np.testing.assert_array_equal(sc_decode(code, llr).u_hat, u)
