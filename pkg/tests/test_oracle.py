import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pidforest.oracle import (
    candidate_endpoints,
    densest_interval_all,
    id_length,
    impostors,
    max_boolean_subcube_sparsity,
    pid_length_boolean,
    pidscore_1d,
    pidscore_bruteforce,
)


def hamming_ball(d):
    return np.vstack([np.zeros(d, dtype=int), np.eye(d, dtype=int)])


# -- Boolean ------------------------------------------------------------------


def test_hamming_ball_origin():
    h = hamming_ball(3)
    assert id_length([0, 0, 0], h) == 3
    value, witness = pid_length_boolean([0, 0, 0], h)
    assert value == 2.0 and witness == ()
    assert max_boolean_subcube_sparsity([0, 0, 0], h) == 2


def test_hamming_ball_unit_vector():
    value, witness = pid_length_boolean([1, 0, 0], hamming_ball(3))
    assert value == 1.0 and witness == (0,)


def test_singleton_dataset():
    assert id_length([1, 0], [[1, 0]]) == 0
    assert max_boolean_subcube_sparsity([1, 0], [[1, 0]]) == 4


def test_three_point_square():
    t = [[0, 0], [0, 1], [1, 0]]
    assert id_length([0, 0], t) == 2
    # S = {} -> 0 + log2 3; {0} -> 1 + log2 2 = 2; {1} -> 2; {0,1} -> 2
    value, witness = pid_length_boolean([0, 0], t)
    assert value == pytest.approx(math.log2(3)) and witness == ()
    # subcubes through 00: whole square 4/3, two edges 2/2, the point 1/1
    assert max_boolean_subcube_sparsity([0, 0], t) == Fraction(4, 3)


def test_impostor_set_lists_agreeing_points():
    imp = impostors([0, 0, 0], hamming_ball(3), (0,))
    assert imp.members == (0, 2, 3)


def test_id_length_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicates"):
        id_length([0, 1], [[0, 1], [0, 1]])


def test_pid_length_bounds_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        n = int(rng.integers(1, 2**d + 1))
        pool = np.array(list(itertools.product([0, 1], repeat=d)))
        data = pool[rng.choice(len(pool), size=n, replace=False)]
        for x in data:
            value, _ = pid_length_boolean(x, data)
            assert value <= math.log2(n) + 1e-12
            assert value <= id_length(x, data) + 1e-12


def test_lemma1_small_exhaustive():
    # every nonempty subset of {0,1}^2 as a dataset
    pool = list(itertools.product([0, 1], repeat=2))
    for r in range(1, 5):
        for data in itertools.combinations(pool, r):
            for x in data:
                _, witness = pid_length_boolean(x, data)
                count = len(impostors(x, data, witness).members)
                expected = Fraction(2 ** (2 - len(witness)), count)
                assert max_boolean_subcube_sparsity(x, data) == expected


# -- continuous ---------------------------------------------------------------


def test_candidate_endpoints():
    assert candidate_endpoints(np.array([0.9, 0.1, 0.5])).tolist() == pytest.approx([0.0, 0.3, 0.7, 1.0])


def test_bruteforce_three_points():
    value, cube = pidscore_bruteforce([0.5], np.array([[0.1], [0.5], [0.9]]))
    assert value == pytest.approx(math.log2(0.4), abs=1e-15)
    assert (cube.intervals[0].lo, cube.intervals[0].hi) == pytest.approx((0.3, 0.7))


def test_bruteforce_single_point_is_full_cube():
    value, cube = pidscore_bruteforce([0.5], np.array([[0.5]]))
    assert value == 0.0


def test_bruteforce_grid_symmetry():
    grid = np.array([[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
    scores = [pidscore_bruteforce(x, grid)[0] for x in grid]
    assert len(set(scores)) == 1


def test_bruteforce_refuses_high_dimension():
    with pytest.raises(ValueError, match="oracle infeasible"):
        pidscore_bruteforce(np.zeros(4), np.zeros((2, 4)))


def test_densest_interval_examples():
    out = densest_interval_all([0.3, 0.4, 0.3])
    assert [round(v, 12) for v, _ in out] == [0.35, 0.4, 0.35]
    assert [(iv.lo, iv.hi) for _, iv in out] == [(1, 2), (2, 2), (2, 3)]


def test_densest_interval_tie_prefers_shorter():
    v, iv = densest_interval_all([1.0, 3.0, 2.0])[0]
    assert v == 2.0 and (iv.lo, iv.hi) == (1, 2)


def test_densest_interval_constant_picks_singletons():
    out = densest_interval_all([0.1] * 5)
    assert all(v == 0.1 and iv.lo == iv.hi == j + 1 for j, (v, iv) in enumerate(out))


def _densest_brute(a):
    n = len(a)
    best = []
    for j in range(n):
        cands = []
        for lo in range(j + 1):
            for hi in range(j, n):
                cands.append((sum(a[lo : hi + 1]) / (hi - lo + 1), lo, hi))
        top = max(c[0] for c in cands)
        best.append(top)
    return best


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=12))
def test_densest_interval_matches_enumeration(a):
    got = [v for v, _ in densest_interval_all(a)]
    assert got == pytest.approx(_densest_brute(a), rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=15))
def test_densest_interval_reversal_symmetry(a):
    fwd = densest_interval_all(a)
    rev = densest_interval_all(a[::-1])[::-1]
    for (v1, i1), (v2, i2) in zip(fwd, rev):
        assert v1 == pytest.approx(v2, rel=1e-12)
        assert len(i1) == len(i2)


def test_pidscore_1d_three_points():
    out = pidscore_1d([0.1, 0.5, 0.9])
    assert [s for s, _ in out] == pytest.approx([math.log2(0.35), math.log2(0.4), math.log2(0.35)], abs=1e-15)


def test_pidscore_1d_single_point():
    assert pidscore_1d([0.5])[0][0] == 0.0


def test_pidscore_1d_duplicates_use_multiplicity():
    # {0.2, 0.2, 0.8}: the pair is the densest spot, the lone point's best cell is [0.5, 1]
    out = pidscore_1d([0.2, 0.8, 0.2])
    assert out[1][0] == pytest.approx(math.log2(0.5))
    for s, iv in out:
        assert iv.lo <= iv.hi


def test_pidscore_1d_rejects_empty():
    with pytest.raises(ValueError):
        pidscore_1d([])


def test_density_identity_on_all_intervals():
    rng = np.random.default_rng(11)
    x = np.sort(rng.uniform(size=9))
    e = np.concatenate([[0.0], (x[:-1] + x[1:]) / 2, [1.0]])
    a = np.diff(e)
    for lo in range(1, 10):
        for hi in range(lo, 10):
            rho = a[lo - 1 : hi].sum() / (hi - lo + 1)
            assert rho == pytest.approx((e[hi] - e[lo - 1]) / (hi - lo + 1), abs=1e-12)
