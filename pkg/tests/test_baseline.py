import math
from fractions import Fraction

import numpy as np
import pytest

from pidforest.baseline import iforest_fit
from pidforest.data import gen_masking
from pidforest.forest import isolation_path_adjustment
from pidforest.metrics import top_fraction_accuracy


def c_exact(n):
    harmonic = sum(Fraction(1, i) for i in range(1, n))
    return float(2 * harmonic - Fraction(2 * (n - 1), n))


@pytest.mark.parametrize("n", [3, 10, 256, 1000])
def test_path_normalizer_matches_harmonic_sum(n):
    assert isolation_path_adjustment(n) == pytest.approx(c_exact(n), rel=1e-12)


def test_single_point_scores_maximal():
    model = iforest_fit(np.array([[1.0, 2.0]]), t=5)
    assert all(int(t.depth.max()) == 0 for t in model.trees)
    assert model.score(np.array([[1.0, 2.0]])).tolist() == [1.0]


def test_leaf_depth_limit_and_score_range():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(500, 3))
    model = iforest_fit(x, t=20, m=64, seed=1)
    assert max(int(t.depth.max()) for t in model.trees) <= math.ceil(math.log2(64)) + 1
    s = model.score(x)
    assert np.all((s > 0) & (s <= 1))


def test_far_point_scores_higher():
    rng = np.random.default_rng(2)
    x = np.vstack([rng.normal(size=(300, 2)), [[8.0, 8.0]]])
    s = iforest_fit(x, t=50, m=128, seed=0).score(x)
    assert np.argmax(s) == 300


def test_deterministic():
    x = np.random.default_rng(3).normal(size=(200, 2))
    a = iforest_fit(x, t=10, seed=4).score(x)
    b = iforest_fit(x, t=10, seed=4).score(x)
    assert np.array_equal(a, b)


def test_uniform_scores_have_no_extreme_outlier():
    x = np.random.default_rng(5).uniform(size=(1000, 1))
    s = iforest_fit(x, t=100, m=256, seed=0).score(x)
    z = (s - s.mean()) / s.std()
    assert z.max() < 6


def test_masking_degrades_with_sample_size():
    ds = gen_masking(seed=0).dataset
    small = top_fraction_accuracy(iforest_fit(ds, 100, 64, 0).score(ds), ds.labels, 0.05)
    large = top_fraction_accuracy(iforest_fit(ds, 100, 1000, 0).score(ds), ds.labels, 0.05)
    assert large < small
