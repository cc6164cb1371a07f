import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from gfflab.errors import DegenerateDesign, InsufficientSamples
from gfflab.stats import (
    excess_kurtosis,
    jackknife,
    jackknife_means,
    kurtosis_se,
    linear_fit,
    mean_se,
    normal_sf,
    origin_fit,
    product_moment,
    require_samples,
)


def test_require_samples():
    require_samples(5, 5)
    with pytest.raises(InsufficientSamples):
        require_samples(4, 5)
    with pytest.raises(InsufficientSamples):
        jackknife(np.mean, np.zeros(150), 100)


def test_mean_se_matches_formula():
    x = np.arange(10.0)
    m, se = mean_se(x)
    assert m == 4.5 and se == pytest.approx(np.std(x, ddof=1) / math.sqrt(10))


def test_jackknife_of_mean_is_block_se():
    x = np.random.default_rng(0).standard_normal(1000)
    est, se = jackknife(np.mean, x, 100)
    bm = x.reshape(10, 100).mean(axis=1)
    assert est == pytest.approx(x.mean())
    assert se == pytest.approx(bm.std(ddof=1) / math.sqrt(10), rel=1e-12)


def test_product_moment_matches_jackknife():
    v = np.random.default_rng(1).standard_normal((2000, 3))
    mean, se = product_moment(v, [(0, 1), (0, 1, 2)])
    for k, t in enumerate([(0, 1), (0, 1, 2)]):
        est, s = jackknife(lambda a: np.mean(np.prod(a[:, list(t)], axis=1)), v)
        assert mean[k] == pytest.approx(est) and se[k] == pytest.approx(s, rel=1e-10)


def test_fast_kurtosis_matches_generic_jackknife():
    x = np.random.default_rng(2).standard_t(8, 3000)
    k_fast, se_fast = kurtosis_se(x)
    k_gen, se_gen = jackknife(excess_kurtosis, x)
    assert k_fast == pytest.approx(float(k_gen), rel=1e-10)
    assert se_fast == pytest.approx(float(se_gen), rel=1e-8)
    assert excess_kurtosis(x) == pytest.approx(sps.kurtosis(x), rel=1e-10)


def test_jackknife_means_matches_generic():
    c = np.random.default_rng(3).standard_normal((1500, 3)) + 1.0

    def fn(m):
        return np.array([m[0] * m[1] - m[2]])

    fast, se_fast = jackknife_means(c, fn)
    gen, se_gen = jackknife(lambda a: fn(a.mean(axis=0)), c)
    assert fast == pytest.approx(gen, rel=1e-12)
    assert se_fast == pytest.approx(se_gen, rel=1e-10)


def test_fits_on_exact_data():
    x = np.array([1.0, 2.0, 3.0, 5.0])
    a, c, r2 = linear_fit(x, 2 * x - 1)
    assert (a, c, r2) == pytest.approx((2.0, -1.0, 1.0))
    a, se_a, r2 = origin_fit(x, 2.5 * x, np.ones(4))
    assert a == pytest.approx(2.5) and r2 == pytest.approx(1.0)
    with pytest.raises(DegenerateDesign):
        linear_fit(np.ones(3), x[:3])
    with pytest.raises(DegenerateDesign):
        origin_fit(np.zeros(3), x[:3])


def test_normal_sf_against_scipy():
    x = np.linspace(-4, 6, 21)
    assert np.allclose(normal_sf(x), sps.norm.sf(x), rtol=1e-12, atol=0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30), st.floats(-5, 5), st.floats(-5, 5))
def test_linear_fit_recovers_lines_property(xs, a, c):
    x = np.array(xs)
    if np.ptp(x) < 1e-3:
        return
    a2, c2, _ = linear_fit(x, a * x + c)
    assert a2 == pytest.approx(a, abs=1e-6) and c2 == pytest.approx(c, abs=1e-3)


@given(st.integers(0, 2 ** 31), st.floats(0.1, 10), st.floats(-10, 10))
def test_kurtosis_affine_invariant_property(seed, scale, shift):
    x = np.random.default_rng(seed).standard_normal(400)
    k1, s1 = kurtosis_se(x)
    k2, s2 = kurtosis_se(scale * x + shift)
    assert k1 == pytest.approx(k2, abs=1e-8) and s1 == pytest.approx(s2, abs=1e-8)
