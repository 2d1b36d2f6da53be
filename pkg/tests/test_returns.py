import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from fx_tails.errors import DegenerateError, DomainError, LengthError
from fx_tails.returns import (
    group_skewness, log_returns, moments, normalize_returns, returns_from_log_prices,
)
from fx_tails.synthetic import normal_stream, pareto_draws

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def loo_oracle(R):
    """Leave-one-out deviation by explicit deletion, one t at a time."""
    R = list(map(float, R))
    T = len(R)
    mean = sum(R) / T
    out = []
    for t in range(T):
        others = R[:t] + R[t + 1:]
        s = math.sqrt(sum((x - mean) ** 2 for x in others) / (T - 2))
        out.append((R[t] - mean) / s)
    return out


# -- log returns ---------------------------------------------------------------

def test_log_returns_examples():
    np.testing.assert_array_equal(log_returns([2.0, 2.0, 2.0]).values, [0, 0])
    assert log_returns([1.0, math.e]).values[0] == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(log_returns([1.0, 2.0, 4.0]).values, [0.6931471805599453] * 2, rtol=1e-15)


def test_log_returns_horizon_and_errors():
    r = log_returns([1.0, 2.0, 4.0, 8.0], dt=2)
    np.testing.assert_allclose(r.values, [math.log(4)] * 2)
    assert r.horizon == 2
    with pytest.raises(DomainError):
        log_returns([1.0, 0.0, 2.0])
    with pytest.raises(LengthError):
        log_returns([1.0], dt=1)


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=50), st.floats(1e-3, 1e3))
def test_log_returns_scale_invariant(prices, c):
    a = log_returns(prices).values
    b = log_returns(np.asarray(prices) * c).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_returns_skip_gaps():
    lp = np.array([0.0, 0.1, np.nan, 0.3, 0.5, 0.4])
    np.testing.assert_allclose(returns_from_log_prices(lp).values, [0.1, 0.2, -0.1])


# -- normalization -------------------------------------------------------------

def test_normalize_hand_example():
    n = normalize_returns([1.0, 0.0, -1.0])
    np.testing.assert_allclose(n.values, [1.0, 0.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(n.sigma_series, [1.0, math.sqrt(2), 1.0])
    assert n.source_mean == 0.0


def test_normalize_matches_deletion_oracle(rng):
    R = rng.standard_t(3, size=200)
    np.testing.assert_allclose(normalize_returns(R).values, loo_oracle(R), rtol=1e-12)


def test_normalize_errors():
    with pytest.raises(DegenerateError):
        normalize_returns([0.3, 0.3, 0.3, 0.3])
    with pytest.raises(LengthError):
        normalize_returns([1.0, 2.0])


@settings(max_examples=60)
@given(st.lists(finite, min_size=3, max_size=60))
def test_weighted_normalized_sum_is_zero(R):
    R = np.asarray(R)
    try:
        n = normalize_returns(R)
    except DegenerateError:
        return
    scale = np.sum(np.abs(R - R.mean())) + 1e-300
    assert abs(np.sum(n.values * n.sigma_series)) <= 1e-12 * scale


@settings(max_examples=60)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=60), st.floats(0.01, 100), st.floats(-100, 100))
def test_normalize_affine_invariant(R, a, b):
    R = np.asarray(R)
    assume(np.ptp(R) > 1e-3)
    try:
        base = normalize_returns(R).values
    except DegenerateError:
        return
    np.testing.assert_allclose(normalize_returns(a * R + b).values, base, atol=1e-9, rtol=1e-9)


def test_normalize_affine_invariant_tight(rng):
    R = rng.normal(size=500)
    np.testing.assert_allclose(normalize_returns(3.7 * R - 2.2).values, normalize_returns(R).values,
                               atol=1e-12)


# -- moments -------------------------------------------------------------------

def test_two_point_sample():
    m = moments([1.0, -1.0] * 50)
    assert m.skewness == 0.0
    assert m.kurtosis == 1.0
    assert m.std == 1.0


def test_moments_match_scipy(rng):
    x = rng.gamma(2.0, size=1000)
    m = moments(x)
    assert m.skewness == pytest.approx(stats.skew(x), rel=1e-12)
    assert m.kurtosis == pytest.approx(stats.kurtosis(x, fisher=False), rel=1e-12)
    assert m.std == pytest.approx(np.std(x), rel=1e-12)


def test_gaussian_kurtosis():
    assert moments(normal_stream(42, 100_000)).kurtosis == pytest.approx(3.0, abs=0.1)


def test_pareto_heavier_than_gaussian():
    for seed in range(10):
        par = pareto_draws(3.0, 1.0, 5000, seed)
        par[1::2] *= -1
        gau = normal_stream(seed + 1000, 5000)
        assert moments(par).kurtosis > moments(gau).kurtosis


def test_moments_errors():
    with pytest.raises(DegenerateError):
        moments([2.0] * 10)
    with pytest.raises(LengthError):
        moments([1.0, 2.0, 3.0])


@settings(max_examples=100)
@given(st.lists(finite, min_size=4, max_size=80))
def test_pearson_inequality_and_reflection(x):
    try:
        m = moments(x)
    except DegenerateError:
        return
    assert m.kurtosis >= m.skewness**2 + 1 - 1e-9
    neg = moments(-np.asarray(x))
    assert neg.skewness == pytest.approx(-m.skewness, abs=1e-9)
    assert neg.kurtosis == pytest.approx(m.kurtosis, rel=1e-9)


# -- group skewness --------------------------------------------------------------

def test_group_skewness_equal_values():
    sk = {"A": 0.7, "B": 0.7, "C": 0.7}
    cl = {"A": "developed", "B": "emerging", "C": "emerging"}
    g = group_skewness(sk, cl)
    assert g["developed"] == {"mean": 0.7, "sd": 0.0, "n": 1}
    assert g["emerging"]["sd"] == 0.0
    assert g["frontier"] is None


def test_group_skewness_hand_values():
    sk = {"A": 0.0, "B": 0.0, "C": 2.0, "D": 4.0}
    cl = {"A": "developed", "B": "developed", "C": "frontier", "D": "frontier"}
    g = group_skewness(sk, cl)
    assert (g["developed"]["mean"], g["developed"]["sd"]) == (0.0, 0.0)
    assert (g["frontier"]["mean"], g["frontier"]["sd"]) == (3.0, 1.0)


def test_group_skewness_heavier_frontier():
    from fx_tails.synthetic import SyntheticSpec, synthetic_returns

    sk, cl = {}, {}
    for i in range(10):
        d = SyntheticSpec("gaussian_random_walk", 3000, 100 + i, code=f"D{i:02d}")
        f = SyntheticSpec("pareto_returns", 3000, 200 + i, gamma=2.5, x_min=1.0, code=f"F{i:02d}")
        for spec, cls in ((d, "developed"), (f, "frontier")):
            r = normalize_returns(synthetic_returns(spec)).values
            sk[spec.code] = moments(r).skewness
            cl[spec.code] = cls
    g = group_skewness(sk, cl)
    mag = lambda cls: np.mean([abs(sk[c]) for c in sk if cl[c] == cls])
    assert mag("frontier") >= mag("developed")
    assert g["emerging"] is None
