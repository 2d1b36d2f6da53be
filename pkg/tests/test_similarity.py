import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import jensenshannon

from fx_tails.errors import DegenerateError, IncompatibleHistogramError, UndefinedDivergenceError
from fx_tails.similarity import (
    LN2, DistanceMatrix, Histogram, distance_matrix, js_divergence, kl_divergence, shared_histograms,
    similarity_distance,
)


def H(mass):
    mass = np.asarray(mass, dtype=float)
    return Histogram(np.arange(len(mass) + 1, dtype=float), mass / mass.sum())


def random_hist(rng, k=20):
    m = rng.random(k) * (rng.random(k) < 0.7)
    m[rng.integers(k)] += 0.1
    return H(m)


def test_kl_hand_values():
    assert kl_divergence(H([1, 0]), H([0.5, 0.5])) == pytest.approx(math.log(2), abs=1e-15)
    assert kl_divergence(H([0.3, 0.7]), H([0.3, 0.7])) == 0.0
    with pytest.raises(UndefinedDivergenceError):
        kl_divergence(H([0.5, 0.5]), H([1, 0]))


def test_js_hand_value():
    # m = (3/4, 1/4): JS = 1/2 ln(4/3) + 1/4 ln(2/3) + 1/4 ln 2
    expected = 0.5 * math.log(4 / 3) + 0.25 * math.log(2 / 3) + 0.25 * math.log(2)
    assert expected == pytest.approx(0.215761, abs=1e-6)
    assert js_divergence(H([1, 0]), H([0.5, 0.5])) == pytest.approx(expected, abs=1e-12)


def test_js_disjoint_supports():
    assert js_divergence(H([1, 0, 0]), H([0, 0, 1])) == pytest.approx(LN2, abs=1e-15)


def test_js_matches_scipy(rng):
    for _ in range(50):
        p, q = random_hist(rng), random_hist(rng)
        assert math.sqrt(js_divergence(p, q)) == pytest.approx(jensenshannon(p.mass, q.mass), abs=1e-12)


def test_js_metric_suite(rng):
    for _ in range(1000):
        p, q, r = random_hist(rng), random_hist(rng), random_hist(rng)
        pq, qp = js_divergence(p, q), js_divergence(q, p)
        assert pq == qp
        assert 0 <= pq <= LN2
        d = math.sqrt
        assert d(pq) <= d(js_divergence(p, r)) + d(js_divergence(r, q)) + 1e-12


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=30).filter(lambda v: sum(v) > 0.01),
       st.randoms(use_true_random=False))
def test_js_bin_permutation_invariant(v, rnd):
    w = list(reversed(v))
    perm = list(range(len(v)))
    rnd.shuffle(perm)
    p, q = H(v), H(w)
    pp, qq = H([v[i] for i in perm]), H([w[i] for i in perm])
    assert js_divergence(pp, qq) == pytest.approx(js_divergence(p, q), abs=1e-12)


def test_incompatible_edges():
    p = H([1, 1])
    q = Histogram(np.array([0.0, 1.0, 3.0]), np.array([0.5, 0.5]))
    with pytest.raises(IncompatibleHistogramError):
        js_divergence(p, q)
    with pytest.raises(IncompatibleHistogramError):
        kl_divergence(p, H([1, 1, 1]))


def test_shared_histograms(rng):
    a, b = rng.normal(size=500), rng.normal(2, 1, size=300)
    p, q = shared_histograms(a, b, bins=50)
    assert np.array_equal(p.edges, q.edges)
    assert p.edges[0] == min(a.min(), b.min()) and p.edges[-1] == max(a.max(), b.max())
    assert p.mass.sum() == pytest.approx(1) and q.mass.sum() == pytest.approx(1)


def test_similarity_identical_and_disjoint(rng):
    a = rng.normal(size=1000)
    assert similarity_distance(a, a) == 0.0
    assert similarity_distance(a, a + 100) == pytest.approx(math.sqrt(LN2), abs=1e-12)


# -- matrix -----------------------------------------------------------------------

def _returns(rng):
    return {
        "GA1": rng.normal(size=3000), "GA2": rng.normal(size=3000),
        "TA1": rng.standard_t(2, size=3000), "TA2": rng.standard_t(2, size=3000),
    }


def test_matrix_duplicate_zero(rng):
    r = _returns(rng)
    r["DUP"] = r["GA1"].copy()
    dm = distance_matrix(r, bins=100)
    i, j = dm.codes.index("GA1"), dm.codes.index("DUP")
    assert dm.d[i, j] == 0.0
    assert np.array_equal(dm.d, dm.d.T) and np.all(np.diag(dm.d) == 0)
    assert np.all((dm.d >= 0) & (dm.d <= math.sqrt(LN2)))


@pytest.mark.parametrize("binning", ["pair", "global"])
def test_matrix_class_ordering(rng, binning):
    dm = distance_matrix(_returns(rng), bins=100, binning=binning)
    d = dict(((a, b), dm.d[i, j]) for i, a in enumerate(dm.codes) for j, b in enumerate(dm.codes))
    within = max(d["GA1", "GA2"], d["TA1", "TA2"])
    across = min(d[a, b] for a in ("GA1", "GA2") for b in ("TA1", "TA2"))
    assert within < across


def test_matrix_reorder_equivariance(rng):
    r = _returns(rng)
    dm = distance_matrix(r, bins=100)
    rev = distance_matrix(dict(reversed(list(r.items()))), bins=100)
    idx = [rev.codes.index(c) for c in dm.codes]
    np.testing.assert_array_equal(rev.d[np.ix_(idx, idx)], dm.d)


def test_matrix_two_and_degenerate(rng):
    a, b = rng.normal(size=200), rng.normal(size=200)
    dm = distance_matrix({"A": a, "B": b, "C": np.full(200, 0.1)}, bins=30)
    assert dm.codes == ["A", "B"] and dm.excluded == ["C"]
    assert dm.d[0, 1] == pytest.approx(similarity_distance(a, b, 30))
    with pytest.raises(DegenerateError):
        distance_matrix({"A": a, "C": np.zeros(5)})
    with pytest.raises(ValueError):
        distance_matrix({"A": a, "B": b}, binning="bogus")


def test_matrix_csv_round_trip(rng, tmp_path):
    dm = distance_matrix(_returns(rng), bins=100)
    dm.to_csv(tmp_path / "d.csv")
    back = DistanceMatrix.from_csv(tmp_path / "d.csv")
    assert back.codes == dm.codes and np.array_equal(back.d, dm.d)
