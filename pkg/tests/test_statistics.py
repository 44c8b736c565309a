import numpy as np
import pytest
from scipy import stats

from rmtseason import (
    Observable,
    Period,
    SegmentMatrix,
    Transform,
    ValidationError,
    correlation_matrix,
    offdiag_summary,
    rank_pairs,
    summarize_elements,
)
from rmtseason.segmentation import standardize_rows
from rmtseason.spectral import CorrMatrix
from rmtseason.statistics import kolmogorov_sf, peak_time, upper_triangle

DAY = 86_400_000


def _matrix(rows):
    rows = standardize_rows(np.atleast_2d(rows))
    return SegmentMatrix(Period.DAY, Observable.LOG_RETURN, Transform.RAW, rows, 1_600_000_000_000 // DAY * DAY + np.arange(len(rows)) * DAY)


def test_identity_is_degenerate():
    s = offdiag_summary(CorrMatrix(np.eye(4), T=10))
    assert s.n == 6 and s.mean == 0 and s.stdev == 0
    assert s.degenerate and s.ks is None and s.jb is None
    assert np.sum(s.density * np.diff(s.edges)) == pytest.approx(1.0, abs=1e-9)


def test_small_k_rejected():
    with pytest.raises(ValidationError):
        offdiag_summary(CorrMatrix(np.eye(2), T=10))
    with pytest.raises(ValidationError):
        summarize_elements(np.arange(10.0), bins=1)


@pytest.mark.parametrize("x", [0.05, 0.3, 0.5, 0.8, 0.99, 1.0, 1.2, 1.63, 2.5, 4.0])
def test_kolmogorov_sf_matches_scipy(x):
    assert kolmogorov_sf(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-12)


def test_statistics_against_scipy(rng):
    x = rng.standard_t(7, 5000)
    s = summarize_elements(x, bins=40)
    assert s.n == 5000
    assert s.skewness == pytest.approx(stats.skew(x), rel=1e-10)
    assert s.excess_kurtosis == pytest.approx(stats.kurtosis(x), rel=1e-10)
    jb = stats.jarque_bera(x)
    assert s.jb.statistic == pytest.approx(jb.statistic, rel=1e-10)
    assert s.jb.p_value == pytest.approx(jb.pvalue, rel=1e-8, abs=1e-300)
    ks = stats.kstest(x, "norm", args=(x.mean(), x.std()))
    assert s.ks.statistic == pytest.approx(ks.statistic, rel=1e-10)
    assert np.sum(s.density * np.diff(s.edges)) == pytest.approx(1.0, abs=1e-9)


def test_normality_rates_small_sample():
    gauss_ok = heavy_rej = 0
    for seed in range(20):
        g = np.random.Generator(np.random.PCG64(seed))
        sg = summarize_elements(g.standard_normal(50_000))
        sh = summarize_elements(g.standard_t(5, 50_000))
        gauss_ok += sg.jb.p_value > 0.01 and sg.ks.p_value > 0.01
        heavy_rej += sh.jb.p_value < 0.01 and sh.ks.p_value < 0.01
    assert gauss_ok >= 18 and heavy_rej == 20


def test_moments_permutation_invariant(rng):
    rows = rng.standard_normal((30, 100))
    perm = rng.permutation(30)
    a = offdiag_summary(correlation_matrix(_matrix(rows)))
    b = offdiag_summary(correlation_matrix(_matrix(rows[perm])))
    assert (a.mean, a.stdev, a.skewness, a.excess_kurtosis) == (b.mean, b.stdev, b.skewness, b.excess_kurtosis)
    assert np.array_equal(a.density, b.density)


def test_single_pair():
    C = CorrMatrix(np.array([[1.0, 0.3], [0.3, 1.0]]), T=10)
    m = _matrix(np.random.default_rng(0).standard_normal((2, 10)))
    pairs = rank_pairs(m, C, 1)
    assert len(pairs) == 1 and pairs[0].value == 0.3
    assert pairs[0].label_a < pairs[0].label_b


def test_synchronized_spike_pair_ranks_first():
    g = np.random.Generator(np.random.PCG64(42))
    rows = g.standard_normal((20, 8640))
    rows[[4, 13], 4500] += 5.0 * 4  # one synchronized burst, amplified so one pair clearly leads
    m = _matrix(rows)
    pairs = rank_pairs(m, correlation_matrix(m), 5)
    assert (pairs[0].label_a, pairs[0].label_b) == (m.labels[4], m.labels[13])
    assert pairs[0].peak_index == 4500


def test_ranked_values_are_top_order_statistics(rng):
    for K in (3, 17, 60, 200):
        m = _matrix(rng.standard_normal((K, 64)))
        C = correlation_matrix(m)
        n = K * (K - 1) // 2
        top = min(n, 25)
        pairs = rank_pairs(m, C, top)
        vals = [p.value for p in pairs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        oracle = sorted(upper_triangle(C).tolist(), reverse=True)[:top]
        assert sorted(vals, reverse=True) == oracle
        assert all(-1 <= v <= 1 for v in vals)


def test_ties_broken_by_labels():
    C = CorrMatrix(np.array([[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]]), T=3)
    m = _matrix(np.random.default_rng(1).standard_normal((3, 3)))
    pairs = rank_pairs(m, C, 3)
    keys = [(p.label_a, p.label_b) for p in pairs]
    assert keys == sorted(keys)


def test_top_n_bounds():
    m = _matrix(np.random.default_rng(1).standard_normal((3, 8)))
    with pytest.raises(ValidationError):
        rank_pairs(m, correlation_matrix(m), 4)


def test_peak_time_formatting():
    assert peak_time(Period.DAY, 4500, 10) == "12:30:00"
    assert peak_time(Period.WEEK, 5 * 8640 + 4500, 10) == "Fri 12:30:00"
