import math

import numpy as np
import pytest
from scipy import integrate, stats

from bayeschi.statcore import (
    HacConfig,
    NotPositiveDefinite,
    SeedSpec,
    SeriesTooShort,
    chi2_quantile,
    chi2_sf,
    duplication_map,
    newey_west,
    sym_inverse,
    vech,
    vech_series,
)

RNG = np.random.default_rng(20240131)


def random_symmetric(p, rng=RNG):
    a = rng.standard_normal((p, p))
    return (a + a.T) / 2.0


def random_pd(p, rng=RNG):
    a = rng.standard_normal((p, p))
    return a @ a.T + p * np.eye(p)


# --- vech / duplication -------------------------------------------------------

def test_vech_1x1():
    assert vech(np.array([[1.0]])) == pytest.approx([1.0])


def test_vech_2x2_definition():
    assert vech(np.array([[1.0, 2.0], [2.0, 3.0]])).tolist() == [1.0, 2.0, 3.0]


def test_vech_3x3_reconstructs_vec():
    h = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    v = vech(h)
    assert v.shape == (6,)
    # brute-force: the duplication map must rebuild the column-major vec
    rebuilt = duplication_map(3) @ v
    assert rebuilt == pytest.approx(h.reshape(-1, order="F"))


def test_duplication_p1():
    assert duplication_map(1).tolist() == [[1.0]]


def test_duplication_p2_explicit():
    expected = np.array(
        [[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]], dtype=float
    )
    np.testing.assert_array_equal(duplication_map(2), expected)


@pytest.mark.parametrize("p", range(1, 9))
def test_duplication_property_random(p):
    d = duplication_map(p)
    assert set(np.unique(d)) <= {0.0, 1.0}
    for _ in range(100 if p == 3 else 10):
        h = random_symmetric(p)
        np.testing.assert_array_equal(d @ vech(h), h.reshape(-1, order="F"))


def test_vech_series_matches_outer_products():
    dev = RNG.standard_normal((50, 4))
    series = vech_series(dev)
    for j in (0, 17, 49):
        np.testing.assert_allclose(series[j], vech(np.outer(dev[j], dev[j])))


def test_vech_rejects_asymmetric():
    with pytest.raises(ValueError):
        vech(np.array([[1.0, 2.0], [0.0, 3.0]]))


# --- Newey-West ---------------------------------------------------------------

def nw_bruteforce(series, q):
    """Direct evaluation of the displayed estimator, double loop."""
    series = np.atleast_2d(series.T).T
    j_draws, k = series.shape
    mean = series.mean(axis=0)
    dev = series - mean
    omega0 = sum(np.outer(dev[j], dev[j]) for j in range(j_draws)) / j_draws
    acc = omega0.copy()
    for lag in range(1, q + 1):
        omega = sum(
            np.outer(dev[j], dev[j - lag]) for j in range(lag, j_draws)
        ) / j_draws
        acc += (1 - lag / (q + 1)) * (omega + omega.T)
    return acc / j_draws


def test_newey_west_constant_series_is_zero():
    series = np.ones((200, 3)) * np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(newey_west(series, HacConfig(10)), np.zeros((3, 3)))


def test_newey_west_lag0_is_sample_cov_of_mean():
    series = RNG.standard_normal((500, 2))
    got = newey_west(series, HacConfig(0))
    dev = series - series.mean(axis=0)
    expected = dev.T @ dev / 500 / 500
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_newey_west_matches_bruteforce_on_ar1():
    rng = np.random.default_rng(7)
    j = 10_000
    x = np.empty(j)
    x[0] = rng.standard_normal()
    for t in range(1, j):
        x[t] = 0.8 * x[t - 1] + rng.standard_normal()
    got = newey_west(x, HacConfig(10))
    expected = nw_bruteforce(x, 10)
    np.testing.assert_allclose(got, expected, rtol=1e-12)
    # HAC variance for positively correlated series exceeds the iid variance
    assert got[0, 0] > x.var() / j


def test_newey_west_short_series_raises():
    with pytest.raises(SeriesTooShort):
        newey_west(np.arange(10.0), HacConfig(10))


# --- symmetric PD inverse -----------------------------------------------------

def test_sym_inverse_identity():
    np.testing.assert_array_equal(sym_inverse(np.eye(3)), np.eye(3))


def test_sym_inverse_diagonal():
    np.testing.assert_allclose(
        sym_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), rtol=1e-15
    )


def test_sym_inverse_residual_random_pd():
    h = random_pd(5)
    inv = sym_inverse(h)
    assert np.abs(h @ inv - np.eye(5)).max() < 1e-10


def test_sym_inverse_conditioned_matrices():
    for _ in range(20):
        q, _ = np.linalg.qr(RNG.standard_normal((6, 6)))
        eigs = np.exp(RNG.uniform(0, np.log(1e6), size=6))
        h = (q * eigs) @ q.T
        inv = sym_inverse(h)
        assert np.abs(inv @ h - np.eye(6)).max() < 1e-10 * eigs.max() / eigs.min()


def test_sym_inverse_rejects_degenerate():
    h = np.diag([1.0, 0.0])  # a parameter held fixed
    with pytest.raises(NotPositiveDefinite):
        sym_inverse(h)
    with pytest.raises(NotPositiveDefinite):
        sym_inverse(np.array([[1.0, 1.0], [1.0, 1.0]]))


# --- chi-square kernel --------------------------------------------------------

def chi2_sf_quadrature(x, df):
    """Upper tail by numerical integration of the chi2 density."""
    pdf = lambda t: t ** (df / 2 - 1) * math.exp(-t / 2) / (
        2 ** (df / 2) * math.gamma(df / 2)
    )
    lower, _ = integrate.quad(pdf, 0, x, limit=200)
    return 1.0 - lower


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10])
def test_chi2_sf_at_zero(df):
    assert chi2_sf(0.0, df) == 1.0


def test_chi2_sf_standard_quantile():
    assert chi2_sf(3.841, 1) == pytest.approx(0.05, abs=5e-4)
    assert chi2_sf(3.841, 1) == pytest.approx(chi2_sf_quadrature(3.841, 1), abs=1e-9)


def test_chi2_sf_9999_percentile_of_two_df():
    # the calibration anchor: 99.99th percentile of chi2(2) is 18.42
    assert chi2_sf(18.42, 2) == pytest.approx(1e-4, abs=2e-5)
    assert chi2_sf(18.42, 2) == pytest.approx(chi2_sf_quadrature(18.42, 2), abs=1e-9)


@pytest.mark.parametrize("df", range(1, 11))
def test_chi2_sf_matches_scipy(df):
    for x in (0.1, 0.7, 1.5, 3.0, 7.7, 15.0, 40.0):
        assert chi2_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), abs=1e-10)


def test_chi2_sf_strictly_decreasing_and_complements():
    xs = np.linspace(0.0, 30.0, 121)
    vals = [chi2_sf(x, 3) for x in xs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    for x in (0.5, 2.0, 9.0):
        lower, _ = integrate.quad(lambda t: stats.chi2.pdf(t, 3), 0, x)
        assert chi2_sf(x, 3) + lower == pytest.approx(1.0, abs=1e-8)


def test_chi2_quantile_median_of_two_df():
    assert chi2_quantile(0.5, 2) == pytest.approx(2 * math.log(2), abs=1e-6)


def test_chi2_quantile_95_of_one_df():
    assert chi2_quantile(0.95, 1) == pytest.approx(3.841, abs=1e-3)


def test_chi2_quantile_9999_of_two_df():
    assert chi2_quantile(0.9999, 2) == pytest.approx(18.42, abs=0.01)


@pytest.mark.parametrize("df", range(1, 11))
def test_chi2_roundtrip(df):
    for prob in (0.01, 0.5, 0.9, 0.95, 0.99, 0.9999):
        x = chi2_quantile(prob, df)
        assert chi2_sf(x, df) == pytest.approx(1.0 - prob, abs=1e-8)


# --- seeded RNG contract ------------------------------------------------------

def test_seedspec_reproducible():
    a = SeedSpec(123, 4).generator().standard_normal(1000)
    b = SeedSpec(123, 4).generator().standard_normal(1000)
    np.testing.assert_array_equal(a, b)


def test_seedspec_streams_differ():
    a = SeedSpec(123, 0).generator().standard_normal(1000)
    b = SeedSpec(123, 1).generator().standard_normal(1000)
    assert not np.array_equal(a, b)


def test_seedspec_streams_uncorrelated():
    n = 100_000
    a = SeedSpec(9, 0).generator().standard_normal(n)
    b = SeedSpec(9, 1).generator().standard_normal(n)
    for lag in (0, 1, 5):
        x = a[lag:] if lag else a
        y = b[: n - lag] if lag else b
        corr = np.corrcoef(x, y)[0, 1]
        assert abs(corr) < 0.05


def test_seedspec_children_deterministic():
    g1 = SeedSpec(5, 2).generators(3)
    g2 = SeedSpec(5, 2).generators(3)
    for a, b in zip(g1, g2):
        np.testing.assert_array_equal(a.standard_normal(10), b.standard_normal(10))


def test_seedspec_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(0, -2)
    with pytest.raises(ValueError):
        HacConfig(-1)
