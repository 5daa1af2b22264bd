"""Dense-matrix and distribution primitives shared by every statistic.

Symmetric matrices are plain (p, p) float arrays; anything returned from
here is symmetrized as (H + H') / 2.  The chi-square tail kernel is
self-contained (regularized incomplete gamma, series / continued-fraction
split) so that threshold calibration does not depend on external tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NotPositiveDefinite(ValueError):
    """Raised when a matrix that must be PD has a degenerate pivot."""


class SeriesTooShort(ValueError):
    """Raised when a draw series is no longer than the HAC lag window."""


@dataclass(frozen=True)
class HacConfig:
    """Bartlett-kernel long-run variance settings; lag_q defaults to 10."""

    lag_q: int = 10

    def __post_init__(self):
        if self.lag_q < 0:
            raise ValueError(f"lag_q must be nonnegative, got {self.lag_q}")


@dataclass(frozen=True)
class SeedSpec:
    """Reproducible RNG address: (base_seed, stream_id) -> one PCG64 stream.

    Identical pairs reproduce bit-identical draws on one platform; distinct
    stream_ids give statistically independent streams.
    """

    base_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must fit in 64 unsigned bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.base_seed, self.stream_id])

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence())

    def generators(self, n: int) -> list[np.random.Generator]:
        """n independent child generators, deterministic in (self, n)."""
        return [np.random.default_rng(s) for s in self.seed_sequence().spawn(n)]


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return (m + m.T) / 2.0


def check_symmetric(m: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.T).max() > rtol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return symmetrize(m)


def _vech_indices(p: int) -> tuple[np.ndarray, np.ndarray]:
    # column-major walk over the lower triangle: (0,0),(1,0),..,(p-1,0),(1,1),..
    rows = np.concatenate([np.arange(j, p) for j in range(p)])
    cols = np.repeat(np.arange(p), np.arange(p, 0, -1))
    return rows, cols


def vech(h: np.ndarray) -> np.ndarray:
    """Stack the lower triangle of a symmetric matrix, column by column."""
    h = check_symmetric(h)
    rows, cols = _vech_indices(h.shape[0])
    return h[rows, cols]


def vech_series(dev: np.ndarray) -> np.ndarray:
    """Row-wise vech of outer(dev_j, dev_j) for a J x p matrix of deviations.

    Returns the J x p(p+1)/2 series h^(j) = vech((x_j - xbar)(x_j - xbar)')
    without materializing the J outer products.
    """
    dev = np.asarray(dev, dtype=float)
    rows, cols = _vech_indices(dev.shape[1])
    return dev[:, rows] * dev[:, cols]


def duplication_map(p: int) -> np.ndarray:
    """0/1 matrix D (p^2 x p(p+1)/2) with D @ vech(H) = vec(H), vec column-major."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    rows, cols = _vech_indices(p)
    half_index = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(rows, cols))}
    d = np.zeros((p * p, p * (p + 1) // 2))
    for j in range(p):
        for i in range(p):
            k = half_index[(i, j)] if i >= j else half_index[(j, i)]
            d[j * p + i, k] = 1.0
    return d


def newey_west(series: np.ndarray, cfg: HacConfig = HacConfig()) -> np.ndarray:
    """Bartlett-weighted long-run covariance of the mean of a J x k series.

    Returns (1/J) [Omega_0 + sum_{k=1..q} (1 - k/(q+1)) (Omega_k + Omega_k')]
    with Omega_k = (1/J) sum_{j>k} (h_j - hbar)(h_{j-k} - hbar)'.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    j_draws = series.shape[0]
    if j_draws <= cfg.lag_q:
        raise SeriesTooShort(
            f"need more than lag_q={cfg.lag_q} rows, got {j_draws}"
        )
    dev = series - series.mean(axis=0)
    acc = dev.T @ dev / j_draws
    for k in range(1, cfg.lag_q + 1):
        omega_k = dev[k:].T @ dev[:-k] / j_draws
        acc += (1.0 - k / (cfg.lag_q + 1.0)) * (omega_k + omega_k.T)
    return symmetrize(acc / j_draws)


def cholesky_pd(h: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Lower Cholesky factor; NotPositiveDefinite on any degenerate pivot."""
    h = check_symmetric(h)
    max_diag = float(np.max(np.diag(h))) if h.size else 0.0
    if max_diag <= 0.0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        lower = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(lower) ** 2
    if np.any(pivots <= rtol * max_diag):
        raise NotPositiveDefinite(
            f"pivot ratio {pivots.min() / max_diag:.3e} below {rtol:.0e}"
        )
    return lower


def sym_inverse(h: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric PD matrix; raises rather than pseudo-inverting."""
    h = check_symmetric(h)
    cholesky_pd(h)
    inv = np.linalg.solve(h, np.eye(h.shape[0]))
    return symmetrize(inv)


def quad_form_inv(h: np.ndarray, x: np.ndarray) -> float:
    """x' H^{-1} x for symmetric PD H, via the Cholesky factor."""
    lower = cholesky_pd(h)
    z = np.linalg.solve(lower, np.asarray(x, dtype=float))
    return float(z @ z)


# --- regularized incomplete gamma and the chi-square tail --------------------

_GAMMA_EPS = 1e-15
_GAMMA_ITMAX = 400


def _gamma_p_series(a: float, x: float) -> float:
    # lower tail P(a, x) by power series, for x < a + 1
    if x <= 0.0:
        return 0.0
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # upper tail Q(a, x) by Lentz continued fraction, for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0.0:
        raise ValueError("shape a must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(_gamma_p_series(a, x), 1.0)
    return max(1.0 - _gamma_q_contfrac(a, x), 0.0)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise ValueError("shape a must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return max(1.0 - _gamma_p_series(a, x), 0.0)
    return min(_gamma_q_contfrac(a, x), 1.0)


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability P(chi2(df) > x)."""
    if df < 1:
        raise ValueError("df must be a positive integer")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    return gamma_q(df / 2.0, x / 2.0)


def chi2_quantile(prob: float, df: int) -> float:
    """Inverse of the chi2 CDF: chi2_sf(result, df) == 1 - prob within 1e-8."""
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie strictly between 0 and 1")
    target = 1.0 - prob  # upper-tail mass at the quantile
    lo, hi = 0.0, float(df) + 10.0
    while chi2_sf(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)
