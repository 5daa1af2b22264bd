"""Conjugate Normal-Inverse-Gamma linear regression kit.

Prior beta | s2 ~ N(mu0, s2*V0), s2 ~ IG(a, b) (density ~ x^{-(a+1)} e^{-b/x}).
The posterior is NIG with

    V* = (V0^{-1} + X'X)^{-1},   mu* = V* (V0^{-1} mu0 + X'y),
    v  = 2a + n,                 s   = b + (mu0'V0^{-1}mu0 + y'y - mu*'V*^{-1}mu*)/2,

so beta | y ~ t(mu*, 2sV*/v, v) and the posterior-draw test statistic has the
exact closed form p + (v-2)/(2s) (mu*_sel - beta0)' Vsel*^{-1} (mu*_sel - beta0).
The exact sampler and the OLS/Wald comparator validate the MCMC pathway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statcore import SeedSpec, cholesky_pd, quad_form_inv, sym_inverse, symmetrize
from .teststat import (
    DimensionMismatch,
    DrawMatrix,
    Linear,
    RankDeficientR,
    RestrictionSpec,
    wald_statistic,
)


@dataclass(frozen=True)
class NigPrior:
    mu0: np.ndarray
    V0: np.ndarray
    a: float
    b: float

    def __init__(self, mu0, V0, a, b):
        mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
        V0 = symmetrize(np.asarray(V0, dtype=float))
        if V0.shape != (mu0.size, mu0.size):
            raise DimensionMismatch("V0 shape must match mu0")
        cholesky_pd(V0)
        if a <= 0.0 or b <= 0.0:
            raise ValueError("a and b must be positive")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "V0", V0)
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))

    @property
    def dim(self) -> int:
        return self.mu0.size


def table2_prior(d: int = 4) -> NigPrior:
    """The harness default: mu0 = 0, V0 = 1000 I, a = b = 1e-4."""
    return NigPrior(np.zeros(d), 1000.0 * np.eye(d), 1e-4, 1e-4)


@dataclass(frozen=True)
class NigPosterior:
    mu_star: np.ndarray
    V_star: np.ndarray
    v: float
    s: float

    def __init__(self, mu_star, V_star, v, s):
        mu_star = np.atleast_1d(np.asarray(mu_star, dtype=float))
        V_star = symmetrize(np.asarray(V_star, dtype=float))
        cholesky_pd(V_star)
        if s <= 0.0:
            raise ValueError("s must be positive")
        object.__setattr__(self, "mu_star", mu_star)
        object.__setattr__(self, "V_star", V_star)
        object.__setattr__(self, "v", float(v))
        object.__setattr__(self, "s", float(s))

    @property
    def dim(self) -> int:
        return self.mu_star.size

    def precision_scale(self) -> float:
        """(v - 2) / (2s), the inverse of the posterior beta covariance scale."""
        if self.v <= 2.0:
            raise ValueError("posterior variance undefined for v <= 2")
        return (self.v - 2.0) / (2.0 * self.s)


@dataclass(frozen=True)
class RegressionData:
    X: np.ndarray
    y: np.ndarray

    def __init__(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n, d = X.shape
        if y.shape != (n,):
            raise DimensionMismatch("y length must match the rows of X")
        if n <= d:
            raise DimensionMismatch("need n > d observations")
        if not np.allclose(X[:, 0], 1.0):
            raise DimensionMismatch("first design column must be the intercept")
        if np.linalg.matrix_rank(X) < d:
            raise RankDeficientR("design matrix is rank deficient")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)


def posterior_nig(data: RegressionData, prior: NigPrior) -> NigPosterior:
    if prior.dim != data.X.shape[1]:
        raise DimensionMismatch("prior dimension must match the design")
    v0_inv = sym_inverse(prior.V0)
    m = symmetrize(v0_inv + data.X.T @ data.X)
    v_star = sym_inverse(m)
    mu_star = v_star @ (v0_inv @ prior.mu0 + data.X.T @ data.y)
    s = prior.b + 0.5 * (
        prior.mu0 @ v0_inv @ prior.mu0
        + data.y @ data.y
        - mu_star @ m @ mu_star
    )
    assert s > 0.0, "scale s is positive by construction"
    return NigPosterior(mu_star, v_star, 2.0 * prior.a + data.y.size, s)


def _select_block(post: NigPosterior, selector) -> tuple[list[int], np.ndarray]:
    idx = [int(i) for i in selector]
    if len(set(idx)) != len(idx) or not idx:
        raise DimensionMismatch("selector indices must be distinct, nonempty")
    if any(i < 0 or i >= post.dim for i in idx):
        raise DimensionMismatch("selector index out of range")
    return idx, post.V_star[np.ix_(idx, idx)]


def analytic_T_point(post: NigPosterior, selector, beta0) -> float:
    """Exact p + (v-2)/(2s) (mu*_sel - beta0)' Vsel*^{-1} (mu*_sel - beta0)."""
    idx, v_block = _select_block(post, selector)
    beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))
    if beta0.shape != (len(idx),):
        raise DimensionMismatch("beta0 length must match the selector")
    delta = post.mu_star[idx] - beta0
    return len(idx) + post.precision_scale() * quad_form_inv(v_block, delta)


def analytic_T_restriction(post: NigPosterior, R, r) -> float:
    """Exact m + (v-2)/(2s) (R mu* - r)' (R V* R')^{-1} (R mu* - r)."""
    spec = Linear(R, r)
    if spec.R.shape[1] != post.dim:
        raise DimensionMismatch("R column count must match the posterior")
    delta = spec.R @ post.mu_star - spec.r
    w = spec.R @ post.V_star @ spec.R.T
    return spec.R.shape[0] + post.precision_scale() * quad_form_inv(w, delta)


def sample_posterior(
    post: NigPosterior, J: int, seed: SeedSpec, names=None
) -> DrawMatrix:
    """Exact posterior draws: s2 ~ IG(v/2, s) then beta | s2 ~ N(mu*, s2 V*).

    Includes a sigma2 column; the beta marginal is t(mu*, 2sV*/v, v).
    """
    if J < 2:
        raise ValueError("need J >= 2 draws")
    rng = seed.generator()
    sigma2 = 1.0 / rng.gamma(post.v / 2.0, scale=1.0 / post.s, size=J)
    z = rng.standard_normal((J, post.dim))
    lower = cholesky_pd(post.V_star)
    betas = post.mu_star + (z @ lower.T) * np.sqrt(sigma2)[:, None]
    if names is None:
        names = [f"beta{i + 1}" for i in range(post.dim)]
    return DrawMatrix(list(names) + ["sigma2"], np.column_stack([betas, sigma2]))


def ols_wald(data: RegressionData, spec: RestrictionSpec) -> float:
    """Wald statistic from the MLE: beta_hat OLS, sigma2_hat = RSS/n."""
    xtx = data.X.T @ data.X
    beta_hat = np.linalg.solve(xtx, data.X.T @ data.y)
    resid = data.y - data.X @ beta_hat
    sigma2_hat = float(resid @ resid) / data.y.size
    cov = sigma2_hat * sym_inverse(xtx)
    return wald_statistic(beta_hat, cov, spec)


def simulate_design(n: int, gamma: float, seed: SeedSpec) -> RegressionData:
    """Size/power design: intercept + 3 standard-normal covariates,
    beta = (0.3, 0.2, 0.1*gamma, 0.5*gamma), noise sd 0.1."""
    if n < 5:
        raise ValueError("need n >= 5")
    rng = seed.generator()
    X = np.column_stack([np.ones(n), rng.standard_normal((n, 3))])
    beta = np.array([0.3, 0.2, 0.1 * gamma, 0.5 * gamma])
    y = X @ beta + 0.1 * rng.standard_normal(n)
    return RegressionData(X, y)


def true_beta(gamma: float) -> np.ndarray:
    return np.array([0.3, 0.2, 0.1 * gamma, 0.5 * gamma])


__all__ = [
    "NigPrior",
    "NigPosterior",
    "RegressionData",
    "analytic_T_point",
    "analytic_T_restriction",
    "ols_wald",
    "posterior_nig",
    "sample_posterior",
    "simulate_design",
    "table2_prior",
    "true_beta",
]
