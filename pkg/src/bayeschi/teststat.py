"""Posterior-draw test statistics, their numerical standard errors, and reports.

The point-null statistic is p + tr(A Hhat^{-1}) with A the outer product of
(posterior mean - null value) and Hhat the 1/J-scaled draw covariance of the
tested block; the linear-restriction version is m + tr(A (R Hhat R')^{-1})
with Hhat over all columns.  Null calibration: statistic - df is chi2(df), so
thresholds are df + chi2_quantile(1 - level, df).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statcore import (
    HacConfig,
    chi2_quantile,
    chi2_sf,
    duplication_map,
    newey_west,
    quad_form_inv,
    sym_inverse,
    vech_series,
)


class DimensionMismatch(ValueError):
    """Selector/theta0/R/r shapes inconsistent with the draw matrix."""


class RankDeficientR(ValueError):
    """Restriction matrix R does not have full row rank."""


@dataclass(frozen=True)
class DrawMatrix:
    """Named J x d matrix of posterior draws, row j = one retained draw."""

    names: tuple[str, ...]
    draws: np.ndarray

    def __init__(self, names, draws):
        names = tuple(str(n) for n in names)
        draws = np.asarray(draws, dtype=float)
        if draws.ndim != 2:
            raise DimensionMismatch(f"draws must be 2-D, got shape {draws.shape}")
        if draws.shape[0] < 2:
            raise DimensionMismatch("need at least 2 draws")
        if draws.shape[1] < 1 or draws.shape[1] != len(names):
            raise DimensionMismatch(
                f"{len(names)} names for {draws.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise DimensionMismatch("parameter names must be unique")
        if not np.all(np.isfinite(draws)):
            raise DimensionMismatch("draws contain non-finite entries")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "draws", draws)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    def indices_of(self, names) -> list[int]:
        try:
            return [self.names.index(str(n)) for n in names]
        except ValueError as exc:
            raise DimensionMismatch(f"unknown parameter name: {exc}") from exc

    def select(self, names) -> "DrawMatrix":
        idx = self.indices_of(names)
        return DrawMatrix([self.names[i] for i in idx], self.draws[:, idx])


@dataclass(frozen=True)
class PointNull:
    """H0: theta = theta0 on the selected draw columns."""

    selector: tuple[int, ...]
    theta0: np.ndarray

    def __init__(self, selector, theta0):
        selector = tuple(int(i) for i in selector)
        theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
        if len(set(selector)) != len(selector) or not selector:
            raise DimensionMismatch("selector indices must be distinct, nonempty")
        if theta0.shape != (len(selector),):
            raise DimensionMismatch("theta0 length must match the selector")
        object.__setattr__(self, "selector", selector)
        object.__setattr__(self, "theta0", theta0)


@dataclass(frozen=True)
class Linear:
    """H0: R theta = r with R full row rank, m <= d."""

    R: np.ndarray
    r: np.ndarray

    def __init__(self, R, r):
        R = np.atleast_2d(np.asarray(R, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if R.shape[0] != r.shape[0]:
            raise DimensionMismatch("R row count must match len(r)")
        if R.shape[0] > R.shape[1]:
            raise RankDeficientR("more restrictions than parameters")
        _check_full_row_rank(R)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "r", r)


RestrictionSpec = PointNull | Linear


def _check_full_row_rank(R: np.ndarray, tol: float = 1e-10) -> None:
    sv = np.linalg.svd(R, compute_uv=False)
    if sv.size == 0 or sv[-1] <= tol * max(sv[0], 1.0):
        raise RankDeficientR("restriction matrix is rank deficient")


def _check_selector(draws: DrawMatrix, selector, theta0) -> PointNull:
    spec = PointNull(selector, theta0)
    if any(i < 0 or i >= draws.dim for i in spec.selector):
        raise DimensionMismatch("selector index out of range")
    return spec


def _draw_cov(dev: np.ndarray) -> np.ndarray:
    # 1/J divisor, matching the Hhat of the estimator (not 1/(J-1))
    return dev.T @ dev / dev.shape[0]


def point_null_statistic(draws: DrawMatrix, selector, theta0) -> float:
    """p + tr(A Hhat^{-1}) for H0: theta = theta0 on the selected columns."""
    spec = _check_selector(draws, selector, theta0)
    sub = draws.draws[:, list(spec.selector)]
    mean = sub.mean(axis=0)
    hhat = _draw_cov(sub - mean)
    return len(spec.selector) + quad_form_inv(hhat, mean - spec.theta0)


def point_null_nse(
    draws: DrawMatrix, selector, theta0, cfg: HacConfig = HacConfig()
) -> float:
    """Delta-method numerical standard error of the point-null statistic.

    The randomness is carried by hhat = vech(Hhat); the gradient is
    -vec(Hhat^{-1} A Hhat^{-1})' D_p and Var(hhat) is the Newey-West
    long-run covariance of the per-draw series vech(H^(j)).
    """
    spec = _check_selector(draws, selector, theta0)
    sub = draws.draws[:, list(spec.selector)]
    p = sub.shape[1]
    mean = sub.mean(axis=0)
    dev = sub - mean
    hhat = _draw_cov(dev)
    hinv = sym_inverse(hhat)
    delta = mean - spec.theta0
    a = np.outer(delta, delta)
    grad = -(hinv @ a @ hinv).reshape(-1, order="F") @ duplication_map(p)
    var_h = newey_west(vech_series(dev), cfg)
    return float(np.sqrt(max(grad @ var_h @ grad, 0.0)))


def restriction_statistic(draws: DrawMatrix, R, r) -> float:
    """m + tr(A (R Hhat R')^{-1}) for H0: R theta = r, Hhat over all columns."""
    spec = Linear(R, r)
    if spec.R.shape[1] != draws.dim:
        raise DimensionMismatch("R column count must match the draw dimension")
    mean = draws.draws.mean(axis=0)
    hhat = _draw_cov(draws.draws - mean)
    w = spec.R @ hhat @ spec.R.T
    return spec.R.shape[0] + quad_form_inv(w, spec.R @ mean - spec.r)


def restriction_nse(
    draws: DrawMatrix, R, r, cfg: HacConfig = HacConfig()
) -> float:
    """Delta-method NSE of the restriction statistic.

    Gradient -vec(A')' [(RHR')^{-1} x (RHR')^{-1}] (R x R) dH/dh collapses to
    -vec(R' W^{-1} A W^{-1} R)' D_d, applied to the Newey-West covariance of
    the full d-dimensional vech series.
    """
    spec = Linear(R, r)
    if spec.R.shape[1] != draws.dim:
        raise DimensionMismatch("R column count must match the draw dimension")
    mean = draws.draws.mean(axis=0)
    dev = draws.draws - mean
    hhat = _draw_cov(dev)
    w = spec.R @ hhat @ spec.R.T
    winv = sym_inverse(w)
    delta = spec.R @ mean - spec.r
    a = np.outer(delta, delta)
    inner = spec.R.T @ winv @ a @ winv @ spec.R
    grad = -inner.reshape(-1, order="F") @ duplication_map(draws.dim)
    var_h = newey_west(vech_series(dev), cfg)
    return float(np.sqrt(max(grad @ var_h @ grad, 0.0)))


def wald_statistic(estimate, cov, spec: RestrictionSpec) -> float:
    """Frequentist Wald quadratic form from a point estimate and covariance.

    A zero discrepancy returns exactly 0 without touching the covariance, so
    degenerate fits (zero-noise data) still satisfy the estimate = null case.
    """
    estimate = np.atleast_1d(np.asarray(estimate, dtype=float))
    cov = np.asarray(cov, dtype=float)
    if isinstance(spec, PointNull):
        idx = list(spec.selector)
        if max(idx) >= estimate.shape[0]:
            raise DimensionMismatch("selector index out of range for estimate")
        delta = estimate[idx] - spec.theta0
        if not np.any(delta):
            return 0.0
        return quad_form_inv(cov[np.ix_(idx, idx)], delta)
    if spec.R.shape[1] != estimate.shape[0]:
        raise DimensionMismatch("R column count must match the estimate")
    delta = spec.R @ estimate - spec.r
    if not np.any(delta):
        return 0.0
    return quad_form_inv(spec.R @ cov @ spec.R.T, delta)


@dataclass(frozen=True)
class TestReport:
    """Decision summary; reject iff statistic > threshold (ties accept)."""

    statistic: float
    df: int
    nse: float | None
    p_value: float
    threshold: float
    reject: bool
    level: float

    def lines(self) -> list[str]:
        out = [
            f"statistic = {self.statistic:.6g}",
            f"df        = {self.df}",
        ]
        if self.nse is not None:
            out.append(f"nse       = {self.nse:.6g}")
        out += [
            f"p-value   = {self.p_value:.6g}",
            f"threshold = {self.threshold:.6g} (level {self.level:g})",
            f"decision  = {'reject H0' if self.reject else 'accept H0'}",
        ]
        return out


def make_report(
    statistic: float, df: int, nse: float | None = None, level: float = 0.05
) -> TestReport:
    """Calibrated accept/reject report for a statistic with null law df + chi2(df)."""
    if statistic < 0.0:
        raise ValueError("statistic must be nonnegative")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    if df < 1:
        raise ValueError("df must be a positive integer")
    threshold = df + chi2_quantile(1.0 - level, df)
    p_value = chi2_sf(max(statistic - df, 0.0), df)
    return TestReport(
        statistic=float(statistic),
        df=int(df),
        nse=None if nse is None else float(nse),
        p_value=p_value,
        threshold=threshold,
        reject=bool(statistic > threshold),
        level=float(level),
    )
