"""Closed forms for testing the mean of a normal sample with known variance.

With prior theta ~ N(mu0, tau2) and H0: theta = 0,

    T      = s2*tau2/(s2 + n*tau2) * (n*ybar/s2 + mu0/tau2)^2 + 1
    2logBF = same quadratic + log(s2/(s2 + n*tau2))
    Wald   = n*ybar^2/s2

T - 1 tends to Wald as tau2 grows (vague prior), while 2logBF diverges to
-infinity: the Bayes-factor pathology this statistic avoids.  All three are
exact, no sampling involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormalMeanSetup:
    """n observations, sample mean ybar, known variance sigma2, prior N(mu0, tau2)."""

    n: int
    ybar: float
    sigma2: float
    mu0: float = 0.0
    tau2: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.sigma2 <= 0.0 or self.tau2 <= 0.0:
            raise ValueError("sigma2 and tau2 must be positive")


def _quadratic_term(s: NormalMeanSetup) -> float:
    # written as sigma2/(sigma2/tau2 + n) * (...) so tau2 = inf is exact
    coef = s.sigma2 / (s.sigma2 / s.tau2 + s.n)
    inner = s.n * s.ybar / s.sigma2 + s.mu0 / s.tau2
    return coef * inner * inner


def closed_form_T(s: NormalMeanSetup) -> float:
    return _quadratic_term(s) + 1.0


def closed_form_2logBF(s: NormalMeanSetup) -> float:
    return _quadratic_term(s) - math.log1p(s.n * s.tau2 / s.sigma2)


def closed_form_wald(s: NormalMeanSetup) -> float:
    return s.n * s.ybar * s.ybar / s.sigma2


def lindley_limit_check(s: NormalMeanSetup, tau2_grid) -> dict[str, np.ndarray]:
    """T and 2logBF along an increasing tau2 grid, holding (n, ybar, mu0) fixed.

    As tau2 grows, T approaches Wald + 1 while 2logBF keeps falling.
    """
    tau2_grid = np.asarray(tau2_grid, dtype=float)
    if tau2_grid.ndim != 1 or np.any(np.diff(tau2_grid) <= 0.0):
        raise ValueError("tau2_grid must be strictly increasing")
    t_vals = np.empty_like(tau2_grid)
    bf_vals = np.empty_like(tau2_grid)
    for k, tau2 in enumerate(tau2_grid):
        setup = NormalMeanSetup(s.n, s.ybar, s.sigma2, s.mu0, float(tau2))
        t_vals[k] = closed_form_T(setup)
        bf_vals[k] = closed_form_2logBF(setup)
    return {
        "tau2": tau2_grid,
        "T": t_vals,
        "two_log_bf": bf_vals,
        "wald": np.full_like(tau2_grid, closed_form_wald(s)),
    }


def expansion_check(s: NormalMeanSetup) -> float:
    """Residual of T against its large-n expansion.

    Expansion: 1 + n*ybar^2/s2 + 2*ybar*mu0/tau2 - ybar^2/tau2
    + (mu0/tau2)^2 * s2/n.  With ybar shrinking like n^{-1/2} the residual
    decays like n^{-3/2}; exactly zero when mu0 = 0 and 1/tau2 = 0.
    """
    approx = (
        1.0
        + s.n * s.ybar**2 / s.sigma2
        + 2.0 * s.ybar * s.mu0 / s.tau2
        - s.ybar**2 / s.tau2
        + (s.mu0 / s.tau2) ** 2 * s.sigma2 / s.n
    )
    return closed_form_T(s) - approx
