"""Chi-squared-calibrated Bayesian tests from MCMC posterior draws.

The core statistic for H0: theta = theta0 is p + tr(A Hhat^{-1}) computed
from the posterior draws alone (A the outer product of the posterior-mean
discrepancy, Hhat the 1/J draw covariance); statistic - p is chi2(p) under
the null.  Linear restrictions R theta = r, delta-method/Newey-West
numerical standard errors, exact conjugate model kits, a leverage SV
sampler, and seeded size/power harnesses round out the package.
"""

__version__ = "0.1.0"

from .statcore import (
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
)
from .teststat import (
    DimensionMismatch,
    DrawMatrix,
    Linear,
    PointNull,
    RankDeficientR,
    TestReport,
    make_report,
    point_null_nse,
    point_null_statistic,
    restriction_nse,
    restriction_statistic,
    wald_statistic,
)

__all__ = [
    "HacConfig",
    "NotPositiveDefinite",
    "SeedSpec",
    "SeriesTooShort",
    "chi2_quantile",
    "chi2_sf",
    "duplication_map",
    "newey_west",
    "sym_inverse",
    "vech",
    "DimensionMismatch",
    "DrawMatrix",
    "Linear",
    "PointNull",
    "RankDeficientR",
    "TestReport",
    "make_report",
    "point_null_nse",
    "point_null_statistic",
    "restriction_nse",
    "restriction_statistic",
    "wald_statistic",
    "__version__",
]
