"""Stochastic volatility with leverage: simulator, sampler, and rho = 0 tests.

Model: r_t = exp(h_t/2) eps_t, h_{t+1} = mu + phi (h_t - mu) + sigma eta_{t+1},
h_0 = mu, with corr(eps_t, eta_{t+1}) = rho (a return shock moves the next
period's volatility).  Conditioning on the path turns the return density into

    y_t | h_t, h_{t+1} ~ N( (rho/sigma) e^{h_t/2} (h_{t+1} - mu - phi(h_t - mu)),
                            e^{h_t} (1 - rho^2) ),

which needs h_{T+1}; the sampler therefore carries T+1 latent states.

The sampler is MH-within-Gibbs: single-site Gaussian random-walk moves on each
h_t (swept as the even/odd checkerboard, whose sites are conditionally
independent), and scalar random-walk moves on mu, atanh(phi), log sigma2,
atanh(rho).  Proposal scales self-tune toward 0.3 acceptance during burn-in
and stay frozen afterwards, so retained draws come from a fixed kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statcore import HacConfig, SeedSpec, SeriesTooShort, newey_west
from .teststat import DrawMatrix, TestReport, make_report

_LOG_2PI = math.log(2.0 * math.pi)
_TUNE_WINDOW = 50
_PARAM_NAMES = ("mu", "phi", "sigma2", "rho")


class ChainDiverged(RuntimeError):
    """The sampler hit a non-finite log-density it could not recover from."""


class ConfigInvalid(ValueError):
    """MCMC configuration or input series unusable."""


class MissingLatentPaths(ValueError):
    """Operation needs stored h paths but the chain kept none."""


@dataclass(frozen=True)
class LsvParams:
    mu: float
    phi: float
    sigma2: float
    rho: float

    def __post_init__(self):
        if not abs(self.phi) < 1.0:
            raise ValueError("phi must lie in (-1, 1)")
        if not abs(self.rho) < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class LsvPriors:
    """mu ~ N(mu_mean, mu_var); phi via Beta(a, b) on (phi+1)/2 (or on phi
    itself when phi_on_unit_interval); 1/sigma2 ~ Gamma(shape, rate);
    rho ~ U(rho_lo, rho_hi)."""

    mu_mean: float = 0.0
    mu_var: float = 100.0
    phi_beta_a: float = 1.0
    phi_beta_b: float = 1.0
    sig_gamma_a: float = 0.001
    sig_gamma_b: float = 0.001
    rho_lo: float = -1.0
    rho_hi: float = 1.0
    phi_on_unit_interval: bool = False

    def __post_init__(self):
        if self.mu_var <= 0.0:
            raise ValueError("mu_var must be positive")
        if min(self.phi_beta_a, self.phi_beta_b) <= 0.0:
            raise ValueError("Beta hyperparameters must be positive")
        if min(self.sig_gamma_a, self.sig_gamma_b) <= 0.0:
            raise ValueError("Gamma hyperparameters must be positive")
        if not -1.0 <= self.rho_lo < self.rho_hi <= 1.0:
            raise ValueError("need -1 <= rho_lo < rho_hi <= 1")


def _default_scales() -> dict[str, float]:
    return {"h": 0.6, "mu": 0.2, "phi": 0.4, "sigma2": 0.4, "rho": 0.4}


@dataclass(frozen=True)
class McmcConfig:
    """latent_sweeps > 1 runs several full checkerboard passes over the path
    per stored iteration; the slow direction of this sampler is the shock
    pattern the leverage parameter reads off the path, and it decorrelates
    roughly linearly in the number of sweeps."""

    n_iter: int = 6000
    burn_in: int = 2000
    thin: int = 2
    rw_scales: dict[str, float] = field(default_factory=_default_scales)
    seed: SeedSpec = SeedSpec(0)
    latent_sweeps: int = 3

    def __post_init__(self):
        if self.n_iter < 1 or self.burn_in < 1 or self.thin < 1:
            raise ConfigInvalid("n_iter, burn_in and thin must be positive")
        if self.burn_in >= self.n_iter:
            raise ConfigInvalid("burn_in must be smaller than n_iter")
        if self.latent_sweeps < 1:
            raise ConfigInvalid("latent_sweeps must be positive")
        scales = dict(_default_scales(), **dict(self.rw_scales))
        if any(v <= 0.0 for v in scales.values()):
            raise ConfigInvalid("proposal scales must be positive")
        object.__setattr__(self, "rw_scales", scales)

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass(frozen=True)
class LsvChain:
    """Retained draws (columns mu, phi, sigma2, rho), optional h paths
    (J x (T+1)), and post-burn-in acceptance fractions per block."""

    params: DrawMatrix
    h_draws: np.ndarray | None
    accept_rates: dict[str, float]

    def column(self, name: str) -> np.ndarray:
        return self.params.draws[:, self.params.names.index(name)]


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return seed.generator()


def simulate_lsv(params: LsvParams, T: int, seed) -> np.ndarray:
    """Generate r_1..r_T from the leverage SV model, started at h_0 = mu."""
    if T < 10:
        raise ValueError("need T >= 10")
    rng = _as_generator(seed)
    eta = rng.standard_normal(T + 1)
    omega = rng.standard_normal(T)
    h = np.empty(T + 1)
    prev = params.mu  # h_0
    for t in range(T + 1):
        prev = params.mu + params.phi * (prev - params.mu) + params.sigma * eta[t]
        h[t] = prev
    eps = math.sqrt(1.0 - params.rho**2) * omega + params.rho * eta[1:]
    return np.exp(0.5 * h[:T]) * eps


def _term_vectors(y, h, mu, phi, sigma2, rho):
    """Per-term log densities: obs[t] for y_{t+1}, trans[j] for h state j.

    h has length T+1 (states h_1..h_{T+1}); trans[j] conditions state j on
    state j-1 (state -1 is h_0 = mu).  The obs variance e^{h_t}(1 - rho^2)
    is folded into the residual as y e^{-h_t/2} to avoid overflow.
    """
    sigma = math.sqrt(sigma2)
    prev = np.empty_like(h)
    prev[0] = mu
    prev[1:] = h[:-1]
    resid = h - mu - phi * (prev - mu)
    trans = -0.5 * (_LOG_2PI + math.log(sigma2)) - resid**2 / (2.0 * sigma2)
    one_m_rho2 = (1.0 - rho) * (1.0 + rho)
    z = y * np.exp(-0.5 * h[:-1]) - (rho / sigma) * resid[1:]
    obs = (
        -0.5 * (_LOG_2PI + math.log(one_m_rho2))
        - 0.5 * h[:-1]
        - z**2 / (2.0 * one_m_rho2)
    )
    return obs, trans


def complete_loglik(returns, h, params: LsvParams) -> float:
    """log p(y | h, params) + log p(h | params) for a T+1 state path."""
    y = np.asarray(returns, dtype=float)
    h = np.asarray(h, dtype=float)
    if h.shape != (y.size + 1,):
        raise ValueError("path must hold T+1 states for T returns")
    obs, trans = _term_vectors(
        y, h, params.mu, params.phi, params.sigma2, params.rho
    )
    return float(obs.sum() + trans.sum())


def _log_prior_z(z, priors: LsvPriors, leverage: bool) -> float:
    """Log prior density in the sampling coordinates (mu, atanh(phi),
    log sigma2, atanh(rho)), transform Jacobians included."""
    mu, a_phi, u, a_rho = z
    phi = math.tanh(a_phi)
    one_m_phi2 = (1.0 - phi) * (1.0 + phi)
    if one_m_phi2 <= 0.0:
        return -math.inf
    lp = -0.5 * (_LOG_2PI + math.log(priors.mu_var)) - (
        mu - priors.mu_mean
    ) ** 2 / (2.0 * priors.mu_var)
    log_beta = (
        math.lgamma(priors.phi_beta_a)
        + math.lgamma(priors.phi_beta_b)
        - math.lgamma(priors.phi_beta_a + priors.phi_beta_b)
    )
    if priors.phi_on_unit_interval:
        if phi <= 0.0:
            return -math.inf
        lp += (
            (priors.phi_beta_a - 1.0) * math.log(phi)
            + (priors.phi_beta_b - 1.0) * math.log1p(-phi)
            - log_beta
        )
    else:
        x = 0.5 * (phi + 1.0)
        lp += (
            (priors.phi_beta_a - 1.0) * math.log(x)
            + (priors.phi_beta_b - 1.0) * math.log1p(-x)
            - log_beta
            - math.log(2.0)
        )
    lp += math.log(one_m_phi2)  # d phi / d a_phi
    c, d = priors.sig_gamma_a, priors.sig_gamma_b
    lp += c * math.log(d) - math.lgamma(c) - c * u - d * math.exp(-u)
    if leverage:
        rho = math.tanh(a_rho)
        one_m_rho2 = (1.0 - rho) * (1.0 + rho)
        if not priors.rho_lo < rho < priors.rho_hi or one_m_rho2 <= 0.0:
            return -math.inf
        lp += math.log(one_m_rho2) - math.log(priors.rho_hi - priors.rho_lo)
    return lp


def _params_from_z(z, leverage: bool) -> LsvParams:
    mu, a_phi, u, a_rho = z
    return LsvParams(
        mu=mu,
        phi=math.tanh(a_phi),
        sigma2=math.exp(u),
        rho=math.tanh(a_rho) if leverage else 0.0,
    )


def _log_post_z(y, h, z, priors, leverage) -> float:
    lp = _log_prior_z(z, priors, leverage)
    if not math.isfinite(lp):
        return -math.inf
    return lp + complete_loglik(y, h, _params_from_z(z, leverage))


def _update_sites(y, h, params, sites, scale, rng):
    """One checkerboard half-sweep of single-site random-walk moves."""
    prop = h.copy()
    prop[sites] = h[sites] + scale * rng.standard_normal(sites.size)
    ob_c, tr_c = _term_vectors(y, h, params.mu, params.phi, params.sigma2, params.rho)
    ob_p, tr_p = _term_vectors(y, prop, params.mu, params.phi, params.sigma2, params.rho)
    dtr = tr_p - tr_c
    dob = ob_p - ob_c
    delta = dtr.copy()
    delta[:-1] += dtr[1:]
    delta[:-1] += dob
    delta[1:] += dob
    accept = np.log(rng.random(sites.size)) < delta[sites]
    keep = sites[accept]
    h[keep] = prop[keep]
    return int(accept.sum())


def fit_lsv(
    returns,
    priors: LsvPriors = LsvPriors(),
    cfg: McmcConfig = McmcConfig(),
    leverage: bool = True,
    store_paths: bool = False,
) -> LsvChain:
    """Posterior sampler; leverage=False pins rho = 0 (the null-model fit)."""
    y = np.asarray(returns, dtype=float)
    if y.ndim != 1 or y.size < 50:
        raise ConfigInvalid("need a 1-D return series with at least 50 points")
    if not np.all(np.isfinite(y)):
        raise ConfigInvalid("returns contain non-finite values")
    if cfg.n_retained < 2:
        raise ConfigInvalid("config retains fewer than 2 draws")
    rng = _as_generator(cfg.seed)
    return _run_chain(y, priors, cfg, leverage, store_paths, rng)


def _run_chain(y, priors, cfg, leverage, store_paths, rng) -> LsvChain:
    n = y.size
    m2 = float(np.mean(y**2))
    if m2 <= 0.0:
        raise ConfigInvalid("returns are identically zero")
    level = math.log(m2)
    h = np.full(n + 1, level)
    rho0 = 0.5 * (max(priors.rho_lo, -0.999) + min(priors.rho_hi, 0.999))
    z = np.array([level, math.atanh(0.95), math.log(0.05), math.atanh(rho0)])
    log_post = _log_post_z(y, h, z, priors, leverage)
    if not math.isfinite(log_post):
        raise ChainDiverged("initial state has non-finite log posterior")

    sites = np.arange(n + 1)
    evens, odds = sites[::2], sites[1::2]
    scales = dict(cfg.rw_scales)
    blocks = ["mu", "phi", "sigma2"] + (["rho"] if leverage else [])
    z_index = {"mu": 0, "phi": 1, "sigma2": 2, "rho": 3}
    tune_acc = {b: 0 for b in ["h"] + blocks}
    tune_tot = {b: 0 for b in ["h"] + blocks}
    post_acc = {b: 0 for b in ["h"] + blocks}
    post_tot = {b: 0 for b in ["h"] + blocks}

    retained = np.empty((cfg.n_retained, 4))
    paths = np.empty((cfg.n_retained, n + 1)) if store_paths else None
    kept = 0

    for sweep in range(cfg.n_iter):
        tuning = sweep < cfg.burn_in
        acc_counter = tune_acc if tuning else post_acc
        tot_counter = tune_tot if tuning else post_tot
        params = _params_from_z(z, leverage)
        for _ in range(cfg.latent_sweeps):
            n_acc = _update_sites(y, h, params, evens, scales["h"], rng)
            n_acc += _update_sites(y, h, params, odds, scales["h"], rng)
            acc_counter["h"] += n_acc
            tot_counter["h"] += sites.size
        log_post = _log_post_z(y, h, z, priors, leverage)
        if not math.isfinite(log_post):
            raise ChainDiverged(f"non-finite log posterior at sweep {sweep}")
        for b in blocks:
            z_prop = z.copy()
            z_prop[z_index[b]] += scales[b] * rng.standard_normal()
            lp_prop = _log_post_z(y, h, z_prop, priors, leverage)
            if math.log(rng.random()) < lp_prop - log_post:
                z = z_prop
                log_post = lp_prop
                acc_counter[b] += 1
            tot_counter[b] += 1
        if tuning and (sweep + 1) % _TUNE_WINDOW == 0:
            for b in scales:
                if b not in tune_tot or tune_tot[b] == 0:
                    continue
                rate = tune_acc[b] / tune_tot[b]
                scales[b] = float(
                    np.clip(scales[b] * math.exp(rate - 0.3), 1e-4, 25.0)
                )
                tune_acc[b] = 0
                tune_tot[b] = 0
        if not tuning and (sweep - cfg.burn_in) % cfg.thin == 0 and kept < retained.shape[0]:
            p = _params_from_z(z, leverage)
            retained[kept] = (p.mu, p.phi, p.sigma2, p.rho)
            if store_paths:
                paths[kept] = h
            kept += 1

    rates = {
        b: (post_acc[b] / post_tot[b]) if post_tot[b] else 0.0
        for b in post_acc
    }
    return LsvChain(
        params=DrawMatrix(_PARAM_NAMES, retained[:kept]),
        h_draws=paths[:kept] if store_paths else None,
        accept_rates=rates,
    )


def lsv_rho_test(
    chain: LsvChain, cfg: HacConfig = HacConfig(), level: float = 0.05
) -> TestReport:
    """Test rho = 0 from the leverage chain: statistic d1/d2 with
    d1 = mean(rho^2), d2 = mean((rho - rhobar)^2), df = 1.

    The NSE is the bivariate delta method on (d1, d2): gradient
    (1/d2, -d1/d2^2) against the joint Newey-West covariance of the
    per-draw series (rho_j^2, (rho_j - rhobar)^2).
    """
    rho = chain.column("rho")
    if rho.size <= cfg.lag_q:
        raise SeriesTooShort(
            f"need more than lag_q={cfg.lag_q} draws, got {rho.size}"
        )
    rho_bar = rho.mean()
    d1_series = rho**2
    d2_series = (rho - rho_bar) ** 2
    d1 = float(d1_series.mean())
    d2 = float(d2_series.mean())
    if d2 <= 0.0:
        raise ValueError("rho draws are degenerate (is this a null-model chain?)")
    statistic = d1 / d2
    var = newey_west(np.column_stack([d1_series, d2_series]), cfg)
    grad = np.array([1.0 / d2, -d1 / d2**2])
    nse = float(np.sqrt(max(grad @ var @ grad, 0.0)))
    return make_report(statistic, df=1, nse=nse, level=level)


def null_posterior_means(chain_h0: LsvChain) -> tuple[float, float, float]:
    """(mu, phi, sigma) components of the null-fit posterior mean, with the
    sigma slot taken as (posterior mean of sigma^{-2})^{-1/2}."""
    mu0 = float(chain_h0.column("mu").mean())
    phi0 = float(chain_h0.column("phi").mean())
    prec0 = float((1.0 / chain_h0.column("sigma2")).mean())
    return mu0, phi0, 1.0 / math.sqrt(prec0)


def lly_statistic(
    chain_h1: LsvChain,
    chain_h0: LsvChain,
    returns,
    cfg: HacConfig = HacConfig(),
) -> tuple[float, float]:
    """Score-based comparator: d3^2 * d2 and its NSE.

    d3 averages, over the null chain's stored paths evaluated at the null
    posterior mean, the score-like sums
    B_j = sum_t (1/sigma0) e^{-h_t/2} (h_{t+1} - mu0 - phi0 (h_t - mu0)) y_t;
    d2 is the leverage chain's mean squared rho deviation.  The NSE applies
    the delta method with gradient (2 d3 d2, d3^2) to the joint Newey-West
    covariance of (B_j, d2_j); unequal chain lengths are truncated to match.
    """
    if chain_h0.h_draws is None:
        raise MissingLatentPaths("null chain was fit without store_paths")
    y = np.asarray(returns, dtype=float)
    paths = chain_h0.h_draws
    if paths.shape[1] != y.size + 1:
        raise ValueError("stored paths do not match the return series length")
    mu0, phi0, sigma0 = null_posterior_means(chain_h0)
    resid = paths[:, 1:] - mu0 - phi0 * (paths[:, :-1] - mu0)
    d3_series = (np.exp(-0.5 * paths[:, :-1]) * resid) @ y / sigma0
    rho = chain_h1.column("rho")
    d2_series = (rho - rho.mean()) ** 2
    j = min(d3_series.size, d2_series.size)
    if j <= cfg.lag_q:
        raise SeriesTooShort(f"need more than lag_q={cfg.lag_q} joint draws")
    d3_series, d2_series = d3_series[:j], d2_series[:j]
    d3 = float(d3_series.mean())
    d2 = float(d2_series.mean())
    statistic = d3**2 * d2
    var = newey_west(np.column_stack([d3_series, d2_series]), cfg)
    grad = np.array([2.0 * d3 * d2, d3**2])
    nse = float(np.sqrt(max(grad @ var @ grad, 0.0)))
    return statistic, nse


def lsv_power_cell(
    true_params: LsvParams,
    T: int,
    reps: int,
    level: float = 0.05,
    cfg: McmcConfig = McmcConfig(),
    hac: HacConfig = HacConfig(),
) -> float:
    """Fraction of seeded simulate -> fit -> rho-test replications rejecting.

    Replication i consumes the single stream (cfg.seed.base_seed,
    cfg.seed.stream_id + i), so results do not depend on scheduling.
    """
    if reps < 1:
        raise ValueError("need reps >= 1")
    rejections = 0
    for i in range(reps):
        rejections += int(
            lsv_power_rep(true_params, T, level, cfg, hac, i)
        )
    return rejections / reps


def lsv_power_rep(
    true_params: LsvParams,
    T: int,
    level: float,
    cfg: McmcConfig,
    hac: HacConfig,
    rep_index: int,
) -> bool:
    """One replication of the power study; True on rejection."""
    seed = SeedSpec(cfg.seed.base_seed, cfg.seed.stream_id + rep_index)
    rng = seed.generator()
    y = simulate_lsv(true_params, T, rng)
    try:
        chain = _run_chain(y, LsvPriors(), cfg, True, False, rng)
    except ChainDiverged as exc:
        raise ChainDiverged(f"replication {rep_index}: {exc}") from exc
    return bool(lsv_rho_test(chain, hac, level).reject)
