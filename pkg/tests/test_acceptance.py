"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
in the terminal summary (see conftest).  Run with `pytest tests/test_acceptance.py -v`.

Criterion 1 contains a known-unattainable sub-check: the printed vague-prior
n = 10^4 2logBF reference (-38.00) contradicts the source's own closed forms
(which force -38.31 once ybar is backed out of the Wald row).  That single
cell fails honestly; the analysis lives in the decisions ledger.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion

from bayeschi import harness, linreg
from bayeschi.harness import ExperimentPlan, run_table1, run_table2, run_table3, write_results
from bayeschi.lsv import LsvParams, LsvPriors, McmcConfig, fit_lsv
from bayeschi.statcore import HacConfig, SeedSpec, chi2_quantile, chi2_sf, newey_west, vech_series
from bayeschi.teststat import (
    DrawMatrix,
    PointNull,
    point_null_nse,
    point_null_statistic,
    restriction_nse,
    restriction_statistic,
)
from bayeschi import drawio, cli


# --- criterion 1: Table 1 reproduction ------------------------------------------

def test_criterion1_table1_reproduction():
    start = time.perf_counter()
    rows = run_table1()
    cells = [r for r in rows if r.statistic in ("T", "2logBF")]
    assert len(cells) == 16
    bad = [r for r in cells if not r.ok]
    elapsed = time.perf_counter() - start
    detail = f"{16 - len(bad)}/16 cells within 0.02, {elapsed:.2f}s"
    if bad:
        detail += "; " + ", ".join(
            f"{r.prior}/n={r.n}/{r.statistic} regenerates {r.value:.2f} vs printed {r.reference:.2f}"
            for r in bad
        )
    record_criterion(1, "Table 1 exact reproduction", not bad, detail)
    assert elapsed < 1.0
    assert not bad, (
        "every regenerated cell must match the printed table within 0.02; "
        f"mismatches: {[(r.prior, r.n, r.statistic, round(r.value, 4)) for r in bad]} "
        "— the printed vague-prior n=10^4 2logBF value is arithmetically "
        "inconsistent with the closed forms themselves (see the decisions ledger); "
        "this failure is expected and documented"
    )


# --- criterion 2: estimator identity ----------------------------------------------

def test_criterion2_estimator_identity():
    start = time.perf_counter()
    worst = 0.0
    for trial in range(100):
        rng = np.random.default_rng(31_000 + trial)
        d = int(rng.integers(1, 7))
        j = int(rng.integers(100, 10_001))
        mean = rng.standard_normal(d)
        a = rng.standard_normal((d, d))
        draws = DrawMatrix(
            [f"p{i}" for i in range(d)],
            mean + rng.standard_normal((j, d)) @ np.linalg.cholesky(a @ a.T + 0.3 * np.eye(d)).T,
        )
        theta0 = rng.standard_normal(d)
        trace_form = point_null_statistic(draws, list(range(d)), theta0)
        sub = draws.draws
        dev = sub - sub.mean(axis=0)
        hinv = np.linalg.inv(dev.T @ dev / j)
        centered = sub - theta0
        direct = float(np.mean(np.einsum("ji,ik,jk->j", centered, hinv, centered)))
        worst = max(worst, abs(trace_form - direct) / abs(direct))
    ok = worst < 1e-10
    record_criterion(
        2, "direct-average vs trace estimator identity",
        ok, f"worst rel diff {worst:.2e} over 100 instances, {time.perf_counter()-start:.1f}s",
    )
    assert ok


# --- criterion 3: analytic vs MCMC coherence ---------------------------------------

def test_criterion3_analytic_mcmc_coherence():
    start = time.perf_counter()
    j = 200_000
    worst_z = 0.0
    for trial in range(20):
        rng = np.random.default_rng(32_000 + trial)
        n = int(rng.integers(60, 241))
        gamma = float(rng.uniform(0.0, 0.5))
        data = linreg.simulate_design(n, gamma, SeedSpec(32_500, trial))
        post = linreg.posterior_nig(data, linreg.table2_prior())
        post_cov = post.V_star * 2.0 * post.s / (post.v - 2.0)
        sd = np.sqrt(np.diag(post_cov))
        draws = linreg.sample_posterior(post, j, SeedSpec(32_600, trial))

        sel = int(rng.integers(0, 4))
        beta0 = np.array([post.mu_star[sel] - rng.uniform(2.5, 4.0) * sd[sel]])
        exact = linreg.analytic_T_point(post, [sel], beta0)
        stat = point_null_statistic(draws, [sel], beta0)
        nse = point_null_nse(draws, [sel], beta0)
        assert nse > 0
        worst_z = max(worst_z, abs(stat - exact) / (3.0 * nse))
        assert abs(stat - exact) <= 3.0 * nse, (trial, "point", stat, exact, nse)

        r_matrix = rng.standard_normal((1, 4))
        scale = math.sqrt(float((r_matrix @ post_cov @ r_matrix.T)[0, 0]))
        r_val = r_matrix @ post.mu_star - rng.uniform(2.5, 4.0) * scale
        exact_r = linreg.analytic_T_restriction(post, r_matrix, r_val)
        sub = draws.select(["beta1", "beta2", "beta3", "beta4"])
        stat_r = restriction_statistic(sub, r_matrix, r_val)
        nse_r = restriction_nse(sub, r_matrix, r_val)
        worst_z = max(worst_z, abs(stat_r - exact_r) / (3.0 * nse_r))
        assert abs(stat_r - exact_r) <= 3.0 * nse_r, (trial, "restriction",)
    record_criterion(
        3, "analytic vs sampled statistic within 3 NSE (20 instances, J=2e5)",
        True, f"worst |diff|/(3 NSE) = {worst_z:.2f}, {time.perf_counter()-start:.0f}s",
    )


# --- criterion 4: Table 2 at full scale ---------------------------------------------

REFERENCE_TABLE2 = {
    (0.0, 50): {"beta3=0": (4.50, 5.10), "beta4=0": (6.50, 7.10),
                "beta3=beta4=0": (6.60, 7.50), "beta3+beta4=0": (6.20, 6.70)},
    (0.1, 50): {"beta3=0": (10.40, 11.00), "beta4=0": (92.00, 92.50),
                "beta3=beta4=0": (88.80, 89.70), "beta3+beta4=0": (83.30, 84.00)},
    (0.3, 50): {"beta3=0": (55.80, 57.30), "beta4=0": (100.0, 100.0),
                "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
    (0.5, 50): {"beta3=0": (92.00, 92.20), "beta4=0": (100.0, 100.0),
                "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
    (0.0, 100): {"beta3=0": (5.50, 5.80), "beta4=0": (4.60, 5.00),
                 "beta3=beta4=0": (5.70, 6.00), "beta3+beta4=0": (6.00, 6.20)},
    (0.1, 100): {"beta3=0": (20.20, 20.40), "beta4=0": (99.70, 99.70),
                 "beta3=beta4=0": (99.50, 99.50), "beta3+beta4=0": (98.60, 98.60)},
    (0.3, 100): {"beta3=0": (82.00, 82.80), "beta4=0": (100.0, 100.0),
                 "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
    (0.5, 100): {"beta3=0": (99.90, 100.0), "beta4=0": (100.0, 100.0),
                 "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
    (0.0, 150): {"beta3=0": (5.30, 5.40), "beta4=0": (5.20, 5.30),
                 "beta3=beta4=0": (5.40, 5.60), "beta3+beta4=0": (4.20, 4.20)},
    (0.1, 150): {"beta3=0": (24.40, 24.60), "beta4=0": (100.0, 100.0),
                 "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (99.80, 99.80)},
    (0.3, 150): {"beta3=0": (95.90, 95.90), "beta4=0": (100.0, 100.0),
                 "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
    (0.5, 150): {"beta3=0": (100.0, 100.0), "beta4=0": (100.0, 100.0),
                 "beta3=beta4=0": (100.0, 100.0), "beta3+beta4=0": (100.0, 100.0)},
}


def _noncentrality(gamma, n, hypothesis):
    """Approximate chi-square noncentrality of each Table 2 design (unit-variance
    regressors, sigma2 = 0.01); >= 60 means power is 1 to ~1e-9, i.e. the
    1000-replication cell is saturated and must print exactly 100%."""
    b3, b4 = 0.1 * gamma, 0.5 * gamma
    return {
        "beta3=0": n * b3**2 / 0.01,
        "beta4=0": n * b4**2 / 0.01,
        "beta3=beta4=0": n * (b3**2 + b4**2) / 0.01,
        "beta3+beta4=0": n * (b3 + b4) ** 2 / (2 * 0.01),
    }[hypothesis]


def test_criterion4_table2_full_scale():
    start = time.perf_counter()
    plan = harness.default_table2_plan(reps=1000)
    plan = ExperimentPlan(plan.model, plan.grid, plan.reps, plan.level, plan.seed, 2)
    table = run_table2(plan)
    failures = []
    worst = 0.0
    for (gamma, n), hyps in REFERENCE_TABLE2.items():
        design = f"gamma={gamma:g},n={n}"
        for hyp, refs in hyps.items():
            for stat, ref in zip(("T", "Wald"), refs):
                rate = table.rate_of(design, hyp, stat) * 100.0
                if ref == 100.0:
                    if _noncentrality(gamma, n, hyp) >= 60.0:
                        ok = rate == 100.0  # saturated design: exact
                    else:
                        ok = rate >= 99.4  # near-saturated: 3 binomial SE floor
                else:
                    p = ref / 100.0
                    band = 3.0 * math.sqrt(p * (1.0 - p) / 1000.0) * 100.0
                    ok = abs(rate - ref) <= band
                    worst = max(worst, abs(rate - ref) / band)
                if not ok:
                    failures.append((design, hyp, stat, rate, ref))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 600.0
    record_criterion(
        4, "Table 2 full scale (1000 reps) within 3 binomial SE",
        ok, f"worst band ratio {worst:.2f}, {elapsed:.0f}s",
    )
    assert elapsed < 600.0
    assert not failures, failures


# --- criterion 5: T - p converges to Wald --------------------------------------------

def test_criterion5_wald_convergence():
    start = time.perf_counter()
    prior_of = lambda: linreg.NigPrior(np.zeros(4), 1e8 * np.eye(4), 1e-4, 1e-4)
    medians = []
    for n in (150, 600, 2400):
        diffs = []
        for rep in range(200):
            data = linreg.simulate_design(n, 0.0, SeedSpec(33_000 + n, rep))
            post = linreg.posterior_nig(data, prior_of())
            t_val = linreg.analytic_T_point(post, [2], [0.0]) - 1.0
            wald = linreg.ols_wald(data, PointNull([2], [0.0]))
            diffs.append(abs(t_val - wald))
        medians.append(float(np.median(diffs)))
    ok = medians[0] > medians[1] > medians[2] and medians[2] < 0.05
    record_criterion(
        5, "median |(T-p) - Wald| decreasing, < 0.05 at n=2400",
        ok, f"medians {['%.4f' % m for m in medians]}, {time.perf_counter()-start:.0f}s",
    )
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < 0.05


# --- criterion 6: Table 3 at desk scale ------------------------------------------------

def test_criterion6_table3_desk_scale():
    # chain settings sized so the leverage draw's effective sample size keeps
    # the null cell calibrated (see the decisions ledger); still far inside
    # the 3 h budget and far short of the source's 30000-iteration runs
    start = time.perf_counter()
    plan = ExperimentPlan(
        "lsv",
        ({"rho": 0.0, "T": 1000}, {"rho": 0.0, "T": 2000},
         {"rho": -0.4, "T": 1000}, {"rho": -0.4, "T": 2000}),
        100, 0.05, SeedSpec(20240601), 2,
        mcmc={"n_iter": 15000, "burn_in": 5000, "thin": 5, "latent_sweeps": 3},
    )
    table = run_table3(plan)
    rate = {
        (c["rho"], c["T"]): table.rate_of(f"rho={c['rho']:g},T={c['T']}", "rho=0", "T")
        for c in plan.grid
    }
    power_ok = rate[(-0.4, 1000)] >= 0.60
    size_ok = rate[(0.0, 2000)] <= 0.12
    order_ok = all(rate[(-0.4, t)] > rate[(0.0, t)] for t in (1000, 2000))
    elapsed = time.perf_counter() - start
    ok = power_ok and size_ok and order_ok and elapsed < 3 * 3600
    record_criterion(
        6, "Table 3 desk scale (100 reps, custom sampler)",
        ok,
        f"power(rho=-0.4,T=1000)={rate[(-0.4, 1000)]:.2f} (>=0.60), "
        f"size(rho=0,T=2000)={rate[(0.0, 2000)]:.2f} (<=0.12), "
        f"ordering {'ok' if order_ok else 'violated'}, {elapsed:.0f}s",
    )
    assert power_ok, rate
    assert size_ok, rate
    assert order_ok, rate
    assert elapsed < 3 * 3600


# --- criterion 7: NSE validity -----------------------------------------------------------

def _ar1_rho_chain(j, seed, mean=0.3, sd=0.1, coeff=0.8):
    rng = np.random.default_rng(seed)
    innov_sd = sd * math.sqrt(1.0 - coeff**2)
    x = np.empty(j)
    x[0] = mean + sd * rng.standard_normal()
    eps = rng.standard_normal(j)
    for t in range(1, j):
        x[t] = mean + coeff * (x[t - 1] - mean) + innov_sd * eps[t]
    return DrawMatrix(["rho"], x[:, None])


def _fd_nse_scalar(draws, theta0, cfg=HacConfig(10), step=1e-7):
    x = draws.draws[:, 0]
    mean = x.mean()
    dev = x - mean
    hhat = float((dev**2).mean())
    delta = mean - theta0

    def stat_of_h(h):
        return 1.0 + delta**2 / h

    grad = (stat_of_h(hhat + step) - stat_of_h(hhat - step)) / (2 * step)
    var_h = newey_west(vech_series(dev[:, None]), cfg)[0, 0]
    return abs(grad) * math.sqrt(var_h)


def test_criterion7_nse_validity():
    start = time.perf_counter()
    # (a) finite-difference delta-method oracle, 1e-6 relative
    worst_fd = 0.0
    for seed in range(5):
        draws = _ar1_rho_chain(20_000, 34_000 + seed)
        theta0 = 0.3 - 2.0 * 0.1
        got = point_null_nse(draws, [0], [theta0])
        oracle = _fd_nse_scalar(draws, theta0)
        worst_fd = max(worst_fd, abs(got - oracle) / oracle)
    fd_ok = worst_fd < 1e-6

    # (b) realized dispersion across 50 seeds within a factor 2 of the NSE
    stats, nses = [], []
    for seed in range(50):
        draws = _ar1_rho_chain(20_000, 35_000 + seed)
        theta0 = 0.3 - 2.0 * 0.1
        stats.append(point_null_statistic(draws, [0], [theta0]))
        nses.append(point_null_nse(draws, [0], [theta0]))
    dispersion = float(np.std(stats, ddof=1))
    mean_nse = float(np.mean(nses))
    disp_ok = mean_nse / 2.0 <= dispersion <= mean_nse * 2.0

    # (c) 1/sqrt(J): quadrupling J halves the NSE within 25%
    ratios = []
    for seed in range(20):
        big = _ar1_rho_chain(200_000, 36_000 + seed)
        small = DrawMatrix(["rho"], big.draws[:50_000])
        ratios.append(
            point_null_nse(small, [0], [0.1]) / point_null_nse(big, [0], [0.1])
        )
    scaling = float(np.mean(ratios))
    scaling_ok = abs(scaling - 2.0) / 2.0 < 0.25

    ok = fd_ok and disp_ok and scaling_ok
    record_criterion(
        7, "NSE validity (FD oracle, dispersion, 1/sqrt(J))",
        ok,
        f"fd rel {worst_fd:.1e}, dispersion/NSE {dispersion / mean_nse:.2f}, "
        f"J-scaling ratio {scaling:.2f}, {time.perf_counter()-start:.0f}s",
    )
    assert fd_ok
    assert disp_ok, (dispersion, mean_nse)
    assert scaling_ok, scaling


# --- criterion 8: chi-square kernel ---------------------------------------------------------

def test_criterion8_chi2_kernel():
    anchor = chi2_quantile(0.9999, 2)
    anchor_ok = abs(anchor - 18.42) <= 0.01
    worst = 0.0
    for df in range(1, 11):
        for prob in (0.01, 0.1, 0.5, 0.9, 0.95, 0.99, 0.9999):
            x = chi2_quantile(prob, df)
            worst = max(worst, abs(chi2_sf(x, df) - (1.0 - prob)))
    roundtrip_ok = worst < 1e-8
    record_criterion(
        8, "chi2 kernel: 18.42 anchor and 1e-8 round-trips",
        anchor_ok and roundtrip_ok,
        f"quantile(0.9999,2)={anchor:.4f}, worst round-trip {worst:.1e}",
    )
    assert anchor_ok
    assert roundtrip_ok


# --- criterion 9: determinism -----------------------------------------------------------------

def test_criterion9_determinism(tmp_path):
    start = time.perf_counter()
    plan2 = ExperimentPlan(
        "linreg", ({"gamma": 0.1, "n": 50},), 25, 0.05, SeedSpec(37_000), 1
    )
    t_serial = run_table2(plan2)
    t_again = run_table2(plan2)
    t_parallel = run_table2(
        ExperimentPlan("linreg", plan2.grid, 25, 0.05, SeedSpec(37_000), 8)
    )
    write_results(t_serial, tmp_path / "a.csv", plan2)
    write_results(t_again, tmp_path / "b.csv", plan2)
    table2_ok = (
        t_serial == t_again == t_parallel
        and (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    )

    plan3 = ExperimentPlan(
        "lsv", ({"rho": -0.4, "T": 150},), 3, 0.05, SeedSpec(37_100), 1,
        mcmc={"n_iter": 700, "burn_in": 250, "thin": 2},
    )
    t3a = run_table3(plan3)
    t3b = run_table3(
        ExperimentPlan("lsv", plan3.grid, 3, 0.05, SeedSpec(37_100), 8, mcmc=plan3.mcmc)
    )
    write_results(t3a, tmp_path / "c.csv", plan3)
    write_results(t3b, tmp_path / "d.csv", plan3)
    table3_ok = (tmp_path / "c.csv").read_bytes() == (tmp_path / "d.csv").read_bytes()

    cli.main(["lsv-sim", "--t-len", "300", "--rho", "-0.4", "--seed", "5",
              "--out", str(tmp_path)])
    for sub in ("f1", "f2"):
        cli.main([
            "lsv-fit", str(tmp_path / "returns.csv"), "--iters", "1000",
            "--burn-in", "300", "--seed", "9", "--out", str(tmp_path / sub),
        ])
    fit_ok = (tmp_path / "f1" / "chain.csv").read_bytes() == (
        tmp_path / "f2" / "chain.csv"
    ).read_bytes()

    ok = table2_ok and table3_ok and fit_ok
    record_criterion(
        9, "determinism: byte-identical artifacts, parallelism-invariant tables",
        ok, f"{time.perf_counter()-start:.0f}s",
    )
    assert table2_ok
    assert table3_ok
    assert fit_ok
