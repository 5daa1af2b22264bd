"""Command-line surface.

Subcommands: test, lindley, table2, table3, lsv-fit, lsv-sim, linreg-fit.
Exit codes: 0 = success / H0 accepted, 2 = H0 rejected, 1 = error (errors
print a single machine-parsable 'error: <Category>: <detail>' line).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import drawio, harness, linreg, lsv
from .statcore import HacConfig, SeedSpec, chi2_quantile, chi2_sf
from .teststat import (
    DrawMatrix,
    TestReport,
    make_report,
    point_null_nse,
    point_null_statistic,
    restriction_nse,
    restriction_statistic,
)

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_REJECT = 2


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed (u64)")
    parser.add_argument("--level", type=float, default=None, help="test level (default 0.05)")
    parser.add_argument("--lag-q", type=int, default=10, help="Newey-West lag window")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--parallelism", type=int, default=None, help="worker processes")


def _level(args) -> float:
    return 0.05 if args.level is None else args.level


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _print_report(report: TestReport) -> None:
    for line in report.lines():
        print(line)


def _report_json(report: TestReport) -> dict:
    return {
        "statistic": report.statistic,
        "df": report.df,
        "nse": report.nse,
        "p_value": report.p_value,
        "threshold": report.threshold,
        "reject": report.reject,
        "level": report.level,
    }


def compute_test(draws: DrawMatrix, hyp: dict, hac: HacConfig, level: float) -> TestReport:
    """Statistic + NSE + report for a parsed hypothesis against a draw matrix."""
    if hyp["kind"] == "point":
        selector = drawio.resolve_selector(draws, hyp["params"])
        stat = point_null_statistic(draws, selector, hyp["theta0"])
        nse = point_null_nse(draws, selector, hyp["theta0"], hac)
        df = len(selector)
    else:
        sub = draws.select(hyp["params"])
        stat = restriction_statistic(sub, hyp["R"], hyp["r"])
        nse = restriction_nse(sub, hyp["R"], hyp["r"], hac)
        df = int(np.asarray(hyp["R"]).shape[0])
    return make_report(stat, df, nse=nse, level=level)


def cmd_test(args) -> int:
    draws = drawio.read_draws(args.draws)
    hyp = drawio.read_hypothesis(args.hypothesis)
    report = compute_test(draws, hyp, HacConfig(args.lag_q), _level(args))
    _print_report(report)
    out = _out_dir(args)
    if out is not None:
        with open(out / "report.json", "w") as fh:
            json.dump(_report_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def cmd_lindley(args) -> int:
    rows = harness.run_table1()
    print(f"{'prior':<12}{'n':>6}  {'statistic':<8}{'value':>12}{'reference':>12}  status")
    for r in rows:
        status = "PASS" if r.ok else "FAIL"
        print(
            f"{r.prior:<12}{r.n:>6}  {r.statistic:<8}{r.value:>12.4f}{r.reference:>12.2f}  {status}"
        )
    n_fail = sum(not r.ok for r in rows)
    print(f"{len(rows) - n_fail}/{len(rows)} cells within 0.02")
    out = _out_dir(args)
    if out is not None:
        with open(out / "table1.csv", "w", newline="") as fh:
            fh.write("prior,n,statistic,value,reference,status\n")
            for r in rows:
                fh.write(
                    f"{r.prior},{r.n},{r.statistic},{r.value!r},{r.reference!r},"
                    f"{'PASS' if r.ok else 'FAIL'}\n"
                )
    return EXIT_ACCEPT


def _load_plan_with_overrides(args, default_plan) -> harness.ExperimentPlan:
    plan = harness.load_plan(args.plan) if args.plan else default_plan
    return harness.ExperimentPlan(
        model=plan.model,
        grid=plan.grid,
        reps=plan.reps if args.reps is None else args.reps,
        level=plan.level if args.level is None else args.level,
        seed=plan.seed if args.seed is None else SeedSpec(args.seed),
        parallelism=plan.parallelism if args.parallelism is None else args.parallelism,
        mcmc=plan.mcmc,
    )


def _run_table_command(args, default_plan, runner, csv_name) -> int:
    plan = _load_plan_with_overrides(args, default_plan)
    start = time.perf_counter()
    table = runner(plan)
    elapsed = time.perf_counter() - start
    for r in table.rows:
        print(
            f"{r.design:<22}{r.hypothesis:<16}{r.statistic:<6}"
            f"rate={r.rate:.4f}  mcse={r.mcse:.4f}  reps={r.reps}"
        )
    out = _out_dir(args) or Path(".")
    harness.write_results(table, out / csv_name, plan, wall_time_s=elapsed)
    print(f"wrote {out / csv_name}")
    return EXIT_ACCEPT


def cmd_table2(args) -> int:
    return _run_table_command(
        args, harness.default_table2_plan(), harness.run_table2, "table2.csv"
    )


def cmd_table3(args) -> int:
    return _run_table_command(
        args, harness.default_table3_plan(), harness.run_table3, "table3.csv"
    )


def cmd_lsv_sim(args) -> int:
    params = lsv.LsvParams(mu=args.mu, phi=args.phi, sigma2=args.sigma2, rho=args.rho)
    y = lsv.simulate_lsv(params, args.t_len, SeedSpec(_seed(args)))
    out = _out_dir(args) or Path(".")
    drawio.write_returns(out / "returns.csv", y)
    print(f"wrote {out / 'returns.csv'} ({args.t_len} returns)")
    return EXIT_ACCEPT


def _mcmc_config(args, seed: SeedSpec) -> lsv.McmcConfig:
    return lsv.McmcConfig(
        n_iter=args.iters,
        burn_in=args.burn_in,
        thin=args.thin,
        seed=seed,
        latent_sweeps=args.latent_sweeps,
    )


def cmd_lsv_fit(args) -> int:
    y = drawio.read_returns(args.returns)
    leverage = not args.no_leverage
    chain = lsv.fit_lsv(
        y,
        lsv.LsvPriors(),
        _mcmc_config(args, SeedSpec(_seed(args), 0)),
        leverage=leverage,
        store_paths=args.store_paths,
    )
    out = _out_dir(args) or Path(".")
    drawio.write_draws(out / "chain.csv", chain.params)
    print(f"wrote {out / 'chain.csv'}")
    if chain.h_draws is not None:
        drawio.write_paths(out / "chain_paths.csv", chain.h_draws)
        print(f"wrote {out / 'chain_paths.csv'}")
    means = chain.params.draws.mean(axis=0)
    print("posterior means: " + ", ".join(
        f"{n}={m:.4f}" for n, m in zip(chain.params.names, means)
    ))
    exit_code = EXIT_ACCEPT
    report_payload: dict = {}
    if leverage:
        report = lsv.lsv_rho_test(chain, HacConfig(args.lag_q), _level(args))
        print("rho = 0 test:")
        _print_report(report)
        report_payload["rho_test"] = _report_json(report)
        exit_code = EXIT_REJECT if report.reject else EXIT_ACCEPT
        if args.lly:
            h0_chain = lsv.fit_lsv(
                y,
                lsv.LsvPriors(),
                _mcmc_config(args, SeedSpec(_seed(args), 1)),
                leverage=False,
                store_paths=True,
            )
            stat, nse = lsv.lly_statistic(chain, h0_chain, y, HacConfig(args.lag_q))
            threshold = chi2_quantile(1.0 - _level(args), 1)
            print(
                f"score comparator: statistic = {stat:.6g}, nse = {nse:.6g}, "
                f"chi2(1) threshold = {threshold:.4f}, "
                f"{'reject' if stat > threshold else 'accept'}"
            )
            report_payload["score_comparator"] = {
                "statistic": stat,
                "nse": nse,
                "threshold": threshold,
                "p_value": chi2_sf(max(stat, 0.0), 1),
                "reject": bool(stat > threshold),
            }
    if args.out is not None:
        with open(out / "report.json", "w") as fh:
            json.dump(report_payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return exit_code


def cmd_linreg_fit(args) -> int:
    X, y, names = drawio.read_regression_csv(args.data)
    data = linreg.RegressionData(X, y)
    prior = linreg.NigPrior(
        np.zeros(X.shape[1]), args.v0_scale * np.eye(X.shape[1]), args.ig_a, args.ig_b
    )
    post = linreg.posterior_nig(data, prior)
    sd = np.sqrt(np.diag(post.V_star) * 2.0 * post.s / (post.v - 2.0))
    print(f"posterior (v = {post.v:g}, s = {post.s:.6g}):")
    for name, m, s in zip(names, post.mu_star, sd):
        print(f"  {name:<12} mean = {m: .6f}  sd = {s:.6f}")
    if args.hypothesis is None:
        return EXIT_ACCEPT
    hyp = drawio.read_hypothesis(args.hypothesis)
    missing = [p for p in hyp["params"] if p not in names]
    if missing:
        raise drawio.NameMismatch(
            f"hypothesis names {missing} absent from design columns {names}"
        )
    if hyp["kind"] == "point":
        selector = [names.index(p) for p in hyp["params"]]
        stat = linreg.analytic_T_point(post, selector, hyp["theta0"])
        df = len(selector)
    else:
        R_full = np.zeros((len(hyp["r"]), X.shape[1]))
        for col, p in enumerate(hyp["params"]):
            R_full[:, names.index(p)] = hyp["R"][:, col]
        stat = linreg.analytic_T_restriction(post, R_full, hyp["r"])
        df = len(hyp["r"])
    report = make_report(stat, df, level=_level(args))
    _print_report(report)
    out = _out_dir(args)
    if out is not None:
        with open(out / "report.json", "w") as fh:
            json.dump(_report_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayeschi",
        description="Chi-squared-calibrated Bayesian tests from posterior draws",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a hypothesis against a posterior draw CSV")
    p.add_argument("draws", type=Path, help="draw CSV (header = parameter names)")
    p.add_argument("hypothesis", type=Path, help="hypothesis JSON file")
    _common_flags(p)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("lindley", help="regenerate the prior-comparison panel")
    _common_flags(p)
    p.set_defaults(handler=cmd_lindley)

    for name, handler in (("table2", cmd_table2), ("table3", cmd_table3)):
        p = sub.add_parser(name, help=f"run the {name} size/power study")
        p.add_argument("plan", nargs="?", type=Path, help="JSON plan file")
        p.add_argument("--reps", type=int, default=None, help="override replications")
        _common_flags(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("lsv-fit", help="fit the leverage SV model to a return CSV")
    p.add_argument("returns", type=Path, help="single-column CSV, header 'r'")
    p.add_argument("--no-leverage", action="store_true", help="pin rho = 0")
    p.add_argument("--store-paths", action="store_true", help="export latent paths")
    p.add_argument("--lly", action="store_true",
                   help="also fit the null model and print the score comparator")
    p.add_argument("--iters", type=int, default=6000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--thin", type=int, default=2)
    p.add_argument("--latent-sweeps", type=int, default=3,
                   help="checkerboard passes over the path per iteration")
    _common_flags(p)
    p.set_defaults(handler=cmd_lsv_fit)

    p = sub.add_parser("lsv-sim", help="simulate a leverage SV return series")
    p.add_argument("--t-len", type=int, default=1000)
    p.add_argument("--mu", type=float, default=-10.0)
    p.add_argument("--phi", type=float, default=0.97)
    p.add_argument("--sigma2", type=float, default=0.025)
    p.add_argument("--rho", type=float, default=-0.4)
    _common_flags(p)
    p.set_defaults(handler=cmd_lsv_sim)

    p = sub.add_parser("linreg-fit", help="conjugate regression fit on a CSV")
    p.add_argument("data", type=Path, help="CSV with a 'y' column plus covariates")
    p.add_argument("--hypothesis", type=Path, default=None)
    p.add_argument("--v0-scale", type=float, default=1000.0)
    p.add_argument("--ig-a", type=float, default=1e-4)
    p.add_argument("--ig-b", type=float, default=1e-4)
    _common_flags(p)
    p.set_defaults(handler=cmd_linreg_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
