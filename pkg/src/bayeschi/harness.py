"""Seeded replication engine for the size/power studies and the prior panel.

Every replication owns the stream (base_seed, cell_index * 10**6 + rep_index),
so a plan plus its seed fully determines every table regardless of worker
count or scheduling; aggregation sums per-replication booleans sorted by
index.  CSV artifacts are byte-identical across reruns of the same plan.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__
from .statcore import HacConfig, SeedSpec, chi2_quantile
from .teststat import Linear, PointNull, make_report
from . import linreg
from . import lsv as lsv_mod
from . import normal_mean as nm

_CELL_STRIDE = 10**6
_TABLE1_TOL = 0.02


class IoError(OSError):
    """Result files could not be written or read back."""


@dataclass(frozen=True)
class ExperimentPlan:
    model: str
    grid: tuple
    reps: int
    level: float = 0.05
    seed: SeedSpec = SeedSpec(0)
    parallelism: int = 1
    mcmc: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in ("linreg", "lsv", "normal"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie strictly between 0 and 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        object.__setattr__(self, "grid", tuple(dict(c) for c in self.grid))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = {"base_seed": self.seed.base_seed, "stream_id": self.seed.stream_id}
        d["grid"] = list(self.grid)
        return d


def plan_hash(plan: ExperimentPlan) -> str:
    canon = json.dumps(plan.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load_plan(path) -> ExperimentPlan:
    with open(path) as fh:
        raw = json.load(fh)
    seed = raw.get("seed", {})
    if isinstance(seed, dict):
        seed = SeedSpec(int(seed.get("base_seed", 0)), int(seed.get("stream_id", 0)))
    else:
        seed = SeedSpec(int(seed))
    return ExperimentPlan(
        model=raw["model"],
        grid=tuple(raw["grid"]),
        reps=int(raw.get("reps", 100)),
        level=float(raw.get("level", 0.05)),
        seed=seed,
        parallelism=int(raw.get("parallelism", 1)),
        mcmc=dict(raw.get("mcmc", {})),
    )


def default_table2_plan(reps: int = 1000, seed: SeedSpec = SeedSpec(20240501)) -> ExperimentPlan:
    grid = tuple(
        {"gamma": g, "n": n} for g in (0.0, 0.1, 0.3, 0.5) for n in (50, 100, 150)
    )
    return ExperimentPlan("linreg", grid, reps, 0.05, seed, 1)


def default_table3_plan(reps: int = 100, seed: SeedSpec = SeedSpec(20240502)) -> ExperimentPlan:
    grid = tuple(
        {"rho": r, "T": t} for r in (0.0, -0.1, -0.2, -0.4) for t in (1000, 1500, 2000)
    )
    return ExperimentPlan(
        "lsv", grid, reps, 0.05, seed, 1,
        mcmc={"n_iter": 6000, "burn_in": 2000, "thin": 2},
    )


@dataclass(frozen=True)
class ResultRow:
    design: str
    hypothesis: str
    statistic: str
    rate: float
    mcse: float
    reps: int


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]

    def __init__(self, rows):
        rows = tuple(rows)
        for r in rows:
            if not 0.0 <= r.rate <= 1.0:
                raise ValueError(f"rate out of [0, 1]: {r}")
        object.__setattr__(self, "rows", rows)

    def rate_of(self, design: str, hypothesis: str, statistic: str) -> float:
        for r in self.rows:
            if (r.design, r.hypothesis, r.statistic) == (design, hypothesis, statistic):
                return r.rate
        raise KeyError((design, hypothesis, statistic))


def _result_row(design, hypothesis, statistic, successes, reps) -> ResultRow:
    rate = successes / reps
    return ResultRow(
        design=design,
        hypothesis=hypothesis,
        statistic=statistic,
        rate=rate,
        mcse=math.sqrt(rate * (1.0 - rate) / reps),
        reps=reps,
    )


# --- generic seeded replication runner ---------------------------------------

def run_replications(worker, tasks, parallelism: int) -> list:
    """Apply a top-level worker to (index, payload) tasks; results come back
    ordered by index whatever the scheduling."""
    if parallelism <= 1 or len(tasks) <= 1:
        results = [worker(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (parallelism * 8))
        with get_context("fork").Pool(parallelism) as pool:
            results = pool.map(worker, tasks, chunksize=chunk)
    return [r for _, r in sorted(results, key=lambda pair: pair[0])]


def _collect(outcomes, reps, max_fail_fraction=0.01):
    """Split ok/failed replication results; abort if too many failed."""
    ok = [o for o in outcomes if not isinstance(o, _RepFailure)]
    failures = [o for o in outcomes if isinstance(o, _RepFailure)]
    if len(failures) > max_fail_fraction * reps:
        detail = "; ".join(f"rep {f.index}: {f.message}" for f in failures[:5])
        raise RuntimeError(
            f"{len(failures)}/{reps} replications failed ({detail} ...)"
        )
    return ok


@dataclass(frozen=True)
class _RepFailure:
    index: int
    message: str


# --- Table 2: conjugate regression size/power --------------------------------

TABLE2_HYPOTHESES = (
    ("beta3=0", PointNull([2], [0.0]), 1),
    ("beta4=0", PointNull([3], [0.0]), 1),
    ("beta3=beta4=0", PointNull([2, 3], [0.0, 0.0]), 2),
    ("beta3+beta4=0", Linear([[0.0, 0.0, 1.0, 1.0]], [0.0]), 1),
)


def _table2_rep(task):
    (index, (gamma, n, level, base_seed, stream)) = task
    try:
        data = linreg.simulate_design(n, gamma, SeedSpec(base_seed, stream))
        post = linreg.posterior_nig(data, linreg.table2_prior())
        out = {}
        for label, spec, df in TABLE2_HYPOTHESES:
            if isinstance(spec, PointNull):
                t_stat = linreg.analytic_T_point(post, spec.selector, spec.theta0)
            else:
                t_stat = linreg.analytic_T_restriction(post, spec.R, spec.r)
            out[(label, "T")] = make_report(t_stat, df, level=level).reject
            wald = linreg.ols_wald(data, spec)
            out[(label, "Wald")] = wald > chi2_quantile(1.0 - level, df)
        return index, out
    except Exception as exc:  # per-replication failures surface with indices
        return index, _RepFailure(index, f"{type(exc).__name__}: {exc}")


def run_table2(plan: ExperimentPlan) -> ResultTable:
    """Empirical size/power of the exact regression statistic vs OLS/Wald."""
    if plan.model != "linreg":
        raise ValueError("run_table2 needs a linreg plan")
    rows = []
    for cell_idx, cell in enumerate(plan.grid):
        gamma, n = float(cell["gamma"]), int(cell["n"])
        tasks = [
            (
                rep,
                (
                    gamma,
                    n,
                    plan.level,
                    plan.seed.base_seed,
                    plan.seed.stream_id + cell_idx * _CELL_STRIDE + rep,
                ),
            )
            for rep in range(plan.reps)
        ]
        outcomes = _collect(
            run_replications(_table2_rep, tasks, plan.parallelism), plan.reps
        )
        design = f"gamma={gamma:g},n={n}"
        for label, _, _ in TABLE2_HYPOTHESES:
            for stat in ("T", "Wald"):
                successes = sum(o[(label, stat)] for o in outcomes)
                rows.append(
                    _result_row(design, label, stat, successes, len(outcomes))
                )
    return ResultTable(rows)


# --- Table 3: leverage SV size/power ------------------------------------------

def _table3_rep(task):
    (index, (rho, t_len, level, base_seed, stream, mcmc)) = task
    try:
        params = lsv_mod.LsvParams(mu=-10.0, phi=0.97, sigma2=0.025, rho=rho)
        cfg = lsv_mod.McmcConfig(
            n_iter=int(mcmc.get("n_iter", 6000)),
            burn_in=int(mcmc.get("burn_in", 2000)),
            thin=int(mcmc.get("thin", 2)),
            seed=SeedSpec(base_seed, stream),
            latent_sweeps=int(mcmc.get("latent_sweeps", 3)),
        )
        reject = lsv_mod.lsv_power_rep(params, t_len, level, cfg, HacConfig(), 0)
        return index, {("rho=0", "T"): reject}
    except Exception as exc:
        return index, _RepFailure(index, f"{type(exc).__name__}: {exc}")


def run_table3(plan: ExperimentPlan) -> ResultTable:
    """Rejection rates of the rho = 0 test across (rho, T) designs."""
    if plan.model != "lsv":
        raise ValueError("run_table3 needs an lsv plan")
    rows = []
    for cell_idx, cell in enumerate(plan.grid):
        rho, t_len = float(cell["rho"]), int(cell["T"])
        tasks = [
            (
                rep,
                (
                    rho,
                    t_len,
                    plan.level,
                    plan.seed.base_seed,
                    plan.seed.stream_id + cell_idx * _CELL_STRIDE + rep,
                    dict(plan.mcmc),
                ),
            )
            for rep in range(plan.reps)
        ]
        outcomes = _collect(
            run_replications(_table3_rep, tasks, plan.parallelism), plan.reps
        )
        design = f"rho={rho:g},T={t_len}"
        successes = sum(o[("rho=0", "T")] for o in outcomes)
        rows.append(_result_row(design, "rho=0", "T", successes, len(outcomes)))
    return ResultTable(rows)


# --- Table 1: exact normal-mean panel -----------------------------------------

@dataclass(frozen=True)
class Table1Row:
    prior: str
    n: int
    statistic: str
    value: float
    reference: float
    ok: bool


_TABLE1_NS = (10, 100, 1000, 10000)
_TABLE1_WALD = (0.01, 1.23, 11.32, 86.03)
_TABLE1_PRIORS = {
    "informative": {"mu0": 0.10, "tau2": 1e-3},
    "vague": {"mu0": 0.0, "tau2": 1e50},
}
TABLE1_REFERENCE = {
    ("informative", "T"): (10.96, 12.22, 22.30, 96.98),
    ("informative", "2logBF"): (9.96, 11.12, 20.60, 93.58),
    ("informative", "Wald"): _TABLE1_WALD,
    ("vague", "T"): (1.01, 2.23, 12.32, 87.03),
    ("vague", "2logBF"): (-117.42, -118.50, -110.72, -38.00),
    ("vague", "Wald"): _TABLE1_WALD,
}


def run_table1() -> list[Table1Row]:
    """Regenerate the prior-comparison panel from the closed forms.

    ybar is recovered from the prior-free Wald column (ybar = sqrt(W/n),
    sigma2 = 1), making this an internal-consistency reproduction; each cell
    is flagged when it misses its reference by more than 0.02.
    """
    rows = []
    for prior_label, hyper in _TABLE1_PRIORS.items():
        for k, n in enumerate(_TABLE1_NS):
            ybar = math.sqrt(_TABLE1_WALD[k] / n)
            setup = nm.NormalMeanSetup(
                n=n, ybar=ybar, sigma2=1.0, mu0=hyper["mu0"], tau2=hyper["tau2"]
            )
            values = {
                "T": nm.closed_form_T(setup),
                "2logBF": nm.closed_form_2logBF(setup),
                "Wald": nm.closed_form_wald(setup),
            }
            for stat, value in values.items():
                ref = TABLE1_REFERENCE[(prior_label, stat)][k]
                rows.append(
                    Table1Row(
                        prior=prior_label,
                        n=n,
                        statistic=stat,
                        value=value,
                        reference=ref,
                        ok=abs(value - ref) <= _TABLE1_TOL,
                    )
                )
    return rows


# --- artifacts ----------------------------------------------------------------

def write_results(table: ResultTable, path, plan: ExperimentPlan | None = None,
                  wall_time_s: float | None = None) -> dict:
    """Write the fixed-header CSV plus a JSON manifest; returns the manifest.

    Reruns of the same plan + seed produce byte-identical CSVs (the manifest
    carries wall time, so only the CSV is bit-stable).
    """
    path = Path(path)
    manifest = {
        "seed": None if plan is None else {
            "base_seed": plan.seed.base_seed, "stream_id": plan.seed.stream_id
        },
        "plan": None if plan is None else plan.to_dict(),
        "plan_hash": None if plan is None else plan_hash(plan),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "bayeschi": __version__,
        },
        "wall_time_s": wall_time_s,
        "written_at_unix": time.time(),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["design", "hypothesis", "statistic", "rate", "mcse", "reps"])
            for r in table.rows:
                writer.writerow(
                    [r.design, r.hypothesis, r.statistic, repr(r.rate), repr(r.mcse), r.reps]
                )
        with open(path.with_suffix(path.suffix + ".manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write results to {path}: {exc}") from exc
    return manifest


def read_results(path) -> ResultTable:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [
                ResultRow(
                    design=row["design"],
                    hypothesis=row["hypothesis"],
                    statistic=row["statistic"],
                    rate=float(row["rate"]),
                    mcse=float(row["mcse"]),
                    reps=int(row["reps"]),
                )
                for row in reader
            ]
    except OSError as exc:
        raise IoError(f"cannot read results from {path}: {exc}") from exc
    return ResultTable(rows)
