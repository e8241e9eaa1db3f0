"""Benchmark sweeps: generate ESPDP instances per n, solve, baseline, aggregate.

Every instance and solver seed is derived from ``(master_seed, n, index)``, so
the output does not depend on how many worker processes run the batch.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ExtinctionError, OracleViolationError
from .oracle import brute_force, deviation
from .pa import PaConfig, run_pa
from .perm import make_rng
from .problems import EspdpParams, generate_espdp
from .pt import PtConfig, run_pt
from .ssmc import SsmcConfig, run_ssmc

SOLVERS = {
    "pt": (run_pt, PtConfig),
    "pa": (run_pa, PaConfig),
    "ssmc": (run_ssmc, SsmcConfig),
}

INSTANCE_COLUMNS = ["n", "index", "seed", "solver", "total", "unique", "best", "exact", "deviation", "status"]
SUMMARY_COLUMNS = ["n", "instances", "failures", "mean_total_queries", "mean_unique_queries",
                   "mean_deviation", "span", "error"]


def derived_seed(master_seed: int, *key: int) -> int:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def worker_count() -> int:
    raw = os.environ.get("PERMQIO_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BenchPlan:
    n_values: tuple[int, ...]
    instances_per_n: int
    solver: str
    # solver config fields other than the seed, shared by every run in the plan
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    cap: int = 10

    def __post_init__(self):
        if not self.n_values:
            raise ValueError("the plan needs at least one n")
        if min(self.n_values) < 1:
            raise ValueError("every n must be >= 1")
        if self.instances_per_n < 1:
            raise ValueError("instances_per_n must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        # fail on bad hyperparameters before any work starts
        make_config(self.solver, self.hyperparameters, 0)


def make_config(solver: str, hyperparameters: dict, seed: int):
    _, config_cls = SOLVERS[solver]
    return config_cls(**{**hyperparameters, "seed": seed})


def bench_instance(n: int, index: int, master_seed: int, params=EspdpParams()):
    return generate_espdp(n, make_rng(master_seed, n, index), params, seed=master_seed)


def run_one(plan: BenchPlan, n: int, index: int) -> dict:
    inst = bench_instance(n, index, plan.seed)
    run_seed = derived_seed(plan.seed, n, index)
    solve, _ = SOLVERS[plan.solver]
    status = "ok"
    try:
        report = solve(inst, make_config(plan.solver, plan.hyperparameters, run_seed))
    except ExtinctionError as exc:
        report, status = exc.report, "extinct"
    row = {"n": n, "index": index, "seed": run_seed, "solver": plan.solver,
           "total": None, "unique": None, "best": None, "exact": None, "deviation": None,
           "status": status}
    if report is not None:
        row.update(total=report.total_queries, unique=report.unique_queries, best=report.best_energy)
    if n <= plan.cap:
        exact = brute_force(inst, cap=plan.cap)
        row["exact"] = exact.min_cost
        if row["best"] is not None:
            try:
                row["deviation"] = deviation(row["best"], exact)
            except OracleViolationError:
                row["status"] = "oracle-violation"
    return row


def _run_task(args):
    return run_one(*args)


def run_bench(plan: BenchPlan, workers: int | None = None) -> list[dict]:
    tasks = [(plan, n, i) for n in plan.n_values for i in range(plan.instances_per_n)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_task, tasks, chunksize=1))


def summarize(plan: BenchPlan, rows: list[dict]) -> list[dict]:
    out = []
    for n in plan.n_values:
        group = [r for r in rows if r["n"] == n]
        done = [r for r in group if r["total"] is not None]
        failures = sum(r["status"] != "ok" for r in group)
        entry = {"n": n, "instances": len(group), "failures": failures,
                 "mean_total_queries": None, "mean_unique_queries": None,
                 "mean_deviation": None, "span": None, "error": None}
        if done:
            entry["mean_total_queries"] = float(np.mean([r["total"] for r in done]))
            entry["mean_unique_queries"] = float(np.mean([r["unique"] for r in done]))
            entry["span"] = entry["mean_unique_queries"] / math.factorial(n)
        devs = [r["deviation"] for r in group if r["deviation"] is not None]
        if devs:
            entry["mean_deviation"] = float(np.mean(devs))
            entry["error"] = entry["mean_deviation"]
        out.append(entry)
    return out


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                         for c in columns])
    return buf.getvalue()


def write_bench(plan: BenchPlan, rows: list[dict], out_dir: str) -> dict[str, str]:
    """Write ``instances.csv``, ``summary.csv`` and ``summary.json``; return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    summary = summarize(plan, rows)
    doc = {
        "plan": {**asdict(plan), "n_values": list(plan.n_values)},
        "performance_vectors": [{"n": s["n"], "span": s["span"], "error": s["error"]} for s in summary],
    }
    paths = {
        "instances": os.path.join(out_dir, "instances.csv"),
        "summary": os.path.join(out_dir, "summary.csv"),
        "json": os.path.join(out_dir, "summary.json"),
    }
    with open(paths["instances"], "w") as fh:
        fh.write(_csv(rows, INSTANCE_COLUMNS))
    with open(paths["summary"], "w") as fh:
        fh.write(_csv(summary, SUMMARY_COLUMNS))
    with open(paths["json"], "w") as fh:
        fh.write(json.dumps(doc, indent=1) + "\n")
    return paths
