"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 instance or schema
error, 4 solver failure (extinction), 5 brute-force cap refusal.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import SOLVERS, BenchPlan, make_config, run_bench, write_bench
from .errors import CapExceededError, ConfigError, ExtinctionError, InstanceError
from .oracle import DEFAULT_CAP, brute_force
from .perm import make_rng
from .problems import deserialize_instance, generate_espdp, generate_tsp, serialize_instance

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INSTANCE = 3
EXIT_SOLVER = 4
EXIT_CAP = 5

# flag name -> (solver, config field, type)
HYPERPARAMETERS = {
    "pt-replicas": ("pt", "replicas", int),
    "pt-t-hot": ("pt", "t_hot", float),
    "pt-t-cold": ("pt", "t_cold", float),
    "pt-profile": ("pt", "profile", str),
    "pt-sweeps": ("pt", "sweeps_per_round", int),
    "pt-max-rounds": ("pt", "max_rounds", int),
    "pt-patience": ("pt", "patience", int),
    "pa-population": ("pa", "population", int),
    "pa-steps": ("pa", "steps", int),
    "pa-sweeps": ("pa", "sweeps", int),
    "pa-t-hot": ("pa", "t_hot", float),
    "pa-t-cold": ("pa", "t_cold", float),
    "ssmc-walkers": ("ssmc", "walkers", int),
    "ssmc-steps": ("ssmc", "steps", int),
    "ssmc-steps-per-stop": ("ssmc", "steps_per_stop", int),
    "ssmc-dt-fraction": ("ssmc", "dt_fraction", float),
    "ssmc-gain": ("ssmc", "gain", float),
    "ssmc-schedule": ("ssmc", "schedule", str),
    "ssmc-controller": ("ssmc", "controller", str),
}


def _add_hyperparameters(parser):
    group = parser.add_argument_group("solver hyperparameters (defaults from each solver)")
    for flag, (_, _, kind) in HYPERPARAMETERS.items():
        group.add_argument(f"--{flag}", type=kind, default=None)


def _hyperparameters(args, solver: str) -> dict:
    out = {}
    for flag, (owner, name, _) in HYPERPARAMETERS.items():
        value = getattr(args, flag.replace("-", "_"))
        if value is None:
            continue
        if owner != solver:
            raise ConfigError(f"--{flag} does not apply to solver {solver!r}")
        out[name] = value
    return out


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _n_range(text):
    """``"4-10"``, ``"4..10"``, ``"4,6,8"`` or a single integer."""
    try:
        for sep in ("..", "-"):
            if sep in text:
                lo, hi = (int(x) for x in text.split(sep))
                values = tuple(range(lo, hi + 1))
                break
        else:
            values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse n range {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"n range {text!r} is empty or contains n < 1")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permqio", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write random instance documents")
    gen.add_argument("--n", type=_positive, required=True)
    gen.add_argument("--count", type=_positive, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--kind", choices=["espdp", "tsp"], default="espdp")
    gen.add_argument("--out", required=True, help="output directory")

    solve = sub.add_parser("solve", help="run one solver on an instance file")
    solve.add_argument("instance")
    solve.add_argument("--solver", choices=sorted(SOLVERS), required=True)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--out", required=True, help="report file")
    _add_hyperparameters(solve)

    exact = sub.add_parser("exact", help="brute-force minimum of an instance file")
    exact.add_argument("instance")
    exact.add_argument("--cap", type=int, default=DEFAULT_CAP)
    exact.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="benchmark sweep over n")
    bench.add_argument("--n", type=_n_range, required=True, help="e.g. 4-10 or 4,6,8")
    bench.add_argument("--instances-per-n", type=_positive, default=20)
    bench.add_argument("--solver", choices=sorted(SOLVERS), required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--cap", type=int, default=DEFAULT_CAP)
    bench.add_argument("--out", required=True, help="output directory")
    _add_hyperparameters(bench)
    return parser


def _load(path):
    try:
        with open(path, "rb") as fh:
            return deserialize_instance(fh.read())
    except OSError as exc:
        raise InstanceError(f"cannot read instance {path}: {exc.strerror}") from exc


def _write(path, data: bytes):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    make = generate_espdp if args.kind == "espdp" else generate_tsp
    for index in range(args.count):
        rng = make_rng(args.seed, args.n, index)
        inst = make(args.n, rng, seed=args.seed)
        path = os.path.join(args.out, f"{args.kind}_n{args.n}_i{index}_s{args.seed}.json")
        _write(path, serialize_instance(inst))
        print(path)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    config = make_config(args.solver, _hyperparameters(args, args.solver), args.seed)
    solve, _ = SOLVERS[args.solver]
    try:
        report = solve(inst, config)
    except ExtinctionError as exc:
        if exc.report is not None:
            _write(args.out, exc.report.to_json())
        print(f"permqio: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write(args.out, report.to_json())
    print(f"best_energy={report.best_energy!r} unique_queries={report.unique_queries}")
    return EXIT_OK


def cmd_exact(args) -> int:
    inst = _load(args.instance)
    result = brute_force(inst, cap=args.cap)
    _write(args.out, (json.dumps(result.to_document(), indent=1) + "\n").encode())
    print(f"min_cost={result.min_cost!r} evaluations={result.evaluations}")
    return EXIT_OK


def cmd_bench(args) -> int:
    plan = BenchPlan(n_values=args.n, instances_per_n=args.instances_per_n, solver=args.solver,
                     hyperparameters=_hyperparameters(args, args.solver), seed=args.seed, cap=args.cap)
    rows = run_bench(plan)
    paths = write_bench(plan, rows, args.out)
    for path in paths.values():
        print(path)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "exact": cmd_exact, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"permqio: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstanceError as exc:
        print(f"permqio: instance error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except CapExceededError as exc:
        print(f"permqio: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"permqio: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INSTANCE


if __name__ == "__main__":
    sys.exit(main())
