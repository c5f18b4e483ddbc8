"""Command-line front end: solve problem files, generate benchmark problems,
run benchmark sweeps.

Exit codes: 0 solved, 2 infeasibility certified, 3 iteration/time limit,
4 parse or numerical failure. Set CONIQ_LOG=debug|info|warning to see solver
progress on stderr.
"""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, solve
from .benchstats import (
    BenchmarkRecord,
    summary_text,
    write_csv,
)
from .generators import (
    block_arrow_sdp,
    huber_instance,
    lasso_instance,
    random_lp,
    random_qp,
    random_socp,
)
from .io import (
    ParseError,
    parse_problem,
    problem_to_dict,
    verify_result,
    write_problem,
    write_result,
)
from .model import ProblemError, Status

_EXIT = {
    Status.SOLVED: 0,
    Status.ALMOST_SOLVED: 0,
    Status.PRIMAL_INFEASIBLE: 2,
    Status.ALMOST_PRIMAL_INFEASIBLE: 2,
    Status.DUAL_INFEASIBLE: 2,
    Status.ALMOST_DUAL_INFEASIBLE: 2,
    Status.MAX_ITERATIONS: 3,
    Status.TIME_LIMIT: 3,
    Status.INSUFFICIENT_PROGRESS: 3,
    Status.NUMERICAL_ERROR: 4,
}

# kind -> (factory, positional dims it accepts)
_GENERATORS = {
    "huber": (huber_instance, ("m", "n")),
    "lasso": (lasso_instance, ("m", "n")),
    "random-lp": (random_lp, ("m", "n")),
    "random-qp": (random_qp, ("m", "n")),
    "random-socp": (random_socp, ("n",)),
    "block-arrow-sdp": (block_arrow_sdp, ("side", "width")),
}


def _settings_overrides(args):
    over = {}
    if args.max_iter is not None:
        over["max_iter"] = args.max_iter
    if args.time_limit is not None:
        over["time_limit"] = args.time_limit
    if args.tol_feas is not None:
        over["tol_feas"] = args.tol_feas
    if args.no_equilibrate:
        over["equilibrate"] = False
    if args.chordal is not None:
        over["chordal"] = args.chordal == "on"
    return over


def cmd_solve(args):
    data = parse_problem(args.file)
    result = solve(data, **_settings_overrides(args))
    name = data.metadata.get("name", Path(args.file).stem)
    print(f"problem    {name}  (n={data.n}, m={data.m})")
    print(f"status     {result.status}")
    print(f"objective  primal {result.obj_primal:.12g}  dual {result.obj_dual:.12g}")
    print(f"iterations {result.iterations}   time {result.solve_time:.4g}s")
    expected = data.metadata.get("expected_objective")
    if expected is not None and result.is_optimal:
        print(f"expected   {expected:.12g}  (gap {result.obj_primal - expected:+.3g})")
    if args.out:
        write_result(result, args.out)
    return _EXIT.get(result.status, 4)


def cmd_gen(args):
    factory, dim_names = _GENERATORS[args.kind]
    if len(args.dims) > len(dim_names):
        raise ParseError(
            f"{args.kind} takes at most {len(dim_names)} dims {dim_names}, "
            f"got {args.dims}"
        )
    kwargs = dict(zip(dim_names, args.dims))
    data = factory(seed=args.seed, **kwargs)
    if args.out == "-":
        json.dump(problem_to_dict(data), sys.stdout, indent=2)
        print()
        return 0
    out = args.out or f"{data.metadata['name']}.json"
    write_problem(data, out)
    print(out)
    return 0


def _bench_one(job):
    """Worker body: one (file, label) run, summarized as a record tuple."""
    path, label, time_limit = job
    name = Path(path).stem
    try:
        data = parse_problem(path)
        name = data.metadata.get("name", name)
        overrides = {"time_limit": time_limit} if time_limit else {}
        result = solve(data, **overrides)
        status = str(result.status)
        if result.is_optimal and not verify_result(data, result)["ok"]:
            status = "VerificationFailed"
        obj = float(result.obj_primal)
        t, iters = float(result.solve_time), int(result.iterations)
    except Exception as exc:  # noqa: BLE001 — a bad problem must not kill the sweep
        logging.getLogger("coniq").warning("bench %s failed: %s", path, exc)
        status, obj, t, iters = "Error", math.nan, 0.0, 0
    if status not in ("Solved",) and time_limit:
        t = time_limit  # failure convention: charge the full budget
    return BenchmarkRecord(problem=name, solver=label, status=status,
                           time=t, iterations=iters, objective=obj)


def cmd_bench(args):
    files = sorted(Path(args.dir).glob("*.json"))
    if not files:
        print(f"no .json problems under {args.dir}", file=sys.stderr)
        return 4
    jobs = [(str(f), args.label, args.time_limit) for f in files]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(_bench_one, jobs))
    else:
        records = [_bench_one(j) for j in jobs]
    records.sort(key=lambda r: (r.problem, r.solver))
    for r in records:
        obj = "-" if not np.isfinite(r.objective) else f"{r.objective:.9g}"
        print(f"{r.problem:28s} {r.status:22s} {r.time:9.4f}s "
              f"{r.iterations:3d} it  obj {obj}")
    print()
    print(summary_text(records))
    if args.csv:
        write_csv(records, args.csv)
        print(f"\nwrote {args.csv}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="coniq",
        description="conic interior-point solver for quadratic objectives",
    )
    p.add_argument("--version", action="version", version=f"coniq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a problem file")
    ps.add_argument("file")
    ps.add_argument("--max-iter", type=int, default=None)
    ps.add_argument("--time-limit", type=float, default=None, metavar="S")
    ps.add_argument("--tol-feas", type=float, default=None, metavar="E")
    ps.add_argument("--no-equilibrate", action="store_true")
    ps.add_argument("--chordal", choices=("on", "off"), default=None)
    ps.add_argument("--out", default=None, metavar="result.json")
    ps.set_defaults(fn=cmd_solve)

    pg = sub.add_parser("gen", help="generate a benchmark problem file")
    pg.add_argument("kind", choices=sorted(_GENERATORS))
    pg.add_argument("dims", nargs="*", type=int)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--out", default=None, help="output path ('-' for stdout)")
    pg.set_defaults(fn=cmd_gen)

    pb = sub.add_parser("bench", help="solve every problem in a directory")
    pb.add_argument("dir")
    pb.add_argument("--time-limit", type=float, default=0.0, metavar="S")
    pb.add_argument("--csv", default=None, metavar="out.csv")
    pb.add_argument("--workers", type=int, default=1)
    pb.add_argument("--label", default="coniq")
    pb.set_defaults(fn=cmd_bench)
    return p


def main(argv=None):
    level = os.environ.get("CONIQ_LOG")
    if level:
        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.INFO),
            format="%(levelname)s %(name)s: %(message)s",
        )
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ProblemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
