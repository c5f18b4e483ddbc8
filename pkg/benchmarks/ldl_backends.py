#!/usr/bin/env python3
"""Compiled vs pure-Python LDL kernel comparison.

Generates a small mixed corpus, solves it once per backend in separate
processes (backend choice is import-time, via CONIQ_PURE_LDL), and prints
per-problem times plus the aggregate tables. The two backends must agree on
every objective to tight tolerance — they produce bit-identical factors, so
any drift here is a bug, not noise.

Usage: python3 benchmarks/ldl_backends.py [--keep DIR] [--time-limit S]
"""

import argparse
import os
import subprocess
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from coniq.benchstats import read_csv, summary_text  # noqa: E402
from coniq.generators import (  # noqa: E402
    block_arrow_sdp,
    huber_instance,
    lasso_instance,
    random_lp,
    random_qp,
    random_socp,
)
from coniq.io import write_problem  # noqa: E402

CORPUS = [
    lambda: random_qp(m=60, n=30, seed=1),
    lambda: random_qp(m=140, n=70, seed=2),
    lambda: random_lp(m=120, n=50, seed=3),
    lambda: random_socp(n=40, seed=4),
    lambda: huber_instance(m=50, n=12, seed=5),
    lambda: lasso_instance(m=40, n=20, seed=6),
    lambda: block_arrow_sdp(20, 4, seed=7),
]


def run_backend(label, pure, corpus_dir, csv_path, time_limit):
    env = dict(os.environ)
    env["CONIQ_PURE_LDL"] = "1" if pure else ""
    cmd = [sys.executable, "-m", "coniq.cli", "bench", str(corpus_dir),
           "--label", label, "--csv", str(csv_path),
           "--time-limit", str(time_limit)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        raise SystemExit(f"{label} bench failed:\n{proc.stderr}")
    return read_csv(csv_path)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--keep", default=None,
                    help="directory to keep problems/CSVs in (default: temp)")
    ap.add_argument("--time-limit", type=float, default=60.0)
    args = ap.parse_args(argv)

    ctx = tempfile.TemporaryDirectory() if args.keep is None else None
    root = Path(args.keep) if args.keep else Path(ctx.name)
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    for make in CORPUS:
        data = make()
        write_problem(data, corpus / f"{data.metadata['name']}.json")

    records = []
    for label, pure in (("ldl-compiled", False), ("ldl-python", True)):
        print(f"running backend {label} ...", flush=True)
        records += run_backend(label, pure, corpus, root / f"{label}.csv",
                               args.time_limit)

    by_problem = {}
    for r in sorted(records, key=lambda r: (r.problem, r.solver)):
        by_problem.setdefault(r.problem, []).append(r)
        print(f"{r.problem:24s} {r.solver:14s} {r.status:10s} "
              f"{r.time:8.4f}s  {r.iterations:3d} it  obj {r.objective:.9g}")

    worst = 0.0
    for runs in by_problem.values():
        objs = [r.objective for r in runs]
        worst = max(worst, abs(objs[0] - objs[1]) / max(1.0, abs(objs[0])))
    print(f"\nworst objective disagreement between backends: {worst:.3e}")
    if worst > 1e-9:
        raise SystemExit("backends disagree; factors should be bit-identical")

    print()
    print(summary_text(records))
    if ctx:
        ctx.cleanup()
    return 0


if __name__ == "__main__":
    sys.exit(main())
