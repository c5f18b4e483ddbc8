"""Benchmark bookkeeping: shifted geometric means and performance profiles.

A record is one (problem, solver) run. Failed runs are expected to carry
t = time limit already (the harness substitutes it), so every statistic here
can stay a pure function of the records.
"""

import csv
import math
from dataclasses import dataclass

SUCCESS = ("Solved",)


@dataclass(frozen=True)
class BenchmarkRecord:
    problem: str
    solver: str
    status: str
    time: float
    iterations: int
    objective: float  # nan when the run produced none

    @property
    def succeeded(self) -> bool:
        return self.status in SUCCESS


def shifted_geometric_mean(times, k=1.0):
    times = list(times)
    if not times:
        raise ValueError("no times given")
    if any(t < 0 for t in times):
        raise ValueError("negative time")
    # direct product is exact for small sets (e.g. integer times);
    # exp-mean-log only as the under/overflow fallback
    prod = math.prod(t + k for t in times)
    if 0.0 < prod < math.inf:
        return prod ** (1.0 / len(times)) - k
    return math.exp(sum(math.log(t + k) for t in times) / len(times)) - k


def _by_solver(records):
    out = {}
    for r in records:
        out.setdefault(r.solver, {})[r.problem] = r
    return out


def _common_problems(table):
    problems = None
    for runs in table.values():
        names = set(runs)
        problems = names if problems is None else problems & names
    return sorted(problems or ())


def sgm_summary(records, k=1.0):
    """Per-solver shifted geometric mean over the common problem set, plus
    the ratio to the best solver (best = 1)."""
    table = _by_solver(records)
    problems = _common_problems(table)
    if not problems:
        raise ValueError("no problem is covered by every solver")
    g = {s: shifted_geometric_mean([runs[p].time for p in problems], k)
         for s, runs in table.items()}
    best = min(g.values())
    return {s: {"sgm": gs, "ratio": gs / best if best > 0 else math.inf}
            for s, gs in sorted(g.items())}


def relative_profile(records):
    """f_s(tau) = fraction of problems solved within tau times the fastest
    solver's time. Failed runs get ratio = +inf (never counted)."""
    table = _by_solver(records)
    problems = _common_problems(table)
    ratios = {s: [] for s in table}
    for p in problems:
        best = min(runs[p].time for runs in table.values() if runs[p].succeeded) \
            if any(runs[p].succeeded for runs in table.values()) else math.nan
        for s, runs in table.items():
            r = runs[p]
            ratios[s].append(r.time / best if r.succeeded and best > 0 else math.inf)
    taus = sorted({u for us in ratios.values() for u in us if math.isfinite(u)})
    return {
        s: [(t, sum(u <= t for u in us) / len(problems)) for t in taus]
        for s, us in sorted(ratios.items())
    }


def absolute_profile(records):
    """f_s(tau) = fraction of problems solved in at most tau seconds."""
    table = _by_solver(records)
    problems = _common_problems(table)
    times = {
        s: [runs[p].time if runs[p].succeeded else math.inf for p in problems]
        for s, runs in table.items()
    }
    taus = sorted({t for ts in times.values() for t in ts if math.isfinite(t)})
    return {
        s: [(t, sum(u <= t for u in ts) / len(problems)) for t in taus]
        for s, ts in sorted(times.items())
    }


_CSV_FIELDS = ("problem", "solver", "status", "time", "iters", "objective")


def write_csv(records, path):
    records = sorted(records, key=lambda r: (r.problem, r.solver))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_FIELDS)
        for r in records:
            w.writerow([r.problem, r.solver, r.status, repr(r.time),
                        r.iterations, repr(r.objective)])


def read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != _CSV_FIELDS:
            raise ValueError(f"{path}: unexpected columns {rd.fieldnames}")
        return [
            BenchmarkRecord(
                problem=row["problem"], solver=row["solver"],
                status=row["status"], time=float(row["time"]),
                iterations=int(row["iters"]), objective=float(row["objective"]),
            )
            for row in rd
        ]


def _fmt_table(rows, header):
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    def line(vals):
        return "  ".join(str(v).ljust(w) for v, w in zip(vals, widths)).rstrip()
    return "\n".join([line(header), line(["-" * w for w in widths]),
                      *[line(r) for r in rows]])


def summary_text(records, k=1.0):
    """SGM and profile tables for terminal output."""
    sgm = sgm_summary(records, k=k)
    rows = [(s, f"{v['sgm']:.6g}", f"{v['ratio']:.4g}") for s, v in sgm.items()]
    out = ["shifted geometric mean (k=%g)" % k,
           _fmt_table(rows, ("solver", "sgm", "ratio"))]
    for title, prof in (("relative", relative_profile(records)),
                        ("absolute", absolute_profile(records))):
        pts = [(s, " ".join(f"({t:.3g},{f:.2f})" for t, f in steps[:8]))
               for s, steps in prof.items()]
        out += ["", f"{title} profile (tau, fraction)",
                _fmt_table(pts, ("solver", "steps"))]
    return "\n".join(out)
