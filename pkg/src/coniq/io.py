"""Problem and result files.

One JSON document per problem: triplet-form sparse data (0-based, P upper
triangle only), dense vectors as plain lists, cones as ``{type, dim, alpha?}``
records. Floats go through ``repr`` (shortest round-trip decimal), so
write -> parse -> write is byte-stable. Result documents carry the solution
vectors next to the reported status so a consumer can re-check the claim
without touching solver internals; :func:`verify_result` does exactly that.
"""

import json

import numpy as np
import scipy.sparse as sp

from .model import (
    POW,
    ZERO,
    ConeSpec,
    ProblemData,
    ProblemError,
    SolveResult,
    Status,
    sym_matvec,
    validate_problem,
)

FORMAT_VERSION = 1

_CONE_FIELDS = {"type", "dim", "alpha"}


class ParseError(ValueError):
    """A problem file that does not match the expected layout."""


def _require(obj, field, kind, where):
    if field not in obj:
        raise ParseError(f"{where}: missing field {field!r}")
    val = obj[field]
    if kind is not None and not isinstance(val, kind):
        raise ParseError(
            f"{where}: field {field!r} should be {kind.__name__}, "
            f"got {type(val).__name__}"
        )
    return val


def _vector(obj, field, length, where):
    raw = _require(obj, field, list, where)
    try:
        vec = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: field {field!r} is not numeric: {exc}") from None
    if vec.shape != (length,):
        raise ParseError(
            f"{where}: field {field!r} has length {vec.size}, expected {length}"
        )
    return vec


def _triplets(obj, field, shape, where):
    tri = _require(obj, field, dict, where)
    loc = f"{where}: field {field!r}"
    cols = {}
    for key in ("rows", "cols", "vals"):
        if key not in tri:
            raise ParseError(f"{loc} is missing {key!r}")
        cols[key] = tri[key]
    lengths = {key: len(v) for key, v in cols.items()}
    if len(set(lengths.values())) != 1:
        raise ParseError(f"{loc} has ragged triplet arrays {lengths}")
    try:
        rows = np.asarray(cols["rows"], dtype=np.int64)
        cidx = np.asarray(cols["cols"], dtype=np.int64)
        vals = np.asarray(cols["vals"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{loc} is not numeric: {exc}") from None
    if rows.size:
        if rows.min() < 0 or cidx.min() < 0:
            raise ParseError(f"{loc} has negative indices (0-based expected)")
        if rows.max() >= shape[0] or cidx.max() >= shape[1]:
            raise ParseError(
                f"{loc} indexes outside the declared {shape[0]}x{shape[1]} shape"
            )
    return sp.csc_matrix((vals, (rows, cidx)), shape=shape)


def _cones(obj, where):
    raw = _require(obj, "cones", list, where)
    specs = []
    for i, entry in enumerate(raw):
        loc = f"{where}: cones[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{loc} should be an object")
        extra = set(entry) - _CONE_FIELDS
        if extra:
            raise ParseError(f"{loc} has unknown fields {sorted(extra)}")
        kind = _require(entry, "type", str, loc)
        dim = _require(entry, "dim", int, loc)
        alpha = entry.get("alpha")
        if alpha is not None and kind != POW:
            raise ParseError(f"{loc}: alpha given for non-{POW} cone {kind!r}")
        spec = ConeSpec(kind, dim, None if alpha is None else float(alpha))
        try:
            spec.validate()
        except ProblemError as exc:
            raise ParseError(f"{loc}: {exc}") from None
        specs.append(spec)
    return tuple(specs)


def problem_from_dict(obj, source="<problem>"):
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: top level should be an object")
    version = _require(obj, "version", int, source)
    if version != FORMAT_VERSION:
        raise ParseError(
            f"{source}: format version {version} not supported "
            f"(expected {FORMAT_VERSION})"
        )
    n = _require(obj, "n", int, source)
    m = _require(obj, "m", int, source)
    cones = _cones(obj, source)
    rows = sum(c.rows for c in cones)
    if rows != m:
        raise ParseError(f"{source}: cones cover {rows} rows but m = {m}")
    data = ProblemData(
        P=_triplets(obj, "P", (n, n), source),
        q=_vector(obj, "q", n, source),
        A=_triplets(obj, "A", (m, n), source),
        b=_vector(obj, "b", m, source),
        cones=cones,
        obj_offset=float(obj.get("obj_offset", 0.0)),
        metadata=dict(obj.get("metadata") or {}),
    )
    try:
        return validate_problem(data)
    except ProblemError as exc:
        raise ParseError(f"{source}: {exc}") from None


def problem_to_dict(data: ProblemData) -> dict:
    data = validate_problem(data)

    def tri(M):
        r, c, v = sp.find(M)
        order = np.lexsort((r, c))
        return {
            "rows": r[order].tolist(),
            "cols": c[order].tolist(),
            "vals": v[order].tolist(),
        }

    out = {
        "version": FORMAT_VERSION,
        "n": data.n,
        "m": data.m,
        "P": tri(data.P),
        "q": data.q.tolist(),
        "A": tri(data.A),
        "b": data.b.tolist(),
        "cones": [
            {"type": c.kind, "dim": c.dim, **({"alpha": c.alpha} if c.kind == POW else {})}
            for c in data.cones
        ],
        "obj_offset": data.obj_offset,
    }
    if data.metadata:
        out["metadata"] = data.metadata
    return out


def parse_problem(path) -> ProblemData:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}"
            ) from None
    return problem_from_dict(obj, source=str(path))


def write_problem(data: ProblemData, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(data), fh, indent=2)
        fh.write("\n")


def _finite_or_none(x):
    x = float(x)
    return x if np.isfinite(x) else None


def result_to_dict(result: SolveResult) -> dict:
    # JSON has no NaN literal, so non-finite entries (objectives of
    # infeasible problems, vectors of failed runs) are serialized as null
    def vec(v):
        return [_finite_or_none(x) for x in np.asarray(v, dtype=np.float64)]

    return {
        "status": str(result.status),
        "obj_primal": _finite_or_none(result.obj_primal),
        "obj_dual": _finite_or_none(result.obj_dual),
        "iterations": int(result.iterations),
        "solve_time": float(result.solve_time),
        "x": vec(result.x),
        "s": vec(result.s),
        "z": vec(result.z),
    }


def write_result(result: SolveResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result_to_dict(result), fh, indent=2)
        fh.write("\n")


def parse_result(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    for key in ("status", "obj_primal", "obj_dual", "iterations",
                "solve_time", "x", "s", "z"):
        if key not in obj:
            raise ParseError(f"{path}: missing field {key!r}")

    def vec(v):
        return np.asarray([np.nan if x is None else x for x in v], dtype=np.float64)

    obj["x"], obj["s"], obj["z"] = vec(obj["x"]), vec(obj["s"]), vec(obj["z"])
    for key in ("obj_primal", "obj_dual"):
        obj[key] = np.nan if obj[key] is None else float(obj[key])
    return obj


def verify_result(data: ProblemData, result, tol: float = 1e-6) -> dict:
    """Recompute optimality/certificate residuals from the returned vectors.

    ``result`` may be a SolveResult or a parsed result dict. Residuals are
    measured with the same scale-free normalizations the solver's stopping
    rule uses, so a freshly solved problem passes at ``tol`` comfortably
    above the solve tolerance. Returns ``{ok, status, checks}``.
    """
    if isinstance(result, SolveResult):
        status = result.status
        x, s, z = result.x, result.s, result.z
    else:
        status = Status(result["status"])
        x, s, z = result["x"], result["s"], result["z"]
    near = status in (
        Status.ALMOST_SOLVED,
        Status.ALMOST_PRIMAL_INFEASIBLE,
        Status.ALMOST_DUAL_INFEASIBLE,
    )
    lax = 1e3 * tol if near else tol
    checks = {}
    inf = np.linalg.norm

    def nrm(v):
        return inf(v, np.inf) if np.asarray(v).size else 0.0

    if status in (Status.SOLVED, Status.ALMOST_SOLVED):
        Px = sym_matvec(data.P, x)
        Ax = data.A @ x
        Atz = data.A.T @ z
        rp = nrm(Ax + s - data.b) / (1.0 + max(nrm(data.b), nrm(Ax), nrm(s)))
        rd = nrm(Px + data.q + Atz) / (1.0 + max(nrm(data.q), nrm(Px), nrm(Atz)))
        gp = 0.5 * float(x @ Px) + float(data.q @ x)
        gd = -0.5 * float(x @ Px) - float(data.b @ z)
        gap = abs(gp - gd) / (1.0 + max(abs(gp), abs(gd)))
        checks = {"primal_res": rp, "dual_res": rd, "gap_rel": gap}
        ok = rp <= lax and rd <= lax and gap <= lax
    elif status in (Status.PRIMAL_INFEASIBLE, Status.ALMOST_PRIMAL_INFEASIBLE):
        btz = float(data.b @ z)
        checks = {"b_dot_z": btz, "At_z": nrm(data.A.T @ z)}
        ok = btz < 0 and checks["At_z"] <= lax * abs(btz)
    elif status in (Status.DUAL_INFEASIBLE, Status.ALMOST_DUAL_INFEASIBLE):
        qtx = float(data.q @ x)
        checks = {
            "q_dot_x": qtx,
            "P_x": nrm(sym_matvec(data.P, x)),
            "ray_res": nrm(data.A @ x + s),
        }
        ok = qtx < 0 and checks["P_x"] <= lax * abs(qtx) \
            and checks["ray_res"] <= lax * abs(qtx)
    else:
        # limit/error statuses make no claim worth falsifying
        ok = True
    if ok and status in (Status.SOLVED, Status.ALMOST_SOLVED):
        # slack on equality rows must vanish; cone rows were checked via rp
        row = 0
        for c in data.cones:
            if c.kind == ZERO and nrm(s[row:row + c.rows]) > lax * (1.0 + nrm(data.b)):
                ok = False
            row += c.rows
    return {"ok": bool(ok), "status": str(status), "checks": checks}
