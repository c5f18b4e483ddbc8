/**
 * JSON problem/result (de)serialization delegating to the core file format.
 *
 * Writing is canonical: triplets sorted column-major with duplicates summed
 * and zeros dropped, fixed key order, two-space indent. save() is therefore
 * a fixed point — save(load(f)) reproduces f byte-for-byte for files this
 * module wrote. The core writes the same layout, but Python prints integral
 * floats as "1.0" where JavaScript prints "1", so cross-language byte
 * identity is not guaranteed (values are identical either way: both sides
 * print shortest round-trip decimals).
 */

import { ParseError, ProblemError } from "./errors.js";
import type { Cone, Problem, Result, Triplets } from "./types.js";
import { validateProblem } from "./validate.js";

export const FORMAT_VERSION = 1;

function canonicalTriplets(t: Triplets): Triplets {
  const entries = new Map<number, { r: number; c: number; v: number }>();
  for (let k = 0; k < t.vals.length; k++) {
    // rows/cols are validated 32-bit-safe indices, so this key is collision-free
    const key = t.cols[k] * 0x100000000 + t.rows[k];
    const hit = entries.get(key);
    if (hit) hit.v += t.vals[k];
    else entries.set(key, { r: t.rows[k], c: t.cols[k], v: t.vals[k] });
  }
  const sorted = [...entries.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([, e]) => e)
    .filter((e) => e.v !== 0);
  return {
    rows: sorted.map((e) => e.r),
    cols: sorted.map((e) => e.c),
    vals: sorted.map((e) => e.v),
  };
}

export function problemToText(p: Problem): string {
  validateProblem(p);
  const cones = p.cones.map((c) => {
    const out: Cone = { type: c.type, dim: c.dim };
    if (c.type === "Power") out.alpha = c.alpha;
    return out;
  });
  const doc: Record<string, unknown> = {
    version: FORMAT_VERSION,
    n: p.n,
    m: p.m,
    P: canonicalTriplets(p.P),
    q: p.q,
    A: canonicalTriplets(p.A),
    b: p.b,
    cones,
    obj_offset: p.obj_offset ?? 0,
  };
  if (p.metadata && Object.keys(p.metadata).length > 0) {
    doc.metadata = p.metadata;
  }
  return JSON.stringify(doc, null, 2) + "\n";
}

function requireField<T>(
  obj: Record<string, unknown>,
  field: string,
  source: string,
): T {
  if (!(field in obj)) {
    throw new ParseError(`${source}: missing field '${field}'`);
  }
  return obj[field] as T;
}

function numberVector(raw: unknown, field: string, source: string): number[] {
  if (!Array.isArray(raw) || raw.some((x) => typeof x !== "number")) {
    throw new ParseError(`${source}: field '${field}' must be a number array`);
  }
  return raw as number[];
}

export function problemFromText(text: string, source = "<problem>"): Problem {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new ParseError(`${source}: invalid JSON: ${(err as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ParseError(`${source}: top level should be an object`);
  }
  const doc = obj as Record<string, unknown>;
  const version = requireField<number>(doc, "version", source);
  if (version !== FORMAT_VERSION) {
    throw new ParseError(
      `${source}: format version ${version} not supported (expected ${FORMAT_VERSION})`,
    );
  }
  const problem: Problem = {
    n: requireField<number>(doc, "n", source),
    m: requireField<number>(doc, "m", source),
    P: readTriplets(doc, "P", source),
    q: numberVector(requireField(doc, "q", source), "q", source),
    A: readTriplets(doc, "A", source),
    b: numberVector(requireField(doc, "b", source), "b", source),
    cones: requireField<Cone[]>(doc, "cones", source),
    obj_offset: (doc.obj_offset as number | undefined) ?? 0,
  };
  if (doc.metadata !== undefined) {
    problem.metadata = doc.metadata as Record<string, unknown>;
  }
  try {
    validateProblem(problem);
  } catch (err) {
    // parsing wraps data errors, same as the core's reader
    if (err instanceof ProblemError) {
      throw new ParseError(`${source}: ${err.message}`);
    }
    throw err;
  }
  return problem;
}

function readTriplets(
  doc: Record<string, unknown>,
  field: string,
  source: string,
): Triplets {
  const raw = requireField<Record<string, unknown>>(doc, field, source);
  if (typeof raw !== "object" || raw === null) {
    throw new ParseError(`${source}: field '${field}' must be a triplet object`);
  }
  return {
    rows: numberVector(requireField(raw, "rows", source), `${field}.rows`, source),
    cols: numberVector(requireField(raw, "cols", source), `${field}.cols`, source),
    vals: numberVector(requireField(raw, "vals", source), `${field}.vals`, source),
  };
}

const RESULT_FIELDS = [
  "status",
  "obj_primal",
  "obj_dual",
  "iterations",
  "solve_time",
  "x",
  "s",
  "z",
] as const;

/** Non-finite entries travel as JSON null; restore them to NaN here. */
export function resultFromText(text: string, source = "<result>"): Result {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new ParseError(`${source}: invalid JSON: ${(err as Error).message}`);
  }
  const doc = obj as Record<string, unknown>;
  for (const field of RESULT_FIELDS) {
    if (!(field in doc)) throw new ParseError(`${source}: missing field '${field}'`);
  }
  const scalar = (v: unknown): number => (v === null ? NaN : (v as number));
  const vec = (v: unknown): number[] => (v as (number | null)[]).map(scalar);
  return {
    status: doc.status as Result["status"],
    obj_primal: scalar(doc.obj_primal),
    obj_dual: scalar(doc.obj_dual),
    iterations: doc.iterations as number,
    solve_time: doc.solve_time as number,
    x: vec(doc.x),
    s: vec(doc.s),
    z: vec(doc.z),
  };
}
