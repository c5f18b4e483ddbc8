/**
 * Shared test plumbing: reference CLI runs (independent of the binding's own
 * subprocess layer) and a corpus covering every cone type.
 */

import { execFile } from "node:child_process";
import { mkdtemp } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { save, type Problem } from "../dist/index.js";

const execFileAsync = promisify(execFile);

export interface CliOutcome {
  code: number;
  stdout: string;
  stderr: string;
}

/** Run fn over items with at most `limit` in flight (solves are whole processes). */
export async function mapLimit<T, R>(
  items: T[],
  limit: number,
  fn: (item: T) => Promise<R>,
): Promise<R[]> {
  const results = new Array<R>(items.length);
  let next = 0;
  const worker = async () => {
    while (next < items.length) {
      const i = next++;
      results[i] = await fn(items[i]);
    }
  };
  await Promise.all(Array.from({ length: Math.min(limit, items.length) }, worker));
  return results;
}

/** Run the solver CLI directly; nonzero exits are outcomes, not errors. */
export async function referenceCli(args: string[]): Promise<CliOutcome> {
  const [exe, ...head] = (process.env.CONIQ_CLI ?? "coniq").split(" ");
  try {
    const { stdout, stderr } = await execFileAsync(exe, [...head, ...args]);
    return { code: 0, stdout, stderr };
  } catch (err) {
    const e = err as { code?: number; stdout?: string; stderr?: string };
    if (typeof e.code !== "number") throw err;
    return { code: e.code, stdout: e.stdout ?? "", stderr: e.stderr ?? "" };
  }
}

export async function freshDir(): Promise<string> {
  return mkdtemp(join(tmpdir(), "coniq-ts-"));
}

const noQuadratic = () => ({ rows: [], cols: [], vals: [] });

/** min x s.t. (1, 1, x) in Kexp; optimum x* = e. */
export function expProblem(): Problem {
  return {
    n: 1,
    m: 3,
    P: noQuadratic(),
    q: [1],
    A: { rows: [2], cols: [0], vals: [-1] },
    b: [1, 1, 0],
    cones: [{ type: "Exponential", dim: 3 }],
  };
}

/** max x s.t. (x, 1, 2) in Kexp, i.e. e^x <= 2; optimum x* = ln 2. */
export function expLogProblem(): Problem {
  return {
    n: 1,
    m: 3,
    P: noQuadratic(),
    q: [-1],
    A: { rows: [0], cols: [0], vals: [-1] },
    b: [0, 1, 2],
    cones: [{ type: "Exponential", dim: 3 }],
  };
}

/** max x s.t. (1, 1, x) in Kpow(alpha); optimum x* = 1 for any alpha. */
export function powProblem(alpha: number): Problem {
  return {
    n: 1,
    m: 3,
    P: noQuadratic(),
    q: [-1],
    A: { rows: [2], cols: [0], vals: [-1] },
    b: [1, 1, 0],
    cones: [{ type: "Power", dim: 3, alpha }],
  };
}

/**
 * min 0.5||x||^2 - 1'x over the simplex-like set sum(x) = 1, x >= 0,
 * ||x|| <= 2. Optimum x = (1/3, 1/3, 1/3), objective -5/6; exercises
 * Zero, Nonnegative, and SecondOrder blocks in one problem.
 */
export function mixedConesProblem(): Problem {
  return {
    n: 3,
    m: 8,
    P: { rows: [0, 1, 2], cols: [0, 1, 2], vals: [1, 1, 1] },
    q: [-1, -1, -1],
    A: {
      rows: [0, 0, 0, 1, 2, 3, 5, 6, 7],
      cols: [0, 1, 2, 0, 1, 2, 0, 1, 2],
      vals: [1, 1, 1, -1, -1, -1, -1, -1, -1],
    },
    b: [1, 0, 0, 0, 2, 0, 0, 0],
    cones: [
      { type: "Zero", dim: 1 },
      { type: "Nonnegative", dim: 3 },
      { type: "SecondOrder", dim: 4 },
    ],
  };
}

/** min t s.t. tI - C is PSD for C = [[1, .5], [.5, 2]]; t* = (3 + sqrt 2)/2. */
export function lambdaMaxProblem(): Problem {
  const r2 = Math.SQRT2;
  return {
    n: 1,
    m: 3,
    P: noQuadratic(),
    q: [1],
    A: { rows: [0, 2], cols: [0, 0], vals: [-1, -1] },
    b: [-1, -0.5 * r2, -2],
    cones: [{ type: "PSDTriangle", dim: 2 }],
  };
}

/** x <= -1 and x >= 1 simultaneously: primal infeasible. */
export function infeasibleProblem(): Problem {
  return {
    n: 1,
    m: 2,
    P: noQuadratic(),
    q: [0],
    A: { rows: [0, 1], cols: [0, 0], vals: [1, -1] },
    b: [-1, -1],
    cones: [{ type: "Nonnegative", dim: 2 }],
  };
}

/** min -x s.t. x >= 0: unbounded below, i.e. dual infeasible. */
export function unboundedProblem(): Problem {
  return {
    n: 1,
    m: 1,
    P: noQuadratic(),
    q: [-1],
    A: { rows: [0], cols: [0], vals: [-1] },
    b: [0],
    cones: [{ type: "Nonnegative", dim: 1 }],
  };
}

export interface CorpusEntry {
  name: string;
  path: string;
}

// kind, dims, seed — modest sizes so the whole corpus solves in seconds
const GENERATED: Array<[string, number[], number]> = [
  ["random-qp", [12, 6], 1],
  ["random-qp", [20, 10], 2],
  ["random-qp", [16, 8], 3],
  ["random-lp", [12, 5], 1],
  ["random-lp", [18, 7], 2],
  ["random-lp", [24, 9], 3],
  ["random-socp", [6], 1],
  ["random-socp", [10], 2],
  ["random-socp", [14], 3],
  ["huber", [10, 4], 1],
  ["huber", [14, 5], 2],
  ["lasso", [8, 5], 1],
  ["lasso", [12, 6], 2],
  ["block-arrow-sdp", [10, 3], 1],
  ["block-arrow-sdp", [12, 4], 2],
];

const HAND_BUILT: Array<[string, () => Problem]> = [
  ["exp_e", expProblem],
  ["exp_log2", expLogProblem],
  ["pow_030", () => powProblem(0.3)],
  ["pow_050", () => powProblem(0.5)],
  ["pow_070", () => powProblem(0.7)],
  ["mixed_zero_nonneg_soc", mixedConesProblem],
  ["psd_lambda_max", lambdaMaxProblem],
  ["infeasible_pair", infeasibleProblem],
  ["unbounded_lp", unboundedProblem],
];

/**
 * Materialize the parity corpus in `dir`: core-generated families plus
 * hand-built problems written through save(). Together they span Zero,
 * Nonnegative, SecondOrder, PSDTriangle, Exponential, and Power cones.
 */
export async function buildCorpus(dir: string): Promise<CorpusEntry[]> {
  const entries: CorpusEntry[] = [];
  await mapLimit(GENERATED, 2, async ([kind, dims, seed]) => {
    const name = `${kind}_${dims.join("x")}_s${seed}`;
    const path = join(dir, `${name}.json`);
    const run = await referenceCli([
      "gen",
      kind,
      ...dims.map(String),
      "--seed",
      String(seed),
      "--out",
      path,
    ]);
    if (run.code !== 0) throw new Error(`gen ${name} failed: ${run.stderr}`);
    entries.push({ name, path });
  });
  for (const [name, make] of HAND_BUILT) {
    const path = join(dir, `${name}.json`);
    await save(make(), path);
    entries.push({ name, path });
  }
  return entries.sort((a, b) => a.name.localeCompare(b.name));
}

/** Relative agreement where NaN on both sides counts as agreement. */
export function agreesTo(a: number, b: number, rtol: number): boolean {
  if (Number.isNaN(a) && Number.isNaN(b)) return true;
  return Math.abs(a - b) <= rtol * Math.max(1, Math.abs(a), Math.abs(b));
}
