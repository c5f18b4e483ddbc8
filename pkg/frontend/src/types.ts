/**
 * Wire-format types. Field names match the solver's JSON problem/result
 * formats exactly, so objects serialize without any renaming step.
 */

export type ConeType =
  | "Zero"
  | "Nonnegative"
  | "SecondOrder"
  | "PSDTriangle"
  | "Exponential"
  | "Power";

export interface Cone {
  type: ConeType;
  /** Matrix side for PSDTriangle (covering dim*(dim+1)/2 rows), vector length otherwise. */
  dim: number;
  /** Power cone exponent in (0, 1); only valid when type is "Power". */
  alpha?: number;
}

/** Zero-based COO triplets. P holds the upper triangle only. */
export interface Triplets {
  rows: number[];
  cols: number[];
  vals: number[];
}

export interface Problem {
  n: number;
  m: number;
  P: Triplets;
  q: number[];
  A: Triplets;
  b: number[];
  cones: Cone[];
  obj_offset?: number;
  metadata?: Record<string, unknown>;
}

export type SolveStatus =
  | "Solved"
  | "AlmostSolved"
  | "PrimalInfeasible"
  | "AlmostPrimalInfeasible"
  | "DualInfeasible"
  | "AlmostDualInfeasible"
  | "MaxIterations"
  | "TimeLimit"
  | "InsufficientProgress"
  | "NumericalError";

export interface Result {
  status: SolveStatus;
  /** NaN when the solver reported no finite value (e.g. infeasible problems). */
  obj_primal: number;
  obj_dual: number;
  iterations: number;
  solve_time: number;
  x: number[];
  s: number[];
  z: number[];
}

export interface Settings {
  maxIter?: number;
  /** Seconds. */
  timeLimit?: number;
  tolFeas?: number;
  equilibrate?: boolean;
  /** Clique decomposition of sparse PSD blocks; solver default is on. */
  chordal?: boolean;
}
