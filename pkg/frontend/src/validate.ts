/**
 * Client-side problem validation, mirroring the core's checks so bad data
 * raises a typed error here instead of a subprocess failure later. Any
 * problem that passes is accepted by the solver's parser verbatim.
 */

import {
  BadConeParameter,
  ConeDimensionMismatch,
  DimensionMismatch,
  NonFiniteData,
} from "./errors.js";
import type { Cone, Problem, Triplets } from "./types.js";

const CONE_TYPES = new Set([
  "Zero",
  "Nonnegative",
  "SecondOrder",
  "PSDTriangle",
  "Exponential",
  "Power",
]);

/** Rows of (A, b) the block occupies. */
export function coneRows(c: Cone): number {
  return c.type === "PSDTriangle" ? (c.dim * (c.dim + 1)) / 2 : c.dim;
}

export function validateCone(c: Cone): void {
  if (!CONE_TYPES.has(c.type)) {
    throw new BadConeParameter(`unknown cone kind '${c.type}'`);
  }
  if (!Number.isInteger(c.dim)) {
    throw new ConeDimensionMismatch(`${c.type} dim must be an integer, got ${c.dim}`);
  }
  if (
    (c.type === "Zero" || c.type === "Nonnegative" || c.type === "PSDTriangle") &&
    c.dim < 1
  ) {
    throw new ConeDimensionMismatch(`${c.type} needs dim >= 1, got ${c.dim}`);
  }
  if (c.type === "SecondOrder" && c.dim < 2) {
    throw new ConeDimensionMismatch(`SecondOrder needs dim >= 2, got ${c.dim}`);
  }
  if ((c.type === "Exponential" || c.type === "Power") && c.dim !== 3) {
    throw new ConeDimensionMismatch(
      `${c.type} is three-dimensional, got dim ${c.dim}`,
    );
  }
  if (c.type === "Power") {
    if (c.alpha === undefined || !(c.alpha > 0 && c.alpha < 1)) {
      throw new BadConeParameter(
        `Power needs alpha in the open interval (0, 1), got ${c.alpha}`,
      );
    }
  } else if (c.alpha !== undefined) {
    throw new BadConeParameter(`alpha given for non-Power cone ${c.type}`);
  }
}

function checkTriplets(
  t: Triplets,
  name: string,
  nrows: number,
  ncols: number,
  upperOnly: boolean,
): void {
  const { rows, cols, vals } = t;
  if (rows.length !== cols.length || rows.length !== vals.length) {
    throw new DimensionMismatch(
      `${name} triplet arrays have lengths ${rows.length}/${cols.length}/${vals.length}`,
    );
  }
  for (let k = 0; k < rows.length; k++) {
    const r = rows[k];
    const c = cols[k];
    if (!Number.isInteger(r) || !Number.isInteger(c) || r < 0 || c < 0) {
      throw new DimensionMismatch(`${name} has a negative or non-integer index at entry ${k}`);
    }
    if (r >= nrows || c >= ncols) {
      throw new DimensionMismatch(
        `${name} index (${r}, ${c}) outside ${nrows}x${ncols}`,
      );
    }
    if (upperOnly && r > c) {
      throw new DimensionMismatch(
        `${name} must store the upper triangle only; entry (${r}, ${c}) is below the diagonal`,
      );
    }
    if (!Number.isFinite(vals[k])) {
      throw new NonFiniteData(`${name} contains non-finite entries`);
    }
  }
}

function checkVector(v: number[], name: string, len: number): void {
  if (v.length !== len) {
    throw new DimensionMismatch(`${name} has length ${v.length}, expected ${len}`);
  }
  for (const x of v) {
    if (!Number.isFinite(x)) {
      throw new NonFiniteData(`${name} contains non-finite entries`);
    }
  }
}

export function validateProblem(p: Problem): void {
  if (!Number.isInteger(p.n) || !Number.isInteger(p.m) || p.n < 1 || p.m < 0) {
    throw new DimensionMismatch(`bad problem shape n=${p.n}, m=${p.m}`);
  }
  for (const c of p.cones) validateCone(c);
  const rows = p.cones.reduce((acc, c) => acc + coneRows(c), 0);
  if (rows !== p.m) {
    throw new ConeDimensionMismatch(`cone rows sum to ${rows} but A has ${p.m} rows`);
  }
  checkVector(p.q, "q", p.n);
  checkVector(p.b, "b", p.m);
  checkTriplets(p.P, "P", p.n, p.n, true);
  checkTriplets(p.A, "A", p.m, p.n, false);
  if (p.obj_offset !== undefined && !Number.isFinite(p.obj_offset)) {
    throw new NonFiniteData("obj_offset is not finite");
  }
}
