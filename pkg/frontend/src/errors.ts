/**
 * Error types mirroring the solver core one-to-one, so callers can catch the
 * same categories on either side of the language boundary.
 */

/** Base class for anything wrong with the problem data itself. */
export class ProblemError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Vector/matrix shapes disagree, or P has entries below the diagonal. */
export class DimensionMismatch extends ProblemError {}

/** A cone block's dimension is invalid or the blocks don't cover A's rows. */
export class ConeDimensionMismatch extends ProblemError {}

/** Unknown cone type, or a bad/misplaced alpha parameter. */
export class BadConeParameter extends ProblemError {}

/** NaN or infinity in P, q, A, b, or the objective offset. */
export class NonFiniteData extends ProblemError {}

/** Problem or result file cannot be parsed (bad JSON, wrong version, missing fields). */
export class ParseError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ParseError";
  }
}

/**
 * The solver process itself could not be run or produced no result file.
 * This has no core counterpart: it means transport failed, not the solve.
 */
export class CliError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CliError";
  }
}
