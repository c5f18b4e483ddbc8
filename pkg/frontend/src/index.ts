/**
 * Node bindings for the coniq conic solver.
 *
 * Problems are plain objects in the solver's JSON wire format; solve() hands
 * them to the `coniq` executable and returns the parsed result. There is no
 * modeling layer here — raw conic data in, status/objectives/iterates out.
 */

import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { runCli } from "./cli.js";
import { CliError } from "./errors.js";
import { problemFromText, problemToText, resultFromText } from "./format.js";
import type { Problem, Result, Settings } from "./types.js";
import { validateProblem } from "./validate.js";

export * from "./errors.js";
export * from "./types.js";
export { problemFromText, problemToText, FORMAT_VERSION } from "./format.js";
export { validateProblem } from "./validate.js";

/** Matches the core package version (`coniq --version`). */
export const version = "0.1.0";

function settingsArgs(settings: Settings): string[] {
  const args: string[] = [];
  if (settings.maxIter !== undefined) args.push("--max-iter", String(settings.maxIter));
  if (settings.timeLimit !== undefined) args.push("--time-limit", String(settings.timeLimit));
  if (settings.tolFeas !== undefined) args.push("--tol-feas", String(settings.tolFeas));
  if (settings.equilibrate === false) args.push("--no-equilibrate");
  if (settings.chordal !== undefined) args.push("--chordal", settings.chordal ? "on" : "off");
  return args;
}

/**
 * Solve a conic program.
 *
 * The status is returned exactly as the solver reported it — infeasibility,
 * iteration limits, and numerical failure are legitimate outcomes carried in
 * `Result.status`, never coerced into exceptions. Exceptions mean the data
 * was invalid (typed, thrown before the solver runs) or the solver process
 * itself could not deliver a result (CliError).
 *
 * Solves run in separate processes, so concurrent calls on distinct problems
 * are fine.
 */
export async function solve(problem: Problem, settings: Settings = {}): Promise<Result> {
  validateProblem(problem);
  const dir = await mkdtemp(join(tmpdir(), "coniq-"));
  try {
    const problemFile = join(dir, "problem.json");
    const resultFile = join(dir, "result.json");
    await writeFile(problemFile, problemToText(problem), "utf8");
    const run = await runCli([
      "solve",
      problemFile,
      "--out",
      resultFile,
      ...settingsArgs(settings),
    ]);
    let text: string;
    try {
      text = await readFile(resultFile, "utf8");
    } catch {
      throw new CliError(
        `solver exited with code ${run.code} and no result: ${run.stderr.trim()}`,
      );
    }
    return resultFromText(text, resultFile);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}

/** Read and validate a problem file written by either side. */
export async function load(path: string): Promise<Problem> {
  const text = await readFile(path, "utf8");
  return problemFromText(text, path);
}

/** Write a problem file in the canonical layout (see problemToText). */
export async function save(problem: Problem, path: string): Promise<void> {
  await writeFile(path, problemToText(problem), "utf8");
}
