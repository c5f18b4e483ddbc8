/**
 * Subprocess plumbing. The binding talks to the solver exclusively through
 * its command-line interface and JSON files; nothing here links against the
 * core. Override the executable with CONIQ_CLI (e.g. "python3 -m coniq.cli").
 */

import { spawn } from "node:child_process";

import { CliError } from "./errors.js";

export interface CliRun {
  code: number;
  stdout: string;
  stderr: string;
}

export function cliCommand(): string[] {
  const cmd = process.env.CONIQ_CLI ?? "coniq";
  return cmd.split(" ").filter((part) => part.length > 0);
}

export function runCli(args: string[]): Promise<CliRun> {
  const [exe, ...head] = cliCommand();
  return new Promise((resolve, reject) => {
    const child = spawn(exe, [...head, ...args], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.on("data", (chunk) => (stdout += chunk));
    child.stderr.on("data", (chunk) => (stderr += chunk));
    child.on("error", (err) =>
      reject(new CliError(`cannot run '${exe}': ${err.message}`)),
    );
    child.on("close", (code) => resolve({ code: code ?? -1, stdout, stderr }));
  });
}
