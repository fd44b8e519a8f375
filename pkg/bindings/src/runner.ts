/** Spawns the toolkit CLI and maps its exit-code contract onto exceptions. */

import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { DataError, IoError, UsageError } from "./errors.js";

/** Override with e.g. WARPKIT_CLI="warpkit" when the entry point is on PATH. */
function cliCommand(): string[] {
  const env = process.env.WARPKIT_CLI;
  return env ? env.split(" ") : ["python3", "-m", "warpkit"];
}

export interface CliResult {
  stdout: string;
}

export async function runCli(args: string[]): Promise<CliResult> {
  const [cmd, ...prefix] = cliCommand();
  return new Promise((resolve, reject) => {
    execFile(
      cmd,
      [...prefix, ...args, "--json-errors"],
      { maxBuffer: 1 << 28 },
      (error, stdout, stderr) => {
        if (!error) {
          resolve({ stdout });
          return;
        }
        const exitCode = typeof error.code === "number" ? error.code : -1;
        let code = "CliError";
        let message = stderr.trim() || error.message;
        try {
          const payload = JSON.parse(stderr.trim().split("\n").pop() ?? "");
          if (typeof payload.error === "string") {
            code = payload.error;
            message = payload.message ?? message;
          }
        } catch {
          // non-JSON stderr (e.g. argparse usage text)
        }
        if (exitCode === 2) {
          reject(new UsageError(message));
        } else if (exitCode === 3) {
          reject(new DataError(code, message));
        } else if (exitCode === 4) {
          reject(new IoError(code === "CliError" ? "IOError" : code, message));
        } else {
          reject(new IoError("IOError", `CLI failed with exit ${exitCode}: ${message}`));
        }
      },
    );
  });
}

/** Run a callback with a private scratch directory, removed afterwards. */
export async function withScratchDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "warpkit-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}
