// Drives the sketchdist CLI. Each call runs in its own scratch directory
// and subprocess, so bound functions are re-entrant and never share state.

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export class SketchdistError extends Error {
  constructor(
    message: string,
    public readonly kind: string,
    public readonly exitCode: number,
  ) {
    super(message);
    this.name = "SketchdistError";
  }
}

function cliCommand(): string[] {
  const override = process.env.SKETCHDIST_BIN;
  if (override) return override.split(" ");
  return [process.env.SKETCHDIST_PYTHON ?? "python3", "-m", "sketchdist"];
}

export function runCli(args: string[]): any {
  const [cmd, ...base] = cliCommand();
  const result = spawnSync(cmd, [...base, ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) throw result.error;
  if (result.status !== 0) {
    let kind = "error";
    let message = result.stderr.trim() || `exit code ${result.status}`;
    try {
      const parsed = JSON.parse(result.stderr.trim().split("\n").pop() ?? "");
      kind = parsed.error.type;
      message = parsed.error.message;
    } catch {
      // non-JSON stderr: keep the raw text
    }
    throw new SketchdistError(message, kind, result.status ?? -1);
  }
  return JSON.parse(result.stdout);
}

export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "sketchdist-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}
