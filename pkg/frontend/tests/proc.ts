// Child-process plumbing for the integration tests: spawn the vehicle and
// control-centre CLIs, scrape their startup banners, wait for exits.

import { type ChildProcess, spawn } from "node:child_process";

export type Proc = {
  child: ChildProcess;
  stdout: () => string;
  stderr: () => string;
  exited: Promise<number | null>;
};

export function run(args: string[], env: Record<string, string> = {}): Proc {
  const child = spawn("safecage", args, {
    stdio: ["ignore", "pipe", "pipe"],
    env: { ...process.env, ...env },
  });
  let out = "";
  let err = "";
  child.stdout!.on("data", (chunk) => (out += chunk));
  child.stderr!.on("data", (chunk) => (err += chunk));
  const exited = new Promise<number | null>((resolve) => child.on("exit", resolve));
  return { child, stdout: () => out, stderr: () => err, exited };
}

/** Poll the process stdout until the pattern shows up; throws with the
 * collected output if the process dies or the deadline passes first. */
export async function awaitBanner(proc: Proc, pattern: RegExp, timeoutMs = 15000): Promise<RegExpMatchArray> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const match = proc.stdout().match(pattern);
    if (match) return match;
    if (proc.child.exitCode !== null) {
      throw new Error(
        `process exited (${proc.child.exitCode}) before ${pattern}\n` +
          `stdout: ${proc.stdout()}\nstderr: ${proc.stderr()}`,
      );
    }
    await new Promise((r) => setTimeout(r, 50));
  }
  throw new Error(`no ${pattern} within ${timeoutMs} ms\nstdout: ${proc.stdout()}\nstderr: ${proc.stderr()}`);
}

export async function awaitExit(proc: Proc, timeoutMs = 30000): Promise<number | null> {
  const killer = new Promise<never>((_, reject) =>
    setTimeout(() => reject(new Error(`process still running after ${timeoutMs} ms`)), timeoutMs),
  );
  return Promise.race([proc.exited, killer]);
}

export function stop(proc: Proc | null): void {
  if (proc && proc.child.exitCode === null) proc.child.kill("SIGKILL");
}
