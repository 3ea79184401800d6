// Shared test plumbing: fixture loading, stream-entry wrapping, polling.

import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import type { StreamEntry, Telemetry, VehicleSummary } from "../src/types";

// resolved from the package root; import.meta.url is unreliable under jsdom
export function fixture<T>(name: string): T {
  const path = resolve(process.cwd(), "tests/fixtures", name);
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export type RecordedSummary = { wall_time: number; summary: VehicleSummary };

let seqCounter = 0;

/** Wrap a telemetry payload the way the stream delivers it. */
export function telemetryEntry(payload: Partial<Telemetry>, wallTime = 0): StreamEntry {
  seqCounter += 1;
  return {
    global_seq: seqCounter,
    wall_time: wallTime,
    direction: "from_vehicle",
    message: {
      type: "TelemetrySnapshot",
      vehicle_id: payload.summary?.vehicle_id ?? "veh-1",
      seq: seqCounter,
      timestamp: wallTime,
      payload: payload as Record<string, unknown>,
    },
  };
}

/** Collapse consecutive duplicates: ["a","a","b","a"] -> ["a","b","a"]. */
export function compress<T>(values: T[]): T[] {
  return values.filter((v, i) => i === 0 || v !== values[i - 1]);
}

export async function until(
  cond: () => boolean,
  timeoutMs = 15000,
  label = "condition",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (cond()) return;
    await new Promise((r) => setTimeout(r, 50));
  }
  throw new Error(`timed out waiting for ${label}`);
}
