// Fleet state as the console sees it. Pure with respect to its inputs: the
// same sequence of applied messages yields the same views, so a replayed log
// renders the same way every time. The store never invents values, it only
// keeps the latest decoded snapshot per vehicle.

import type { FleetRow, StreamEntry, Telemetry, VehicleView } from "./types";
import {
  CAGE_MODES,
  CAGE_STATES,
  DOOR_STATES,
  DRIVING_MODES,
  MISSION_STATES,
  SENSOR_VALIDITIES,
} from "./types";

export const STALE_AFTER_MS = 3000;
const TRAIL_LIMIT = 400;

const VOCABULARIES: [string, readonly string[]][] = [
  ["driving_mode", DRIVING_MODES],
  ["cage_state", CAGE_STATES],
  ["mission_state", MISSION_STATES],
  ["door_state", DOOR_STATES],
  ["sensor_data", SENSOR_VALIDITIES],
];

/** Attribute names whose summary value is not in its closed vocabulary. */
export function vocabularyViolations(telemetry: Telemetry): string[] {
  const bad: string[] = [];
  const summary = telemetry.summary as unknown as Record<string, string>;
  for (const [field, allowed] of VOCABULARIES) {
    if (!allowed.includes(summary[field])) bad.push(field);
  }
  if (!CAGE_MODES.includes(telemetry.cage_mode as (typeof CAGE_MODES)[number])) {
    bad.push("cage_mode");
  }
  return bad;
}

export class FleetStore {
  private views = new Map<string, VehicleView>();

  private ensure(vehicleId: string, nowMs: number): VehicleView {
    let view = this.views.get(vehicleId);
    if (!view) {
      view = {
        vehicleId,
        connection: "connected",
        telemetry: null,
        lastUpdateMs: nowMs,
        badValues: [],
        trail: [],
      };
      this.views.set(vehicleId, view);
    }
    return view;
  }

  /** Seed or refresh from GET /fleet. Stream telemetry is richer, so rows
   * only update connection status and fill vehicles we have not heard from. */
  applyFleet(rows: FleetRow[], nowMs: number): void {
    for (const row of rows) {
      const view = this.ensure(row.vehicle_id, nowMs);
      view.connection = row.connection;
    }
  }

  /** Apply one /stream entry; returns the touched view, if any. */
  applyStream(entry: StreamEntry, nowMs: number): VehicleView | null {
    const msg = entry.message;
    if (entry.direction !== "from_vehicle" || msg.type !== "TelemetrySnapshot") {
      return null;
    }
    const telemetry = msg.payload as unknown as Telemetry;
    if (!telemetry || typeof telemetry !== "object" || !telemetry.summary) return null;
    const view = this.ensure(msg.vehicle_id, nowMs);
    view.telemetry = telemetry;
    view.connection = "connected";
    view.lastUpdateMs = nowMs;
    view.badValues = vocabularyViolations(telemetry);
    if (telemetry.pose) {
      view.trail.push([telemetry.pose.x, telemetry.pose.y]);
      if (view.trail.length > TRAIL_LIMIT) view.trail.shift();
    }
    return view;
  }

  get(vehicleId: string): VehicleView | undefined {
    return this.views.get(vehicleId);
  }

  list(): VehicleView[] {
    return [...this.views.values()].sort((a, b) => a.vehicleId.localeCompare(b.vehicleId));
  }

  isStale(vehicleId: string, nowMs: number): boolean {
    const view = this.views.get(vehicleId);
    return !view || nowMs - view.lastUpdateMs > STALE_AFTER_MS;
  }
}
