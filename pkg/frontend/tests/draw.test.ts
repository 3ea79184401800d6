import { describe, expect, it } from "vitest";

import { drawCameraFrame, drawMiniMap, drawSensorView } from "../src/draw";
import type { Telemetry, VehicleView } from "../src/types";
import { fixture } from "./helpers";

const snapshots = fixture<{ fad: Telemetry; es: Telemetry; lad: Telemetry }>("snapshots.json");

type Call = { method: string; args: unknown[] };

/** 2d-context stand-in that records calls and style assignments. */
function recordingCtx() {
  const calls: Call[] = [];
  const styles: unknown[] = [];
  const ctx = new Proxy(
    {},
    {
      get(_t, prop: string) {
        return (...args: unknown[]) => {
          calls.push({ method: prop, args });
        };
      },
      set(_t, prop: string, value) {
        if (prop === "fillStyle" || prop === "strokeStyle") styles.push(value);
        return true;
      },
    },
  ) as unknown as CanvasRenderingContext2D;
  return { ctx, calls, styles };
}

function viewFor(telemetry: Telemetry): VehicleView {
  return {
    vehicleId: telemetry.summary.vehicle_id,
    connection: "connected",
    telemetry,
    lastUpdateMs: 0,
    badValues: [],
    trail: [
      [5, 5],
      [10, 5],
      [15, 5],
    ],
  };
}

describe("sensor view", () => {
  it("draws the occupied zone in the alert color with offending points highlighted", () => {
    const { ctx, calls, styles } = recordingCtx();
    drawSensorView(ctx, snapshots.es, null, 320, 320);
    expect(styles).toContain("#f85149"); // occupied zone
    expect(styles).toContain("#ff7b72"); // offending returns
    const arcs = calls.filter((c) => c.method === "arc");
    expect(arcs.length).toBe(snapshots.es.scan.length + snapshots.es.offending.length);
    expect(arcs.filter((c) => c.args[2] === 3.5).length).toBe(snapshots.es.offending.length);
  });

  it("draws a free zone in the calm color and labels the zone mode", () => {
    const { ctx, calls, styles } = recordingCtx();
    drawSensorView(ctx, snapshots.fad, null, 320, 320);
    expect(styles).toContain("#3fb950");
    expect(styles).not.toContain("#f85149");
    // no offending returns, so no highlight dots (radius 3.5)
    expect(calls.filter((c) => c.method === "arc" && c.args[2] === 3.5).length).toBe(0);
    const texts = calls.filter((c) => c.method === "fillText").map((c) => c.args[0]);
    expect(texts).toContain("fully autonomous driving");
  });
});

describe("mini-map", () => {
  it("plots the trail, the waypoints by name, and the vehicle marker", () => {
    const { ctx, calls } = recordingCtx();
    drawMiniMap(ctx, viewFor(snapshots.fad), 320, 320);
    const texts = calls.filter((c) => c.method === "fillText").map((c) => c.args[0]);
    for (const wp of snapshots.fad.mission!.waypoints) {
      expect(texts).toContain(wp.name);
    }
    expect(calls.some((c) => c.method === "stroke")).toBe(true); // the trail
    expect(calls.filter((c) => c.method === "fill").length).toBeGreaterThan(0);
  });

  it("copes with missing telemetry", () => {
    const { ctx, calls } = recordingCtx();
    drawMiniMap(ctx, { ...viewFor(snapshots.fad), telemetry: null }, 320, 320);
    expect(calls.filter((c) => c.method === "fillRect").length).toBe(1); // just the background
  });
});

describe("camera placeholder", () => {
  it("is deterministic for the same name and seq", () => {
    const a = recordingCtx();
    const b = recordingCtx();
    drawCameraFrame(a.ctx, "front", 42, true, 150, 90);
    drawCameraFrame(b.ctx, "front", 42, true, 150, 90);
    expect(JSON.stringify(a.calls)).toBe(JSON.stringify(b.calls));
  });

  it("freezes and labels the frame when the feed is invalid", () => {
    const { ctx, calls } = recordingCtx();
    drawCameraFrame(ctx, "back", 7, false, 150, 90);
    const texts = calls.filter((c) => c.method === "fillText").map((c) => c.args[0]);
    expect(texts).toContain("back (no valid data)");
  });
});
