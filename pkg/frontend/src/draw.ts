// Canvas painters. Each one is a pure function of the latest snapshot, so
// repainting after every applied message keeps the pixels in lockstep with
// the data and nothing animates on its own.

import type { Telemetry, VehicleView } from "./types";

type Ctx = CanvasRenderingContext2D;

const COLORS = {
  background: "#0d1117",
  grid: "#1b2330",
  scan: "#8b949e",
  zoneFree: "#3fb950",
  zoneOccupied: "#f85149",
  offending: "#ff7b72",
  footprint: "#58a6ff",
  trail: "#388bfd",
  waypointDone: "#3fb950",
  waypointPending: "#8b949e",
  text: "#c9d1d9",
};

type Fit = (x: number, y: number) => [number, number];

/** Forward-up vehicle-frame fit: +x up the screen, +y to the left. */
function fitVehicleFrame(points: [number, number][], w: number, h: number): Fit {
  let maxAbs = 4.0;
  for (const [x, y] of points) {
    maxAbs = Math.max(maxAbs, Math.abs(x), Math.abs(y));
  }
  const scale = (Math.min(w, h) / 2 - 12) / maxAbs;
  return (x, y) => [w / 2 - y * scale, h / 2 - x * scale];
}

function polygon(ctx: Ctx, vertices: [number, number][], fit: Fit): void {
  ctx.beginPath();
  vertices.forEach(([x, y], i) => {
    const [sx, sy] = fit(x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.closePath();
}

function dot(ctx: Ctx, fit: Fit, x: number, y: number, r: number): void {
  const [sx, sy] = fit(x, y);
  ctx.beginPath();
  ctx.arc(sx, sy, r, 0, Math.PI * 2);
  ctx.fill();
}

type Geometry = { front_overhang: number; rear_overhang: number; wheelbase: number; width: number };

const DEFAULT_GEOMETRY: Geometry = {
  front_overhang: 0.5,
  rear_overhang: 0.5,
  wheelbase: 2.0,
  width: 1.2,
};

/** Top-down sensor widget: scan points and the live safe zone around the
 * vehicle footprint, offending returns highlighted. Vehicle frame. */
export function drawSensorView(
  ctx: Ctx,
  telemetry: Telemetry,
  geometry: Geometry | null,
  w: number,
  h: number,
): void {
  const geo = geometry ?? DEFAULT_GEOMETRY;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, w, h);

  const fit = fitVehicleFrame([...telemetry.zone.vertices, ...telemetry.scan], w, h);
  const occupied = telemetry.summary.cage_state === "safe zone occupied";

  ctx.globalAlpha = 0.18;
  ctx.fillStyle = occupied ? COLORS.zoneOccupied : COLORS.zoneFree;
  polygon(ctx, telemetry.zone.vertices, fit);
  ctx.fill();
  ctx.globalAlpha = 1.0;
  ctx.strokeStyle = occupied ? COLORS.zoneOccupied : COLORS.zoneFree;
  ctx.lineWidth = 1.5;
  polygon(ctx, telemetry.zone.vertices, fit);
  ctx.stroke();

  ctx.fillStyle = COLORS.scan;
  for (const [x, y] of telemetry.scan) dot(ctx, fit, x, y, 1.2);

  ctx.fillStyle = COLORS.offending;
  for (const [x, y] of telemetry.offending) dot(ctx, fit, x, y, 3.5);

  // footprint rectangle, rear axle at the origin
  ctx.strokeStyle = COLORS.footprint;
  ctx.lineWidth = 1.0;
  const half = geo.width / 2;
  polygon(
    ctx,
    [
      [-geo.rear_overhang, -half],
      [geo.wheelbase + geo.front_overhang, -half],
      [geo.wheelbase + geo.front_overhang, half],
      [-geo.rear_overhang, half],
    ],
    fit,
  );
  ctx.stroke();

  ctx.fillStyle = COLORS.text;
  ctx.font = "11px monospace";
  if (telemetry.nearest_distance != null) {
    ctx.fillText(`nearest ${telemetry.nearest_distance.toFixed(2)} m`, 8, 14);
  }
  ctx.fillText(telemetry.zone.mode_label, 8, h - 8);
}

/** Mini-map: pose trail, mission waypoints and the vehicle marker, world
 * frame fitted to whatever is known. */
export function drawMiniMap(ctx: Ctx, view: VehicleView, w: number, h: number): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, w, h);
  const telemetry = view.telemetry;
  if (!telemetry) return;

  const pts: [number, number][] = [...view.trail];
  pts.push([telemetry.pose.x, telemetry.pose.y]);
  for (const wp of telemetry.mission?.waypoints ?? []) pts.push([wp.x, wp.y]);

  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of pts) {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  const span = Math.max(maxX - minX, maxY - minY, 10);
  const scale = (Math.min(w, h) - 28) / span;
  const fit: Fit = (x, y) => [
    14 + (x - minX) * scale,
    h - 14 - (y - minY) * scale,
  ];

  if (view.trail.length > 1) {
    ctx.strokeStyle = COLORS.trail;
    ctx.lineWidth = 1.0;
    ctx.beginPath();
    view.trail.forEach(([x, y], i) => {
      const [sx, sy] = fit(x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.stroke();
  }

  const mission = telemetry.mission;
  if (mission) {
    ctx.font = "10px monospace";
    mission.waypoints.forEach((wp, i) => {
      const delivered = mission.deliveries.includes(wp.name);
      ctx.fillStyle = delivered ? COLORS.waypointDone : COLORS.waypointPending;
      dot(ctx, fit, wp.x, wp.y, i === mission.target_index && !delivered ? 5 : 3.5);
      ctx.fillStyle = COLORS.text;
      const [sx, sy] = fit(wp.x, wp.y);
      ctx.fillText(wp.name, sx + 7, sy + 3);
    });
  }

  // vehicle marker: triangle pointing along heading
  const { x, y, heading } = telemetry.pose;
  const tip = fit(x + 1.2 * Math.cos(heading), y + 1.2 * Math.sin(heading));
  const left = fit(x + 0.6 * Math.cos(heading + 2.5), y + 0.6 * Math.sin(heading + 2.5));
  const right = fit(x + 0.6 * Math.cos(heading - 2.5), y + 0.6 * Math.sin(heading - 2.5));
  ctx.fillStyle = COLORS.footprint;
  ctx.beginPath();
  ctx.moveTo(tip[0], tip[1]);
  ctx.lineTo(left[0], left[1]);
  ctx.lineTo(right[0], right[1]);
  ctx.closePath();
  ctx.fill();
}

/** Placeholder camera frame: deterministic grayscale bars keyed on camera
 * name and telemetry seq. No pixels cross the wire; the validity badge is
 * the safety-relevant content, this just shows the feed is ticking. */
export function drawCameraFrame(
  ctx: Ctx,
  name: string,
  seq: number,
  valid: boolean,
  w: number,
  h: number,
): void {
  let hash = 0;
  for (const ch of name) hash = (hash * 31 + ch.charCodeAt(0)) | 0;
  const bars = 16;
  for (let i = 0; i < bars; i++) {
    const phase = valid ? seq : 0; // frozen look when the feed is bad
    const shade = 40 + ((Math.abs(hash) + i * 13 + phase * 7) % 120);
    ctx.fillStyle = `rgb(${shade},${shade},${shade})`;
    ctx.fillRect((i * w) / bars, 0, w / bars + 1, h);
  }
  ctx.fillStyle = valid ? "#c9d1d9" : "#f85149";
  ctx.font = "10px monospace";
  ctx.fillText(valid ? name : `${name} (no valid data)`, 6, h - 6);
}
