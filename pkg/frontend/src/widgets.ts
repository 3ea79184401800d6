// DOM layer. The skeleton is built once; render() re-reads the store and
// rewrites text, classes and canvases. State only ever flows store -> DOM:
// command clicks POST and surface the ack, they never edit a badge
// themselves, so the screen cannot show a mode the vehicle never reported.

import type { Command, CommandResponse, VehicleView } from "./types";
import { DRIVING_MODES } from "./types";
import { FleetStore } from "./store";
import { drawCameraFrame, drawMiniMap, drawSensorView } from "./draw";

export type ConsoleDeps = {
  root: HTMLElement;
  store: FleetStore;
  sendCommand: (vehicleId: string, command: Command) => Promise<CommandResponse>;
  now?: () => number;
};

const SKELETON = `
<header class="topbar">
  <h1>fleet console</h1>
  <span id="stream-status" class="status dead">disconnected</span>
  <span id="error-banner" class="banner hidden">
    <span id="error-text"></span>
    <button id="error-retry" type="button">retry</button>
  </span>
</header>
<div class="columns">
  <nav class="panel" id="fleet-panel">
    <div class="panel-title">vehicles</div>
    <ul id="fleet-list"></ul>
  </nav>
  <main class="panel" id="vehicle-panel">
    <div id="summary-badges">
      <span class="badge" data-field="driving_mode"></span>
      <span class="badge" data-field="cage_state"></span>
      <span class="badge" data-field="mission_state"></span>
      <span class="badge" data-field="door_state"></span>
      <span class="badge" data-field="sensor_data"></span>
      <span class="badge" data-field="cage_mode"></span>
      <span id="stale-flag" class="badge warn hidden">stale &gt; 3 s</span>
      <span id="vocab-flag" class="badge warn hidden"></span>
    </div>
    <div class="viewports">
      <div>
        <div class="panel-title">sensor view</div>
        <canvas id="sensor-canvas" width="320" height="320"></canvas>
      </div>
      <div>
        <div class="panel-title">mini-map</div>
        <canvas id="minimap-canvas" width="320" height="320"></canvas>
      </div>
      <div id="cameras">
        <div class="panel-title">cameras</div>
        <div id="camera-panels"></div>
      </div>
    </div>
    <div class="panel-title">mission</div>
    <ul id="mission-list"></ul>
    <fieldset id="controls" disabled>
      <div class="control-row" id="mode-buttons"></div>
      <div class="control-row">
        <button type="button" data-cage-mode="active">cage active</button>
        <button type="button" data-cage-mode="passive">cage passive</button>
        <button type="button" data-door="open">open door</button>
        <button type="button" data-door="close">close door</button>
        <button type="button" id="btn-stop">stop</button>
        <button type="button" id="btn-creep">creep</button>
      </div>
      <div class="control-row" id="mission-form">
        <input id="mission-id" placeholder="mission id" value="tour-1" />
        <input id="mission-waypoints" placeholder="name,x,y; name,x,y" />
        <button type="button" id="btn-assign">assign mission</button>
      </div>
    </fieldset>
    <div id="ack-line"></div>
  </main>
</div>
<div id="confirm-overlay" class="hidden">
  <div class="confirm-box">
    <p id="confirm-text"></p>
    <button type="button" id="confirm-yes">confirm</button>
    <button type="button" id="confirm-no">cancel</button>
  </div>
</div>
`;

const CREEP_SPEED = 0.3;

export class OperatorConsole {
  selected: string | null = null;
  streamLive = false;

  private root: HTMLElement;
  private store: FleetStore;
  private send: ConsoleDeps["sendCommand"];
  private now: () => number;
  private pendingConfirm: (() => void) | null = null;
  private lastFailed: { vehicleId: string; command: Command } | null = null;

  constructor(deps: ConsoleDeps) {
    this.root = deps.root;
    this.store = deps.store;
    this.send = deps.sendCommand;
    this.now = deps.now ?? (() => Date.now());
    this.root.innerHTML = SKELETON;

    const modeRow = this.el("#mode-buttons");
    for (const mode of DRIVING_MODES) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.dataset.mode = mode;
      btn.textContent = mode;
      btn.addEventListener("click", () => this.requestMode(mode));
      modeRow.appendChild(btn);
    }

    this.root.querySelectorAll<HTMLButtonElement>("[data-cage-mode]").forEach((btn) =>
      btn.addEventListener("click", () =>
        this.issue({ kind: "SetCageMode", cage_mode: btn.dataset.cageMode as "active" | "passive" }),
      ),
    );
    this.root.querySelectorAll<HTMLButtonElement>("[data-door]").forEach((btn) =>
      btn.addEventListener("click", () =>
        this.issue({ kind: "DoorCommand", action: btn.dataset.door as "open" | "close" }),
      ),
    );
    this.el("#btn-stop").addEventListener("click", () =>
      this.issue({ kind: "ManualControl", target_speed: 0 }),
    );
    this.el("#btn-creep").addEventListener("click", () =>
      this.issue({ kind: "ManualControl", target_speed: CREEP_SPEED }),
    );
    this.el("#btn-assign").addEventListener("click", () => this.assignMission());
    this.el("#confirm-yes").addEventListener("click", () => {
      const go = this.pendingConfirm;
      this.closeConfirm();
      go?.();
    });
    this.el("#confirm-no").addEventListener("click", () => this.closeConfirm());
    this.el("#error-retry").addEventListener("click", () => {
      const failed = this.lastFailed;
      this.hideError();
      if (failed) this.post(failed.vehicleId, failed.command);
    });
  }

  private el<T extends HTMLElement = HTMLElement>(selector: string): T {
    const node = this.root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  }

  select(vehicleId: string): void {
    this.selected = vehicleId;
    this.render();
  }

  setStreamLive(live: boolean): void {
    this.streamLive = live;
    this.render();
  }

  private selectedView(): VehicleView | undefined {
    return this.selected ? this.store.get(this.selected) : undefined;
  }

  private controlsEnabled(): boolean {
    const view = this.selectedView();
    return this.streamLive && !!view && view.connection === "connected";
  }

  // command path ------------------------------------------------------------

  /** Mode changes out of an emergency stop are gated behind the dialog. */
  private requestMode(mode: (typeof DRIVING_MODES)[number]): void {
    const view = this.selectedView();
    const current = view?.telemetry?.summary.driving_mode;
    const command: Command = { kind: "SetDrivingMode", mode };
    if (current === "emergency stop" && mode !== "emergency stop") {
      this.openConfirm(`Release emergency stop into "${mode}"?`, () => this.issue(command));
    } else {
      this.issue(command);
    }
  }

  private assignMission(): void {
    const missionId = this.el<HTMLInputElement>("#mission-id").value.trim();
    const spec = this.el<HTMLInputElement>("#mission-waypoints").value.trim();
    const waypoints = [];
    for (const part of spec.split(";")) {
      if (!part.trim()) continue;
      const [name, x, y] = part.split(",").map((s) => s.trim());
      const px = Number(x), py = Number(y);
      if (!name || !Number.isFinite(px) || !Number.isFinite(py)) {
        this.setAck(`bad waypoint "${part.trim()}" (want name,x,y)`, "warn");
        return;
      }
      waypoints.push({ name, x: px, y: py });
    }
    if (!missionId || !waypoints.length) {
      this.setAck("mission needs an id and at least one waypoint", "warn");
      return;
    }
    this.issue({ kind: "AssignMission", mission_id: missionId, waypoints });
  }

  private issue(command: Command): void {
    if (!this.controlsEnabled() || !this.selected) return;
    this.post(this.selected, command);
  }

  private post(vehicleId: string, command: Command): void {
    this.setAck(`${command.kind}: sending`, "pending");
    this.send(vehicleId, command).then(
      (res) => {
        const { status, reason } = res.outcome;
        this.setAck(`${command.kind}: ${status}${reason ? ` (${reason})` : ""}`,
          status === "accepted" ? "ok" : "warn");
      },
      (err) => {
        this.lastFailed = { vehicleId, command };
        this.showError(`${command.kind} failed: ${err?.message ?? err}`);
        this.setAck(`${command.kind}: not delivered`, "warn");
      },
    );
  }

  private setAck(text: string, kind: "ok" | "warn" | "pending"): void {
    const line = this.el("#ack-line");
    line.textContent = text;
    line.className = kind;
  }

  // confirm dialog ----------------------------------------------------------

  private openConfirm(text: string, onConfirm: () => void): void {
    this.pendingConfirm = onConfirm;
    this.el("#confirm-text").textContent = text;
    this.el("#confirm-overlay").classList.remove("hidden");
  }

  private closeConfirm(): void {
    this.pendingConfirm = null;
    this.el("#confirm-overlay").classList.add("hidden");
  }

  // error banner ------------------------------------------------------------

  private showError(text: string): void {
    this.el("#error-text").textContent = text;
    this.el("#error-banner").classList.remove("hidden");
  }

  private hideError(): void {
    this.el("#error-banner").classList.add("hidden");
  }

  // rendering ---------------------------------------------------------------

  render(): void {
    const now = this.now();
    const status = this.el("#stream-status");
    status.textContent = this.streamLive ? "live" : "disconnected";
    status.className = `status ${this.streamLive ? "live" : "dead"}`;

    this.renderFleet();
    this.renderVehicle(now);
    (this.el("#controls") as unknown as HTMLFieldSetElement).disabled = !this.controlsEnabled();
  }

  private renderFleet(): void {
    const list = this.el("#fleet-list");
    list.textContent = "";
    for (const view of this.store.list()) {
      const li = document.createElement("li");
      const btn = document.createElement("button");
      btn.type = "button";
      btn.dataset.vehicle = view.vehicleId;
      btn.className = view.vehicleId === this.selected ? "selected" : "";
      const mode = view.telemetry?.summary.driving_mode ?? "no telemetry";
      btn.innerHTML = "";
      btn.append(
        Object.assign(document.createElement("span"), { textContent: view.vehicleId }),
        Object.assign(document.createElement("span"), {
          textContent: mode,
          className: "badge small",
        }),
        Object.assign(document.createElement("span"), {
          textContent: view.connection,
          className: `badge small ${view.connection === "connected" ? "ok" : "warn"}`,
        }),
      );
      btn.addEventListener("click", () => this.select(view.vehicleId));
      li.appendChild(btn);
      list.appendChild(li);
    }
  }

  private renderVehicle(now: number): void {
    const view = this.selectedView();
    const badges = this.el("#summary-badges");
    const telemetry = view?.telemetry ?? null;

    for (const badge of badges.querySelectorAll<HTMLElement>("[data-field]")) {
      const field = badge.dataset.field!;
      let value = "";
      if (telemetry) {
        value = field === "cage_mode"
          ? telemetry.cage_mode
          : (telemetry.summary as unknown as Record<string, string>)[field];
      }
      // never render values from outside the vocabulary as if they were real
      if (view?.badValues.includes(field)) value = "?";
      badge.textContent = value;
      badge.classList.toggle("alert",
        value === "emergency stop" || value === "safe zone occupied" ||
        value === "invalid" || value === "blocked");
    }

    const stale = !!view && this.store.isStale(view.vehicleId, now);
    this.el("#stale-flag").classList.toggle("hidden", !stale);
    this.el("#vehicle-panel").classList.toggle("stale", stale);

    const vocab = this.el("#vocab-flag");
    if (view && view.badValues.length) {
      vocab.textContent = `unknown values: ${view.badValues.join(", ")}`;
      vocab.classList.remove("hidden");
    } else {
      vocab.classList.add("hidden");
    }

    this.renderMission(telemetry);
    this.renderCameras(telemetry);
    if (view && telemetry) {
      const sensor = this.el<HTMLCanvasElement>("#sensor-canvas");
      const ctx = sensor.getContext?.("2d");
      if (ctx) drawSensorView(ctx, telemetry, null, sensor.width, sensor.height);
      const mini = this.el<HTMLCanvasElement>("#minimap-canvas");
      const mctx = mini.getContext?.("2d");
      if (mctx) drawMiniMap(mctx, view, mini.width, mini.height);
    }
  }

  private renderMission(telemetry: VehicleView["telemetry"]): void {
    const list = this.el("#mission-list");
    list.textContent = "";
    const mission = telemetry?.mission;
    if (!mission) {
      const li = document.createElement("li");
      li.textContent = "no mission assigned";
      list.appendChild(li);
      return;
    }
    mission.waypoints.forEach((wp, i) => {
      const li = document.createElement("li");
      const delivered = mission.deliveries.includes(wp.name);
      const current = i === mission.target_index && !delivered && mission.state !== "completed";
      li.textContent = `${wp.name} (${wp.x.toFixed(1)}, ${wp.y.toFixed(1)}) ${
        delivered ? "delivered" : current ? `<- ${mission.state}` : "pending"
      }`;
      li.className = delivered ? "done" : current ? "current" : "";
      list.appendChild(li);
    });
  }

  private renderCameras(telemetry: VehicleView["telemetry"]): void {
    const host = this.el("#camera-panels");
    host.textContent = "";
    if (!telemetry) return;
    const names = Object.keys(telemetry.cameras).sort(
      (a, b) => (a === "front" ? -1 : b === "front" ? 1 : a.localeCompare(b)),
    );
    for (const name of names) {
      const verdict = telemetry.cameras[name];
      const wrap = document.createElement("div");
      wrap.className = "camera";
      const canvas = document.createElement("canvas");
      canvas.width = 150;
      canvas.height = 90;
      canvas.id = `camera-${name}`;
      const badge = document.createElement("span");
      badge.className = `badge camera-badge ${verdict.validity === "valid" ? "ok" : "alert"}`;
      badge.dataset.cam = name;
      badge.textContent = `${name}: ${verdict.validity}${
        verdict.reasons.length ? ` (${verdict.reasons.join(", ")})` : ""
      }`;
      const ctx = canvas.getContext?.("2d");
      if (ctx) {
        drawCameraFrame(ctx, name, telemetry.summary.seq, verdict.validity === "valid",
          canvas.width, canvas.height);
      }
      wrap.append(canvas, badge);
      host.appendChild(wrap);
    }
  }
}
