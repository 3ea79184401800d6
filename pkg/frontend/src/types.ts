// Wire shapes of the control centre API, plus the closed value vocabularies
// every displayed attribute must come from. Anything outside these domains is
// a decoding problem, not something to render as-is.

export const DRIVING_MODES = [
  "fully autonomous driving",
  "limited autonomous driving",
  "remote manual driving",
  "in-place manual driving",
  "emergency stop",
] as const;

export const CAGE_STATES = ["safe zone free", "safe zone occupied"] as const;
export const CAGE_MODES = ["active", "passive"] as const;
export const SENSOR_VALIDITIES = ["valid", "invalid"] as const;
export const MISSION_STATES = ["inactive", "active", "blocked", "completed"] as const;
export const DOOR_STATES = ["open", "closed", "no data"] as const;

export type DrivingMode = (typeof DRIVING_MODES)[number];
export type CageState = (typeof CAGE_STATES)[number];
export type MissionState = (typeof MISSION_STATES)[number];

export type VehicleSummary = {
  vehicle_id: string;
  sensor_data: string;
  mission_state: string;
  door_state: string;
  driving_mode: string;
  cage_state: string;
  timestamp: number;
  seq: number;
};

export type CameraVerdict = { validity: string; reasons: string[] };

export type MissionInfo = {
  mission_id: string;
  state: string;
  target_index: number;
  phase: string;
  waypoints: { name: string; x: number; y: number }[];
  deliveries: string[];
};

export type Telemetry = {
  summary: VehicleSummary;
  pose: { x: number; y: number; heading: number; speed: number; steering: number };
  cage_mode: string;
  zone: { mode_label: string; vertices: [number, number][] };
  scan: [number, number][];
  offending: [number, number][];
  nearest_distance: number | null;
  cameras: Record<string, CameraVerdict>;
  mission: MissionInfo | null;
  manual_target: number;
};

export type FleetRow = {
  vehicle_id: string;
  connection: string; // "connected" | "lost"
  last_seen: number;
  stale_dropped: number;
  summary: VehicleSummary | null;
};

export type VehicleDetail = FleetRow & {
  geometry: {
    front_overhang: number;
    rear_overhang: number;
    wheelbase: number;
    width: number;
  } | null;
  telemetry: Telemetry | null;
};

// One event log entry as pushed over GET /stream.
export type StreamEntry = {
  global_seq: number;
  wall_time: number;
  direction: "from_vehicle" | "to_vehicle" | "internal";
  message: {
    type: string;
    vehicle_id: string;
    seq: number;
    timestamp: number;
    payload: Record<string, unknown>;
  };
};

export type Command =
  | { kind: "SetDrivingMode"; mode: DrivingMode }
  | { kind: "SetCageMode"; cage_mode: "active" | "passive" }
  | { kind: "DoorCommand"; action: "open" | "close" }
  | { kind: "ManualControl"; target_speed: number }
  | {
      kind: "AssignMission";
      mission_id: string;
      waypoints: { name: string; x: number; y: number }[];
      reach_radius?: number;
      dwell_s?: number;
    };

export type CommandOutcome = { status: "accepted" | "rejected" | "timeout"; reason?: string };
export type CommandResponse = { seq: number; outcome: CommandOutcome };

/** What the console holds per vehicle: the latest decoded snapshot plus
 * bookkeeping the widgets need (staleness, vocabulary violations, a short
 * pose trail for the mini-map). */
export type VehicleView = {
  vehicleId: string;
  connection: string;
  telemetry: Telemetry | null;
  lastUpdateMs: number; // console clock of the last applied message
  badValues: string[]; // attributes whose value fell outside its vocabulary
  trail: [number, number][];
};

export function isDrivingMode(v: string): v is DrivingMode {
  return (DRIVING_MODES as readonly string[]).includes(v);
}
