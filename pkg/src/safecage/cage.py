"""The onboard monitoring runtime.

One DependabilityCage instance sits between the vehicle's sensors and its
actuation. Per tick it:

1. validates the camera feeds against their short history;
2. computes the safe zone for the current mode and runs the lidar pipeline;
3. takes at most one queued mode request, computes the requested mode's own
   zone verdict, and runs the mode transition rules;
4. advances the mission (arrival, door dwell, completion) under the decided
   mode;
5. emits the actuation envelope, the state summary, change events, and one
   ack per consumed command.

Commands queue between ticks and are consumed at tick boundaries, so a
command received before tick N is acked and reflected in the summary of tick
N at the latest (N+1 if a mode request is already being decided that tick).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import modes
from .camera import CameraConfig, CameraFrame, ValidityVerdict, validate_frame
from .lidar import CageVerdict, FilterConfig, LidarScan, evaluate
from .missions import Mission, MissionPayloadError, mission_update
from .modes import DEFAULT_SPEED_CAPS, ModeInputs, check_speed_caps
from .protocol import ProtocolError, WireMessage
from .states import (
    CageMode,
    CageState,
    CommandOutcome,
    DoorState,
    DrivingMode,
    MissionState,
    SensorValidity,
    VehiclePose,
    VehicleStateSummary,
    rejected,
)
from .zones import (
    DEFAULT_GEOMETRY,
    FAD_ZONE_PARAMS,
    LAD_ZONE_PARAMS,
    VehicleGeometry,
    ZoneParams,
    ZonePolygon,
    compute_safe_zone,
)

TELEMETRY_SCAN_LIMIT = 200


@dataclass(frozen=True)
class ActuationCommand:
    """Envelope the cage hands to the platform every tick.

    speed_cap is the ceiling the propulsion may not exceed; brake is "none"
    or "full"; steering_hold freezes the steering actuator (manual and
    emergency modes). door_command, when set, asks the hatch to move.
    """

    speed_cap: float
    brake: str
    steering_hold: bool
    door_command: Optional[str] = None


@dataclass
class SensorSnapshot:
    """Everything the cage sees in one tick, stamped on the vehicle clock."""

    clock_ms: int
    pose: VehiclePose
    scan: LidarScan
    frames: dict[str, CameraFrame]
    door_state: DoorState
    door_timestamp: int


@dataclass(frozen=True)
class CageEvent:
    event: str  # "mode_changed" | "cage_state_changed" | "mission_state_changed"
    from_value: str
    to_value: str
    timestamp: int

    def to_payload(self) -> dict:
        return {"event": self.event, "from": self.from_value, "to": self.to_value}


@dataclass
class TickResult:
    summary: VehicleStateSummary
    actuation: ActuationCommand
    events: list[CageEvent]
    acks: list[tuple[int, CommandOutcome]]
    zone: ZonePolygon
    verdict: CageVerdict
    camera_verdicts: dict[str, ValidityVerdict]


@dataclass
class CageConfig:
    geometry: VehicleGeometry = DEFAULT_GEOMETRY
    fad_params: ZoneParams = FAD_ZONE_PARAMS
    lad_params: ZoneParams = LAD_ZONE_PARAMS
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    camera_cfg: CameraConfig = field(default_factory=CameraConfig)
    speed_caps: dict = field(default_factory=lambda: dict(DEFAULT_SPEED_CAPS))
    expected_cameras: tuple[str, ...] = ("front", "back")
    door_stale_ms: int = 2000
    tick_ms: int = 50

    def __post_init__(self) -> None:
        check_speed_caps(self.speed_caps)
        if self.door_stale_ms <= 0:
            raise ValueError("door_stale_ms must be > 0")
        if self.tick_ms <= 0:
            raise ValueError("tick_ms must be > 0")

    def zone_params_for(self, mode: DrivingMode) -> ZoneParams:
        # Modes without their own stopping profile are monitored with the
        # tightest autonomous footprint.
        if mode is DrivingMode.FULLY_AUTONOMOUS:
            return self.fad_params
        return self.lad_params


class DependabilityCage:
    def __init__(
        self,
        vehicle_id: str,
        config: CageConfig | None = None,
        initial_mode: DrivingMode = DrivingMode.FULLY_AUTONOMOUS,
        cage_mode: CageMode = CageMode.ACTIVE,
    ):
        self.vehicle_id = vehicle_id
        self.config = config or CageConfig()
        self._mode = initial_mode
        self._cage_mode = cage_mode
        self._mission: Mission | None = None
        self._manual_target = 0.0
        self._queue: deque[tuple[int, dict]] = deque()
        self._histories: dict[str, deque[CameraFrame]] = {
            cam: deque(maxlen=self.config.camera_cfg.frozen_repeat_count)
            for cam in self.config.expected_cameras
        }
        self._summary_seq = 0
        self._prev_cage_state: CageState | None = None
        self._prev_mission_state = MissionState.INACTIVE
        self._last_clock: int | None = None

    @property
    def driving_mode(self) -> DrivingMode:
        return self._mode

    @property
    def cage_mode(self) -> CageMode:
        return self._cage_mode

    @property
    def mission(self) -> Mission | None:
        return self._mission

    @property
    def manual_target(self) -> float:
        return self._manual_target

    def handle_ccc_message(self, msg: WireMessage) -> None:
        """Queue a command for the next tick. Only Command messages are
        meaningful on this leg of the link."""
        if msg.type != "Command":
            raise ProtocolError(f"vehicle cannot consume {msg.type!r} messages")
        self._queue.append((msg.seq, dict(msg.payload)))

    # command handlers return an outcome; mode requests are deferred to the
    # transition rules instead.

    def _handle_set_cage_mode(self, payload: dict) -> CommandOutcome:
        try:
            self._cage_mode = CageMode(payload["cage_mode"])
        except (KeyError, ValueError):
            return rejected(f"unknown cage mode {payload.get('cage_mode')!r}")
        return CommandOutcome("accepted")

    def _handle_door(self, payload: dict, pose: VehiclePose) -> tuple[CommandOutcome, str | None]:
        action = payload.get("action")
        if action not in ("open", "close"):
            return rejected(f"unknown door action {action!r}"), None
        if pose.speed > 1e-6:
            return rejected("vehicle moving"), None
        return CommandOutcome("accepted"), action

    def _handle_assign_mission(self, payload: dict) -> CommandOutcome:
        if self._mission is not None and self._mission.state in (
            MissionState.ACTIVE,
            MissionState.BLOCKED,
        ):
            return rejected("mission already active")
        try:
            self._mission = Mission.from_payload(payload)
        except MissionPayloadError as exc:
            return rejected(str(exc))
        return CommandOutcome("accepted")

    def _handle_manual(self, payload: dict) -> CommandOutcome:
        try:
            target = float(payload["target_speed"])
        except (KeyError, TypeError, ValueError):
            return rejected("target_speed must be a number")
        if not (0.0 <= target < float("inf")):
            return rejected("target_speed must be >= 0")
        self._manual_target = target
        return CommandOutcome("accepted")

    def tick(self, snap: SensorSnapshot) -> TickResult:
        cfg = self.config
        now = snap.clock_ms
        dt = (now - self._last_clock) / 1000.0 if self._last_clock is not None else cfg.tick_ms / 1000.0
        self._last_clock = now

        # 1. cameras
        camera_verdicts: dict[str, ValidityVerdict] = {}
        for cam in cfg.expected_cameras:
            frame = snap.frames.get(cam)
            if frame is None:
                camera_verdicts[cam] = ValidityVerdict.from_reasons(["stale"])
                continue
            camera_verdicts[cam] = validate_frame(
                frame, list(self._histories[cam]), now, cfg.camera_cfg
            )
        camera_validity = (
            SensorValidity.VALID
            if all(v.validity is SensorValidity.VALID for v in camera_verdicts.values())
            else SensorValidity.INVALID
        )

        # 2. current-mode zone verdict
        front_point = (cfg.geometry.front_x, 0.0)
        zone = compute_safe_zone(
            snap.pose.speed,
            snap.pose.steering,
            cfg.geometry,
            cfg.zone_params_for(self._mode),
            self._mode.value,
        )
        verdict = evaluate(snap.scan, zone, cfg.filter_cfg, front_point=front_point)

        # 3. consume queued commands; at most one mode request per tick
        acks: list[tuple[int, CommandOutcome]] = []
        operator_door: str | None = None
        mode_request: tuple[int, DrivingMode] | None = None
        pending = self._queue
        self._queue = deque()
        while pending:
            ref_seq, payload = pending.popleft()
            kind = payload.get("kind")
            if kind == "SetDrivingMode":
                if mode_request is not None:
                    pending.appendleft((ref_seq, payload))
                    break
                try:
                    requested = DrivingMode(payload["mode"])
                except (KeyError, ValueError):
                    acks.append((ref_seq, rejected(f"unknown driving mode {payload.get('mode')!r}")))
                    continue
                mode_request = (ref_seq, requested)
            elif kind == "SetCageMode":
                acks.append((ref_seq, self._handle_set_cage_mode(payload)))
            elif kind == "DoorCommand":
                outcome, action = self._handle_door(payload, snap.pose)
                if action:
                    operator_door = action
                acks.append((ref_seq, outcome))
            elif kind == "AssignMission":
                acks.append((ref_seq, self._handle_assign_mission(payload)))
            elif kind == "ManualControl":
                acks.append((ref_seq, self._handle_manual(payload)))
            else:
                acks.append((ref_seq, rejected(f"unknown command kind {kind!r}")))
        self._queue = pending  # anything deferred past the second mode request

        requested_mode: DrivingMode | None = None
        requested_state: CageState | None = None
        if mode_request is not None:
            requested_mode = mode_request[1]
            requested_zone = compute_safe_zone(
                snap.pose.speed,
                snap.pose.steering,
                cfg.geometry,
                cfg.zone_params_for(requested_mode),
                requested_mode.value,
            )
            requested_state = evaluate(
                snap.scan, requested_zone, cfg.filter_cfg, front_point=front_point
            ).cage_state

        decision = modes.step(
            ModeInputs(
                current_mode=self._mode,
                cage_mode=self._cage_mode,
                cage_state_current=verdict.cage_state,
                camera_validity=camera_validity,
                requested_mode=requested_mode,
                cage_state_requested=requested_state,
            ),
            cfg.speed_caps,
        )
        if mode_request is not None:
            assert decision.request_outcome is not None
            acks.append((mode_request[0], decision.request_outcome))

        # 4. door visibility and mission progression under the decided mode
        door_reported = (
            DoorState.NO_DATA
            if now - snap.door_timestamp > cfg.door_stale_ms
            else snap.door_state
        )
        mission_door: str | None = None
        if self._mission is not None:
            mission_door = mission_update(
                self._mission, snap.pose, decision.new_mode, door_reported, dt
            )
        door_command = operator_door if operator_door is not None else mission_door

        # 5. summary, events, actuation
        self._summary_seq += 1
        mission_state = self._mission.state if self._mission else MissionState.INACTIVE
        summary = VehicleStateSummary(
            vehicle_id=self.vehicle_id,
            sensor_data=camera_validity,
            mission_state=mission_state,
            door_state=door_reported,
            driving_mode=decision.new_mode,
            cage_state=verdict.cage_state,
            timestamp=now,
            seq=self._summary_seq,
        )

        events: list[CageEvent] = []
        if decision.new_mode is not self._mode:
            events.append(
                CageEvent("mode_changed", self._mode.value, decision.new_mode.value, now)
            )
        if self._prev_cage_state is not None and verdict.cage_state is not self._prev_cage_state:
            events.append(
                CageEvent(
                    "cage_state_changed",
                    self._prev_cage_state.value,
                    verdict.cage_state.value,
                    now,
                )
            )
        if mission_state is not self._prev_mission_state:
            events.append(
                CageEvent(
                    "mission_state_changed",
                    self._prev_mission_state.value,
                    mission_state.value,
                    now,
                )
            )

        speed_cap = decision.speed_cap
        if decision.new_mode is DrivingMode.REMOTE_MANUAL:
            speed_cap = min(speed_cap, self._manual_target)
        actuation = ActuationCommand(
            speed_cap=speed_cap,
            brake=decision.brake,
            steering_hold=decision.new_mode
            in (
                DrivingMode.EMERGENCY_STOP,
                DrivingMode.REMOTE_MANUAL,
                DrivingMode.IN_PLACE_MANUAL,
            ),
            door_command=door_command,
        )

        # push camera history after validation so "previous frames" stays true
        for cam, frame in snap.frames.items():
            if cam not in self._histories:
                continue
            hist = self._histories[cam]
            if not hist or hist[-1].seq != frame.seq:
                hist.append(frame)

        self._mode = decision.new_mode
        self._prev_cage_state = verdict.cage_state
        self._prev_mission_state = mission_state

        return TickResult(
            summary=summary,
            actuation=actuation,
            events=events,
            acks=acks,
            zone=zone,
            verdict=verdict,
            camera_verdicts=camera_verdicts,
        )


def build_telemetry_payload(result: TickResult, snap: SensorSnapshot, cage: DependabilityCage) -> dict:
    """Wire payload for one TelemetrySnapshot; scan capped for the UI."""
    banded = result.zone  # zone vertices are already plain floats
    pts = snap.scan.points
    flat = pts[:, :2] if len(pts) else pts.reshape(0, 3)[:, :2]
    stride = max(1, -(-len(flat) // TELEMETRY_SCAN_LIMIT))  # ceil division
    sampled = flat[::stride][:TELEMETRY_SCAN_LIMIT]
    return {
        "summary": result.summary.to_dict(),
        "pose": snap.pose.to_dict(),
        "cage_mode": cage.cage_mode.value,
        "zone": {
            "mode_label": banded.mode_label,
            "vertices": [[float(x), float(y)] for x, y in banded.vertices],
        },
        "scan": [[float(x), float(y)] for x, y in sampled],
        "offending": [[float(x), float(y)] for x, y in result.verdict.offending_points],
        "nearest_distance": result.verdict.nearest_distance,
        "cameras": {cam: v.to_dict() for cam, v in result.camera_verdicts.items()},
        "mission": cage.mission.to_dict() if cage.mission else None,
        "manual_target": cage.manual_target,
    }
