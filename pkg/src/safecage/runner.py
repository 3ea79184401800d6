"""Headless scenario execution.

Wires the simulated vehicle, its onboard safety cage, and an in-process
control centre onto one simulated clock, drives the whole thing tick by
tick, and scores the run: script expectations, mission outcome, stop
clearances, and log invariants. A scripted operator stands in for the human
at the console, reacting to vehicle events with commands.

Everything is deterministic for a given scenario, script, and seed; the
report deliberately carries no wall-clock fields so equal runs compare
equal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from shapely.geometry import Point, Polygon as ShapelyPolygon

from .cage import DependabilityCage, SensorSnapshot, build_telemetry_payload
from .control_centre import ControlCentre, PendingCommand
from .eventlog import EventLog, ack_accounting, read_log
from .links import InProcessLink
from .missions import MissionState
from .protocol import WireMessage
from .sim.ads import ads_step
from .sim.scenario import Scenario, load_scenario
from .sim.sensors import raycast_lidar, synth_camera_frame
from .sim.world import Controls, DoorSim, step_vehicle
from .states import DrivingMode

DEFAULT_MAX_SIM_MS = 120_000

LEGAL_MISSION_TRANSITIONS = {
    ("inactive", "active"),
    ("active", "blocked"),
    ("blocked", "active"),
    ("active", "completed"),
    ("completed", "active"),
}

EXPECTED_OUTCOMES = ("accepted", "rejected", "timeout")


class ScriptError(ValueError):
    pass


@dataclass
class ScriptStep:
    command: dict
    expect: str | None = None
    at_time_ms: int | None = None
    on_event: dict | None = None
    delay_ms: int = 0
    # runtime bookkeeping
    armed_at: int | None = field(default=None, repr=False)
    pending: PendingCommand | None = field(default=None, repr=False)
    actual: str | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.at_time_ms is None) == (self.on_event is None):
            raise ScriptError("step needs exactly one of at_time_ms or on_event")
        if self.expect is not None and self.expect not in EXPECTED_OUTCOMES:
            raise ScriptError(f"expect must be one of {EXPECTED_OUTCOMES}")
        if not isinstance(self.command, dict) or "kind" not in self.command:
            raise ScriptError("step command must be an object with a kind")
        if self.delay_ms < 0:
            raise ScriptError("delay_ms must be >= 0")
        if self.at_time_ms is not None:
            self.armed_at = self.at_time_ms + self.delay_ms


def load_script(path: str | Path) -> list[ScriptStep]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return parse_script(doc)


def parse_script(doc: dict) -> list[ScriptStep]:
    if not isinstance(doc, dict) or set(doc) - {"steps"}:
        raise ScriptError("script must be an object with a single 'steps' list")
    steps_raw = doc.get("steps", [])
    if not isinstance(steps_raw, list):
        raise ScriptError("steps must be a list")
    steps = []
    last_at = -1
    for i, raw in enumerate(steps_raw):
        if not isinstance(raw, dict):
            raise ScriptError(f"steps[{i}] must be an object")
        unknown = set(raw) - {"at_time_ms", "on_event", "delay_ms", "command", "expect"}
        if unknown:
            raise ScriptError(f"steps[{i}]: unknown keys {sorted(unknown)}")
        try:
            step = ScriptStep(
                command=raw.get("command"),
                expect=raw.get("expect"),
                at_time_ms=raw.get("at_time_ms"),
                on_event=raw.get("on_event"),
                delay_ms=raw.get("delay_ms", 0),
            )
        except ScriptError as exc:
            raise ScriptError(f"steps[{i}]: {exc}") from exc
        if step.at_time_ms is not None:
            if step.at_time_ms < last_at:
                raise ScriptError(f"steps[{i}]: at_time_ms out of order")
            last_at = step.at_time_ms
        steps.append(step)
    return steps


class ScriptedOperator:
    """Replays operator actions against the centre on the shared clock."""

    def __init__(self, steps: list[ScriptStep], centre: ControlCentre, vehicle_id: str):
        self.steps = steps
        self.centre = centre
        self.vehicle_id = vehicle_id
        self._queue = centre.subscribe(maxsize=100_000)

    def _event_matches(self, step: ScriptStep, payload: dict) -> bool:
        want = step.on_event
        if payload.get("event") != want.get("event"):
            return False
        for key in ("from", "to"):
            if key in want and payload.get(key) != want[key]:
                return False
        return True

    def step_tick(self, now: int) -> None:
        # arm event-triggered steps from anything the centre saw this tick
        while not self._queue.empty():
            entry = self._queue.get_nowait()
            msg = entry.message
            if entry.direction != "from_vehicle" or msg.type != "Event":
                continue
            for step in self.steps:
                if step.on_event is not None and step.armed_at is None:
                    if self._event_matches(step, msg.payload):
                        step.armed_at = now + step.delay_ms
        # dispatch everything due; a vehicle the centre has not seen yet
        # (register lost to a link fault) just delays the step a tick
        for step in self.steps:
            if step.pending is None and step.armed_at is not None and now >= step.armed_at:
                if not self.centre.known_vehicle(self.vehicle_id):
                    continue
                step.pending = self.centre.dispatch_command(self.vehicle_id, step.command)
        # harvest outcomes
        for step in self.steps:
            if step.pending is not None and step.actual is None and step.pending.outcome:
                step.actual = step.pending.outcome.status

    def unresolved(self) -> bool:
        return any(s.actual is None for s in self.steps)

    def results(self) -> list[dict]:
        out = []
        for i, step in enumerate(self.steps):
            ok = True
            if step.actual is None:
                ok = False
                detail = "never triggered" if step.pending is None else "no outcome"
            else:
                detail = step.actual
                if step.expect is not None:
                    ok = step.actual == step.expect
            out.append(
                {
                    "step": i,
                    "kind": step.command.get("kind"),
                    "expected": step.expect,
                    "actual": step.actual,
                    "passed": ok,
                    "detail": detail,
                }
            )
        return out


@dataclass
class RunReport:
    scenario: str
    seed: int
    sim_duration_ms: int
    final_driving_mode: str
    final_mission_state: str
    deliveries: list[dict]
    mode_trace: list[dict]
    obstacles: dict
    es_stop_clearances_m: list[float]
    script_results: list[dict]
    checks: list[dict]
    counters: dict

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "sim_duration_ms": self.sim_duration_ms,
            "final_driving_mode": self.final_driving_mode,
            "final_mission_state": self.final_mission_state,
            "deliveries": self.deliveries,
            "mode_trace": self.mode_trace,
            "obstacles": self.obstacles,
            "es_stop_clearances_m": self.es_stop_clearances_m,
            "script_results": self.script_results,
            "checks": self.checks,
            "counters": self.counters,
            "passed": self.passed,
        }


def _front_bumper(pose, geometry) -> tuple[float, float]:
    return (
        pose.x + geometry.front_x * math.cos(pose.heading),
        pose.y + geometry.front_x * math.sin(pose.heading),
    )


class SimVehicle:
    """One simulated vehicle body plus its onboard cage.

    Owns everything vehicle-side between sensor synthesis and actuation, so
    the headless runner and the live TCP client drive the exact same code.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.config = scenario.cage_config()
        self.cage = DependabilityCage(
            scenario.vehicle_id, self.config, cage_mode=scenario.cage_mode
        )
        self.pose = scenario.start_pose
        self.door = DoorSim()
        self.dt = scenario.sim.tick_ms / 1000.0
        self.ticks = 0
        self._last_pixels: dict[str, bytes] = {}

    def register_payload(self) -> dict:
        g = self.scenario.geometry
        return {
            "geometry": {
                "wheelbase": g.wheelbase,
                "width": g.width,
                "front_overhang": g.front_overhang,
                "rear_overhang": g.rear_overhang,
            }
        }

    def _sense(self, sim_now: int) -> SensorSnapshot:
        scenario = self.scenario
        scan = raycast_lidar(
            scenario.world, self.pose, scenario.sim.lidar, scenario.faults, sim_now,
            seq=self.ticks,
        )
        frames = {}
        for cam in self.config.expected_cameras:
            frozen = scenario.faults.camera_frozen(cam, sim_now)
            frames[cam] = synth_camera_frame(
                cam, sim_now, self.ticks,
                frozen_pixels=self._last_pixels.get(cam) if frozen else None,
            )
            self._last_pixels[cam] = frames[cam].pixels
        return SensorSnapshot(
            clock_ms=sim_now,
            pose=self.pose,
            scan=scan,
            frames=frames,
            door_state=self.door.step(self.dt),
            door_timestamp=sim_now,
        )

    def tick(self, sim_now: int):
        """Sense, run the cage, and return (tick result, outbound messages)."""
        snap = self._sense(sim_now)
        result = self.cage.tick(snap)
        outbound = [
            ("Ack", {"ref_seq": ref_seq, "outcome": outcome.to_dict()})
            for ref_seq, outcome in result.acks
        ]
        outbound += [("Event", e.to_payload()) for e in result.events]
        outbound.append(("TelemetrySnapshot", build_telemetry_payload(result, snap, self.cage)))
        return result, outbound

    def drive(self, result) -> None:
        """Apply one actuation tick: the driving stub for autonomous modes,
        envelope-following for remote manual, braking otherwise."""
        mode = self.cage.driving_mode
        if mode in (DrivingMode.FULLY_AUTONOMOUS, DrivingMode.LIMITED_AUTONOMOUS):
            controls = ads_step(
                self.cage.mission,
                self.pose,
                result.actuation,
                self.dt,
                self.scenario.geometry.wheelbase,
                leg_start=(self.scenario.start_pose.x, self.scenario.start_pose.y),
            )
        elif mode is DrivingMode.REMOTE_MANUAL:
            # remote pedal stand-in: settle at whatever the envelope allows
            accel = max(-2.0, min(1.0, (result.actuation.speed_cap - self.pose.speed) / self.dt))
            controls = Controls(accel=accel, steering_rate=0.0)
        else:
            controls = Controls(accel=-2.0, steering_rate=0.0)
        if result.actuation.door_command is not None:
            self.door.command(result.actuation.door_command)
        self.pose = step_vehicle(
            self.pose, controls, result.actuation, self.dt, self.scenario.geometry.wheelbase
        )
        self.ticks += 1

    @property
    def mission_settled(self) -> bool:
        mission = self.cage.mission
        return (
            mission is not None
            and mission.state is MissionState.COMPLETED
            and self.pose.speed == 0.0
        )


def run_scenario(
    scenario: Scenario | str | Path,
    script: list[ScriptStep] | str | Path | None,
    log_path: str | Path,
    seed: int = 0,
    max_sim_ms: int = DEFAULT_MAX_SIM_MS,
) -> RunReport:
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if script is None:
        steps: list[ScriptStep] = []
    elif isinstance(script, (str, Path)):
        steps = load_script(script)
    else:
        steps = script

    # the operator assigns the mission unless the script already does
    if scenario.mission_payload is not None and not any(
        s.command.get("kind") == "AssignMission" for s in steps
    ):
        steps.insert(
            0,
            ScriptStep(
                command={"kind": "AssignMission", **scenario.mission_payload},
                expect="accepted",
                at_time_ms=0,
            ),
        )
    # a bare AssignMission pulls the payload from the scenario
    for step in steps:
        if step.command.get("kind") == "AssignMission" and "waypoints" not in step.command:
            if scenario.mission_payload is None:
                raise ScriptError("AssignMission step but scenario has no mission")
            step.command = {"kind": "AssignMission", **scenario.mission_payload}

    sim_now = 0

    def clock() -> int:
        return sim_now

    veh = SimVehicle(scenario)
    # every run owns its log from entry 1; resuming an old file would make
    # equal-seed runs diverge
    Path(log_path).unlink(missing_ok=True)
    log = EventLog(log_path, clock)
    centre = ControlCentre(log, clock)
    link = InProcessLink(windows=scenario.faults.link_faults, seed=seed)
    link.bind(centre.ingest, veh.cage.handle_ccc_message)
    centre_sender = lambda msg: link.to_vehicle(msg, sim_now)  # noqa: E731
    operator = ScriptedOperator(steps, centre, scenario.vehicle_id)

    vehicle_seq = 0

    def vehicle_send(type_: str, payload: dict) -> None:
        nonlocal vehicle_seq
        vehicle_seq += 1
        link.to_centre(
            WireMessage(type_, scenario.vehicle_id, vehicle_seq, sim_now, payload), sim_now
        )

    vehicle_send("Register", veh.register_payload())
    centre.attach_sender(scenario.vehicle_id, centre_sender)

    obstacle_polys = {
        o.name: ShapelyPolygon(o.polygon) for o in scenario.world.obstacles
    }
    min_distance = {name: float("inf") for name in obstacle_polys}
    es_clearances: list[float] = []
    es_stopped_recorded = False
    mode_trace: list[dict] = []
    mission_transitions: list[tuple[str, str]] = []
    deliveries: list[dict] = []
    delivered_names: set[str] = set()
    summaries: list[dict] = []

    while sim_now <= max_sim_ms:
        result, outbound = veh.tick(sim_now)
        for type_, payload in outbound:
            vehicle_send(type_, payload)
        for event in result.events:
            if event.event == "mode_changed":
                mode_trace.append(
                    {"from": event.from_value, "to": event.to_value, "t_ms": sim_now}
                )
                es_stopped_recorded = event.to_value != DrivingMode.EMERGENCY_STOP.value
            elif event.event == "mission_state_changed":
                mission_transitions.append((event.from_value, event.to_value))
        summaries.append(result.summary.to_dict())

        if veh.cage.mission is not None:
            for name in veh.cage.mission.deliveries:
                if name not in delivered_names:
                    delivered_names.add(name)
                    deliveries.append(
                        {
                            "waypoint": name,
                            "t_ms": sim_now,
                            "driving_mode": result.summary.driving_mode.value,
                        }
                    )

        operator.step_tick(sim_now)
        centre.poll_timeouts()

        veh.drive(result)

        if obstacle_polys:
            bumper = Point(_front_bumper(veh.pose, scenario.geometry))
            for name, poly in obstacle_polys.items():
                min_distance[name] = min(min_distance[name], poly.distance(bumper))
            if (
                veh.cage.driving_mode is DrivingMode.EMERGENCY_STOP
                and veh.pose.speed == 0.0
                and not es_stopped_recorded
            ):
                es_stopped_recorded = True
                es_clearances.append(
                    min(poly.distance(bumper) for poly in obstacle_polys.values())
                )

        sim_now += scenario.sim.tick_ms

        if scenario.mission_payload is not None or veh.cage.mission is not None:
            # covers missions the script assigned on its own as well
            settled = veh.mission_settled and not operator.unresolved()
        else:
            # nothing to deliver: stop once the script has played out
            settled = sim_now >= 2000 and veh.pose.speed == 0.0 and not operator.unresolved()
        if settled:
            break

    log.close()

    entries = list(read_log(log_path))
    commands, acks, timeouts = ack_accounting(entries)
    outcomes = sorted(acks + timeouts)
    checks = [
        {
            "name": "log_well_formed",
            "passed": True,
            "detail": f"{len(entries)} entries, dense sequence",
        },
        {
            "name": "every_command_resolved_once",
            "passed": sorted(commands) == outcomes,
            "detail": f"{len(commands)} commands, {len(acks)} acks, {len(timeouts)} timeouts",
        },
    ]
    illegal = [t for t in mission_transitions if t not in LEGAL_MISSION_TRANSITIONS]
    checks.append(
        {
            "name": "mission_lifecycle_legal",
            "passed": not illegal,
            "detail": "ok" if not illegal else f"illegal transitions: {illegal}",
        }
    )
    script_results = operator.results()
    checks.append(
        {
            "name": "script_expectations",
            "passed": all(r["passed"] for r in script_results),
            "detail": f"{sum(r['passed'] for r in script_results)}/{len(script_results)} steps",
        }
    )
    if scenario.mission_payload is not None:
        final_mission = veh.cage.mission.state.value if veh.cage.mission else "inactive"
        checks.append(
            {
                "name": "mission_completed",
                "passed": final_mission == "completed",
                "detail": final_mission,
            }
        )
    if es_clearances:
        checks.append(
            {
                "name": "es_stop_clearance",
                "passed": all(c >= 1.0 for c in es_clearances),
                "detail": f"stopped at {[round(c, 3) for c in es_clearances]} m",
            }
        )

    summary = summaries[-1] if summaries else {}
    return RunReport(
        scenario=scenario.name,
        seed=seed,
        sim_duration_ms=sim_now,
        final_driving_mode=summary.get("driving_mode", ""),
        final_mission_state=summary.get("mission_state", ""),
        deliveries=deliveries,
        mode_trace=mode_trace,
        obstacles={
            name: {
                "min_distance_m": round(dist, 6) if math.isfinite(dist) else None,
            }
            for name, dist in min_distance.items()
        },
        es_stop_clearances_m=[round(c, 6) for c in es_clearances],
        script_results=script_results,
        checks=checks,
        counters={
            "ticks": veh.ticks,
            "dropped_to_centre": link.dropped_up,
            "dropped_to_vehicle": link.dropped_down,
            "commands": len(commands),
            "acks": len(acks),
            "timeouts": len(timeouts),
        },
    )
