"""Scenario file loader.

A scenario is one JSON document with sections for the world, the vehicle,
zone and sensor-filter parameters, mode caps, the mission, fault schedules,
and simulation settings. The loader is strict: unknown keys are rejected and
every validation error names the offending key by its dotted path, so a typo
in a config fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..cage import CageConfig
from ..camera import CameraConfig
from ..lidar import FilterConfig
from ..links import OutageWindow
from ..modes import DEFAULT_SPEED_CAPS, check_speed_caps
from ..states import CageMode, DrivingMode, VehiclePose
from ..zones import FAD_ZONE_PARAMS, LAD_ZONE_PARAMS, VehicleGeometry, ZoneParams
from .faults import CameraFreezeWindow, FaultSchedule, GhostWindow
from .sensors import LidarConfig
from .world import Obstacle, WorldModel


class ScenarioError(ValueError):
    """Names the offending key path, e.g. 'zones.fad.decel_max'."""


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")


def _number(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(f"{path}.{key}: must be a finite number")
    return float(value)


def _integer(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path}.{key}: must be an integer")
    return value


def _string(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"{path}.{key}: must be a non-empty string")
    return value


def _point(value, path: str) -> tuple[float, float]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value)
    ):
        raise ScenarioError(f"{path}: must be [x, y]")
    return float(value[0]), float(value[1])


def _build(cls, path: str, **kwargs):
    # dataclass validators raise plain ValueError; re-tag with the key path
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


@dataclass
class SimSettings:
    tick_ms: int = 50
    lidar: LidarConfig = field(default_factory=LidarConfig)

    def __post_init__(self):
        if self.tick_ms <= 0 or self.tick_ms > 100:
            raise ValueError("tick_ms must be in 1..100")


@dataclass
class Scenario:
    name: str
    world: WorldModel
    vehicle_id: str
    start_pose: VehiclePose
    geometry: VehicleGeometry
    fad_params: ZoneParams
    lad_params: ZoneParams
    filter_cfg: FilterConfig
    camera_cfg: CameraConfig
    speed_caps: dict
    cage_mode: CageMode
    mission_payload: dict | None
    faults: FaultSchedule
    sim: SimSettings

    def cage_config(self) -> CageConfig:
        return CageConfig(
            geometry=self.geometry,
            fad_params=self.fad_params,
            lad_params=self.lad_params,
            filter_cfg=self.filter_cfg,
            camera_cfg=self.camera_cfg,
            speed_caps=dict(self.speed_caps),
            tick_ms=self.sim.tick_ms,
        )


_TOP_KEYS = {
    "name", "world", "vehicle", "zones", "filters", "cameras", "modes",
    "mission", "faults", "sim",
}


def _parse_world(raw: dict) -> WorldModel:
    _check_keys(raw, {"bounds", "obstacles", "delivery_points", "route"}, "world")
    bounds = None
    if "bounds" in raw:
        bounds = _point(raw["bounds"], "world.bounds")
    obstacles = []
    for i, entry in enumerate(raw.get("obstacles", [])):
        path = f"world.obstacles[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: must be an object")
        _check_keys(entry, {"name", "polygon", "height"}, path)
        polygon = entry.get("polygon")
        if not isinstance(polygon, list):
            raise ScenarioError(f"{path}.polygon: must be a list of [x, y]")
        vertices = tuple(_point(v, f"{path}.polygon[{j}]") for j, v in enumerate(polygon))
        obstacles.append(
            _build(
                Obstacle,
                path,
                name=_string(entry, "name", path, default=f"obstacle-{i}"),
                polygon=vertices,
                height=_number(entry, "height", path),
            )
        )
    points_raw = raw.get("delivery_points", {})
    if not isinstance(points_raw, dict):
        raise ScenarioError("world.delivery_points: must be an object")
    delivery_points = {
        name: _point(xy, f"world.delivery_points.{name}") for name, xy in points_raw.items()
    }
    route = raw.get("route", [])
    if not isinstance(route, list) or not all(isinstance(n, str) for n in route):
        raise ScenarioError("world.route: must be a list of delivery point names")
    return _build(
        WorldModel,
        "world",
        obstacles=tuple(obstacles),
        delivery_points=delivery_points,
        route=tuple(route),
        bounds=bounds,
    )


def _parse_pose(raw: dict, path: str) -> VehiclePose:
    _check_keys(raw, {"x", "y", "heading", "speed", "steering"}, path)
    return _build(
        VehiclePose,
        path,
        x=_number(raw, "x", path, default=0.0),
        y=_number(raw, "y", path, default=0.0),
        heading=_number(raw, "heading", path, default=0.0),
        speed=_number(raw, "speed", path, default=0.0),
        steering=_number(raw, "steering", path, default=0.0),
    )


def _parse_zone_params(raw: dict, path: str, defaults: ZoneParams) -> ZoneParams:
    fields = ("decel_max", "react_time", "front_margin", "lat_margin", "speed_cap", "arc_step")
    _check_keys(raw, set(fields), path)
    return _build(
        ZoneParams,
        path,
        **{name: _number(raw, name, path, default=getattr(defaults, name)) for name in fields},
    )


def _parse_mission(raw: dict, world: WorldModel) -> dict:
    _check_keys(raw, {"mission_id", "waypoints", "reach_radius", "dwell_s"}, "mission")
    reach = _number(raw, "reach_radius", "mission", default=0.5)
    dwell = _number(raw, "dwell_s", "mission", default=3.0)
    if reach <= 0:
        raise ScenarioError("mission.reach_radius: must be > 0")
    if dwell <= 0:
        raise ScenarioError("mission.dwell_s: must be > 0")
    waypoints_raw = raw.get("waypoints")
    if waypoints_raw is None:
        waypoints_raw = list(world.route)
    if not isinstance(waypoints_raw, list) or not waypoints_raw:
        raise ScenarioError("mission.waypoints: must be a non-empty list")
    waypoints = []
    for i, wp in enumerate(waypoints_raw):
        path = f"mission.waypoints[{i}]"
        if isinstance(wp, str):
            if wp not in world.delivery_points:
                raise ScenarioError(f"{path}: unknown delivery point {wp!r}")
            x, y = world.delivery_points[wp]
            waypoints.append({"name": wp, "x": x, "y": y})
        elif isinstance(wp, dict):
            _check_keys(wp, {"name", "x", "y"}, path)
            waypoints.append(
                {
                    "name": _string(wp, "name", path),
                    "x": _number(wp, "x", path),
                    "y": _number(wp, "y", path),
                }
            )
        else:
            raise ScenarioError(f"{path}: must be a name or an object")
    return {
        "mission_id": _string(raw, "mission_id", "mission"),
        "waypoints": waypoints,
        "reach_radius": reach,
        "dwell_s": dwell,
    }


def _parse_faults(raw: dict) -> FaultSchedule:
    _check_keys(raw, {"ghost_points", "camera_freeze", "link_faults"}, "faults")
    ghosts = []
    for i, entry in enumerate(raw.get("ghost_points", [])):
        path = f"faults.ghost_points[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: must be an object")
        _check_keys(entry, {"start_ms", "end_ms", "count", "center", "frame"}, path)
        ghosts.append(
            _build(
                GhostWindow,
                path,
                start_ms=_integer(entry, "start_ms", path),
                end_ms=_integer(entry, "end_ms", path),
                count=_integer(entry, "count", path, default=2),
                center=_point(entry.get("center", [2.5, 0.0]), f"{path}.center"),
                frame=_string(entry, "frame", path, default="vehicle"),
            )
        )
    freezes = []
    for i, entry in enumerate(raw.get("camera_freeze", [])):
        path = f"faults.camera_freeze[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: must be an object")
        _check_keys(entry, {"camera_id", "start_ms", "end_ms"}, path)
        freezes.append(
            _build(
                CameraFreezeWindow,
                path,
                camera_id=_string(entry, "camera_id", path),
                start_ms=_integer(entry, "start_ms", path),
                end_ms=_integer(entry, "end_ms", path),
            )
        )
    links = []
    for i, entry in enumerate(raw.get("link_faults", [])):
        path = f"faults.link_faults[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: must be an object")
        _check_keys(entry, {"start_ms", "end_ms", "drop_probability"}, path)
        links.append(
            _build(
                OutageWindow,
                path,
                start_ms=_integer(entry, "start_ms", path),
                end_ms=_integer(entry, "end_ms", path),
                drop_probability=_number(entry, "drop_probability", path, default=1.0),
            )
        )
    return _build(
        FaultSchedule,
        "faults",
        ghost_windows=tuple(ghosts),
        camera_freezes=tuple(freezes),
        link_faults=tuple(links),
    )


def _parse_modes(raw: dict) -> tuple[dict, CageMode]:
    _check_keys(raw, {"speed_caps", "cage_mode"}, "modes")
    caps = dict(DEFAULT_SPEED_CAPS)
    if "speed_caps" in raw:
        entries = raw["speed_caps"]
        if not isinstance(entries, dict):
            raise ScenarioError("modes.speed_caps: must be an object")
        for key, value in entries.items():
            try:
                mode = DrivingMode(key)
            except ValueError:
                raise ScenarioError(f"modes.speed_caps.{key}: unknown driving mode")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"modes.speed_caps.{key}: must be a number")
            caps[mode] = float(value)
        try:
            check_speed_caps(caps)
        except ValueError as exc:
            raise ScenarioError(f"modes.speed_caps: {exc}") from exc
    cage_raw = _string(raw, "cage_mode", "modes", default=CageMode.ACTIVE.value)
    try:
        cage_mode = CageMode(cage_raw)
    except ValueError:
        raise ScenarioError(f"modes.cage_mode: unknown cage mode {cage_raw!r}")
    return caps, cage_mode


def _parse_sim(raw: dict) -> SimSettings:
    _check_keys(raw, {"tick_ms", "lidar"}, "sim")
    lidar_raw = raw.get("lidar", {})
    _check_keys(lidar_raw, {"n_beams", "fov_deg", "max_range"}, "sim.lidar")
    lidar = _build(
        LidarConfig,
        "sim.lidar",
        n_beams=_integer(lidar_raw, "n_beams", "sim.lidar", default=360),
        fov_deg=_number(lidar_raw, "fov_deg", "sim.lidar", default=180.0),
        max_range=_number(lidar_raw, "max_range", "sim.lidar", default=30.0),
    )
    return _build(SimSettings, "sim", tick_ms=_integer(raw, "tick_ms", "sim", default=50), lidar=lidar)


def parse_scenario(doc: dict, name_hint: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("top level: must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "")
    world = _parse_world(doc.get("world", {}))

    vehicle_raw = doc.get("vehicle", {})
    _check_keys(vehicle_raw, {"vehicle_id", "start", "geometry"}, "vehicle")
    vehicle_id = _string(vehicle_raw, "vehicle_id", "vehicle", default="vehicle-1")
    start_pose = _parse_pose(vehicle_raw.get("start", {}), "vehicle.start")
    geom_raw = vehicle_raw.get("geometry", {})
    _check_keys(geom_raw, {"wheelbase", "width", "front_overhang", "rear_overhang"}, "vehicle.geometry")
    geometry = _build(
        VehicleGeometry,
        "vehicle.geometry",
        wheelbase=_number(geom_raw, "wheelbase", "vehicle.geometry", default=2.0),
        width=_number(geom_raw, "width", "vehicle.geometry", default=1.2),
        front_overhang=_number(geom_raw, "front_overhang", "vehicle.geometry", default=0.5),
        rear_overhang=_number(geom_raw, "rear_overhang", "vehicle.geometry", default=0.5),
    )

    zones_raw = doc.get("zones", {})
    _check_keys(zones_raw, {"fad", "lad"}, "zones")
    fad = _parse_zone_params(zones_raw.get("fad", {}), "zones.fad", FAD_ZONE_PARAMS)
    lad = _parse_zone_params(zones_raw.get("lad", {}), "zones.lad", LAD_ZONE_PARAMS)

    filters_raw = doc.get("filters", {})
    _check_keys(filters_raw, {"z_min", "z_max", "cluster_eps", "cluster_min_pts"}, "filters")
    filter_cfg = _build(
        FilterConfig,
        "filters",
        z_min=_number(filters_raw, "z_min", "filters", default=0.10),
        z_max=_number(filters_raw, "z_max", "filters", default=2.50),
        cluster_eps=_number(filters_raw, "cluster_eps", "filters", default=0.30),
        cluster_min_pts=_integer(filters_raw, "cluster_min_pts", "filters", default=3),
    )

    cameras_raw = doc.get("cameras", {})
    _check_keys(cameras_raw, {"max_age_ms", "frozen_repeat_count", "mean_low", "mean_high"}, "cameras")
    camera_cfg = _build(
        CameraConfig,
        "cameras",
        max_age_ms=_integer(cameras_raw, "max_age_ms", "cameras", default=500),
        frozen_repeat_count=_integer(cameras_raw, "frozen_repeat_count", "cameras", default=3),
        mean_low=_number(cameras_raw, "mean_low", "cameras", default=10.0),
        mean_high=_number(cameras_raw, "mean_high", "cameras", default=245.0),
    )

    speed_caps, cage_mode = _parse_modes(doc.get("modes", {}))

    mission_payload = _parse_mission(doc["mission"], world) if "mission" in doc else None

    faults = _parse_faults(doc.get("faults", {}))
    sim = _parse_sim(doc.get("sim", {}))

    return Scenario(
        name=_string(doc, "name", "", default=name_hint),
        world=world,
        vehicle_id=vehicle_id,
        start_pose=start_pose,
        geometry=geometry,
        fad_params=fad,
        lad_params=lad,
        filter_cfg=filter_cfg,
        camera_cfg=camera_cfg,
        speed_caps=speed_caps,
        cage_mode=cage_mode,
        mission_payload=mission_payload,
        faults=faults,
        sim=sim,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(doc, name_hint=path.stem)


def bundled_path(name: str) -> Path:
    """Path of a scenario or operator script shipped with the package."""
    name = name if name.endswith(".json") else f"{name}.json"
    path = Path(__file__).resolve().parent.parent / "scenarios" / name
    if not path.exists():
        raise ScenarioError(f"no bundled file named {name!r}")
    return path
