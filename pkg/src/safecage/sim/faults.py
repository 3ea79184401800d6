"""Scheduled sensor and link faults.

Ghost points model spurious lidar returns (reflections, dust): isolated
points that a density filter must ignore. Camera freezes replay the last
frame bytes while the window is active. Link faults reuse the transport
outage windows. All schedules are fixed at load time; ghost placement is a
pure function of the window definition, so runs stay reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..links import OutageWindow
from ..states import VehiclePose

GHOST_Z = 0.6  # inside the detector's height band on purpose

# Mutual spacing 0.9 m keeps every ghost outside the default cluster eps of
# any sibling, so no window can form a cluster on its own.
_GHOST_OFFSETS = (
    (0.0, 0.0),
    (0.9, 0.9),
    (-0.9, 0.9),
    (0.9, -0.9),
    (-0.9, -0.9),
    (1.8, 0.0),
    (0.0, 1.8),
    (-1.8, 0.0),
)


class FaultScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class GhostWindow:
    start_ms: int
    end_ms: int
    count: int
    center: tuple[float, float]
    frame: str = "vehicle"  # "vehicle" or "world"

    def __post_init__(self):
        if self.end_ms <= self.start_ms:
            raise FaultScheduleError("ghost window must have end_ms > start_ms")
        if not 1 <= self.count <= len(_GHOST_OFFSETS):
            raise FaultScheduleError(f"ghost count must be in 1..{len(_GHOST_OFFSETS)}")
        if self.frame not in ("vehicle", "world"):
            raise FaultScheduleError(f"unknown ghost frame {self.frame!r}")
        if not all(math.isfinite(c) for c in self.center):
            raise FaultScheduleError("ghost center must be finite")

    def covers(self, now_ms: int) -> bool:
        return self.start_ms <= now_ms < self.end_ms


@dataclass(frozen=True)
class CameraFreezeWindow:
    camera_id: str
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.end_ms <= self.start_ms:
            raise FaultScheduleError("freeze window must have end_ms > start_ms")
        if not self.camera_id:
            raise FaultScheduleError("freeze window needs a camera_id")

    def covers(self, now_ms: int) -> bool:
        return self.start_ms <= now_ms < self.end_ms


@dataclass(frozen=True)
class FaultSchedule:
    ghost_windows: tuple[GhostWindow, ...] = ()
    camera_freezes: tuple[CameraFreezeWindow, ...] = ()
    link_faults: tuple[OutageWindow, ...] = ()

    def __post_init__(self):
        for group in (self.ghost_windows, self.camera_freezes, self.link_faults):
            starts = [w.start_ms for w in group]
            if starts != sorted(starts):
                raise FaultScheduleError("fault windows must be sorted by start_ms")

    def ghost_points(self, now_ms: int, pose: VehiclePose) -> list[tuple[float, float, float]]:
        """Extra lidar points for this instant, in the vehicle frame."""
        out = []
        for window in self.ghost_windows:
            if not window.covers(now_ms):
                continue
            cx, cy = window.center
            if window.frame == "world":
                dx, dy = cx - pose.x, cy - pose.y
                cos_h, sin_h = math.cos(pose.heading), math.sin(pose.heading)
                cx = cos_h * dx + sin_h * dy
                cy = -sin_h * dx + cos_h * dy
            for ox, oy in _GHOST_OFFSETS[: window.count]:
                out.append((cx + ox, cy + oy, GHOST_Z))
        return out

    def camera_frozen(self, camera_id: str, now_ms: int) -> bool:
        return any(
            w.camera_id == camera_id and w.covers(now_ms) for w in self.camera_freezes
        )
