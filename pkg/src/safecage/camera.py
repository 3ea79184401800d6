"""Plausibility checks for the camera feeds.

A frame is invalid when it is stale, frozen (the sensor keeps repeating the
same buffer), or its exposure collapsed to one end of the range. The checks
are cheap on purpose: they catch a dead or stuck sensor, not bad perception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .states import SensorValidity

REASON_STALE = "stale"
REASON_FROZEN = "frozen"
REASON_UNDEREXPOSED = "underexposed"
REASON_OVEREXPOSED = "overexposed"
ALL_REASONS = (REASON_FROZEN, REASON_OVEREXPOSED, REASON_STALE, REASON_UNDEREXPOSED)


class CameraConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CameraConfig:
    max_age_ms: int = 500
    frozen_repeat_count: int = 3
    mean_low: float = 10.0
    mean_high: float = 245.0

    def __post_init__(self) -> None:
        if self.max_age_ms <= 0:
            raise CameraConfigError("max_age_ms must be > 0")
        if self.frozen_repeat_count < 2:
            raise CameraConfigError("frozen_repeat_count must be >= 2")
        if not (
            math.isfinite(self.mean_low)
            and math.isfinite(self.mean_high)
            and 0.0 <= self.mean_low < self.mean_high <= 255.0
        ):
            raise CameraConfigError("exposure thresholds must satisfy 0 <= low < high <= 255")


@dataclass
class CameraFrame:
    camera_id: str
    width: int
    height: int
    pixels: bytes
    timestamp: int
    seq: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel buffer is {len(self.pixels)} bytes, expected {self.width * self.height}"
            )

    def mean_intensity(self) -> float:
        return float(np.frombuffer(self.pixels, dtype=np.uint8).mean())


@dataclass(frozen=True)
class ValidityVerdict:
    validity: SensorValidity
    reasons: tuple[str, ...]

    @classmethod
    def from_reasons(cls, reasons) -> "ValidityVerdict":
        ordered = tuple(sorted(set(reasons)))
        for r in ordered:
            if r not in ALL_REASONS:
                raise ValueError(f"unknown validity reason {r!r}")
        validity = SensorValidity.INVALID if ordered else SensorValidity.VALID
        return cls(validity, ordered)

    def to_dict(self) -> dict:
        return {"validity": self.validity.value, "reasons": list(self.reasons)}


def validate_frame(
    frame: CameraFrame,
    history: Sequence[CameraFrame],
    now_ms: int,
    cfg: CameraConfig,
) -> ValidityVerdict:
    """Check one frame against its immediate predecessors.

    history holds earlier frames of the same camera, oldest first, current
    frame not included. The frozen check needs frozen_repeat_count identical
    buffers in a row including the current one; any single changed pixel
    breaks the run.
    """
    reasons = []
    if now_ms - frame.timestamp > cfg.max_age_ms:
        reasons.append(REASON_STALE)

    mean = frame.mean_intensity()
    if mean < cfg.mean_low:
        reasons.append(REASON_UNDEREXPOSED)
    elif mean > cfg.mean_high:
        reasons.append(REASON_OVEREXPOSED)

    needed = cfg.frozen_repeat_count - 1
    if needed <= len(history):
        recent = history[-needed:]
        if all(prev.pixels == frame.pixels for prev in recent):
            reasons.append(REASON_FROZEN)

    return ValidityVerdict.from_reasons(reasons)
