from __future__ import annotations

import pytest

from safecage.camera import (
    CameraConfig,
    CameraConfigError,
    CameraFrame,
    ValidityVerdict,
    validate_frame,
)
from safecage.states import SensorValidity

CFG = CameraConfig()


def frame(seq, t, fill=None, pixels=None, w=8, h=6):
    if pixels is None:
        if fill is not None:
            pixels = bytes([fill]) * (w * h)
        else:
            pixels = bytes(((x + seq) % 199 + 20) for x in range(w * h))
    return CameraFrame(camera_id="front", width=w, height=h, pixels=pixels, timestamp=t, seq=seq)


class TestFrameValidation:
    def test_buffer_length_enforced(self):
        with pytest.raises(ValueError):
            CameraFrame("front", 8, 6, b"\x00" * 47, 0, 0)
        with pytest.raises(ValueError):
            CameraFrame("front", 0, 6, b"", 0, 0)

    def test_config_invariants(self):
        with pytest.raises(CameraConfigError):
            CameraConfig(max_age_ms=0)
        with pytest.raises(CameraConfigError):
            CameraConfig(frozen_repeat_count=1)
        with pytest.raises(CameraConfigError):
            CameraConfig(mean_low=200.0, mean_high=100.0)


class TestValidity:
    def test_fresh_normal_frame_is_valid(self):
        v = validate_frame(frame(5, 1000, fill=128), [], now_ms=1100, cfg=CFG)
        assert v == ValidityVerdict(SensorValidity.VALID, ())

    def test_stale_frame(self):
        v = validate_frame(frame(5, 1000, fill=128), [], now_ms=1501, cfg=CFG)
        assert v.validity is SensorValidity.INVALID
        assert v.reasons == ("stale",)
        # exactly max_age is still fresh
        v2 = validate_frame(frame(5, 1000, fill=128), [], now_ms=1500, cfg=CFG)
        assert v2.validity is SensorValidity.VALID

    def test_exposure_bounds(self):
        dark = validate_frame(frame(1, 0, fill=5), [], 0, CFG)
        assert dark.reasons == ("underexposed",)
        bright = validate_frame(frame(1, 0, fill=250), [], 0, CFG)
        assert bright.reasons == ("overexposed",)
        mid = validate_frame(frame(1, 0, fill=10), [], 0, CFG)
        assert mid.validity is SensorValidity.VALID  # thresholds are strict

    def test_frozen_needs_full_repeat_run(self):
        f0, f1, f2 = frame(0, 0, fill=99), frame(1, 50, fill=99), frame(2, 100, fill=99)
        # only two identical frames so far: not frozen yet
        assert validate_frame(f1, [f0], 60, CFG).validity is SensorValidity.VALID
        # third identical buffer trips it
        v = validate_frame(f2, [f0, f1], 110, CFG)
        assert v.reasons == ("frozen",)

    def test_single_pixel_change_clears_frozen(self):
        f0, f1 = frame(0, 0, fill=99), frame(1, 50, fill=99)
        pixels = bytearray(bytes([99]) * 48)
        pixels[17] ^= 1
        f2 = frame(2, 100, pixels=bytes(pixels))
        assert validate_frame(f2, [f0, f1], 110, CFG).validity is SensorValidity.VALID

    def test_reasons_accumulate_sorted(self):
        f0, f1 = frame(0, 0, fill=250), frame(1, 50, fill=250)
        f2 = frame(2, 100, fill=250)
        v = validate_frame(f2, [f0, f1], 1000, CFG)
        assert v.validity is SensorValidity.INVALID
        assert v.reasons == ("frozen", "overexposed", "stale")

    def test_unknown_reason_rejected(self):
        with pytest.raises(ValueError):
            ValidityVerdict.from_reasons(["blurry"])

    def test_round_trip_dict(self):
        v = ValidityVerdict.from_reasons(["stale", "frozen"])
        assert v.to_dict() == {"validity": "invalid", "reasons": ["frozen", "stale"]}
