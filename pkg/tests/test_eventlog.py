from __future__ import annotations

import json

import pytest

from safecage.eventlog import (
    EventLog,
    LogCorruptError,
    ack_accounting,
    read_log,
    replay,
)
from safecage.protocol import WireMessage


def wm(type="Event", vid="pluto-1", seq=1, t=0, payload=None):
    return WireMessage(type=type, vehicle_id=vid, seq=seq, timestamp=t, payload=payload or {})


class FakeClock:
    def __init__(self):
        self.now = 0

    def __call__(self):
        return self.now


class TestWriteRead:
    def test_entries_round_trip_dense(self, tmp_path):
        clock = FakeClock()
        path = tmp_path / "run.ndjson"
        with EventLog(path, clock) as log:
            for i in range(5):
                clock.now = i * 100
                log.append("from_vehicle", wm(seq=i + 1, t=clock.now))
        entries = list(read_log(path))
        assert [e.global_seq for e in entries] == [1, 2, 3, 4, 5]
        assert [e.wall_time for e in entries] == [0, 100, 200, 300, 400]
        assert all(e.direction == "from_vehicle" for e in entries)

    def test_resume_continues_numbering(self, tmp_path):
        clock = FakeClock()
        path = tmp_path / "run.ndjson"
        with EventLog(path, clock) as log:
            log.append("internal", wm())
        with EventLog(path, clock) as log:
            entry = log.append("internal", wm(seq=2))
        assert entry.global_seq == 2
        assert [e.global_seq for e in read_log(path)] == [1, 2]

    def test_bad_direction_rejected(self, tmp_path):
        with EventLog(tmp_path / "x.ndjson", FakeClock()) as log:
            with pytest.raises(ValueError):
                log.append("sideways", wm())


class TestCorruption:
    def test_truncated_json_names_line(self, tmp_path):
        clock = FakeClock()
        path = tmp_path / "run.ndjson"
        with EventLog(path, clock) as log:
            log.append("from_vehicle", wm(seq=1))
            log.append("from_vehicle", wm(seq=2))
        raw = path.read_bytes().splitlines()
        raw[1] = raw[1][: len(raw[1]) // 2]
        path.write_bytes(b"\n".join(raw) + b"\n")
        with pytest.raises(LogCorruptError) as err:
            list(read_log(path))
        assert err.value.line_no == 2

    def test_seq_gap_detected(self, tmp_path):
        clock = FakeClock()
        path = tmp_path / "run.ndjson"
        with EventLog(path, clock) as log:
            log.append("from_vehicle", wm(seq=1))
            log.append("from_vehicle", wm(seq=2))
            log.append("from_vehicle", wm(seq=3))
        lines = path.read_bytes().splitlines()
        path.write_bytes(b"\n".join([lines[0], lines[2]]) + b"\n")
        with pytest.raises(LogCorruptError, match="dense"):
            list(read_log(path))

    def test_bad_envelope_detected(self, tmp_path):
        path = tmp_path / "run.ndjson"
        entry = {
            "global_seq": 1,
            "wall_time": 0,
            "direction": "from_vehicle",
            "message": {"type": "Nope"},
        }
        path.write_text(json.dumps(entry) + "\n")
        with pytest.raises(LogCorruptError) as err:
            list(read_log(path))
        assert err.value.line_no == 1


class TestReplay:
    def test_paces_by_wall_time_over_speed(self, tmp_path):
        clock = FakeClock()
        path = tmp_path / "run.ndjson"
        with EventLog(path, clock) as log:
            for i, t in enumerate([0, 250, 2250]):
                clock.now = t
                log.append("from_vehicle", wm(seq=i + 1, t=t))
        sleeps = []
        seen = []
        n = replay(path, seen.append, speed_factor=2.0, sleep=sleeps.append)
        assert n == 3
        assert [e.message.seq for e in seen] == [1, 2, 3]
        assert sleeps == pytest.approx([0.125, 1.0])

    def test_speed_factor_validated(self, tmp_path):
        path = tmp_path / "run.ndjson"
        with EventLog(path, FakeClock()) as log:
            log.append("internal", wm())
        with pytest.raises(ValueError):
            replay(path, lambda e: None, speed_factor=0.0)
        with pytest.raises(ValueError):
            replay(path, lambda e: None, speed_factor=-1.0)


def test_ack_accounting(tmp_path):
    clock = FakeClock()
    path = tmp_path / "run.ndjson"
    with EventLog(path, clock) as log:
        log.append("to_vehicle", wm(type="Command", seq=10, payload={"kind": "DoorCommand"}))
        log.append("from_vehicle", wm(type="Ack", seq=3, payload={"ref_seq": 10, "outcome": {"status": "accepted"}}))
        log.append("to_vehicle", wm(type="Command", seq=11, payload={"kind": "DoorCommand"}))
        log.append("internal", wm(type="Ack", seq=1, payload={"ref_seq": 11, "outcome": {"status": "timeout"}}))
    commands, acks, timeouts = ack_accounting(read_log(path))
    assert commands == [("pluto-1", 10), ("pluto-1", 11)]
    assert acks == [("pluto-1", 10)]
    assert timeouts == [("pluto-1", 11)]
    assert sorted(acks + timeouts) == sorted(commands)
