"""End-to-end delivery tour with a blocked street, headless.

Runs the bundled three-stop scenario with its scripted operator: the first
two handovers happen fully autonomously, a parked vehicle then blocks the
third leg, the cage forces an emergency stop, and the scripted operator
releases the vehicle into limited autonomy to thread the remaining gap.
Prints the delivery log, the mode trace and the command accounting, and
leaves the full event log on disk for `safecage replay`.

Run: python demos/hamburg_run.py
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from safecage.eventlog import ack_accounting, read_log
from safecage.runner import run_scenario
from safecage.sim.scenario import bundled_path


def main() -> None:
    log_path = Path(tempfile.gettempdir()) / "hamburg-demo.ndjson"
    report = run_scenario(
        bundled_path("hamburg_demo"),
        bundled_path("hamburg_operator"),
        log_path,
        seed=7,
    )

    print(f"scenario: {report.scenario} (seed {report.seed})")
    print(f"simulated {report.sim_duration_ms / 1000.0:.1f} s, "
          f"{report.counters['ticks']} ticks\n")

    print("deliveries")
    for d in report.deliveries:
        print(f"  {d['waypoint']:<4} t = {d['t_ms'] / 1000.0:6.1f} s  in {d['driving_mode']}")

    print("\nmode trace")
    for m in report.mode_trace:
        print(f"  t = {m['t_ms'] / 1000.0:6.1f} s  {m['from']}  ->  {m['to']}")

    for clearance in report.es_stop_clearances_m:
        print(f"\nstopped with {clearance:.2f} m front-bumper clearance to the blockage")
    for name, info in report.obstacles.items():
        print(f"closest approach to {name}: {info['min_distance_m']:.2f} m")

    entries = list(read_log(log_path))
    commands, acks, timeouts = ack_accounting(entries)
    print(f"\nevent log: {len(entries)} entries at {log_path}")
    print(f"operator commands: {len(commands)} sent, {len(acks)} acknowledged, "
          f"{len(timeouts)} timed out")

    print(f"\nfinal state: {report.final_driving_mode} / {report.final_mission_state}")
    print(f"checks: {'all passed' if report.passed else 'FAILED'}")
    print(f"\nreplay it:  safecage replay --log {log_path} --speed 20")


if __name__ == "__main__":
    main()
