"""Command line front door.

Four subcommands cover the deployment shapes:

  sim run       one simulated vehicle with its onboard cage, connected to a
                control centre over TCP
  ccc serve     the control centre: TCP listener for vehicles, HTTP and
                WebSocket for operator consoles
  scenario run  headless closed-loop run (vehicle, cage, in-process centre,
                scripted operator) producing an event log and a report
  replay        re-emit a recorded event log at scaled speed, optionally
                behind a fresh HTTP console

Exit codes: 0 the run passed, 1 a check or expectation failed at runtime,
2 the configuration (flags or files) was unusable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .control_centre import ControlCentre
from .eventlog import EventLog, LogCorruptError, read_log
from .links import TcpVehicleLink
from .protocol import WireMessage
from .runner import ScriptError, SimVehicle, load_script, run_scenario
from .servers import (
    DEFAULT_HTTP_PORT,
    DEFAULT_TCP_PORT,
    HttpServerThread,
    VehicleTcpServer,
    build_http_app,
)
from .sim.scenario import ScenarioError, SimSettings, bundled_path, load_scenario

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


def _resolve_file(value: str, kind: str) -> Path:
    """A path, or the name of a bundled scenario/script."""
    path = Path(value)
    if path.exists():
        return path
    if os.sep not in value and not value.endswith(".json"):
        bundled = bundled_path(value)
        if bundled.exists():
            return bundled
    raise ConfigError(f"{kind} not found: {value}")


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


# ----------------------------------------------------------------- scenario


def cmd_scenario_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(_resolve_file(args.scenario, "scenario"))
    script = None
    if args.script:
        script = load_script(_resolve_file(args.script, "script"))
    report = run_scenario(
        scenario, script, args.log, seed=args.seed, max_sim_ms=args.max_sim_ms
    )
    text = json.dumps(report.to_dict(), indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------- ccc


def cmd_ccc_serve(args: argparse.Namespace) -> int:
    log_dir = Path(args.log_dir or os.environ.get("CCC_LOG_DIR") or "ccc-logs")
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / time.strftime("ccc-%Y%m%d-%H%M%S.ndjson")

    log = EventLog(log_path, _wall_clock_ms)
    centre = ControlCentre(log, _wall_clock_ms)
    tcp = VehicleTcpServer(centre, host=args.host, port=args.tcp_port)
    frontend = Path(args.frontend_dir) if args.frontend_dir else None
    if frontend is not None and not frontend.is_dir():
        raise ConfigError(f"frontend dir not found: {frontend}")
    http = HttpServerThread(build_http_app(centre, frontend_dir=frontend),
                            host=args.host, port=args.http_port)
    tcp.start()
    http.start()
    print(f"control centre up tcp={tcp.port} http={http.port} log={log_path}", flush=True)
    try:
        while True:
            time.sleep(0.2)
            centre.poll_timeouts()
    except KeyboardInterrupt:
        pass
    finally:
        tcp.stop()
        http.stop()
        log.close()
    return EXIT_PASS


# ---------------------------------------------------------------------- sim


def cmd_sim_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(_resolve_file(args.scenario, "scenario"))
    if args.vehicle_id:
        scenario.vehicle_id = args.vehicle_id
    if args.tick_ms:
        scenario.sim = SimSettings(tick_ms=args.tick_ms, lidar=scenario.sim.lidar)

    host, _, port_text = args.ccc_addr.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"ccc-addr must be host:port, got {args.ccc_addr!r}") from None

    veh = SimVehicle(scenario)
    sim_now = 0
    register = WireMessage("Register", scenario.vehicle_id, 1, sim_now, veh.register_payload())
    try:
        link = TcpVehicleLink(host or "127.0.0.1", port, register)
    except OSError as exc:
        raise ConfigError(f"cannot reach control centre at {args.ccc_addr}: {exc}") from None

    record = EventLog(args.record, lambda: sim_now) if args.record else None
    if record is not None:
        record.append("from_vehicle", register)
    seq = 1  # the Register the link already sent

    def send(type_: str, payload: dict) -> None:
        nonlocal seq
        seq += 1
        msg = WireMessage(type_, scenario.vehicle_id, seq, sim_now, payload)
        link.send(msg)
        if record is not None:
            record.append("from_vehicle", msg)

    tick_s = scenario.sim.tick_ms / 1000.0
    next_deadline = time.monotonic()
    code = EXIT_PASS
    try:
        while args.max_sim_ms is None or sim_now <= args.max_sim_ms:
            if not link.alive:
                print("connection to control centre lost", file=sys.stderr)
                code = EXIT_FAIL
                break
            for msg in link.drain_inbox():
                if record is not None:
                    record.append("to_vehicle", msg)
                veh.cage.handle_ccc_message(msg)
            result, outbound = veh.tick(sim_now)
            for type_, payload in outbound:
                send(type_, payload)
            veh.drive(result)
            sim_now += scenario.sim.tick_ms
            if veh.mission_settled:
                break
            if args.realtime:
                next_deadline += tick_s
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
    except KeyboardInterrupt:
        pass
    finally:
        link.flush()
        link.close()
        if record is not None:
            record.close()
    return code


# ------------------------------------------------------------------- replay


def cmd_replay(args: argparse.Namespace) -> int:
    if args.speed <= 0:
        raise ConfigError("speed must be > 0")
    log_path = Path(args.log)
    if not log_path.exists():
        raise ConfigError(f"log not found: {log_path}")

    centre = None
    http = None
    if args.serve:
        # run the recorded session through a throwaway centre so the fleet
        # endpoints and the stream show the replayed state
        scratch = log_path.with_suffix(".replay.ndjson")
        scratch.unlink(missing_ok=True)
        replay_now = 0

        def replay_clock() -> int:
            return replay_now

        centre = ControlCentre(EventLog(scratch, replay_clock), replay_clock)
        http = HttpServerThread(build_http_app(centre), host=args.host, port=args.http_port)
        http.start()
        print(f"replay console up http={http.port}", flush=True)

    emitted = 0
    prev_time = None
    try:
        for entry in read_log(log_path):
            if prev_time is not None and entry.wall_time > prev_time:
                time.sleep((entry.wall_time - prev_time) / 1000.0 / args.speed)
            prev_time = entry.wall_time
            if centre is not None:
                replay_now = entry.wall_time
                if entry.direction == "from_vehicle":
                    centre.ingest(entry.message)
                else:
                    centre.republish(entry)
            else:
                print(json.dumps(entry.to_dict()))
            emitted += 1
    except LogCorruptError as exc:
        print(f"replay halted: {exc}", file=sys.stderr)
        if http is not None:
            http.stop()
        return EXIT_FAIL

    if http is not None:
        print(f"replayed {emitted} entries; serving until interrupted", flush=True)
        try:
            while True:
                time.sleep(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            http.stop()
    return EXIT_PASS


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safecage",
        description="Simulated delivery vehicle with an onboard safety cage "
        "and its remote control centre.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="vehicle-side process")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser(
        "run", help="run one simulated vehicle against a control centre"
    )
    sim_run.add_argument("--scenario", required=True,
                         help="scenario file or bundled scenario name")
    sim_run.add_argument("--vehicle-id", help="override the scenario's vehicle id")
    sim_run.add_argument("--ccc-addr", default=f"127.0.0.1:{DEFAULT_TCP_PORT}",
                         help="control centre TCP address (host:port)")
    sim_run.add_argument("--tick-ms", type=int, help="override the tick period")
    sim_run.add_argument("--realtime", action="store_true",
                         help="pace ticks against the wall clock")
    sim_run.add_argument("--seed", type=int, default=0,
                         help="random seed (live vehicle runs are deterministic)")
    sim_run.add_argument("--record", help="write the vehicle's message log here")
    sim_run.add_argument("--max-sim-ms", type=int, default=None,
                         help="stop after this much simulated time")
    sim_run.set_defaults(func=cmd_sim_run)

    ccc = sub.add_parser("ccc", help="control centre process")
    ccc_sub = ccc.add_subparsers(dest="ccc_command", required=True)
    serve = ccc_sub.add_parser("serve", help="serve vehicles and operator consoles")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--tcp-port", type=int, default=DEFAULT_TCP_PORT,
                       help="vehicle listener port (0 picks a free one)")
    serve.add_argument("--http-port", type=int, default=DEFAULT_HTTP_PORT,
                       help="operator API port (0 picks a free one)")
    serve.add_argument("--log-dir",
                       help="event log directory (default $CCC_LOG_DIR or ./ccc-logs)")
    serve.add_argument("--frontend-dir",
                       help="serve a built operator console from this directory")
    serve.set_defaults(func=cmd_ccc_serve)

    scenario = sub.add_parser("scenario", help="headless closed-loop runs")
    scen_sub = scenario.add_subparsers(dest="scenario_command", required=True)
    scen_run = scen_sub.add_parser("run", help="run a scenario with a scripted operator")
    scen_run.add_argument("--scenario", required=True,
                          help="scenario file or bundled scenario name")
    scen_run.add_argument("--script",
                          help="operator script file or bundled script name")
    scen_run.add_argument("--log", default="run.ndjson", help="event log output path")
    scen_run.add_argument("--report", help="also write the JSON report here")
    scen_run.add_argument("--seed", type=int, default=0)
    scen_run.add_argument("--max-sim-ms", type=int, default=120_000)
    scen_run.set_defaults(func=cmd_scenario_run)

    replay = sub.add_parser("replay", help="re-emit a recorded event log")
    replay.add_argument("--log", required=True, help="event log to replay")
    replay.add_argument("--speed", type=float, default=1.0,
                        help="time scale (2 = twice as fast)")
    replay.add_argument("--serve", action="store_true",
                        help="replay into a fresh operator console instead of stdout")
    replay.add_argument("--host", default="0.0.0.0")
    replay.add_argument("--http-port", type=int, default=DEFAULT_HTTP_PORT)
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, ScriptError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader went away (replay piped into head); exit quietly
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
