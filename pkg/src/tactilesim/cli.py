"""Command-line entry point.

Subcommands: simulate, optimize, replay, serve, power, export. Exit codes
are a stable contract: 0 success, 1 validation failure, 2 I/O failure,
3 runtime failure. Every batch subcommand is deterministic given its
arguments and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import optimizer, power
from .errors import (
    CalibrationError,
    ConfigError,
    GeometryError,
    OptimizationError,
    RecordingError,
    TactileError,
)
from .receiver import SessionRecorder, replay as replay_frames
from .scenarios import builtin_scenario_names, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tactilesim",
        description="Simulate, optimize, record, replay, and serve wireless "
        "tactile sensing telemetry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario, write recordings and stats")
    sim.add_argument(
        "--scenario",
        required=True,
        help=f"bundled name ({', '.join(builtin_scenario_names())}) or a JSON file path",
    )
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument(
        "--duration-us", type=int, default=None, help="override the scenario horizon"
    )
    sim.add_argument(
        "--no-frame-trace",
        action="store_true",
        help="omit per-frame metadata from trace.json",
    )

    opt = sub.add_parser("optimize", help="grid search (p, d) against a recording")
    opt.add_argument("--recording", required=True)
    opt.add_argument("--p-min", type=int, default=1)
    opt.add_argument("--p-max", type=int, default=50)
    opt.add_argument("--d-min", type=int, default=0)
    opt.add_argument("--d-max", type=int, default=100)
    opt.add_argument("--alpha", type=float, default=0.5)
    opt.add_argument("--csv", help="write the surface as CSV")
    opt.add_argument("--json", dest="json_out", help="write the surface as JSON")

    rep = sub.add_parser("replay", help="print recorded frames as JSON lines")
    rep.add_argument("recording")
    rep.add_argument("--start", type=int, default=None, help="window start, us")
    rep.add_argument("--end", type=int, default=None, help="window end, us (exclusive)")
    rep.add_argument(
        "--speed",
        default="batch",
        help="playback speed factor, or 'batch' for no pacing (default)",
    )

    srv = sub.add_parser("serve", help="HTTP/WebSocket hub for the browser UI")
    srv.add_argument("--config", required=True, help="device config JSON (wrapper form)")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--replay", help="recording to serve through /replay/control")
    srv.add_argument("--replay-speed", type=float, default=1.0)
    srv.add_argument("--stream-port", type=int, default=None, help="TCP ingest port")
    srv.add_argument("--datagram-port", type=int, default=None, help="UDP ingest port")
    srv.add_argument("--record-dir", help="record ingested frames per device here")
    srv.add_argument("--static-dir", help="serve this directory at / (the built UI)")

    pow_ = sub.add_parser("power", help="battery lifetime table for a power profile")
    group = pow_.add_mutually_exclusive_group()
    group.add_argument("--profile", help="power profile JSON path")
    group.add_argument(
        "--protocol", default="ble", help="bundled profile name (wifi or ble)"
    )

    exp = sub.add_parser("export", help="convert a recording to CSV or JSON")
    exp.add_argument("--recording", required=True)
    exp.add_argument("--csv")
    exp.add_argument("--json", dest="json_out")
    return parser


def _cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    if args.seed is not None:
        spec.seed = args.seed
    if args.duration_us is not None:
        if args.duration_us <= 0:
            raise ConfigError("durationUs must be > 0")
        spec.duration_us = args.duration_us
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with SessionRecorder(out_dir, spec.devices) as recorder:
        trace = spec.run(on_emitted=recorder.on_frames)
    stats = trace.stats_json_dict()
    stats["scenario"] = spec.name
    (out_dir / "stats.json").write_text(json.dumps(stats, sort_keys=True, indent=2) + "\n")
    (out_dir / "trace.json").write_text(
        trace.to_json(include_frames=not args.no_frame_trace) + "\n"
    )
    for sender in trace.senders:
        print(
            f"device {sender.device_id}: {sender.fps:.3f} fps, "
            f"{sender.loss_pct:.3f}% loss, {sender.frames_reconstructed} reconstructed"
        )
    print(f"wrote {out_dir / 'stats.json'}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    if args.p_min > args.p_max or args.d_min > args.d_max:
        raise ConfigError("empty parameter range")
    if args.p_min < 1 or args.d_min < 0:
        raise ConfigError("need p >= 1 and d >= 0")
    surface = optimizer.grid_search_recording(
        args.recording,
        list(range(args.p_min, args.p_max + 1)),
        list(range(args.d_min, args.d_max + 1)),
        args.alpha,
    )
    for path in (args.csv, args.json_out):
        if path:
            optimizer.export_surface(surface, path)
            print(f"wrote {path}")
    best = surface.cell(*surface.argmin)
    print(
        f"argmin p={best['p']} d={best['d']} E={best['E']:.6f} "
        f"r={best['r']:.6f} objective={best['objective']:.6f}"
    )
    return EXIT_OK


def _cmd_replay(args) -> int:
    if args.speed in ("batch", "inf"):
        speed = math.inf
    else:
        try:
            speed = float(args.speed)
        except ValueError:
            raise ConfigError(f"speed must be a number or 'batch', got {args.speed!r}")
    for frame in replay_frames(args.recording, args.start, args.end, speed):
        print(
            json.dumps(
                {
                    "deviceId": frame.device_id,
                    "packetId": frame.packet_id,
                    "timestampUs": frame.timestamp_us,
                    "reconstructed": frame.reconstructed,
                    "values": [int(v) for v in frame.values],
                },
                sort_keys=True,
            )
        )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import ReplayController, TelemetryHub, create_app, load_hub_config, start_listeners

    devices, layouts = load_hub_config(args.config)
    recorder = SessionRecorder(args.record_dir, devices) if args.record_dir else None
    hub = TelemetryHub(devices, layouts, config_path=args.config, recorder=recorder)
    controller = (
        ReplayController(hub, args.replay, speed=args.replay_speed) if args.replay else None
    )
    listeners = start_listeners(hub, args.stream_port, args.datagram_port)
    app = create_app(hub, controller, static_dir=args.static_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        for listener in listeners:
            listener.close()
        if controller is not None:
            controller.pause()
        hub.close()
    return EXIT_OK


def _cmd_power(args) -> int:
    if args.profile:
        profile = power.load_power_profile(args.profile)
    else:
        profile = power.builtin_power_profile(args.protocol)
    print(
        f"profile {profile.protocol}: idle {profile.i_idle_ma:.2f} mA, "
        f"send delta {profile.i_send_delta_ma:.2f} mA, "
        f"battery {profile.battery_mah:.0f} mAh"
    )
    print(f"{'tA':>6} {'avg mA':>10} {'lifetime h':>12} {'extension %':>12}")
    for row in power.lifetime_table(profile):
        print(
            f"{row['tA']:>6.2f} {row['avgCurrentMa']:>10.2f} "
            f"{row['lifetimeHours']:>12.2f} {row['extensionPct']:>12.2f}"
        )
    return EXIT_OK


def _cmd_export(args) -> int:
    from .recording import export_csv, export_json

    if not args.csv and not args.json_out:
        raise ConfigError("need --csv and/or --json destination")
    if args.csv:
        count = export_csv(args.recording, args.csv)
        print(f"wrote {count} frames to {args.csv}")
    if args.json_out:
        count = export_json(args.recording, args.json_out)
        print(f"wrote {count} frames to {args.json_out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "replay": _cmd_replay,
    "serve": _cmd_serve,
    "power": _cmd_power,
    "export": _cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream consumer (head, less) closed the pipe; not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (ConfigError, GeometryError, OptimizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, RecordingError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TactileError, CalibrationError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
