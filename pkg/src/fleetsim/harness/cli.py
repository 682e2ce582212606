"""Command-line front end: ``run``, ``validate`` and ``replay``.

Exit status is 0 on success, 1 for configuration errors and 2 for failures
while running.  ``FLEETSIM_OUT`` and ``FLEETSIM_TELEMETRY_PORT`` supply
defaults for ``--out`` and ``--telemetry-port``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Sequence

from .config import PRESETS, ConfigError, ScenarioConfig, load_config
from .experiment import run_experiment
from .telemetry import FrameRecorder, PortInUse, TelemetryServer, read_frames, replay

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fleetsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", metavar="PATH", help="TOML scenario file")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario size")
        sp.add_argument("--runs", type=int, metavar="N")
        sp.add_argument("--seed", type=int, metavar="S")
        sp.add_argument("--duration", type=float, metavar="SECS")
        sp.add_argument("--mode", choices=("fast", "real-time"))
        sp.add_argument("--collision", choices=("on", "off"))
        sp.add_argument("--offset-mode", choices=("random", "zero"))
        sp.add_argument("--interaction-timeout", type=float, metavar="SECS")

    run = sub.add_parser("run", help="simulate a scenario and write CSV metrics")
    scenario_args(run)
    run.add_argument("--out", metavar="DIR", default=os.environ.get("FLEETSIM_OUT"))
    run.add_argument(
        "--telemetry-port", type=int, metavar="P",
        default=int(os.environ["FLEETSIM_TELEMETRY_PORT"]) if os.environ.get("FLEETSIM_TELEMETRY_PORT") else None,
    )
    run.add_argument("--record", metavar="PATH", help="save the first run's telemetry frames as JSON lines")

    validate = sub.add_parser("validate", help="check a configuration without running it")
    scenario_args(validate)

    rp = sub.add_parser("replay", help="re-emit telemetry frames saved with run --record")
    rp.add_argument("frames", metavar="PATH")
    rp.add_argument(
        "--telemetry-port", type=int, metavar="P",
        default=int(os.environ["FLEETSIM_TELEMETRY_PORT"]) if os.environ.get("FLEETSIM_TELEMETRY_PORT") else None,
        help="serve frames over WebSocket instead of printing them",
    )
    rp.add_argument("--rate", type=float, default=None, help="simulated seconds per wall second")
    rp.add_argument("--wait-client", type=float, default=0.0, metavar="SECS",
                    help="wait this long for a client before replaying")
    return p


def _config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.preset:
            sensors, uavs = PRESETS[args.preset]
            cfg = replace(cfg, sensor_count=sensors, uav_count=uavs)
    else:
        cfg = ScenarioConfig.preset(args.preset or "small")
    overrides = {}
    for name in ("runs", "seed", "duration", "mode"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    if args.collision is not None:
        cfg = replace(cfg, medium=replace(cfg.medium, collision_model=args.collision == "on"))
    zz = {}
    if args.offset_mode is not None:
        zz["offset_mode"] = args.offset_mode
    if args.interaction_timeout is not None:
        zz["interaction_timeout"] = args.interaction_timeout
    if zz:
        cfg = replace(cfg, zigzag=replace(cfg.zigzag, **zz))
    return cfg.validate()


def _run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    sinks = []
    server = recorder = None
    try:
        if args.telemetry_port is not None:
            server = TelemetryServer(port=args.telemetry_port).start()
            print(f"telemetry: ws://{server.host}:{server.port}", file=sys.stderr)
            sinks.append(server.publish)
        if args.record:
            recorder = FrameRecorder(args.record)
            sinks.append(recorder)
        result = run_experiment(cfg, out_dir=args.out, frame_sinks=sinks)
    finally:
        if recorder is not None:
            recorder.close()
        if server is not None:
            server.drain(timeout=2.0)
            server.close()
    finals = [s.final_collected for s in result.runs]
    print(
        f"runs={len(result.runs)} seed={cfg.seed} duration={cfg.duration:g}s "
        f"final_gs_collected={result.average[-1].gs_collected:g} "
        f"per_run={finals} wall_clock={result.wall_clock:.3f}s"
    )
    if args.out:
        print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def _validate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    print(f"ok: {cfg.sensor_count} sensors, {cfg.uav_count} UAVs, {cfg.duration:g}s x {cfg.runs} runs")
    return EXIT_OK


def _replay(args: argparse.Namespace) -> int:
    frames = read_frames(args.frames)
    if args.telemetry_port is None:
        import json

        for frame in frames:
            print(json.dumps(frame))
        return EXIT_OK
    with TelemetryServer(port=args.telemetry_port) as server:
        print(f"telemetry: ws://{server.host}:{server.port}", file=sys.stderr)
        if args.wait_client:
            server.wait_for_clients(1, args.wait_client)
        n = replay(frames, server, args.rate)
        server.drain()
    print(f"replayed {n} frames", file=sys.stderr)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("FLEETSIM_LOG", "WARNING"), stream=sys.stderr)
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    handlers = {"run": _run, "validate": _validate, "replay": _replay}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PortInUse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
