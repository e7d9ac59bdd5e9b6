"""uavaq command line: sizing reports, headless runs, replay and serving.

Subcommands:
    size      sizing report for a profile (text + CSV + figures)
    simulate  run a mission headlessly on a virtual clock, write artifacts
    replay    recompute a run summary from its event log
    serve     run relay + ground station (+ optional demo vehicle) for the console
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .flightdyn import ConfigError
from .linksim import LinkConfig
from .mission import MissionError
from .profiles import load_profile
from .simrun import ReplayError, RunSpec, load_mission, replay, run

ENV_LISTEN = "UAVAQ_LISTEN"
ENV_RELAY = "UAVAQ_RELAY"
ENV_STORE = "UAVAQ_STORE_PATH"
ENV_STATIC = "UAVAQ_STATIC"
ENV_TOKEN = "UAVAQ_TOKEN"


def _hostport(text: str, default_port: int) -> tuple[str, int]:
    if ":" in text:
        host, port = text.rsplit(":", 1)
        return host or "127.0.0.1", int(port)
    return text, default_port


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavaq",
        description="Fixed-wing UAV air-quality mission simulator and ground segment.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_size = sub.add_parser("size", help="sizing report for an airframe profile")
    p_size.add_argument("--profile", default="stick60-paper",
                        help="built-in profile name or path to a profile JSON")
    p_size.add_argument("--csv", type=Path, default=None,
                        help="also write the report as CSV to this path")
    p_size.add_argument("--figures", type=Path, default=None, metavar="DIR",
                        help="render report figures (PNG) into DIR")

    p_sim = sub.add_parser("simulate", help="headless deterministic mission run")
    p_sim.add_argument("--mission", default=None,
                       help="mission JSON path (default: built-in demo mission)")
    p_sim.add_argument("--profile", default="stick60-paper")
    p_sim.add_argument("--duration", type=float, default=300.0, metavar="S")
    p_sim.add_argument("--seed", type=int, default=42)
    p_sim.add_argument("--dt", type=float, default=0.1)
    p_sim.add_argument("--telemetry-period", type=float, default=1.0)
    p_sim.add_argument("--out", type=Path, required=True, metavar="DIR",
                       help="artifact directory (events.log, measurements.csv, "
                            "summary.json, figures/)")
    p_sim.add_argument("--outage", action="append", default=[], metavar="START:END",
                       help="inject a ground-link outage window (sim seconds); repeatable")
    p_sim.add_argument("--loss-rate", type=float, default=0.0)
    p_sim.add_argument("--spike-probability", type=float, default=0.01)
    p_sim.add_argument("--wind", default="0,0", metavar="E,N",
                       help="constant wind vector in m/s (east,north)")
    p_sim.add_argument("--no-figures", action="store_true")
    p_sim.add_argument("--appendix-ln", action="store_true",
                       help="bit-compatible natural-log gas curves, as the "
                            "original board source computed them")

    p_rep = sub.add_parser("replay", help="recompute a summary from an event log")
    p_rep.add_argument("--events", type=Path, required=True)

    p_srv = sub.add_parser("serve", help="run relay + ground station for the console")
    p_srv.add_argument("--listen", default=os.environ.get(ENV_LISTEN, "127.0.0.1:8080"),
                       help=f"HTTP bind address (env {ENV_LISTEN})")
    p_srv.add_argument("--relay", default=os.environ.get(ENV_RELAY, "127.0.0.1:9000"),
                       help=f"relay bind address (env {ENV_RELAY})")
    p_srv.add_argument("--store-path", default=os.environ.get(ENV_STORE, "uavaq.db"),
                       help=f"measurement database path (env {ENV_STORE})")
    p_srv.add_argument("--static", default=os.environ.get(ENV_STATIC),
                       help=f"operator console asset directory (env {ENV_STATIC})")
    p_srv.add_argument("--token", default=os.environ.get(ENV_TOKEN, "hangar"))
    p_srv.add_argument("--demo-uav", action="store_true",
                       help="also fly a simulated vehicle against the relay")
    p_srv.add_argument("--mission", default=None,
                       help="mission JSON preloaded into the demo vehicle")
    p_srv.add_argument("--time-scale", type=float, default=1.0,
                       help="demo vehicle sim seconds per wall second")
    return parser


def cmd_size(args) -> int:
    from . import report as rp
    try:
        profile = load_profile(args.profile)
        rep = rp.sizing_report(profile)
    except ConfigError as exc:
        print(f"invalid profile: {exc}", file=sys.stderr)
        return 2
    print(rp.report_text(rep))
    print()
    csv_text = rp.report_csv(rep)
    print(csv_text, end="")
    if args.csv:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(csv_text)
    if args.figures:
        args.figures.mkdir(parents=True, exist_ok=True)
        rp.fig_velocity_vs_area(profile, args.figures / "takeoff_velocity_vs_area.png")
        rp.fig_thrust_vs_speed(profile, args.figures / "thrust_vs_speed.png")
        print(f"figures written to {args.figures}", file=sys.stderr)
    return 0


def _parse_outages(specs: list[str]) -> tuple[tuple[float, float], ...]:
    out = []
    for spec in specs:
        start, _, end = spec.partition(":")
        out.append((float(start), float(end)))
    return tuple(out)


def cmd_simulate(args) -> int:
    try:
        plan = load_mission(args.mission)
        profile = load_profile(args.profile)
    except (MissionError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    wind = tuple(float(x) for x in args.wind.split(","))
    spec = RunSpec(
        plan=plan, profile=profile, duration_s=args.duration, seed=args.seed,
        dt=args.dt, telemetry_period=args.telemetry_period,
        link=LinkConfig(seed=args.seed, loss_rate=args.loss_rate,
                        spike_probability=args.spike_probability),
        outages=_parse_outages(args.outage), out_dir=args.out,
        wind_ms=(wind[0], wind[1]), figures=not args.no_figures,
        ln_compat=args.appendix_ln)
    result = run(spec)
    if result.exit_code == 2:
        print("mission rejected:", file=sys.stderr)
        for v in result.summary.get("violations", []):
            print(f"  {v['code']}: {v['message']}", file=sys.stderr)
        return 2
    print(json.dumps(result.summary, sort_keys=True, indent=2))
    if result.exit_code == 3:
        print("run ended in a crash event", file=sys.stderr)
    return result.exit_code


def cmd_replay(args) -> int:
    try:
        summary = replay(args.events)
    except ReplayError as exc:
        print(f"corrupt event log: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .groundstation import GroundStation, create_app
    from .relay import RelayServer
    from .store import MeasurementStore

    relay_host, relay_port = _hostport(args.relay, 9000)
    http_host, http_port = _hostport(args.listen, 8080)

    relay = RelayServer(host=relay_host, port=relay_port, token=args.token)
    relay_host, relay_port = relay.start()
    print(f"relay listening on {relay_host}:{relay_port}")

    store = MeasurementStore(args.store_path)
    gs = GroundStation(store, token=args.token)
    gs.connect_relay(relay_host, relay_port)

    node = None
    if args.demo_uav:
        from .profiles import load_profile as lp
        from .uavnode import NodeConfig, UavNode
        from .vehicle import VehicleSim
        plan = load_mission(args.mission)
        sim = VehicleSim(lp("stick60-paper"), plan=plan)
        node = UavNode(sim, NodeConfig(uav_id="demo-1", relay_host=relay_host,
                                       relay_port=relay_port, token=args.token,
                                       time_scale=args.time_scale))
        node.start()
        print("demo vehicle 'demo-1' connected; upload/start it from the console")

    app = create_app(gs, static_dir=args.static)
    print(f"ground station on http://{http_host}:{http_port}")
    try:
        uvicorn.run(app, host=http_host, port=http_port, log_level="warning")
    finally:
        if node is not None:
            node.stop()
        gs.stop()
        relay.stop()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"size": cmd_size, "simulate": cmd_simulate,
               "replay": cmd_replay, "serve": cmd_serve}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
