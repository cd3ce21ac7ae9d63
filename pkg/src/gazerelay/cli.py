"""Command-line entry points.

    gazerelay serve --port 8765 --tick-ms 16 --capacity 12 --record log.ndjson
    gazerelay sim run scenario.json --report report.json
    gazerelay replay log.ndjson --viewer u1 --mode dir
    gazerelay metrics log.ndjson --attention --mutual
    gazerelay record ws://127.0.0.1:8765 --session demo --out log.ndjson
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys

from . import metrics as metrics_mod
from . import protocol
from .frames import frame_to_dict, parse_mode
from .recording import read_log, replay
from .session import ServerConfig
from .sim import load_scenario, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazerelay",
        description="Gaze-aware conferencing relay: server, simulator, "
                    "replay and metrics tools.",
    )
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the relay server")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--tick-ms", type=int,
                         default=protocol.TICK_MS_DEFAULT)
    serve_p.add_argument("--capacity", type=int, default=12)
    serve_p.add_argument("--mode", default="directional",
                         help="layout mode for observed frames "
                              "(baseline|directional|perspective)")
    serve_p.add_argument("--record", metavar="PATH",
                         help="write an event log per session")

    sim_p = sub.add_parser("sim", help="deterministic session simulation")
    sim_sub = sim_p.add_subparsers(dest="sim_command", required=True)
    run_p = sim_sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("scenario", help="scenario JSON path")
    run_p.add_argument("--report", metavar="PATH", help="write report JSON")
    run_p.add_argument("--record", metavar="PATH",
                       help="record the simulated session")
    run_p.add_argument("--observe", type=int, metavar="INDEX",
                       help="host-observe this member and keep snapshots")

    replay_p = sub.add_parser("replay",
                              help="re-derive frames from an event log")
    replay_p.add_argument("log")
    replay_p.add_argument("--viewer", required=True,
                          help="member id whose frames to produce")
    replay_p.add_argument("--mode", default=None,
                          help="override the recorded layout mode")
    replay_p.add_argument("--out", metavar="PATH",
                          help="write NDJSON frames here instead of stdout")

    metrics_p = sub.add_parser("metrics",
                               help="conversation metrics from an event log")
    metrics_p.add_argument("log")
    metrics_p.add_argument("--attention", action="store_true",
                           help="who-looked-at-whom time fractions (CSV)")
    metrics_p.add_argument("--mutual", action="store_true",
                           help="mutual-gaze episodes (CSV)")
    metrics_p.add_argument("--out-dir", metavar="DIR",
                           help="write CSV files here instead of stdout")

    record_p = sub.add_parser("record",
                              help="attach to a server and log one session")
    record_p.add_argument("url", help="ws://host:port")
    record_p.add_argument("--session", default="default")
    record_p.add_argument("--out", required=True, metavar="PATH")
    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import SessionServer  # import lazily: needs event loop deps

    config = ServerConfig(
        tick_ms=args.tick_ms,
        capacity=args.capacity,
        mode=parse_mode(args.mode),
    )
    server = SessionServer(config, record_path=args.record)
    try:
        asyncio.run(server.run_forever(args.host, args.port))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_sim_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario, record_path=args.record,
                          observe=args.observe)
    report = result.report
    print(f"members={report.members} ticks={report.ticks} "
          f"sigma={report.noise_sigma}")
    for i, acc in enumerate(report.accuracy):
        print(f"  member {i}: accuracy {acc:.4f} "
              f"({report.scored_ticks[i]} scored ticks)")
    conv = report.convergence_max_ticks
    print(f"convergence: max {conv} ticks over {report.convergence_samples} "
          f"changes (converged={report.converged})")
    print(f"filter lag: {report.filter_lag_ms:.3f} ms")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        print(f"report written to {args.report}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    header, records = read_log(args.log)
    mode = parse_mode(args.mode) if args.mode else None
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    count = 0
    try:
        for rf in replay(header, records, args.viewer, mode):
            out.write(json.dumps(
                {"tick": rf.tick, "frame": frame_to_dict(rf.frame)},
                separators=(",", ":")) + "\n")
            count += 1
    finally:
        if args.out:
            out.close()
    print(f"{count} frames for viewer {args.viewer}", file=sys.stderr)
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    _, records = read_log(args.log)
    want_attention = args.attention or not args.mutual
    want_mutual = args.mutual or not args.attention
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    if want_attention:
        csv = metrics_mod.attention_matrix(records).to_csv()
        if args.out_dir:
            path = os.path.join(args.out_dir, "attention.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(csv)
            print(f"wrote {path}")
        else:
            sys.stdout.write(csv)
    if want_mutual:
        csv = metrics_mod.episodes_to_csv(
            metrics_mod.mutual_gaze_episodes(records))
        if args.out_dir:
            path = os.path.join(args.out_dir, "mutual.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(csv)
            print(f"wrote {path}")
        else:
            sys.stdout.write(csv)
    return 0


def _cmd_record(args: argparse.Namespace) -> int:
    from .server import record_session

    try:
        count = asyncio.run(record_session(args.url, args.session, args.out))
    except KeyboardInterrupt:
        print("recording stopped")
        return 0
    print(f"{count} records written to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "sim":
        return _cmd_sim_run(args)
    if args.command == "replay":
        return _cmd_replay(args)
    if args.command == "metrics":
        return _cmd_metrics(args)
    if args.command == "record":
        return _cmd_record(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
