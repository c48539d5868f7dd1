"""Command-line front end: ``run``, ``sweep`` and ``make-map``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .citygen import make_city, street_attraction
from .engine import SimulationConfig, load_world, simulate
from .errors import EpidemigridError
from .mapgrid import write_pgm
from .sweep import load_sweep_spec, parse_rt, run_sweep

SEED_ENV = "EPIDEMIGRID_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise EpidemigridError(f"{SEED_ENV} must be an integer, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epidemigrid", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a single simulation")
    run.add_argument("--map", dest="map_path", help="city map (PGM, P2 or P5)")
    run.add_argument("--attraction", dest="attraction_path", help="attraction-level PGM sidecar")
    run.add_argument("--threshold", type=int, default=128)
    run.add_argument("--invert", action="store_true", help="treat light pixels as road")
    run.add_argument("--infected", type=int, default=20)
    run.add_argument("--susceptible", type=int, default=80)
    run.add_argument("--packets", type=int, default=3)
    run.add_argument("--rt", default="1:5", help="response-time interval MIN:MAX")
    run.add_argument("--radius", type=float, default=3.0)
    run.add_argument("--speed", type=int, default=1, help="graph edges travelled per step")
    run.add_argument("--band", type=float, default=0.05, help="boundary band fraction")
    run.add_argument("--max-steps", type=int, default=5000)
    run.add_argument("--seed", type=int, default=None, help=f"run seed (default: ${SEED_ENV} or 0)")
    run.add_argument("--reset-on-disconnect", action="store_true")
    run.add_argument("--static", action="store_true", help="disable movement (testing aid)")
    run.add_argument("--out", default="timeseries.csv")
    run.add_argument("--events", help="write the infection/repair event log here")
    run.add_argument("--trace", help="write per-step device positions here")
    run.add_argument("--dump-graph", help="write the road graph edge list here")

    sweep = sub.add_parser("sweep", help="run a parameter sweep with replications")
    sweep.add_argument("--spec", required=True)
    sweep.add_argument("--out-dir", required=True)
    sweep.add_argument("--jobs", type=int, default=1)

    mk = sub.add_parser("make-map", help="generate a synthetic street-grid city")
    mk.add_argument("--out", required=True)
    mk.add_argument("--attraction-out", help="also write a street attraction sidecar")
    mk.add_argument("--height", type=int, default=200)
    mk.add_argument("--width", type=int, default=200)
    mk.add_argument("--hot-every", type=int, default=3)
    mk.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args) -> int:
    if not args.map_path:
        raise EpidemigridError("--map is required")
    rt_min, rt_max = parse_rt(args.rt)
    cfg = SimulationConfig(
        map_path=args.map_path,
        attraction_path=args.attraction_path,
        threshold=args.threshold,
        invert=args.invert,
        n_infected=args.infected,
        n_susceptible=args.susceptible,
        packets=args.packets,
        rt_min=rt_min,
        rt_max=rt_max,
        radius=args.radius,
        speed=args.speed,
        band_fraction=args.band,
        max_steps=args.max_steps,
        seed=_default_seed() if args.seed is None else args.seed,
        reset_on_disconnect=args.reset_on_disconnect,
        static_devices=args.static,
    )
    cfg.validate()
    world = load_world(cfg)
    if args.dump_graph:
        world.graph.write_edge_list(args.dump_graph)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("step,device_id,row,col\n")
            result = simulate(cfg, world, trace_log=fh)
    else:
        result = simulate(cfg, world)
    result.write_csv(args.out)
    if args.events:
        with open(args.events, "w") as fh:
            fh.write(result.event_log_text())
    print(f"{result.outcome.summary()} steps={len(result.timeseries) - 1} seed={cfg.seed}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    rows = run_sweep(spec, args.out_dir, jobs=args.jobs)
    failures = sum(int(r["failures"]) for r in rows)
    print(f"{len(rows)} configurations, {len(spec.runs())} runs, {failures} failed; summary in {args.out_dir}/summary.csv")
    return 0


def _cmd_make_map(args) -> int:
    raster = make_city(args.height, args.width, seed=args.seed)
    write_pgm(args.out, raster)
    if args.attraction_out:
        write_pgm(args.attraction_out, street_attraction(raster, args.hot_every))
    print(f"wrote {args.out} ({args.width}x{args.height}, {(raster == 0).mean():.1%} road)")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "make-map": _cmd_make_map}[args.command]
    try:
        return handler(args)
    except (EpidemigridError, OSError) as exc:
        print(f"epidemigrid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
