"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 malformed input, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiment, formats, population
from .augment import AugmentError, PopularityDist, augment_distance, augment_rank, augment_uniform
from .basegraph import GraphError, delaunay, lattice
from .rewire import RewireAborted, RewireConfig, run_destination_sampling
from .routing import greedy_route, route_many

log = logging.getLogger("smallworld")

EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 1, 2, 3

# flags that name outputs or tune execution do not affect file contents
_UNRECORDED = {"out", "manifest", "report", "workers", "verbose", "snapshot_dir", "func", "command"}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flags(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}


def _header(args) -> str:
    return formats.header_line(args.command, _flags(args))


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fp = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None
    with fp:
        yield fp


def _open_input(path: str):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _resolve_seed(args) -> None:
    if getattr(args, "seed", None) is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)


def _read_graph(path):
    with _open_input(path) as fp:
        return formats.read_graph(fp)


def _read_shortcuts(path):
    with _open_input(path) as fp:
        return formats.read_shortcuts(fp)


# -- subcommands ---------------------------------------------------------------


def _density(args) -> population.DensityModel:
    if args.model == "uniform":
        return population.Uniform()
    if args.model == "metropolis":
        return population.Metropolis()
    if args.model == "random-zones":
        return population.RandomZones(args.k, args.gamma, args.zone_seed)
    if args.file:
        with _open_input(args.file) as fp:
            return population.Raster(population.load_raster(fp))
    if args.builtin == "country":
        return population.Raster(population.country_grid())
    raise UsageError("--model raster needs --file or --builtin country")


def cmd_gen(args):
    _resolve_seed(args)
    pts = population.sample_points(_density(args), args.n, args.seed)
    with _output(args.out) as fp:
        formats.write_points(fp, pts, _header(args))


def cmd_raster(args):
    grid = population.country_grid(args.seed, args.ncols, args.nrows)
    with _output(args.out) as fp:
        fp.write(_header(args))
        population.dump_raster(grid, fp)


def cmd_build(args):
    if args.lattice:
        g = lattice(args.lattice, cyclic=not args.open)
    elif args.points:
        with _open_input(args.points) as fp:
            pts = formats.read_points(fp)
        if len(pts) < 2:
            raise InputError("need at least 2 points to build a graph")
        g = delaunay(pts)
    else:
        raise UsageError("give a points file or --lattice")
    with _output(args.out) as fp:
        formats.write_graph(fp, g, _header(args))


def cmd_augment(args):
    _resolve_seed(args)
    g = _read_graph(args.graph)
    if args.method == "distance":
        table = augment_distance(g, args.alpha, args.out_degree, args.seed)
    elif args.method == "rank":
        table = augment_rank(g, args.out_degree, args.seed)
    else:
        table = augment_uniform(g, args.out_degree, args.seed)
    with _output(args.out) as fp:
        formats.write_shortcuts(fp, table, _header(args))


def _popularity(n, beta, seed, salt):
    if beta == 0:
        return PopularityDist.uniform(n)
    return PopularityDist.power_law(n, beta, np.random.SeedSequence(seed, spawn_key=(salt,)))


def cmd_rewire(args):
    _resolve_seed(args)
    g = _read_graph(args.graph)
    cfg = RewireConfig(
        p=args.p, iteration_factor=args.factor, out_degree=args.out_degree,
        step_cap=args.step_cap, rng_seed=args.seed,
        source_dist=_popularity(g.n, args.source_beta, args.seed, 1),
        target_dist=_popularity(g.n, args.beta, args.seed, 2),
    )
    header = _header(args)
    on_snapshot = None
    if args.snapshot_every:
        snap_dir = Path(args.snapshot_dir or ".")
        snap_dir.mkdir(parents=True, exist_ok=True)

        def on_snapshot(it, table):
            with open(snap_dir / f"shortcuts_{it:09d}.txt", "w", encoding="utf-8") as fp:
                formats.write_shortcuts(fp, table, header)

    table, report = run_destination_sampling(g, cfg, snapshot_every=args.snapshot_every,
                                             on_snapshot=on_snapshot)
    with _output(args.out) as fp:
        formats.write_shortcuts(fp, table, header)
    summary = {
        "tool": "smallworld", "version": __version__, "subcommand": "rewire",
        "flags": _flags(args),
        "report": {
            "iterations_run": report.iterations_run,
            "replacements_made": report.replacements_made,
            "truncated_walks": report.truncated_walks,
            "dead_ends": report.dead_ends,
            "total_walk_length": report.total_walk_length,
            "head_median_walk": report.head_median,
            "tail_median_walk": report.tail_median,
            "self_loop_fraction": table.self_loop_fraction(),
            "walk_length_trace": [round(float(v), 6) for v in report.walk_length_trace],
        },
    }
    if args.manifest:
        with _output(args.manifest) as fp:
            json.dump(summary, fp, indent=2, sort_keys=True)
            fp.write("\n")
    log.info("rewire: %d iterations, %d replacements", report.iterations_run, report.replacements_made)


def cmd_route(args):
    g = _read_graph(args.graph)
    table = _read_shortcuts(args.shortcuts) if args.shortcuts else None
    if table is not None and table.n != g.n:
        raise InputError(f"shortcut file has {table.n} vertices, graph has {g.n}")
    with _output(args.out) as fp:
        if args.queries:
            _resolve_seed(args)
            rng = np.random.default_rng(args.seed)
            pop = _popularity(g.n, args.beta, args.seed, 2)
            src, dst = experiment.draw_queries(g.n, pop, args.queries, rng)
            hops, outcomes = route_many(g, table, src, dst, args.step_cap)
            fp.write(_header(args))
            fp.write(f"queries {len(hops)}\nmean_hops {float(hops.mean())!r}\n"
                     f"median_hops {float(np.median(hops))!r}\n"
                     f"success_rate {float((outcomes == 0).mean())!r}\n")
            return
        if args.source is None or args.target is None:
            raise UsageError("give --source and --target, or --queries")
        for v in (args.source, args.target):
            if not 0 <= v < g.n:
                raise UsageError(f"vertex {v} out of range 0..{g.n - 1}")
        r = greedy_route(g, table, args.source, args.target, args.step_cap)
        fp.write(_header(args))
        fp.write(f"outcome {r.outcome.name.lower()}\nhops {r.hops}\n")
        fp.write("path " + " ".join(map(str, r.path)) + "\n")


def cmd_experiment(args):
    with _open_input(args.spec) as fp:
        try:
            raw = json.load(fp)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.spec}: {exc}") from None
    try:
        spec = experiment.ExperimentSpec.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.spec}: invalid experiment spec: {exc}") from None
    if args.seed is not None:
        spec = dataclasses.replace(spec, base_seed=args.seed)
    spec = dataclasses.replace(spec, model=spec.model.pinned())
    result = experiment.run_scaling(spec, workers=args.workers)
    with _output(args.out) as fp:
        fp.write(result.to_csv())
    if args.manifest:
        with _output(args.manifest) as fp:
            json.dump(experiment.manifest(result), fp, indent=2, sort_keys=True)
            fp.write("\n")


def cmd_degrees(args):
    table = _read_shortcuts(args.shortcuts)
    g = _read_graph(args.graph) if args.graph else None
    hist = experiment.degree_histogram(table, g)
    with _output(args.out) as fp:
        fp.write(_header(args))
        fp.write(hist.to_csv())


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smallworld", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"smallworld {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("-o", "--out", help="output file (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, help="RNG seed (random and printed if omitted)")

    sp = sub.add_parser("gen", help="sample a point set from a density model")
    sp.add_argument("--model", choices=["uniform", "metropolis", "random-zones", "raster"], default="uniform")
    sp.add_argument("--n", type=int, required=True, help="expected number of points")
    sp.add_argument("--k", type=int, default=100)
    sp.add_argument("--gamma", type=float, default=1.2)
    sp.add_argument("--zone-seed", type=int, default=0)
    sp.add_argument("--file", help="density raster for --model raster")
    sp.add_argument("--builtin", choices=["country"], help="bundled stand-in raster")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("raster", help="write the synthetic country density raster")
    sp.add_argument("--ncols", type=int, default=60)
    sp.add_argument("--nrows", type=int, default=140)
    sp.add_argument("--seed", type=int, default=2011)
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_raster)

    sp = sub.add_parser("build", help="Delaunay graph of a point file, or a lattice")
    sp.add_argument("points", nargs="?")
    sp.add_argument("--lattice", type=int, nargs="+", metavar="SIDE")
    sp.add_argument("--open", action="store_true", help="non-cyclic lattice")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("augment", help="add static shortcuts to a graph")
    sp.add_argument("graph")
    sp.add_argument("--method", choices=["distance", "rank", "uniform"], required=True)
    sp.add_argument("--alpha", type=float, default=2.0)
    sp.add_argument("--out-degree", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("rewire", help="run destination sampling from self-loops")
    sp.add_argument("graph")
    sp.add_argument("--p", type=float, default=0.1)
    sp.add_argument("--factor", type=float, default=10.0, help="iterations = factor * n")
    sp.add_argument("--beta", type=float, default=0.0, help="target popularity exponent")
    sp.add_argument("--source-beta", type=float, default=0.0)
    sp.add_argument("--out-degree", type=int, default=1)
    sp.add_argument("--step-cap", type=int)
    sp.add_argument("--snapshot-every", type=int)
    sp.add_argument("--snapshot-dir")
    sp.add_argument("--manifest", help="JSON file for flags and the run report")
    common(sp)
    sp.set_defaults(func=cmd_rewire)

    sp = sub.add_parser("route", help="greedy route(s) on a graph with shortcuts")
    sp.add_argument("graph")
    sp.add_argument("--shortcuts")
    sp.add_argument("--source", type=int)
    sp.add_argument("--target", type=int)
    sp.add_argument("--queries", type=int, help="route this many random queries instead")
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--step-cap", type=int)
    common(sp)
    sp.set_defaults(func=cmd_route)

    sp = sub.add_parser("experiment", help="run an experiment spec (JSON) or replay a manifest")
    sp.add_argument("spec")
    sp.add_argument("--manifest")
    sp.add_argument("--workers", type=int, default=None, help="parallel cells (default: all cores)")
    common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("degrees", help="shortcut in-degree histogram as CSV")
    sp.add_argument("shortcuts")
    sp.add_argument("--graph")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_degrees)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 0) is None:
        args.workers = os.cpu_count() or 1
    try:
        args.func(args)
    except UsageError as exc:
        print(f"smallworld: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, formats.FormatError, population.RasterFormatError) as exc:
        print(f"smallworld: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RewireAborted, experiment.ExperimentError, GraphError, AugmentError,
            population.PopulationError, ValueError) as exc:
        print(f"smallworld: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
