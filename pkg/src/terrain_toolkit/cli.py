"""``terrain-toolkit`` command line interface.

Exit status: 0 on success, 1 on bad input or usage, 2 when a corpus batch
finished but some entries failed.  Results go to stdout or files; diagnostics
go to stderr and are silenced by ``--quiet``.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import corpus, geomorphon, metric, raster, stats, synth
from .geomorphon import FEATURE_NAMES, GeomorphonParams

EXIT_OK, EXIT_INPUT, EXIT_BATCH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class _Ctx:
    def __init__(self, args):
        self.quiet = args.quiet
        self.threads = args.threads
        self.seed = args.seed

    def log(self, msg):
        if not self.quiet:
            print(msg, file=sys.stderr)


def _load(path, fmt=None, fill=False, ctx=None):
    field = raster.load_dem(path, fmt)
    if field.has_voids:
        if not fill:
            raise ValueError(f"{path}: {int(field.void_mask.sum())} void cells; pass --fill-voids "
                             "or run 'dem fillvoids' first")
        if ctx:
            ctx.log(f"filled {int(field.void_mask.sum())} void cells")
        field = raster.fill_voids(field)
    return field


# ------------------------------------------------------------------ dem

def cmd_dem_info(args, ctx):
    print(json.dumps(raster.describe(raster.load_dem(args.path, args.format)), indent=2))


def cmd_dem_convert(args, ctx):
    raster.save_dem(raster.load_dem(args.input, args.in_format), args.output, args.out_format)


def cmd_dem_resample(args, ctx):
    field = raster.load_dem(args.input, args.in_format)
    raster.save_dem(raster.resample(field, args.size), args.output, args.out_format)


def cmd_dem_fillvoids(args, ctx):
    field = raster.load_dem(args.input, args.in_format)
    ctx.log(f"filling {int(field.void_mask.sum())} void cells")
    raster.save_dem(raster.fill_voids(field), args.output, args.out_format)


def cmd_dem_hillshade(args, ctx):
    field = raster.load_dem(args.input, args.in_format)
    raster.write_pgm8(args.output, raster.hillshade(field, args.azimuth, args.altitude))


# ----------------------------------------------------------- geomorphon

def cmd_classify(args, ctx):
    params = GeomorphonParams(args.search, args.flat)
    field = _load(args.dem, args.format, args.fill_voids, ctx)
    gmap = geomorphon.classify_map(field, params, raster.default_threads(ctx.threads))
    hist = geomorphon.histogram(gmap)
    if args.map:
        geomorphon.save_map(gmap, args.map)
    if args.hist:
        geomorphon.save_histogram(hist, args.hist, params)
    if not (args.map or args.hist):
        for name, value in zip(FEATURE_NAMES, hist.coverage):
            print(f"{name}\t{value:.6f}")


def cmd_score(args, ctx):
    cal = metric.load_calibration(args.calibration)
    field = _load(args.dem, args.format, args.fill_voids, ctx)
    hist = geomorphon.geomorphon_histogram(field, cal.geomorphon, raster.default_threads(ctx.threads))
    print(f"{metric.score_histogram(hist, cal):.6f}")


# ---------------------------------------------------------------- synth

def _parse_param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ValueError(f"--param expects key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def cmd_synth(args, ctx):
    if args.spec:
        spec = synth.SynthSpec.from_json(args.spec)
        params = dict(spec.params)
        category, seed, size = spec.category, spec.seed, spec.size
        if args.category and args.category != category:
            raise ValueError(f"category {args.category!r} conflicts with spec {category!r}")
    else:
        if not args.category:
            raise ValueError("give a category or --spec")
        category, params = args.category, {}
        seed = ctx.seed if ctx.seed is not None else 0
        size = raster.DEFAULT_SIZE
    if args.synth_seed is not None:
        seed = args.synth_seed
    if args.size is not None:
        size = args.size
    params.update(dict(_parse_param(p) for p in args.param))
    spec = synth.SynthSpec(category, seed, size, params)
    raster.save_dem(synth.generate(spec), args.output, args.format)
    if args.emit_spec:
        with open(args.emit_spec, "w") as fh:
            json.dump(spec.to_dict(), fh, indent=2)
            fh.write("\n")
    ctx.log(f"wrote {category} seed={seed} size={size} to {args.output}")


# ---------------------------------------------------------- rank/refit

def cmd_rank(args, ctx):
    table = stats.rank_from_votes(stats.read_votes(args.votes))
    stats.write_ranks(table, args.output)
    ctx.log(f"ranked {len(table.ids)} terrains")


def cmd_refit(args, ctx):
    report = corpus.read_report(args.report)
    bounds = metric.load_calibration(args.bounds_from) if args.bounds_from else "corpus"
    cal, fit = corpus.refit_calibration(report, args.policy, args.divisor, bounds, args.name,
                                        on_rank_deficient=args.on_rank_deficient)
    metric.save_calibration(cal, args.output)
    if args.fit_json:
        with open(args.fit_json, "w") as fh:
            json.dump(fit.to_dict(), fh, indent=2)
            fh.write("\n")
    ctx.log(f"R2={fit.r_squared:.4f} std_error={fit.std_error:.4f} rank={fit.rank} n={fit.n}")


# --------------------------------------------------------------- corpus

def cmd_corpus_score(args, ctx):
    manifest = corpus.load_manifest(args.manifest)
    params = None
    if args.search is not None or args.flat is not None:
        base = GeomorphonParams()
        params = GeomorphonParams(args.search or base.search_radius_cells,
                                  base.flatness_deg if args.flat is None else args.flat)
    report = corpus.batch_score(manifest, params, args.calibration, ctx.threads,
                                args.fill_voids, args.resample)
    corpus.emit_report(report, args.output, args.format)
    for cat, s in report.category_stats().items():
        ctx.log(f"{cat}\tn={s['n']}\tmean={s['mean']:.4f}\tmedian={s['median']:.4f}\t"
                f"stdev={s['stdev']:.4f}\tmin={s['min']:.4f}\tmax={s['max']:.4f}")
    for row in report.failures:
        print(f"{row.id}: {row.error}", file=sys.stderr)
    return EXIT_BATCH if report.failures else EXIT_OK


def cmd_corpus_synth(args, ctx):
    cats = args.category or synth.CATEGORIES
    start = ctx.seed if ctx.seed is not None else 0
    manifest = corpus.write_synthetic_corpus(args.out_dir, cats, range(start, start + args.seeds),
                                             args.size, ctx.threads, args.format)
    ctx.log(f"wrote {len(manifest)} DEMs and manifest.json to {args.out_dir}")


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="terrain-toolkit", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $TERRAIN_TOOLKIT_THREADS or 1)")
    p.add_argument("--seed", type=int, default=None, help="default seed for generators")
    p.add_argument("--quiet", action="store_true", help="suppress diagnostics")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    # globals are also accepted after the subcommand
    late = _Parser(add_help=False)
    late.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    late.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    late_seed = _Parser(add_help=False, parents=[late])
    late_seed.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    dem = sub.add_parser("dem", help="DEM file utilities")
    dsub = dem.add_subparsers(dest="dem_command", required=True, parser_class=_Parser)
    fmts = list(raster.FORMATS)
    info = dsub.add_parser("info", parents=[late_seed], help="print size, cell size, voids and range")
    info.add_argument("path")
    info.add_argument("--format", choices=fmts)
    info.set_defaults(func=cmd_dem_info)

    def io(name, help_, func):
        sp = dsub.add_parser(name, parents=[late_seed], help=help_)
        sp.add_argument("input")
        sp.add_argument("output")
        sp.add_argument("--in-format", choices=fmts)
        sp.set_defaults(func=func)
        return sp

    io("convert", "convert between DEM formats", cmd_dem_convert).add_argument(
        "--out-format", choices=fmts)
    rs = io("resample", "bilinear resample to SIZE x SIZE", cmd_dem_resample)
    rs.add_argument("--size", type=int, default=raster.DEFAULT_SIZE)
    rs.add_argument("--out-format", choices=fmts)
    fv = io("fillvoids", "fill voids from the nearest valid cell", cmd_dem_fillvoids)
    fv.add_argument("--out-format", choices=fmts)
    hs = io("hillshade", "write an 8-bit PGM hillshade", cmd_dem_hillshade)
    hs.add_argument("--azimuth", type=float, default=315.0)
    hs.add_argument("--altitude", type=float, default=45.0)

    geo = sub.add_parser("geomorphon", help="landform classification")
    gsub = geo.add_subparsers(dest="geo_command", required=True, parser_class=_Parser)
    cl = gsub.add_parser("classify", parents=[late_seed], help="classify a DEM into ten landform classes")
    cl.add_argument("--dem", required=True)
    cl.add_argument("--format", choices=fmts)
    cl.add_argument("--search", type=int, default=2, help="search radius L in cells")
    cl.add_argument("--flat", type=float, default=1.0, help="flatness threshold in degrees")
    cl.add_argument("--map", help="output PGM class map (legend JSON written alongside)")
    cl.add_argument("--hist", help="output histogram JSON")
    cl.add_argument("--fill-voids", action="store_true")
    cl.set_defaults(func=cmd_classify)

    sc = sub.add_parser("score", parents=[late_seed], help="perceived realism score of one DEM")
    sc.add_argument("--dem", required=True)
    sc.add_argument("--format", choices=fmts)
    sc.add_argument("--calibration", default="ptrm-main", help="built-in name or JSON path")
    sc.add_argument("--fill-voids", action="store_true")
    sc.set_defaults(func=cmd_score)

    sy = sub.add_parser("synth", parents=[late], help="generate a synthetic terrain")
    sy.add_argument("category", nargs="?", choices=synth.CATEGORIES)
    sy.add_argument("--seed", type=int, default=None, dest="synth_seed")
    sy.add_argument("--size", type=int, default=None)
    sy.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="override a category parameter (JSON value)")
    sy.add_argument("--spec", help="SynthSpec JSON to start from")
    sy.add_argument("--emit-spec", help="write the resolved SynthSpec JSON here")
    sy.add_argument("-o", "--output", required=True)
    sy.add_argument("--format", choices=["esri_ascii", "pgm16"])
    sy.set_defaults(func=cmd_synth)

    rk = sub.add_parser("rank", parents=[late_seed], help="aggregate 2AFC votes into normalized scores")
    rk.add_argument("--votes", required=True)
    rk.add_argument("-o", "--output", required=True)
    rk.set_defaults(func=cmd_rank)

    rf = sub.add_parser("refit", parents=[late_seed], help="fit a calibration to measured scores in a report")
    rf.add_argument("--report", required=True)
    rf.add_argument("-o", "--output", required=True)
    rf.add_argument("--policy", choices=["fixed", "self-consistent"], default="fixed")
    rf.add_argument("--divisor", type=float, default=corpus.DEFAULT_REFIT_DIVISOR)
    rf.add_argument("--bounds-from", help="reuse normalization bounds of this calibration")
    rf.add_argument("--name", default="refit")
    rf.add_argument("--on-rank-deficient", choices=["min_norm", "raise"], default="min_norm")
    rf.add_argument("--fit-json", help="also write regression statistics here")
    rf.set_defaults(func=cmd_refit)

    co = sub.add_parser("corpus", help="batch operations")
    csub = co.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    cs = csub.add_parser("score", parents=[late_seed], help="classify and score every manifest entry")
    cs.add_argument("--manifest", required=True)
    cs.add_argument("-o", "--output", required=True)
    cs.add_argument("--format", choices=["csv", "json"])
    cs.add_argument("--calibration", default="ptrm-main")
    cs.add_argument("--search", type=int)
    cs.add_argument("--flat", type=float)
    cs.add_argument("--fill-voids", action="store_true")
    cs.add_argument("--resample", type=int, help="resample each DEM to N x N first")
    cs.set_defaults(func=cmd_corpus_score)
    cg = csub.add_parser("synth", parents=[late], help="write a synthetic corpus and its manifest")
    cg.add_argument("--out-dir", required=True)
    cg.add_argument("--category", action="append", choices=synth.CATEGORIES)
    cg.add_argument("--seeds", type=int, default=25)
    cg.add_argument("--size", type=int, default=129)
    cg.add_argument("--format", choices=["esri_ascii", "pgm16"], default="esri_ascii")
    cg.set_defaults(func=cmd_corpus_synth)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise UsageError("terrain-toolkit: error: --threads must be >= 1")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    ctx = _Ctx(args)
    try:
        code = args.func(args, ctx)
    except (OSError, ValueError, KeyError, np.linalg.LinAlgError, synth.ErosionInstability) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if code is None else code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
