"""Command line interface.

Exit codes: 0 success, 2 validation error, 3 computation cap exceeded,
4 file-IO or parse error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dataio
from .core import CapError, ValidationError
from .distance import EXACT_SEARCH_CAP, pairwise_distances
from .embedding import mds_embed
from .features import ALL_FEATURES, ALLOC_CAP, EFPO_QUAD_CAP, feature_table
from .generators import GeneratorSpec, gen_dataset, gen_preset
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .render import render_svg
from .spectral import explicit_coords


def _outpath(args, name: str) -> str:
    path = args.output if getattr(args, "output", None) else os.path.join(args.out_dir, name)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _cmd_generate(args) -> None:
    if args.preset:
        records = gen_preset(args.preset, args.seed)
    else:
        if not args.model or args.n is None or args.m is None:
            raise ValidationError("generate needs --preset or --model with --n and --m")
        params: dict = {}
        if args.model == "iid":
            params["dist"] = args.dist
        elif args.model == "attributes":
            params["d"] = args.d
        elif args.model == "resampling":
            params["p"] = args.p
            params["phi"] = args.phi
        elif args.model == "characteristic":
            params["kind"] = args.kind
        else:
            raise ValidationError(f"unknown model {args.model!r}")
        specs = [GeneratorSpec(args.model, args.count, params)]
        records = gen_dataset(specs, args.n, args.m, args.seed)
    dataio.write_dataset(_outpath(args, "dataset.json"), records, seed=args.seed)


def _cmd_ingest(args) -> None:
    sub = tuple(args.subsample) if args.subsample else None
    records = dataio.ingest(args.path, normalize=args.normalize, subsample=sub, seed=args.seed)
    dataio.write_dataset(_outpath(args, "dataset.json"), records, seed=args.seed)


def _cmd_distance(args) -> None:
    records, _ = dataio.read_dataset(args.dataset)
    dm = pairwise_distances(records, args.metric, threads=args.threads, cap=args.cap)
    dataio.write_distance_csv(_outpath(args, f"distances_{args.metric}.csv"), dm)


def _cmd_embed(args) -> None:
    labels, values, _ = dataio.read_distance_csv(args.distances)
    emb = mds_embed(
        values, args.seed, max_iters=args.max_iters, tol=args.tol, restarts=args.restarts
    )
    dataio.write_embedding_csv(_outpath(args, "embedding.csv"), labels, emb)


def _cmd_explicit(args) -> None:
    records, _ = dataio.read_dataset(args.dataset)
    coords = explicit_coords(records)
    dataio.write_explicit_csv(
        _outpath(args, "explicit.csv"), [r.label for r in records], coords
    )


def _cmd_features(args) -> None:
    records, _ = dataio.read_dataset(args.dataset)
    names = args.features.split(",") if args.features else None
    table = feature_table(records, names, cap=args.cap, quad_cap=args.quad_cap)
    dataio.write_features_csv(_outpath(args, "features.csv"), table, args.reasons)


def _cmd_render(args) -> None:
    labels, pts, _, header = dataio.read_points_csv(args.points)
    explicit = args.explicit or header[1:] == ["sigma1", "sigma2"]
    if explicit:
        xs, ys = pts[:, 1], pts[:, 0]
        x_label, y_label = "sigma2", "sigma1"
    else:
        xs, ys = pts[:, 0], pts[:, 1]
        x_label, y_label = "x", "y"

    categories = None
    boundary = None
    stars = None
    if args.dataset:
        records, _ = dataio.read_dataset(args.dataset)
        by_label = {rec.label: rec for rec in records}
        missing = [lab for lab in labels if lab not in by_label]
        if missing:
            raise ValidationError(f"labels missing from dataset: {missing[:3]}")
        if args.by_source:
            categories = [by_label[lab].source.model for lab in labels]
        stars = [by_label[lab].source.model == "characteristic" for lab in labels]
        if explicit:
            first = by_label[labels[0]].matrix
            boundary = (first.n, first.m)

    color_values = None
    cross = None
    if args.features_csv:
        flabels, columns, rows = dataio.read_features_csv(args.features_csv)
        by_label_row = dict(zip(flabels, rows))
        if args.color:
            if args.color not in columns:
                from .features import UnknownFeature

                raise UnknownFeature(args.color)
            color_values = [
                by_label_row.get(lab, {}).get(args.color) for lab in labels
            ]
        if "ef_exists" in columns:
            cross = [
                bool(by_label_row.get(lab, {}).get("ef_exists") or 0.0) for lab in labels
            ]

    render_svg(
        _outpath(args, "map.svg"),
        xs,
        ys,
        labels,
        x_label=x_label,
        y_label=y_label,
        title=args.title,
        color_values=color_values,
        color_label=args.color,
        categories=categories,
        cross_flags=cross,
        star_flags=stars,
        boundary_shape=boundary,
    )


def _cmd_pipeline(args) -> None:
    config = PipelineConfig(
        out_dir=args.out_dir,
        preset=args.preset,
        dataset_path=args.dataset,
        seed=args.seed,
        metric=args.metric,
        threads=args.threads,
        max_iters=args.max_iters,
        tol=args.tol,
        restarts=args.restarts,
        features=args.features.split(",") if args.features else None,
        color_feature=args.color,
        valuation_cap=args.cap,
    )
    outputs = run_pipeline(config)
    for stage in outputs:
        for path in outputs[stage]:
            print(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="allocmap",
        description="Generate, compare, map, and annotate fair-division instances.",
    )
    p.add_argument("--seed", type=int, default=0, help="root RNG seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes for pair grids")
    p.add_argument("--out-dir", default=".", help="directory for default output paths")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a dataset from a preset or one generator")
    g.add_argument("--preset", choices=("3x6", "5x5", "10x20"))
    g.add_argument("--model", choices=("iid", "attributes", "resampling", "characteristic"))
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--dist", choices=("uniform01", "exponential"), default="uniform01")
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--phi", type=float, default=0.5)
    g.add_argument("--kind", choices=("IND", "SEP", "CON", "WSEP", "WSEPf", "BIC"), default="IND")
    g.add_argument("-o", "--output")
    g.set_defaults(func=_cmd_generate)

    i = sub.add_parser("ingest", help="read an instance file or dataset, write a dataset")
    i.add_argument("path")
    i.add_argument("--normalize", action="store_true", help="divide rows by their sums")
    i.add_argument(
        "--subsample",
        nargs=3,
        type=int,
        metavar=("N", "M", "K"),
        help="draw K instances of N agents x M goods from a wide table",
    )
    i.add_argument("-o", "--output")
    i.set_defaults(func=_cmd_ingest)

    d = sub.add_parser("distance", help="all-pairs distance matrix for a dataset")
    d.add_argument("dataset")
    d.add_argument("--metric", choices=("demand", "valuation"), default="demand")
    d.add_argument("--cap", type=int, default=EXACT_SEARCH_CAP, help="max n for exact valuation search")
    d.add_argument("-o", "--output")
    d.set_defaults(func=_cmd_distance)

    e = sub.add_parser("embed", help="SMACOF 2-D embedding of a distance CSV")
    e.add_argument("distances")
    e.add_argument("--max-iters", type=int, default=10000)
    e.add_argument("--tol", type=float, default=1e-9)
    e.add_argument("--restarts", type=int, default=1, help="best-of-R seeded restarts")
    e.add_argument("-o", "--output")
    e.set_defaults(func=_cmd_embed)

    x = sub.add_parser("explicit", help="singular-value coordinates for a dataset")
    x.add_argument("dataset")
    x.add_argument("-o", "--output")
    x.set_defaults(func=_cmd_explicit)

    f = sub.add_parser("features", help="fairness features for a dataset")
    f.add_argument("dataset")
    f.add_argument("--features", help=f"comma list from: {','.join(ALL_FEATURES)}")
    f.add_argument("--cap", type=int, default=ALLOC_CAP, help="max n^m for exhaustive features")
    f.add_argument("--quad-cap", type=int, default=EFPO_QUAD_CAP, help="max n^m for the EF+PO check")
    f.add_argument("--reasons", help="sidecar CSV for absent cells")
    f.add_argument("-o", "--output")
    f.set_defaults(func=_cmd_features)

    r = sub.add_parser("render", help="SVG scatter of an embedding or explicit map")
    r.add_argument("points", help="embedding.csv or explicit.csv")
    r.add_argument("--explicit", action="store_true", help="force explicit-map axes")
    r.add_argument("--dataset", help="dataset JSON for sources and boundary curves")
    r.add_argument("--features-csv", help="features CSV for coloring and markers")
    r.add_argument("--color", help="feature column used for the color ramp")
    r.add_argument("--by-source", action="store_true", help="discrete colors per generator")
    r.add_argument("--title")
    r.add_argument("-o", "--output")
    r.set_defaults(func=_cmd_render)

    pl = sub.add_parser("pipeline", help="dataset -> distances -> maps -> features -> SVGs")
    pl.add_argument("--preset", choices=("3x6", "5x5", "10x20"))
    pl.add_argument("--dataset", help="existing dataset or instance file instead of a preset")
    pl.add_argument("--metric", choices=("demand", "valuation"), default="demand")
    pl.add_argument("--max-iters", type=int, default=10000)
    pl.add_argument("--tol", type=float, default=1e-9)
    pl.add_argument("--restarts", type=int, default=1)
    pl.add_argument("--features", help="comma list of feature columns")
    pl.add_argument("--color", default="max_demand", help="feature for the colored renders")
    pl.add_argument("--cap", type=int, default=EXACT_SEARCH_CAP)
    pl.set_defaults(func=_cmd_pipeline)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        return _exit_code(exc.cause)
    if isinstance(exc, CapError):
        return 3
    if isinstance(exc, (dataio.ParseError, OSError)):
        return 4
    if isinstance(exc, (ValidationError, ValueError)):
        return 2
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (PipelineError, CapError, dataio.ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
