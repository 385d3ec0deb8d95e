"""End-to-end batch run: dataset -> distances -> maps -> features -> SVGs.

Every artifact is a pure function of the config (seeds included), so a rerun
with the same config reproduces every output byte. A failing stage removes
whatever this run already wrote and surfaces the stage name.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import dataio
from .distance import EXACT_SEARCH_CAP, pairwise_distances
from .embedding import mds_embed
from .features import ALLOC_CAP, EFPO_QUAD_CAP, UnknownFeature, feature_table
from .generators import gen_preset
from .render import render_svg
from .spectral import explicit_coords


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    out_dir: str
    preset: str | None = None
    dataset_path: str | None = None
    seed: int = 0
    metric: str = "demand"
    threads: int = 1
    max_iters: int = 10000
    tol: float = 1e-9
    restarts: int = 1
    features: list[str] | None = None
    color_feature: str = "max_demand"
    valuation_cap: int = EXACT_SEARCH_CAP
    alloc_cap: int = ALLOC_CAP
    quad_cap: int = EFPO_QUAD_CAP
    normalize: bool = False
    subsample: tuple[int, int, int] | None = field(default=None)


def run_pipeline(config: PipelineConfig) -> dict[str, list[str]]:
    if (config.preset is None) == (config.dataset_path is None):
        raise ValueError("exactly one of preset or dataset_path must be set")
    os.makedirs(config.out_dir, exist_ok=True)
    written: list[str] = []
    outputs: dict[str, list[str]] = {}

    def out(name: str, stage: str) -> str:
        path = os.path.join(config.out_dir, name)
        written.append(path)
        outputs.setdefault(stage, []).append(path)
        return path

    stage = "dataset"
    try:
        if config.preset is not None:
            records = gen_preset(config.preset, config.seed)
        else:
            records = dataio.ingest(
                config.dataset_path,
                normalize=config.normalize,
                subsample=config.subsample,
                seed=config.seed,
            )
        dataio.write_dataset(out("dataset.json", stage), records, seed=config.seed)

        stage = "distances"
        dm = pairwise_distances(
            records, config.metric, threads=config.threads, cap=config.valuation_cap
        )
        dataio.write_distance_csv(out(f"distances_{config.metric}.csv", stage), dm)

        stage = "embedding"
        emb = mds_embed(
            dm.values,
            config.seed,
            max_iters=config.max_iters,
            tol=config.tol,
            restarts=config.restarts,
        )
        dataio.write_embedding_csv(out("embedding.csv", stage), dm.labels, emb)

        stage = "explicit"
        coords = explicit_coords(records)
        dataio.write_explicit_csv(out("explicit.csv", stage), dm.labels, coords)

        stage = "features"
        table = feature_table(
            records, config.features, cap=config.alloc_cap, quad_cap=config.quad_cap
        )
        dataio.write_features_csv(
            out("features.csv", stage), table, out("features_reasons.csv", stage)
        )

        stage = "render"
        feat = config.color_feature
        if feat not in table.columns:
            raise UnknownFeature(feat)
        color_vals = [
            None if row[feat] is None else float(row[feat]) for row in table.rows
        ]
        cross = None
        if "ef_exists" in table.columns:
            cross = [bool(row["ef_exists"]) if row["ef_exists"] is not None else False for row in table.rows]
        cats = [rec.source.model for rec in records]
        stars = [rec.source.model == "characteristic" for rec in records]
        n, m = records[0].matrix.n, records[0].matrix.m
        labels = [rec.label for rec in records]

        render_svg(
            out("map_embedding_source.svg", stage),
            emb.points[:, 0],
            emb.points[:, 1],
            labels,
            x_label="x",
            y_label="y",
            title=f"{config.metric} distance map",
            categories=cats,
            cross_flags=cross,
            star_flags=stars,
        )
        render_svg(
            out(f"map_embedding_{feat}.svg", stage),
            emb.points[:, 0],
            emb.points[:, 1],
            labels,
            x_label="x",
            y_label="y",
            title=f"{config.metric} distance map",
            color_values=color_vals,
            color_label=feat,
            cross_flags=cross,
            star_flags=stars,
        )
        render_svg(
            out("map_explicit_source.svg", stage),
            coords[:, 1],
            coords[:, 0],
            labels,
            x_label="sigma2",
            y_label="sigma1",
            title="singular-value map",
            categories=cats,
            cross_flags=cross,
            star_flags=stars,
            boundary_shape=(n, m),
        )
        render_svg(
            out(f"map_explicit_{feat}.svg", stage),
            coords[:, 1],
            coords[:, 0],
            labels,
            x_label="sigma2",
            y_label="sigma1",
            title="singular-value map",
            color_values=color_vals,
            color_label=feat,
            cross_flags=cross,
            star_flags=stars,
            boundary_shape=(n, m),
        )
    except BaseException as exc:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise PipelineError(stage, exc) from exc
    return outputs
