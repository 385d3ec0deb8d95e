"""File formats: instance text, dataset JSON, and the CSV surfaces.

Floats are serialized with 17 significant digits everywhere, which
round-trips 64-bit values exactly; reading back a written file reproduces
matrices bit for bit. Matrix rows inside the dataset JSON use the same
space-separated row syntax as the single-instance text format.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .core import InstanceRecord, Source, UtilityMatrix, ValidationError, normalize_rows, validate
from .distance import DistanceMatrix
from .embedding import Embedding

DATASET_FORMAT = "allocmap-dataset"


class ParseError(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def fmt17(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_floats(tokens: list[str], line_no: int) -> list[float]:
    out = []
    for tok in tokens:
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(line_no, f"not a number: {tok!r}") from None
    return out


# ---------------------------------------------------------------- instance text


def write_instance(path, matrix: UtilityMatrix) -> None:
    arr = matrix.values
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(fmt17(v) for v in row) + "\n")


def read_instance_array(path) -> np.ndarray:
    """Raw numbers from an instance-format file; validation is the caller's
    call (wide ingestion tables reuse this format without the n <= m rule)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(1, "empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError(1, f"expected 'n m' header, got {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError(1, f"expected integer dimensions, got {lines[0]!r}") from None
    rows = []
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise ParseError(len(lines), f"expected {n} rows, found {len(body)}")
    for k, ln in enumerate(body, start=2):
        vals = _parse_floats(ln.split(), k)
        if len(vals) != m:
            raise ParseError(k, f"expected {m} values, found {len(vals)}")
        rows.append(vals)
    return np.array(rows, dtype=np.float64)


# ---------------------------------------------------------------- dataset JSON


def _matrix_to_rows(arr: np.ndarray) -> list[str]:
    return [" ".join(fmt17(v) for v in row) for row in arr]


def _rows_to_matrix(rows: list[str]) -> np.ndarray:
    return np.array([_parse_floats(r.split(), 0) for r in rows], dtype=np.float64)


def write_dataset(path, records: list[InstanceRecord], seed: int | None = None) -> None:
    labels = [r.label for r in records]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate labels in dataset")
    doc = {
        "format": DATASET_FORMAT,
        "version": 1,
        "seed": seed,
        "instances": [
            {
                "label": rec.label,
                "source": {"model": rec.source.model, "params": rec.source.params},
                "seed": rec.seed,
                "matrix": _matrix_to_rows(rec.matrix.values),
            }
            for rec in records
        ],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dataset(path) -> tuple[list[InstanceRecord], dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, exc.msg) from None
    if doc.get("format") != DATASET_FORMAT:
        raise ParseError(1, f"not a {DATASET_FORMAT} file")
    records = []
    seen = set()
    for item in doc["instances"]:
        label = item["label"]
        if label in seen:
            raise ParseError(1, f"duplicate label {label!r}")
        seen.add(label)
        records.append(
            InstanceRecord(
                label=label,
                source=Source(item["source"]["model"], dict(item["source"]["params"])),
                seed=item["seed"],
                matrix=validate(_rows_to_matrix(item["matrix"])),
            )
        )
    meta = {"seed": doc.get("seed"), "version": doc.get("version")}
    return records, meta


# ---------------------------------------------------------------- ingestion


def ingest(
    path,
    normalize: bool = False,
    subsample: tuple[int, int, int] | None = None,
    seed: int | None = None,
) -> list[InstanceRecord]:
    """Read instances from a dataset JSON or an instance text file.

    With ``subsample=(n, m, k)`` the file is treated as one wide raw table
    and k instances are drawn from it: n agents and m goods sampled without
    replacement per instance (child seed per index), rows re-normalized.
    """
    with open(path) as fh:
        head = fh.read(1)
    stem = os.path.splitext(os.path.basename(path))[0]
    if head == "{":
        records, _ = read_dataset(path)
        if normalize:
            for rec in records:
                rec.matrix = normalize_rows(rec.matrix.values)
        return records
    table = read_instance_array(path)
    if subsample is not None:
        return _subsample(table, stem, subsample, seed if seed is not None else 0)
    builder = normalize_rows if normalize else validate
    return [
        InstanceRecord(
            label=stem,
            source=Source("ingested", {"path": os.path.basename(path)}),
            seed=None,
            matrix=builder(table),
        )
    ]


def _subsample(
    table: np.ndarray, stem: str, shape: tuple[int, int, int], seed: int
) -> list[InstanceRecord]:
    n, m, k = shape
    rows, cols = table.shape
    if n > rows or m > cols:
        raise ValidationError(
            f"cannot draw {n}x{m} instances from a {rows}x{cols} table"
        )
    records = []
    for t in range(k):
        child = np.random.SeedSequence(entropy=seed, spawn_key=(t,))
        rng = np.random.default_rng(child)
        for _ in range(100):
            agent_idx = np.sort(rng.choice(rows, size=n, replace=False))
            good_idx = np.sort(rng.choice(cols, size=m, replace=False))
            sub = table[np.ix_(agent_idx, good_idx)]
            if (sub.sum(axis=1) > 0).all() and (sub >= 0).all():
                break
        else:
            raise ValidationError(
                f"could not draw a normalizable {n}x{m} subtable in 100 tries"
            )
        records.append(
            InstanceRecord(
                label=f"{stem}_sub{t:03d}",
                source=Source(
                    "subsample",
                    {"path": stem, "n": n, "m": m, "seed": seed, "index": t},
                ),
                seed=seed,
                matrix=normalize_rows(sub),
            )
        )
    return records


# ---------------------------------------------------------------- CSV surfaces


def _check_labels(labels: list[str]) -> None:
    for lab in labels:
        if "," in lab or "\n" in lab:
            raise ValidationError(f"label {lab!r} cannot contain commas or newlines")


def write_distance_csv(path, dm: DistanceMatrix) -> None:
    _check_labels(dm.labels)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# metric={dm.metric}\n")
        fh.write(",".join(dm.labels) + "\n")
        for row in dm.values:
            fh.write(",".join(fmt17(v) for v in row) + "\n")


def read_distance_csv(path) -> tuple[list[str], np.ndarray, dict]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta: dict = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            for part in ln[1:].split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key] = val
        elif ln.strip():
            body.append(ln)
    if not body:
        raise ParseError(1, "no data rows")
    labels = body[0].split(",")
    k = len(labels)
    if len(body) != k + 1:
        raise ParseError(len(body), f"expected {k} data rows, found {len(body) - 1}")
    values = np.array(
        [_parse_floats(ln.split(","), i + 2) for i, ln in enumerate(body[1:])],
        dtype=np.float64,
    )
    if values.shape != (k, k):
        raise ParseError(2, f"expected a {k}x{k} matrix, got {values.shape}")
    return labels, values, meta


def write_embedding_csv(path, labels: list[str], emb: Embedding) -> None:
    _check_labels(labels)
    if len(labels) != emb.points.shape[0]:
        raise ValidationError("label count does not match point count")
    with open(path, "w", newline="\n") as fh:
        flag = " degenerate=1" if emb.degenerate else ""
        fh.write(f"# stress={fmt17(emb.stress)} iterations={emb.iterations}{flag}\n")
        fh.write("label,x,y\n")
        for lab, (x, y) in zip(labels, emb.points):
            fh.write(f"{lab},{fmt17(x)},{fmt17(y)}\n")


def write_explicit_csv(path, labels: list[str], coords: np.ndarray) -> None:
    _check_labels(labels)
    if len(labels) != coords.shape[0]:
        raise ValidationError("label count does not match coordinate count")
    with open(path, "w", newline="\n") as fh:
        fh.write("label,sigma1,sigma2\n")
        for lab, (s1, s2) in zip(labels, coords):
            fh.write(f"{lab},{fmt17(s1)},{fmt17(s2)}\n")


def read_points_csv(path) -> tuple[list[str], np.ndarray, dict, list[str]]:
    """Read an embedding or explicit-map CSV: (labels, k x 2 points, comment
    metadata, column header)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta: dict = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            for part in ln[1:].split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key] = val
        elif ln.strip():
            body.append(ln)
    if not body:
        raise ParseError(1, "no data rows")
    header = body[0].split(",")
    if len(header) != 3 or header[0] != "label":
        raise ParseError(1, f"expected 'label,<x>,<y>' header, got {body[0]!r}")
    labels = []
    pts = []
    for i, ln in enumerate(body[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 3:
            raise ParseError(i, f"expected 3 fields, found {len(parts)}")
        labels.append(parts[0])
        pts.append(_parse_floats(parts[1:], i))
    return labels, np.array(pts, dtype=np.float64), meta, header


_BOOL_FEATURES = ("ef_exists", "mms_ok", "efpo_exists")


def write_features_csv(path, table, reasons_path=None) -> None:
    """Feature table CSV plus the sidecar reasons file for absent cells."""
    _check_labels(table.labels)
    with open(path, "w", newline="\n") as fh:
        fh.write("# sum_max_envies=min-over-allocations\n")
        fh.write("label," + ",".join(table.columns) + "\n")
        for lab, row in zip(table.labels, table.rows):
            cells = []
            for name in table.columns:
                val = row[name]
                if val is None:
                    cells.append("")
                elif name in _BOOL_FEATURES:
                    cells.append("1" if val else "0")
                else:
                    cells.append(fmt17(val))
            fh.write(lab + "," + ",".join(cells) + "\n")
    if reasons_path is None:
        reasons_path = _reasons_path(path)
    with open(reasons_path, "w", newline="\n") as fh:
        fh.write("label,feature,reason\n")
        for label, feature, reason in table.reasons:
            clean = reason.replace(",", ";").replace("\n", " ")
            fh.write(f"{label},{feature},{clean}\n")


def _reasons_path(path) -> str:
    root, ext = os.path.splitext(str(path))
    return f"{root}_reasons{ext or '.csv'}"


def read_features_csv(path) -> tuple[list[str], list[str], list[dict]]:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body:
        raise ParseError(1, "no data rows")
    header = body[0].split(",")
    if header[0] != "label":
        raise ParseError(1, "first column must be 'label'")
    columns = header[1:]
    labels = []
    rows = []
    for i, ln in enumerate(body[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ParseError(i, f"expected {len(header)} fields, found {len(parts)}")
        labels.append(parts[0])
        row: dict = {}
        for name, cell in zip(columns, parts[1:]):
            row[name] = None if cell == "" else float(cell)
        rows.append(row)
    return labels, columns, rows
