"""Row-stochastic utility matrices: the instance type everything else consumes.

An instance is an n x m matrix with n >= 2 agents (rows), m >= n goods
(columns), nonnegative entries, and every row summing to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

ROW_SUM_TOL = 1e-9


class ValidationError(ValueError):
    """Base for every input-contract violation."""


class BadDimensions(ValidationError):
    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        super().__init__(f"need n >= 2 agents and m >= n goods, got n={n}, m={m}")


class NegativeEntry(ValidationError):
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"negative utility at agent {i}, good {j}")


class RowSumViolation(ValidationError):
    def __init__(self, i: int, actual: float):
        self.i, self.actual = i, actual
        super().__init__(f"row {i} sums to {actual!r}, expected 1 within {ROW_SUM_TOL}")


class ZeroRow(ValidationError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} sums to 0 and cannot be normalized")


class ShapeMismatch(ValidationError):
    def __init__(self, shape_a: tuple, shape_b: tuple):
        self.shape_a, self.shape_b = shape_a, shape_b
        super().__init__(f"operands have different shapes: {shape_a} vs {shape_b}")


class UnsupportedShape(ValidationError):
    pass


class CapError(RuntimeError):
    """Base for every explicit computation cap."""


@dataclass(frozen=True)
class UtilityMatrix:
    """Validated instance. ``values`` is a read-only float64 array."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def permuted(self, agents=None, goods=None) -> "UtilityMatrix":
        """Reindex rows and/or columns (permutations leave validity intact)."""
        arr = self.values
        if agents is not None:
            idx = _as_permutation(agents, self.n)
            arr = arr[idx, :]
        if goods is not None:
            idx = _as_permutation(goods, self.m)
            arr = arr[:, idx]
        return UtilityMatrix(_frozen(arr))


def _as_permutation(indices, size: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=int)
    if idx.shape != (size,) or sorted(idx.tolist()) != list(range(size)):
        raise ValidationError(f"not a permutation of 0..{size - 1}: {indices!r}")
    return idx


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def _as_matrix(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise BadDimensions(*(arr.shape if arr.ndim == 2 else (arr.ndim, -1)))
    return arr


def validate(raw) -> UtilityMatrix:
    """Check shape, sign, and row sums; re-normalize rows within tolerance.

    Rows whose sum deviates from 1 by at most ``ROW_SUM_TOL`` are divided by
    their sum so downstream code can rely on exact stochasticity up to float
    rounding. Larger deviations raise ``RowSumViolation``.

    Rows already within rounding distance of 1 (a few ulps, scaled by m) are
    left untouched: dividing them again would flip last bits without gaining
    accuracy, and can even oscillate forever. Since one division always lands
    inside that band, validating a validated matrix is a bitwise no-op, which
    is what keeps file round trips exact.
    """
    arr = _as_matrix(raw)
    n, m = arr.shape
    if n < 2 or m < n:
        raise BadDimensions(n, m)
    neg = np.argwhere(arr < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntry(int(i), int(j))
    sums = arr.sum(axis=1)
    bad = np.nonzero(~(np.abs(sums - 1.0) <= ROW_SUM_TOL))[0]
    if bad.size:
        i = int(bad[0])
        raise RowSumViolation(i, float(sums[i]))
    band = 16.0 * m * np.finfo(np.float64).eps
    off = np.abs(sums - 1.0) > band
    if off.any():
        arr = np.where(off[:, None], arr / sums[:, None], arr)
    return UtilityMatrix(_frozen(arr))


def normalize_rows(raw) -> UtilityMatrix:
    """Divide each nonnegative row by its sum; zero rows are an error."""
    arr = _as_matrix(raw)
    n, m = arr.shape
    if n < 2 or m < n:
        raise BadDimensions(n, m)
    neg = np.argwhere(arr < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntry(int(i), int(j))
    sums = arr.sum(axis=1)
    zero = np.nonzero(sums <= 0.0)[0]
    if zero.size:
        raise ZeroRow(int(zero[0]))
    return validate(arr / sums[:, None])


@dataclass
class Source:
    """Provenance of an instance: generator model plus its parameters."""

    model: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class InstanceRecord:
    """A labeled instance inside a dataset."""

    label: str
    source: Source
    seed: int | None
    matrix: UtilityMatrix
