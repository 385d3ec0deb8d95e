"""Fairness features of an instance, by exhaustive allocation search.

Every complete allocation of m goods to n agents is one of n^m owner
vectors; the search walks them in counter order (good m-1 varies fastest)
in vectorized chunks. Accumulation is in ascending good and agent order
throughout, so a plain-loop reimplementation reproduces values bit for bit.
All of these are exponential and guarded by an explicit cap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import CapError, UtilityMatrix, ValidationError

ALLOC_CAP = 20_000_000
EFPO_QUAD_CAP = 10_000
EF_TOL = 1e-9
MMS_TOL = 1e-9
PO_STRICT_TOL = 1e-9
SINGLE_MINDED_TOL = 1e-9
_CHUNK = 4096

ALLOCATION_FEATURES = (
    "minimax_envy",
    "ef_exists",
    "max_nash",
    "max_util",
    "prop_fraction",
    "sum_max_envies",
    "mms_ok",
    "efpo_exists",
)
MATRIX_FEATURES = (
    "max_demand",
    "preference_diversity",
    "demand_gini",
    "pickiness",
    "frac_single_minded",
)
ALL_FEATURES = ALLOCATION_FEATURES + MATRIX_FEATURES


class CapExceeded(CapError):
    def __init__(self, n: int, m: int, cap: int):
        self.n, self.m, self.cap = n, m, cap
        super().__init__(f"n^m = {n}^{m} allocations exceed the cap {cap}")


class UnknownFeature(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown feature {name!r}")


@dataclass(frozen=True)
class Allocation:
    """A complete assignment of goods: owner[j] receives good j."""

    owner: tuple[int, ...]

    def bundle_utilities(self, matrix: UtilityMatrix) -> np.ndarray:
        arr = matrix.values
        out = np.zeros(arr.shape[0])
        for j, o in enumerate(self.owner):
            out[o] += arr[o, j]
        return out

    def bundle_matrix(self, matrix: UtilityMatrix) -> np.ndarray:
        """B[i, k] = value agent i assigns to agent k's bundle."""
        arr = matrix.values
        b = np.zeros((arr.shape[0], arr.shape[0]))
        for j, o in enumerate(self.owner):
            b[:, o] += arr[:, j]
        return b


def _check_cap(n: int, m: int, cap: int) -> int:
    total = n**m
    if total > cap:
        raise CapExceeded(n, m, cap)
    return total


def enumerate_allocations(n: int, m: int, cap: int = ALLOC_CAP) -> Iterator[Allocation]:
    _check_cap(n, m, cap)
    for owner in itertools.product(range(n), repeat=m):
        yield Allocation(owner)


def _owner_chunks(n: int, m: int, total: int) -> Iterator[np.ndarray]:
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        owners = np.empty((idx.size, m), dtype=np.int64)
        for j in range(m):
            owners[:, j] = (idx // n ** (m - 1 - j)) % n
        yield owners


def _bundle_matrices(arr: np.ndarray, owners: np.ndarray) -> np.ndarray:
    """(C, n, n) stack of bundle matrices, accumulated good by good."""
    c, m = owners.shape[0], owners.shape[1]
    n = arr.shape[0]
    b = np.zeros((c, n, n))
    rows = np.arange(c)
    for j in range(m):
        b[rows, :, owners[:, j]] += arr[:, j]
    return b


def _diag(b: np.ndarray) -> np.ndarray:
    n = b.shape[1]
    idx = np.arange(n)
    return b[:, idx, idx]


def _ascending_sum(x: np.ndarray) -> np.ndarray:
    acc = x[:, 0].copy()
    for i in range(1, x.shape[1]):
        acc += x[:, i]
    return acc


def _ascending_prod(x: np.ndarray) -> np.ndarray:
    acc = x[:, 0].copy()
    for i in range(1, x.shape[1]):
        acc *= x[:, i]
    return acc


def _envy(b: np.ndarray) -> np.ndarray:
    """(C, n, n) envy of i toward k, diagonal masked to -inf."""
    n = b.shape[1]
    idx = np.arange(n)
    envy = b - _diag(b)[:, :, None]
    envy[:, idx, idx] = -np.inf
    return envy


def minimax_envy(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> float:
    """Smallest achievable maximum pairwise envy over all allocations."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    best = np.inf
    for owners in _owner_chunks(n, m, total):
        worst = _envy(_bundle_matrices(arr, owners)).max(axis=(1, 2))
        best = min(best, float(worst.min()))
    return best


def ef_exists(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> bool:
    return minimax_envy(matrix, cap) <= EF_TOL


def max_nash(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> float:
    """Largest product of own-bundle utilities over all allocations."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    best = -np.inf
    for owners in _owner_chunks(n, m, total):
        prod = _ascending_prod(_diag(_bundle_matrices(arr, owners)))
        best = max(best, float(prod.max()))
    return best


def max_util(matrix: UtilityMatrix) -> float:
    """Utilitarian optimum: each good to whoever values it most (closed form)."""
    return float(matrix.values.max(axis=0).sum())


def prop_fraction(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> float:
    """n times the best egalitarian welfare: >= 1 means a proportional
    allocation exists."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    best = -np.inf
    for owners in _owner_chunks(n, m, total):
        egal = _diag(_bundle_matrices(arr, owners)).min(axis=1)
        best = max(best, float(egal.max()))
    return n * best


def sum_max_envies(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> float:
    """Minimum over allocations of the sum of each agent's maximal envy."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    best = np.inf
    for owners in _owner_chunks(n, m, total):
        per_agent = _envy(_bundle_matrices(arr, owners)).max(axis=2)
        best = min(best, float(_ascending_sum(per_agent).min()))
    return best


def mms_shares(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> np.ndarray:
    """Each agent's maximin share: best worst bundle over n-partitions it
    could cut itself."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    shares = np.full(n, -np.inf)
    for owners in _owner_chunks(n, m, total):
        worst = _bundle_matrices(arr, owners).min(axis=2)
        shares = np.maximum(shares, worst.max(axis=0))
    return shares


def mms_ok(matrix: UtilityMatrix, cap: int = ALLOC_CAP) -> bool:
    """True iff some allocation gives every agent its maximin share."""
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, cap)
    shares = mms_shares(matrix, cap)
    for owners in _owner_chunks(n, m, total):
        ok = _diag(_bundle_matrices(arr, owners)) >= shares[None, :] - MMS_TOL
        if ok.all(axis=1).any():
            return True
    return False


def efpo_exists(matrix: UtilityMatrix, quad_cap: int = EFPO_QUAD_CAP) -> bool:
    """True iff some allocation is envy-free and not Pareto-dominated.

    Stores all n^m utility profiles and checks EF candidates against
    higher-welfare allocations only, so the quadratic phase gets its own
    (smaller) cap.
    """
    arr = matrix.values
    n, m = arr.shape
    total = _check_cap(n, m, quad_cap)
    profiles = np.empty((total, n))
    worst_envy = np.empty(total)
    pos = 0
    for owners in _owner_chunks(n, m, total):
        b = _bundle_matrices(arr, owners)
        c = b.shape[0]
        profiles[pos : pos + c] = _diag(b)
        worst_envy[pos : pos + c] = _envy(b).max(axis=(1, 2))
        pos += c
    ef_idx = np.nonzero(worst_envy <= EF_TOL)[0]
    if not ef_idx.size:
        return False
    sums = profiles.sum(axis=1)
    for c in ef_idx[np.argsort(-sums[ef_idx], kind="stable")]:
        v = profiles[c]
        pool = profiles[sums >= sums[c]]
        dominated = bool(
            np.any((pool >= v).all(axis=1) & (pool > v + PO_STRICT_TOL).any(axis=1))
        )
        if not dominated:
            return True
    return False


def gini(x) -> float:
    """Mean absolute difference over twice the mean, 0 for an all-zero vector."""
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("gini of an empty vector")
    if v.min() < 0:
        raise ValueError("gini needs nonnegative entries")
    mean = v.mean()
    if mean == 0.0:
        return 0.0
    diff = np.abs(v[:, None] - v[None, :]).sum()
    return float(diff / (2.0 * v.size**2 * mean))


def max_demand(matrix: UtilityMatrix) -> float:
    return float(matrix.values.sum(axis=0).max())


def preference_diversity(matrix: UtilityMatrix) -> float:
    """Mean pairwise euclidean distance between utility rows."""
    arr = matrix.values
    n = arr.shape[0]
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    return float(dist[iu].mean())


def demand_gini(matrix: UtilityMatrix) -> float:
    return gini(matrix.values.sum(axis=0))


def pickiness(matrix: UtilityMatrix) -> float:
    """Mean Gini coefficient of the individual utility rows."""
    return float(np.mean([gini(row) for row in matrix.values]))


def frac_single_minded(matrix: UtilityMatrix) -> float:
    positive = (matrix.values > SINGLE_MINDED_TOL).sum(axis=1)
    return float((positive == 1).mean())


def matrix_features(matrix: UtilityMatrix) -> dict[str, float]:
    return {
        "max_demand": max_demand(matrix),
        "preference_diversity": preference_diversity(matrix),
        "demand_gini": demand_gini(matrix),
        "pickiness": pickiness(matrix),
        "frac_single_minded": frac_single_minded(matrix),
    }


@dataclass
class FeatureTable:
    """Feature columns per labeled instance; absent cells carry a reason."""

    columns: list[str]
    labels: list[str]
    rows: list[dict]
    reasons: list[tuple[str, str, str]]


def feature_table(
    records,
    features: list[str] | None = None,
    cap: int = ALLOC_CAP,
    quad_cap: int = EFPO_QUAD_CAP,
) -> FeatureTable:
    """Compute requested features for every record; a feature that trips its
    cap is recorded as absent with the reason, never raised."""
    columns = list(features) if features is not None else list(ALL_FEATURES)
    for name in columns:
        if name not in ALL_FEATURES:
            raise UnknownFeature(name)
    alloc_funcs = {
        "minimax_envy": lambda u: minimax_envy(u, cap),
        "ef_exists": lambda u: ef_exists(u, cap),
        "max_nash": lambda u: max_nash(u, cap),
        "max_util": lambda u: max_util(u),
        "prop_fraction": lambda u: prop_fraction(u, cap),
        "sum_max_envies": lambda u: sum_max_envies(u, cap),
        "mms_ok": lambda u: mms_ok(u, cap),
        "efpo_exists": lambda u: efpo_exists(u, quad_cap),
    }
    rows = []
    reasons = []
    for rec in records:
        row: dict = {}
        plain = matrix_features(rec.matrix)
        for name in columns:
            if name in plain:
                row[name] = plain[name]
                continue
            try:
                row[name] = alloc_funcs[name](rec.matrix)
            except CapError as exc:
                row[name] = None
                reasons.append((rec.label, name, str(exc)))
        rows.append(row)
    return FeatureTable(
        columns=columns, labels=[rec.label for rec in records], rows=rows, reasons=reasons
    )
