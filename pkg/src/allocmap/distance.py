"""Instance distances: min-cost matchings over agents and goods.

Two instances are compared entrywise (l1) after optimally relabeling agents
and goods. The full valuation distance minimizes over both labelings and is
exact but exponential in n (branch-and-bound over agent matchings, each node
bounded by a goods-assignment relaxation). The demand distance compares the
multiset of sorted demand columns and needs one polynomial matching; it never
exceeds the valuation distance, which makes it both a cheap stand-in at scale
and the root bound of the exact search.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import CapError, ShapeMismatch, UtilityMatrix, ValidationError

EXACT_SEARCH_CAP = 8

# Matchings are frequently tied in exact arithmetic (swapping two goods whose
# demand columns sit on the same side of two others changes nothing), and an
# order-sensitive float sum would let tied matchings differ by an ulp
# depending on which one the solver happened to return. All reported
# distances therefore go through one canonical evaluation: the correctly
# rounded exact sum (fsum) of the elementary |x - y| terms, which is
# order-free and monotone in the true cost.


def _entrywise_l1(x: np.ndarray, y: np.ndarray) -> float:
    return math.fsum(np.abs(x - y).ravel().tolist())


class NonSquare(ValidationError):
    def __init__(self, shape: tuple):
        self.shape = shape
        super().__init__(f"cost matrix must be square, got shape {shape}")


class NonFinite(ValidationError):
    def __init__(self):
        super().__init__("cost matrix contains NaN or infinite entries")


class BadPermutation(ValidationError):
    def __init__(self, perm):
        self.perm = perm
        super().__init__(f"not a permutation of 0..n-1: {perm!r}")


class ExactSearchCapExceeded(CapError):
    def __init__(self, n: int, cap: int):
        self.n, self.cap = n, cap
        super().__init__(
            f"exact valuation search is exponential in n; n={n} exceeds cap {cap}"
        )


def hungarian_min_cost(cost) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect matching on a square cost matrix.

    Returns (perm, total) where column perm[i] is matched to row i.
    """
    arr = np.asarray(cost, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonSquare(arr.shape)
    if not np.isfinite(arr).all():
        raise NonFinite()
    rows, cols = linear_sum_assignment(arr)
    perm = np.empty(arr.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm, float(arr[rows, cols].sum())


def _assignment_total(cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def _values_pair(u1: UtilityMatrix, u2: UtilityMatrix) -> tuple[np.ndarray, np.ndarray]:
    a1, a2 = u1.values, u2.values
    if a1.shape != a2.shape:
        raise ShapeMismatch(a1.shape, a2.shape)
    return a1, a2


def demand_vectors(matrix: UtilityMatrix) -> np.ndarray:
    """(m, n) array: row j is column j of the instance sorted descending."""
    return np.sort(matrix.values, axis=0)[::-1].T.copy()


def demand_distance(u1: UtilityMatrix, u2: UtilityMatrix) -> float:
    """Min-cost matching of demand vectors (anonymous per-good demand)."""
    _values_pair(u1, u2)
    d1 = demand_vectors(u1)
    d2 = demand_vectors(u2)
    cost = np.abs(d1[:, None, :] - d2[None, :, :]).sum(axis=2)
    perm, _ = hungarian_min_cost(cost)
    return _entrywise_l1(d1, d2[perm])


def valuation_distance_fixed_agents(u1: UtilityMatrix, u2: UtilityMatrix, agent_perm) -> float:
    """Entrywise l1 distance under a fixed agent matching, goods matched
    optimally (one polynomial assignment; agent i of u1 vs agent_perm[i] of u2)."""
    a1, a2 = _values_pair(u1, u2)
    n = a1.shape[0]
    perm = np.asarray(agent_perm, dtype=np.intp)
    if perm.shape != (n,) or sorted(perm.tolist()) != list(range(n)):
        raise BadPermutation(agent_perm)
    b2 = a2[perm]
    cost = np.abs(a1[:, :, None] - b2[:, None, :]).sum(axis=0)
    good_perm, _ = hungarian_min_cost(cost)
    return _entrywise_l1(a1, b2[:, good_perm])


# Slack for branch pruning. Relaxation totals are plain float sums and can
# land an ulp or two off the canonical leaf values; pruning strictly at the
# incumbent could then discard a leaf that canonically ties or beats it.
# Values here are at most 2n, so a couple of ulps is well under 1e-12.
_PRUNE_SLACK = 1e-12


def _valuation_search(a1: np.ndarray, a2: np.ndarray, root_lb: float) -> tuple[float, np.ndarray]:
    """Branch-and-bound over agent matchings.

    Nodes carry the goods-cost matrix of the committed agent pairs; its
    assignment relaxation is a lower bound because appending agents only adds
    nonnegative cost. Agents are processed in decreasing entry variance
    (spiky rows first, a pruning heuristic only; the minimum is order
    independent). Leaves are scored with the canonical evaluation.
    """
    n, m = a1.shape
    tensor = np.abs(a1[:, None, :, None] - a2[None, :, None, :])
    order = np.argsort(-a1.var(axis=1), kind="stable")

    best_perm = np.arange(n)
    best = _fixed_total(a1, a2, best_perm)
    used = np.zeros(n, dtype=bool)
    assign = np.full(n, -1, dtype=np.intp)

    def rec(cost: np.ndarray, depth: int) -> None:
        nonlocal best, best_perm
        if best <= root_lb:
            return
        i = int(order[depth])
        last = depth == n - 1
        children = []
        for i2 in range(n):
            if used[i2]:
                continue
            child_cost = cost + tensor[i, i2]
            if last:
                assign[i] = i2
                val = _leaf_total(a1, a2, assign, child_cost)
                if val < best:
                    best = val
                    best_perm = assign.copy()
                continue
            val = _assignment_total(child_cost)
            if val >= best + _PRUNE_SLACK:
                continue
            children.append((val, i2, child_cost))
        if last:
            assign[i] = -1
            return
        children.sort(key=lambda c: c[0])
        for val, i2, child_cost in children:
            if val >= best + _PRUNE_SLACK:
                continue
            used[i2] = True
            assign[i] = i2
            rec(child_cost, depth + 1)
            used[i2] = False
        assign[i] = -1

    rec(np.zeros((m, m)), 0)
    return best, best_perm


def _leaf_total(a1: np.ndarray, a2: np.ndarray, perm: np.ndarray, cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    good_perm = np.empty(cost.shape[0], dtype=np.intp)
    good_perm[rows] = cols
    return _entrywise_l1(a1, a2[perm][:, good_perm])


def _fixed_total(a1: np.ndarray, a2: np.ndarray, perm: np.ndarray) -> float:
    b2 = a2[perm]
    cost = np.abs(a1[:, :, None] - b2[:, None, :]).sum(axis=0)
    rows, cols = linear_sum_assignment(cost)
    good_perm = np.empty(cost.shape[0], dtype=np.intp)
    good_perm[rows] = cols
    return _entrywise_l1(a1, b2[:, good_perm])


def valuation_distance(
    u1: UtilityMatrix, u2: UtilityMatrix, cap: int = EXACT_SEARCH_CAP
) -> float:
    """Exact min over all agent and good relabelings of the entrywise l1
    difference. Exponential in n; refuses n > cap."""
    a1, a2 = _values_pair(u1, u2)
    n, m = a1.shape
    if n > cap:
        raise ExactSearchCapExceeded(n, cap)
    root_lb = demand_distance(u1, u2)
    best, _ = _valuation_search(a1, a2, root_lb)
    return best


@dataclass
class DistanceMatrix:
    """Symmetric pairwise distances with instance labels."""

    labels: list[str]
    values: np.ndarray
    metric: str

    def __post_init__(self):
        k = len(self.labels)
        v = self.values
        if v.shape != (k, k):
            raise ShapeMismatch(v.shape, (k, k))
        if not np.allclose(v, v.T, atol=1e-12):
            raise ValidationError("distance matrix is not symmetric")
        if np.abs(np.diag(v)).max(initial=0.0) > 1e-12:
            raise ValidationError("distance matrix diagonal is not zero")
        if v.min(initial=0.0) < 0.0:
            raise ValidationError("distance matrix has negative entries")


_POOL_STATE: dict = {}


def _pool_init(arrays, metric, cap):
    _POOL_STATE["arrays"] = arrays
    _POOL_STATE["metric"] = metric
    _POOL_STATE["cap"] = cap


def _pool_row(i: int) -> list[tuple[int, int, float]]:
    arrays = _POOL_STATE["arrays"]
    metric = _POOL_STATE["metric"]
    cap = _POOL_STATE["cap"]
    out = []
    for j in range(i + 1, len(arrays)):
        u1, u2 = UtilityMatrix(arrays[i]), UtilityMatrix(arrays[j])
        if metric == "demand":
            val = demand_distance(u1, u2)
        else:
            val = valuation_distance(u1, u2, cap=cap)
        out.append((i, j, val))
    return out


def pairwise_distances(
    records, metric: str, threads: int = 1, cap: int = EXACT_SEARCH_CAP
) -> DistanceMatrix:
    """All-pairs distance matrix over a dataset (instances must share n, m).

    With threads > 1 the pair grid is computed by a process pool; entries are
    assembled by index, so the result is identical for any thread count.
    """
    if metric not in ("demand", "valuation"):
        raise ValueError(f"unknown metric {metric!r}")
    shapes = {rec.matrix.values.shape for rec in records}
    if len(shapes) > 1:
        a, b = sorted(shapes)[:2]
        raise ShapeMismatch(a, b)
    if records and metric == "valuation":
        n = records[0].matrix.n
        if n > cap:
            raise ExactSearchCapExceeded(n, cap)
    k = len(records)
    values = np.zeros((k, k))
    if threads > 1 and k > 2:
        arrays = [rec.matrix.values for rec in records]
        with ProcessPoolExecutor(
            max_workers=threads, initializer=_pool_init, initargs=(arrays, metric, cap)
        ) as pool:
            for row in pool.map(_pool_row, range(k - 1)):
                for i, j, val in row:
                    values[i, j] = values[j, i] = val
    else:
        for i in range(k - 1):
            for j in range(i + 1, k):
                if metric == "demand":
                    val = demand_distance(records[i].matrix, records[j].matrix)
                else:
                    val = valuation_distance(records[i].matrix, records[j].matrix, cap=cap)
                values[i, j] = values[j, i] = val
    return DistanceMatrix(labels=[rec.label for rec in records], values=values, metric=metric)
