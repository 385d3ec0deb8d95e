"""Singular-value map of instances and the four boundary theorems.

The explicit map sends an instance U to its two largest singular values
(sigma1, sigma2). All instances live inside a region bounded by four curves:

  west   sigma2 >= 0, tight exactly when all rows are identical
  south  sigma1 >= sqrt(n/m), tight exactly when all column sums equal n/m
  north  sigma1^2 + sigma2^2 <= n, tight exactly when every agent is
         single-minded and at most two distinct goods are valued
  east   sigma2 <= sigma1, with a sufficient block-duplication certificate

Eigenvalues come from a cyclic Jacobi sweep on the n x n Gram matrix
U U^T (n <= m keeps the small side), run to off-diagonal norm < 1e-12.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import BadDimensions, UnsupportedShape, UtilityMatrix, validate
from .generators import gen_characteristic

JACOBI_OFF_TOL = 1e-12
BOUNDARY_TOL = 1e-7


def jacobi_eigenvalues(sym, off_tol: float = JACOBI_OFF_TOL, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi sweeps.

    Each sweep annihilates every off-diagonal pair (p, q) in row order with a
    Givens rotation; convergence is quadratic, so the off-diagonal Frobenius
    norm drops below ``off_tol`` after a handful of sweeps at these sizes.
    """
    a = np.array(sym, dtype=np.float64)
    k = a.shape[0]
    if a.ndim != 2 or a.shape[1] != k:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    for _ in range(max_sweeps):
        off = a - np.diag(np.diag(a))
        if np.sqrt((off * off).sum()) < off_tol:
            return np.sort(np.diag(a))[::-1].copy()
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
    raise RuntimeError(f"Jacobi sweep did not converge in {max_sweeps} sweeps")


@dataclass(frozen=True)
class SpectralPoint:
    sigma1: float
    sigma2: float

    def __iter__(self):
        return iter((self.sigma1, self.sigma2))


def _values_of(matrix) -> np.ndarray:
    return matrix.values if isinstance(matrix, UtilityMatrix) else np.asarray(matrix, dtype=np.float64)


def singular_values(matrix) -> np.ndarray:
    """All singular values, descending. Accepts a raw array as well, which
    keeps perturbation experiments outside the row-stochastic contract.

    Eigenvalues of the Gram matrix are clamped at 0 before the square root;
    the clamp extends to anything below 64 eps times the top eigenvalue,
    which is indistinguishable from 0 at working precision (sqrt would
    otherwise inflate that rounding junk to ~1e-8).
    """
    arr = _values_of(matrix)
    gram = arr @ arr.T if arr.shape[0] <= arr.shape[1] else arr.T @ arr
    eig = jacobi_eigenvalues(gram)
    tiny = 64.0 * np.finfo(np.float64).eps * max(float(eig[0]), 1.0)
    return np.sqrt(np.where(eig > tiny, eig, 0.0))


def top_singular_values(matrix) -> SpectralPoint:
    sv = singular_values(matrix)
    return SpectralPoint(float(sv[0]), float(sv[1]))


def explicit_coords(records) -> np.ndarray:
    """(k, 2) array of (sigma1, sigma2) rows, aligned with ``records``."""
    out = np.empty((len(records), 2))
    for idx, rec in enumerate(records):
        pt = top_singular_values(rec.matrix)
        out[idx, 0] = pt.sigma1
        out[idx, 1] = pt.sigma2
    return out


def corner_coordinates(kind: str, n: int, m: int) -> SpectralPoint:
    """Closed-form map position of a characteristic instance."""
    if n < 2 or m < n:
        raise BadDimensions(n, m)
    block = m // n
    if kind == "IND":
        return SpectralPoint(np.sqrt(n / m), 0.0)
    if kind == "CON":
        return SpectralPoint(np.sqrt(n), 0.0)
    if kind == "SEP":
        return SpectralPoint(1.0, 1.0)
    if kind == "WSEP":
        return SpectralPoint(np.sqrt(1.0 / block), np.sqrt(1.0 / block))
    if kind == "WSEPf":
        return SpectralPoint(np.sqrt(n / m), np.sqrt(block) * n / m)
    if kind == "BIC":
        if n % 2 and m < 3:
            raise UnsupportedShape(f"BIC with odd n={n} needs m >= 3, got m={m}")
        return SpectralPoint(np.sqrt(n // 2), np.sqrt(n // 2))
    raise ValueError(f"unknown characteristic kind {kind!r}")


@dataclass(frozen=True)
class SideReport:
    """One boundary side: spectral residual, tightness flag, and (where one
    exists) the structural certificate with its agreement bit."""

    residual: float
    tight: bool
    certificate: bool | None
    agrees: bool | None


@dataclass(frozen=True)
class BoundaryReport:
    sigma1: float
    sigma2: float
    west: SideReport
    south: SideReport
    north: SideReport
    east: SideReport


def _rows_identical(arr: np.ndarray, tol: float) -> bool:
    return bool(np.abs(arr - arr[0]).max() <= tol)


def _column_sums_flat(arr: np.ndarray, tol: float) -> bool:
    n, m = arr.shape
    return bool(np.abs(arr.sum(axis=0) - n / m).max() <= tol)


def _single_minded_two_goods(arr: np.ndarray, tol: float) -> bool:
    row_max = arr.max(axis=1)
    if (row_max < 1.0 - tol).any():
        return False
    if (arr.sum(axis=1) - row_max > tol).any():
        return False
    valued = np.nonzero(arr.max(axis=0) > tol)[0]
    return valued.size <= 2


def _blocks_isomorphic(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Exact (within tol) equality of small matrices up to row and column
    permutation. For a fixed row order, columns may be sorted canonically,
    so only row permutations are enumerated."""
    if a.shape != b.shape:
        return False

    def canon(mat: np.ndarray) -> np.ndarray:
        cols = sorted(map(tuple, mat.T))
        return np.array(cols).T

    cb = canon(b)
    for perm in itertools.permutations(range(a.shape[0])):
        if np.abs(canon(a[list(perm)]) - cb).max() <= tol:
            return True
    return False


def _east_block_certificate(arr: np.ndarray, tol: float) -> bool | None:
    """Advisory witness for east tightness: the agent-good bipartite graph
    splits into components, two of which are isomorphic and attain the
    largest component sigma1 (a duplicated top block forces sigma1 = sigma2)."""
    n, m = arr.shape
    support = arr > tol
    comp_of_agent = [-1] * n
    comps: list[tuple[list[int], list[int]]] = []
    for start in range(n):
        if comp_of_agent[start] != -1:
            continue
        agents = [start]
        comp_of_agent[start] = len(comps)
        goods = set(np.nonzero(support[start])[0].tolist())
        changed = True
        while changed:
            changed = False
            for i in range(n):
                if comp_of_agent[i] == -1 and goods.intersection(np.nonzero(support[i])[0].tolist()):
                    comp_of_agent[i] = len(comps)
                    agents.append(i)
                    goods.update(np.nonzero(support[i])[0].tolist())
                    changed = True
        comps.append((agents, sorted(goods)))
    if len(comps) < 2:
        return False
    blocks = [arr[np.ix_(agents, goods)] for agents, goods in comps if goods]
    if len(blocks) < 2:
        return False
    if max(b.shape[0] for b in blocks) > 8:
        return None
    tops = [float(singular_values(b)[0]) for b in blocks]
    peak = max(tops)
    peak_idx = [i for i, t in enumerate(tops) if t >= peak - tol]
    for i, j in itertools.combinations(peak_idx, 2):
        if _blocks_isomorphic(blocks[i], blocks[j], tol):
            return True
    return False


def boundary_report(matrix: UtilityMatrix, tol: float = BOUNDARY_TOL) -> BoundaryReport:
    arr = matrix.values
    n, m = arr.shape
    s1, s2 = top_singular_values(matrix)

    west_res = s2
    south_res = s1 - float(np.sqrt(n / m))
    north_res = n - (s1 * s1 + s2 * s2)
    east_res = s1 - s2

    west_cert = _rows_identical(arr, tol)
    south_cert = _column_sums_flat(arr, tol)
    north_cert = _single_minded_two_goods(arr, tol)
    east_tight = east_res <= tol
    east_cert = _east_block_certificate(arr, tol) if east_tight else None

    def side(res: float, cert, advisory: bool = False) -> SideReport:
        tight = res <= tol
        agrees = None if (advisory or cert is None) else (tight == cert)
        return SideReport(residual=float(res), tight=bool(tight), certificate=cert, agrees=agrees)

    return BoundaryReport(
        sigma1=s1,
        sigma2=s2,
        west=side(west_res, west_cert),
        south=side(south_res, south_cert),
        north=side(north_res, north_cert),
        east=side(east_res, east_cert, advisory=True),
    )


def boundary_interpolation(kind: str, n: int, m: int, resolution: int = 11) -> list[UtilityMatrix]:
    """Instances tracing one boundary of the map.

    west   convex path from IND to CON (rows stay identical)
    south  convex path from IND to WSEPf (column sums stay n/m)
    north  t agents on good 0 and n-t on good 1, t = 1..n-1
    east   convex path from WSEP to a separable layout, then stepwise
           merges of single-minded pairs down to the two-good corner,
           interpolated pair by pair (sigma1 = sigma2 throughout)
    """
    if n < 2 or m < n:
        raise BadDimensions(n, m)
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    thetas = np.linspace(0.0, 1.0, resolution)

    if kind == "west":
        ind = gen_characteristic("IND", n, m).values
        con = gen_characteristic("CON", n, m).values
        return [validate((1 - t) * ind + t * con) for t in thetas]

    if kind == "south":
        ind = gen_characteristic("IND", n, m).values
        wsepf = gen_characteristic("WSEPf", n, m).values
        return [validate((1 - t) * ind + t * wsepf) for t in thetas]

    if kind == "north":
        out = []
        for t in range(1, n):
            arr = np.zeros((n, m))
            arr[:t, 0] = 1.0
            arr[t:, 1] = 1.0
            out.append(validate(arr))
        return out

    if kind == "east":
        block = m // n
        out = []
        for t in thetas:
            arr = np.zeros((n, m))
            for i in range(n):
                lo = i * block
                arr[i, lo : lo + block] = (1.0 - t) / block
                arr[i, lo] += t
            out.append(validate(arr))
        half = n // 2
        for r in range(1, half):
            for t in thetas[1:]:
                arr = np.zeros((n, m))
                arr[:r, 0] = 1.0
                arr[r : 2 * r, 1] = 1.0
                arr[2 * r, 0] = t
                arr[2 * r, 2] = 1.0 - t
                arr[2 * r + 1, 1] = t
                arr[2 * r + 1, 3] = 1.0 - t
                for k, i in enumerate(range(2 * r + 2, n)):
                    arr[i, 4 + k] = 1.0
                out.append(validate(arr))
        return out

    raise ValueError(f"unknown boundary kind {kind!r}")


@dataclass(frozen=True)
class DirichletSummary:
    mean_sigma1_sq: float
    std_error: float
    max_sigma2: float


def dirichlet_duplicated_sample(n: int, m: int, count: int, seed) -> DirichletSummary:
    """Monte-Carlo summary of sigma1^2 for a flat Dirichlet row copied to all
    agents (normalized i.i.d. exponentials; the duplication forces sigma2 = 0).
    """
    if n < 2 or m < n:
        raise BadDimensions(n, m)
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    rng = np.random.default_rng(seed)
    s1sq = np.empty(count)
    max_s2 = 0.0
    for idx in range(count):
        row = rng.exponential(1.0, m)
        row /= row.sum()
        pt = top_singular_values(np.tile(row, (n, 1)))
        s1sq[idx] = pt.sigma1 * pt.sigma1
        max_s2 = max(max_s2, pt.sigma2)
    mean = float(s1sq.mean())
    se = float(s1sq.std(ddof=1) / np.sqrt(count))
    return DirichletSummary(mean_sigma1_sq=mean, std_error=se, max_sigma2=float(max_s2))
