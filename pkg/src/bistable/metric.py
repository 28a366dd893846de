"""Point clouds, finite (pseudo)metric spaces, enclosing balls, and embeddings.

Everything here is pure and operates on immutable inputs; builders in
:mod:`bistable.complexes` call into these predicates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .errors import UnsupportedMetric

__all__ = [
    "L1",
    "L2",
    "LINF",
    "PointCloud",
    "FiniteMetricSpace",
    "distance_matrix",
    "kuratowski_embed",
    "min_enclosing_ball_radius",
    "balls_intersect",
    "hausdorff_distance",
]

L1 = "L1"
L2 = "L2"
LINF = "LINF"
_METRICS = (L1, L2, LINF)

#: Absolute tolerance for triangle-inequality validation of distance matrices.
TRIANGLE_TOL = 1e-9

#: Points within this distance of a candidate ball boundary count as on it,
#: so Welzl's recursion gives the same answer for any evaluation order.
_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class PointCloud:
    """Points in R^d with positive integer multiplicities and a metric tag."""

    points: np.ndarray  # (n, d) float64
    multiplicities: np.ndarray  # (n,) int64
    metric: str = L2

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array with d >= 1")
        if self.metric not in _METRICS:
            raise ValueError(f"unknown metric tag {self.metric!r}")
        mult = np.asarray(self.multiplicities, dtype=np.int64)
        if mult.shape != (pts.shape[0],):
            raise ValueError("multiplicities must have one entry per point")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be >= 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def from_points(cls, points, metric: str = L2, multiplicities=None) -> "PointCloud":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if multiplicities is None:
            multiplicities = np.ones(pts.shape[0], dtype=np.int64)
        return cls(pts, np.asarray(multiplicities, dtype=np.int64), metric)

    @property
    def n_distinct(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_multiplicity(self) -> int:
        return int(self.multiplicities.sum())

    def expanded_points(self) -> np.ndarray:
        """Rows repeated per multiplicity; copies sit at mutual distance 0."""
        return np.repeat(self.points, self.multiplicities, axis=0)


def pairwise_distances(points: np.ndarray, metric: str) -> np.ndarray:
    """Dense symmetric distance matrix of the rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    if metric == L2:
        return np.sqrt((diff * diff).sum(axis=2))
    if metric == L1:
        return np.abs(diff).sum(axis=2)
    if metric == LINF:
        return np.abs(diff).max(axis=2)
    raise ValueError(f"unknown metric tag {metric!r}")


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Symmetric nonnegative matrix with zero diagonal; zero off-diagonal
    entries are allowed (pseudometric), but triangle-inequality violations
    beyond ``TRIANGLE_TOL`` are rejected."""

    dist: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise ValueError("dist must be a non-empty square matrix")
        object.__setattr__(self, "dist", d)
        if not self.validate:
            return
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.abs(np.diag(d)) > 0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(d, d.T):
            if np.max(np.abs(d - d.T)) > 0:
                raise ValueError("dist must be symmetric")
        # d[i,k] <= d[i,j] + d[j,k] for all j, vectorized one j at a time.
        for j in range(d.shape[0]):
            if np.any(d - (d[:, j][:, None] + d[j, :][None, :]) > TRIANGLE_TOL):
                raise ValueError("triangle inequality violated beyond tolerance")

    @property
    def n(self) -> int:
        return self.dist.shape[0]


def distance_matrix(cloud: PointCloud) -> FiniteMetricSpace:
    """Metric space of the multiplicity-expanded cloud.

    A point with multiplicity m expands to m rows at mutual distance 0.
    """
    d = pairwise_distances(cloud.expanded_points(), cloud.metric)
    # Exact expansion of a genuine metric; skip the O(n^3) revalidation.
    return FiniteMetricSpace(d, validate=False)


def kuratowski_embed(space: FiniteMetricSpace) -> PointCloud:
    """Embed a finite metric space into (R^n, sup norm) by its distance rows.

    The embedding x_i = dist[i, :] is an exact isometry: sup_k |d(i,k) - d(j,k)|
    equals d(i,j), attained at k = j, and every arithmetic step is max/abs, so
    the round trip reproduces the matrix entrywise with no tolerance.
    """
    return PointCloud.from_points(space.dist.copy(), metric=LINF)


def _circumball(points: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Smallest L2 ball with all of ``points`` on its boundary.

    Solves for the center in the affine hull; returns None when the points are
    affinely degenerate (Welzl never needs those supports).
    """
    p0 = points[0]
    if len(points) == 1:
        return p0.copy(), 0.0
    a = points[1:] - p0
    # 2 a_i . x = |a_i|^2 for x = center - p0 restricted to span(a)
    g = 2.0 * (a @ a.T)
    rhs = (a * a).sum(axis=1)
    try:
        lam = np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError:
        return None
    center = p0 + lam @ a
    r = float(np.sqrt(((center - p0) ** 2).sum()))
    return center, r


def _ball_of_support(support: list[np.ndarray], dim: int) -> tuple[np.ndarray, float]:
    """Smallest ball with the support points on its boundary.

    Degenerate supports (affinely dependent, possible under floats) fall back
    to the smallest circumball of a subset that still contains the rest; the
    subset scan order is fixed, keeping results deterministic.
    """
    if not support:
        return np.zeros(dim), -1.0  # sentinel: contains nothing
    cb = _circumball(np.asarray(support))
    if cb is not None:
        return cb
    best = None
    for size in range(len(support) - 1, 0, -1):
        for sub in combinations(range(len(support)), size):
            cb = _circumball(np.asarray([support[i] for i in sub]))
            if cb is None:
                continue
            c, r = cb
            if all(np.linalg.norm(p - c) <= r + _BOUNDARY_TOL for p in support):
                if best is None or r < best[1]:
                    best = (c, r)
        if best is not None:
            return best
    raise ArithmeticError("degenerate support set in Welzl recursion")


def _welzl_l2(points: np.ndarray) -> float:
    """Exact smallest enclosing L2 ball radius via Welzl's recursion.

    Input order is used as given (no shuffle): the point counts here are
    small and a fixed order keeps results reproducible.
    """
    dim = points.shape[1]
    order = list(range(points.shape[0]))

    def welzl(count: int, support: list[np.ndarray]) -> tuple[np.ndarray, float]:
        if count == 0 or len(support) == dim + 1:
            return _ball_of_support(support, dim)
        p = points[order[count - 1]]
        c, r = welzl(count - 1, support)
        if r >= 0 and np.linalg.norm(p - c) <= r + _BOUNDARY_TOL:
            return c, r
        return welzl(count - 1, support + [p])

    _, r = welzl(len(order), [])
    return float(max(r, 0.0))


def min_enclosing_ball_radius(points, metric: str) -> float:
    """Radius of the smallest ball containing ``points`` in the given metric.

    Supported: L2 with ambient dimension <= 3 (exact Welzl), and LINF in any
    dimension, where the radius is half the largest coordinate range.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("points must be non-empty")
    if metric == LINF:
        return float((pts.max(axis=0) - pts.min(axis=0)).max() / 2.0)
    if metric == L2:
        if pts.shape[1] > 3:
            raise UnsupportedMetric("L2 enclosing balls supported only for d <= 3")
        if pts.shape[0] == 1:
            return 0.0
        if pts.shape[0] == 2:
            return float(np.linalg.norm(pts[1] - pts[0]) / 2.0)
        return _welzl_l2(pts)
    raise UnsupportedMetric(f"enclosing balls unsupported for metric {metric!r}")


def balls_intersect(centers, r: float, metric: str) -> bool:
    """True iff the open balls of radius ``r`` at ``centers`` share a point.

    Open balls of a common radius intersect exactly when the smallest ball
    enclosing the centers has radius strictly below r.
    """
    if r <= 0:
        return False
    return min_enclosing_ball_radius(centers, metric) < r


def hausdorff_distance(a: Iterable[int], b: Iterable[int], space: FiniteMetricSpace) -> float:
    """Hausdorff distance between two non-empty index sets of ``space``."""
    ia = np.fromiter(a, dtype=np.int64)
    ib = np.fromiter(b, dtype=np.int64)
    if ia.size == 0 or ib.size == 0:
        raise ValueError("index sets must be non-empty")
    sub = space.dist[np.ix_(ia, ib)]
    return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))
