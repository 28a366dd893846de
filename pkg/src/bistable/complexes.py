"""Simplicial and bifiltered constructions.

Conventions used throughout:

* The bifiltration index poset J orders density-sensitivity OPPOSITELY:
  (k, r) <= (k', r') iff k >= k' and r <= r'.  Helper :func:`j_leq`.
* Entry radii are "strictly after" thresholds: a simplex with entry value v
  is present in the open sense for r > v.  Slices of bifiltered complexes
  are evaluated closed (entry <= r), which agrees with the open convention
  just after every critical value and with upward grid rounding at grid
  values; the explicit builders :func:`rips_complex` / :func:`cech_complex`
  take a radius and apply the strict open-ball convention directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import (
    EmptyGrid,
    GuardExceeded,
    MonotonicityViolation,
    SizeGuard,
    UnsupportedMetric,
)
from .metric import (
    L2,
    LINF,
    FiniteMetricSpace,
    PointCloud,
    min_enclosing_ball_radius,
    pairwise_distances,
)

__all__ = [
    "j_leq",
    "GridSpec",
    "SimplicialComplex",
    "BifilteredComplex",
    "DegreeBifiltration",
    "rips_complex",
    "cech_complex",
    "degree_filtration",
    "degree_rips_bifiltration",
    "degree_cech_bifiltration",
    "barycentric_subdivision",
    "subdivision_bifiltration",
    "kfold_cech_complex",
    "multicover_contains",
    "dcov_contains",
    "coarsen",
]


def j_leq(a, b) -> bool:
    """Order of the bifiltration poset: a <= b iff a.k >= b.k and a.r <= b.r."""
    return a[0] >= b[0] and a[1] <= b[1]


@dataclass(frozen=True)
class GridSpec:
    """Finite evaluation grid: k values descending, r values ascending."""

    ks: np.ndarray
    rs: np.ndarray

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=float)
        rs = np.asarray(self.rs, dtype=float)
        if ks.size < 2 or rs.size < 2:
            raise EmptyGrid("grid needs at least 2 values per axis")
        if not np.all(np.diff(ks) < 0):
            raise EmptyGrid("k values must be strictly descending")
        if not np.all(np.diff(rs) > 0):
            raise EmptyGrid("r values must be strictly ascending")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "rs", rs)

    @classmethod
    def uniform(cls, k_max: float, r_max: float, nk: int = 100, nr: int = 100,
                k_min: float | None = None, r_min: float | None = None) -> "GridSpec":
        k_min = k_max / nk if k_min is None else k_min
        r_min = r_max / nr if r_min is None else r_min
        return cls(np.linspace(k_max, k_min, nk), np.linspace(r_min, r_max, nr))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ks.size, self.rs.size)

    @property
    def k_step(self) -> float:
        return float(np.max(-np.diff(self.ks)))

    @property
    def r_step(self) -> float:
        return float(np.max(np.diff(self.rs)))

    def snap_k_index(self, k: float) -> int:
        """Index of the largest grid k <= k; clamped to the smallest k line."""
        asc = self.ks[::-1]
        j = int(np.searchsorted(asc, k, side="right")) - 1
        if j < 0:
            return self.ks.size - 1  # clamp to smallest k line
        return self.ks.size - 1 - j

    def snap_r_index(self, r: float) -> int | None:
        """Index of the smallest grid r >= r, or None when r overshoots."""
        j = int(np.searchsorted(self.rs, r, side="left"))
        if j >= self.rs.size:
            return None
        return j

    def coarsen_grade(self, grade) -> tuple[float, float] | None:
        """Round a bigrade to the smallest grid bigrade above it in J."""
        ri = self.snap_r_index(grade[1])
        if ri is None:
            return None
        return (float(self.ks[self.snap_k_index(grade[0])]), float(self.rs[ri]))

    def points(self):
        for k in self.ks:
            for r in self.rs:
                yield (float(k), float(r))


class SimplicialComplex:
    """Finite abstract simplicial complex with strictly sorted vertex tuples."""

    def __init__(self, simplices_by_dim: dict[int, Iterable[tuple]], check: bool = False):
        by_dim = {}
        for d, simps in simplices_by_dim.items():
            entries = sorted(set(tuple(s) for s in simps))
            if entries:
                by_dim[int(d)] = entries
        self.by_dim = by_dim
        if check and not self.is_face_closed():
            raise ValueError("simplices are not closed under faces")

    @classmethod
    def empty(cls) -> "SimplicialComplex":
        return cls({})

    @property
    def dimension(self) -> int:
        return max(self.by_dim, default=-1)

    def simplices(self, dim: int) -> list[tuple]:
        return self.by_dim.get(dim, [])

    def all_simplices(self):
        for d in sorted(self.by_dim):
            for s in self.by_dim[d]:
                yield s

    @property
    def vertices(self) -> list[int]:
        return [s[0] for s in self.by_dim.get(0, [])]

    def n_simplices(self) -> int:
        return sum(len(v) for v in self.by_dim.values())

    def contains(self, simplex) -> bool:
        s = tuple(simplex)
        import bisect

        lst = self.by_dim.get(len(s) - 1, [])
        i = bisect.bisect_left(lst, s)
        return i < len(lst) and lst[i] == s

    def is_face_closed(self) -> bool:
        for d, simps in self.by_dim.items():
            if d == 0:
                continue
            for s in simps:
                for i in range(len(s)):
                    if not self.contains(s[:i] + s[i + 1:]):
                        return False
        return True

    def is_subcomplex_of(self, other: "SimplicialComplex") -> bool:
        for d, simps in self.by_dim.items():
            olst = set(other.by_dim.get(d, []))
            if any(s not in olst for s in simps):
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self.by_dim == other.by_dim

    def __repr__(self):
        counts = {d: len(v) for d, v in sorted(self.by_dim.items())}
        return f"SimplicialComplex({counts})"


# ---------------------------------------------------------------------------
# clique machinery (adjacency bitsets over python ints)
# ---------------------------------------------------------------------------

def _adjacency_bitsets(dist: np.ndarray, r: float, strict: bool) -> list[int]:
    n = dist.shape[0]
    adj = []
    for v in range(n):
        row = dist[v]
        mask = (row < 2.0 * r) if strict else (row <= 2.0 * r)
        bits = 0
        for u in np.nonzero(mask)[0]:
            if u != v:
                bits |= 1 << int(u)
        adj.append(bits)
    return adj


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _cliques_from_adjacency(adj: list[int], maxdim: int):
    """All cliques on <= maxdim+1 vertices, grouped by dimension."""
    n = len(adj)
    by_dim: dict[int, list[tuple]] = {0: [(v,) for v in range(n)]}

    def extend(clique: tuple, cand: int, depth: int):
        if depth > maxdim:
            return
        for w in _iter_bits(cand):
            new = clique + (w,)
            by_dim.setdefault(depth, []).append(new)
            higher = cand & adj[w] & ~((1 << (w + 1)) - 1)
            if depth < maxdim and higher:
                extend(new, higher, depth + 1)

    for v in range(n):
        higher = adj[v] & ~((1 << (v + 1)) - 1)
        if higher:
            extend((v,), higher, 1)
    return by_dim


def rips_complex(space: FiniteMetricSpace, r: float, maxdim: int) -> SimplicialComplex:
    """Clique complex on the graph with edges at strict distance < 2r."""
    if r <= 0:
        return SimplicialComplex({0: [(v,) for v in range(space.n)]})
    adj = _adjacency_bitsets(space.dist, r, strict=True)
    return SimplicialComplex(_cliques_from_adjacency(adj, maxdim))


@njit(cache=True)
def _enumerate_triangles(nbr_offs, nbr_idx):
    """Triangles (a < b < c) of a graph with sorted CSR adjacency."""
    n = nbr_offs.shape[0] - 1
    count = 0
    for a in range(n):
        for ia in range(nbr_offs[a], nbr_offs[a + 1]):
            b = nbr_idx[ia]
            if b <= a:
                continue
            # two-pointer intersection of adj(a), adj(b) above b
            i = ia + 1
            j = nbr_offs[b]
            end_a = nbr_offs[a + 1]
            end_b = nbr_offs[b + 1]
            while j < end_b and nbr_idx[j] <= b:
                j += 1
            while i < end_a and j < end_b:
                x = nbr_idx[i]
                y = nbr_idx[j]
                if x == y:
                    count += 1
                    i += 1
                    j += 1
                elif x < y:
                    i += 1
                else:
                    j += 1
    out = np.empty((count, 3), dtype=np.int64)
    pos = 0
    for a in range(n):
        for ia in range(nbr_offs[a], nbr_offs[a + 1]):
            b = nbr_idx[ia]
            if b <= a:
                continue
            i = ia + 1
            j = nbr_offs[b]
            end_a = nbr_offs[a + 1]
            end_b = nbr_offs[b + 1]
            while j < end_b and nbr_idx[j] <= b:
                j += 1
            while i < end_a and j < end_b:
                x = nbr_idx[i]
                y = nbr_idx[j]
                if x == y:
                    out[pos, 0] = a
                    out[pos, 1] = b
                    out[pos, 2] = x
                    pos += 1
                    i += 1
                    j += 1
                elif x < y:
                    i += 1
                else:
                    j += 1
    return out


class MebCache:
    """Memoized smallest-enclosing-ball radii keyed by vertex bitmask."""

    def __init__(self, points: np.ndarray, metric: str):
        self.points = points
        self.metric = metric
        self._cache: dict[int, float] = {}

    def radius(self, mask: int) -> float:
        got = self._cache.get(mask)
        if got is None:
            idx = list(_iter_bits(mask))
            got = min_enclosing_ball_radius(self.points[idx], self.metric)
            self._cache[mask] = got
        return got

    def radius_of(self, verts: Sequence[int]) -> float:
        mask = 0
        for v in verts:
            mask |= 1 << int(v)
        return self.radius(mask)


def cech_complex(cloud: PointCloud, r: float, maxdim: int) -> SimplicialComplex:
    """Nerve of open balls of radius r: a simplex is present iff the smallest
    ball enclosing its vertices has radius strictly below r."""
    if r <= 0:
        raise ValueError("r must be positive")
    pts = cloud.expanded_points()
    n = pts.shape[0]
    meb = MebCache(pts, cloud.metric)
    meb.radius_of((0,))  # force metric support check early
    dist = pairwise_distances(pts, cloud.metric)
    adj = _adjacency_bitsets(dist, r, strict=True)  # pair MEB = d/2 < r
    by_dim: dict[int, list[tuple]] = {0: [(v,) for v in range(n)]}

    def extend(clique: tuple, mask: int, cand: int, depth: int):
        for w in _iter_bits(cand):
            new_mask = mask | (1 << w)
            if meb.radius(new_mask) >= r:
                continue  # supersets only grow the enclosing ball
            new = clique + (w,)
            by_dim.setdefault(depth, []).append(new)
            higher = cand & adj[w] & ~((1 << (w + 1)) - 1)
            if depth < maxdim and higher:
                extend(new, new_mask, higher, depth + 1)

    if maxdim >= 1:
        for v in range(n):
            higher = adj[v] & ~((1 << (v + 1)) - 1)
            if higher:
                extend((v,), 1 << v, higher, 1)
    return SimplicialComplex(by_dim)


def degree_filtration(complex: SimplicialComplex, k: float) -> SimplicialComplex:
    """Maximal subcomplex on vertices of degree >= k-1 in the FULL 1-skeleton."""
    deg: dict[int, int] = {v: 0 for v in complex.vertices}
    for (u, v) in complex.simplices(1):
        deg[u] += 1
        deg[v] += 1
    kept = {v for v, d in deg.items() if d >= k - 1}
    by_dim = {}
    for d, simps in complex.by_dim.items():
        sel = [s for s in simps if all(v in kept for v in s)]
        if sel:
            by_dim[d] = sel
    return SimplicialComplex(by_dim)


# ---------------------------------------------------------------------------
# bifiltered complexes (explicit minimal-antichain representation)
# ---------------------------------------------------------------------------

class BifilteredComplex:
    """Simplices with explicit minimal antichains of bigrades.

    Antichains are stored sorted by descending k (equivalently descending r).
    """

    def __init__(self, n_vertices: int, simplices: list[tuple], grades: list[list[tuple]],
                 grid: GridSpec | None = None, coarsening_slack=None, check: bool = False):
        if len(simplices) != len(grades):
            raise ValueError("one grade set per simplex")
        order = sorted(range(len(simplices)), key=lambda i: (len(simplices[i]), simplices[i]))
        self.n_vertices = int(n_vertices)
        self.simplices = [tuple(simplices[i]) for i in order]
        self.grades = [
            sorted(((float(k), float(r)) for (k, r) in grades[i]), key=lambda g: -g[0])
            for i in order
        ]
        self.grid = grid
        self.coarsening_slack = coarsening_slack
        self._index = {s: i for i, s in enumerate(self.simplices)}
        if check:
            self.validate()

    def validate(self):
        for s, gs in zip(self.simplices, self.grades):
            if not gs:
                raise ValueError(f"empty grade set for {s}")
            for a, b in combinations(gs, 2):
                if j_leq(a, b) or j_leq(b, a):
                    raise ValueError(f"grades of {s} are not an antichain: {a}, {b}")
        # face monotonicity: wherever sigma is present its faces are present
        for s, gs in zip(self.simplices, self.grades):
            if len(s) == 1:
                continue
            for i in range(len(s)):
                face = s[:i] + s[i + 1:]
                fi = self._index.get(face)
                if fi is None:
                    raise ValueError(f"missing face {face} of {s}")
                for g in gs:
                    if not self.present_at(fi, g[0], g[1]):
                        raise ValueError(f"face {face} of {s} absent at {g}")

    def present_at(self, index: int, k: float, r: float) -> bool:
        return any(g[0] >= k and g[1] <= r for g in self.grades[index])

    def entry_radius_at_row(self, index: int, k: float) -> float:
        """Smallest r with the simplex present at (k, r); inf when never."""
        best = math.inf
        for (gk, gr) in self.grades[index]:
            if gk >= k and gr < best:
                best = gr
        return best

    def slice_at(self, k: float, r: float) -> SimplicialComplex:
        by_dim: dict[int, list[tuple]] = {}
        for i, s in enumerate(self.simplices):
            if self.present_at(i, k, r):
                by_dim.setdefault(len(s) - 1, []).append(s)
        return SimplicialComplex(by_dim)

    def row_entry_levels(self, k: float):
        """Per-simplex entry radii at density row k, split by dimension <= 2."""
        verts, edges, tris = [], [], []
        vlev, elev, tlev = [], [], []
        eindex: dict[tuple, int] = {}
        for i, s in enumerate(self.simplices):
            lev = self.entry_radius_at_row(i, k)
            d = len(s) - 1
            if d == 0:
                verts.append(s[0])
                vlev.append(lev)
            elif d == 1:
                eindex[s] = len(edges)
                edges.append(s)
                elev.append(lev)
            elif d == 2:
                tris.append(
                    (
                        eindex[(s[0], s[1])],
                        eindex[(s[0], s[2])],
                        eindex[(s[1], s[2])],
                    )
                )
                tlev.append(lev)
        return (
            np.array(verts, dtype=np.int64),
            np.array(vlev),
            np.array(edges, dtype=np.int64).reshape(-1, 2),
            np.array(elev),
            np.array(tris, dtype=np.int64).reshape(-1, 3),
            np.array(tlev),
        )

    def max_dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "n_vertices": self.n_vertices,
            "simplices": [
                {"verts": list(s), "grades": [[k, r] for (k, r) in gs]}
                for s, gs in zip(self.simplices, self.grades)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BifilteredComplex":
        simps = [tuple(e["verts"]) for e in data["simplices"]]
        grades = [[tuple(g) for g in e["grades"]] for e in data["simplices"]]
        return cls(int(data["n_vertices"]), simps, grades)


def _minimal_antichain(grades: Iterable[tuple]) -> list[tuple]:
    """Minimal elements of a set of bigrades under the J order."""
    gs = sorted(set((float(k), float(r)) for (k, r) in grades), key=lambda g: (-g[0], g[1]))
    out: list[tuple] = []
    best_r = math.inf
    for (k, r) in gs:  # descending k: minimal iff r strictly below all seen
        if r < best_r:
            out.append((k, r))
            best_r = r
    return out


def coarsen(bif: BifilteredComplex, grid: GridSpec) -> BifilteredComplex:
    """Round every minimal bigrade up (in J) onto the grid.

    k rounds down numerically (the k axis is opposite), r rounds up; grades
    overshooting the last r line are dropped, and simplices with no grades
    left are dropped; grades below the smallest k line are clamped to it.
    The result is interleaved with the input within one grid step, recorded
    in ``coarsening_slack`` as a forward shift.
    """
    from .interleave import AffineShift

    simplices: list[tuple] = []
    grades: list[list[tuple]] = []
    for s, gs in zip(bif.simplices, bif.grades):
        snapped = []
        for g in gs:
            cg = grid.coarsen_grade(g)
            if cg is not None:
                snapped.append(cg)
        if snapped:
            simplices.append(s)
            grades.append(_minimal_antichain(snapped))
    slack = AffineShift(1.0, grid.k_step, 1.0, grid.r_step)
    return BifilteredComplex(bif.n_vertices, simplices, grades, grid=grid,
                             coarsening_slack=slack)


# ---------------------------------------------------------------------------
# degree bifiltrations (flag-structured, implicit grades)
# ---------------------------------------------------------------------------

class DegreeBifiltration:
    """Degree-Rips / degree-Cech bifiltration of a finite (pseudo)metric.

    Vertices qualify at (k, r) when their degree in the 1-skeleton at scale r
    is at least k*n - 1 (normalized; unnormalized uses k - 1), and a simplex
    is present when it lies in the scale filtration and all its vertices
    qualify.  Stores the distance matrix and per-vertex sorted neighbor
    distances; grades are derived on demand, which keeps the 10^6-simplex
    cases workable.
    """

    def __init__(self, dist: np.ndarray, maxdim: int, flavor: str = "rips",
                 normalized: bool = True, r_max: float | None = None,
                 points: np.ndarray | None = None, metric: str | None = None):
        self.dist = np.asarray(dist, dtype=float)
        self.n = self.dist.shape[0]
        self.maxdim = int(maxdim)
        self.flavor = flavor
        self.normalized = bool(normalized)
        self.r_max = r_max
        self.points = points
        self.metric = metric
        if flavor not in ("rips", "cech"):
            raise ValueError("flavor must be rips or cech")
        if flavor == "cech" and points is None:
            raise ValueError("cech flavor needs ambient points")
        # sorted neighbor distances per vertex (excluding self)
        d = self.dist.copy()
        np.fill_diagonal(d, np.inf)
        self.neighbor_dists = np.sort(d, axis=1)[:, : self.n - 1]
        self._arrays = None

    @property
    def n_vertices(self) -> int:
        return self.n

    def degree_scale(self) -> float:
        return float(self.n) if self.normalized else 1.0

    def vertex_entry_radii(self, k: float) -> np.ndarray:
        """Entry radius per vertex at density row k (inf = never qualifies)."""
        t = k * self.degree_scale() - 1.0
        m = int(math.ceil(t - 1e-12))
        if m <= 0:
            return np.zeros(self.n)
        if m > self.n - 1:
            return np.full(self.n, np.inf)
        return self.neighbor_dists[:, m - 1] / 2.0

    def _edge_cap(self) -> float:
        return math.inf if self.r_max is None else 2.0 * self.r_max

    def arrays(self):
        """Edge and triangle tables up to maxdim (<= 2 for the array path)."""
        if self._arrays is not None:
            return self._arrays
        n = self.n
        iu, ju = np.triu_indices(n, 1)
        lengths = self.dist[iu, ju]
        keep = lengths <= self._edge_cap()
        eu, ev, elen = iu[keep], ju[keep], lengths[keep]
        edge_rips = elen / 2.0
        if self.flavor == "cech":
            edge_entry = edge_rips  # MEB of a pair is half its distance
        else:
            edge_entry = edge_rips
        tri = np.empty((0, 3), dtype=np.int64)
        tri_edge_idx = np.empty((0, 3), dtype=np.int64)
        tri_entry = np.empty(0)
        if self.maxdim >= 2 and len(eu):
            both_u = np.concatenate([eu, ev])
            both_v = np.concatenate([ev, eu])
            order_adj = np.lexsort((both_v, both_u))
            nbr_idx = both_v[order_adj].astype(np.int64)
            counts = np.bincount(both_u, minlength=n)
            nbr_offs = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=nbr_offs[1:])
            tri = _enumerate_triangles(nbr_offs, nbr_idx)
            ekey = eu.astype(np.int64) * n + ev
            order = np.argsort(ekey)
            ekeys = ekey[order]

            def elook(a, b):
                return order[np.searchsorted(ekeys, a * n + b)]

            if len(tri):
                tri_edge_idx = np.stack(
                    [
                        elook(tri[:, 0], tri[:, 1]),
                        elook(tri[:, 0], tri[:, 2]),
                        elook(tri[:, 1], tri[:, 2]),
                    ],
                    axis=1,
                )
                if self.flavor == "rips":
                    tri_entry = np.maximum(
                        np.maximum(edge_rips[tri_edge_idx[:, 0]], edge_rips[tri_edge_idx[:, 1]]),
                        edge_rips[tri_edge_idx[:, 2]],
                    )
                else:
                    meb = MebCache(self.points, self.metric)
                    tri_entry = np.array(
                        [meb.radius_of(t) for t in tri], dtype=float
                    )
        self._arrays = {
            "edge_uv": np.stack([eu, ev], axis=1).astype(np.int64) if len(eu) else np.empty((0, 2), np.int64),
            "edge_entry": edge_entry,
            "tri": tri,
            "tri_edge_idx": tri_edge_idx,
            "tri_entry": tri_entry,
        }
        return self._arrays

    def row_entry_levels(self, k: float):
        """Entry radii of every simplex at density row k (vectorized)."""
        arr = self.arrays()
        vth = self.vertex_entry_radii(k)
        vlev = vth
        euv = arr["edge_uv"]
        elev = np.maximum(arr["edge_entry"], np.maximum(vth[euv[:, 0]], vth[euv[:, 1]])) if len(euv) else np.empty(0)
        tri = arr["tri"]
        if len(tri):
            tlev = np.maximum(
                arr["tri_entry"],
                np.maximum(np.maximum(vth[tri[:, 0]], vth[tri[:, 1]]), vth[tri[:, 2]]),
            )
        else:
            tlev = np.empty(0)
        return (
            np.arange(self.n, dtype=np.int64),
            vlev,
            euv,
            elev,
            arr["tri_edge_idx"],
            tlev,
        )

    def slice_at(self, k: float, r: float, maxdim: int | None = None) -> SimplicialComplex:
        """Closed slice: simplices with entry <= r whose vertices qualify."""
        maxdim = self.maxdim if maxdim is None else maxdim
        t = k * self.degree_scale() - 1.0
        deg = (np.sum(self.dist <= 2.0 * r, axis=1) - 1)  # excludes self
        kept = np.nonzero(deg >= t - 1e-12)[0]
        by_dim: dict[int, list[tuple]] = {0: [(int(v),) for v in kept]}
        if maxdim >= 1 and len(kept) > 1:
            sub = self.dist[np.ix_(kept, kept)]
            adj = _adjacency_bitsets(sub, r, strict=False)
            if self.flavor == "rips":
                cl = _cliques_from_adjacency(adj, maxdim)
                for d, simps in cl.items():
                    if d == 0:
                        continue
                    by_dim[d] = [tuple(int(kept[v]) for v in s) for s in simps]
            else:
                meb = MebCache(self.points, self.metric)

                def extend(clique, mask, cand, depth):
                    for w in _iter_bits(cand):
                        glob = int(kept[w])
                        new_mask = mask | (1 << glob)
                        if meb.radius(new_mask) > r:
                            continue
                        new = clique + (glob,)
                        by_dim.setdefault(depth, []).append(new)
                        higher = cand & adj[w] & ~((1 << (w + 1)) - 1)
                        if depth < maxdim and higher:
                            extend(new, new_mask, higher, depth + 1)

                for vi in range(len(kept)):
                    higher = adj[vi] & ~((1 << (vi + 1)) - 1)
                    if higher:
                        extend((int(kept[vi]),), 1 << int(kept[vi]), higher, 1)
        return SimplicialComplex(by_dim)

    def critical_ks(self) -> np.ndarray:
        """All density values where some vertex's qualification can change."""
        scale = self.degree_scale()
        return np.unique(np.arange(1, self.n + 1) / scale)[::-1]

    def critical_rs(self) -> np.ndarray:
        arr = self.arrays()
        vals = [arr["edge_entry"]]
        if len(arr["tri_entry"]):
            vals.append(arr["tri_entry"])
        vals.append(np.zeros(1))
        return np.unique(np.concatenate(vals))

    def explicit(self, grid: GridSpec | None = None) -> BifilteredComplex:
        """Materialize minimal antichains (on a grid when given, else exact)."""
        arr = self.arrays()
        ks = grid.ks if grid is not None else self.critical_ks()
        simplices: list[tuple] = [(int(v),) for v in range(self.n)]
        simplices += [tuple(int(x) for x in e) for e in arr["edge_uv"]]
        simplices += [tuple(int(x) for x in t) for t in arr["tri"]]
        per_simplex: list[list[tuple]] = [[] for _ in simplices]
        r_cap = math.inf if self.r_max is None else self.r_max
        for k in ks:
            _, vlev, _, elev, _, tlev = self.row_entry_levels(float(k))
            entries = np.concatenate([vlev, elev, tlev])
            for i, r in enumerate(entries):
                if math.isfinite(r) and r <= r_cap:
                    g = (float(k), float(r)) if grid is None else grid.coarsen_grade((float(k), float(r)))
                    if g is not None:
                        per_simplex[i].append(g)
        keep = [i for i, gs in enumerate(per_simplex) if gs]
        return BifilteredComplex(
            self.n,
            [simplices[i] for i in keep],
            [_minimal_antichain(per_simplex[i]) for i in keep],
            grid=grid,
        )


def degree_rips_bifiltration(space: FiniteMetricSpace, maxdim: int,
                             normalized: bool = True, r_max: float | None = None) -> DegreeBifiltration:
    return DegreeBifiltration(space.dist, maxdim, flavor="rips", normalized=normalized, r_max=r_max)


def degree_cech_bifiltration(cloud: PointCloud, maxdim: int,
                             normalized: bool = True, r_max: float | None = None) -> DegreeBifiltration:
    pts = cloud.expanded_points()
    dist = pairwise_distances(pts, cloud.metric)
    return DegreeBifiltration(dist, maxdim, flavor="cech", normalized=normalized,
                              r_max=r_max, points=pts, metric=cloud.metric)


# ---------------------------------------------------------------------------
# barycentric subdivision and subdivision bifiltrations
# ---------------------------------------------------------------------------

def barycentric_subdivision(complex: SimplicialComplex, maxdim: int | None = None) -> SimplicialComplex:
    """Flag complex of the face poset: one vertex per simplex, one d-simplex
    per flag of length d+1; flag length is capped by maxdim+1 when given."""
    if complex.n_simplices() > 1 << 16:
        raise SizeGuard("barycentric subdivision input exceeds 2^16 simplices")
    simps = list(complex.all_simplices())
    index = {s: i for i, s in enumerate(simps)}
    cap = math.inf if maxdim is None else maxdim + 1
    by_dim: dict[int, list[tuple]] = {0: [(i,) for i in range(len(simps))]}

    cofaces: dict[tuple, list[int]] = {s: [] for s in simps}
    for s in simps:
        for t in simps:
            if len(t) > len(s) and set(s) < set(t):
                cofaces[s].append(index[t])

    def extend(flag: tuple, top: tuple, length: int):
        if length >= cap:
            return
        for ti in cofaces[top]:
            new = flag + (ti,)
            by_dim.setdefault(length, []).append(new)
            extend(new, simps[ti], length + 1)

    for s in simps:
        extend((index[s],), s, 1)
    return SimplicialComplex(by_dim)


def subdivision_bifiltration(filtered: list[tuple], maxdim: int | None = None,
                             n_points: int | None = None, normalized: bool = False) -> BifilteredComplex:
    """Subdivision bifiltration of a filtered complex.

    ``filtered``: (simplex, entry radius) pairs, entry radii face-monotone.
    The total complex is the barycentric subdivision; a flag s1 < ... < sm
    has the single minimal bigrade (dim(s1)+1, entry(sm)), divided by the
    point count for the normalized variant.  ``maxdim`` caps flag length.
    """
    entry = {}
    for s, r in filtered:
        entry[tuple(s)] = float(r)
    simps = sorted(entry, key=lambda s: (len(s), s))
    for s in simps:
        for i in range(len(s)):
            if len(s) > 1:
                f = s[:i] + s[i + 1:]
                if f not in entry:
                    raise MonotonicityViolation(f"missing face {f} of {s}")
                if entry[f] > entry[s] + 1e-12:
                    raise MonotonicityViolation(f"face {f} enters after {s}")
    if len(simps) > 1 << 16:
        raise SizeGuard("subdivision input exceeds 2^16 simplices")

    index = {s: i for i, s in enumerate(simps)}
    scale = float(n_points) if (normalized and n_points) else 1.0
    cap = math.inf if maxdim is None else maxdim + 1

    cofaces: dict[tuple, list[tuple]] = {s: [] for s in simps}
    for s in simps:
        for t in simps:
            if len(t) > len(s) and set(s) < set(t):
                cofaces[s].append(t)

    out_simps: list[tuple] = []
    out_grades: list[list[tuple]] = []

    def emit(flag_idx: tuple, min_dim: int, max_entry: float):
        out_simps.append(flag_idx)
        out_grades.append([((min_dim + 1) / scale, max_entry)])

    def extend(flag_idx: tuple, top: tuple, min_dim: int, length: int):
        if length >= cap:
            return
        for t in cofaces[top]:
            new = flag_idx + (index[t],)
            emit(new, min_dim, entry[t])
            extend(new, t, min_dim, length + 1)

    for s in simps:
        emit((index[s],), len(s) - 1, entry[s])
        extend((index[s],), s, len(s) - 1, 1)
    return BifilteredComplex(len(simps), out_simps, out_grades)


# ---------------------------------------------------------------------------
# k-fold Cech (multicover nerve) and coverage predicates
# ---------------------------------------------------------------------------

def kfold_cech_complex(cloud: PointCloud, k: int, r: float, maxdim: int):
    """Nerve of the cover of the k-fold covered region by k-wise ball
    intersections: one vertex per k-subset of the (multiplicity-expanded)
    points whose open balls meet; a set of such subsets spans a simplex iff
    the balls of their union share a point.

    Returns (complex, labels): vertex i of the complex is the k-subset
    labels[i] (a tuple of expanded point indices).
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    pts = cloud.expanded_points()
    n = pts.shape[0]
    if k > n:
        return SimplicialComplex({}), []
    if math.comb(n, k) > 5000:
        raise GuardExceeded(f"C({n},{k}) exceeds the 5000 k-subset guard")
    meb = MebCache(pts, cloud.metric)
    labels = []
    masks = []
    for sub in combinations(range(n), k):
        mask = 0
        for v in sub:
            mask |= 1 << v
        if meb.radius(mask) < r:
            labels.append(sub)
            masks.append(mask)
    m = len(labels)
    by_dim: dict[int, list[tuple]] = {0: [(i,) for i in range(m)]}
    if maxdim >= 1 and m > 1:
        adj = [0] * m
        for i in range(m):
            for j in range(i + 1, m):
                if meb.radius(masks[i] | masks[j]) < r:
                    adj[i] |= 1 << j
                    adj[j] |= 1 << i

        def extend(clique, umask, cand, depth):
            for w in _iter_bits(cand):
                new_mask = umask | masks[w]
                if meb.radius(new_mask) >= r:
                    continue
                new = clique + (w,)
                by_dim.setdefault(depth, []).append(new)
                higher = cand & adj[w] & ~((1 << (w + 1)) - 1)
                if depth < maxdim and higher:
                    extend(new, new_mask, higher, depth + 1)

        for i in range(m):
            higher = adj[i] & ~((1 << (i + 1)) - 1)
            if higher:
                extend((i,), masks[i], higher, 1)
    return SimplicialComplex(by_dim), labels


def multicover_contains(cloud: PointCloud, y, k: float, r: float,
                        normalized: bool = False) -> bool:
    """Is y covered by at least k (k*|X| when normalized) open r-balls?"""
    pts = cloud.expanded_points()
    y = np.asarray(y, dtype=float)
    d = pairwise_distances(np.vstack([y[None, :], pts]), cloud.metric)[0, 1:]
    need = k * (pts.shape[0] if normalized else 1.0)
    return int(np.sum(d < r)) >= need - 1e-12


def dcov_contains(cloud: PointCloud, y, k: float, r: float) -> bool:
    """Is y within r of a vertex of the normalized degree complex at (k, r)?

    The 1-skeleta of the degree-Rips and degree-Cech bifiltrations agree, so
    vertex qualification only needs pair distances.
    """
    pts = cloud.expanded_points()
    n = pts.shape[0]
    dist = pairwise_distances(pts, cloud.metric)
    deg = np.sum(dist < 2.0 * r, axis=1) - 1
    qualified = deg >= k * n - 1 - 1e-12
    if not np.any(qualified):
        return False
    y = np.asarray(y, dtype=float)
    d = pairwise_distances(np.vstack([y[None, :], pts]), cloud.metric)[0, 1:]
    return bool(np.any(d[qualified] < r))
