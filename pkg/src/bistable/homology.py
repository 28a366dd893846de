"""Mod-2 homology invariants: dimensions, barcodes, induced ranks, Hilbert
functions, bigraded Betti numbers via the two-step Koszul complex, fibered
barcodes, and the bottleneck distance.

Complexes of dimension <= 2 route through the compiled kernel in
:mod:`bistable.reduction`; general dimensions and the Betti linear algebra
use bigint GF(2) columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import reduction
from .complexes import BifilteredComplex, DegreeBifiltration, GridSpec, SimplicialComplex
from .errors import InfiniteMismatch, MonotonicityViolation, NonMonotoneLine, NotASubcomplex

__all__ = [
    "Barcode",
    "GridModule",
    "BettiTable",
    "MonotoneLine",
    "homology_dim",
    "persistence_barcode",
    "induced_rank",
    "rank_between",
    "hilbert_function",
    "bigraded_betti",
    "fibered_barcode",
    "bottleneck_distance",
]

INF = math.inf


# ---------------------------------------------------------------------------
# bigint GF(2) helpers
# ---------------------------------------------------------------------------

def _gf2_rank(columns) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for c in columns:
        while c:
            p = c.bit_length() - 1
            if p in pivots:
                c ^= pivots[p]
            else:
                pivots[p] = c
                rank += 1
                break
    return rank


def _boundary_columns(complex: SimplicialComplex, dim: int) -> list[int]:
    """Columns of the dim-boundary matrix as bigints over (dim-1)-simplices."""
    faces = {s: i for i, s in enumerate(complex.simplices(dim - 1))}
    cols = []
    for s in complex.simplices(dim):
        c = 0
        for i in range(len(s)):
            c ^= 1 << faces[s[:i] + s[i + 1:]]
        cols.append(c)
    return cols


def homology_dim(complex: SimplicialComplex, i: int) -> int:
    """dim H_i over Z/2 = dim ker(boundary_i) - rank(boundary_{i+1})."""
    n_i = len(complex.simplices(i))
    if n_i == 0:
        return 0
    rank_i = _gf2_rank(_boundary_columns(complex, i)) if i > 0 else 0
    rank_up = _gf2_rank(_boundary_columns(complex, i + 1))
    return n_i - rank_i - rank_up


# ---------------------------------------------------------------------------
# barcodes
# ---------------------------------------------------------------------------

@dataclass
class Barcode:
    """Multiset of (birth, death) intervals in one homology degree."""

    degree: int
    bars: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.bars = sorted((float(b), float(d)) for (b, d) in self.bars)
        for b, d in self.bars:
            if not b < d:
                raise ValueError(f"bar ({b}, {d}) must have birth < death")

    def n_bars(self) -> int:
        return len(self.bars)

    def finite(self) -> list[tuple[float, float]]:
        return [bd for bd in self.bars if math.isfinite(bd[1])]

    def infinite(self) -> list[tuple[float, float]]:
        return [bd for bd in self.bars if not math.isfinite(bd[1])]

    def alive_at(self, t: float) -> int:
        return sum(1 for (b, d) in self.bars if b <= t < d)

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "degree": self.degree,
            "bars": [[b, None if not math.isfinite(d) else d] for (b, d) in self.bars],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Barcode":
        bars = [(b, INF if d is None else d) for (b, d) in data["bars"]]
        return cls(int(data["degree"]), bars)


def _general_reduction(filtered: list[tuple], degree: int) -> list[tuple[float, float]]:
    """Plain bigint column reduction for filtrations of any dimension."""
    entry = {tuple(s): float(r) for s, r in filtered}
    simps = sorted(entry, key=lambda s: (entry[s], len(s), s))
    index = {s: p for p, s in enumerate(simps)}
    for s in simps:
        if len(s) > 1:
            for i in range(len(s)):
                f = s[:i] + s[i + 1:]
                if f not in entry:
                    raise MonotonicityViolation(f"missing face {f} of {s}")
                if entry[f] > entry[s]:
                    raise MonotonicityViolation(f"face {f} enters after {s}")
    cols = []
    for s in simps:
        c = 0
        if len(s) > 1:
            for i in range(len(s)):
                c ^= 1 << index[s[:i] + s[i + 1:]]
        cols.append(c)
    lowmap: dict[int, int] = {}
    killed = set()
    bars = []
    for p in range(len(simps)):
        c = cols[p]
        while c:
            low = c.bit_length() - 1
            if low in lowmap:
                c ^= cols[lowmap[low]]
            else:
                lowmap[low] = p
                killed.add(low)
                killed.add(p)
                if len(simps[low]) - 1 == degree:
                    b, d = entry[simps[low]], entry[simps[p]]
                    if b < d:
                        bars.append((b, d))
                break
        cols[p] = c
    for p in range(len(simps)):
        if p not in killed and cols[p] == 0 and len(simps[p]) - 1 == degree:
            bars.append((entry[simps[p]], INF))
    return bars


def _filtration_arrays(filtered: list[tuple]):
    """Split a (<= 2)-dimensional filtration into kernel input arrays."""
    verts, vlev, edges, elev, tris, tlev = [], [], [], [], [], []
    eindex: dict[tuple, int] = {}
    for s, r in filtered:
        s = tuple(s)
        d = len(s) - 1
        if d == 0:
            verts.append(s[0])
            vlev.append(r)
        elif d == 1:
            eindex[s] = len(edges)
            edges.append(s)
            elev.append(r)
        else:
            try:
                tris.append(
                    (eindex[(s[0], s[1])], eindex[(s[0], s[2])], eindex[(s[1], s[2])])
                )
            except KeyError as exc:
                raise MonotonicityViolation(f"missing edge of {s}") from exc
            tlev.append(r)
    n_vertices = (max(verts) + 1) if verts else 0
    return (
        np.array(verts, dtype=np.int64),
        np.array(vlev, dtype=float),
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(elev, dtype=float),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array(tlev, dtype=float),
        n_vertices,
    )


def persistence_barcode(filtered: list[tuple], degree: int) -> Barcode:
    """Barcode of a filtered complex given as (simplex, entry value) pairs.

    Zero-length bars are discarded; pairs follow the latest-added-destroys
    convention with simplices ordered by (entry, dimension, lex).
    """
    filtered = [(tuple(s), float(r)) for s, r in filtered]
    maxd = max((len(s) - 1 for s, _ in filtered), default=0)
    if maxd <= 2:
        va, vl, ea, el, ta, tl, nv = _filtration_arrays(filtered)
        vlev_of = {int(v): float(l) for v, l in zip(va, vl)}
        for (u, v), l in zip(ea, el):
            if vlev_of.get(int(u), INF) > l or vlev_of.get(int(v), INF) > l:
                raise MonotonicityViolation("edge enters before a vertex")
        for (a, b, c), l in zip(ta, tl):
            if max(el[a], el[b], el[c]) > l:
                raise MonotonicityViolation("triangle enters before an edge")
        res = reduction.persistence_pairs(va, vl, ea, el, ta, tl, nv)
        return Barcode(degree, reduction.bars_from_pairs(res, degree))
    return Barcode(degree, _general_reduction(filtered, degree))


def induced_rank(sub: SimplicialComplex, super: SimplicialComplex, i: int) -> int:
    """Rank of H_i(sub) -> H_i(super) for an inclusion of complexes.

    Computed from the two-step filtration (sub at 0, the rest of super at
    1): the rank counts degree-i classes born at step 0 that are still alive
    after step 1, i.e. essential classes with birth 0.
    """
    if not sub.is_subcomplex_of(super):
        raise NotASubcomplex("sub is not a subcomplex of super")
    filtered = []
    for s in super.all_simplices():
        filtered.append((s, 0.0 if sub.contains(s) else 1.0))
    maxd = max((len(s) - 1 for s, _ in filtered), default=0)
    if maxd <= 2:
        va, vl, ea, el, ta, tl, nv = _filtration_arrays(filtered)
        res = reduction.persistence_pairs(va, vl, ea, el, ta, tl, nv)
        ess = res["ess_birth"][res["ess_dim"] == i]
        return int(np.sum(ess == 0.0))
    bars = _general_reduction(filtered, i)
    return sum(1 for (b, d) in bars if b == 0.0 and not math.isfinite(d))


# ---------------------------------------------------------------------------
# grid modules
# ---------------------------------------------------------------------------

class GridModule:
    """Per-grid-point homology dimensions with on-demand induced ranks."""

    def __init__(self, grid: GridSpec, degree: int, dims: np.ndarray, backing=None):
        dims = np.asarray(dims, dtype=np.int64)
        if dims.shape != grid.shape:
            raise ValueError("dims shape must match the grid")
        if np.any(dims < 0):
            raise ValueError("dims must be nonnegative")
        self.grid = grid
        self.degree = degree
        self.dims = dims
        self.backing = backing

    def dim_at(self, ki: int, rj: int) -> int:
        return int(self.dims[ki, rj])

    def rank(self, a: tuple[int, int], b: tuple[int, int]) -> int:
        """Rank of the internal map between grid points (k index, r index).

        The target must dominate the source in J, i.e. have indices >= the
        source's on both axes (grid k values descend with the index).
        """
        (ai, aj), (bi, bj) = a, b
        if bi < ai or bj < aj:
            raise ValueError("target grid point must dominate the source in J")
        if (ai, aj) == (bi, bj):
            return int(self.dims[ai, aj])
        if self.backing is None:
            raise ValueError("no backing bifiltration for rank queries")
        ka, ra = float(self.grid.ks[ai]), float(self.grid.rs[aj])
        kb, rb = float(self.grid.ks[bi]), float(self.grid.rs[bj])
        return rank_between(self.backing, (ka, ra), (kb, rb), self.degree)

    def support_mask(self) -> np.ndarray:
        return self.dims > 0

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "degree": self.degree,
            "k": [float(x) for x in self.grid.ks],
            "r": [float(x) for x in self.grid.rs],
            "dims": self.dims.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridModule":
        grid = GridSpec(np.asarray(data["k"]), np.asarray(data["r"]))
        return cls(grid, int(data.get("degree", 0)), np.asarray(data["dims"]))


def hilbert_function(bif, degree: int, grid: GridSpec) -> GridModule:
    """Pointwise dim H_degree over the grid.

    Each density row is a one-parameter filtration in r; one reduction per
    row yields the dims at every grid r value.
    """
    dims = np.zeros(grid.shape, dtype=np.int64)
    for i, k in enumerate(grid.ks):
        va, vl, ea, el, ta, tl = bif.row_entry_levels(float(k))
        res = reduction.persistence_pairs(va, vl, ea, el, ta, tl, bif.n_vertices)
        dims[i] = reduction.alive_counts(res, degree, grid.rs)
    return GridModule(grid, degree, dims, backing=bif)


def rank_between(bif, a: tuple[float, float], b: tuple[float, float], degree: int) -> int:
    """Rank of H_degree(slice at a) -> H_degree(slice at b) for a <= b in J.

    Runs the two-step filtration over the shared simplex table: level 0 for
    simplices in the slice at a, level 1 for the rest of the slice at b.
    """
    (ka, ra), (kb, rb) = a, b
    if not (ka >= kb and ra <= rb):
        raise ValueError("need a <= b in the bifiltration order")
    va, vla, ea, ela, ta, tla = bif.row_entry_levels(float(ka))
    _, vlb, _, elb, _, tlb = bif.row_entry_levels(float(kb))

    def two_step(la, lb):
        lev = np.full(la.shape, np.inf)
        lev[lb <= rb] = 1.0
        lev[la <= ra] = 0.0
        return lev

    res = reduction.persistence_pairs(
        va, two_step(vla, vlb), ea, two_step(ela, elb), ta, two_step(tla, tlb),
        bif.n_vertices,
    )
    ess = res["ess_birth"][res["ess_dim"] == degree]
    return int(np.sum(ess == 0.0))


# ---------------------------------------------------------------------------
# bigraded Betti numbers
# ---------------------------------------------------------------------------

class _Slice:
    """Homology basis of one grid point over shared chain coordinates.

    ``ech``: echelonized cycle representatives (bigints over cell rows, with
    distinct top bits), a basis of H at this point.  ``coords(vec)`` returns
    the GF(2) coordinates of a cycle's class in this basis, computed against
    a frozen copy of the boundary pivot table.
    """

    def __init__(self, bnd_pivots: dict[int, int], reps: list[int]):
        self.bnd = bnd_pivots  # frozen: not mutated after construction
        self.ech: list[int] = []
        self._piv: dict[int, int] = {}
        for z in reps:
            c = self._reduce_bnd(z)
            while c:
                p = c.bit_length() - 1
                j = self._piv.get(p)
                if j is None:
                    break
                c ^= self.ech[j]
            if c:
                self._piv[c.bit_length() - 1] = len(self.ech)
                self.ech.append(c)

    @property
    def dim(self) -> int:
        return len(self.ech)

    def _reduce_bnd(self, vec: int) -> int:
        c = vec
        while c:
            p = c.bit_length() - 1
            got = self.bnd.get(p)
            if got is None:
                break
            c ^= got
        return c

    def coords(self, vec: int) -> int | None:
        """Coordinates (as a bitmask over basis indices) of vec's class."""
        c = self._reduce_bnd(vec)
        out = 0
        while c:
            p = c.bit_length() - 1
            j = self._piv.get(p)
            if j is None:
                return None
            c ^= self.ech[j]
            out ^= 1 << j
        return out


class _RowStream:
    """One density row of a bifiltration, streamed in r.

    Maintains the reduced boundary pivot table incrementally and produces
    homology bases and representative cycles at requested r values.
    """

    def __init__(self, bif, k: float, degree: int):
        va, vl, ea, el, ta, tl = bif.row_entry_levels(float(k))
        self.degree = degree
        self.va, self.vl, self.ea, self.el = va, vl, ea, el
        if degree == 0:
            self.cell_levels = vl
            self.vrow = {int(v): i for i, v in enumerate(va)}
            cols = [
                (el[i], (1 << self.vrow[int(ea[i, 0])]) ^ (1 << self.vrow[int(ea[i, 1])]))
                for i in range(len(ea))
            ]
        elif degree == 1:
            self.cell_levels = el
            self.vrow = {int(v): i for i, v in enumerate(va)}
            cols = [
                (tl[i], (1 << int(ta[i, 0])) ^ (1 << int(ta[i, 1])) ^ (1 << int(ta[i, 2])))
                for i in range(len(ta))
            ]
        else:
            raise ValueError("bigraded Betti supported for degrees 0 and 1")
        cols = [c for c in cols if math.isfinite(c[0])]
        cols.sort(key=lambda t: t[0])
        self._cols = cols
        self._ptr = 0
        self._pivots: dict[int, int] = {}

    def advance(self, r: float):
        while self._ptr < len(self._cols) and self._cols[self._ptr][0] <= r:
            c = self._cols[self._ptr][1]
            self._ptr += 1
            while c:
                p = c.bit_length() - 1
                got = self._pivots.get(p)
                if got is None:
                    self._pivots[p] = c
                    break
                c ^= got

    def slice_at(self, r: float) -> _Slice:
        self.advance(r)
        return _Slice(dict(self._pivots), self._reps(r))

    def _reps(self, r: float) -> list[int]:
        """Cycle representatives spanning H at (this row, r)."""
        if self.degree == 0:
            present = np.nonzero(self.cell_levels <= r)[0]
            if len(present) == 0:
                return []
            parent = {int(i): int(i) for i in present}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for i in range(len(self.ea)):
                if self.el[i] <= r:
                    u = self.vrow[int(self.ea[i, 0])]
                    v = self.vrow[int(self.ea[i, 1])]
                    ru, rv = find(u), find(v)
                    if ru != rv:
                        parent[ru] = rv
            roots: dict[int, int] = {}
            for i in present:
                roots.setdefault(find(int(i)), int(i))
            return [1 << rep for rep in roots.values()]

        # degree 1: fundamental cycles of non-forest edges present at r
        order = np.argsort(self.el, kind="stable")
        nv = len(self.va)
        parent = list(range(nv))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        adj: dict[int, list[tuple[int, int]]] = {}
        creators = []
        for ei in order:
            lev = self.el[ei]
            if not lev <= r:
                break
            u = self.vrow[int(self.ea[ei, 0])]
            v = self.vrow[int(self.ea[ei, 1])]
            ru, rv = find(u), find(v)
            if ru == rv:
                creators.append(int(ei))
            else:
                parent[ru] = rv
                adj.setdefault(u, []).append((v, int(ei)))
                adj.setdefault(v, []).append((u, int(ei)))
        reps = []
        for ei in creators:
            u = self.vrow[int(self.ea[ei, 0])]
            v = self.vrow[int(self.ea[ei, 1])]
            prev = {u: (-1, -1)}
            queue = [u]
            qi = 0
            while qi < len(queue):
                x = queue[qi]
                qi += 1
                if x == v:
                    break
                for (y, edge) in adj.get(x, []):
                    if y not in prev:
                        prev[y] = (x, edge)
                        queue.append(y)
            z = 1 << ei
            x = v
            while prev[x][0] != -1:
                x0, edge = prev[x]
                z ^= 1 << edge
                x = x0
            reps.append(z)
        return reps


@dataclass
class BettiTable:
    """Bigraded Betti numbers beta0/beta1/beta2 of one homology module."""

    grid: GridSpec
    degree: int
    beta0: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "degree": self.degree,
            "k": [float(x) for x in self.grid.ks],
            "r": [float(x) for x in self.grid.rs],
            "beta0": self.beta0.tolist(),
            "beta1": self.beta1.tolist(),
            "beta2": self.beta2.tolist(),
        }

    def euler_sum_at(self, ki: int, rj: int) -> int:
        """Sum of beta0 - beta1 + beta2 over grid points <= (ki, rj) in J."""
        block = (
            self.beta0[: ki + 1, : rj + 1]
            - self.beta1[: ki + 1, : rj + 1]
            + self.beta2[: ki + 1, : rj + 1]
        )
        return int(block.sum())


def bigraded_betti(bif, degree: int, grid: GridSpec) -> BettiTable:
    """Koszul-complex Betti numbers of H_degree restricted to the grid.

    At each grid point a with grid predecessors a-e1 (next larger k) and
    a-e2 (next smaller r), with homology bases written over shared chain
    coordinates:

        f: H(a-e1-e2) -> H(a-e1) (+) H(a-e2)     (diagonal)
        g: H(a-e1) (+) H(a-e2) -> H(a)           (sum; signs vanish mod 2)

    beta2 = dim ker f, beta0 = dim coker g, beta1 = dim ker g - rank f.
    Off-grid predecessors are zero spaces.
    """
    nk, nr = grid.shape
    beta0 = np.zeros((nk, nr), dtype=np.int64)
    beta1 = np.zeros((nk, nr), dtype=np.int64)
    beta2 = np.zeros((nk, nr), dtype=np.int64)

    prev_slices: list[_Slice] | None = None
    for i, k in enumerate(grid.ks):
        stream = _RowStream(bif, float(k), degree)
        cur_slices: list[_Slice] = [stream.slice_at(float(r)) for r in grid.rs]
        for j in range(nr):
            s_a = cur_slices[j]
            s_ke = prev_slices[j] if prev_slices is not None else None
            s_re = cur_slices[j - 1] if j > 0 else None
            s_kr = prev_slices[j - 1] if (prev_slices is not None and j > 0) else None
            d_ke = s_ke.dim if s_ke else 0
            d_re = s_re.dim if s_re else 0
            d_kr = s_kr.dim if s_kr else 0

            # f-matrix columns: coords of kr basis vectors in (ke, re)
            fcols = []
            if s_kr is not None:
                for z in s_kr.ech:
                    col = 0
                    if s_ke is not None:
                        co = s_ke.coords(z)
                        if co is None:
                            raise ArithmeticError("internal map left the module")
                        col |= co
                    if s_re is not None:
                        co = s_re.coords(z)
                        if co is None:
                            raise ArithmeticError("internal map left the module")
                        col |= co << d_ke
                    fcols.append(col)
            # g-matrix columns: coords of ke and re basis vectors in a
            gcols = []
            for src in (s_ke, s_re):
                if src is None:
                    continue
                for z in src.ech:
                    co = s_a.coords(z)
                    if co is None:
                        raise ArithmeticError("internal map left the module")
                    gcols.append(co)
            rank_f = _gf2_rank(fcols)
            rank_g = _gf2_rank(gcols)
            beta2[i, j] = d_kr - rank_f
            beta0[i, j] = s_a.dim - rank_g
            beta1[i, j] = (d_ke + d_re - rank_g) - rank_f
        prev_slices = cur_slices
    return BettiTable(grid, degree, beta0, beta1, beta2)


# ---------------------------------------------------------------------------
# fibered barcodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotoneLine:
    """Monotone ray through the bifiltration plane, arc-length parameterized.

    Built from two points (k non-increasing, r non-decreasing) or from
    (angle in degrees, offset): angle 0 sweeps the density axis only at
    r = offset; angle 90 sweeps the scale axis only at k = offset; between,
    the direction is (-cos(angle), sin(angle)) from anchor (anchor_k,
    offset).  The barcode lives on the ray t >= 0 from the origin point.
    """

    origin: tuple[float, float]
    direction: tuple[float, float]

    def __post_init__(self):
        dk, dr = float(self.direction[0]), float(self.direction[1])
        if dk > 1e-12 or dr < -1e-12 or (abs(dk) < 1e-15 and abs(dr) < 1e-15):
            raise NonMonotoneLine("line must move toward smaller k and larger r")
        norm = math.hypot(dk, dr)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "direction", (dk / norm, dr / norm))

    @classmethod
    def through(cls, p0, p1) -> "MonotoneLine":
        return cls((p0[0], p0[1]), (p1[0] - p0[0], p1[1] - p0[1]))

    @classmethod
    def from_angle_offset(cls, angle_deg: float, offset: float,
                          anchor_k: float) -> "MonotoneLine":
        if not 0.0 <= angle_deg <= 90.0:
            raise NonMonotoneLine("angle must lie in [0, 90] degrees")
        th = math.radians(angle_deg)
        if angle_deg == 90.0:
            return cls((float(offset), 0.0), (0.0, 1.0))
        return cls((float(anchor_k), float(offset)), (-math.cos(th), math.sin(th)))

    def at(self, t: float) -> tuple[float, float]:
        return (self.origin[0] + t * self.direction[0],
                self.origin[1] + t * self.direction[1])


def _flat_grades(bif: BifilteredComplex):
    cached = getattr(bif, "_flat_grades_cache", None)
    if cached is not None:
        return cached
    ptr = [0]
    gk, gr = [], []
    for gs in bif.grades:
        for (k, r) in gs:
            gk.append(k)
            gr.append(r)
        ptr.append(len(gk))
    out = (np.array(ptr), np.array(gk), np.array(gr))
    bif._flat_grades_cache = out
    return out


def fibered_barcode(bif, degree: int, line: MonotoneLine) -> Barcode:
    """Barcode of the restriction of H_degree to a monotone line.

    Each simplex enters at the smallest arc-length parameter t >= 0 whose
    line point dominates one of its minimal bigrades (never = absent);
    endpoints are arc-length coordinates along the line.
    """
    if isinstance(bif, DegreeBifiltration):
        bif = bif.explicit(getattr(bif, "grid", None))
    ptr, gk, gr = _flat_grades(bif)
    k0, r0 = line.origin
    dk, dr = line.direction
    if abs(dk) < 1e-15:
        tk = np.where(gk >= k0 - 1e-15, -np.inf, np.inf)
    else:
        tk = (gk - k0) / dk
    if abs(dr) < 1e-15:
        tr = np.where(gr <= r0 + 1e-15, -np.inf, np.inf)
    else:
        tr = (gr - r0) / dr
    hit = np.maximum(np.maximum(tk, tr), 0.0)
    entries = np.full(len(bif.simplices), np.inf)
    idx = np.repeat(np.arange(len(bif.simplices)), np.diff(ptr))
    np.minimum.at(entries, idx, hit)

    verts, vlev, edges, elev, tris, tlev = [], [], [], [], [], []
    eindex: dict[tuple, int] = {}
    for i, s in enumerate(bif.simplices):
        d = len(s) - 1
        if d == 0:
            verts.append(s[0])
            vlev.append(entries[i])
        elif d == 1:
            eindex[s] = len(edges)
            edges.append(s)
            elev.append(entries[i])
        elif d == 2:
            tris.append((eindex[(s[0], s[1])], eindex[(s[0], s[2])], eindex[(s[1], s[2])]))
            tlev.append(entries[i])
    res = reduction.persistence_pairs(
        np.array(verts, dtype=np.int64),
        np.array(vlev),
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(elev),
        np.array(tris, dtype=np.int64).reshape(-1, 3),
        np.array(tlev),
        bif.n_vertices,
    )
    return Barcode(degree, reduction.bars_from_pairs(res, degree))


# ---------------------------------------------------------------------------
# bottleneck distance
# ---------------------------------------------------------------------------

def _perfect_matching_exists(n_left: int, n_right: int, adjacency) -> bool:
    """Hungarian-style augmenting paths; adjacency(i) yields right nodes."""
    match_r = [-1] * n_right
    match_l = [-1] * n_left

    def augment(i, seen):
        for j in adjacency(i):
            if seen[j]:
                continue
            seen[j] = True
            if match_r[j] == -1 or augment(match_r[j], seen):
                match_r[j] = i
                match_l[i] = j
                return True
        return False

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * (n_left + n_right) + 100))
    try:
        for i in range(n_left):
            if not augment(i, [False] * n_right):
                return False
    finally:
        sys.setrecursionlimit(old)
    return True


def _matching_feasible(cost: np.ndarray, diag_a: np.ndarray, diag_b: np.ndarray,
                       eps: float) -> bool:
    """Augmented-graph feasibility: left = bars of A plus diagonal twins of
    B's bars; right = bars of B plus diagonal twins of A's bars.  Twin-twin
    edges are free, so a perfect matching exists iff every bar is matched
    within eps (to a bar or its own-side diagonal)."""
    na, nb = cost.shape
    tol = 1e-12

    def adjacency(i):
        if i < na:  # a bar of A
            for j in range(nb):
                if cost[i, j] <= eps + tol:
                    yield j
            if diag_a[i] <= eps + tol:
                yield nb + i  # its diagonal twin
        else:  # diagonal twin of B's bar (i - na)
            jb = i - na
            if diag_b[jb] <= eps + tol:
                yield jb
            for j in range(nb, nb + na):
                yield j  # twin-twin edges are free

    return _perfect_matching_exists(na + nb, nb + na, adjacency)


def bottleneck_distance(b1: Barcode, b2: Barcode) -> float:
    """Exact bottleneck distance between two barcodes.

    Finite bars may match the diagonal at half their length; infinite bars
    match only infinite bars (InfiniteMismatch when the counts differ) at
    the absolute difference of their births.
    """
    inf1 = sorted(b for (b, d) in b1.bars if not math.isfinite(d))
    inf2 = sorted(b for (b, d) in b2.bars if not math.isfinite(d))
    if len(inf1) != len(inf2):
        raise InfiniteMismatch("different numbers of infinite bars")
    base = max((abs(x - y) for x, y in zip(inf1, inf2)), default=0.0)

    fin1 = b1.finite()
    fin2 = b2.finite()
    if not fin1 and not fin2:
        return float(base)
    a = np.array(fin1, dtype=float).reshape(-1, 2)
    b = np.array(fin2, dtype=float).reshape(-1, 2)
    diag_a = (a[:, 1] - a[:, 0]) / 2.0
    diag_b = (b[:, 1] - b[:, 0]) / 2.0
    if len(a) and len(b):
        cost = np.maximum(
            np.abs(a[:, None, 0] - b[None, :, 0]),
            np.abs(a[:, None, 1] - b[None, :, 1]),
        )
    else:
        cost = np.zeros((len(a), len(b)))
    candidates = np.unique(np.concatenate([cost.ravel(), diag_a, diag_b, [base]]))
    candidates = candidates[candidates >= base - 1e-15]
    lo, hi = 0, len(candidates) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if _matching_feasible(cost, diag_a, diag_b, float(candidates[mid])):
            best = float(candidates[mid])
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:
        raise ArithmeticError("no feasible matching found")
    return float(max(best, base))
