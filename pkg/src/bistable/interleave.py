"""Forward-shift algebra, interleaving obstruction certificates, stability
audits, and the tightness / discontinuity counterexample generators.

An obstruction certificate proves two modules are NOT interleaved for a
given shift pair: whenever an interleaving exists, every internal map of M
across the composed shift factors through the other module at the shifted
point, so its rank is bounded by the dimension there.  A grid sweep that
finds rank > dimension is a certificate; finding none is inconclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .complexes import DegreeBifiltration, GridSpec, degree_rips_bifiltration
from .errors import GuardExceeded, ParameterOutOfWindow
from .homology import hilbert_function, rank_between
from .measures import EmpiricalMeasure, nested_uniform_bound, prohorov_bruteforce, prohorov_flow
from .metric import L1, FiniteMetricSpace, PointCloud, distance_matrix

__all__ = [
    "AffineShift",
    "compose",
    "shift_dominates",
    "ObstructionCertificate",
    "interleaving_obstruction",
    "stability_audit",
    "tightness_warmup",
    "tightness_main",
    "warmup_windows",
    "main_windows",
    "discontinuity_demo",
]


@dataclass(frozen=True)
class AffineShift:
    """Forward shift (k, r) -> (a*k - b, c*r + d) of the bifiltration poset.

    Forward means x <= shift(x) everywhere on the positive quadrant, which
    for this affine family is exactly a in (0, 1], b >= 0, c >= 1, d >= 0.
    """

    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a <= 1.0 and self.b >= 0.0 and self.c >= 1.0 and self.d >= 0.0):
            raise ValueError("not a forward shift: need a in (0,1], b,d >= 0, c >= 1")

    def apply(self, point) -> tuple[float, float]:
        k, r = point
        return (self.a * k - self.b, self.c * r + self.d)

    @classmethod
    def identity(cls) -> "AffineShift":
        return cls()

    @classmethod
    def translation(cls, delta: float) -> "AffineShift":
        """(k, r) -> (k - delta, r + delta)."""
        return cls(1.0, delta, 1.0, delta)

    @classmethod
    def scaled_translation(cls, delta: float, c: float = 3.0) -> "AffineShift":
        """(k, r) -> (k - delta, c*r + delta): the degree-stability shift."""
        return cls(1.0, delta, c, delta)

    @classmethod
    def density_rescale(cls, factor: float) -> "AffineShift":
        """(k, r) -> (factor*k, r) for factor in (0, 1]: the nested-data shift."""
        return cls(factor, 0.0, 1.0, 0.0)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


def compose(s1: AffineShift, s2: AffineShift) -> AffineShift:
    """The shift s2 after s1 (fieldwise; composition stays a forward shift)."""
    return AffineShift(
        s1.a * s2.a,
        s2.a * s1.b + s2.b,
        s1.c * s2.c,
        s2.c * s1.d + s2.d,
    )


def shift_dominates(s1: AffineShift, s2: AffineShift) -> bool:
    """True iff s1(x) <= s2(x) for every x in the positive quadrant.

    Decided exactly on the fields: a1*k - b1 >= a2*k - b2 for all k > 0 and
    c1*r + d1 <= c2*r + d2 for all r > 0 iff a1 >= a2, b1 <= b2, c1 <= c2,
    d1 <= d2.
    """
    return s1.a >= s2.a and s1.b <= s2.b and s1.c <= s2.c and s1.d <= s2.d


@dataclass(frozen=True)
class ObstructionCertificate:
    """A grid point where an internal-map rank exceeds the other module's
    dimension at the shifted point, refuting a (gamma, kappa)-interleaving."""

    base: tuple[float, float]
    gamma: AffineShift
    kappa: AffineShift
    degree: int
    rank: int
    bound: int
    side: str  # "M" or "N"

    def __post_init__(self):
        if not self.rank > self.bound:
            raise ValueError("certificate needs rank > bound")
        if self.side not in ("M", "N"):
            raise ValueError("side must be M or N")

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "base": [self.base[0], self.base[1]],
            "gamma": self.gamma.to_dict(),
            "kappa": self.kappa.to_dict(),
            "degree": self.degree,
            "rank": self.rank,
            "bound": self.bound,
            "side": self.side,
        }


def _snap_up(grid: GridSpec, point) -> tuple[int, int] | None:
    """Grid indices of the smallest grid point above ``point`` in J.

    Unlike coarsening, obstruction snapping must stay above the point on
    BOTH axes (otherwise the factorization bound is invalid), so a k below
    the smallest grid line means no valid snap.
    """
    k, r = point
    if k <= 0:
        return None
    asc = grid.ks[::-1]
    j = int(np.searchsorted(asc, k + 1e-12, side="right")) - 1
    if j < 0:
        return None
    ki = grid.ks.size - 1 - j
    ri = grid.snap_r_index(r - 1e-12)
    if ri is None:
        return None
    return ki, ri


class _SweepStats:
    def __init__(self):
        self.evaluated = 0
        self.skipped_range = 0
        self.skipped_guard = 0
        self.nonzero_rank_points = 0


def _triangle_count_at(bif, k: float, r: float) -> int:
    _, _, _, _, _, tlev = bif.row_entry_levels(float(k))
    if len(tlev) == 0:
        return 0
    return int(np.sum(tlev <= r))


def _one_sided_sweep(m_bif, n_dims_grid, grid: GridSpec, degree: int,
                     first: AffineShift, second: AffineShift, side: str,
                     stats: _SweepStats, simplex_guard: int,
                     record: tuple[AffineShift, AffineShift]):
    """Scan base grid points a: a certificate fires when the rank of M
    across a -> snap(second(snap(first(a)))) exceeds dim N at snap(first(a)).
    """
    for ai, k in enumerate(grid.ks):
        for aj, r in enumerate(grid.rs):
            base = (float(k), float(r))
            p = _snap_up(grid, first.apply(base))
            if p is None:
                stats.skipped_range += 1
                continue
            p_val = (float(grid.ks[p[0]]), float(grid.rs[p[1]]))
            q = _snap_up(grid, second.apply(p_val))
            if q is None:
                stats.skipped_range += 1
                continue
            q_val = (float(grid.ks[q[0]]), float(grid.rs[q[1]]))
            if simplex_guard and _triangle_count_at(m_bif, q_val[0], q_val[1]) > simplex_guard:
                stats.skipped_guard += 1
                continue
            stats.evaluated += 1
            rank = rank_between(m_bif, base, q_val, degree)
            if rank > 0:
                stats.nonzero_rank_points += 1
            bound = int(n_dims_grid[p[0], p[1]])
            if rank > bound:
                return ObstructionCertificate(
                    base=base,
                    gamma=record[0],
                    kappa=record[1],
                    degree=degree,
                    rank=rank,
                    bound=bound,
                    side=side,
                )
    return None


def interleaving_obstruction(m_bif, n_bif, degree: int, gamma: AffineShift,
                             kappa: AffineShift, grid: GridSpec,
                             simplex_guard: int = 2_000_000,
                             return_stats: bool = False):
    """Search the grid for a rank obstruction to a (gamma, kappa)-interleaving.

    The M-side test at base a composes M_a -> N_gamma(a) -> M_kappa(gamma(a));
    the N-side swaps roles and composes through kappa first.  Shifted points
    snap upward in J onto the grid, which can only weaken the test; base
    points whose shifted images leave the grid (or the positive quadrant)
    are skipped.  Returns the first certificate in row-major order (M-side
    sweep first), else None --- which does NOT certify that an interleaving
    exists.
    """
    m_dims = hilbert_function(m_bif, degree, grid).dims
    n_dims = hilbert_function(n_bif, degree, grid).dims
    stats = _SweepStats()
    cert = _one_sided_sweep(m_bif, n_dims, grid, degree, gamma, kappa, "M",
                            stats, simplex_guard, record=(gamma, kappa))
    if cert is None:
        cert = _one_sided_sweep(n_bif, m_dims, grid, degree, kappa, gamma, "N",
                                stats, simplex_guard, record=(gamma, kappa))
    if return_stats:
        return cert, stats
    return cert


# ---------------------------------------------------------------------------
# stability audits
# ---------------------------------------------------------------------------

def stability_audit(x_data, y_data, mode: str, degree: int, grid: GridSpec,
                    nested: bool = False, delta: float | None = None,
                    slack_eps: float = 1e-6, maxdim: int = 2,
                    c_probe: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5, 3.0),
                    simplex_guard: int = 2_000_000,
                    flow_tol: float = 1e-6) -> dict:
    """Audit the degree-bifiltration stability guarantees on a data pair.

    Computes a Prohorov bound delta0 (exact when both data sets embed in a
    common ambient cloud, else the nested-sets bound), composes the
    coarsening slack into the shifts, and sweeps for obstructions under the
    guaranteed shift pair --- which must find nothing.  A separate probe
    reports, per candidate c below 3, whether the scaled shift fires.
    """
    if mode not in ("degree_rips", "degree_cech"):
        raise ValueError("mode must be degree_rips or degree_cech")
    m_bif, n_bif, delta0, provenance = _audit_setup(x_data, y_data, mode, maxdim,
                                                    grid, nested, flow_tol)
    if delta is None:
        delta = delta0 + slack_eps
    if delta <= delta0:
        raise ValueError("delta must exceed the Prohorov bound")

    slack = AffineShift(1.0, grid.k_step, 1.0, grid.r_step)
    back_shift = compose(AffineShift.scaled_translation(delta, 3.0), slack)
    if nested:
        # forward direction is the density rescale (the subset includes into
        # the superset after rescaling k); the back direction pays delta
        n_x = x_data.total_multiplicity if isinstance(x_data, PointCloud) else x_data.n
        n_y = y_data.total_multiplicity if isinstance(y_data, PointCloud) else y_data.n
        fwd_shift = compose(AffineShift.density_rescale(n_x / n_y), slack)
    else:
        fwd_shift = back_shift

    cert, stats = interleaving_obstruction(
        m_bif, n_bif, degree, fwd_shift, back_shift, grid,
        simplex_guard=simplex_guard, return_stats=True,
    )
    vacuous = stats.evaluated == 0 or stats.nonzero_rank_points == 0

    probe = []
    for c in c_probe:
        back_c = compose(AffineShift.scaled_translation(delta, c), slack)
        fwd_c = fwd_shift if nested else back_c
        cert_c = interleaving_obstruction(
            m_bif, n_bif, degree, fwd_c, back_c, grid,
            simplex_guard=simplex_guard,
        )
        probe.append({"c": c, "fired": cert_c is not None})

    return {
        "schema": "bistable/1",
        "mode": mode,
        "nested": nested,
        "degree": degree,
        "delta": delta,
        "delta_bound": delta0,
        "delta_provenance": provenance,
        "consistent": cert is None,
        "certificate": None if cert is None else cert.to_dict(),
        "vacuous": bool(vacuous),
        "evaluated_points": stats.evaluated,
        "skipped_out_of_range": stats.skipped_range,
        "skipped_by_guard": stats.skipped_guard,
        "tightness_probe": probe,
    }


def _audit_setup(x_data, y_data, mode: str, maxdim: int, grid: GridSpec,
                 nested: bool, flow_tol: float):
    from .complexes import degree_cech_bifiltration

    r_cap = float(grid.rs[-1]) * 3.5  # covers shifted rank targets
    if mode == "degree_cech":
        if not (isinstance(x_data, PointCloud) and isinstance(y_data, PointCloud)):
            raise TypeError("degree_cech mode needs PointCloud data")
        m_bif = degree_cech_bifiltration(x_data, maxdim, r_max=r_cap)
        n_bif = degree_cech_bifiltration(y_data, maxdim, r_max=r_cap)
    else:
        sx = x_data if isinstance(x_data, FiniteMetricSpace) else distance_matrix(x_data)
        sy = y_data if isinstance(y_data, FiniteMetricSpace) else distance_matrix(y_data)
        m_bif = degree_rips_bifiltration(sx, maxdim, r_max=r_cap)
        n_bif = degree_rips_bifiltration(sy, maxdim, r_max=r_cap)

    if isinstance(x_data, PointCloud) and isinstance(y_data, PointCloud) \
            and x_data.dim == y_data.dim and x_data.metric == y_data.metric:
        merged = PointCloud.from_points(
            np.vstack([x_data.points, y_data.points]),
            metric=x_data.metric,
            multiplicities=np.concatenate([x_data.multiplicities, y_data.multiplicities]),
        )
        mu = EmpiricalMeasure(
            merged, np.arange(x_data.n_distinct),
            x_data.multiplicities / x_data.total_multiplicity,
        )
        eta = EmpiricalMeasure(
            merged,
            np.arange(x_data.n_distinct, merged.n_distinct),
            y_data.multiplicities / y_data.total_multiplicity,
        )
        try:
            delta0 = prohorov_bruteforce(mu, eta)
            provenance = "exact (subset enumeration)"
        except GuardExceeded:
            delta0 = prohorov_flow(mu, eta, flow_tol)
            provenance = "exact (flow, tol %g)" % flow_tol
    elif nested:
        n_x = x_data.total_multiplicity if isinstance(x_data, PointCloud) else x_data.n
        n_y = y_data.total_multiplicity if isinstance(y_data, PointCloud) else y_data.n
        delta0 = nested_uniform_bound(n_x, n_y)
        provenance = "nested-sets bound |Y\\X|/|X|"
    else:
        raise ValueError("need a common ambient cloud or nested data for delta")
    return m_bif, n_bif, float(delta0), provenance


# ---------------------------------------------------------------------------
# tightness constructions
# ---------------------------------------------------------------------------

def warmup_windows(c: float, r0: float | None = None, delta: float | None = None,
                   eps: float | None = None) -> tuple[float, float, float]:
    """Validated (r0, delta, eps) for the three-point construction.

    Requirements: c in [1, 2); delta in (1/4, 3/8); r0 above both
    1/(2(2-c)) and delta/(1 - c/2); eps in (0, (r0(1 - c/2) - delta)/c].
    Defaults sit strictly inside the windows.
    """
    if not 1.0 <= c < 2.0:
        raise ParameterOutOfWindow("c must lie in [1, 2)")
    if delta is None:
        delta = 0.26
    if not 0.25 < delta < 0.375:
        raise ParameterOutOfWindow("delta must lie in (1/4, 3/8)")
    r_lo = max(1.0 / (2.0 * (2.0 - c)), delta / (1.0 - c / 2.0))
    if r0 is None:
        r0 = 1.05 * r_lo
    if r0 <= r_lo:
        raise ParameterOutOfWindow(
            f"r0 must exceed max(1/(2(2-c)), delta/(1-c/2)) = {r_lo:.6g}"
        )
    eps_hi = (r0 * (1.0 - c / 2.0) - delta) / c
    if eps is None:
        eps = eps_hi / 2.0
    if not 0.0 < eps <= eps_hi:
        raise ParameterOutOfWindow(f"eps must lie in (0, {eps_hi:.6g}]")
    return float(r0), float(delta), float(eps)


def _basis_cloud(r0: float, with_origin: bool, copies: int = 1) -> PointCloud:
    pts = [r0 * np.eye(3)[i] for i in range(3)]
    mult = [copies] * 3
    if with_origin:
        pts.append(np.zeros(3))
        mult.append(1)
    return PointCloud.from_points(np.array(pts), metric=L1, multiplicities=mult)


def _exact_grid(bifs, extra_ks=(), extra_rs=(), r_pad: float = 1.0) -> GridSpec:
    ks = set(float(x) for x in extra_ks)
    rs = set(float(x) for x in extra_rs)
    for bif in bifs:
        ks.update(float(x) for x in bif.critical_ks())
        rs.update(float(x) for x in bif.critical_rs())
    rs.add(max(rs) + r_pad)
    ks = sorted(k for k in ks if k > 0)[::-1]
    rs = sorted(r for r in rs if r >= 0)
    if rs and rs[0] == 0.0 and len(rs) > 2:
        rs = rs  # keep 0 in the grid: entries at radius 0 are real grades
    return GridSpec(np.array(ks), np.array(rs))


def tightness_warmup(c: float = 1.5, r0: float | None = None,
                     delta: float | None = None, eps: float | None = None):
    """Three-points-plus-origin counterexample: the scaled shift with the
    given c < 2 admits no interleaving between the two degree-Rips modules,
    witnessed by a degree-0 rank obstruction.

    Returns (Y cloud, Z cloud, certificate); parameters outside the
    validated windows raise ParameterOutOfWindow.
    """
    r0, delta, eps = warmup_windows(c, r0, delta, eps)
    y_cloud = _basis_cloud(r0, with_origin=False)
    z_cloud = _basis_cloud(r0, with_origin=True)
    m_bif = degree_rips_bifiltration(distance_matrix(z_cloud), 1)
    n_bif = degree_rips_bifiltration(distance_matrix(y_cloud), 1)
    base = (0.75, r0 / 2.0 + eps)
    gamma = AffineShift.scaled_translation(delta, c)
    # the designated base point of the construction
    g1 = gamma.apply(base)
    g2 = gamma.apply(g1)
    rank = rank_between(m_bif, base, g2, 0)
    bound = rank_between(n_bif, g1, g1, 0)
    if rank > bound:
        cert = ObstructionCertificate(base=base, gamma=gamma, kappa=gamma,
                                      degree=0, rank=rank, bound=bound, side="M")
    else:
        grid = _exact_grid(
            [m_bif, n_bif],
            extra_ks=[0.75, 0.75 - delta, 0.75 - 2 * delta],
            extra_rs=[base[1], g1[1], g2[1]],
        )
        cert = interleaving_obstruction(m_bif, n_bif, 0, gamma, gamma, grid)
    if cert is None:
        raise ArithmeticError("warmup certificate must exist inside the window")
    return y_cloud, z_cloud, cert


def main_windows(m: int, copies: int, c: float, r0: float | None = None,
                 delta: float | None = None, eps: float | None = None):
    """Validated parameters for the cycle construction at desk scale.

    The cycle of m sites (m = 0 mod 4, m >= 12) with ``copies`` copies of
    each off-site cluster point gives n = m(3*copies + 1) expanded points.
    The derivation scales the published inequalities; the chord-collapse
    bound caps c at sqrt(ceil(m/3)) strictly below the asymptotic 3, and
    the double-shifted base point constrains delta below (3*copies + 3) /
    (2n), which undercuts the Prohorov bound m/n unless
    2m < 3*copies + 3 --- the returned flag records whether the chosen
    delta is theorem-grade (above the bound) or merely construction-grade.
    """
    if m % 4 != 0 or m < 12:
        raise ParameterOutOfWindow("m must be a multiple of 4, at least 12")
    if copies < 2:
        raise ParameterOutOfWindow("copies must be at least 2")
    n = m * (3 * copies + 1)
    kcap = math.ceil(m / 3) - 1
    c_cap = math.sqrt(kcap + 1)
    if not 1.0 <= c < c_cap:
        raise ParameterOutOfWindow(
            f"c must lie in [1, {c_cap:.4g}) at cycle length {m}"
        )
    if r0 is None:
        r0 = 1.0
    k0 = (3 * copies + 3) / n
    dpr_bound = m / n
    delta_hi = min(k0 / 2.0, r0 * (3.0 - c) / 2.0)
    if delta is None:
        if dpr_bound < delta_hi:
            delta = (dpr_bound + delta_hi) / 2.0
        else:
            delta = 0.8 * delta_hi
    if not 0.0 < delta < delta_hi:
        raise ParameterOutOfWindow(f"delta must lie in (0, {delta_hi:.6g})")
    theorem_grade = delta > dpr_bound
    eps_hi = min(r0 / 2.0, (r0 * (3.0 - c) - 2.0 * delta) / (2.0 * c))
    # chord collapse: the double-shifted radius must keep cycle chords short
    def q_radius(e):
        return c * c * (r0 / 2.0 + e) + (c + 1.0) * delta

    eps_cap = eps_hi
    while eps_cap > 1e-12 and 2.0 * q_radius(eps_cap) > r0 * (kcap + 1):
        eps_cap *= 0.5
    if eps is None:
        eps = eps_cap / 2.0
    if not 0.0 < eps <= eps_hi:
        raise ParameterOutOfWindow(f"eps must lie in (0, {eps_hi:.6g}]")
    if 2.0 * q_radius(eps) > r0 * (kcap + 1):
        raise ParameterOutOfWindow(
            "double-shifted radius breaks the chord-collapse bound"
        )
    return {
        "m": m,
        "copies": copies,
        "n": n,
        "c": float(c),
        "c_cap": c_cap,
        "r0": float(r0),
        "delta": float(delta),
        "eps": float(eps),
        "k0": k0,
        "prohorov_bound": dpr_bound,
        "theorem_grade_delta": bool(theorem_grade),
    }


def _cycle_clouds(m: int, copies: int, r0: float) -> tuple[PointCloud, PointCloud]:
    """The W (clusters only) and X (clusters plus cycle sites) clouds.

    Sites sit on the perimeter of a square with side m/4 and unit spacing,
    scaled by r0, in the first two coordinates of R^(2+3m); the cluster of
    site i holds the three scaled basis vectors of block i with the given
    multiplicity.  Under the L1 metric, consecutive sites are r0 apart and
    site-to-site distance is r0 times the cyclic separation.
    """
    side = m // 4
    sq = []
    for x in range(side + 1):
        sq.append((x, 0))
    for y in range(1, side + 1):
        sq.append((side, y))
    for x in range(side - 1, -1, -1):
        sq.append((x, side))
    for y in range(side - 1, 0, -1):
        sq.append((0, y))
    assert len(sq) == m
    dim = 2 + 3 * m
    cluster_pts = []
    for i in range(m):
        for j in range(3):
            p = np.zeros(dim)
            p[0], p[1] = sq[i]
            p[2 + 3 * i + j] = 1.0
            cluster_pts.append(p)
    site_pts = []
    for i in range(m):
        p = np.zeros(dim)
        p[0], p[1] = sq[i]
        site_pts.append(p)
    w_cloud = PointCloud.from_points(
        r0 * np.array(cluster_pts), metric=L1,
        multiplicities=[copies] * len(cluster_pts),
    )
    x_cloud = PointCloud.from_points(
        r0 * np.vstack([np.array(cluster_pts), np.array(site_pts)]), metric=L1,
        multiplicities=[copies] * len(cluster_pts) + [1] * m,
    )
    return w_cloud, x_cloud


def tightness_main(m: int = 12, copies: int = 5, c: float = 1.5,
                   r0: float | None = None, delta: float | None = None,
                   eps: float | None = None, simplex_guard: int = 2_500_000,
                   expanded_guard: int = 2000):
    """Cycle counterexample at desk scale: a degree-1 rank obstruction to the
    scaled shift below the derived cap.

    Returns (W cloud, X cloud, certificate, report).  The report records the
    derived windows, the verified slice facts, and whether the chosen delta
    exceeds the Prohorov bound (paper-scale constants cannot, at this size;
    the limitation is stated rather than hidden).
    """
    win = main_windows(m, copies, c, r0, delta, eps)
    r0, delta, eps = win["r0"], win["delta"], win["eps"]
    n = win["n"]
    if n > expanded_guard:
        raise GuardExceeded(
            f"expanded point count {n} exceeds the guard {expanded_guard}; "
            f"use desk-scale parameters such as m=12, copies=5"
        )
    w_cloud, x_cloud = _cycle_clouds(m, copies, r0)
    base = (win["k0"], r0 / 2.0 + eps)
    gamma = AffineShift.scaled_translation(delta, c)
    g1 = gamma.apply(base)
    g2 = gamma.apply(g1)
    x_bif = degree_rips_bifiltration(distance_matrix(x_cloud), 2, r_max=g2[1] * 1.05)
    w_bif = degree_rips_bifiltration(distance_matrix(w_cloud), 2, r_max=g2[1] * 1.05)
    if _triangle_count_at(x_bif, g2[0], g2[1]) > simplex_guard:
        raise GuardExceeded("double-shifted slice exceeds the simplex guard")

    # the three slice facts behind the certificate
    facts = {
        "base_h0": rank_between(x_bif, base, base, 0),
        "base_h1": rank_between(x_bif, base, base, 1),
        "shifted_w_h1": rank_between(w_bif, g1, g1, 1),
        "double_shift_rank_h1": rank_between(x_bif, base, g2, 1),
    }
    grid = GridSpec(
        np.array(sorted({base[0], g1[0], g2[0], win["k0"] / 2}, reverse=True)),
        np.array(sorted({base[1], g1[1], g2[1]})),
    )
    cert = interleaving_obstruction(x_bif, w_bif, 1, gamma, gamma, grid,
                                    simplex_guard=simplex_guard)
    report = {
        "schema": "bistable/1",
        "windows": win,
        "facts": facts,
        "limitation": (
            "desk-scale cap: c < sqrt(ceil(m/3)) instead of the asymptotic 3; "
            "delta exceeds the Prohorov bound only when 2m < 3*copies + 3"
            + ("" if win["theorem_grade_delta"] else
               " (NOT satisfied here: the certificate refutes interleaving at "
               "this delta, below the robustness bound)")
        ),
    }
    if cert is None:
        raise ArithmeticError("main-construction certificate must exist inside the window")
    return w_cloud, x_cloud, cert, report


def discontinuity_demo(nmax: int = 8) -> dict:
    """Degree bifiltrations are discontinuous in the Prohorov metric: the
    measures of basis-points-plus-origin converge to the measure of the bare
    basis while a fixed grid point's degree-0 dimension never does.
    """
    if nmax < 2:
        raise ValueError("nmax must be at least 2")
    grid = GridSpec(
        np.array([1.0, 0.75, 0.5, 1.0 / 3.0, 0.25]),
        np.array([0.25, 0.5, 0.75, 1.0, 1.25]),
    )
    y_cloud = PointCloud.from_points(np.eye(3), metric=L1)
    y_dims = hilbert_function(
        degree_rips_bifiltration(distance_matrix(y_cloud), 1), 0, grid
    ).dims
    rows = []
    dims_by_n = []
    for n in range(1, nmax + 1):
        z_cloud = PointCloud.from_points(
            np.vstack([np.eye(3), np.zeros((1, 3))]), metric=L1,
            multiplicities=[n, n, n, 1],
        )
        merged = PointCloud.from_points(
            np.vstack([np.eye(3), np.zeros((1, 3))]), metric=L1,
        )
        nu_z = EmpiricalMeasure(
            merged, np.arange(4),
            np.array([n, n, n, 1.0]) / (3 * n + 1),
        )
        nu_y = EmpiricalMeasure(merged, np.arange(3), np.full(3, 1.0 / 3.0))
        dpr = prohorov_bruteforce(nu_z, nu_y)
        z_dims = hilbert_function(
            degree_rips_bifiltration(distance_matrix(z_cloud), 1), 0, grid
        ).dims
        dims_by_n.append(z_dims)
        rows.append({"n": n, "prohorov": dpr, "bound": 1.0 / (3 * n)})
    witness = None
    for ki in range(grid.ks.size):
        for rj in range(grid.rs.size):
            if all(int(d[ki, rj]) != int(y_dims[ki, rj]) for d in dims_by_n):
                witness = (float(grid.ks[ki]), float(grid.rs[rj]))
                break
        if witness:
            break
    return {
        "schema": "bistable/1",
        "sequence": rows,
        "witness": witness,
        "witness_dims": None if witness is None else {
            "limit": int(y_dims[grid.snap_k_index(witness[0]), grid.snap_r_index(witness[1])]),
            "along_sequence": [
                int(d[grid.snap_k_index(witness[0]), grid.snap_r_index(witness[1])])
                for d in dims_by_n
            ],
        },
        "grid": {"k": grid.ks.tolist(), "r": grid.rs.tolist()},
    }
