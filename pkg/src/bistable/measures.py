"""Empirical measures, Prohorov and Wasserstein distances, their bounds,
and the measure-bifiltration membership and stability checks.

The Prohorov distance between atomic measures is computed two ways: an
exact subset-enumeration brute force (the oracle) and a Strassen-style
max-flow feasibility search (the scalable path), validated against each
other in the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import GuardExceeded, MassMismatch
from .metric import FiniteMetricSpace, PointCloud, pairwise_distances

__all__ = [
    "EmpiricalMeasure",
    "prohorov_bruteforce",
    "prohorov_flow",
    "wasserstein_p",
    "check_pr_wass_bounds",
    "measure_bifiltration_contains",
    "verify_measure_stability",
    "nested_uniform_bound",
    "prohorov_upper_via_embedding",
]

#: total mass within this of 1 counts as a probability measure
_NORMALIZED_TOL = 1e-12

#: brute-force subset guard (per-measure support size)
_BRUTE_GUARD = 22


def _ground_points(ground) -> np.ndarray | None:
    if isinstance(ground, PointCloud):
        return ground.points
    return None


def _ground_dist(ground) -> np.ndarray:
    if isinstance(ground, PointCloud):
        return pairwise_distances(ground.points, ground.metric)
    if isinstance(ground, FiniteMetricSpace):
        return ground.dist
    raise TypeError("ground must be a PointCloud or FiniteMetricSpace")


@dataclass
class EmpiricalMeasure:
    """Weighted atoms over a shared ground space.

    Atoms index the ground's distinct points (PointCloud) or rows
    (FiniteMetricSpace); weights are nonnegative with positive total.
    """

    ground: object
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.atoms.shape != self.weights.shape:
            raise ValueError("one weight per atom")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if not 0 < float(self.weights.sum()) < math.inf:
            raise ValueError("total mass must be positive and finite")

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def normalized(self) -> bool:
        return abs(self.total_mass - 1.0) <= _NORMALIZED_TOL

    @classmethod
    def uniform(cls, ground) -> "EmpiricalMeasure":
        """Uniform probability measure; cloud multiplicities weight atoms."""
        if isinstance(ground, PointCloud):
            w = ground.multiplicities.astype(float)
            return cls(ground, np.arange(ground.n_distinct), w / w.sum())
        n = ground.n
        return cls(ground, np.arange(n), np.full(n, 1.0 / n))

    @classmethod
    def counting(cls, ground) -> "EmpiricalMeasure":
        """Unnormalized counting measure (multiplicity per atom)."""
        if isinstance(ground, PointCloud):
            return cls(ground, np.arange(ground.n_distinct),
                       ground.multiplicities.astype(float))
        return cls(ground, np.arange(ground.n), np.ones(ground.n))

    @classmethod
    def dirac(cls, ground, atom: int, mass: float = 1.0) -> "EmpiricalMeasure":
        return cls(ground, np.array([atom]), np.array([float(mass)]))

    def support(self) -> np.ndarray:
        return self.atoms[self.weights > 0]

    def to_dict(self) -> dict:
        return {
            "schema": "bistable/1",
            "atoms": [int(a) for a in self.atoms],
            "weights": [float(w) for w in self.weights],
        }


def _common_support(mu: EmpiricalMeasure, eta: EmpiricalMeasure):
    """Distances and per-measure weights over the merged support.

    Atoms at ground distance 0 are identical for measure purposes and get
    merged, which keeps multiset-heavy supports small.
    """
    if mu.ground is not eta.ground:
        raise ValueError("measures must share a ground space")
    dist = _ground_dist(mu.ground)
    atoms = np.unique(np.concatenate([mu.support(), eta.support()]))
    # merge zero-distance classes
    classes: list[int] = []
    rep_of = {}
    for a in atoms:
        for rep in classes:
            if dist[a, rep] == 0.0:
                rep_of[a] = rep
                break
        else:
            classes.append(int(a))
            rep_of[a] = int(a)
    index = {rep: i for i, rep in enumerate(classes)}
    s = len(classes)
    wmu = np.zeros(s)
    weta = np.zeros(s)
    for a, w in zip(mu.atoms, mu.weights):
        if w > 0:
            wmu[index[rep_of[int(a)]]] += w
    for a, w in zip(eta.atoms, eta.weights):
        if w > 0:
            weta[index[rep_of[int(a)]]] += w
    d = dist[np.ix_(classes, classes)]
    return d, wmu, weta


@njit(cache=True)
def _one_sided_sup(d, w_from, w_to):
    """sup over subsets A of supp(w_from) of inf{delta >= 0 :
    w_from(A) <= w_to(A^delta) + delta}, with A^delta = {y : d(y, A) < delta}.

    Enlarging A off the support of w_from only grows A^delta, so restricting
    A to that support is exact.
    """
    s = d.shape[0]
    sup_idx = np.empty(s, dtype=np.int64)
    n_sup = 0
    for i in range(s):
        if w_from[i] > 0:
            sup_idx[n_sup] = i
            n_sup += 1
    best = 0.0
    dvec = np.empty(s)
    thresholds = np.empty(s + 1)
    for mask in range(1, 1 << n_sup):
        mass_a = 0.0
        for i in range(s):
            dvec[i] = np.inf
        for bi in range(n_sup):
            if (mask >> bi) & 1:
                a = sup_idx[bi]
                mass_a += w_from[a]
                for i in range(s):
                    if d[i, a] < dvec[i]:
                        dvec[i] = d[i, a]
        # thresholds: distinct values of d(y, A) for target atoms, plus 0
        nt = 0
        thresholds[nt] = 0.0
        nt += 1
        for i in range(s):
            if w_to[i] > 0 and np.isfinite(dvec[i]):
                thresholds[nt] = dvec[i]
                nt += 1
        ths = np.sort(thresholds[:nt])
        # on (ths[j], ths[j+1]]: A^delta = {y : d(y,A) <= ths[j]}
        t_a = np.inf
        for j in range(nt):
            seg_start = ths[j]
            seg_end = ths[j + 1] if j + 1 < nt else np.inf
            covered = 0.0
            for i in range(s):
                if w_to[i] > 0 and dvec[i] <= seg_start:
                    covered += w_to[i]
            need = mass_a - covered
            cand = seg_start if need <= seg_start else need
            if cand <= seg_end:
                t_a = cand
                break
        if t_a > best:
            best = t_a
    return best


def prohorov_bruteforce(mu: EmpiricalMeasure, eta: EmpiricalMeasure) -> float:
    """Exact Prohorov distance by subset enumeration.

    The two one-sided conditions decouple: each direction's supremum is
    attained on subsets of that measure's own support, and the infimum over
    feasible deltas for a fixed subset lands on the candidate set of atom
    distances and achievable mass differences.
    """
    d, wmu, weta = _common_support(mu, eta)
    n1 = int(np.sum(wmu > 0))
    n2 = int(np.sum(weta > 0))
    if max(n1, n2) > _BRUTE_GUARD:
        raise GuardExceeded(
            f"support sizes {n1}/{n2} exceed the brute-force guard {_BRUTE_GUARD}"
        )
    return float(max(_one_sided_sup(d, wmu, weta), _one_sided_sup(d, weta, wmu)))


# ---------------------------------------------------------------------------
# Strassen-style flow feasibility
# ---------------------------------------------------------------------------

@njit(cache=True)
def _max_bipartite_flow(wa, wb, d, delta):
    """Max mass transportable through pairs at distance < delta (Dinic)."""
    na = wa.shape[0]
    nb = wb.shape[0]
    # nodes: 0 = source, 1..na = a-atoms, na+1..na+nb = b-atoms, last = sink
    n_nodes = na + nb + 2
    src = 0
    snk = n_nodes - 1
    # count edges: source->a (na), a->b (pairs), b->sink (nb); each with reverse
    n_pairs = 0
    for i in range(na):
        for j in range(nb):
            if d[i, j] < delta:
                n_pairs += 1
    m = na + nb + n_pairs
    head = np.empty(2 * m, dtype=np.int64)
    cap = np.empty(2 * m, dtype=np.float64)
    nxt = np.full(2 * m, -1, dtype=np.int64)
    first = np.full(n_nodes, -1, dtype=np.int64)
    ei = 0

    def add(u, v, c, ei, head, cap, nxt, first):
        head[ei] = v
        cap[ei] = c
        nxt[ei] = first[u]
        first[u] = ei
        head[ei + 1] = u
        cap[ei + 1] = 0.0
        nxt[ei + 1] = first[v]
        first[v] = ei + 1
        return ei + 2

    for i in range(na):
        ei = add(src, 1 + i, wa[i], ei, head, cap, nxt, first)
    for j in range(nb):
        ei = add(1 + na + j, snk, wb[j], ei, head, cap, nxt, first)
    big = wa.sum() + wb.sum() + 1.0
    for i in range(na):
        for j in range(nb):
            if d[i, j] < delta:
                ei = add(1 + i, 1 + na + j, big, ei, head, cap, nxt, first)

    flow = 0.0
    level = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    it = np.empty(n_nodes, dtype=np.int64)
    # iterative Dinic
    while True:
        for i in range(n_nodes):
            level[i] = -1
        level[src] = 0
        queue[0] = src
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            e = first[u]
            while e != -1:
                v = head[e]
                if cap[e] > 1e-14 and level[v] == -1:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                e = nxt[e]
        if level[snk] == -1:
            break
        for i in range(n_nodes):
            it[i] = first[i]
        # DFS with explicit stack
        path_edges = np.empty(n_nodes, dtype=np.int64)
        while True:
            # find augmenting path
            depth = 0
            u = src
            found = False
            while True:
                if u == snk:
                    found = True
                    break
                e = it[u]
                advanced = False
                while e != -1:
                    v = head[e]
                    if cap[e] > 1e-14 and level[v] == level[u] + 1:
                        path_edges[depth] = e
                        depth += 1
                        u = v
                        advanced = True
                        break
                    e = nxt[e]
                    it[u] = e
                if not advanced:
                    if depth == 0:
                        break
                    level[u] = -1  # dead end
                    depth -= 1
                    u = head[path_edges[depth] ^ 1]
            if not found:
                break
            aug = math.inf
            for t in range(depth):
                if cap[path_edges[t]] < aug:
                    aug = cap[path_edges[t]]
            for t in range(depth):
                cap[path_edges[t]] -= aug
                cap[path_edges[t] ^ 1] += aug
            flow += aug
    return flow


def prohorov_flow(mu: EmpiricalMeasure, eta: EmpiricalMeasure, tol: float = 1e-9) -> float:
    """Prohorov distance within tol via flow feasibility bisection.

    delta is feasible iff the mass transportable through atom pairs at
    distance < delta is at least max(total masses) - delta; bisection over
    [0, max(1, diameter)] with a final snap to the pairwise-distance
    candidates inside the bracket.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d, wmu, weta = _common_support(mu, eta)
    keep_a = wmu > 0
    keep_b = weta > 0
    wa = wmu[keep_a]
    wb = weta[keep_b]
    dd = d[np.ix_(keep_a, keep_b)]
    target = max(wa.sum(), wb.sum())

    def feasible(delta: float) -> bool:
        if delta <= 0:
            return bool(np.all(np.abs(wa.sum() - wb.sum()) <= 1e-15)) and _max_bipartite_flow(
                wa, wb, dd, 0.0
            ) >= target - 1e-12
        return _max_bipartite_flow(wa, wb, dd, delta) >= target - delta - 1e-12

    hi = max(1.0, float(dd.max(initial=0.0)))
    if not feasible(hi):
        hi = max(hi, target)  # mass imbalance forces delta up to the gap
        while not feasible(hi):
            hi *= 2.0
    lo = 0.0
    while hi - lo > tol / 2.0:
        mid = (lo + hi) / 2.0
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    # snap to a unique pairwise-distance candidate inside the bracket
    cands = np.unique(dd)
    inside = cands[(cands >= lo - tol / 2) & (cands <= hi + tol / 2)]
    if inside.size == 1:
        return float(inside[0])
    return float(hi)


def wasserstein_p(mu: EmpiricalMeasure, eta: EmpiricalMeasure, p: float = 1.0) -> float:
    """Exact p-Wasserstein distance between equal-mass atomic measures via
    the transport linear program with costs distance^p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    d, wmu, weta = _common_support(mu, eta)
    if abs(wmu.sum() - weta.sum()) > 1e-9:
        raise MassMismatch("total masses differ")
    keep_a = wmu > 0
    keep_b = weta > 0
    wa = wmu[keep_a]
    wb = weta[keep_b]
    cost = d[np.ix_(keep_a, keep_b)] ** p
    na, nb = cost.shape
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    rows = []
    cols = []
    vals = []
    for i in range(na):
        for j in range(nb):
            rows.append(i)
            cols.append(i * nb + j)
            vals.append(1.0)
    for j in range(nb):
        for i in range(na):
            rows.append(na + j)
            cols.append(i * nb + j)
            vals.append(1.0)
    a_eq = coo_matrix((vals, (rows, cols)), shape=(na + nb, na * nb))
    b_eq = np.concatenate([wa, wb])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise ArithmeticError(f"transport LP failed: {res.message}")
    return float(res.fun ** (1.0 / p))


def check_pr_wass_bounds(mu: EmpiricalMeasure, eta: EmpiricalMeasure, p: float = 1.0,
                         tol: float = 1e-9) -> dict:
    """Report d_Pr, d_W^p and the bound d_Pr <= min(dW^(1/2), dW^(p/(p+1)))."""
    try:
        dpr = prohorov_bruteforce(mu, eta)
        method = "brute"
    except GuardExceeded:
        dpr = prohorov_flow(mu, eta, tol)
        method = "flow"
    dw = wasserstein_p(mu, eta, p)
    bound_half = dw ** 0.5
    bound_p = dw ** (p / (p + 1.0))
    bound = min(bound_half, bound_p)
    return {
        "schema": "bistable/1",
        "prohorov": dpr,
        "prohorov_method": method,
        "wasserstein": dw,
        "p": p,
        "bound_sqrt": bound_half,
        "bound_power": bound_p,
        "bound": bound,
        "pass": bool(dpr <= bound + 1e-9),
    }


def measure_bifiltration_contains(mu: EmpiricalMeasure, y, k: float, r: float) -> bool:
    """Membership of y in the measure bifiltration at (k, r): the open
    r-ball around y carries mass at least k.

    y is an atom index (int) or a coordinate point of the ambient space.
    """
    if isinstance(y, (int, np.integer)):
        dist = _ground_dist(mu.ground)
        dvec = dist[int(y), mu.atoms]
    else:
        pts = _ground_points(mu.ground)
        if pts is None:
            raise TypeError("coordinate queries need a PointCloud ground")
        y = np.asarray(y, dtype=float)
        dall = pairwise_distances(np.vstack([y[None, :], pts]), mu.ground.metric)[0, 1:]
        dvec = dall[mu.atoms]
    mass = float(np.sum(mu.weights[dvec < r]))
    return mass >= k - 1e-12


def verify_measure_stability(mu: EmpiricalMeasure, eta: EmpiricalMeasure, delta: float,
                             grid: Sequence[tuple[float, float]],
                             queries: Sequence) -> dict:
    """Audit the two stability inclusions of measure bifiltrations.

    For every query point y and grid pair (k, r) with k > delta, membership
    at (k, r) for one measure must imply membership at (k - delta,
    r + delta) for the other.  A listed violation falsifies this
    implementation (or the delta), not the underlying inclusion.
    """
    violations = []
    checked = 0
    for y in queries:
        for (k, r) in grid:
            if k <= delta:
                continue
            checked += 2
            if measure_bifiltration_contains(mu, y, k, r) and not (
                measure_bifiltration_contains(eta, y, k - delta, r + delta)
            ):
                violations.append({"side": "mu->eta", "y": _as_key(y), "k": k, "r": r})
            if measure_bifiltration_contains(eta, y, k, r) and not (
                measure_bifiltration_contains(mu, y, k - delta, r + delta)
            ):
                violations.append({"side": "eta->mu", "y": _as_key(y), "k": k, "r": r})
    return {
        "schema": "bistable/1",
        "delta": delta,
        "checked": checked,
        "violations": violations,
    }


def _as_key(y):
    if isinstance(y, (int, np.integer)):
        return int(y)
    return [float(v) for v in np.asarray(y).ravel()]


def nested_uniform_bound(n_sub: int, n_super: int) -> float:
    """Prohorov upper bound |Y \\ X| / |X| for uniform measures on X within Y."""
    if not 0 < n_sub <= n_super:
        raise ValueError("need 0 < |X| <= |Y|")
    return (n_super - n_sub) / n_sub


def prohorov_upper_via_embedding(mu: EmpiricalMeasure, eta: EmpiricalMeasure,
                                 ground, map_mu, map_eta, tol: float = 1e-9) -> float:
    """Upper bound for the embedding-infimum Prohorov distance via one
    explicit common embedding: push both measures along the given atom maps
    into the shared ground space and return their Prohorov distance there."""
    map_mu = np.asarray(map_mu, dtype=np.int64)
    map_eta = np.asarray(map_eta, dtype=np.int64)
    pmu = EmpiricalMeasure(ground, map_mu[mu.atoms], mu.weights)
    peta = EmpiricalMeasure(ground, map_eta[eta.atoms], eta.weights)
    try:
        return prohorov_bruteforce(pmu, peta)
    except GuardExceeded:
        return prohorov_flow(pmu, peta, tol)
