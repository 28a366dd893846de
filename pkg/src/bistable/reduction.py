"""Mod-2 persistence kernel for filtered complexes of dimension <= 2.

Degree-0 pairs come from a union-find pass with the elder rule.  Degree-1
pairs come from reducing the anti-transposed triangle/edge boundary block
(edges as columns in reverse filtration order, incident triangles as rows),
which yields the same persistence pairing as column reduction of the
boundary matrix but avoids reducing the huge majority of triangle columns
to zero.  Apparent pairs (an edge whose earliest cofacet has that edge as
its latest facet) are claimed without any column arithmetic, and their
columns are rebuilt from the incidence structure on demand, so the actual
merge work is confined to a small residue of columns.
"""
from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["persistence_pairs", "bars_from_pairs", "alive_counts"]

_INF = np.inf


@njit(cache=True)
def _h0_pass(n_vertices, vert_ids, vert_pos, edge_u, edge_v, edge_pos):
    """Union-find over vertices/edges in filtration order.

    Returns (pair_vertex_pos, pair_edge_pos, n_pairs, creator_mask) where
    creator_mask marks edge rows that create cycles (degree-1 births).
    Vertices and edges arrive pre-sorted by position.
    """
    parent = np.full(n_vertices, -1, dtype=np.int64)
    comp_birth = np.empty(n_vertices, dtype=np.int64)
    ne = edge_u.shape[0]
    nv = vert_ids.shape[0]
    pair_v = np.empty(ne, dtype=np.int64)
    pair_e = np.empty(ne, dtype=np.int64)
    n_pairs = 0
    creator = np.zeros(ne, dtype=np.uint8)

    vi = 0
    for ei in range(ne):
        ep = edge_pos[ei]
        while vi < nv and vert_pos[vi] < ep:
            v = vert_ids[vi]
            parent[v] = v
            comp_birth[v] = vert_pos[vi]
            vi += 1
        u = edge_u[ei]
        v = edge_v[ei]
        ru = u
        while parent[ru] != ru:
            ru = parent[ru]
        x = u
        while parent[x] != ru:
            nxt = parent[x]
            parent[x] = ru
            x = nxt
        rv = v
        while parent[rv] != rv:
            rv = parent[rv]
        x = v
        while parent[x] != rv:
            nxt = parent[x]
            parent[x] = rv
            x = nxt
        if ru == rv:
            creator[ei] = 1
        else:
            bu = comp_birth[ru]
            bv = comp_birth[rv]
            if bu <= bv:
                parent[rv] = ru
                dies = bv
            else:
                parent[ru] = rv
                dies = bu
            pair_v[n_pairs] = dies
            pair_e[n_pairs] = ep
            n_pairs += 1
    # remaining vertices (isolated until the end of the filtration)
    while vi < nv:
        v = vert_ids[vi]
        parent[v] = v
        comp_birth[v] = vert_pos[vi]
        vi += 1
    # essential components: roots
    n_ess = 0
    ess_birth_pos = np.empty(n_vertices, dtype=np.int64)
    for v in range(n_vertices):
        if parent[v] == v:
            ess_birth_pos[n_ess] = comp_birth[v]
            n_ess += 1
    return pair_v[:n_pairs], pair_e[:n_pairs], creator, ess_birth_pos[:n_ess]


@njit(cache=True)
def _build_csr(tri_e0, tri_e1, tri_e2, tri_order, tri_dualpos, ne):
    """Edge -> incident triangles (as dual positions), earliest triangle first."""
    nt = tri_e0.shape[0]
    cnt = np.zeros(ne, dtype=np.int64)
    for t in range(nt):
        cnt[tri_e0[t]] += 1
        cnt[tri_e1[t]] += 1
        cnt[tri_e2[t]] += 1
    offs = np.zeros(ne + 1, dtype=np.int64)
    for e in range(ne):
        offs[e + 1] = offs[e] + cnt[e]
    fill = offs[:-1].copy()
    csr = np.empty(3 * nt, dtype=np.int64)
    # iterate triangles from earliest to latest so each edge's list is
    # ordered by decreasing dual position
    for k in range(nt):
        t = tri_order[k]
        dp = tri_dualpos[t]
        e = tri_e0[t]
        csr[fill[e]] = dp
        fill[e] += 1
        e = tri_e1[t]
        csr[fill[e]] = dp
        fill[e] += 1
        e = tri_e2[t]
        csr[fill[e]] = dp
        fill[e] += 1
    return offs, csr


@njit(cache=True)
def _dual_reduce(n_total, edge_order_desc, edge_maxfacet_of, offs, csr):
    """Reduce edge columns (reverse filtration order) over triangle rows.

    ``edge_maxfacet_of[dual_pos_of_triangle]`` holds the edge whose position
    is the largest among that triangle's facets; a column is apparent when
    its earliest cofacet's latest facet is the column's own edge.  Apparent
    pivots keep their raw coboundary (rebuilt from csr); only reduced
    residue columns are materialized.

    Returns (pair_edge, pair_tri_dualpos) arrays.
    """
    ne = edge_order_desc.shape[0]
    pivot_owner = np.full(n_total, -1, dtype=np.int64)
    pivot_raw = np.zeros(n_total, dtype=np.uint8)
    store_start = np.zeros(n_total, dtype=np.int64)
    store_len = np.zeros(n_total, dtype=np.int64)

    pair_e = np.empty(ne, dtype=np.int64)
    pair_t = np.empty(ne, dtype=np.int64)
    n_pairs = 0

    buf = np.empty(1 << 12, dtype=np.int64)
    bcap = buf.shape[0]
    btop = 0
    cap = 1024
    cur = np.empty(cap, dtype=np.int64)
    tmp = np.empty(cap, dtype=np.int64)
    other = np.empty(cap, dtype=np.int64)

    for idx in range(ne):
        e = edge_order_desc[idx]
        s0 = offs[e]
        s1 = offs[e + 1]
        if s1 == s0:
            continue
        # apparent-pair shortcut: earliest cofacet = largest dual position,
        # stored first in the csr slice
        low0 = csr[s0]
        if edge_maxfacet_of[low0] == e and pivot_owner[low0] == -1:
            pivot_owner[low0] = e
            pivot_raw[low0] = 1
            pair_e[n_pairs] = e
            pair_t[n_pairs] = low0
            n_pairs += 1
            continue
        cl = s1 - s0
        if cl > cap:
            while cap < cl:
                cap *= 2
            cur = np.empty(cap, dtype=np.int64)
            tmp = np.empty(cap, dtype=np.int64)
            other = np.empty(cap, dtype=np.int64)
        # column entries ascending: csr slice is descending
        for i in range(cl):
            cur[i] = csr[s1 - 1 - i]
        first = True
        while cl > 0:
            low = cur[cl - 1]
            owner = pivot_owner[low]
            if owner == -1:
                pivot_owner[low] = e
                if first:
                    pivot_raw[low] = 1
                else:
                    if btop + cl > bcap:
                        ncap = bcap * 2
                        while ncap < btop + cl:
                            ncap *= 2
                        nbuf = np.empty(ncap, dtype=np.int64)
                        nbuf[:btop] = buf[:btop]
                        buf = nbuf
                        bcap = ncap
                    store_start[low] = btop
                    store_len[low] = cl
                    for i in range(cl):
                        buf[btop + i] = cur[i]
                    btop += cl
                pair_e[n_pairs] = e
                pair_t[n_pairs] = low
                n_pairs += 1
                break
            # fetch owner's column
            if pivot_raw[low] == 1:
                o0 = offs[owner]
                o1 = offs[owner + 1]
                ol = o1 - o0
                need = cl + ol
                if need > cap:
                    ncap = cap * 2
                    while ncap < need:
                        ncap *= 2
                    ncur = np.empty(ncap, dtype=np.int64)
                    ncur[:cl] = cur[:cl]
                    cur = ncur
                    tmp = np.empty(ncap, dtype=np.int64)
                    other = np.empty(ncap, dtype=np.int64)
                    cap = ncap
                for i in range(ol):
                    other[i] = csr[o1 - 1 - i]
            else:
                o0 = store_start[low]
                ol = store_len[low]
                need = cl + ol
                if need > cap:
                    ncap = cap * 2
                    while ncap < need:
                        ncap *= 2
                    ncur = np.empty(ncap, dtype=np.int64)
                    ncur[:cl] = cur[:cl]
                    cur = ncur
                    tmp = np.empty(ncap, dtype=np.int64)
                    other = np.empty(ncap, dtype=np.int64)
                    cap = ncap
                for i in range(ol):
                    other[i] = buf[o0 + i]
            i = 0
            j = 0
            k = 0
            while i < cl and j < ol:
                a = cur[i]
                b = other[j]
                if a == b:
                    i += 1
                    j += 1
                elif a < b:
                    tmp[k] = a
                    k += 1
                    i += 1
                else:
                    tmp[k] = b
                    k += 1
                    j += 1
            while i < cl:
                tmp[k] = cur[i]
                k += 1
                i += 1
            while j < ol:
                tmp[k] = other[j]
                k += 1
                j += 1
            swap = cur
            cur = tmp
            tmp = swap
            cl = k
            first = False
    return pair_e[:n_pairs], pair_t[:n_pairs]


def persistence_pairs(
    vert_ids,
    vert_levels,
    edge_uv,
    edge_levels,
    tri_edges,
    tri_levels,
    n_vertices: int,
):
    """Persistence pairing of a filtered complex of dimension <= 2 over Z/2.

    ``edge_uv``: (ne, 2) vertex ids per edge.  ``tri_edges``: (nt, 3) row
    indices into the edge arrays.  Levels may be floats or integer grid
    levels; the total order is (level, dimension, row index), and simplices
    with non-finite level are treated as absent.  Faces must enter no later
    than cofaces.

    Returns a dict with, per finite pair, birth/death levels and the pair's
    homology degree, plus essential class births; zero-length pairs are kept
    here and filtered by the bar/count helpers.
    """
    vert_ids = np.asarray(vert_ids, dtype=np.int64)
    vert_levels = np.asarray(vert_levels, dtype=np.float64)
    edge_uv = np.asarray(edge_uv, dtype=np.int64).reshape(-1, 2)
    edge_levels = np.asarray(edge_levels, dtype=np.float64)
    tri_edges = np.asarray(tri_edges, dtype=np.int64).reshape(-1, 3)
    tri_levels = np.asarray(tri_levels, dtype=np.float64)

    vkeep = np.isfinite(vert_levels)
    ekeep = np.isfinite(edge_levels)
    tkeep = np.isfinite(tri_levels)
    if not np.all(vkeep):
        vert_ids, vert_levels = vert_ids[vkeep], vert_levels[vkeep]
    if not np.all(ekeep):
        edge_keep_idx = np.nonzero(ekeep)[0]
        remap = np.full(len(ekeep), -1, dtype=np.int64)
        remap[edge_keep_idx] = np.arange(len(edge_keep_idx))
        edge_uv, edge_levels = edge_uv[ekeep], edge_levels[ekeep]
        if len(tri_edges):
            tri_edges = remap[tri_edges]
            if np.any((tri_edges < 0) & tkeep[:, None].repeat(3, axis=1)):
                raise ValueError("present triangle has an absent edge")
    if not np.all(tkeep):
        tri_edges, tri_levels = tri_edges[tkeep], tri_levels[tkeep]

    nv, ne, nt = len(vert_ids), len(edge_uv), len(tri_edges)

    # global positions by (level, dim, row)
    levels = np.concatenate([vert_levels, edge_levels, tri_levels])
    dims = np.concatenate(
        [
            np.zeros(nv, dtype=np.int8),
            np.ones(ne, dtype=np.int8),
            np.full(nt, 2, dtype=np.int8),
        ]
    )
    order = np.lexsort((np.arange(len(levels)), dims, levels))
    pos_of = np.empty(len(levels), dtype=np.int64)
    pos_of[order] = np.arange(len(order))
    vpos = pos_of[:nv]
    epos = pos_of[nv : nv + ne]
    tpos = pos_of[nv + ne :]

    # degree-0 pass
    vsort = np.argsort(vpos)
    esort = np.argsort(epos)
    pv, pe, creator_sorted, ess0 = _h0_pass(
        int(n_vertices),
        vert_ids[vsort],
        vpos[vsort],
        edge_uv[esort, 0],
        edge_uv[esort, 1],
        epos[esort],
    )
    creator = np.zeros(ne, dtype=bool)
    creator[esort] = creator_sorted.astype(bool)

    level_at = np.full(len(levels) + 1, np.nan)
    level_at[pos_of] = levels

    pair_birth = [level_at[pv]] if len(pv) else []
    pair_death = [level_at[pe]] if len(pe) else []
    pair_dim = [np.zeros(len(pv), dtype=np.int8)] if len(pv) else []

    paired_edges = np.zeros(ne, dtype=bool)
    if nt:
        # dual reduction over the edge/triangle block
        n_total = len(levels)
        dualpos = n_total - 1 - tpos
        tri_order = np.argsort(tpos)  # earliest first
        offs, csr = _build_csr(
            tri_edges[:, 0].copy(),
            tri_edges[:, 1].copy(),
            tri_edges[:, 2].copy(),
            tri_order,
            dualpos,
            ne,
        )
        # latest facet of each triangle, keyed by the triangle's dual position
        facet_pos = np.stack(
            [epos[tri_edges[:, 0]], epos[tri_edges[:, 1]], epos[tri_edges[:, 2]]], axis=1
        )
        arg = np.argmax(facet_pos, axis=1)
        maxfacet = tri_edges[np.arange(nt), arg]
        edge_maxfacet_of = np.full(n_total, -1, dtype=np.int64)
        edge_maxfacet_of[dualpos] = maxfacet
        # clearing: an edge that kills a component has a zero column in this
        # block, so only cycle-creating edges need reduction
        edge_order_desc = esort[::-1]
        edge_order_desc = edge_order_desc[creator[edge_order_desc]].copy()
        dpair_e, dpair_t = _dual_reduce(
            n_total, edge_order_desc, edge_maxfacet_of, offs, csr
        )
        if len(dpair_e):
            tlev_of = np.full(n_total, np.nan)
            tlev_of[dualpos] = tri_levels
            pair_birth.append(edge_levels[dpair_e])
            pair_death.append(tlev_of[dpair_t])
            pair_dim.append(np.ones(len(dpair_e), dtype=np.int8))
            paired_edges[dpair_e] = True

    ess1 = edge_levels[creator & ~paired_edges]
    ess_birth = np.concatenate([level_at[ess0] if len(ess0) else np.empty(0), ess1])
    ess_dim = np.concatenate(
        [np.zeros(len(ess0), dtype=np.int8), np.ones(len(ess1), dtype=np.int8)]
    )

    return {
        "pair_birth": np.concatenate(pair_birth) if pair_birth else np.empty(0),
        "pair_death": np.concatenate(pair_death) if pair_death else np.empty(0),
        "pair_dim": np.concatenate(pair_dim) if pair_dim else np.empty(0, np.int8),
        "ess_birth": ess_birth,
        "ess_dim": ess_dim,
    }


def bars_from_pairs(result, degree: int):
    """Finite bars (birth, death) with birth < death, plus infinite bars."""
    sel = result["pair_dim"] == degree
    births = result["pair_birth"][sel]
    deaths = result["pair_death"][sel]
    keep = births < deaths
    finite = list(zip(births[keep].tolist(), deaths[keep].tolist()))
    ess = result["ess_birth"][result["ess_dim"] == degree]
    return finite + [(float(b), _INF) for b in ess.tolist()]


def alive_counts(result, degree: int, thresholds) -> np.ndarray:
    """Number of degree-``degree`` classes alive at each threshold.

    A class is alive at t when birth <= t < death, matching slice evaluation
    of coarsened (upward-rounded) grades at grid values.
    """
    thresholds = np.asarray(thresholds, dtype=np.float64)
    sel = result["pair_dim"] == degree
    births = result["pair_birth"][sel]
    deaths = result["pair_death"][sel]
    ess = result["ess_birth"][result["ess_dim"] == degree]
    counts = (
        np.searchsorted(np.sort(births), thresholds, side="right")
        - np.searchsorted(np.sort(deaths), thresholds, side="right")
        + np.searchsorted(np.sort(ess), thresholds, side="right")
    )
    return counts.astype(np.int64)
