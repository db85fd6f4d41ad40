"""Exact min-cut over pixel grid graphs.

Augmenting-path max-flow (level-graph variant) compiled with numba; the
polynomial phase bound does not depend on capacities, so float weights
are safe. With the cached JIT a 200x200 8-connected crop solves in well
under a second after warm-up.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_EPS = 1e-11


@njit(cache=True)
def _build_adjacency(n_nodes, edge_u, edge_v, edge_w, src_w, sink_w):
    n_pix = src_w.shape[0]
    n_edges = edge_u.shape[0]
    n_arcs = 2 * n_edges + 4 * n_pix
    to = np.empty(n_arcs, np.int32)
    cap = np.empty(n_arcs, np.float64)
    source = n_nodes - 2
    sink = n_nodes - 1
    for k in range(n_edges):
        to[2 * k] = edge_v[k]
        to[2 * k + 1] = edge_u[k]
        cap[2 * k] = edge_w[k]
        cap[2 * k + 1] = edge_w[k]
    base = 2 * n_edges
    for i in range(n_pix):
        to[base + 2 * i] = i          # source -> pixel
        to[base + 2 * i + 1] = source
        cap[base + 2 * i] = src_w[i]
        cap[base + 2 * i + 1] = 0.0
    base2 = base + 2 * n_pix
    for i in range(n_pix):
        to[base2 + 2 * i] = sink      # pixel -> sink
        to[base2 + 2 * i + 1] = i
        cap[base2 + 2 * i] = sink_w[i]
        cap[base2 + 2 * i + 1] = 0.0

    first = np.full(n_nodes, -1, np.int64)
    nxt = np.empty(n_arcs, np.int64)
    for a in range(n_arcs - 1, -1, -1):
        if a < base:
            origin = edge_u[a // 2] if a % 2 == 0 else edge_v[a // 2]
        elif a < base2:
            i = (a - base) // 2
            origin = source if (a - base) % 2 == 0 else i
        else:
            i = (a - base2) // 2
            origin = i if (a - base2) % 2 == 0 else sink
        nxt[a] = first[origin]
        first[origin] = a
    return first, nxt, to, cap


@njit(cache=True)
def _max_flow(first, nxt, to, cap, source, sink):
    n = first.shape[0]
    level = np.empty(n, np.int32)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int32)
    path_arc = np.empty(n + 1, np.int64)
    path_node = np.empty(n + 1, np.int32)
    total = 0.0
    while True:
        for i in range(n):
            level[i] = -1
        level[source] = 0
        queue[0] = source
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            e = first[u]
            while e != -1:
                v = to[e]
                if cap[e] > _EPS and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                e = nxt[e]
        if level[sink] < 0:
            break
        for i in range(n):
            it[i] = first[i]
        while True:
            depth = 0
            path_node[0] = source
            found = False
            while True:
                u = path_node[depth]
                if u == sink:
                    found = True
                    break
                e = it[u]
                v = -1
                while e != -1:
                    v = to[e]
                    if cap[e] > _EPS and level[v] == level[u] + 1:
                        break
                    e = nxt[e]
                it[u] = e
                if e == -1:
                    if depth == 0:
                        break
                    depth -= 1
                    it[path_node[depth]] = nxt[path_arc[depth]]
                else:
                    path_arc[depth] = e
                    depth += 1
                    path_node[depth] = v
            if not found:
                break
            bottleneck = cap[path_arc[0]]
            for i in range(1, depth):
                if cap[path_arc[i]] < bottleneck:
                    bottleneck = cap[path_arc[i]]
            for i in range(depth):
                e = path_arc[i]
                cap[e] -= bottleneck
                cap[e ^ 1] += bottleneck
            total += bottleneck
    return total, level


def min_cut(
    n_pixels: int,
    edge_u: np.ndarray,
    edge_v: np.ndarray,
    edge_w: np.ndarray,
    src_w: np.ndarray,
    sink_w: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Solve the two-terminal min cut.

    Nodes 0..n_pixels-1 carry terminal capacities ``src_w`` / ``sink_w``;
    ``edge_*`` lists undirected pairwise edges with symmetric capacity.
    Returns the cut value and a boolean array marking source-side nodes.
    """
    n_nodes = n_pixels + 2
    first, nxt, to, cap = _build_adjacency(
        n_nodes,
        np.ascontiguousarray(edge_u, dtype=np.int32),
        np.ascontiguousarray(edge_v, dtype=np.int32),
        np.ascontiguousarray(edge_w, dtype=np.float64),
        np.ascontiguousarray(src_w, dtype=np.float64),
        np.ascontiguousarray(sink_w, dtype=np.float64),
    )
    flow, level = _max_flow(first, nxt, to, cap, n_nodes - 2, n_nodes - 1)
    return float(flow), np.asarray(level[:n_pixels]) >= 0
