"""Transportation simplex on a dense cost matrix, compiled with numba.

The basis is a spanning tree over ``m`` row nodes and ``n`` column nodes
(``m + n - 1`` basic cells). Each pivot rebuilds the tree and the dual
potentials in O(m + n), prices a list of candidate cells refilled by cyclic sweeps, and pivots around the
unique cycle closed by the entering cell. After a run of degenerate pivots
the solver switches to Bland's rule (smallest entering and leaving index)
until the objective strictly decreases again, which rules out cycling.
Cells with infinite cost are never priced in.

Callers normally perturb the marginals first (every supply ``+delta``, the
last demand ``+m*delta``) so that no basis is degenerate, then recover the
flows of the original marginals on the final tree with :func:`tree_flows`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DEGENERATE_RUN = 64


@njit(cache=True)
def northwest_corner(a, b):
    m, n = a.shape[0], b.shape[0]
    total = m + n - 1
    bi = np.empty(total, np.int64)
    bj = np.empty(total, np.int64)
    x = np.empty(total)
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(total):
        q = min(ra[i], rb[j])
        if q < 0.0:
            q = 0.0
        bi[k] = i
        bj[k] = j
        x[k] = q
        ra[i] -= q
        rb[j] -= q
        if k == total - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return bi, bj, x


@njit(cache=True)
def _build_tree(m, n, bi, bj, cost, parent, pcell, depth, pot, order, adj_start, adj_node, adj_cell, fill):
    nodes = m + n
    for node in range(nodes + 1):
        adj_start[node] = 0
    for k in range(bi.shape[0]):
        adj_start[bi[k] + 1] += 1
        adj_start[m + bj[k] + 1] += 1
    for node in range(nodes):
        adj_start[node + 1] += adj_start[node]
        fill[node] = adj_start[node]
    for k in range(bi.shape[0]):
        r = bi[k]
        c = m + bj[k]
        adj_node[fill[r]] = c
        adj_cell[fill[r]] = k
        fill[r] += 1
        adj_node[fill[c]] = r
        adj_cell[fill[c]] = k
        fill[c] += 1
    for node in range(nodes):
        depth[node] = -1
    depth[0] = 0
    parent[0] = -1
    pcell[0] = -1
    pot[0] = 0.0
    order[0] = 0
    head = 0
    tail = 1
    while head < tail:
        node = order[head]
        head += 1
        for e in range(adj_start[node], adj_start[node + 1]):
            nb = adj_node[e]
            if depth[nb] >= 0:
                continue
            k = adj_cell[e]
            depth[nb] = depth[node] + 1
            parent[nb] = node
            pcell[nb] = k
            pot[nb] = cost[bi[k], bj[k]] - pot[node]
            order[tail] = nb
            tail += 1
    return tail == nodes


@njit(cache=True)
def solve(cost, bi, bj, x, tol, max_iter, flow_eps):
    """Pivot from the basis ``(bi, bj, x)`` (modified in place) to optimality.

    Returns ``(status, iterations, bland_pivots, pot)`` where status 0 means
    optimal, 1 iteration limit, 2 the basis is not a spanning tree.
    """
    m, n = cost.shape
    nodes = m + n
    parent = np.empty(nodes, np.int64)
    pcell = np.empty(nodes, np.int64)
    depth = np.empty(nodes, np.int64)
    pot = np.empty(nodes)
    order = np.empty(nodes, np.int64)
    adj_start = np.empty(nodes + 1, np.int64)
    adj_node = np.empty(2 * bi.shape[0], np.int64)
    adj_cell = np.empty(2 * bi.shape[0], np.int64)
    fill = np.empty(nodes, np.int64)
    path_r = np.empty(nodes, np.int64)
    path_c = np.empty(nodes, np.int64)

    cells = m * n
    max_cand = min(cells, max(64, nodes // 4))
    cand = np.empty(max_cand, np.int64)
    ncand = 0
    cursor = 0
    iterations = 0
    bland_pivots = 0
    degenerate_run = 0
    bland = False
    status = 0
    while True:
        if not _build_tree(m, n, bi, bj, cost, parent, pcell, depth, pot, order, adj_start, adj_node, adj_cell, fill):
            status = 2
            break
        ei = -1
        ej = -1
        if bland:
            for idx in range(cells):
                i = idx // n
                j = idx - i * n
                if cost[i, j] - pot[i] - pot[m + j] < -tol:
                    ei = i
                    ej = j
                    break
        else:
            # re-price the candidate list, dropping cells that stopped being attractive
            best = -tol
            kept = 0
            for c in range(ncand):
                idx = cand[c]
                i = idx // n
                j = idx - i * n
                rc = cost[i, j] - pot[i] - pot[m + j]
                if rc < -tol:
                    cand[kept] = idx
                    kept += 1
                    if rc < best:
                        best = rc
                        ei = i
                        ej = j
            ncand = kept
            if ei < 0:
                # refill from a cyclic sweep; optimality needs a full sweep without candidates
                scanned = 0
                idx = cursor
                while scanned < cells and ncand < max_cand:
                    i = idx // n
                    j = idx - i * n
                    rc = cost[i, j] - pot[i] - pot[m + j]
                    if rc < -tol:
                        cand[ncand] = idx
                        ncand += 1
                        if rc < best:
                            best = rc
                            ei = i
                            ej = j
                    scanned += 1
                    idx += 1
                    if idx == cells:
                        idx = 0
                cursor = idx
        if ei < 0:
            break
        if iterations >= max_iter:
            status = 1
            break
        iterations += 1
        if bland:
            bland_pivots += 1

        r = ei
        c = m + ej
        nr = 0
        nc = 0
        while r != c:
            if depth[r] >= depth[c]:
                path_r[nr] = pcell[r]
                nr += 1
                r = parent[r]
            else:
                path_c[nc] = pcell[c]
                nc += 1
                c = parent[c]
        length = nr + nc
        theta = np.inf
        leave = -1
        leave_key = cells
        for s in range(0, length, 2):
            k = path_c[s] if s < nc else path_r[length - 1 - s]
            key = bi[k] * n + bj[k]
            if x[k] < theta or (x[k] == theta and key < leave_key):
                theta = x[k]
                leave = k
                leave_key = key
        for s in range(length):
            k = path_c[s] if s < nc else path_r[length - 1 - s]
            if s % 2 == 0:
                x[k] -= theta
            else:
                x[k] += theta
        bi[leave] = ei
        bj[leave] = ej
        x[leave] = theta
        if theta <= flow_eps:
            degenerate_run += 1
            if degenerate_run >= DEGENERATE_RUN:
                bland = True
        else:
            degenerate_run = 0
            bland = False
    return status, iterations, bland_pivots, pot


@njit(cache=True)
def tree_flows(m, n, bi, bj, a, b):
    """Flows on the spanning tree ``(bi, bj)`` that ship supplies ``a`` to demands ``b``.

    Leaves are peeled in reverse breadth-first order; any imbalance between
    ``a`` and ``b`` ends up at the root. Returns ``(ok, x)`` with ``ok`` false
    if the cells do not form a spanning tree.
    """
    nodes = m + n
    cost = np.zeros((m, n))
    parent = np.empty(nodes, np.int64)
    pcell = np.empty(nodes, np.int64)
    depth = np.empty(nodes, np.int64)
    pot = np.empty(nodes)
    order = np.empty(nodes, np.int64)
    adj_start = np.empty(nodes + 1, np.int64)
    adj_node = np.empty(2 * bi.shape[0], np.int64)
    adj_cell = np.empty(2 * bi.shape[0], np.int64)
    fill = np.empty(nodes, np.int64)
    x = np.zeros(bi.shape[0])
    if not _build_tree(m, n, bi, bj, cost, parent, pcell, depth, pot, order, adj_start, adj_node, adj_cell, fill):
        return False, x
    excess = np.empty(nodes)
    for i in range(m):
        excess[i] = a[i]
    for j in range(n):
        excess[m + j] = -b[j]
    for s in range(nodes - 1, 0, -1):
        v = order[s]
        # a row ships its excess to its parent column; a column draws its deficit from its parent row
        x[pcell[v]] = excess[v] if v < m else -excess[v]
        excess[parent[v]] += excess[v]
    return True, x


@njit(cache=True)
def best_rotation(cost, a, b):
    """Start column ``k`` minimizing the northwest-corner cost with columns taken cyclically from ``k``."""
    m, n = cost.shape
    best = np.inf
    best_k = 0
    for k in range(n):
        total = 0.0
        i = 0
        s = 0
        ra = a[0]
        rb = b[k]
        while i < m and s < n:
            j = (k + s) % n
            q = min(ra, rb)
            total += q * cost[i, j]
            if total >= best:
                break
            ra -= q
            rb -= q
            if ra <= rb:
                i += 1
                if i < m:
                    ra = a[i]
            else:
                s += 1
                if s < n:
                    rb = b[(k + s) % n]
        if total < best:
            best = total
            best_k = k
    return best_k
