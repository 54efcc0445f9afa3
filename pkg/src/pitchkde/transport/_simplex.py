"""Primal network simplex kernels (numba).

Two front ends share one spanning-tree core:

* ``solve_bipartite`` -- the dense transportation problem, arcs from every
  source to every sink.  Arc costs are recomputed from the support
  coordinates whenever pricing needs them, so nothing of size m*n is stored
  except one byte of state per arc.
* ``solve_graph`` -- min-cost flow on an explicit sparse arc list (used for
  the lattice reformulation of W1 under the L1 ground norm).

All arcs are uncapacitated.  The tree bookkeeping (parent/thread/last
successor lists, block-search pricing, strongly feasible leaving-arc rule)
follows the LEMON design.  Flow and cost of each tree arc are stored on the
node that the arc joins to its parent.
"""

import math

import numba as nb
import numpy as np

DIR_UP = 1
DIR_DOWN = -1

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1


@nb.njit(cache=True, inline="always")
def _ground(dx, dy, p, q):
    dx = abs(dx)
    dy = abs(dy)
    if q == 1.0:
        d = dx + dy
    elif q == 2.0:
        d = math.sqrt(dx * dx + dy * dy)
    else:
        d = (dx**q + dy**q) ** (1.0 / q)
    if p == 1.0:
        return d
    if p == 2.0:
        return d * d
    return d**p


@nb.njit(cache=True)
def _init_tree(supply, art_cost, n_real_arcs):
    big_n = supply.shape[0]
    root = big_n
    parent = np.empty(big_n + 1, np.int64)
    pred = np.empty(big_n + 1, np.int64)
    thread = np.empty(big_n + 1, np.int64)
    rev_thread = np.empty(big_n + 1, np.int64)
    succ_num = np.empty(big_n + 1, np.int64)
    last_succ = np.empty(big_n + 1, np.int64)
    pred_dir = np.zeros(big_n + 1, np.int64)
    pi = np.zeros(big_n + 1, np.float64)
    flow = np.zeros(big_n + 1, np.float64)
    pcost = np.zeros(big_n + 1, np.float64)

    parent[root] = -1
    pred[root] = -1
    thread[root] = 0
    rev_thread[0] = root
    succ_num[root] = big_n + 1
    last_succ[root] = root - 1
    for u in range(big_n):
        parent[u] = root
        pred[u] = n_real_arcs + u
        thread[u] = u + 1
        rev_thread[u + 1] = u
        succ_num[u] = 1
        last_succ[u] = u
        if supply[u] >= 0.0:
            pred_dir[u] = DIR_UP
            pi[u] = 0.0
            flow[u] = supply[u]
            pcost[u] = 0.0
        else:
            pred_dir[u] = DIR_DOWN
            pi[u] = art_cost
            flow[u] = -supply[u]
            pcost[u] = art_cost
    return parent, pred, thread, rev_thread, succ_num, last_succ, pred_dir, pi, flow, pcost


@nb.njit(cache=True)
def _recompute_potentials(thread, parent, pred_dir, pcost, pi, root):
    pi[root] = 0.0
    u = thread[root]
    while u != root:
        # tree arcs have zero reduced cost: c + pi[src] - pi[tgt] == 0
        if pred_dir[u] == DIR_UP:
            pi[u] = pi[parent[u]] - pcost[u]
        else:
            pi[u] = pi[parent[u]] + pcost[u]
        u = thread[u]


@nb.njit(cache=True)
def _pivot(in_arc, first, second, c_in,
           parent, pred, thread, rev_thread, succ_num, last_succ,
           pred_dir, pi, flow, pcost, dirty):
    """Bring ``in_arc`` (first -> second, at flow 0) into the tree.

    Returns the id of the arc that left the tree.
    """
    # join node
    u = first
    v = second
    while u != v:
        if succ_num[u] < succ_num[v]:
            u = parent[u]
        else:
            v = parent[v]
    join = u

    # leaving arc; `<` then `<=` keeps the tree strongly feasible
    delta = np.inf
    u_out = -1
    result = 0
    u = first
    while u != join:
        if pred_dir[u] == DIR_UP:
            d = flow[u]
            if d < delta:
                delta = d
                u_out = u
                result = 1
        u = parent[u]
    u = second
    while u != join:
        if pred_dir[u] == DIR_DOWN:
            d = flow[u]
            if d <= delta:
                delta = d
                u_out = u
                result = 2
        u = parent[u]
    if result == 1:
        u_in = first
        v_in = second
    else:
        u_in = second
        v_in = first

    if delta > 0.0:
        u = first
        while u != join:
            flow[u] -= pred_dir[u] * delta
            u = parent[u]
        u = second
        while u != join:
            flow[u] += pred_dir[u] * delta
            u = parent[u]
    out_arc = pred[u_out]
    flow[u_out] = 0.0

    old_rev_thread = rev_thread[u_out]
    old_succ_num = succ_num[u_out]
    old_last_succ = last_succ[u_out]
    v_out = parent[u_out]
    in_dir = DIR_UP if u_in == first else DIR_DOWN

    if u_in == u_out:
        parent[u_in] = v_in
        pred[u_in] = in_arc
        pred_dir[u_in] = in_dir
        flow[u_in] = delta
        pcost[u_in] = c_in
        if thread[v_in] != u_out:
            after = thread[old_last_succ]
            thread[old_rev_thread] = after
            rev_thread[after] = old_rev_thread
            after = thread[v_in]
            thread[v_in] = u_out
            rev_thread[u_out] = v_in
            thread[old_last_succ] = after
            rev_thread[after] = old_last_succ
    else:
        if old_rev_thread == v_in:
            thread_continue = thread[old_last_succ]
        else:
            thread_continue = thread[v_in]

        stem = u_in
        par_stem = v_in
        last = last_succ[u_in]
        after = thread[last]
        thread[v_in] = u_in
        nd = 0
        dirty[nd] = v_in
        nd += 1
        while stem != u_out:
            next_stem = parent[stem]
            thread[last] = next_stem
            dirty[nd] = last
            nd += 1

            before = rev_thread[stem]
            thread[before] = after
            rev_thread[after] = before

            parent[stem] = par_stem
            par_stem = stem
            stem = next_stem

            if last_succ[stem] == last_succ[par_stem]:
                last = rev_thread[par_stem]
            else:
                last = last_succ[stem]
            after = thread[last]
        parent[u_out] = par_stem
        thread[last] = thread_continue
        rev_thread[thread_continue] = last
        last_succ[u_out] = last

        if old_rev_thread != v_in:
            thread[old_rev_thread] = after
            rev_thread[after] = old_rev_thread

        for k in range(nd):
            w = dirty[k]
            rev_thread[thread[w]] = w

        tmp_sc = 0
        tmp_ls = last_succ[u_out]
        u = u_out
        pp = parent[u]
        while u != u_in:
            pred[u] = pred[pp]
            pred_dir[u] = -pred_dir[pp]
            flow[u] = flow[pp]
            pcost[u] = pcost[pp]
            tmp_sc += succ_num[u] - succ_num[pp]
            succ_num[u] = tmp_sc
            last_succ[pp] = tmp_ls
            u = pp
            pp = parent[u]
        pred[u_in] = in_arc
        pred_dir[u_in] = in_dir
        flow[u_in] = delta
        pcost[u_in] = c_in
        succ_num[u_in] = old_succ_num

    up_limit_out = join if last_succ[join] == v_in else -1
    last_succ_out = last_succ[u_out]
    u = v_in
    while u != -1 and last_succ[u] == v_in:
        last_succ[u] = last_succ_out
        u = parent[u]

    if join != old_rev_thread and v_in != old_rev_thread:
        u = v_out
        while u != up_limit_out and last_succ[u] == old_last_succ:
            last_succ[u] = old_rev_thread
            u = parent[u]
    elif last_succ_out != old_last_succ:
        u = v_out
        while u != up_limit_out and last_succ[u] == old_last_succ:
            last_succ[u] = last_succ_out
            u = parent[u]

    u = v_in
    while u != join:
        succ_num[u] += old_succ_num
        u = parent[u]
    u = v_out
    while u != join:
        succ_num[u] -= old_succ_num
        u = parent[u]

    sigma = pi[v_in] - pi[u_in] - pred_dir[u_in] * c_in
    end = thread[last_succ[u_in]]
    u = u_in
    while u != end:
        pi[u] += sigma
        u = thread[u]
    return out_arc


@nb.njit(cache=True)
def solve_bipartite(xs, ys, a, xt, yt, b, p, q, max_iter):
    """Min sum f_ij c_ij subject to row sums a, column sums b, f >= 0.

    c_ij is the (L_q ground distance)^p between source i and sink j.
    Returns (status, pivots, src_idx, dst_idx, mass) listing the strictly
    positive flows.
    """
    m = a.shape[0]
    n = b.shape[0]
    mn = m * n
    big_n = m + n
    root = big_n

    # bounding-box upper bound on every real arc cost
    dxmax = max(abs(xs.max() - xt.min()), abs(xt.max() - xs.min()))
    dymax = max(abs(ys.max() - yt.min()), abs(yt.max() - ys.min()))
    cmax = _ground(dxmax, dymax, p, q)
    art_cost = 2.0 * cmax + 1.0
    tol = 1e-12 * (cmax + 1.0)

    supply = np.empty(big_n, np.float64)
    supply[:m] = a
    supply[m:] = -b
    (parent, pred, thread, rev_thread, succ_num, last_succ,
     pred_dir, pi, flow, pcost) = _init_tree(supply, art_cost, mn)
    dirty = np.empty(big_n + 1, np.int64)
    state = np.ones(mn, np.int8)  # 1: nonbasic at zero flow, 0: tree arc

    block = max(int(math.ceil(math.sqrt(mn))), 10)
    next_arc = 0
    it = 0
    status = STATUS_OPTIMAL
    while True:
        best = -1
        min_c = -tol
        cnt = block
        e = next_arc
        i = e // n
        j = e - i * n
        for _ in range(mn):
            c = _ground(xs[i] - xt[j], ys[i] - yt[j], p, q) + pi[i] - pi[m + j]
            if c < min_c and state[e] == 1:
                min_c = c
                best = e
            e += 1
            j += 1
            if j == n:
                j = 0
                i += 1
                if e == mn:
                    e = 0
                    i = 0
            cnt -= 1
            if cnt == 0:
                if best >= 0:
                    break
                cnt = block
        if best < 0:
            # refresh potentials against drift, then confirm optimality
            _recompute_potentials(thread, parent, pred_dir, pcost, pi, root)
            for e2 in range(mn):
                i2 = e2 // n
                j2 = e2 - i2 * n
                c = _ground(xs[i2] - xt[j2], ys[i2] - yt[j2], p, q) + pi[i2] - pi[m + j2]
                if c < -tol and state[e2] == 1:
                    best = e2
                    break
            if best < 0:
                break
            e = best + 1 if best + 1 < mn else 0
        next_arc = e
        if it >= max_iter:
            status = STATUS_MAX_ITER
            break
        it += 1
        first = best // n
        jj = best - first * n
        c_in = _ground(xs[first] - xt[jj], ys[first] - yt[jj], p, q)
        out_arc = _pivot(best, first, m + jj, c_in,
                         parent, pred, thread, rev_thread, succ_num, last_succ,
                         pred_dir, pi, flow, pcost, dirty)
        state[best] = 0
        if out_arc < mn:
            state[out_arc] = 1

    k = 0
    for u in range(big_n):
        if pred[u] < mn and flow[u] > 0.0:
            k += 1
    src_idx = np.empty(k, np.int64)
    dst_idx = np.empty(k, np.int64)
    mass = np.empty(k, np.float64)
    k = 0
    for u in range(big_n):
        e = pred[u]
        if e < mn and flow[u] > 0.0:
            src_idx[k] = e // n
            dst_idx[k] = e - (e // n) * n
            mass[k] = flow[u]
            k += 1
    return status, it, src_idx, dst_idx, mass


@nb.njit(cache=True)
def solve_graph(supply, arc_src, arc_tgt, arc_cost, max_iter):
    """Min-cost flow with node ``supply`` (sum zero) on uncapacitated arcs.

    Returns (status, pivots, arc_flow).
    """
    big_n = supply.shape[0]
    root = big_n
    n_arcs = arc_src.shape[0]
    cmax = 0.0
    for e in range(n_arcs):
        cmax = max(cmax, abs(arc_cost[e]))
    # artificial paths may be long, so the big-M must dominate any simple path
    art_cost = (cmax + 1.0) * (big_n + 1)
    tol = 1e-12 * (cmax + 1.0)

    (parent, pred, thread, rev_thread, succ_num, last_succ,
     pred_dir, pi, flow, pcost) = _init_tree(supply, art_cost, n_arcs)
    dirty = np.empty(big_n + 1, np.int64)
    state = np.ones(n_arcs, np.int8)

    block = max(int(math.ceil(math.sqrt(n_arcs))), 10)
    next_arc = 0
    it = 0
    status = STATUS_OPTIMAL
    while True:
        best = -1
        min_c = -tol
        cnt = block
        e = next_arc
        for _ in range(n_arcs):
            c = arc_cost[e] + pi[arc_src[e]] - pi[arc_tgt[e]]
            if c < min_c and state[e] == 1:
                min_c = c
                best = e
            e += 1
            if e == n_arcs:
                e = 0
            cnt -= 1
            if cnt == 0:
                if best >= 0:
                    break
                cnt = block
        if best < 0:
            _recompute_potentials(thread, parent, pred_dir, pcost, pi, root)
            for e2 in range(n_arcs):
                c = arc_cost[e2] + pi[arc_src[e2]] - pi[arc_tgt[e2]]
                if c < -tol and state[e2] == 1:
                    best = e2
                    break
            if best < 0:
                break
            e = best + 1 if best + 1 < n_arcs else 0
        next_arc = e
        if it >= max_iter:
            status = STATUS_MAX_ITER
            break
        it += 1
        out_arc = _pivot(best, arc_src[best], arc_tgt[best], arc_cost[best],
                         parent, pred, thread, rev_thread, succ_num, last_succ,
                         pred_dir, pi, flow, pcost, dirty)
        state[best] = 0
        if out_arc < n_arcs:
            state[out_arc] = 1

    arc_flow = np.zeros(n_arcs, np.float64)
    for u in range(big_n):
        if pred[u] < n_arcs:
            arc_flow[pred[u]] = flow[u]
    return status, it, arc_flow


@nb.njit(cache=True)
def decompose_lattice_flow(excess, arc_src, arc_tgt, arc_flow, out_start, out_arcs, tol):
    """Split an acyclic node-arc flow into source->sink path masses.

    ``excess`` holds net supply per node (positive: source).  ``out_start``/
    ``out_arcs`` is a CSR adjacency of outgoing arcs.  Returns parallel arrays
    (from_node, to_node, mass).
    """
    n_nodes = excess.shape[0]
    ex = excess.copy()
    fl = arc_flow.copy()
    cap = 16
    f_node = np.empty(cap, np.int64)
    t_node = np.empty(cap, np.int64)
    amount = np.empty(cap, np.float64)
    k = 0
    path = np.empty(n_nodes + 1, np.int64)
    for s in range(n_nodes):
        while ex[s] > tol:
            # walk forward along positive flow until a node with unmet demand
            v = s
            plen = 0
            bott = ex[s]
            while True:
                if v != s and ex[v] < -tol:
                    bott = min(bott, -ex[v])
                    break
                nxt = -1
                for kk in range(out_start[v], out_start[v + 1]):
                    e = out_arcs[kk]
                    if fl[e] > tol:
                        nxt = e
                        break
                if nxt < 0:
                    break
                path[plen] = nxt
                plen += 1
                bott = min(bott, fl[nxt])
                v = arc_tgt[nxt]
            if v == s or ex[v] >= -tol:
                # stranded residue below tolerance; drop it
                ex[s] = 0.0
                break
            for kk in range(plen):
                fl[path[kk]] -= bott
            ex[s] -= bott
            ex[v] += bott
            if k == cap:
                cap *= 2
                f2 = np.empty(cap, np.int64)
                t2 = np.empty(cap, np.int64)
                a2 = np.empty(cap, np.float64)
                f2[:k] = f_node[:k]
                t2[:k] = t_node[:k]
                a2[:k] = amount[:k]
                f_node = f2
                t_node = t2
                amount = a2
            f_node[k] = s
            t_node[k] = v
            amount[k] = bott
            k += 1
    return f_node[:k], t_node[:k], amount[:k]
