"""Compiled kernel: extreme gaps of all orbit windows of a point family.

Points carry an orbit index ``idx``.  For every window start ``a`` in a range
and every window end ``b >= max(a, 0)`` with ``b - a + 1 <= n_max`` the kernel
tracks the smallest and largest circle gap of the points with index in
[a, b].  Per window length n it keeps the worst value over all windows and the
window end where it occurred.

For a fixed start the full window is built once; points are then deleted from
the right end (the largest gap can only grow, O(1) per deletion) and re-inserted
in reverse order (the smallest gap can only shrink, O(1) per insertion).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _gap(pos, u, v):
    if u == v:
        return 1.0
    g = pos[v] - pos[u]
    if g <= 0.0:
        g += 1.0
    return g


@njit(cache=True)
def scan_windows(pos, idx, uid, n_uid, a_lo, a_hi, n_max):
    """pos/idx/uid sorted by idx.  Returns (min_v, min_b, max_v, max_b) indexed by n."""
    m = pos.shape[0]
    min_v = np.full(n_max + 1, np.inf)
    min_b = np.zeros(n_max + 1, np.int64)
    max_v = np.full(n_max + 1, -np.inf)
    max_b = np.zeros(n_max + 1, np.int64)
    i_min = idx[0]
    i_max = idx[m - 1]
    span = i_max - i_min + 1
    start = np.zeros(span + 1, np.int64)
    for p in range(m):
        start[idx[p] - i_min + 1] += 1
    for s in range(span):
        start[s + 1] += start[s]

    node_of = np.full(n_uid, -1, np.int64)
    count = np.zeros(n_uid, np.int64)
    for a in range(a_lo, a_hi + 1):
        hi = a + n_max - 1
        b0 = a if a > 0 else 0
        if hi > i_max:
            hi = i_max
        if b0 > hi:
            continue
        p_lo = start[a - i_min]
        p_hi = start[hi - i_min + 1]
        sel = np.arange(p_lo, p_hi)
        order = np.argsort(pos[sel], kind="mergesort")
        # unique nodes in circular order
        k = sel.shape[0]
        node_pos = np.empty(k)
        node_uid = np.empty(k, np.int64)
        nn = 0
        for t in range(k):
            p = sel[order[t]]
            u = uid[p]
            if node_of[u] < 0:
                node_of[u] = nn
                node_pos[nn] = pos[p]
                node_uid[nn] = u
                nn += 1
            count[u] += 1
        prev = np.empty(nn, np.int64)
        nxt = np.empty(nn, np.int64)
        for t in range(nn):
            prev[t] = t - 1 if t > 0 else nn - 1
            nxt[t] = t + 1 if t < nn - 1 else 0
        cur_max = 0.0
        for t in range(nn):
            g = _gap(node_pos, t, nxt[t])
            if g > cur_max:
                cur_max = g
        # deletion pass: b from hi down to b0
        log_node = np.empty(nn, np.int64)
        log_b = np.empty(nn, np.int64)
        nlog = 0
        b = hi
        q = p_hi - 1
        while True:
            n = b - a + 1
            if cur_max > max_v[n]:
                max_v[n] = cur_max
                max_b[n] = b
            if b == b0:
                break
            while q >= p_lo and idx[q] == b:
                u = uid[q]
                count[u] -= 1
                if count[u] == 0:
                    t = node_of[u]
                    pv, nx = prev[t], nxt[t]
                    merged = _gap(node_pos, pv, t) + _gap(node_pos, t, nx)
                    if pv == nx:
                        merged = 1.0
                    if merged > cur_max:
                        cur_max = merged
                    nxt[pv] = nx
                    prev[nx] = pv
                    log_node[nlog] = t
                    log_b[nlog] = b
                    nlog += 1
                q -= 1
            b -= 1
        # smallest gap of the window [a, b0] by traversal
        first = -1
        for t in range(nn):
            if count[node_uid[t]] > 0:
                first = t
                break
        cur_min = _gap(node_pos, first, nxt[first])
        t = nxt[first]
        while t != first:
            g = _gap(node_pos, t, nxt[t])
            if g < cur_min:
                cur_min = g
            t = nxt[t]
        n = b0 - a + 1
        if cur_min < min_v[n]:
            min_v[n] = cur_min
            min_b[n] = b0
        # insertion pass: replay deletions backwards
        r = nlog - 1
        bb = b0 + 1
        while bb <= hi:
            while r >= 0 and log_b[r] == bb:
                t = log_node[r]
                pv, nx = prev[t], nxt[t]
                nxt[pv] = t
                prev[nx] = t
                g1 = _gap(node_pos, pv, t)
                g2 = _gap(node_pos, t, nx)
                if g1 < cur_min:
                    cur_min = g1
                if g2 < cur_min:
                    cur_min = g2
                r -= 1
            n = bb - a + 1
            if cur_min < min_v[n]:
                min_v[n] = cur_min
                min_b[n] = bb
            bb += 1
        # reset per-start state
        for t in range(nn):
            u = node_uid[t]
            node_of[u] = -1
            count[u] = 0
    return min_v, min_b, max_v, max_b
