"""Inner loops shared by blocking and the matchers.

Each kernel exists twice: a numba-compiled version (``*_jit``) and a numpy /
pure-Python version (``*_py``). The unsuffixed names dispatch to whichever
backend ``_accel`` selected at import time. Tests and the benchmark call both
suffixed forms directly and require identical output.
"""

from __future__ import annotations

import heapq

import numpy as np

from ._accel import USE_NUMBA, njit

# --- candidate pair expansion ---------------------------------------------


def _expand_pairs_loop(l_ptr, l_idx, r_ptr, r_idx, l_tok, r_tok, n_right):
    total = 0
    for k in range(l_tok.shape[0]):
        a = l_tok[k]
        b = r_tok[k]
        total += (l_ptr[a + 1] - l_ptr[a]) * (r_ptr[b + 1] - r_ptr[b])
    codes = np.empty(total, dtype=np.int64)
    pos = 0
    for k in range(l_tok.shape[0]):
        a = l_tok[k]
        b = r_tok[k]
        for p in range(l_ptr[a], l_ptr[a + 1]):
            base = l_idx[p] * n_right
            for q in range(r_ptr[b], r_ptr[b + 1]):
                codes[pos] = base + r_idx[q]
                pos += 1
    return np.unique(codes)


expand_pairs_jit = njit(_expand_pairs_loop)


def expand_pairs_py(l_ptr, l_idx, r_ptr, r_idx, l_tok, r_tok, n_right):
    """Sorted unique ``h1 * n_right + h2`` codes over all shared-token postings."""
    chunks = []
    for a, b in zip(l_tok.tolist(), r_tok.tolist()):
        lh = l_idx[l_ptr[a]:l_ptr[a + 1]].astype(np.int64)
        rh = r_idx[r_ptr[b]:r_ptr[b + 1]].astype(np.int64)
        chunks.append((lh[:, None] * n_right + rh[None, :]).ravel())
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(chunks))


# --- first choice ----------------------------------------------------------


@njit
def first_choice_jit(src, dst, score, n_src):
    best = np.full(n_src, -1, dtype=np.int64)
    for e in range(src.shape[0]):
        s = src[e]
        b = best[s]
        if b == -1 or score[e] > score[b] or (score[e] == score[b] and dst[e] < dst[b]):
            best[s] = e
    return best


def first_choice_py(src, dst, score, n_src):
    """Per source node, index of its best edge (score desc, dst asc) or -1."""
    best = np.full(n_src, -1, dtype=np.int64)
    if src.shape[0] == 0:
        return best
    order = np.lexsort((dst, -score, src))
    nodes, first = np.unique(src[order], return_index=True)
    best[nodes] = order[first]
    return best


# --- greedy ------------------------------------------------------------------


@njit
def greedy_jit(left, right, order, n_left, n_right):
    used_l = np.zeros(n_left, dtype=np.bool_)
    used_r = np.zeros(n_right, dtype=np.bool_)
    out = np.empty(order.shape[0], dtype=np.int64)
    k = 0
    for e in order:
        a = left[e]
        b = right[e]
        if not used_l[a] and not used_r[b]:
            used_l[a] = True
            used_r[b] = True
            out[k] = e
            k += 1
    return out[:k]


def greedy_py(left, right, order, n_left, n_right):
    """Accept edges in ``order`` whose endpoints are both still free."""
    used_l: set = set()
    used_r: set = set()
    out = []
    lefts = left.tolist()
    rights = right.tolist()
    for e in order.tolist():
        a = lefts[e]
        b = rights[e]
        if a not in used_l and b not in used_r:
            used_l.add(a)
            used_r.add(b)
            out.append(e)
    return np.asarray(out, dtype=np.int64)


# --- connected components ----------------------------------------------------


def _components_loop(n_left, n_right, left, right):
    n = n_left + n_right
    parent = np.arange(n)
    for e in range(left.shape[0]):
        a = left[e]
        b = right[e] + n_left
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        parent[v] = r
    return parent


components_jit = njit(_components_loop)
components_py = _components_loop


# --- exact maximum weight matching ---------------------------------------


def _max_weight_loop(n_left, n_right, ptr, adj_r, adj_w, eps):
    """Successive shortest augmenting paths with node potentials.

    Costs are negated weights. Augmentation stops as soon as the cheapest
    augmenting path no longer lowers total cost, so the result maximises
    weight rather than cardinality. Returns, per left node, the adjacency
    position of its matched edge or -1.
    """
    inf = np.inf
    pl = np.zeros(n_left)
    pr = np.full(n_right, inf)
    for i in range(n_left):
        for k in range(ptr[i], ptr[i + 1]):
            j = adj_r[k]
            if -adj_w[k] < pr[j]:
                pr[j] = -adj_w[k]
    for j in range(n_right):
        if pr[j] == inf:
            pr[j] = 0.0
    ps = 0.0
    pt = 0.0
    if n_right > 0:
        pt = pr.min()

    mate_l = np.full(n_left, -1, dtype=np.int64)
    mate_r = np.full(n_right, -1, dtype=np.int64)
    mate_k = np.full(n_left, -1, dtype=np.int64)
    dist_l = np.empty(n_left)
    dist_r = np.empty(n_right)
    prev_r = np.empty(n_right, dtype=np.int64)
    prev_k = np.empty(n_right, dtype=np.int64)

    for _ in range(min(n_left, n_right)):
        dist_l[:] = inf
        dist_r[:] = inf
        dist_t = inf
        last_j = -1
        heap = [(0.0, 0)]
        heap.pop()
        for i in range(n_left):
            if mate_l[i] == -1:
                dist_l[i] = ps - pl[i]
                heapq.heappush(heap, (dist_l[i], i))
        while len(heap) > 0:
            d, u = heapq.heappop(heap)
            if d >= dist_t:
                break
            if u < n_left:
                if d > dist_l[u]:
                    continue
                for k in range(ptr[u], ptr[u + 1]):
                    j = adj_r[k]
                    if mate_l[u] == j:
                        continue
                    nd = d - adj_w[k] + pl[u] - pr[j]
                    if nd < dist_r[j]:
                        dist_r[j] = nd
                        prev_r[j] = u
                        prev_k[j] = k
                        heapq.heappush(heap, (nd, n_left + j))
            else:
                j = u - n_left
                if d > dist_r[j]:
                    continue
                i = mate_r[j]
                if i == -1:
                    nd = d + pr[j] - pt
                    if nd < dist_t:
                        dist_t = nd
                        last_j = j
                else:
                    nd = d + adj_w[mate_k[i]] + pr[j] - pl[i]
                    if nd < dist_l[i]:
                        dist_l[i] = nd
                        heapq.heappush(heap, (nd, i))
        if last_j == -1:
            break
        if dist_t + pt - ps >= -eps:
            break
        j = last_j
        while True:
            i = prev_r[j]
            nxt = mate_l[i]
            mate_l[i] = j
            mate_r[j] = i
            mate_k[i] = prev_k[j]
            if nxt == -1:
                break
            j = nxt
        for i in range(n_left):
            pl[i] += min(dist_l[i], dist_t)
        for j in range(n_right):
            pr[j] += min(dist_r[j], dist_t)
        pt += dist_t
    return mate_k


max_weight_jit = njit(_max_weight_loop)
max_weight_py = _max_weight_loop


def _duals_loop(n_left, n_right, li, ri, w, in_m, eps):
    """Optimal dual prices certifying a maximum-weight matching.

    Bellman-Ford distances in the residual graph with source and sink merged
    into one hub: hub to free lefts and matched rights at cost 0, unmatched
    edges left to right at cost -w, matched edges right to left at +w. Left
    prices are the distances, matched right prices their negation. Returns
    ``(u, v, ok)``; ``ok`` is False when relaxation did not settle, which
    only happens if the matching was not optimal.
    """
    inf = np.inf
    m = li.shape[0]
    mate_edge_r = np.full(n_right, -1, dtype=np.int64)
    matched_l = np.zeros(n_left, dtype=np.bool_)
    for k in range(m):
        if in_m[k]:
            mate_edge_r[ri[k]] = k
            matched_l[li[k]] = True
    dist_l = np.zeros(n_left)
    dist_r = np.full(n_right, inf)
    for i in range(n_left):
        if matched_l[i]:
            dist_l[i] = inf
    for j in range(n_right):
        if mate_edge_r[j] >= 0:
            dist_r[j] = 0.0
    ok = False
    for _ in range(n_left + n_right + 2):
        changed = False
        for j in range(n_right):
            k = mate_edge_r[j]
            if k >= 0:
                nd = dist_r[j] + w[k]
                if nd < dist_l[li[k]] - eps:
                    dist_l[li[k]] = nd
                    changed = True
        for k in range(m):
            if not in_m[k] and dist_l[li[k]] < inf:
                nd = dist_l[li[k]] - w[k]
                if nd < dist_r[ri[k]] - eps:
                    dist_r[ri[k]] = nd
                    changed = True
        if not changed:
            ok = True
            break
    u = np.zeros(n_left)
    v = np.zeros(n_right)
    for i in range(n_left):
        if matched_l[i]:
            u[i] = max(dist_l[i], 0.0)
    for j in range(n_right):
        if mate_edge_r[j] >= 0:
            v[j] = max(-dist_r[j], 0.0)
    return u, v, ok


duals_jit = njit(_duals_loop)
duals_py = _duals_loop


if USE_NUMBA:
    expand_pairs = expand_pairs_jit
    first_choice = first_choice_jit
    greedy = greedy_jit
    components = components_jit
    max_weight = max_weight_jit
    duals = duals_jit
else:
    expand_pairs = expand_pairs_py
    first_choice = first_choice_py
    greedy = greedy_py
    components = components_py
    max_weight = max_weight_py
    duals = duals_py
