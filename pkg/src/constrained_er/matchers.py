"""Resolution algorithms over a sparse bipartite graph of scored pairs.

Edges scoring at least ``theta`` are eligible (scores equal to the threshold
count). Wherever an order matters ties are broken by score descending, then
left handle ascending, then right handle ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import InstanceTooLarge, MatcherError
from .model import Matching

ALGORITHMS = ("many-many", "first-choice", "mutual", "greedy", "max-weight")
DIRECTIONS = ("l2r", "r2l")
ONE_TO_ONE = frozenset({"mutual", "greedy", "max-weight"})

MAX_COMPONENT_NODES = 200_000
BRUTE_FORCE_CAP = 10
GAIN_EPS = 1e-12
TIGHT_TOL = 1e-11  # slack below which an edge counts as tied with the optimum


class ScoredGraph:
    """Blocked pairs with positive scores, stored sorted by (left, right)."""

    def __init__(self, n_left: int, n_right: int, left, right, score,
                 left_ids: Optional[Sequence] = None, right_ids: Optional[Sequence] = None):
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        score = np.asarray(score, dtype=np.float64)
        if not (left.shape == right.shape == score.shape and left.ndim == 1):
            raise MatcherError("edge arrays must be 1-d and equally long")
        if left.size:
            if left.min() < 0 or left.max() >= n_left or right.min() < 0 or right.max() >= n_right:
                raise MatcherError("edge endpoint out of range")
            if not np.all(np.isfinite(score)) or score.min() <= 0.0:
                raise MatcherError("edge scores must be finite and strictly positive")
        order = np.lexsort((right, left))
        left, right, score = left[order], right[order], score[order]
        if left.size > 1:
            dup = (left[1:] == left[:-1]) & (right[1:] == right[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise MatcherError(f"duplicate edge ({left[k]}, {right[k]})")
        self.n_left = int(n_left)
        self.n_right = int(n_right)
        self.left = left
        self.right = right
        self.score = score
        self.left_ids = list(left_ids) if left_ids is not None else list(range(self.n_left))
        self.right_ids = list(right_ids) if right_ids is not None else list(range(self.n_right))
        if len(self.left_ids) != self.n_left or len(self.right_ids) != self.n_right:
            raise MatcherError("id lists must match node counts")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int, float]], n_left: Optional[int] = None,
                   n_right: Optional[int] = None) -> "ScoredGraph":
        edges = list(edges)
        l = [e[0] for e in edges]
        r = [e[1] for e in edges]
        s = [e[2] for e in edges]
        nl = n_left if n_left is not None else (max(l) + 1 if l else 0)
        nr = n_right if n_right is not None else (max(r) + 1 if r else 0)
        return cls(nl, nr, l, r, s)

    @classmethod
    def from_scored_pairs(cls, pairs: Iterable[tuple[str, str, float]],
                          left_ids: Optional[Sequence[str]] = None,
                          right_ids: Optional[Sequence[str]] = None) -> "ScoredGraph":
        """Build from id triples; zero scores are dropped as unblocked.

        Without explicit id lists, handles follow first appearance.
        """
        lmap: dict = {} if left_ids is None else {x: k for k, x in enumerate(left_ids)}
        rmap: dict = {} if right_ids is None else {x: k for k, x in enumerate(right_ids)}
        l, r, s = [], [], []
        for a, b, score in pairs:
            if score == 0.0:
                continue
            if a not in lmap:
                if left_ids is not None:
                    raise MatcherError(f"unknown left id {a!r}")
                lmap[a] = len(lmap)
            if b not in rmap:
                if right_ids is not None:
                    raise MatcherError(f"unknown right id {b!r}")
                rmap[b] = len(rmap)
            l.append(lmap[a])
            r.append(rmap[b])
            s.append(score)
        lids = list(left_ids) if left_ids is not None else list(lmap)
        rids = list(right_ids) if right_ids is not None else list(rmap)
        return cls(len(lids), len(rids), l, r, s, lids, rids)

    def __len__(self) -> int:
        return int(self.left.shape[0])

    def eligible(self, theta: float) -> np.ndarray:
        return np.flatnonzero(self.score >= theta)

    def weight(self, edges) -> float:
        return math.fsum(self.score[np.asarray(edges, dtype=np.int64)].tolist())

    def to_matching(self, edges, constrained: bool) -> Matching:
        edges = np.sort(np.asarray(edges, dtype=np.int64))
        pairs = tuple(
            (self.left_ids[a], self.right_ids[b], s)
            for a, b, s in zip(self.left[edges].tolist(), self.right[edges].tolist(), self.score[edges].tolist())
        )
        return Matching(pairs, constrained=constrained)

    def edge_keys(self, edges) -> set[tuple[int, int]]:
        edges = np.asarray(edges, dtype=np.int64)
        return set(zip(self.left[edges].tolist(), self.right[edges].tolist()))


# --- edge selections (sorted arrays of edge indices) --------------------------

def select_many_many(g: ScoredGraph, theta: float) -> np.ndarray:
    return g.eligible(theta)


def select_first_choice(g: ScoredGraph, theta: float, direction: str = "l2r") -> np.ndarray:
    if direction not in DIRECTIONS:
        raise MatcherError(f"unknown direction {direction!r}")
    elig = g.eligible(theta)
    if direction == "l2r":
        src, dst, n_src = g.left[elig], g.right[elig], g.n_left
    else:
        src, dst, n_src = g.right[elig], g.left[elig], g.n_right
    best = kernels.first_choice(src, dst, g.score[elig], n_src)
    return np.sort(elig[best[best >= 0]])


def select_mutual_first_choice(g: ScoredGraph, theta: float) -> np.ndarray:
    return np.intersect1d(select_first_choice(g, theta, "l2r"), select_first_choice(g, theta, "r2l"))


def greedy_order(g: ScoredGraph, edges: np.ndarray) -> np.ndarray:
    """``edges`` reordered by score desc, left asc, right asc."""
    return edges[np.lexsort((g.right[edges], g.left[edges], -g.score[edges]))]


def select_greedy(g: ScoredGraph, theta: float) -> np.ndarray:
    order = greedy_order(g, g.eligible(theta))
    return np.sort(kernels.greedy(g.left, g.right, order, g.n_left, g.n_right))


def _components_of(g: ScoredGraph, elig: np.ndarray) -> list[np.ndarray]:
    """Eligible edges grouped by connected component, each group sorted."""
    if elig.size == 0:
        return []
    labels = kernels.components(g.n_left, g.n_right, g.left[elig], g.right[elig])
    comp = labels[g.left[elig]]
    order = np.argsort(comp, kind="stable")
    cuts = np.flatnonzero(np.diff(comp[order])) + 1
    return np.split(elig[order], cuts)


def _solve_component(g: ScoredGraph, edges: np.ndarray) -> np.ndarray:
    if edges.size == 1:
        return edges
    lu, li = np.unique(g.left[edges], return_inverse=True)
    ru, ri = np.unique(g.right[edges], return_inverse=True)
    if lu.size == 1 or ru.size == 1:
        return greedy_order(g, edges)[:1]
    # edges arrive sorted by (left, right): local CSR rows are contiguous
    ptr = np.zeros(lu.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(li, minlength=lu.size), out=ptr[1:])
    ri = ri.astype(np.int64)
    w = g.score[edges]
    mate_k = kernels.max_weight(lu.size, ru.size, ptr, ri, w, GAIN_EPS)
    picked = mate_k[mate_k >= 0]
    return edges[_lex_smallest_optimum(lu.size, ru.size, li.astype(np.int64), ri, w, picked)]


def _lex_smallest_optimum(n_left, n_right, li, ri, w, picked):
    """Among matchings as heavy as ``picked``, the one with the smallest
    sorted edge list.

    Edges are local and sorted by (left, right). Dual prices split the graph
    into tight edges and nodes that every optimal matching must cover; any
    matching on tight edges covering those nodes is optimal. Edges are then
    fixed in order whenever such a matching still contains all fixed edges.
    By the Mendelsohn-Dulmage theorem a matching covering the required lefts
    and one covering the required rights suffice, so each probe is at most
    two augmenting-path searches.
    """
    in_m = np.zeros(li.size, dtype=np.bool_)
    in_m[picked] = True
    u, v, ok = kernels.duals(n_left, n_right, li, ri, w, in_m, GAIN_EPS * 0.1)
    if not ok:
        return picked
    tight = np.flatnonzero(u[li] + v[ri] - w <= TIGHT_TOL)
    if tight.size == picked.size:
        return picked
    need_l = u > TIGHT_TOL
    need_r = v > TIGHT_TOL
    adj_l = [[] for _ in range(n_left)]
    adj_r = [[] for _ in range(n_right)]
    for k in tight:
        adj_l[li[k]].append(int(ri[k]))
        adj_r[ri[k]].append(int(li[k]))
    # x_* covers the required lefts, y_* the required rights; both start as
    # the solver's answer and never touch fixed nodes
    x_l = np.full(n_left, -1, dtype=np.int64)
    x_r = np.full(n_right, -1, dtype=np.int64)
    x_l[li[picked]] = ri[picked]
    x_r[ri[picked]] = li[picked]
    y_l, y_r = x_l.copy(), x_r.copy()
    gone_l = np.zeros(n_left, dtype=np.bool_)
    gone_r = np.zeros(n_right, dtype=np.bool_)
    fixed = []
    for k in tight:
        a, b = int(li[k]), int(ri[k])
        if gone_l[a] or gone_r[b]:
            continue
        gone_l[a] = gone_r[b] = True
        trial_x = _probe(x_l, x_r, a, b, need_l, adj_l, gone_l, gone_r)
        trial_y = _probe(y_r, y_l, b, a, need_r, adj_r, gone_r, gone_l) if trial_x is not None else None
        if trial_y is None:
            gone_l[a] = gone_r[b] = False
            continue
        x_l, x_r = trial_x
        y_r, y_l = trial_y
        fixed.append(k)
    return np.array(fixed, dtype=np.int64)


def _probe(mate_s, mate_t, a, b, need_s, adj_s, gone_s, gone_t):
    """Remove nodes ``a`` (side s) and ``b`` (side t) from a matching that
    covers every required s-node, then repair it by one alternating path
    ending at a free t-node or at a t-node held by an optional s-node.

    Returns the repaired ``(mate_s, mate_t)`` copies or None if some required
    s-node can no longer be covered.
    """
    mate_s, mate_t = mate_s.copy(), mate_t.copy()
    if mate_s[a] >= 0:
        mate_t[mate_s[a]] = -1
        mate_s[a] = -1
    orphan = mate_t[b]
    if orphan >= 0:
        mate_s[orphan] = -1
        mate_t[b] = -1
    if orphan < 0 or orphan == a or not need_s[orphan]:
        return mate_s, mate_t
    # breadth-first alternating search from the orphan to a free t-node
    parent = {}
    queue = [int(orphan)]
    seen_s = {int(orphan)}
    head = 0
    while head < len(queue):
        s = queue[head]
        head += 1
        for t in adj_s[s]:
            if gone_t[t] or t in parent:
                continue
            parent[t] = s
            nxt = int(mate_t[t])
            if nxt >= 0 and not need_s[nxt]:
                mate_s[nxt] = -1  # an optional node may give up its partner
                nxt = -1
            if nxt < 0:
                while True:
                    s = parent[t]
                    prev = int(mate_s[s])
                    mate_s[s] = t
                    mate_t[t] = s
                    if s == orphan:
                        return mate_s, mate_t
                    t = prev
            if nxt not in seen_s and not gone_s[nxt]:
                seen_s.add(nxt)
                queue.append(nxt)
    return None


def select_max_weight(g: ScoredGraph, theta: float, max_component_nodes: int = MAX_COMPONENT_NODES) -> np.ndarray:
    """Exact maximum-weight matching over eligible edges, component by component."""
    groups = _components_of(g, g.eligible(theta))
    for edges in groups:
        nodes = np.unique(g.left[edges]).size + np.unique(g.right[edges]).size
        if nodes > max_component_nodes:
            raise InstanceTooLarge(f"component with {nodes} nodes exceeds cap {max_component_nodes}")
    chosen = [_solve_component(g, edges) for edges in groups]
    if not chosen:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(chosen))


def select_brute_force_max_weight(g: ScoredGraph, theta: float, cap: int = BRUTE_FORCE_CAP) -> np.ndarray:
    """Exhaustive search over all matchings of the eligible edges.

    Ties in total weight go to the lexicographically smallest sorted list of
    (left, right) handle pairs. Requires at most ``cap`` distinct nodes on
    the smaller side.
    """
    elig = g.eligible(theta)
    n_l = np.unique(g.left[elig]).size
    n_r = np.unique(g.right[elig]).size
    if min(n_l, n_r) > cap:
        raise InstanceTooLarge(f"brute force limited to {cap} nodes on the smaller side")
    if n_r <= cap:
        chosen = _brute_force_by_left(g, elig)
    else:
        chosen = _brute_force_by_right(g, elig)
    return np.array(sorted(chosen), dtype=np.int64)


def _brute_force_by_left(g: ScoredGraph, elig: np.ndarray) -> list[int]:
    """Memoized search over left nodes in order, bitmask over right nodes.

    Pairs chosen for earlier lefts sort before all later ones, so the
    lexicographically smallest optimal completion of every subproblem
    extends to the overall answer.
    """
    lefts = np.unique(g.left[elig]).tolist()
    rlocal = {b: k for k, b in enumerate(np.unique(g.right[elig]).tolist())}
    adj: dict[int, list[tuple[int, int, float]]] = {a: [] for a in lefts}
    for e in elig.tolist():
        adj[int(g.left[e])].append((e, int(g.right[e]), float(g.score[e])))
    memo: dict = {}

    def best(k: int, used: int):
        # (weight, sorted pair tuple, scores, edges) for lefts[k:] given used rights
        if k == len(lefts):
            return 0.0, (), (), ()
        key = (k, used)
        if key in memo:
            return memo[key]
        a = lefts[k]
        top = best(k + 1, used)
        for e, b, s in adj[a]:
            bit = 1 << rlocal[b]
            if used & bit:
                continue
            _, rest_pairs, rest_scores, rest_edges = best(k + 1, used | bit)
            scores = (s,) + rest_scores
            cand = (math.fsum(scores), ((a, b),) + rest_pairs, scores, (e,) + rest_edges)
            if cand[0] > top[0] or (cand[0] == top[0] and cand[1] < top[1]):
                top = cand
        memo[key] = top
        return top

    return list(best(0, 0)[3])


def _brute_force_by_right(g: ScoredGraph, elig: np.ndarray, tol: float = 1e-12) -> list[int]:
    """Few lefts, many rights: weights by a DP over rights with a bitmask
    over lefts, then the smallest sorted pair list built one pair at a time,
    each pair accepted only if an optimal completion still exists.
    """
    lefts = np.unique(g.left[elig]).tolist()
    llocal = {a: k for k, a in enumerate(lefts)}
    by_right: dict[int, list[tuple[int, float]]] = {}
    for e in elig.tolist():
        by_right.setdefault(int(g.right[e]), []).append((llocal[int(g.left[e])], float(g.score[e])))
    rights = sorted(by_right)
    memo: dict = {}

    def best_weight(allowed: int, banned: frozenset) -> float:
        key = (allowed, banned)
        if key not in memo:
            states = {0: 0.0}
            for b in rights:
                if b in banned:
                    continue
                nxt = dict(states)
                for used, w in states.items():
                    for k, s in by_right[b]:
                        bit = 1 << k
                        if allowed & bit and not used & bit:
                            cand = w + s
                            if cand > nxt.get(used | bit, -1.0):
                                nxt[used | bit] = cand
                states = nxt
            memo[key] = max(states.values())
        return memo[key]

    full = (1 << len(lefts)) - 1
    target = best_weight(full, frozenset())
    chosen: list[int] = []
    acc = 0.0
    banned: frozenset = frozenset()
    last_left = -1
    while acc < target - tol:
        for e in elig.tolist():  # eligible edges are in (left, right) order
            a, b, s = int(g.left[e]), int(g.right[e]), float(g.score[e])
            k = llocal[a]
            if k <= last_left or b in banned:
                continue
            after = full & ~((1 << (k + 1)) - 1)
            if acc + s + best_weight(after, banned | {b}) >= target - tol:
                chosen.append(e)
                acc += s
                banned = banned | {b}
                last_left = k
                break
        else:  # pragma: no cover - the optimum is always reachable
            raise MatcherError("brute force failed to rebuild an optimal matching")
    return chosen


# --- public matchers returning Matching --------------------------------------

def many_many(g: ScoredGraph, theta: float) -> Matching:
    return g.to_matching(select_many_many(g, theta), constrained=False)


def first_choice(g: ScoredGraph, theta: float, direction: str = "l2r") -> Matching:
    return g.to_matching(select_first_choice(g, theta, direction), constrained=False)


def mutual_first_choice(g: ScoredGraph, theta: float) -> Matching:
    return g.to_matching(select_mutual_first_choice(g, theta), constrained=True)


def greedy(g: ScoredGraph, theta: float) -> Matching:
    return g.to_matching(select_greedy(g, theta), constrained=True)


def max_weight(g: ScoredGraph, theta: float, max_component_nodes: int = MAX_COMPONENT_NODES) -> Matching:
    return g.to_matching(select_max_weight(g, theta, max_component_nodes), constrained=True)


def brute_force_max_weight(g: ScoredGraph, theta: float, cap: int = BRUTE_FORCE_CAP) -> Matching:
    return g.to_matching(select_brute_force_max_weight(g, theta, cap), constrained=True)


def select(g: ScoredGraph, algorithm: str, theta: float, direction: str = "l2r") -> np.ndarray:
    """Edge indices chosen by ``algorithm`` (one of ``ALGORITHMS``)."""
    if algorithm == "many-many":
        return select_many_many(g, theta)
    if algorithm == "first-choice":
        return select_first_choice(g, theta, direction)
    if algorithm == "mutual":
        return select_mutual_first_choice(g, theta)
    if algorithm == "greedy":
        return select_greedy(g, theta)
    if algorithm == "max-weight":
        return select_max_weight(g, theta)
    raise MatcherError(f"unknown algorithm {algorithm!r}")


def run(g: ScoredGraph, algorithm: str, theta: float, direction: str = "l2r") -> Matching:
    return g.to_matching(select(g, algorithm, theta, direction), constrained=algorithm in ONE_TO_ONE)
