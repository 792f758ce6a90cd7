"""Precision and recall with inferred false positives, PR sweeps and the
within-dataset duplicate scan.

Besides predicted pairs labeled negative, a predicted pair is a false
positive when the truth set matches either endpoint to someone else. The
three kinds are summed literally, so one pair can count more than once;
``dedupe=True`` counts each wrong pair at most once instead.
"""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import matchers
from .blocking import DEFAULT_STOPWORDS, build_index, self_candidate_pairs
from .combiner import LogisticModel, predict_matrix
from .features import DEFAULT_PARAMS, FeatureParams, FeatureScorer
from .model import Dataset, Matching, TruthSet


@dataclass(frozen=True)
class OutcomeCounts:
    tp: int
    fn: int
    fp_negative: int
    fp_left: int
    fp_right: int
    fp: int

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return 1.0 if denom == 0 else self.tp / denom

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return 1.0 if denom == 0 else self.tp / denom

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fn": self.fn,
            "fp": self.fp,
            "fp_kinds": {"truth_negative": self.fp_negative, "left_inferred": self.fp_left,
                         "right_inferred": self.fp_right},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


class _TruthLookup:
    def __init__(self, t: TruthSet):
        self.t = t
        self.by_left: dict = defaultdict(set)
        self.by_right: dict = defaultdict(set)
        for a, b in t.positives:
            self.by_left[a].add(b)
            self.by_right[b].add(a)

    def count(self, predicted: Iterable[tuple], dedupe: bool = False) -> OutcomeCounts:
        pos = self.t.positives
        pred = set(predicted)
        tp = len(pred & pos)
        neg = left = right = either = 0
        for a, b in pred:
            kn = self.t.is_negative((a, b))
            partners = self.by_left.get(a, ())
            kl = len(partners) > (1 if b in partners else 0)
            partners = self.by_right.get(b, ())
            kr = len(partners) > (1 if a in partners else 0)
            neg += kn
            left += kl
            right += kr
            either += kn or kl or kr
        return OutcomeCounts(tp, len(pos) - tp, neg, left, right, either if dedupe else neg + left + right)


def count_outcomes(m, t: TruthSet, dedupe: bool = False,
                   left: Optional[Dataset] = None, right: Optional[Dataset] = None) -> OutcomeCounts:
    """TP/FN/FP of a matching (or any iterable of id pairs) against a truth set.

    When datasets are given every predicted id must resolve on its side.
    """
    pairs = m.pair_set() if isinstance(m, Matching) else {(p[0], p[1]) for p in m}
    if left is not None or right is not None:
        for a, b in pairs:
            if left is not None:
                left.handle(a)
            if right is not None:
                right.handle(b)
    return _TruthLookup(t).count(pairs, dedupe)


@dataclass(frozen=True)
class PRPoint:
    theta: float
    counts: OutcomeCounts
    weight: float
    size: int

    @property
    def precision(self) -> float:
        return self.counts.precision

    @property
    def recall(self) -> float:
        return self.counts.recall

    @property
    def f1(self) -> float:
        return self.counts.f1


def default_grid() -> np.ndarray:
    return np.round(np.arange(101) / 100.0, 2)


def score_grid(g: matchers.ScoredGraph) -> np.ndarray:
    """Every distinct edge score, for exact curves."""
    return np.unique(g.score)


def pr_curve(g: matchers.ScoredGraph, algorithm: str, t: TruthSet, thresholds: Sequence[float],
             direction: str = "l2r", threads: int = 1, dedupe: bool = False) -> list[PRPoint]:
    """Re-run ``algorithm`` at every threshold; points come back ordered by theta."""
    grid = sorted(float(x) for x in thresholds)
    if not grid:
        raise ValueError("threshold grid is empty")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    lookup = _TruthLookup(t)
    lids, rids = g.left_ids, g.right_ids

    def point(theta: float) -> PRPoint:
        edges = matchers.select(g, algorithm, theta, direction)
        pairs = [(lids[a], rids[b]) for a, b in zip(g.left[edges].tolist(), g.right[edges].tolist())]
        return PRPoint(theta, lookup.count(pairs, dedupe), g.weight(edges), int(edges.size))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(point, grid))
    return [point(th) for th in grid]


@dataclass(frozen=True)
class DuplicateCandidate:
    rank: int
    id1: str
    id2: str
    score: float


def self_duplicate_scan(d: Dataset, model: LogisticModel, step: int = 1, limit: Optional[int] = None,
                        stopwords: Iterable[str] = DEFAULT_STOPWORDS,
                        params: FeatureParams = DEFAULT_PARAMS) -> list[DuplicateCandidate]:
    """Score blocked pairs within one dataset and sample the ranked list.

    Each unordered pair appears once. Ranks start at 0; every ``step``-th
    rank is emitted, at most ``limit`` of them.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    pairs = self_candidate_pairs(build_index(d, stopwords))
    if len(pairs) == 0:
        return []
    X = FeatureScorer(d, d, params).matrix(pairs.left, pairs.right)
    scores = predict_matrix(model, X)
    order = np.lexsort((pairs.right, pairs.left, -scores))
    picked = order[::step]
    if limit is not None:
        picked = picked[:limit]
    ranks = np.arange(0, order.size, step)[: picked.size]
    return [
        DuplicateCandidate(int(r), d[int(pairs.left[k])].id, d[int(pairs.right[k])].id, float(scores[k]))
        for r, k in zip(ranks, picked)
    ]
