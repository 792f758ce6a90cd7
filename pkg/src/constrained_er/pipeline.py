"""Stage glue shared by the CLI and the end-to-end tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .blocking import DEFAULT_STOPWORDS, CandidatePairSet, build_index, candidate_pairs
from .combiner import LogisticModel, TrainConfig, predict_matrix, train_logistic
from .features import DEFAULT_PARAMS, FeatureParams, FeatureScorer
from .matchers import ScoredGraph
from .model import Dataset, TruthSet


@dataclass
class ScoredPairs:
    """Blocked pairs with their feature matrix and, once combined, scores."""

    left: Dataset
    right: Dataset
    left_handles: np.ndarray
    right_handles: np.ndarray
    features: np.ndarray
    scores: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.left_handles.shape[0])

    def graph(self) -> ScoredGraph:
        if self.scores is None:
            raise ValueError("pairs have not been scored by a model")
        return ScoredGraph(len(self.left), len(self.right), self.left_handles, self.right_handles,
                           self.scores, self.left.ids, self.right.ids)


def block(left: Dataset, right: Dataset, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> CandidatePairSet:
    stop = frozenset(stopwords)
    return candidate_pairs(build_index(left, stop), build_index(right, stop))


def score_pairs(left: Dataset, right: Dataset, pairs: Optional[CandidatePairSet] = None,
                model: Optional[LogisticModel] = None, stopwords: Iterable[str] = DEFAULT_STOPWORDS,
                params: FeatureParams = DEFAULT_PARAMS) -> ScoredPairs:
    if pairs is None:
        pairs = block(left, right, stopwords)
    X = FeatureScorer(left, right, params).matrix(pairs.left, pairs.right)
    scores = predict_matrix(model, X) if model is not None and len(pairs) else (
        np.empty(0) if model is not None else None)
    return ScoredPairs(left, right, pairs.left, pairs.right, X, scores)


def labeled_matrix(left: Dataset, right: Dataset, truth: TruthSet,
                   pairs: Optional[CandidatePairSet] = None, stopwords: Iterable[str] = DEFAULT_STOPWORDS,
                   params: FeatureParams = DEFAULT_PARAMS) -> tuple[np.ndarray, np.ndarray]:
    """Features and labels for training.

    Uses every labeled pair. For a complete truth set the negatives are the
    blocked pairs outside the positives; unblocked pairs score zero anyway.
    """
    lh, rh, y = [], [], []
    for a, b in sorted(truth.positives, key=lambda p: (left.handle(p[0]), right.handle(p[1]))):
        lh.append(left.handle(a))
        rh.append(right.handle(b))
        y.append(1.0)
    if truth.complete:
        if pairs is None:
            pairs = block(left, right, stopwords)
        pos = {(left.handle(a), right.handle(b)) for a, b in truth.positives}
        for a, b in pairs:
            if (a, b) not in pos:
                lh.append(a)
                rh.append(b)
                y.append(0.0)
    else:
        for a, b in sorted(truth.negatives, key=lambda p: (left.handle(p[0]), right.handle(p[1]))):
            lh.append(left.handle(a))
            rh.append(right.handle(b))
            y.append(0.0)
    X = FeatureScorer(left, right, params).matrix(lh, rh)
    return X, np.asarray(y)


def train_from_truth(left: Dataset, right: Dataset, truth: TruthSet, config: TrainConfig = TrainConfig(),
                     seed: int = 0, stopwords: Iterable[str] = DEFAULT_STOPWORDS,
                     params: FeatureParams = DEFAULT_PARAMS) -> LogisticModel:
    X, y = labeled_matrix(left, right, truth, stopwords=stopwords, params=params)
    return train_logistic(X, y, config, seed=seed)
