"""Per-attribute comparison scores for a candidate pair.

Vector order is fixed as ``FEATURE_NAMES``: cast, title, year, directors,
runtime. Year and runtime are absolute differences and stay ``None`` (NaN in
arrays) when either side lacks the attribute.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .blocking import normalize_words
from .model import Dataset, Entity

FEATURE_NAMES = ("cast", "title", "year", "directors", "runtime")


@dataclass(frozen=True)
class FeatureParams:
    title_discount: float = 0.9
    year_cap: float = 30.0
    runtime_cap: float = 60.0
    cast_cap: float = 5.0
    partial_credit: float = 0.5


DEFAULT_PARAMS = FeatureParams()


class FeatureVector(NamedTuple):
    cast: float
    title: float
    year: Optional[float]
    directors: float
    runtime: Optional[float]

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self], dtype=np.float64)


# --- titles -----------------------------------------------------------------

def _title_tokens(title: str) -> tuple[str, ...]:
    return tuple(normalize_words(title))


def _title_pair_score(a: tuple[str, ...], b: tuple[str, ...], discount: float) -> float:
    if not a or not b:
        return 0.0
    if a == b:
        return 1.0
    common = sum((Counter(a) & Counter(b)).values())
    return discount * common / max(len(a), len(b))


def _best_title(ta: Sequence[tuple[str, ...]], tb: Sequence[tuple[str, ...]], discount: float) -> float:
    best = 0.0
    for a in ta:
        for b in tb:
            s = _title_pair_score(a, b, discount)
            if s > best:
                best = s
                if best == 1.0:
                    return best
    return best


def score_title(t1: Sequence[str], t2: Sequence[str], params: FeatureParams = DEFAULT_PARAMS) -> float:
    """Best score over all title pairs; 1.0 on identical normalized word sequences.

    Stopwords are kept here: for short titles they are the whole identity.
    Two titles that both normalize to nothing score 1.0 only if their raw
    text matches case-insensitively.
    """
    ta = [_title_tokens(t) for t in t1]
    tb = [_title_tokens(t) for t in t2]
    best = _best_title(ta, tb, params.title_discount)
    if best < 1.0:
        raw_a = {t.strip().casefold() for t, tok in zip(t1, ta) if not tok}
        if raw_a and raw_a & {t.strip().casefold() for t, tok in zip(t2, tb) if not tok}:
            return 1.0
    return best


# --- numeric attributes ----------------------------------------------------

def _capped_diff(a, b, cap: float) -> Optional[float]:
    if a is None or b is None:
        return None
    return float(min(abs(a - b), cap))


def score_year(y1: Optional[int], y2: Optional[int], params: FeatureParams = DEFAULT_PARAMS) -> Optional[float]:
    return _capped_diff(y1, y2, params.year_cap)


def score_runtime(r1: Optional[int], r2: Optional[int], params: FeatureParams = DEFAULT_PARAMS) -> Optional[float]:
    return _capped_diff(r1, r2, params.runtime_cap)


# --- people -------------------------------------------------------------------

def normalize_name(name: str) -> tuple[str, ...]:
    return tuple(normalize_words(name))


def _prepare_names(names: Sequence[str]) -> list[tuple[str, ...]]:
    return [t for t in map(normalize_name, names) if t]


def _name_credit(a: list[tuple[str, ...]], b: list[tuple[str, ...]], partial: float) -> float:
    """Full-name matches first, then surname-only matches among the leftovers.

    Each name is used at most once. Both passes pair names within an
    equivalence class, so the total depends only on the multisets and is
    symmetric in ``a`` and ``b``.
    """
    if not a or not b:
        return 0.0
    ca, cb = Counter(a), Counter(b)
    full = ca & cb
    n_full = sum(full.values())
    rest_a = Counter(n[-1] for n in (ca - full).elements())
    rest_b = Counter(n[-1] for n in (cb - full).elements())
    n_part = sum((rest_a & rest_b).values())
    return n_full + partial * n_part


def score_cast(c1: Sequence[str], c2: Sequence[str], params: FeatureParams = DEFAULT_PARAMS) -> float:
    return _cast_from_prepared(_prepare_names(c1), _prepare_names(c2), params)


def _cast_from_prepared(a, b, params: FeatureParams) -> float:
    return float(min(_name_credit(a, b, params.partial_credit), params.cast_cap))


def score_directors(d1: Sequence[str], d2: Sequence[str], params: FeatureParams = DEFAULT_PARAMS) -> float:
    return _directors_from_prepared(_prepare_names(d1), _prepare_names(d2), params)


def _directors_from_prepared(a, b, params: FeatureParams) -> float:
    # empty lists score 0: the shorter-list denominator would be undefined
    if not a or not b:
        return 0.0
    return float(min(_name_credit(a, b, params.partial_credit) / min(len(a), len(b)), 1.0))


def feature_vector(e1: Entity, e2: Entity, params: FeatureParams = DEFAULT_PARAMS) -> FeatureVector:
    return FeatureVector(
        cast=score_cast(e1.cast, e2.cast, params),
        title=score_title(e1.titles, e2.titles, params),
        year=score_year(e1.year, e2.year, params),
        directors=score_directors(e1.directors, e2.directors, params),
        runtime=score_runtime(e1.runtime, e2.runtime, params),
    )


class _Prepared:
    """Normalized attributes of one dataset, computed once."""

    def __init__(self, d: Dataset):
        self.titles = [[_title_tokens(t) for t in e.titles] for e in d]
        self.raw_empty = [
            {t.strip().casefold() for t, tok in zip(e.titles, toks) if not tok}
            for e, toks in zip(d, self.titles)
        ]
        self.cast = [_prepare_names(e.cast) for e in d]
        self.directors = [_prepare_names(e.directors) for e in d]
        self.year = np.array([np.nan if e.year is None else e.year for e in d], dtype=np.float64)
        self.runtime = np.array([np.nan if e.runtime is None else e.runtime for e in d], dtype=np.float64)


class FeatureScorer:
    """Scores many handle pairs between two datasets.

    Produces the same values as :func:`feature_vector` but normalizes each
    entity once, which matters when scoring every blocked pair.
    """

    def __init__(self, left: Dataset, right: Dataset, params: FeatureParams = DEFAULT_PARAMS):
        self.params = params
        self._l = _Prepared(left)
        self._r = self._l if right is left else _Prepared(right)

    def matrix(self, left_handles, right_handles) -> np.ndarray:
        """``(n, 5)`` float array in ``FEATURE_NAMES`` order; NaN marks absence."""
        lh = np.asarray(left_handles, dtype=np.int64)
        rh = np.asarray(right_handles, dtype=np.int64)
        p = self.params
        L, R = self._l, self._r
        out = np.empty((lh.shape[0], len(FEATURE_NAMES)), dtype=np.float64)
        out[:, 2] = np.minimum(np.abs(L.year[lh] - R.year[rh]), p.year_cap)
        out[:, 4] = np.minimum(np.abs(L.runtime[lh] - R.runtime[rh]), p.runtime_cap)
        for row, (a, b) in enumerate(zip(lh.tolist(), rh.tolist())):
            out[row, 0] = _cast_from_prepared(L.cast[a], R.cast[b], p)
            t = _best_title(L.titles[a], R.titles[b], p.title_discount)
            if t < 1.0 and L.raw_empty[a] and (L.raw_empty[a] & R.raw_empty[b]):
                t = 1.0
            out[row, 1] = t
            out[row, 3] = _directors_from_prepared(L.directors[a], R.directors[b], p)
        return out


def vector_from_row(row: Sequence[float]) -> FeatureVector:
    vals = [None if (v is None or (isinstance(v, float) and math.isnan(v))) else float(v) for v in row]
    return FeatureVector(*vals)
