"""Title-token blocking.

Only pairs that share at least one normalized non-stopword title token are
scored; every other pair is treated as score zero.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .io_utils import read_bytes
from .model import Dataset

log = logging.getLogger(__name__)

EMPTY_NORMALIZED_TITLE = "EMPTY_NORMALIZED_TITLE"
STOPWORDS_ONLY = "STOPWORDS_ONLY"

DEFAULT_STOPWORDS = frozenset({"a", "an", "and", "at", "for", "in", "of", "on", "the", "to", "&"})


def normalize_words(text: str) -> list[str]:
    """Fold diacritics, lowercase, drop non-alphanumerics and split on whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    kept = []
    for ch in decomposed:
        if unicodedata.combining(ch):
            continue
        if ch.isalnum():
            kept.append(ch.lower())
        elif ch.isspace():
            kept.append(" ")
    return "".join(kept).split()


def normalize_tokens(title: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Blocking tokens of one title.

    >>> normalize_tokens("The Wizard of Oz")
    ['wizard', 'oz']
    >>> normalize_tokens("+/-")
    ['EMPTY_NORMALIZED_TITLE']
    """
    words = normalize_words(title)
    if not words:
        return [EMPTY_NORMALIZED_TITLE]
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    content = [w for w in words if w not in stop]
    return content or [STOPWORDS_ONLY]


def load_stopwords(path) -> frozenset[str]:
    """One token per line; blank lines and ``#`` comments are skipped."""
    words = set()
    for line in read_bytes(path).decode("utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


@dataclass(frozen=True)
class TokenIndex:
    """Inverted index from token to sorted entity handles (CSR layout)."""

    tokens: tuple[str, ...]
    ptr: np.ndarray
    handles: np.ndarray
    n_entities: int
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    _lookup: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {t: k for k, t in enumerate(self.tokens)})

    def postings(self, token: str) -> np.ndarray:
        k = self._lookup.get(token)
        if k is None:
            return np.empty(0, dtype=np.int64)
        return self.handles[self.ptr[k]:self.ptr[k + 1]]

    def as_dict(self) -> dict[str, set[int]]:
        return {t: set(self.postings(t).tolist()) for t in self.tokens}

    def token_id(self, token: str) -> Optional[int]:
        return self._lookup.get(token)


def build_index(d: Dataset, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> TokenIndex:
    """Post every entity under every token of every one of its titles."""
    stop = frozenset(stopwords)
    postings: dict[str, list[int]] = {}
    for handle, ent in enumerate(d.entities):
        seen = set()
        for title in ent.titles:
            for tok in normalize_tokens(title, stop):
                if tok not in seen:
                    seen.add(tok)
                    postings.setdefault(tok, []).append(handle)
    tokens = tuple(sorted(postings))
    ptr = np.zeros(len(tokens) + 1, dtype=np.int64)
    for k, t in enumerate(tokens):
        ptr[k + 1] = ptr[k] + len(postings[t])
    handles = np.fromiter(
        (h for t in tokens for h in postings[t]), dtype=np.int64, count=int(ptr[-1])
    )
    return TokenIndex(tokens, ptr, handles, len(d), stop)


@dataclass(frozen=True)
class CandidatePairSet:
    """Deduplicated blocked pairs, sorted by (left handle, right handle)."""

    left: np.ndarray
    right: np.ndarray

    def __len__(self) -> int:
        return int(self.left.shape[0])

    def __iter__(self):
        return zip(self.left.tolist(), self.right.tolist())

    def as_set(self) -> set[tuple[int, int]]:
        return set(self)


def candidate_pairs(
    left: TokenIndex, right: TokenIndex, max_pairs_per_token: Optional[int] = None
) -> CandidatePairSet:
    """Every (left, right) handle pair sharing at least one token, once."""
    l_tok, r_tok = [], []
    for k, tok in enumerate(left.tokens):
        j = right.token_id(tok)
        if j is None:
            continue
        if max_pairs_per_token is not None:
            n = (left.ptr[k + 1] - left.ptr[k]) * (right.ptr[j + 1] - right.ptr[j])
            if n > max_pairs_per_token:
                log.warning("skipping token %r: %d pairs exceeds cap %d", tok, n, max_pairs_per_token)
                continue
        l_tok.append(k)
        r_tok.append(j)
    n_right = max(right.n_entities, 1)
    codes = kernels.expand_pairs(
        left.ptr, left.handles, right.ptr, right.handles,
        np.asarray(l_tok, dtype=np.int64), np.asarray(r_tok, dtype=np.int64), n_right,
    )
    return CandidatePairSet(codes // n_right, codes % n_right)


def self_candidate_pairs(index: TokenIndex) -> CandidatePairSet:
    """Blocked pairs of a dataset against itself with ``h1 < h2``."""
    pairs = candidate_pairs(index, index)
    keep = pairs.left < pairs.right
    return CandidatePairSet(pairs.left[keep], pairs.right[keep])
