"""Seeded generator of two movie catalogs with known ground truth.

Each catalog row is a noisy appearance of an underlying work. Works shared
by both sides are the true matches. The generator plants the confusions that
hurt unconstrained resolution: sequels with overlapping casts, same-title
remakes, within-side duplicates, and satellite rows ("Making of ...",
"... Bonus Material") whose casts are split between the two sides so the
satellites resemble the feature film more than each other.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .blocking import DEFAULT_STOPWORDS
from .errors import ConfigError
from .model import Dataset, Entity, Side, TruthSet, serialize_dataset, write_truth_set

_ONSETS = ("b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z",
           "br", "ch", "dr", "gr", "kr", "pl", "sh", "st", "th", "tr")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ea", "io", "ou")
_CODAS = ("", "", "", "n", "r", "s", "l", "x", "nd", "rk", "st")

LEFT_SATELLITE = ("the", "making", "of")
RIGHT_SATELLITE = ("bonus", "material")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_left: int = 1000
    n_right: int = 1000
    overlap: float = 0.8
    duplicate_rate: float = 0.0
    satellite_prob: float = 0.0
    sequel_rate: float = 0.08
    remake_rate: float = 0.04
    title_noise: float = 0.1
    alt_title_rate: float = 0.2
    year_jitter: int = 1
    year_jitter_rate: float = 0.15
    runtime_jitter: int = 6
    cast_pool: int = 8000
    cast_drop_rate: float = 0.2
    right_cast_limit: int = 8
    initialism_rate: float = 0.1
    vocab_size: int = 20000
    zipf_exponent: float = 0.8
    missing_year: float = 0.03
    missing_runtime: float = 0.1
    missing_cast: float = 0.05
    missing_directors: float = 0.1

    _RATES = ("overlap", "duplicate_rate", "satellite_prob", "sequel_rate", "remake_rate", "title_noise",
              "alt_title_rate", "year_jitter_rate", "cast_drop_rate", "initialism_rate", "missing_year",
              "missing_runtime", "missing_cast", "missing_directors")

    def validate(self) -> None:
        for name in self._RATES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        if self.sequel_rate + self.remake_rate > 1.0:
            raise ConfigError("sequel_rate + remake_rate exceeds 1")
        if self.n_left < 1 or self.n_right < 1:
            raise ConfigError("both sides need at least one work")
        for name in ("year_jitter", "runtime_jitter", "right_cast_limit"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.cast_pool < 20 or self.vocab_size < 50:
            raise ConfigError("cast_pool >= 20 and vocab_size >= 50 required")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def noiseless(cls, n: int, seed: int = 0) -> "SynthConfig":
        return cls(seed=seed, n_left=n, n_right=n, overlap=1.0, duplicate_rate=0.0, satellite_prob=0.0,
                   sequel_rate=0.0, remake_rate=0.0, title_noise=0.0, alt_title_rate=0.0, year_jitter=0,
                   year_jitter_rate=0.0, runtime_jitter=0, cast_drop_rate=0.0, right_cast_limit=1000,
                   initialism_rate=0.0, missing_year=0.0, missing_runtime=0.0, missing_cast=0.0,
                   missing_directors=0.0)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SynthCorpus:
    left: Dataset
    right: Dataset
    truth: TruthSet
    work_left: tuple[int, ...]
    work_right: tuple[int, ...]
    satellites_left: int = 0
    satellites_right: int = 0
    duplicates_left: int = 0
    duplicates_right: int = 0

    def write(self, out_dir, config: Optional[SynthConfig] = None) -> None:
        from .io_utils import atomic_write

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write(out / "left.json", serialize_dataset(self.left, "json"))
        atomic_write(out / "right.json", serialize_dataset(self.right, "json"))
        atomic_write(out / "truth.csv", lambda fh: write_truth_set(self.truth, self.left, self.right, fh))
        if config is not None:
            atomic_write(out / "config.echo.json", config.to_json().encode("utf-8"))


@dataclass
class _Work:
    title: tuple[str, ...]
    year: int
    runtime: int
    cast: list[int]
    directors: list[int]
    satellite: bool = False


class _Generator:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.vocab = self._make_vocab(cfg.vocab_size)
        ranks = np.arange(1, cfg.vocab_size + 1, dtype=np.float64)
        p = ranks ** -cfg.zipf_exponent
        self.vocab_cdf = np.cumsum(p / p.sum())
        self.people = self._make_people(cfg.cast_pool)
        # a few prolific stars, a long tail of bit players
        q = np.arange(1, cfg.cast_pool + 1, dtype=np.float64) ** -0.6
        self.people_cdf = np.cumsum(q / q.sum())

    def _draw(self, cdf: np.ndarray, size=None):
        u = self.rng.random(size)
        return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)

    def _vocab_word(self) -> str:
        return self.vocab[int(self._draw(self.vocab_cdf))]

    def _word(self, syllables: int) -> str:
        r = self.rng
        return "".join(
            _ONSETS[r.integers(len(_ONSETS))] + _VOWELS[r.integers(len(_VOWELS))] + _CODAS[r.integers(len(_CODAS))]
            for _ in range(syllables)
        )

    def _make_vocab(self, n: int) -> list[str]:
        seen = set(DEFAULT_STOPWORDS) | set(LEFT_SATELLITE) | set(RIGHT_SATELLITE)
        out = []
        while len(out) < n:
            w = self._word(int(self.rng.integers(1, 4)))
            if w not in seen:
                seen.add(w)
                out.append(w)
        return out

    def _make_people(self, n: int) -> list[tuple[str, str]]:
        firsts = [self._word(2).capitalize() for _ in range(max(40, n // 20))]
        lasts = [self._word(int(self.rng.integers(2, 4))).capitalize() for _ in range(max(200, n // 2))]
        seen, out = set(), []
        while len(out) < n:
            p = (firsts[self.rng.integers(len(firsts))], lasts[self.rng.integers(len(lasts))])
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out

    # --- works ------------------------------------------------------------

    def _title(self) -> tuple[str, ...]:
        k = int(self.rng.choice([1, 2, 3, 4], p=[0.25, 0.35, 0.25, 0.15]))
        words = [self.vocab[i] for i in self._draw(self.vocab_cdf, k)]
        if k >= 3 and self.rng.random() < 0.3:
            words.insert(1, "of")
        if self.rng.random() < 0.25:
            words.insert(0, "the")
        return tuple(words)

    def _people(self, k: int, exclude=()) -> list[int]:
        out: list[int] = []
        banned = set(exclude)
        while len(out) < k:
            p = int(self._draw(self.people_cdf))
            if p not in banned:
                banned.add(p)
                out.append(p)
        return out

    def _fresh(self) -> _Work:
        r = self.rng
        return _Work(
            title=self._title(),
            year=int(r.integers(1930, 2016)),
            runtime=int(np.clip(round(r.normal(100, 20)), 45, 200)),
            cast=self._people(int(r.integers(4, 16))),
            directors=self._people(1 if r.random() < 0.9 else 2),
        )

    def _sequel(self, parent: _Work, number: int) -> _Work:
        r = self.rng
        keep = [c for c in parent.cast if r.random() < 0.6]
        cast = keep + self._people(max(2, len(parent.cast) - len(keep)), exclude=keep)
        directors = list(parent.directors) if r.random() < 0.7 else self._people(1)
        return _Work(
            title=parent.title + (str(number),),
            year=parent.year + int(r.integers(1, 5)),
            runtime=int(np.clip(parent.runtime + r.integers(-15, 16), 45, 200)),
            cast=cast,
            directors=directors,
        )

    def _remake(self, parent: _Work) -> _Work:
        r = self.rng
        gap = int(r.integers(10, 41))
        year = parent.year + gap if parent.year + gap <= 2015 else parent.year - gap
        return _Work(
            title=parent.title,
            year=year,
            runtime=int(np.clip(round(r.normal(100, 20)), 45, 200)),
            cast=self._people(int(r.integers(4, 16)), exclude=parent.cast),
            directors=self._people(1),
        )

    def works(self, n: int) -> list[_Work]:
        cfg, r = self.cfg, self.rng
        out: list[_Work] = []
        sequel_no: dict[int, int] = {}
        for _ in range(n):
            u = r.random()
            if out and u < cfg.sequel_rate:
                root = int(r.integers(len(out)))
                sequel_no[root] = sequel_no.get(root, 1) + 1
                out.append(self._sequel(out[root], sequel_no[root]))
            elif out and u < cfg.sequel_rate + cfg.remake_rate:
                out.append(self._remake(out[int(r.integers(len(out)))]))
            else:
                out.append(self._fresh())
        return out

    def satellite(self, parent: _Work, side: Side) -> _Work:
        r = self.rng
        half = parent.cast[0::2] if side is Side.LEFT else parent.cast[1::2]
        title = LEFT_SATELLITE + parent.title if side is Side.LEFT else parent.title + RIGHT_SATELLITE
        return _Work(
            title=title,
            year=parent.year,
            runtime=int(r.integers(15, 61)),
            cast=list(half[:6]),
            directors=[],
            satellite=True,
        )

    # --- noisy appearance --------------------------------------------------

    def _name(self, person: int) -> str:
        first, last = self.people[person]
        if self.rng.random() < self.cfg.initialism_rate:
            return f"{first[0]}. {last}"
        return f"{first} {last}"

    def _noisy_title(self, words: tuple[str, ...]) -> tuple[str, ...]:
        r = self.rng
        w = list(words)
        op = r.integers(3)
        if op == 0 and len(w) > 1:
            del w[int(r.integers(len(w)))]
        elif op == 1:
            w.insert(int(r.integers(len(w) + 1)), self._vocab_word())
        else:
            w[int(r.integers(len(w)))] = self._vocab_word()
        return tuple(w)

    @staticmethod
    def _render(words: tuple[str, ...]) -> str:
        return " ".join(x.capitalize() if x.isalpha() else x for x in words)

    def appearance(self, work: _Work, side: Side, light: bool = False) -> dict:
        cfg, r = self.cfg, self.rng
        noise = 0.0 if light else 1.0
        title = work.title
        if not work.satellite and r.random() < cfg.title_noise * noise:
            title = self._noisy_title(title)
        titles = [self._render(title)]
        if side is Side.LEFT and not work.satellite and r.random() < cfg.alt_title_rate:
            alt = self._render(work.title if title != work.title else self._noisy_title(work.title))
            if alt not in titles:
                titles.append(alt)

        year: Optional[int] = work.year
        if r.random() < cfg.missing_year * noise:
            year = None
        elif cfg.year_jitter and r.random() < cfg.year_jitter_rate * noise:
            year = work.year + int(r.integers(-cfg.year_jitter, cfg.year_jitter + 1))

        runtime: Optional[int] = work.runtime
        if r.random() < cfg.missing_runtime * noise:
            runtime = None
        elif cfg.runtime_jitter and not light:
            runtime = max(0, work.runtime + int(r.integers(-cfg.runtime_jitter, cfg.runtime_jitter + 1)))

        if r.random() < cfg.missing_cast * noise:
            cast: list[str] = []
        else:
            members = [c for c in work.cast if r.random() >= cfg.cast_drop_rate * noise] or work.cast[:1]
            if side is Side.RIGHT:
                members = members[: cfg.right_cast_limit]
            cast = [self._name(c) for c in members]
        directors = [] if r.random() < cfg.missing_directors * noise else [self._name(d) for d in work.directors]
        return {"titles": titles, "year": year, "runtime": runtime, "cast": cast, "directors": directors}


def generate(config: SynthConfig) -> SynthCorpus:
    """Build both catalogs and the complete truth set for ``config``."""
    config.validate()
    g = _Generator(config)
    r = g.rng
    n_shared = int(round(config.overlap * min(config.n_left, config.n_right)))
    n_works = config.n_left + config.n_right - n_shared
    works = g.works(n_works)
    perm = r.permutation(n_works)
    shared = perm[:n_shared]
    left_only = perm[n_shared:config.n_left]
    right_only = perm[config.n_left:]
    on_left = np.sort(np.concatenate([shared, left_only])).tolist()
    on_right = np.sort(np.concatenate([shared, right_only])).tolist()

    sat_parent = r.random(n_works) < config.satellite_prob
    for w in range(n_works):
        if sat_parent[w]:
            works.append(g.satellite(works[w], Side.LEFT))
            works.append(g.satellite(works[w], Side.RIGHT))
    sat_ids = {}
    k = n_works
    for w in range(n_works):
        if sat_parent[w]:
            sat_ids[w] = (k, k + 1)
            k += 2

    def side_rows(members: list[int], side: Side):
        # (truth key, work index, attributes); both satellites of one parent
        # share the left satellite's key so they match each other
        rows: list[tuple[int, int, dict]] = []
        n_sat = n_dup = 0
        for w in members:
            rows.append((w, w, g.appearance(works[w], side)))
            if w in sat_ids:
                s = sat_ids[w][0 if side is Side.LEFT else 1]
                rows.append((sat_ids[w][0], s, g.appearance(works[s], side)))
                n_sat += 1
        base = len(rows)
        for i in range(base):
            if r.random() < config.duplicate_rate:
                key, w, _ = rows[i]
                rows.append((key, w, g.appearance(works[w], side, light=True)))
                n_dup += 1
        order = r.permutation(len(rows))
        return [rows[i] for i in order], n_sat, n_dup

    left_rows, sat_l, dup_l = side_rows(on_left, Side.LEFT)
    right_rows, sat_r, dup_r = side_rows(on_right, Side.RIGHT)

    def dataset(rows, side: Side, prefix: str) -> Dataset:
        width = max(6, len(str(len(rows))))
        ents = [Entity(id=f"{prefix}{i:0{width}d}", **attrs) for i, (_, _, attrs) in enumerate(rows, start=1)]
        return Dataset(ents, side=side, name=f"synth-{side.value}")

    left = dataset(left_rows, Side.LEFT, "L")
    right = dataset(right_rows, Side.RIGHT, "R")
    work_left = tuple(key for key, _, _ in left_rows)
    work_right = tuple(key for key, _, _ in right_rows)

    by_work: dict[int, list[str]] = {}
    for e, w in zip(right, work_right):
        by_work.setdefault(w, []).append(e.id)
    positives = frozenset((e.id, b) for e, w in zip(left, work_left) for b in by_work.get(w, ()))
    return SynthCorpus(
        left, right, TruthSet(positives, frozenset(), complete=True), work_left, work_right,
        sat_l, sat_r, dup_l, dup_r,
    )
