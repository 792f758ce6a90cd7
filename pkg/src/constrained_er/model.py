"""Domain types plus reading and writing of datasets, truth sets and matchings.

Entities are addressed by opaque string ids at the I/O boundary and by dense
integer handles (their position in the dataset) everywhere else.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .errors import (
    ConflictingLabel,
    DanglingReference,
    DuplicateId,
    FieldError,
    SchemaError,
)

Source = Union[bytes, str, IO]
Pair = tuple[str, str]

DATASET_FIELDS = ("id", "titles", "year", "runtime", "cast", "directors")
MULTI_SEP = "|"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Entity:
    id: str
    titles: tuple[str, ...]
    year: Optional[int] = None
    runtime: Optional[int] = None
    cast: tuple[str, ...] = ()
    directors: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("entity id must be a non-empty string")
        # normalise list inputs so entities stay hashable
        for name in ("titles", "cast", "directors"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        if not self.titles:
            raise ValueError(f"entity {self.id!r} has no title")
        if self.runtime is not None and self.runtime < 0:
            raise ValueError(f"entity {self.id!r} has negative runtime")


class Dataset:
    """An immutable, ordered collection of entities from one source."""

    __slots__ = ("name", "side", "entities", "_index")

    def __init__(self, entities: Iterable[Entity], side: Side = Side.LEFT, name: str = ""):
        self.name = name
        self.side = Side(side)
        self.entities: tuple[Entity, ...] = tuple(entities)
        index: dict[str, int] = {}
        for handle, ent in enumerate(self.entities):
            if ent.id in index:
                raise DuplicateId(ent.id)
            index[ent.id] = handle
        self._index = index

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entities)

    def __getitem__(self, handle: int) -> Entity:
        return self.entities[handle]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.name, self.side, self.entities) == (other.name, other.side, other.entities)

    def __repr__(self) -> str:
        return f"Dataset(name={self.name!r}, side={self.side.value}, n={len(self)})"

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entities]

    def handle(self, id_: str) -> int:
        try:
            return self._index[id_]
        except KeyError:
            raise DanglingReference(id_) from None

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index


@dataclass(frozen=True)
class TruthSet:
    """Labeled pairs.

    When ``complete`` is set every pair outside ``positives`` is a known
    non-match; ``negatives`` is then left empty rather than materialised.
    """

    positives: frozenset[Pair] = frozenset()
    negatives: frozenset[Pair] = frozenset()
    complete: bool = False

    def __post_init__(self):
        clash = self.positives & self.negatives
        if clash:
            raise ConflictingLabel(min(clash))

    def is_negative(self, pair: Pair) -> bool:
        if self.complete:
            return pair not in self.positives
        return pair in self.negatives

    def label(self, pair: Pair) -> Optional[bool]:
        if pair in self.positives:
            return True
        if self.is_negative(pair):
            return False
        return None


@dataclass(frozen=True)
class Matching:
    """A retrieved resolution: ``(id1, id2, score)`` triples."""

    pairs: tuple[tuple[str, str, float], ...] = ()
    constrained: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def pair_set(self) -> set[Pair]:
        return {(a, b) for a, b, _ in self.pairs}

    @property
    def weight(self) -> float:
        return math.fsum(s for _, _, s in self.pairs)


@dataclass(frozen=True)
class Violation:
    side: Side
    id: str
    partners: tuple[str, ...] = field(default=())

    def __str__(self) -> str:
        return f"{self.side.value} id {self.id!r} matched {len(self.partners)} times: {list(self.partners)}"


def validate_matching(m: Matching) -> list[Violation]:
    """Return one-to-one violations; always empty for unconstrained matchings."""
    if not m.constrained:
        return []
    by_left: dict[str, list[str]] = defaultdict(list)
    by_right: dict[str, list[str]] = defaultdict(list)
    for a, b, _ in m.pairs:
        by_left[a].append(b)
        by_right[b].append(a)
    out = [Violation(Side.LEFT, a, tuple(bs)) for a, bs in by_left.items() if len(bs) > 1]
    out += [Violation(Side.RIGHT, b, tuple(as_)) for b, as_ in by_right.items() if len(as_) > 1]
    return out


# --- parsing ---------------------------------------------------------------

def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_int(value, row: int, name: str, minimum: Optional[int] = None) -> Optional[int]:
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        raise FieldError(row, name, "boolean")
    if isinstance(value, int):
        out = value
    elif isinstance(value, float) and value.is_integer():
        out = int(value)
    elif isinstance(value, str):
        try:
            out = int(value.strip())
        except ValueError:
            raise FieldError(row, name, repr(value)) from None
    else:
        raise FieldError(row, name, repr(value))
    if minimum is not None and out < minimum:
        raise FieldError(row, name, f"must be >= {minimum}")
    return out


def _split_multi(value) -> tuple[str, ...]:
    if value is None or value == "":
        return ()
    return tuple(value.split(MULTI_SEP))


def _as_names(value, row: int, name: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,) if value else ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise FieldError(row, name, "expected a list of strings")
    return tuple(value)


def _make_entity(row: int, id_, titles, year, runtime, cast, directors) -> Entity:
    if not isinstance(id_, str) or not id_:
        raise FieldError(row, "id", "missing")
    if not titles:
        raise FieldError(row, "titles", "at least one title is required")
    return Entity(
        id=id_,
        titles=titles,
        year=_parse_int(year, row, "year"),
        runtime=_parse_int(runtime, row, "runtime", minimum=0),
        cast=cast,
        directors=directors,
    )


def parse_dataset(source: Source, fmt: str = "json", side: Side = Side.LEFT, name: str = "") -> Dataset:
    """Parse a CSV or JSON dataset; unknown fields are ignored.

    Row numbers in errors are 1-based: CSV rows count the header line, JSON
    rows count array elements.
    """
    text = _read_text(source)
    entities: list[Entity] = []
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        columns = reader.fieldnames or []
        for required in ("id", "titles"):
            if required not in columns:
                raise SchemaError(f"missing required column {required!r}")
        for rec in reader:
            row = reader.line_num
            entities.append(_make_entity(
                row, rec.get("id"), _split_multi(rec.get("titles")), rec.get("year"),
                rec.get("runtime"), _split_multi(rec.get("cast")), _split_multi(rec.get("directors")),
            ))
    elif fmt == "json":
        try:
            records = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
        if not isinstance(records, list):
            raise SchemaError("dataset JSON must be an array of objects")
        for row, rec in enumerate(records, start=1):
            if not isinstance(rec, dict):
                raise SchemaError(f"row {row} is not an object")
            if "id" not in rec or "titles" not in rec:
                raise SchemaError(f"row {row} lacks 'id' or 'titles'")
            entities.append(_make_entity(
                row, rec["id"], _as_names(rec["titles"], row, "titles"), rec.get("year"),
                rec.get("runtime"), _as_names(rec.get("cast"), row, "cast"),
                _as_names(rec.get("directors"), row, "directors"),
            ))
    else:
        raise SchemaError(f"unknown dataset format {fmt!r}")
    return Dataset(entities, side=side, name=name)


def serialize_dataset(d: Dataset, fmt: str = "json") -> bytes:
    if fmt == "json":
        records = [
            {
                "id": e.id,
                "titles": list(e.titles),
                "year": e.year,
                "runtime": e.runtime,
                "cast": list(e.cast),
                "directors": list(e.directors),
            }
            for e in d
        ]
        return (json.dumps(records, ensure_ascii=False, indent=1) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(DATASET_FIELDS)
        for e in d:
            w.writerow([
                e.id,
                MULTI_SEP.join(e.titles),
                "" if e.year is None else e.year,
                "" if e.runtime is None else e.runtime,
                MULTI_SEP.join(e.cast),
                MULTI_SEP.join(e.directors),
            ])
        return buf.getvalue().encode("utf-8")
    raise SchemaError(f"unknown dataset format {fmt!r}")


def guess_format(path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "json"


_LABELS = {"+": True, "1": True, "-": False, "0": False}


def parse_truth_set(source: Source, left: Optional[Dataset] = None, right: Optional[Dataset] = None) -> TruthSet:
    """Parse ``id1,id2,label`` rows.

    With datasets, every id must resolve and a file that labels every cross
    pair comes back as a ``complete`` truth set, so its negatives are never
    held as Python tuples. Without datasets ids are taken as given.
    """
    reader = csv.DictReader(io.StringIO(_read_text(source)))
    cols = reader.fieldnames or []
    for required in ("id1", "id2", "label"):
        if required not in cols:
            raise SchemaError(f"truth set missing column {required!r}")
    if left is None or right is None:
        lmap: dict[str, int] = {}
        rmap: dict[str, int] = {}

        def lh(id_):
            return lmap.setdefault(id_, len(lmap))

        def rh(id_):
            return rmap.setdefault(id_, len(rmap))
        width = None
    else:
        lh, rh, width = left.handle, right.handle, len(right)

    pos_keys: set = set()
    neg_keys: list = []
    for rec in reader:
        a, b, lab = rec["id1"], rec["id2"], (rec["label"] or "").strip()
        if lab not in _LABELS:
            raise FieldError(reader.line_num, "label", repr(lab))
        key = lh(a) * width + rh(b) if width is not None else (a, b)
        if _LABELS[lab]:
            pos_keys.add(key)
        else:
            neg_keys.append(key)

    if width is None:
        negatives = frozenset(neg_keys)
        clash = pos_keys & negatives
        if clash:
            raise ConflictingLabel(min(clash))
        return TruthSet(frozenset(pos_keys), negatives)

    neg = np.unique(np.asarray(neg_keys, dtype=np.int64))
    pos = np.fromiter(sorted(pos_keys), dtype=np.int64, count=len(pos_keys))
    clash = np.intersect1d(pos, neg, assume_unique=True)
    if clash.size:
        c = int(clash[0])
        raise ConflictingLabel((left[c // width].id, right[c % width].id))

    def decode(codes) -> frozenset[Pair]:
        return frozenset((left[int(c) // width].id, right[int(c) % width].id) for c in codes)

    positives = decode(pos)
    if width and pos.size + neg.size == len(left) * width:
        return TruthSet(positives, frozenset(), complete=True)
    return TruthSet(positives, decode(neg))


def iter_truth_rows(t: TruthSet, left: Dataset, right: Dataset) -> Iterator[tuple[str, str, str]]:
    """Yield ``(id1, id2, label)`` in handle order; complete sets list every cross pair."""
    if t.complete:
        for a in left.ids:
            for b in right.ids:
                yield a, b, "+" if (a, b) in t.positives else "-"
        return
    labeled = [(p, "+") for p in t.positives] + [(p, "-") for p in t.negatives]
    labeled.sort(key=lambda item: (left.handle(item[0][0]), right.handle(item[0][1])))
    for (a, b), lab in labeled:
        yield a, b, lab


def write_truth_set(t: TruthSet, left: Dataset, right: Dataset, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("id1", "id2", "label"))
    w.writerows(iter_truth_rows(t, left, right))


def format_score(x: float) -> str:
    """17 significant digits round-trip every float64 exactly."""
    return format(float(x), ".17g")


def parse_matching(source: Source, constrained: bool = False) -> Matching:
    reader = csv.DictReader(io.StringIO(_read_text(source)))
    cols = reader.fieldnames or []
    for required in ("id1", "id2"):
        if required not in cols:
            raise SchemaError(f"matching missing column {required!r}")
    pairs = []
    for rec in reader:
        raw = rec.get("score") or ""
        try:
            score = float(raw) if raw else 1.0
        except ValueError:
            raise FieldError(reader.line_num, "score", repr(raw)) from None
        pairs.append((rec["id1"], rec["id2"], score))
    return Matching(tuple(pairs), constrained=constrained)


def write_matching(m: Matching, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("id1", "id2", "score"))
    for a, b, s in m.pairs:
        w.writerow((a, b, format_score(s)))
