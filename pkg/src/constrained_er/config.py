"""Pipeline configuration file.

One JSON document configures every stage::

    {
      "left": "left.json", "right": "right.json", "truth": "truth.csv",
      "stopwords": null,
      "features": {"title_discount": 0.9, "year_cap": 30, ...},
      "combiner": {"method": "gradient", "l2": 1e-6, "tol": 1e-8, ...},
      "seed": 0,
      "matcher": {"algorithm": "greedy", "direction": "l2r", "threshold": 0.45},
      "output_dir": "out",
      "synth": {"n_left": 2000, ...}
    }

Every key is optional. A flat generator config (``{"n_left": ...}``) is
read as the ``synth`` section. Relative paths resolve against the directory
holding the config file. Command-line flags override the file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .combiner import TrainConfig
from .errors import InvalidConfig
from .features import FeatureParams
from .io_utils import read_bytes
from .matchers import ALGORITHMS, DIRECTIONS
from .synth import SynthConfig

DEFAULT_THRESHOLD = 0.45
_PATH_KEYS = ("left", "right", "truth", "stopwords", "scores", "model", "output_dir")


@dataclass(frozen=True)
class MatcherSettings:
    algorithm: str = "greedy"
    direction: str = "l2r"
    threshold: float = DEFAULT_THRESHOLD
    grid: Optional[tuple[float, ...]] = None  # None means 0.00, 0.01, ..., 1.00
    at_scores: bool = False
    dedupe_fp: bool = False

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfig(f"matcher.algorithm must be one of {list(ALGORITHMS)}")
        if self.direction not in DIRECTIONS:
            raise InvalidConfig(f"matcher.direction must be one of {list(DIRECTIONS)}")
        if not 0.0 <= self.threshold <= 1.0:
            raise InvalidConfig("matcher.threshold must lie in [0, 1]")
        if self.grid is not None and not all(0.0 <= x <= 1.0 for x in self.grid):
            raise InvalidConfig("matcher.grid values must lie in [0, 1]")


@dataclass(frozen=True)
class PipelineConfig:
    left: Optional[str] = None
    right: Optional[str] = None
    truth: Optional[str] = None
    scores: Optional[str] = None
    model: Optional[str] = None
    stopwords: Optional[str] = None
    features: FeatureParams = field(default_factory=FeatureParams)
    combiner: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    matcher: MatcherSettings = field(default_factory=MatcherSettings)
    output_dir: str = "."
    threads: int = 1
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "PipelineConfig":
        if not isinstance(d, dict):
            raise InvalidConfig("config must be a JSON object")
        # a bare generator config is accepted as the synth section
        if set(d) & ({f.name for f in fields(SynthConfig)} - {f.name for f in fields(cls)}):
            d = {"synth": d}
        _reject_unknown(d, {f.name for f in fields(cls)}, "config")
        kw = {}
        for key in _PATH_KEYS:
            if d.get(key) is not None:
                if not isinstance(d[key], str):
                    raise InvalidConfig(f"{key} must be a path string")
                p = Path(d[key])
                kw[key] = str(base_dir / p) if base_dir is not None and not p.is_absolute() else str(p)
        kw["features"] = _section(FeatureParams, d.get("features"), "features")
        kw["combiner"] = _section(TrainConfig, d.get("combiner"), "combiner")
        matcher = dict(d.get("matcher") or {})
        if matcher.get("grid") is not None:
            matcher["grid"] = tuple(float(x) for x in matcher["grid"])
        kw["matcher"] = _section(MatcherSettings, matcher, "matcher")
        kw["matcher"].validate()
        if kw["combiner"].method not in ("gradient", "newton"):
            raise InvalidConfig("combiner.method must be 'gradient' or 'newton'")
        for key in ("seed", "threads"):
            if key in d:
                if isinstance(d[key], bool) or not isinstance(d[key], int):
                    raise InvalidConfig(f"{key} must be an integer")
                kw[key] = d[key]
        if kw.get("threads", 1) < 1:
            raise InvalidConfig("threads must be >= 1")
        kw["synth"] = SynthConfig.from_dict(d.get("synth") or {})
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        raw = read_bytes(path)
        try:
            d = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(d, Path(path).resolve().parent)

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["matcher"]["grid"] is not None:
            out["matcher"]["grid"] = list(out["matcher"]["grid"])
        return out


def _reject_unknown(d: dict, known: set, where: str) -> None:
    unknown = sorted(set(d) - known)
    if unknown:
        raise InvalidConfig(f"{where}: unknown keys {unknown}")


def _section(kind, d, where: str):
    if d is None:
        return kind()
    if not isinstance(d, dict):
        raise InvalidConfig(f"{where} must be a JSON object")
    _reject_unknown(d, {f.name for f in fields(kind)}, where)
    try:
        return kind(**d)
    except TypeError as exc:
        raise InvalidConfig(f"{where}: {exc}") from None
