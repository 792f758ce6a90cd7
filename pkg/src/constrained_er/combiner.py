"""Logistic-regression score combiner.

Scores are ``sigmoid(w . z + w0)`` where ``z`` is the standardized feature
vector and ``sigmoid(t) = 1 / (1 + exp(-t))``, so a larger linear term means
a more likely match. Absent features impute to the training mean, i.e. 0
after standardization.

Standard deviations use the population convention (divide by n).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateFeature, DegenerateLabels, TrainingFailure
from .features import FEATURE_NAMES, FeatureVector

SD_FLOOR = 1e-9
_ONE_BELOW = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: bool


def examples_to_arrays(examples: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([ex.features.as_array() for ex in examples], dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
    y = np.array([bool(ex.label) for ex in examples], dtype=np.float64)
    return X, y


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray
    names: tuple[str, ...] = FEATURE_NAMES

    @property
    def impute(self) -> np.ndarray:
        return self.mean

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mean) / self.sd
        return np.where(np.isnan(Z), 0.0, Z)


def fit_standardizer(X, names: Sequence[str] = FEATURE_NAMES) -> Standardizer:
    """Column means and population sds over present (non-NaN) values."""
    if not isinstance(X, np.ndarray):
        X = examples_to_arrays(X)[0]
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least two examples to standardize")
    present = ~np.isnan(X)
    counts = present.sum(axis=0)
    for k, c in enumerate(counts):
        if c == 0:
            raise DegenerateFeature(names[k])
    filled = np.where(present, X, 0.0)
    mean = filled.sum(axis=0) / counts
    mean += np.where(present, X - mean, 0.0).sum(axis=0) / counts  # one correction pass for roundoff
    # constant columns take their exact value so they standardize to exactly 0
    hi = np.where(present, X, -np.inf).max(axis=0)
    lo = np.where(present, X, np.inf).min(axis=0)
    mean = np.where(hi == lo, hi, mean)
    var = (np.where(present, X - mean, 0.0) ** 2).sum(axis=0) / counts
    sd = np.maximum(np.sqrt(var), SD_FLOOR)
    return Standardizer(mean, sd, tuple(names))


@dataclass(frozen=True)
class TrainConfig:
    method: str = "gradient"  # or "newton"
    max_iter: int = 10_000
    tol: float = 1e-8
    l2: float = 1e-6
    init_step: float = 1.0
    armijo: float = 1e-4


@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    standardizer: Standardizer
    config: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    iterations: int = 0
    log_likelihood: float = float("nan")
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    def linear(self, X) -> np.ndarray:
        return self.standardizer.transform(X) @ self.weights + self.intercept

    def to_dict(self) -> dict:
        names = self.standardizer.names
        return {
            "weights": {n: float(w) for n, w in zip(names, self.weights)},
            "intercept": float(self.intercept),
            "means": {n: float(m) for n, m in zip(names, self.standardizer.mean)},
            "sds": {n: float(s) for n, s in zip(names, self.standardizer.sd)},
            "config": asdict(self.config),
            "seed": self.seed,
            "training": {
                "iterations": self.iterations,
                "log_likelihood": self.log_likelihood,
                "converged": self.converged,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        names = FEATURE_NAMES
        std = Standardizer(
            np.array([d["means"][n] for n in names], dtype=np.float64),
            np.array([d["sds"][n] for n in names], dtype=np.float64),
            names,
        )
        tr = d.get("training", {})
        return cls(
            weights=np.array([d["weights"][n] for n in names], dtype=np.float64),
            intercept=float(d["intercept"]),
            standardizer=std,
            config=TrainConfig(**d.get("config", {})),
            seed=int(d.get("seed", 0)),
            iterations=int(tr.get("iterations", 0)),
            log_likelihood=float(tr.get("log_likelihood", float("nan"))),
            converged=bool(tr.get("converged", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "LogisticModel":
        return cls.from_dict(json.loads(text))


def sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _log1pexp(t: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, t)


def log_likelihood_and_gradient(params, Z, y, l2: float = 0.0) -> tuple[float, np.ndarray]:
    """Penalized conditional log-likelihood and its exact gradient.

    ``params`` is ``[w_1 .. w_d, w0]``; ``Z`` is the standardized design
    matrix. The value is ``sum_i [y_i t_i - log(1 + e^t_i)] - l2/2 * |w|^2``
    with ``t = Z w + w0``; the intercept is not penalized.
    """
    params = np.asarray(params, dtype=np.float64)
    w, b = params[:-1], params[-1]
    t = Z @ w + b
    value = float(np.sum(y * t - _log1pexp(t))) - 0.5 * l2 * float(w @ w)
    resid = y - sigmoid(t)
    grad = np.empty_like(params)
    grad[:-1] = Z.T @ resid - l2 * w
    grad[-1] = resid.sum()
    return value, grad


def _hessian(params, Z, l2):
    w, b = params[:-1], params[-1]
    p = sigmoid(Z @ w + b)
    s = p * (1.0 - p)
    A = np.hstack([Z, np.ones((Z.shape[0], 1))])
    H = -(A * s[:, None]).T @ A
    H[:-1, :-1] -= l2 * np.eye(len(w))
    return H


def train_logistic(X, y=None, config: TrainConfig = TrainConfig(), seed: int = 0) -> LogisticModel:
    """Fit by gradient ascent with backtracking line search.

    ``X`` is either a raw feature matrix (NaN = absent) with labels ``y`` or a
    sequence of :class:`LabeledExample`. Convergence is judged on the
    per-example gradient: ``max|grad| / n <= config.tol``.
    """
    if y is None:
        X, y = examples_to_arrays(X)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0 or np.all(y == y[0]):
        raise DegenerateLabels("training data must contain both matches and non-matches")
    std = fit_standardizer(X)
    Z = std.transform(X)
    n, d = Z.shape

    params = np.zeros(d + 1)
    base = y.mean()
    params[-1] = math.log(base / (1.0 - base))
    value, grad = log_likelihood_and_gradient(params, Z, y, config.l2)
    history = [value]
    step = config.init_step
    converged = False
    it = 0
    while it < config.max_iter:
        gnorm = float(np.max(np.abs(grad))) / n
        if gnorm <= config.tol:
            converged = True
            break
        if config.method == "newton":
            direction = -np.linalg.solve(_hessian(params, Z, config.l2), grad)
            t = 1.0
        else:
            direction = grad / n
            t = step
        slope = float(grad @ direction)
        accepted = False
        while t > 1e-20:
            cand = params + t * direction
            cand_value, cand_grad = log_likelihood_and_gradient(cand, Z, y, config.l2)
            if np.isfinite(cand_value) and cand_value >= value + config.armijo * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if gnorm <= 1e-5:
                break  # stalled at floating-point resolution of the objective
            raise TrainingFailure(f"line search failed at iteration {it} with gradient {gnorm:.3g}")
        params, value, grad = cand, cand_value, cand_grad
        history.append(value)
        step = min(t * 2.0, 1e6)
        it += 1
    else:
        converged = float(np.max(np.abs(grad))) / n <= config.tol

    return LogisticModel(
        weights=params[:-1].copy(),
        intercept=float(params[-1]),
        standardizer=std,
        config=config,
        seed=seed,
        iterations=it,
        log_likelihood=value,
        converged=converged,
        history=history,
    )


def predict_matrix(model: LogisticModel, X) -> np.ndarray:
    """Scores strictly inside (0, 1) for each row of a raw feature matrix."""
    p = sigmoid(model.linear(np.atleast_2d(X)))
    return np.clip(p, _TINY, _ONE_BELOW)


def predict(model: LogisticModel, fv: FeatureVector) -> float:
    return float(predict_matrix(model, fv.as_array()[None, :])[0])


def boundary_sample(pairs, n: int, band: float = 0.05, seed: int = 0) -> list[tuple[str, str]]:
    """Seeded uniform sample of ``n`` pairs scoring within ``band`` of 0.5.

    ``pairs`` yields ``(id1, id2, score)``. The sample keeps input order.
    """
    lo, hi = 0.5 - band, 0.5 + band
    in_band = [(a, b) for a, b, s in pairs if lo <= s <= hi]
    if len(in_band) <= n:
        return in_band
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(in_band), size=n, replace=False))
    return [in_band[i] for i in pick]


def stratified_split(y, test_size: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Train/test index arrays preserving the label ratio in the test part."""
    y = np.asarray(y).astype(bool)
    rng = np.random.default_rng(seed)
    n = y.size
    test = []
    for lab in (True, False):
        idx = np.flatnonzero(y == lab)
        k = int(round(test_size * idx.size / n)) if n else 0
        test.append(rng.permutation(idx)[:k])
    test_idx = np.sort(np.concatenate(test))
    train_idx = np.setdiff1d(np.arange(n), test_idx)
    return train_idx, test_idx
