"""Competitive loss, symmetric baselines, and error functionals.

Targets are log-costs ``y = ln opt(T)`` in ``[0, H]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .errors import ParameterError

EPSILON_MAX = 2.0
DEFAULT_H = 10.0


def _check_epsilon(epsilon: float) -> float:
    if not 0 < epsilon <= EPSILON_MAX:
        raise ParameterError(f"epsilon must lie in (0, {EPSILON_MAX}], got {epsilon!r}")
    return float(epsilon)


def competitive_loss(epsilon: float, y, y_hat):
    """Asymmetric loss mirroring the ratio profile of PREDICT-AND-DOUBLE.

    Overestimates cost ``e^{y_hat - y} - 1`` up to a cap of ``5/eps - 1``;
    underestimates cost ``(y - y_hat)/eps`` within ``ln(1 + eps/5)`` and a
    flat 1 beyond. Broadcasts over array arguments.
    """
    eps = _check_epsilon(epsilon)
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    low = y_hat - math.log(5 / eps)
    high = y_hat + math.log(1 + eps / 5)
    out = np.select(
        [y <= low, y <= y_hat, y <= high],
        [
            np.full(np.broadcast(y, y_hat).shape, 5 / eps - 1),
            np.expm1(y_hat - y),
            (y - y_hat) / eps,
        ],
        default=1.0,
    )
    return float(out) if out.ndim == 0 else out


def absolute_loss(y, y_hat):
    out = np.abs(np.asarray(y, dtype=np.float64) - y_hat)
    return float(out) if out.ndim == 0 else out


def squared_loss(y, y_hat):
    out = (np.asarray(y, dtype=np.float64) - y_hat) ** 2
    return float(out) if out.ndim == 0 else out


LossFn = Callable[[Any, Any], Any]


def resolve_loss(loss: str | LossFn, epsilon: float | None = None) -> LossFn:
    """Map a loss name to a vectorized ``(y, y_hat) -> loss`` function."""
    if callable(loss):
        return loss
    if loss == "competitive":
        eps = _check_epsilon(epsilon)
        return lambda y, y_hat: competitive_loss(eps, y, y_hat)
    if loss == "absolute":
        return absolute_loss
    if loss == "squared":
        return squared_loss
    raise ParameterError(f"unknown loss {loss!r}")


@dataclass(frozen=True)
class Sample:
    x: Hashable
    y: float


class DiscreteDistribution:
    """Finite-support law over ``(x, y)`` pairs."""

    __slots__ = ("xs", "ys", "probs", "H")

    def __init__(self, atoms: Sequence[tuple[Sample, float]], H: float = DEFAULT_H):
        if not atoms:
            raise ParameterError("distribution needs at least one atom")
        xs = tuple(s.x for s, _ in atoms)
        ys = np.array([s.y for s, _ in atoms], dtype=np.float64)
        probs = np.array([p for _, p in atoms], dtype=np.float64)
        if np.any(probs <= 0):
            raise ParameterError("atom probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ParameterError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if np.any(ys < 0) or np.any(ys > H):
            raise ParameterError(f"log-costs must lie in [0, {H}]")
        ys.setflags(write=False)
        probs.setflags(write=False)
        self.xs = xs
        self.ys = ys
        self.probs = probs
        self.H = float(H)

    @property
    def atoms(self) -> list[tuple[Sample, float]]:
        return [(Sample(x, float(y)), float(p)) for x, y, p in zip(self.xs, self.ys, self.probs)]

    @property
    def features(self) -> list[Hashable]:
        """Distinct features in order of first appearance."""
        return list(dict.fromkeys(self.xs))

    def conditional(self, x: Hashable) -> tuple[np.ndarray, np.ndarray]:
        """``(ys, probs)`` of the atoms at feature ``x``, probabilities unnormalized."""
        mask = np.array([xi == x for xi in self.xs])
        return self.ys[mask], self.probs[mask]

    def to_dict(self) -> dict:
        return {"atoms": [[x, float(y), float(p)] for x, y, p in zip(self.xs, self.ys, self.probs)], "H": self.H}

    @classmethod
    def from_dict(cls, doc: dict) -> DiscreteDistribution:
        atoms = [(Sample(_hashable(x), float(y)), float(p)) for x, y, p in doc["atoms"]]
        return cls(atoms, H=float(doc.get("H", DEFAULT_H)))

    @classmethod
    def load(cls, path: str | Path) -> DiscreteDistribution:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self) -> str:
        return f"DiscreteDistribution({len(self.xs)} atoms, H={self.H})"


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


def predict_many(f, xs: Sequence[Hashable]) -> np.ndarray:
    """Evaluate ``f`` at each feature; uses ``f.predict_many`` when present."""
    if hasattr(f, "predict_many"):
        return np.asarray(f.predict_many(xs), dtype=np.float64)
    cache: dict = {}
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        if x not in cache:
            cache[x] = float(f(x))
        out[i] = cache[x]
    return out


def sample_error(f, samples: Sequence[Sample], epsilon: float, loss: str | LossFn = "competitive") -> float:
    if not samples:
        raise ParameterError("sample set is empty")
    fn = resolve_loss(loss, epsilon)
    ys = np.array([s.y for s in samples])
    preds = predict_many(f, [s.x for s in samples])
    return float(np.mean(fn(ys, preds)))


def dist_error(f, D: DiscreteDistribution, epsilon: float, loss: str | LossFn = "competitive") -> float:
    fn = resolve_loss(loss, epsilon)
    preds = predict_many(f, D.xs)
    return math.fsum(D.probs * fn(D.ys, preds))
