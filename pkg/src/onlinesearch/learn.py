"""Hypothesis families, sample-error minimization and the learned search pipeline.

Families are finite: constant predictors and lookup tables over a value grid,
monotone two-level step functions of a real feature, and generic functions
enumerated over a parameter grid. Minimization is exhaustive, so the
returned predictor's sample error equals the enumerated minimum; ties go to
the first member in enumeration order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import algorithms
from .errors import CapacityError, ConfigurationError, ParameterError
from .loss import EPSILON_MAX, DiscreteDistribution, LossFn, Sample, resolve_loss
from .optcurve import OfflineOracle, OptCurve

_CHUNK = 4096


def value_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Evenly spaced values from ``lo`` to ``hi`` inclusive with pitch ``<= step``."""
    if step <= 0 or hi < lo:
        raise ConfigurationError("grid needs step > 0 and hi >= lo")
    n = int(math.ceil((hi - lo) / step - 1e-9)) + 1
    return np.linspace(lo, hi, max(n, 1))


# predictors


class ConstantPredictor:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x) -> float:
        return self.value

    def predict_many(self, xs) -> np.ndarray:
        return np.full(len(xs), self.value)

    def __repr__(self) -> str:
        return f"ConstantPredictor({self.value!r})"


class TablePredictor:
    def __init__(self, table: dict):
        self.table = dict(table)

    def __call__(self, x) -> float:
        return self.table[x]

    def predict_many(self, xs) -> np.ndarray:
        return np.array([self.table[x] for x in xs], dtype=np.float64)

    def __repr__(self) -> str:
        return f"TablePredictor({self.table!r})"


class StepPredictor:
    """``low`` below ``threshold``, ``high`` at or above it."""

    def __init__(self, threshold: float, low: float, high: float):
        self.threshold, self.low, self.high = float(threshold), float(low), float(high)

    def __call__(self, x) -> float:
        return self.low if x < self.threshold else self.high

    def predict_many(self, xs) -> np.ndarray:
        return np.where(np.asarray(xs, dtype=np.float64) < self.threshold, self.low, self.high)

    def __repr__(self) -> str:
        return f"StepPredictor({self.threshold!r}, {self.low!r}, {self.high!r})"


class GridPredictor:
    def __init__(self, fn: Callable, params: tuple, H: float):
        self.fn, self.params, self.H = fn, params, H

    def __call__(self, x) -> float:
        return float(np.clip(self.fn(np.asarray([x], dtype=np.float64), *self.params)[0], 0.0, self.H))

    def predict_many(self, xs) -> np.ndarray:
        return np.clip(self.fn(np.asarray(xs, dtype=np.float64), *self.params), 0.0, self.H)

    def __repr__(self) -> str:
        return f"GridPredictor(params={self.params!r})"


# families


def _compress(xs: Sequence[Hashable], ys: Sequence[float], weights: Sequence[float] | None):
    """Merge repeated ``(x, y)`` pairs, summing their weights."""
    acc: dict = {}
    if weights is None:
        weights = itertools.repeat(1.0)
    for x, y, w in zip(xs, ys, weights):
        key = (x, float(y))
        acc[key] = acc.get(key, 0.0) + float(w)
    keys = list(acc)
    return [k[0] for k in keys], np.array([k[1] for k in keys]), np.array([acc[k] for k in keys])


def _pick(errors: np.ndarray, tie_break: str, values: np.ndarray | None = None) -> int:
    """Index of a minimizer: the first one, or the one central among the ties.

    "median" treats errors within 1e-12 (relative) of the minimum as tied;
    with ``values`` it returns the tie nearest the middle of the tied value
    range, otherwise the middle tie by index.
    """
    if tie_break == "first":
        return int(np.argmin(errors))
    if tie_break == "median":
        best = float(np.min(errors))
        ties = np.flatnonzero(errors <= best + 1e-12 * max(1.0, abs(best)))
        if values is None:
            return int(ties[(len(ties) - 1) // 2])
        v = values[ties]
        return int(ties[np.argmin(np.abs(v - 0.5 * (v.min() + v.max())))])
    raise ParameterError(f"unknown tie_break {tie_break!r}")


class HypothesisFamily:
    """Finite class of predictors ``X -> [0, H]`` with a declared pseudo-dimension."""

    kind = "abstract"

    def __init__(self, pseudo_dimension: int, H: float):
        if pseudo_dimension < 1:
            raise ConfigurationError("pseudo_dimension must be a positive integer")
        self.pseudo_dimension = int(pseudo_dimension)
        self.H = float(H)

    def __len__(self) -> int:
        raise NotImplementedError

    def member(self, index: int):
        raise NotImplementedError

    def predictions(self, xs: Sequence[Hashable], start: int, stop: int) -> np.ndarray:
        """Matrix of member predictions, rows ``start..stop-1``, one column per x."""
        return np.stack([self.member(i).predict_many(xs) for i in range(start, stop)])

    def errors(self, xs, ys, weights, loss_fn: LossFn) -> np.ndarray:
        """Weighted mean loss of every member (small families only)."""
        n = len(self)
        out = np.empty(n)
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        for start in range(0, n, _CHUNK):
            stop = min(start + _CHUNK, n)
            preds = self.predictions(xs, start, stop)
            out[start:stop] = (loss_fn(ys[None, :], preds) @ w) / total
        return out

    def argmin(self, xs, ys, weights, loss_fn: LossFn, tie_break: str = "first") -> tuple[int, float]:
        errs = self.errors(xs, ys, weights, loss_fn)
        i = _pick(errs, tie_break)
        return i, float(errs[i])

    def __iter__(self):
        return (self.member(i) for i in range(len(self)))


class ConstantFamily(HypothesisFamily):
    kind = "constant"

    def __init__(self, grid: Sequence[float], H: float):
        super().__init__(1, H)
        self.grid = np.asarray(grid, dtype=np.float64)
        if np.any(self.grid < 0) or np.any(self.grid > H):
            raise ConfigurationError(f"grid values must lie in [0, {H}]")

    def __len__(self) -> int:
        return len(self.grid)

    def member(self, index: int) -> ConstantPredictor:
        return ConstantPredictor(self.grid[index])

    def predictions(self, xs, start, stop):
        return np.repeat(self.grid[start:stop, None], len(xs), axis=1)

    def argmin(self, xs, ys, weights, loss_fn, tie_break="first"):
        errs = self.errors(xs, ys, weights, loss_fn)
        i = _pick(errs, tie_break, self.grid)
        return i, float(errs[i])


class LookupTableFamily(HypothesisFamily):
    """Every map from a finite feature set into a value grid.

    Members are enumerated lexicographically over the features' grid indices
    (first feature most significant). Sample error is a sum of per-feature
    terms, so the lexicographically first minimizer is found feature by
    feature without enumerating the product.
    """

    kind = "lookup"

    def __init__(self, features: Sequence[Hashable], grid: Sequence[float], H: float):
        super().__init__(len(features), H)
        self.features = list(features)
        if len(set(self.features)) != len(self.features):
            raise ConfigurationError("lookup features must be distinct")
        self._pos = {x: j for j, x in enumerate(self.features)}
        self.grid = np.asarray(grid, dtype=np.float64)
        if np.any(self.grid < 0) or np.any(self.grid > H):
            raise ConfigurationError(f"grid values must lie in [0, {H}]")

    def __len__(self) -> int:
        return len(self.grid) ** len(self.features)

    def digits(self, index: int) -> list[int]:
        G = len(self.grid)
        out = []
        for _ in self.features:
            index, r = divmod(index, G)
            out.append(r)
        return out[::-1]

    def index_of(self, digits: Sequence[int]) -> int:
        index = 0
        for g in digits:
            index = index * len(self.grid) + int(g)
        return index

    def member(self, index: int) -> TablePredictor:
        return TablePredictor({x: float(self.grid[g]) for x, g in zip(self.features, self.digits(index))})

    def table_errors(self, xs, ys, weights, loss_fn: LossFn) -> np.ndarray:
        """``(n_features, n_grid)`` matrix of summed weighted loss per feature and value."""
        out = np.zeros((len(self.features), len(self.grid)))
        w = np.asarray(weights, dtype=np.float64)
        for x, y, wi in zip(xs, ys, w):
            if x not in self._pos:
                raise ConfigurationError(f"feature {x!r} is not in the lookup table")
            out[self._pos[x]] += wi * loss_fn(y, self.grid)
        return out

    def argmin(self, xs, ys, weights, loss_fn, tie_break="first"):
        per = self.table_errors(xs, ys, weights, loss_fn)
        digits = [_pick(row, tie_break, self.grid) for row in per]
        total = math.fsum(per[j, g] for j, g in enumerate(digits)) / float(np.sum(weights))
        return self.index_of(digits), total

    def errors(self, xs, ys, weights, loss_fn):
        if len(self) > 10**6:
            raise CapacityError("lookup family too large to enumerate")
        return super().errors(xs, ys, weights, loss_fn)


class ThresholdFamily(HypothesisFamily):
    """Monotone two-level step functions ``x -> low if x < theta else high``, ``low <= high``."""

    kind = "threshold"

    def __init__(self, thresholds: Sequence[float], grid: Sequence[float], H: float):
        super().__init__(2, H)
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.grid = np.asarray(grid, dtype=np.float64)
        lo, hi = np.triu_indices(len(self.grid))
        self._pairs = np.stack([lo, hi], axis=1)

    def __len__(self) -> int:
        return len(self.thresholds) * len(self._pairs)

    def member(self, index: int) -> StepPredictor:
        k, j = divmod(index, len(self._pairs))
        a, b = self._pairs[j]
        return StepPredictor(self.thresholds[k], self.grid[a], self.grid[b])

    def predictions(self, xs, start, stop):
        xs = np.asarray(xs, dtype=np.float64)
        idx = np.arange(start, stop)
        k, j = np.divmod(idx, len(self._pairs))
        low = self.grid[self._pairs[j, 0]][:, None]
        high = self.grid[self._pairs[j, 1]][:, None]
        return np.where(xs[None, :] < self.thresholds[k][:, None], low, high)


class GridFamily(HypothesisFamily):
    """``x -> clip(fn(x, *params), 0, H)`` for every ``params`` in the product of ``grids``."""

    kind = "grid"

    def __init__(self, fn: Callable, grids: Sequence[Sequence[float]], pseudo_dimension: int, H: float):
        super().__init__(pseudo_dimension, H)
        self.fn = fn
        self.grids = [np.asarray(g, dtype=np.float64) for g in grids]

    def __len__(self) -> int:
        return math.prod(len(g) for g in self.grids)

    def member(self, index: int) -> GridPredictor:
        params = []
        for g in reversed(self.grids):
            index, r = divmod(index, len(g))
            params.append(float(g[r]))
        return GridPredictor(self.fn, tuple(reversed(params)), self.H)


def build_family(spec: dict, H: float) -> HypothesisFamily:
    """Family from a JSON-style spec, e.g. ``{"kind": "constant", "grid": {"lo": 0, "hi": 5, "step": 0.1}}``."""
    kind = spec.get("kind")
    g = spec.get("grid", {})
    grid = value_grid(float(g.get("lo", 0.0)), float(g.get("hi", H)), float(g.get("step", 0.1)))
    if kind == "constant":
        return ConstantFamily(grid, H)
    if kind == "lookup":
        return LookupTableFamily(spec["features"], grid, H)
    if kind == "threshold":
        return ThresholdFamily(spec["thresholds"], grid, H)
    raise ConfigurationError(f"unknown family kind {kind!r}")


# sample error minimization


@dataclass(frozen=True)
class TrainedPredictor:
    predictor: object
    index: int
    epsilon: float | None
    sample_error: float
    min_error: float

    def __call__(self, x) -> float:
        return self.predictor(x)

    def predict_many(self, xs) -> np.ndarray:
        return self.predictor.predict_many(xs)


def _minimize(family, xs, ys, weights, epsilon, loss, tie_break) -> TrainedPredictor:
    if len(family) == 0:
        raise ConfigurationError("hypothesis family is empty")
    loss_fn = resolve_loss(loss, epsilon)
    xs, ys, w = _compress(xs, ys, weights)
    index, err = family.argmin(xs, ys, w, loss_fn, tie_break)
    return TrainedPredictor(family.member(index), index, epsilon, err, err)


def sem_minimize(
    family: HypothesisFamily,
    samples: Sequence[Sample],
    epsilon: float,
    loss: str | LossFn = "competitive",
    tie_break: str = "first",
) -> TrainedPredictor:
    """Exact empirical-error minimizer over the enumerated family."""
    if not samples:
        raise ParameterError("sample set is empty")
    return _minimize(family, [s.x for s in samples], [s.y for s in samples], None, epsilon, loss, tie_break)


def population_minimize(
    family: HypothesisFamily,
    D: DiscreteDistribution,
    epsilon: float | None,
    loss: str | LossFn = "competitive",
    tie_break: str = "first",
) -> TrainedPredictor:
    """Minimizer of the exact expected loss under ``D``."""
    return _minimize(family, D.xs, D.ys, D.probs, epsilon, loss, tie_break)


def chi(family: HypothesisFamily, D: DiscreteDistribution, epsilon: float) -> float:
    """Smallest expected competitive loss achievable in ``family`` at ``epsilon``."""
    return population_minimize(family, D, epsilon).sample_error


def sample_chi(family: HypothesisFamily, samples: Sequence[Sample], epsilon: float) -> float:
    return sem_minimize(family, samples, epsilon).sample_error


# search pipeline


def pipeline_schedule(predictor, x, curve: OptCurve, epsilon: float, oracle: OfflineOracle | None = None):
    T_hat = algorithms.predicted_length(curve, float(predictor(x)))
    return algorithms.pad_schedule(curve, T_hat, epsilon, oracle)


def lts_run(predictor, sample: Sample, curve: OptCurve, epsilon: float, oracle: OfflineOracle | None = None):
    """Run PREDICT-AND-DOUBLE on the prefix length implied by ``sample.y``."""
    T = algorithms.predicted_length(curve, sample.y)
    return algorithms.truncate(pipeline_schedule(predictor, sample.x, curve, epsilon, oracle).purchases, T)


def lts_train_and_run(
    family: HypothesisFamily,
    samples: Sequence[Sample],
    epsilon: float,
    curve: OptCurve,
    test_sample: Sample,
    oracle: OfflineOracle | None = None,
) -> algorithms.RunRecord:
    trained = sem_minimize(family, samples, epsilon)
    return lts_run(trained, test_sample, curve, epsilon, oracle)


def expected_pipeline_ratio(
    predictor,
    D: DiscreteDistribution,
    curve: OptCurve,
    epsilon: float,
    oracle: OfflineOracle | None = None,
) -> float:
    """Exact ``E[CR]`` of the pipeline over ``D`` (stopping time from each atom's ``y``)."""
    ratios_by_x = {}
    terms = []
    for x, y, p in zip(D.xs, D.ys, D.probs):
        if x not in ratios_by_x:
            sched = pipeline_schedule(predictor, x, curve, epsilon, oracle)
            ratios_by_x[x] = algorithms.ratios_for_all_T(sched.purchases, curve)
        T = algorithms.predicted_length(curve, float(y))
        terms.append(p * ratios_by_x[x][T - 1])
    return math.fsum(terms)


# accuracy and sample size


def sample_complexity_bound(H: float, d: int, epsilon: float, delta: float, C: float = 1.0) -> int:
    """Reference sample size ``ceil(C H d ln(1/eps) ln(1/delta) / eps)``."""
    if min(H, d, epsilon, delta, C) <= 0 or epsilon >= 1 or delta >= 1:
        raise ParameterError("need H, d, C > 0 and epsilon, delta in (0, 1)")
    return math.ceil(C * H * d * math.log(1 / epsilon) * math.log(1 / delta) / epsilon)


def accuracy_from_samples(m: int, H: float, d: int, delta: float = 0.1, C: float = 1.0) -> float:
    """Invert the sample-size relation: the ``eps`` in (0, 1) whose reference size is ``m``."""
    if m <= 0 or min(H, d, C) <= 0 or not 0 < delta < 1:
        raise ParameterError("need m, H, d, C > 0 and delta in (0, 1)")
    scale = C * H * d * math.log(1 / delta)
    lo, hi = 1e-15, 1.0  # ln(1/e)/e falls from +inf to 0 on this interval
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if scale * math.log(1 / mid) / mid > m:
            lo = mid
        else:
            hi = mid
    return hi


def estimate_delta(
    family: HypothesisFamily,
    samples: Sequence[Sample],
    epsilon0: float | None = None,
    *,
    delta: float = 0.1,
    C: float = 1.0,
) -> float:
    """Doubling search for the intrinsic error level of ``family``.

    Starting at ``epsilon0`` (by default derived from ``len(samples)``),
    double ``eps`` until the minimizer's sample error at ``eps`` drops below
    ``eps``. The result is capped at 2, where the loss bound forces exit.
    """
    if epsilon0 is None:
        epsilon0 = accuracy_from_samples(len(samples), family.H, family.pseudo_dimension, delta, C)
    if not 0 < epsilon0 <= EPSILON_MAX:
        raise ParameterError(f"epsilon0 must lie in (0, {EPSILON_MAX}]")
    eps = float(epsilon0)
    err = sample_chi(family, samples, eps)
    while eps <= err:
        eps = min(2 * eps, EPSILON_MAX)
        err = sample_chi(family, samples, eps)
    return eps


def delta_f_bruteforce(family: HypothesisFamily, D: DiscreteDistribution, tol: float = 1e-6) -> float:
    """Crossing point of ``chi(eps) = eps`` by bisection on ``(1e-6, 2)``.

    ``chi`` is nonincreasing, so ``chi(eps) - eps`` changes sign once. ``chi``
    can jump, in which case the crossing is where it jumps past the diagonal.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    lo, hi = 1e-6, EPSILON_MAX
    if chi(family, D, lo) <= lo:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if chi(family, D, mid) > mid:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# full-knowledge optimum


def optimal_policy_bruteforce(
    D: DiscreteDistribution, curve: OptCurve, max_levels: int = 12
) -> tuple[float, dict[Hashable, algorithms.ThresholdStrategy]]:
    """Best expected competitive ratio with full knowledge of ``D``.

    For each feature, enumerate every increasing sequence of prefix lengths
    drawn from that feature's support (always ending at its longest), buying
    the next one whenever the input outlives the current one. Buying between
    support lengths is never better, so this search is exhaustive.
    """
    rho = []
    policy = {}
    for x in D.features:
        ys, ps = D.conditional(x)
        Ts = np.array([algorithms.predicted_length(curve, float(y)) for y in ys])
        levels = sorted(set(Ts.tolist()))
        if len(levels) > max_levels:
            raise CapacityError(f"feature {x!r} has {len(levels)} support levels (max {max_levels})")
        opt = {t: curve.opt_at(t) for t in levels}
        best, best_covers = math.inf, None
        inner = levels[:-1]
        for r in range(len(inner) + 1):
            for chosen in itertools.combinations(inner, r):
                covers = list(chosen) + [levels[-1]]
                total = []
                for T, p in zip(Ts, ps):
                    paid = opt[covers[0]]
                    for prev, c in zip(covers, covers[1:]):
                        if T > prev:
                            paid += opt[c]
                    total.append(p * paid / opt[T])
                value = math.fsum(total)
                if value < best:
                    best, best_covers = value, covers
        rho.append(best)
        policy[x] = algorithms.ThresholdStrategy.from_covers(best_covers)
    return math.fsum(rho), policy
