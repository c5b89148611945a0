"""Offline-optimal cost curves.

An :class:`OptCurve` is a nondecreasing step function ``t -> opt(t)`` over
integer prefix lengths ``1..horizon``. Lengths are 1-based everywhere.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, NoFeasibleLength, ParameterError, RangeError


class Beyond(enum.Enum):
    """Marker returned by :meth:`OptCurve.min_length` when no length qualifies."""

    HORIZON = "beyond-horizon"

    def __repr__(self) -> str:
        return "BEYOND_HORIZON"


BEYOND_HORIZON = Beyond.HORIZON


class OptCurve:
    """Monotone step curve of offline optimal costs.

    ``breakpoints`` is a sequence of ``(length, cost)`` pairs with strictly
    increasing lengths starting at 1 and nondecreasing positive costs. The
    value at a non-breakpoint length is the cost of the largest breakpoint
    at or below it.

    If ``log_costs`` is given it is taken as the exact natural log of each
    breakpoint cost; log-space queries (:meth:`longest_within_log`) compare
    against these values instead of ``log(cost)``, so curves built from
    log-levels answer those queries without rounding drift.
    """

    __slots__ = ("lengths", "costs", "log_costs", "horizon", "_dense", "_dense_log")

    def __init__(
        self,
        breakpoints: Iterable[tuple[int, float]],
        horizon: int | None = None,
        log_costs: Sequence[float] | None = None,
    ):
        pts = [(int(t), float(c)) for t, c in breakpoints]
        if not pts:
            raise ConfigurationError("curve needs at least one breakpoint")
        lengths = np.array([t for t, _ in pts], dtype=np.int64)
        costs = np.array([c for _, c in pts], dtype=np.float64)
        if lengths[0] != 1:
            raise ConfigurationError(f"first breakpoint must be at length 1, got {lengths[0]}")
        if np.any(np.diff(lengths) <= 0):
            raise ConfigurationError("breakpoint lengths must be strictly increasing")
        if not np.all(np.isfinite(costs)) or np.any(costs <= 0):
            raise ConfigurationError("costs must be finite and positive")
        if np.any(np.diff(costs) < 0):
            raise ConfigurationError("costs must be nondecreasing")
        if log_costs is None:
            logs = np.log(costs)
        else:
            logs = np.asarray(log_costs, dtype=np.float64)
            if logs.shape != costs.shape:
                raise ConfigurationError("log_costs must match breakpoints")
            if np.any(np.diff(logs) < 0):
                raise ConfigurationError("log_costs must be nondecreasing")
        if horizon is None:
            horizon = int(lengths[-1])
        if horizon < lengths[-1]:
            raise ConfigurationError(f"horizon {horizon} is below the last breakpoint {lengths[-1]}")

        idx = np.searchsorted(lengths, np.arange(1, horizon + 1), side="right") - 1
        dense = costs[idx]
        dense_log = logs[idx]
        for arr in (lengths, costs, logs, dense, dense_log):
            arr.setflags(write=False)
        self.lengths = lengths
        self.costs = costs
        self.log_costs = logs
        self.horizon = int(horizon)
        self._dense = dense
        self._dense_log = dense_log

    @classmethod
    def from_dense(cls, costs: Sequence[float]) -> OptCurve:
        """Curve with ``opt(t) = costs[t-1]``, compressed to breakpoints."""
        costs = [float(c) for c in costs]
        pts = [(1, costs[0])]
        for t, c in enumerate(costs[1:], start=2):
            if c != pts[-1][1]:
                pts.append((t, c))
        return cls(pts, horizon=len(costs))

    @classmethod
    def from_log_levels(cls, levels: Sequence[float]) -> OptCurve:
        """One length per distinct log-cost level, ``opt(i) = e^{levels[i-1]}``."""
        ys = sorted(set(float(y) for y in levels))
        return cls([(i + 1, math.exp(y)) for i, y in enumerate(ys)], log_costs=ys)

    # queries

    @property
    def breakpoints(self) -> list[tuple[int, float]]:
        return list(zip(self.lengths.tolist(), self.costs.tolist()))

    @property
    def dense_costs(self) -> np.ndarray:
        """Read-only array whose entry ``t-1`` is ``opt(t)``."""
        return self._dense

    @property
    def dense_log_costs(self) -> np.ndarray:
        return self._dense_log

    @property
    def jump_ratio(self) -> float:
        """Largest ratio ``opt(t+1) / opt(t)`` along the curve."""
        if len(self.costs) == 1:
            return 1.0
        return float(np.max(self.costs[1:] / self.costs[:-1]))

    def _check(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            raise RangeError(f"length {t} outside [1, {self.horizon}]")
        return int(t)

    def opt_at(self, t: int) -> float:
        return float(self._dense[self._check(t) - 1])

    def log_opt_at(self, t: int) -> float:
        return float(self._dense_log[self._check(t) - 1])

    def min_length(self, alpha: float, tau: int) -> int | Beyond:
        """Smallest ``t`` with ``opt(t) >= alpha * opt(tau)``."""
        if alpha <= 0:
            raise ParameterError("alpha must be positive")
        target = alpha * self.opt_at(tau)
        i = int(np.searchsorted(self._dense, target, side="left"))
        if i == self.horizon:
            return BEYOND_HORIZON
        return i + 1

    def max_length(self, alpha: float, tau: int) -> int:
        """Largest ``t`` with ``opt(t) <= alpha * opt(tau)``."""
        if alpha <= 0:
            raise ParameterError("alpha must be positive")
        target = alpha * self.opt_at(tau)
        n = int(np.searchsorted(self._dense, target, side="right"))
        if n == 0:
            raise NoFeasibleLength(f"no length has opt(t) <= {target!r}")
        return n

    def longest_within_log(self, y: float) -> int:
        """Largest ``t`` with ``ln opt(t) <= y``; 0 if even ``opt(1)`` exceeds ``e^y``."""
        return int(np.searchsorted(self._dense_log, y, side="right"))

    def to_dict(self) -> dict:
        return {"breakpoints": [[t, c] for t, c in self.breakpoints], "horizon": self.horizon}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OptCurve):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self._dense, other._dense)

    def __hash__(self) -> int:
        return hash((self.horizon, self._dense.tobytes()))

    def __repr__(self) -> str:
        bp = self.breakpoints
        shown = bp if len(bp) <= 4 else bp[:3] + ["..."]
        return f"OptCurve({shown}, horizon={self.horizon})"


@dataclass(frozen=True)
class CouponSet:
    """Rental options ``(cost, duration)``; ``math.inf`` duration means "buy"."""

    coupons: tuple[tuple[float, float], ...]

    def __post_init__(self):
        coupons = tuple((float(c), float(d)) for c, d in self.coupons)
        if not coupons:
            raise ConfigurationError("coupon set is empty")
        for c, d in coupons:
            if not c > 0 or not math.isfinite(c):
                raise ConfigurationError(f"coupon cost must be positive, got {c}")
            if d != math.inf and (d < 1 or d != int(d)):
                raise ConfigurationError(f"coupon duration must be a positive integer, got {d}")
        object.__setattr__(self, "coupons", coupons)

    def durations(self, horizon: int) -> list[int]:
        return [horizon if d == math.inf else min(int(d), horizon) for _, d in self.coupons]


def ski_rental_curve(coupons: CouponSet | Sequence[tuple[float, float]], horizon: int) -> OptCurve:
    """Optimal coupon cover cost for every ski-season length up to ``horizon``.

    ``opt(T) = min_i C_i + opt(T - d_i)`` with ``opt(t) = 0`` for ``t <= 0``.
    """
    if not isinstance(coupons, CouponSet):
        coupons = CouponSet(tuple(coupons))
    if horizon < 1:
        raise ParameterError("horizon must be at least 1")
    prices = [c for c, _ in coupons.coupons]
    durations = coupons.durations(horizon)
    best = [0.0] * (horizon + 1)
    for T in range(1, horizon + 1):
        best[T] = min(c + best[max(T - d, 0)] for c, d in zip(prices, durations))
    return OptCurve.from_dense(best[1:])


def analytic_curve(kind: str, **params) -> OptCurve:
    """Fixture curves.

    ``linear``: ``opt(t) = slope * t`` (``horizon``, ``slope=1``).
    ``exponential``: ``opt(t) = base ** (t - 1)`` (``horizon``, ``base=2``).
    ``custom``: explicit ``breakpoints`` (and optional ``horizon``).
    """
    if kind == "linear":
        horizon = int(params["horizon"])
        slope = float(params.get("slope", 1.0))
        return OptCurve.from_dense([slope * t for t in range(1, horizon + 1)])
    if kind == "exponential":
        horizon = int(params["horizon"])
        base = float(params.get("base", 2.0))
        if base < 1:
            raise ConfigurationError("exponential base must be >= 1")
        return OptCurve.from_dense([base ** (t - 1) for t in range(1, horizon + 1)])
    if kind == "custom":
        return OptCurve(params["breakpoints"], horizon=params.get("horizon"))
    raise ConfigurationError(f"unknown curve kind {kind!r}")


def near_doubling_curve(levels: int, gap: float = 1e-3) -> OptCurve:
    """Costs ``1, 2(1-gap), 2, 4(1-gap), 4, ...``.

    Every doubling milestone sits right after a length whose cost is just
    below the next power of two, which pushes DOUBLE toward ratio 4.
    """
    costs = [1.0]
    for k in range(1, levels + 1):
        costs.append(2.0**k * (1.0 - gap))
        costs.append(2.0**k)
    return OptCurve.from_dense(costs)


@dataclass(frozen=True)
class OfflineOracle:
    """A ``ratio``-approximate offline solver; pays the worst case ``ratio * opt(t)``."""

    ratio: float
    curve: OptCurve

    def __post_init__(self):
        if not self.ratio >= 1:
            raise ParameterError("oracle ratio must be >= 1")

    def buy(self, t: int) -> float:
        return self.ratio * self.curve.opt_at(t)


def load_fixture(source: str | Path | dict) -> OptCurve:
    """Build a curve from ``{"breakpoints": ...}`` or ``{"coupons": ..., "horizon": n}``."""
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    if "breakpoints" in doc:
        return OptCurve([tuple(p) for p in doc["breakpoints"]], horizon=doc.get("horizon"))
    if "coupons" in doc:
        coupons = [(c, math.inf if d is None or d == "inf" else d) for c, d in doc["coupons"]]
        return ski_rental_curve(CouponSet(tuple(coupons)), int(doc["horizon"]))
    raise ConfigurationError("fixture needs 'breakpoints' or 'coupons'")

