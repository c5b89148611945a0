"""Online purchase algorithms over an :class:`~onlinesearch.optcurve.OptCurve`.

Every algorithm here is oblivious to the stopping time ``T`` until it arrives:
the sequence of purchases it would make is fixed in advance and the run for a
given ``T`` is the prefix of that sequence made at times ``<= T``. The
``*_schedule`` functions return the full sequence; the ``run_*`` functions cut
it at ``T`` and check feasibility.

Solutions are paid for at ``opt(t)`` unless an :class:`OfflineOracle` is
supplied, in which case each purchase costs ``oracle.buy(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InfeasibleError, ParameterError
from .optcurve import BEYOND_HORIZON, OfflineOracle, OptCurve


@dataclass(frozen=True)
class Purchase:
    time: int
    covered: int
    cost: float


@dataclass(frozen=True)
class RunRecord:
    """Purchases made up to ``stopping_time`` and their total cost."""

    purchases: tuple[Purchase, ...]
    stopping_time: int
    total_cost: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_cost", math.fsum(p.cost for p in self.purchases))

    def is_feasible(self) -> bool:
        """True if every step ``1..T`` is covered by a solution bought by then."""
        covered = 0
        for p in sorted(self.purchases, key=lambda p: p.time):
            if p.time > covered + 1:
                return False
            covered = max(covered, p.covered)
        return covered >= self.stopping_time

    def to_dict(self, curve: OptCurve | None = None) -> dict:
        doc = {
            "purchases": [{"t": p.time, "covered": p.covered, "cost": p.cost} for p in self.purchases],
            "total": self.total_cost,
            "T": self.stopping_time,
        }
        if curve is not None:
            doc["cr"] = competitive_ratio(self, curve)
        return doc


@dataclass(frozen=True)
class ThresholdStrategy:
    """Upgrade points ``tau_0 < tau_1 < ...`` of the generic threshold algorithm."""

    thresholds: tuple[int, ...]

    def __post_init__(self):
        ts = tuple(int(t) for t in self.thresholds)
        if not ts:
            raise ParameterError("threshold list is empty")
        if ts[0] < 2:
            raise ParameterError("first threshold must be >= 2 so that opt(tau_0 - 1) exists")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ParameterError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", ts)

    @classmethod
    def from_covers(cls, covers: Sequence[int]) -> ThresholdStrategy:
        """Strategy that buys ``opt(c)`` for each ``c`` in ``covers``, in order."""
        return cls(tuple(c + 1 for c in covers))


Pricer = Callable[[int], float]


def _pricer(curve: OptCurve, oracle: OfflineOracle | None) -> Pricer:
    if oracle is None:
        return curve.opt_at
    if oracle.curve is not curve and oracle.curve != curve:
        raise ParameterError("oracle wraps a different curve")
    return oracle.buy


def _doubling(curve: OptCurve, start: int, price: Pricer, stop_before: int | None = None) -> Iterator[Purchase]:
    # at t = tau_i buy opt(tau_{i+1} - 1), tau_{i+1} = Min-Length(2, tau_i)
    tau = start
    while tau <= curve.horizon and (stop_before is None or tau < stop_before):
        nxt = curve.min_length(2.0, tau)
        if nxt is BEYOND_HORIZON:
            yield Purchase(tau, curve.horizon, price(curve.horizon))
            return
        yield Purchase(tau, nxt - 1, price(nxt - 1))
        tau = nxt


def double_schedule(curve: OptCurve, oracle: OfflineOracle | None = None) -> tuple[Purchase, ...]:
    return tuple(_doubling(curve, 1, _pricer(curve, oracle)))


@dataclass(frozen=True)
class PadSchedule:
    """Full PREDICT-AND-DOUBLE plan for one prediction."""

    t1: int
    t2: int
    purchases: tuple[Purchase, ...]


def pad_schedule(
    curve: OptCurve, T_hat: int, epsilon: float, oracle: OfflineOracle | None = None
) -> PadSchedule:
    if not 0 < epsilon:
        raise ParameterError("epsilon must be positive")
    price = _pricer(curve, oracle)
    t1 = curve.min_length(epsilon / 5, T_hat)
    t2 = curve.max_length(1 + epsilon / 5, T_hat)
    purchases = list(_doubling(curve, 1, price, stop_before=t1))
    purchases.append(Purchase(t1, t2, price(t2)))
    if t2 < curve.horizon:
        purchases.extend(_doubling(curve, t2 + 1, price))
    return PadSchedule(t1, t2, tuple(purchases))


def threshold_schedule(
    curve: OptCurve, strategy: ThresholdStrategy, oracle: OfflineOracle | None = None
) -> tuple[Purchase, ...]:
    price = _pricer(curve, oracle)
    H = curve.horizon
    ts = strategy.thresholds
    first = min(ts[0] - 1, H)
    purchases = [Purchase(1, first, price(first))]
    for tau, nxt in zip(ts, ts[1:]):
        if purchases[-1].covered >= H:
            break
        cover = min(nxt - 1, H)
        purchases.append(Purchase(tau, cover, price(cover)))
    return tuple(purchases)


def truncate(schedule: Sequence[Purchase], T: int) -> RunRecord:
    bought = tuple(p for p in schedule if p.time <= T)
    record = RunRecord(bought, T)
    if not record.is_feasible():
        raise InfeasibleError(f"purchases do not cover every step up to T={T}")
    return record


def _check_T(curve: OptCurve, T: int) -> None:
    if not 1 <= T <= curve.horizon:
        raise ParameterError(f"stopping time {T} outside [1, {curve.horizon}]")


def run_double(curve: OptCurve, T: int, oracle: OfflineOracle | None = None) -> RunRecord:
    _check_T(curve, T)
    return truncate(double_schedule(curve, oracle), T)


def run_predict_and_double(
    curve: OptCurve,
    T: int,
    T_hat: int,
    epsilon: float,
    oracle: OfflineOracle | None = None,
) -> RunRecord:
    _check_T(curve, T)
    _check_T(curve, T_hat)
    return truncate(pad_schedule(curve, T_hat, epsilon, oracle).purchases, T)


def run_thresholds(
    curve: OptCurve,
    T: int,
    strategy: ThresholdStrategy,
    oracle: OfflineOracle | None = None,
) -> RunRecord:
    _check_T(curve, T)
    return truncate(threshold_schedule(curve, strategy, oracle), T)


def competitive_ratio(record: RunRecord, curve: OptCurve) -> float:
    return record.total_cost / curve.opt_at(record.stopping_time)


def ratios_for_all_T(schedule: Sequence[Purchase], curve: OptCurve) -> np.ndarray:
    """Competitive ratio of ``schedule`` at every stopping time ``1..horizon``.

    Entry ``T-1`` equals ``competitive_ratio(truncate(schedule, T), curve)``.
    """
    times = np.array([p.time for p in schedule], dtype=np.int64)
    covered = np.maximum.accumulate(np.array([p.covered for p in schedule], dtype=np.int64))
    paid = np.cumsum([p.cost for p in schedule])
    Ts = np.arange(1, curve.horizon + 1)
    k = np.searchsorted(times, Ts, side="right")
    if np.any(k == 0) or np.any(covered[k - 1] < Ts):
        raise InfeasibleError("schedule leaves some stopping time uncovered")
    return paid[k - 1] / curve.dense_costs


def predicted_length(curve: OptCurve, y_hat: float) -> int:
    """Longest prefix with ``opt(t) <= e^{y_hat}``, clamped to 1 from below."""
    return max(curve.longest_within_log(y_hat), 1)


Mixture = Sequence[tuple[float, ThresholdStrategy]]


def expected_ratio(
    curve: OptCurve,
    stopping: Sequence[tuple[int, float]],
    strategy: ThresholdStrategy | Mixture,
    oracle: OfflineOracle | None = None,
) -> float:
    """Exact expected competitive ratio over a finite stopping-time law.

    ``strategy`` may be a single strategy or a list of ``(weight, strategy)``
    pairs, in which case the expectation is also taken over the mixture.
    """
    mix = [(1.0, strategy)] if isinstance(strategy, ThresholdStrategy) else list(strategy)
    total_w = math.fsum(w for w, _ in mix)
    if abs(total_w - 1.0) > 1e-12:
        raise ParameterError("mixture weights must sum to 1")
    terms = []
    for w, s in mix:
        sched = threshold_schedule(curve, s, oracle)
        for T, p in stopping:
            terms.append(w * p * competitive_ratio(truncate(sched, T), curve))
    return math.fsum(terms)


def graceful_bound(curve: OptCurve, T_hat: int, epsilon: float) -> np.ndarray:
    """Piecewise ratio profile of PREDICT-AND-DOUBLE for prediction ``T_hat``.

    Entry ``T-1`` is 4 for ``T < t1`` and ``T > t2`` and
    ``(1 + eps) * opt(T_hat) / opt(T)`` in between.
    """
    t1 = curve.min_length(epsilon / 5, T_hat)
    t2 = curve.max_length(1 + epsilon / 5, T_hat)
    Ts = np.arange(1, curve.horizon + 1)
    out = np.full(curve.horizon, 4.0)
    if t1 is not BEYOND_HORIZON:
        mid = (Ts >= t1) & (Ts <= t2)
        out[mid] = (1 + epsilon) * curve.opt_at(T_hat) / curve.dense_costs[mid]
    return out
