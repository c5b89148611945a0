"""Seeded experiment suites and report emission.

Every suite is a pure function of an :class:`ExperimentConfig`. Trials draw
their randomness from ``numpy.random.default_rng([seed, trial])`` so results
do not depend on how many worker processes run them, and rows are emitted
in a fixed order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import algorithms, distributions, learn
from .errors import InfeasibleError, OnlineSearchError, ValidationError
from .loss import competitive_loss, dist_error
from .optcurve import OptCurve, analytic_curve, load_fixture, near_doubling_curve

EXPERIMENTS = (
    "double-bound",
    "pad-frontier",
    "standard-sweep",
    "agnostic-delta",
    "loss-compare",
    "lowerbound-demo",
)

# defaults that differ by suite
_SUITE_DEFAULTS = {
    "double-bound": {"trials": 1000},
    "pad-frontier": {"trials": 200, "epsilons": [0.1, 0.2, 0.5, 1.0]},
    "standard-sweep": {"trials": 200, "epsilon": 0.2, "H": 5.0, "n_features": 8,
                       "sample_sizes": [10, 30, 100, 300, 1000]},
    "agnostic-delta": {"trials": 20, "H": 5.0, "n_features": 2, "sample_sizes": [5000]},
    "loss-compare": {"trials": 1, "epsilons": [0.05, 0.2], "H": 10.0, "deltas": [4.0, 0.2], "c": 5.0},
    "lowerbound-demo": {"trials": 1, "epsilons": [0.01, 0.04, 0.25]},
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings; see :meth:`from_dict` for the JSON form."""

    experiment: str
    seed: int = 0
    trials: int = 1
    epsilon: float = 0.2
    epsilons: list[float] = field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0])
    delta: float = 0.1
    C: float = 1.0
    H: float = 5.0
    n_features: int = 8
    sample_sizes: list[int] = field(default_factory=lambda: [10, 30, 100, 300, 1000])
    deltas: list[float] = field(default_factory=lambda: [4.0, 0.2])
    c: float = 5.0
    curve: dict | None = None
    distribution: dict | None = None
    family: dict | None = None
    output: str | None = None

    @classmethod
    def from_dict(cls, doc: dict, experiment: str | None = None) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ValidationError("", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in doc:
            if key not in known:
                raise ValidationError(key, "unknown key")
        kind = doc.get("experiment", experiment)
        if experiment is not None and kind != experiment:
            raise ValidationError("experiment", f"config says {kind!r} but the command runs {experiment!r}")
        if kind not in EXPERIMENTS:
            raise ValidationError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        merged = {**_SUITE_DEFAULTS[kind], **doc, "experiment": kind}
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path, experiment: str | None = None) -> ExperimentConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError("", f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc, experiment)

    def validate(self) -> None:
        _int(self.seed, "seed", 0, 2**64 - 1)
        _int(self.trials, "trials", 1)
        _real(self.epsilon, "epsilon", 0, 2, open_low=True)
        _real(self.delta, "delta", 0, 1, open_low=True, open_high=True)
        _real(self.C, "C", 0, math.inf, open_low=True)
        _real(self.H, "H", 0, math.inf, open_low=True)
        _real(self.c, "c", 0, math.inf)
        _int(self.n_features, "n_features", 1)
        _list(self.epsilons, "epsilons", lambda v, p: _real(v, p, 0, 2, open_low=True))
        _list(self.deltas, "deltas", lambda v, p: _real(v, p, 0, self.c))
        _list(self.sample_sizes, "sample_sizes", lambda v, p: _int(v, p, 1))
        if any(b <= a for a, b in zip(self.sample_sizes, self.sample_sizes[1:])):
            raise ValidationError("sample_sizes", "must be strictly increasing")
        for name in ("curve", "distribution", "family"):
            if getattr(self, name) is not None and not isinstance(getattr(self, name), dict):
                raise ValidationError(name, "must be an object")
        if self.curve is not None:
            build_curve(self.curve)
        if self.family is not None and self.family.get("kind") not in ("constant", "lookup", "threshold"):
            raise ValidationError("family.kind", "must be constant, lookup or threshold")
        if self.output is not None and not isinstance(self.output, str):
            raise ValidationError("output", "must be a string")

    def params(self) -> dict:
        """Settings echoed into every report row."""
        keep = {
            "double-bound": (),
            "pad-frontier": (),
            "standard-sweep": ("epsilon", "H", "n_features"),
            "agnostic-delta": ("H", "n_features", "delta", "C"),
            "loss-compare": ("c",),
            "lowerbound-demo": (),
        }[self.experiment]
        return {k: getattr(self, k) for k in keep}


def _int(v, path, lo, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(path, "must be an integer")
    if v < lo or (hi is not None and v > hi):
        raise ValidationError(path, f"must be >= {lo}" + (f" and <= {hi}" if hi is not None else ""))


def _real(v, path, lo, hi, open_low=False, open_high=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(path, "must be a finite number")
    if v < lo or (open_low and v == lo) or v > hi or (open_high and v == hi):
        raise ValidationError(path, f"must lie in {'(' if open_low else '['}{lo}, {hi}{')' if open_high else ']'}")


def _list(v, path, check):
    if not isinstance(v, list) or not v:
        raise ValidationError(path, "must be a nonempty list")
    for i, item in enumerate(v):
        check(item, f"{path}[{i}]")


def build_curve(spec: dict, path: str = "curve") -> OptCurve:
    """Curve from ``{"kind": "linear"|"exponential", ...}``, breakpoints or coupons."""
    try:
        if "kind" in spec:
            params = {k: v for k, v in spec.items() if k != "kind"}
            return analytic_curve(spec["kind"], **params)
        return load_fixture(spec)
    except (KeyError, TypeError) as exc:
        raise ValidationError(path, f"missing or malformed field: {exc}") from exc
    except OnlineSearchError as exc:
        raise ValidationError(path, str(exc)) from exc


# report rows


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    params: dict
    metric: str
    value: float
    trials: int
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise OnlineSearchError(f"metric {self.metric} is not finite: {self.value}")
        object.__setattr__(self, "value", float(self.value))


COLUMNS = ("experiment", "params", "metric", "value", "trials", "seed")


def _params_text(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


def format_report(rows: Sequence[ReportRow], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow([r.experiment, _params_text(r.params), r.metric, repr(r.value), r.trials, r.seed])
        return buf.getvalue()
    if fmt == "json":
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in rows)
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(rows: Sequence[ReportRow], path: str | Path | None, fmt: str = "csv") -> str:
    """Write rows as CSV (RFC 4180) or JSON lines; ``path=None`` only returns the text."""
    text = format_report(rows, fmt)
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def parse_report(text: str, fmt: str = "csv") -> list[ReportRow]:
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text, newline=""))
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected header {header}")
        return [ReportRow(e, json.loads(p), m, float(v), int(t), int(s)) for e, p, m, v, t, s in reader]
    if fmt == "json":
        return [ReportRow(**json.loads(line)) for line in text.splitlines() if line]
    raise ValueError(f"unknown format {fmt!r}")


def read_report(path: str | Path, fmt: str = "csv") -> list[ReportRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_report(fh.read(), fmt)


# trial plumbing


def trial_rng(seed: int, trial: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial, *stream])


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def _row(cfg: ExperimentConfig, metric: str, value: float, extra: dict | None = None, trials: int | None = None):
    params = {**cfg.params(), **(extra or {})}
    return ReportRow(cfg.experiment, params, metric, value, cfg.trials if trials is None else trials, cfg.seed)


# double-bound


def random_curve(rng: np.random.Generator, max_horizon: int = 64) -> OptCurve:
    """Monotone curve with random flat runs and random jump sizes."""
    horizon = int(rng.integers(1, max_horizon + 1))
    start = float(rng.uniform(0.5, 10))
    flat = rng.random(horizon - 1) < 0.4
    jumps = np.where(flat, 1.0, np.exp(rng.exponential(0.6, horizon - 1)))
    return OptCurve.from_dense(start * np.concatenate([[1.0], np.cumprod(jumps)]))


def _double_trial(trial: int, seed: int) -> float:
    curve = random_curve(trial_rng(seed, trial))
    return float(np.max(algorithms.ratios_for_all_T(algorithms.double_schedule(curve), curve)))


def double_bound(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    worst = _map(partial(_double_trial, seed=cfg.seed), range(cfg.trials), threads)
    tight = near_doubling_curve(10)
    tight_cr = float(np.max(algorithms.ratios_for_all_T(algorithms.double_schedule(tight), tight)))
    return [
        _row(cfg, "max_cr", max(worst)),
        _row(cfg, "mean_worst_cr", math.fsum(worst) / len(worst)),
        _row(cfg, "tight_fixture_cr", tight_cr, {"fixture": "near-doubling", "levels": 10}, trials=1),
    ]


# pad-frontier


def smooth_curve(horizon: int = 8000, base: float = 1.001) -> OptCurve:
    return analytic_curve("exponential", horizon=horizon, base=base)


def _frontier_trial(trial: int, seed: int, curve: OptCurve, epsilons: Sequence[float]):
    T_hat = int(trial_rng(seed, trial).integers(1, curve.horizon + 1))
    out = []
    for eps in epsilons:
        sched = algorithms.pad_schedule(curve, T_hat, eps)
        ratios = algorithms.ratios_for_all_T(sched.purchases, curve)
        excess = ratios / algorithms.graceful_bound(curve, T_hat, eps)
        out.append((float(ratios[T_hat - 1]), float(ratios.max()), float(excess.max())))
    return out


def pad_frontier(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    curve = build_curve(cfg.curve) if cfg.curve is not None else smooth_curve()
    results = _map(partial(_frontier_trial, seed=cfg.seed, curve=curve, epsilons=cfg.epsilons),
                   range(cfg.trials), threads)
    rows = []
    for k, eps in enumerate(cfg.epsilons):
        per = [r[k] for r in results]
        extra = {"epsilon": eps}
        rows.append(_row(cfg, "consistency", max(p[0] for p in per), extra))
        rows.append(_row(cfg, "consistency_bound", 1 + eps, extra))
        rows.append(_row(cfg, "robustness", max(p[1] for p in per), extra))
        rows.append(_row(cfg, "robustness_bound", 5 * (1 + 1 / eps), extra))
        rows.append(_row(cfg, "max_profile_ratio", max(p[2] for p in per), extra))
    return rows


# standard-sweep


def _sweep_trial(trial: int, cfg: ExperimentConfig, curve: OptCurve) -> list[float]:
    inst_seed = int(trial_rng(cfg.seed, trial, 0).integers(2**63))
    D, _, family = distributions.make_standard_instance(cfg.n_features, H=cfg.H, seed=inst_seed)
    stream = distributions.draw_samples(D, cfg.sample_sizes[-1], [cfg.seed, trial, 1])
    out = []
    for m in cfg.sample_sizes:
        trained = learn.sem_minimize(family, stream[:m], cfg.epsilon)
        out.append(learn.expected_pipeline_ratio(trained, D, curve, cfg.epsilon))
    return out


def sweep_samples(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    """Mean and spread of the exact test ratio per sample size, over random realizable instances."""
    curve = build_curve(cfg.curve) if cfg.curve is not None else distributions.standard_curve(cfg.H)
    results = np.array(_map(partial(_sweep_trial, cfg=cfg, curve=curve), range(cfg.trials), threads))
    rows = []
    for j, m in enumerate(cfg.sample_sizes):
        col = results[:, j]
        rows.append(_row(cfg, "mean_cr", math.fsum(col) / len(col), {"m": m}))
        rows.append(_row(cfg, "std_cr", float(np.std(col)), {"m": m}))
    rows.append(_row(cfg, "target", 1 + 5 * cfg.epsilon))
    return rows


# agnostic-delta

DELTA_RANGE = (0.05, 0.5)
MAX_FIXTURE_ATTEMPTS = 200


def agnostic_fixture(seed: int, trial: int, n_features: int, H: float):
    """First generated agnostic instance for this trial whose Δ_F lies in ``DELTA_RANGE``."""
    for attempt in range(MAX_FIXTURE_ATTEMPTS):
        inst_seed = [seed, trial, 2, attempt]
        D, family = distributions.make_agnostic_instance(n_features, H=H, seed=inst_seed)
        d_f = learn.delta_f_bruteforce(family, D)
        if DELTA_RANGE[0] <= d_f <= DELTA_RANGE[1]:
            return D, family, d_f
    raise OnlineSearchError(f"no agnostic fixture with Δ_F in {DELTA_RANGE} after {MAX_FIXTURE_ATTEMPTS} tries")


def _agnostic_trial(trial: int, cfg: ExperimentConfig):
    D, family, d_f = agnostic_fixture(cfg.seed, trial, cfg.n_features, cfg.H)
    samples = distributions.draw_samples(D, cfg.sample_sizes[-1], [cfg.seed, trial, 3])
    eps = learn.estimate_delta(family, samples, delta=cfg.delta, C=cfg.C)
    return d_f, eps


def agnostic_delta(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    results = _map(partial(_agnostic_trial, cfg=cfg), range(cfg.trials), threads)
    rows = []
    hits = 0
    m = cfg.sample_sizes[-1]
    for trial, (d_f, eps) in enumerate(results):
        ok = 5 / 36 * eps <= d_f <= 17 / 8 * eps
        hits += ok
        extra = {"trial": trial, "m": m}
        rows.append(_row(cfg, "delta_f", d_f, extra, trials=1))
        rows.append(_row(cfg, "estimate", eps, extra, trials=1))
        rows.append(_row(cfg, "in_bracket", float(ok), extra, trials=1))
    rows.append(_row(cfg, "bracket_hits", float(hits), {"m": m}))
    return rows


# loss-compare


def augmented_grid(D, H: float, step: float = 0.05) -> np.ndarray:
    """Value grid on ``[0, H]`` plus the support and mean of ``D``."""
    extra = list(D.ys) + [math.fsum(D.probs * D.ys)]
    return np.array(sorted(set(learn.value_grid(0.0, H, step).tolist()) | set(extra)))


LOSSES = ("competitive", "absolute", "squared")


def symmetric_branch_bound(first_cost: float, c: float, Delta: float) -> float:
    """Lower bound on E[CR] over the two-atom symmetric fixture, by first purchase."""
    if first_cost >= math.exp(c):
        return (1 + math.exp(Delta)) / 2
    return 1 + math.exp(-Delta) / 2


def compare_losses(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    """Train constants with each loss on each symmetric fixture and report the exact pipeline ratio.

    Absolute and squared losses break ties toward the centre of the tied
    range, so they predict ``c`` exactly as a symmetric learner would.
    """
    rows = []
    for Delta in cfg.deltas:
        D = distributions.make_symmetric(cfg.c, Delta, H=max(cfg.H, cfg.c + Delta))
        curve = distributions.symmetric_curve(cfg.c, Delta)
        family = learn.ConstantFamily(augmented_grid(D, D.H), D.H)
        for eps in cfg.epsilons:
            for loss in LOSSES:
                tie = "first" if loss == "competitive" else "median"
                trained = learn.population_minimize(family, D, eps, loss=loss, tie_break=tie)
                cr = learn.expected_pipeline_ratio(trained, D, curve, eps)
                first = learn.pipeline_schedule(trained, distributions.X0, curve, eps).purchases[0]
                bound = 4.0 if loss == "competitive" else symmetric_branch_bound(first.cost, cfg.c, Delta)
                extra = {"Delta": Delta, "epsilon": eps, "loss": loss}
                rows.append(_row(cfg, "prediction", trained(distributions.X0), extra))
                rows.append(_row(cfg, "expected_cr", cr, extra))
                rows.append(_row(cfg, "bound", bound, extra))
    return rows


# lowerbound-demo


def lowerbound_demo(cfg: ExperimentConfig, threads: int = 1) -> list[ReportRow]:
    """Exact ratios on the absolute-loss adversary and the efficiency lower-bound fixture."""
    rows = []
    for eps in cfg.epsilons:
        if not eps < 1:
            raise ValidationError("epsilons", "lowerbound-demo needs every epsilon < 1")
        D = distributions.make_absloss_adversary(eps)
        curve = distributions.support_curve(D)
        rho, _ = learn.optimal_policy_bruteforce(D, curve)
        const = learn.ConstantPredictor(1.0)
        extra = {"construction": "absloss-adversary", "epsilon": eps}
        rows.append(_row(cfg, "absolute_loss", dist_error(const, D, None, "absolute"), extra))
        rows.append(_row(cfg, "rho_star", rho, extra))
        rows.append(_row(cfg, "bound", 1 + math.sqrt(eps) / 2, extra))
        family = learn.ConstantFamily(augmented_grid(D, D.H), D.H)
        trained = learn.population_minimize(family, D, min(eps, 1.0))
        rows.append(_row(cfg, "competitive_pipeline_cr",
                         learn.expected_pipeline_ratio(trained, D, curve, min(eps, 1.0)), extra))

        D = distributions.make_loss_lowerbound(eps)
        curve = distributions.support_curve(D)
        rho, _ = learn.optimal_policy_bruteforce(D, curve)
        extra = {"construction": "efficiency-lowerbound", "epsilon": eps}
        rows.append(_row(cfg, "competitive_error", dist_error(const, D, eps), extra))
        rows.append(_row(cfg, "rho_star", rho, extra))
        rows.append(_row(cfg, "bound", 1 + eps / 2, extra))
    return rows


SUITES: dict[str, Callable[..., list[ReportRow]]] = {
    "double-bound": double_bound,
    "pad-frontier": pad_frontier,
    "standard-sweep": sweep_samples,
    "agnostic-delta": agnostic_delta,
    "loss-compare": compare_losses,
    "lowerbound-demo": lowerbound_demo,
}


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> list[ReportRow]:
    cfg.validate()
    if threads is None:
        threads = os.cpu_count() or 1
    return SUITES[cfg.experiment](cfg, threads=threads)
