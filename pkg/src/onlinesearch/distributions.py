"""Seeded generators for the finite-support distributions used in experiments.

All generators are pure functions of their arguments; anything random takes
an explicit ``seed``. Log-costs are natural logs throughout, and each
construction comes with a matching curve so that ``predicted_length`` maps
every atom to the length whose optimal cost is exactly ``e^y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import ConfigurationError, ParameterError
from .learn import LookupTableFamily, TablePredictor, value_grid
from .loss import DEFAULT_H, DiscreteDistribution, Sample
from .optcurve import OptCurve

X0 = "x0"


def curve_from_log_levels(levels: Sequence[float]) -> OptCurve:
    """One length per distinct level, ``opt(i) = e^{level_i}`` with exact logs."""
    return OptCurve.from_log_levels(levels)


def support_curve(D: DiscreteDistribution) -> OptCurve:
    """Curve whose lengths are the distinct log-costs in the support of ``D``."""
    return curve_from_log_levels(D.ys)


def symmetric_curve(c: float, Delta: float) -> OptCurve:
    """Three-step curve with costs ``e^{c-Delta}``, ``e^c`` and ``e^{c+Delta}``."""
    return curve_from_log_levels([c - Delta, c, c + Delta])


def two_point_curve() -> OptCurve:
    """The two-step curve ``opt(1) = 2``, ``opt(2) = 4``."""
    return OptCurve([(1, 2.0), (2, 4.0)], log_costs=[math.log(2), math.log(4)])


def standard_curve(H: float) -> OptCurve:
    """Linear curve ``opt(t) = t`` up to the longest length with ``ln t <= H``."""
    return OptCurve.from_dense(np.arange(1, int(math.floor(math.exp(H))) + 1, dtype=np.float64))


def make_standard_instance(
    n_features: int,
    H: float = 5.0,
    seed: int = 0,
    step: float = 0.1,
    levels: Sequence[float] | None = None,
) -> tuple[DiscreteDistribution, TablePredictor, LookupTableFamily]:
    """Realizable instance: uniform over ``n_features`` points labelled by a random table.

    The family is every lookup table over the features with values in
    ``levels`` (or a grid of pitch ``step`` on ``[0, H]``); the labelling
    function is a uniformly drawn member. ``levels=(1, 2)`` gives the family
    of all ``2^d`` two-valued labellings.
    """
    if n_features < 1:
        raise ParameterError("n_features must be at least 1")
    grid = value_grid(0.0, H, step) if levels is None else np.asarray(levels, dtype=np.float64)
    features = list(range(n_features))
    family = LookupTableFamily(features, grid, H)
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, len(grid), size=n_features)
    f_star = family.member(family.index_of(digits))
    p = 1.0 / n_features
    atoms = [(Sample(x, f_star(x)), p) for x in features]
    return DiscreteDistribution(_fix_mass(atoms), H=H), f_star, family


def _fix_mass(atoms: list[tuple[Sample, float]]) -> list[tuple[Sample, float]]:
    # push rounding residue onto the largest atom so the total is 1
    total = math.fsum(p for _, p in atoms)
    if total == 1.0:
        return atoms
    i = max(range(len(atoms)), key=lambda k: atoms[k][1])
    s, p = atoms[i]
    atoms = list(atoms)
    atoms[i] = (s, p + (1.0 - total))
    return atoms


def make_symmetric(c: float, Delta: float, H: float = DEFAULT_H) -> DiscreteDistribution:
    """Half the mass at log-cost ``c - Delta`` and half at ``c + Delta``, one feature."""
    if Delta < 0 or Delta > c:
        raise ParameterError(f"need 0 <= Delta <= c, got c={c}, Delta={Delta}")
    if c + Delta > H:
        raise ParameterError(f"c + Delta = {c + Delta} exceeds H = {H}")
    if Delta == 0:
        return DiscreteDistribution([(Sample(X0, c), 1.0)], H=H)
    return DiscreteDistribution([(Sample(X0, c - Delta), 0.5), (Sample(X0, c + Delta), 0.5)], H=H)


def make_two_point(p: float) -> DiscreteDistribution:
    """Cost 2 with probability ``p`` and cost 4 otherwise; pair with :func:`two_point_curve`.

    The feature is constant: an observable feature that separated the two
    atoms would let a full-knowledge strategy be exact.
    """
    if not 0 < p < 1:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    return DiscreteDistribution([(Sample(X0, math.log(2)), p), (Sample(X0, math.log(4)), 1.0 - p)])


def make_absloss_adversary(epsilon: float, y_hat: float = 1.0, H: float = DEFAULT_H) -> DiscreteDistribution:
    """Mass ``1 - sqrt(eps)`` at ``y_hat`` and ``sqrt(eps)`` at ``y_hat + sqrt(eps)``.

    The constant predictor ``y_hat`` has expected absolute loss ``eps``.
    ``epsilon = 0`` gives the point mass at ``y_hat``.
    """
    if not 0 <= epsilon < 1:
        raise ParameterError(f"epsilon must lie in [0, 1), got {epsilon}")
    r = math.sqrt(epsilon)
    if r == 0:
        return DiscreteDistribution([(Sample(X0, y_hat), 1.0)], H=H)
    return DiscreteDistribution([(Sample(X0, y_hat), 1.0 - r), (Sample(X0, y_hat + r), r)], H=H)


def make_loss_lowerbound(epsilon: float, y_hat: float = 1.0, H: float = DEFAULT_H) -> DiscreteDistribution:
    """Mass ``1 - eps`` at ``y_hat`` and ``eps`` at ``y_hat * (1 + eps)``.

    The constant predictor ``y_hat`` has expected competitive loss exactly
    ``eps`` whenever ``y_hat * eps > ln(1 + eps/5)``.
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if y_hat <= 0:
        raise ParameterError("y_hat must be positive")
    return DiscreteDistribution(
        [(Sample(X0, y_hat), 1.0 - epsilon), (Sample(X0, y_hat * (1.0 + epsilon)), epsilon)], H=H
    )


def make_agnostic_instance(
    n_features: int = 2,
    H: float = 5.0,
    seed: int = 0,
    step: float = 0.1,
    noise: tuple[float, float] = (0.05, 0.4),
    offset: tuple[float, float] = (0.3, 1.5),
) -> tuple[DiscreteDistribution, LookupTableFamily]:
    """Lookup-table instance where each feature carries a second, noisy label.

    Feature ``j`` (drawn uniformly) has label ``c_j`` except with probability
    ``q_j`` in ``noise``, when it is ``c_j +/- o_j`` with ``o_j`` in
    ``offset``. No table fits both labels, so ``min ER > 0`` at every eps.
    """
    if n_features < 1:
        raise ParameterError("n_features must be at least 1")
    rng = np.random.default_rng(seed)
    grid = value_grid(0.0, H, step)
    lo, hi = offset[1], H - offset[1]
    atoms = []
    p = 1.0 / n_features
    for x in range(n_features):
        c = float(grid[rng.integers(np.searchsorted(grid, lo), np.searchsorted(grid, hi, side="right"))])
        q = float(rng.uniform(*noise))
        o = float(rng.uniform(*offset)) * (1 if rng.random() < 0.5 else -1)
        atoms.append((Sample(x, c), p * (1 - q)))
        atoms.append((Sample(x, c + o), p * q))
    return DiscreteDistribution(_fix_mass(atoms), H=H), LookupTableFamily(list(range(n_features)), grid, H)


def draw_samples(D: DiscreteDistribution, m: int, seed) -> list[Sample]:
    """``m`` i.i.d. draws from ``D``; ``seed`` is anything ``numpy.random.default_rng`` accepts."""
    if m < 1:
        raise ParameterError(f"m must be at least 1, got {m}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(D.xs), size=m, p=D.probs / D.probs.sum())
    return [Sample(D.xs[i], float(D.ys[i])) for i in idx]


KINDS = (
    "standard-realizable",
    "symmetric",
    "two-point",
    "absloss-adversary",
    "efficiency-lowerbound",
    "agnostic",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """A named construction, its parameters and a seed."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown generator kind {self.kind!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


def generate(spec: GeneratorSpec) -> tuple[DiscreteDistribution, OptCurve]:
    """Distribution and matching curve for ``spec``."""
    p = dict(spec.params)
    if spec.kind == "standard-realizable":
        H = float(p.pop("H", 5.0))
        D, _, _ = make_standard_instance(int(p.pop("n_features", 4)), H=H, seed=spec.seed, **p)
        return D, standard_curve(H)
    if spec.kind == "symmetric":
        c, Delta = float(p["c"]), float(p["Delta"])
        return make_symmetric(c, Delta, float(p.get("H", DEFAULT_H))), symmetric_curve(c, Delta)
    elif spec.kind == "two-point":
        return make_two_point(float(p["p"])), two_point_curve()
    elif spec.kind == "absloss-adversary":
        D = make_absloss_adversary(float(p["epsilon"]), float(p.get("y_hat", 1.0)))
    elif spec.kind == "efficiency-lowerbound":
        D = make_loss_lowerbound(float(p["epsilon"]), float(p.get("y_hat", 1.0)))
    else:
        D, _ = make_agnostic_instance(seed=spec.seed, **p)
    return D, support_curve(D)
