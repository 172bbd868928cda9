"""Wage posting with optimization frictions.

A firm facing labour supply ``l(w)`` and worker productivity ``p`` earns
``l(w) (p - w)``.  Its fully-optimal wage is ``p * eta / (1 + eta)``, but
it starts from a round-number guess and only computes the exact wage when
the profit gain beats a cost expressed as a fraction ``tau`` of profit.
The precision extension lets the firm buy one digit at a time, from the
nearest R$1,000 down to the exact wage.

Wages inside this module are floats in reais; posted wages in
:class:`WageDecision` are integer centavos.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import money
from .errors import DomainError, NoDataError

LADDER = (1000, 100, 10)


@dataclass(frozen=True)
class LaborSupply:
    """Constant-elasticity supply ``l(w) = scale * (w / reference_wage) ** elasticity``."""

    scale: float = 1.0
    elasticity: float = 1.0
    reference_wage: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0 and self.elasticity > 0 and self.reference_wage > 0):
            raise DomainError("labour supply parameters must be positive")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise DomainError("labour supply is defined for positive wages only")
        out = self.scale * (w / self.reference_wage) ** self.elasticity
        return float(out) if out.ndim == 0 else out

    def point_elasticity(self, w):
        return self.elasticity


@dataclass(frozen=True)
class AffineSupply:
    """Affine supply ``l(w) = slope * (w - zero_wage)``.

    Profit is quadratic under this curve, so the Taylor gain formula is
    exact.  :meth:`calibrated` picks ``zero_wage`` so that the point
    elasticity at the optimum equals ``eta``.
    """

    slope: float
    zero_wage: float
    elasticity: float

    @classmethod
    def calibrated(cls, p: float, eta: float, slope: float = 1.0) -> "AffineSupply":
        w_star = optimal_wage(p, eta)
        return cls(slope=slope, zero_wage=w_star * (eta - 1.0) / eta, elasticity=eta)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise DomainError("labour supply is defined for positive wages only")
        out = self.slope * (w - self.zero_wage)
        return float(out) if out.ndim == 0 else out

    def point_elasticity(self, w):
        return w / (w - self.zero_wage)


@dataclass(frozen=True)
class CostDistribution:
    """Distribution ``F_tau`` of optimization costs across firms.

    ``family`` is ``"uniform"`` (``params = (lo, hi)``), ``"point"``
    (``params = (value,)``) or ``"empirical"`` (``params`` is the sample).
    """

    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family == "uniform":
            lo, hi = self.params
            if not (0.0 <= lo < hi < 1.0):
                raise DomainError("uniform cost support must satisfy 0 <= lo < hi < 1")
        elif self.family == "point":
            (v,) = self.params
            if not 0.0 <= v < 1.0:
                raise DomainError("point-mass cost must lie in [0, 1)")
        elif self.family == "empirical":
            sample = np.asarray(self.params, dtype=float)
            if sample.size == 0 or np.any((sample < 0) | (sample >= 1)):
                raise DomainError("empirical costs must be a nonempty sample in [0, 1)")
            object.__setattr__(self, "params", tuple(np.sort(sample).tolist()))
        else:
            raise DomainError(f"unknown cost family {self.family!r}")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "CostDistribution":
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def point(cls, value: float) -> "CostDistribution":
        return cls("point", (float(value),))

    @classmethod
    def empirical(cls, sample) -> "CostDistribution":
        return cls("empirical", tuple(np.asarray(sample, dtype=float).tolist()))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "uniform":
            lo, hi = self.params
            out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        elif self.family == "point":
            out = (x >= self.params[0]).astype(float)
        else:
            sample = np.asarray(self.params)
            out = np.searchsorted(sample, x, side="right") / sample.size
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "uniform":
            lo, hi = self.params
            return rng.uniform(lo, hi, size)
        if self.family == "point":
            return np.full(size, self.params[0])
        return rng.choice(np.asarray(self.params), size=size, replace=True)

    def mean_sqrt(self) -> float:
        """``E[sqrt(tau)]``; handy for closed-form coarse shares."""
        if self.family == "uniform":
            lo, hi = self.params
            return (2.0 / 3.0) * (hi**1.5 - lo**1.5) / (hi - lo)
        if self.family == "point":
            return float(np.sqrt(self.params[0]))
        return float(np.mean(np.sqrt(self.params)))


def optimal_wage(p, eta):
    """Profit-maximising posted wage ``p * eta / (1 + eta)``."""
    p = np.asarray(p, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(p <= 0) or np.any(eta <= 0):
        raise DomainError("productivity and elasticity must be positive")
    out = p * (eta / (1.0 + eta))
    return float(out) if out.ndim == 0 else out


def profit(w, p, supply):
    """``l(w) * (p - w)``; negative when the wage exceeds productivity."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError("profit is defined for positive wages only")
    out = supply(w) * (p - w)
    return float(out) if np.ndim(out) == 0 else out


def gain_exact(w_r, p, supply):
    """Profit forgone by posting ``w_r`` instead of the optimal wage."""
    w_star = optimal_wage(p, supply.elasticity)
    return profit(w_star, p, supply) - profit(w_r, p, supply)


def wedge(w_r, w_star):
    """Relative gap ``(w_r - w*) / w*``."""
    return (np.asarray(w_r, dtype=float) - w_star) / w_star


def gain_taylor(w_r, p, eta, supply):
    """First-order approximation ``pi(w*) * eta**2 * wedge**2``.

    It linearises ``l`` around ``w*`` and so ignores the curvature of
    labour supply; it is exact only when ``l`` is affine near the optimum.
    """
    w_star = optimal_wage(p, eta)
    if np.any(np.asarray(w_r) <= 0):
        raise DomainError("coarse wage must be positive")
    out = profit(w_star, p, supply) * eta**2 * wedge(w_r, w_star) ** 2
    return float(out) if np.ndim(out) == 0 else out


def coarse_probability(eta, w_tilde, costs: CostDistribution):
    """``1 - F_tau(eta**2 * wedge**2)``: probability a firm keeps the round guess."""
    w_tilde = np.asarray(w_tilde, dtype=float)
    if not np.all(np.isfinite(w_tilde)):
        raise DomainError("wedge must be finite")
    out = 1.0 - np.asarray(costs.cdf(np.asarray(eta, dtype=float) ** 2 * w_tilde**2))
    return float(out) if out.ndim == 0 else out


def mixture_cdf(theta: float, coarse_cdf: Callable, optimal_cdf: Callable) -> Callable:
    """CDF of observed wages: ``theta * F_coarse + (1 - theta) * F_optimal``."""
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"mixture weight must lie in [0, 1], got {theta}")

    def cdf(w):
        return theta * np.asarray(coarse_cdf(w)) + (1.0 - theta) * np.asarray(optimal_cdf(w))

    return cdf


def point_mass_cdf(at: float) -> Callable:
    return lambda w: (np.asarray(w, dtype=float) >= at).astype(float)


def uniform_cdf(lo: float, hi: float) -> Callable:
    return lambda w: np.clip((np.asarray(w, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class FirmPrimitives:
    productivity: float
    supply: LaborSupply = field(default_factory=LaborSupply)
    cost_fraction: float = 0.0
    grain: int = 100
    ladder_costs: tuple[float, float, float] | None = None  # (tau_100, tau_10, tau_1)

    def __post_init__(self):
        if self.productivity <= 0:
            raise DomainError("productivity must be positive")
        if not 0.0 <= self.cost_fraction < 1.0:
            raise DomainError("cost fraction must lie in [0, 1)")
        money.check_grain(self.grain)
        if self.ladder_costs is not None:
            if len(self.ladder_costs) != 3 or not all(0.0 <= c < 1.0 for c in self.ladder_costs):
                raise DomainError("ladder costs must be three values in [0, 1)")

    @property
    def w_star(self) -> float:
        return optimal_wage(self.productivity, self.supply.elasticity)


@dataclass(frozen=True)
class WageDecision:
    posted_wage: int  # centavos
    fully_optimal_wage: float
    used_coarse: bool
    chosen_grain: int | None  # None means the exact wage
    gain_forgone: float
    nonpositive_profit: bool = False


def to_centavos(w_reais):
    """Round a reais float (or array) to the nearest centavo, halves up."""
    out = np.floor(np.asarray(w_reais, dtype=float) * money.CENTAVOS_PER_REAL + 0.5).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def coarse_anchor(w_star, grain: int):
    """Round-number guess: ``w*`` to the nearest grain, never below one grain."""
    c = money.round_to_nearest_array(np.atleast_1d(to_centavos(w_star)), grain)
    c = np.maximum(c, grain * money.CENTAVOS_PER_REAL)
    return int(c[0]) if np.ndim(w_star) == 0 else c


def decide_coarse(firm: FirmPrimitives) -> WageDecision:
    """Single-grain model: keep the round guess iff ``tau > eta**2 * wedge**2``."""
    eta = firm.supply.elasticity
    w_star = firm.w_star
    anchor = coarse_anchor(w_star, firm.grain)
    w_tilde = wedge(anchor / 100.0, w_star)
    coarse = firm.cost_fraction > eta**2 * w_tilde**2
    if coarse:
        w_post = anchor
        gain = gain_exact(anchor / 100.0, firm.productivity, firm.supply)
    else:
        w_post = to_centavos(w_star)
        gain = 0.0
    return WageDecision(
        posted_wage=w_post,
        fully_optimal_wage=w_star,
        used_coarse=bool(coarse),
        chosen_grain=firm.grain if coarse else None,
        gain_forgone=float(gain),
        nonpositive_profit=bool(w_post / 100.0 >= firm.productivity),
    )


def ladder_wages(w_star) -> np.ndarray:
    """Candidate posted wages (centavos) at grains 1000, 100, 10 and exact; shape ``(..., 4)``."""
    w_star = np.asarray(w_star, dtype=float)
    cents = np.atleast_1d(to_centavos(w_star))
    cols = [np.maximum(money.round_to_nearest_array(cents, g), g * 100) for g in LADDER]
    cols.append(cents)
    return np.stack(cols, axis=-1).reshape(w_star.shape + (4,))


def ladder_stop_index(w_star, p, supply, costs, rule: str = "sequential") -> np.ndarray:
    """Stopping point on the precision ladder (0: grain 1000 ... 3: exact).

    ``costs`` has shape ``(..., 3)`` holding ``(tau_100, tau_10, tau_1)``.
    The sequential rule advances one step while
    ``profit(finer) * (1 - step cost) >= profit(current)``.  The ``global``
    rule picks the stopping point with the largest profit net of all costs
    paid to reach it.
    """
    wages = ladder_wages(w_star) / 100.0
    p = np.asarray(p, dtype=float)[..., None]
    pi = supply(wages) * (p - wages)
    costs = np.asarray(costs, dtype=float)
    if rule == "sequential":
        advance = pi[..., 1:] * (1.0 - costs) >= pi[..., :-1]
        # index of first failed step, 3 if every step advanced
        failed = ~advance
        return np.where(failed.any(axis=-1), failed.argmax(axis=-1), 3)
    if rule == "global":
        keep = np.concatenate([np.ones(costs.shape[:-1] + (1,)), np.cumprod(1.0 - costs, axis=-1)], axis=-1)
        return np.argmax(pi * keep, axis=-1)
    raise DomainError(f"unknown ladder rule {rule!r}")


def decide_precision(firm: FirmPrimitives, rule: str = "sequential") -> WageDecision:
    """Refine the wage digit by digit from the nearest R$1,000 toward the exact optimum."""
    if firm.ladder_costs is None:
        raise DomainError("decide_precision needs ladder_costs")
    w_star = firm.w_star
    if w_star >= 10_000:
        raise DomainError("precision ladder assumes a fully-optimal wage below R$10,000")
    k = int(ladder_stop_index(w_star, firm.productivity, firm.supply, firm.ladder_costs, rule))
    wages = ladder_wages(w_star)
    posted = int(wages[k])
    grain = LADDER[k] if k < 3 else None
    gain = 0.0 if grain is None else float(gain_exact(posted / 100.0, firm.productivity, firm.supply))
    return WageDecision(
        posted_wage=posted,
        fully_optimal_wage=w_star,
        used_coarse=grain is not None,
        chosen_grain=grain,
        gain_forgone=gain,
        nonpositive_profit=bool(posted / 100.0 >= firm.productivity),
    )


def theta_by_grain(population: Sequence[WageDecision]) -> tuple[dict[int, float], float]:
    """Share of decisions stopping at each grain, plus the exact-optimiser share."""
    n = len(population)
    if n == 0:
        raise NoDataError("theta_by_grain needs at least one decision")
    counts = {g: 0 for g in LADDER}
    exact = 0
    for d in population:
        if d.chosen_grain is None:
            exact += 1
        else:
            counts[d.chosen_grain] += 1
    return {g: c / n for g, c in counts.items()}, exact / n


def stopping_probabilities(w_star, p, supply, step_costs: Sequence[CostDistribution]) -> np.ndarray:
    """Closed-form probabilities of stopping at each ladder point when step costs are independent.

    Step ``j`` is taken iff ``tau_j <= 1 - profit(current) / profit(finer)``
    (for positive finer profit), so the chance of advancing is
    ``F_j(1 - pi_cur / pi_next)``.
    """
    wages = ladder_wages(w_star) / 100.0
    p = np.asarray(p, dtype=float)[..., None]
    pi = supply(wages) * (p - wages)
    adv = []
    for j, dist in enumerate(step_costs):
        cur, nxt = pi[..., j], pi[..., j + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            threshold = 1.0 - cur / nxt
        prob = np.select(
            [nxt > 0, nxt < 0],
            [dist.cdf(threshold), 1.0 - np.asarray(dist.cdf(threshold))],
            default=(cur <= 0).astype(float),
        )
        adv.append(np.asarray(prob, dtype=float))
    a1, a2, a3 = adv
    return np.stack([1 - a1, a1 * (1 - a2), a1 * a2 * (1 - a3), a1 * a2 * a3], axis=-1)
