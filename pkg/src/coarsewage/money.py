"""Exact monetary arithmetic on integer centavos and round-number predicates.

All amounts are integer counts of centavos (1/100 BRL).  Scalar helpers
accept Python ints; the ``*_array`` variants accept integer numpy arrays
and are used by the estimators on whole cohorts.

>>> is_divisible(reais(1000), 10)
True
>>> round_to_nearest(reais(1500), 1000) == reais(2000)
True
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, NoDataError

CENTAVOS_PER_REAL = 100
DEFAULT_GRAINS = (10, 100, 1000)


def reais(amount) -> int:
    """Convert a reais amount (int, str or Decimal) to integer centavos.

    Floats are accepted but routed through ``Decimal(str(x))`` so that
    ``reais(1031.4)`` gives 103140 rather than 103139.
    """
    if isinstance(amount, (int, np.integer)):
        value = int(amount) * CENTAVOS_PER_REAL
    else:
        if isinstance(amount, float):
            amount = str(amount)
        d = Decimal(amount) * CENTAVOS_PER_REAL
        if d != d.to_integral_value():
            raise DomainError(f"{amount!r} has sub-centavo precision")
        value = int(d)
    if value < 0:
        raise DomainError(f"negative amount {amount!r}")
    return value


def to_reais(centavos: int) -> Decimal:
    return Decimal(int(centavos)) / CENTAVOS_PER_REAL


def format_brl(centavos: int) -> str:
    whole, frac = divmod(int(centavos), CENTAVOS_PER_REAL)
    return f"R${whole:,}.{frac:02d}"


def check_grain(grain: int) -> int:
    """Validate a round-number grain (whole reais, a power of ten >= 10)."""
    g = int(grain)
    if g < 10 or 10 ** round(np.log10(g)) != g:
        raise DomainError(f"grain must be a power of ten >= 10, got {grain!r}")
    return g


def is_divisible(w: int, grain: int) -> bool:
    """True iff ``w`` has zero centavos and its whole-real value is a multiple of ``grain``."""
    return int(w) % (check_grain(grain) * CENTAVOS_PER_REAL) == 0


def is_divisible_array(w, grain: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    return w % (check_grain(grain) * CENTAVOS_PER_REAL) == 0


def is_exclusively_divisible_array(w, grain: int) -> np.ndarray:
    """Divisible by ``grain`` but not by ``10 * grain``."""
    return is_divisible_array(w, grain) & ~is_divisible_array(w, 10 * grain)


def round_to_nearest(w: int, grain: int) -> int:
    """Nearest multiple of ``grain`` reais; an exact half rounds away from zero."""
    w = int(w)
    if w < 0:
        raise DomainError("round_to_nearest expects a nonnegative amount")
    step = check_grain(grain) * CENTAVOS_PER_REAL
    return (w + step // 2) // step * step


def round_to_nearest_array(w, grain: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    if (w < 0).any():
        raise DomainError("round_to_nearest expects nonnegative amounts")
    step = check_grain(grain) * CENTAVOS_PER_REAL
    return (w + step // 2) // step * step


class DivisibilityShares(NamedTuple):
    shares: dict[int, float]
    baselines: dict[int, float]


def divisibility_shares(wages: Iterable[int], grains: Sequence[int] = DEFAULT_GRAINS) -> DivisibilityShares:
    """Fraction of wages divisible by each grain, with the uniform-last-digit baselines ``1/g``."""
    w = np.asarray(wages if isinstance(wages, np.ndarray) else list(wages), dtype=np.int64)
    if w.size == 0:
        raise NoDataError("divisibility_shares needs at least one wage")
    shares = {}
    baselines = {}
    for g in grains:
        g = check_grain(g)
        hits = int(np.count_nonzero(is_divisible_array(w, g)))
        shares[g] = hits / w.size
        baselines[g] = 1 / g
    return DivisibilityShares(shares, baselines)


def is_round_increase(w0: int, w1: int) -> bool:
    """Nonzero change whose absolute value is a multiple of R$10."""
    delta = abs(int(w1) - int(w0))
    return delta > 0 and is_divisible(delta, 10)


def is_integer_pct_increase(w0: int, w1: int) -> bool:
    """Exact test that ``(w1 - w0) / w0`` is a nonzero whole percentage."""
    w0, w1 = int(w0), int(w1)
    if w0 == 0:
        raise DomainError("percent change undefined for a zero base wage")
    return w1 != w0 and (100 * (w1 - w0)) % w0 == 0


def is_integer_pct_increase_float(w0: float, w1: float, tol: float = 1e-9) -> bool:
    """Tolerance variant for float-typed external data."""
    if w0 == 0:
        raise DomainError("percent change undefined for a zero base wage")
    if w1 == w0:
        return False
    pct = 100.0 * (w1 - w0) / w0
    return abs(pct - round(pct)) < tol


def pct_change(w0: int, w1: int) -> Fraction:
    if int(w0) == 0:
        raise DomainError("percent change undefined for a zero base wage")
    return Fraction(100 * (int(w1) - int(w0)), int(w0))


@dataclass(frozen=True)
class RoundSet:
    """Multiples of ``grain`` reais inside ``[support_lo, support_hi]`` (centavos)."""

    grain: int
    support_lo: int
    support_hi: int

    def __post_init__(self):
        check_grain(self.grain)
        if self.support_lo < 0 or self.support_hi < self.support_lo:
            raise DomainError("invalid RoundSet support")

    @property
    def step(self) -> int:
        return self.grain * CENTAVOS_PER_REAL

    def values(self) -> np.ndarray:
        first = -(-self.support_lo // self.step) * self.step
        return np.arange(first, self.support_hi + 1, self.step, dtype=np.int64)

    def reais(self) -> np.ndarray:
        return self.values() // CENTAVOS_PER_REAL

    def __contains__(self, w) -> bool:
        w = int(w)
        return self.support_lo <= w <= self.support_hi and w % self.step == 0

    def __len__(self) -> int:
        return len(self.values())


def mw_lookup(min_wage, years) -> np.ndarray:
    """Per-record minimum wage (centavos) from a scalar or a ``{year: centavos}`` mapping."""
    years = np.asarray(years)
    if not isinstance(min_wage, Mapping):
        return np.full(years.shape, int(min_wage), dtype=np.int64)
    uniq, inv = np.unique(years, return_inverse=True)
    missing = [int(y) for y in uniq if int(y) not in min_wage]
    if missing:
        raise DomainError(f"minimum wage schedule has no entry for years {missing}")
    return np.array([int(min_wage[int(y)]) for y in uniq], dtype=np.int64)[inv].reshape(years.shape)
