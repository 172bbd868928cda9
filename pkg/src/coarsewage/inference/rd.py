"""Discontinuity tests at round wages: outcomes and bin counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..bunching import WageHistogram
from ..errors import DomainError, InsufficientSupportError
from .lpm import cluster_vcov

OUTCOME_NAMES = ("alpha", "nu", "beta", "gamma", "delta")
DENSITY_NAMES = ("alpha", "beta", "nu", "delta")


@dataclass(frozen=True)
class RdFit:
    """Outcome discontinuity at round wage ``r`` (centavos); bandwidth ``h`` in reais.

    ``beta`` compares earners of exactly ``r`` with those just below, and
    ``gamma`` compares those just above with those just below.
    """

    r: int
    h: float
    coef: dict
    se: dict
    n_obs: int
    n_below: int
    n_at: int
    n_above: int

    def ci(self, name: str = "beta", level: float = 0.95) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + level / 2)
        return self.coef[name] - z * self.se[name], self.coef[name] + z * self.se[name]


def rd_outcome(records: pd.DataFrame, r: int, h: float = 10, outcome: str = "resigned",
               cluster: str = "worker_id", min_side: int = 10) -> RdFit:
    """Fit ``y = a + nu x + beta 1{w = r} + gamma 1{w > r} + delta x 1{w > r}`` on ``|w - r| <= h``.

    ``x = (w - r)`` in reais, so ``a`` is the limit from below at ``r``.
    """
    if h <= 0:
        raise DomainError("bandwidth must be positive")
    w = records["wage_centavos"].to_numpy(np.int64)
    x = (w - int(r)) / 100.0
    sel = np.abs(x) <= h
    x = x[sel]
    y = records[outcome].to_numpy(float)[sel]
    at = x == 0
    above = x > 0
    n_below, n_at, n_above = int((x < 0).sum()), int(at.sum()), int(above.sum())
    if n_below < min_side:
        raise InsufficientSupportError("below", f"{n_below} observations below {r}, need {min_side}")
    if n_above < min_side:
        raise InsufficientSupportError("above", f"{n_above} observations above {r}, need {min_side}")
    if n_at < 1:
        raise InsufficientSupportError("at", f"no observation exactly at {r}")
    X = np.column_stack([np.ones_like(x), x, at, above, x * above]).astype(float)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    vcov = cluster_vcov(X, resid, records[cluster].to_numpy()[sel])
    se = np.sqrt(np.diag(vcov))
    return RdFit(int(r), float(h), dict(zip(OUTCOME_NAMES, coef.tolist())), dict(zip(OUTCOME_NAMES, se.tolist())),
                 int(sel.sum()), n_below, n_at, n_above)


@dataclass(frozen=True)
class Aggregate:
    estimate: float
    se: float
    n_fits: int


def rd_aggregate(fits: Sequence, name: str = "beta") -> Aggregate:
    """Observation-weighted average of one coefficient across fits.

    The SE treats fits as independent, which holds when the windows do
    not overlap (e.g. multiples of R$100 with ``h = 10``).
    """
    if not fits:
        raise DomainError("nothing to aggregate")
    wts = np.array([f.n_obs for f in fits], dtype=float)
    wts /= wts.sum()
    est = np.array([f.coef[name] for f in fits])
    se = np.array([f.se[name] for f in fits])
    return Aggregate(float(wts @ est), float(np.sqrt(np.sum(wts**2 * se**2))), len(fits))


def rd_many(records: pd.DataFrame, rounds: Sequence[int], h: float = 10, outcome: str = "resigned",
            **kw) -> list[RdFit]:
    """Fit at each round wage with enough support; others are skipped."""
    out = []
    for r in rounds:
        try:
            out.append(rd_outcome(records, r, h, outcome, **kw))
        except InsufficientSupportError:
            continue
    return out


@dataclass(frozen=True)
class DensityRdFit:
    """Jump in bin shares above ``r`` (reais).  SEs are heteroskedasticity-robust (HC1)."""

    r: int
    h: int
    coef: dict
    se: dict
    n_bins: int
    window_total: float

    @property
    def t_beta(self) -> float:
        return self.coef["beta"] / self.se["beta"] if self.se["beta"] > 0 else 0.0

    def p_value(self) -> float:
        return float(2 * stats.t.sf(abs(self.t_beta), self.n_bins - 4))

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        q = stats.t.ppf(0.5 + level / 2, self.n_bins - 4)
        return self.coef["beta"] - q * self.se["beta"], self.coef["beta"] + q * self.se["beta"]


def rd_density(hist: WageHistogram, r: int, h: int = 10) -> DensityRdFit:
    """Regress bin shares on a side dummy and side-specific linear trends.

    Uses bins ``b`` with ``0 < |b - r| <= h``; each share is the bin's count
    over the total count of those bins.  ``r`` is in reais.  Each side
    needs at least three bins (two trend parameters plus one).
    """
    r, h = int(r), int(h)
    need = 3
    b = np.arange(r - h, r + h + 1)
    b = b[b != r]
    counts = np.array([hist.count(v) for v in b])
    inside = (b >= hist.lo) & (b <= hist.hi)
    if (inside & (b < r)).sum() < need:
        raise InsufficientSupportError("below", f"fewer than {need} bins below {r}")
    if (inside & (b > r)).sum() < need:
        raise InsufficientSupportError("above", f"fewer than {need} bins above {r}")
    b, counts = b[inside], counts[inside]
    total = counts.sum()
    if total <= 0:
        raise InsufficientSupportError("window", f"no contracts within {h} of {r}")
    share = counts / total
    x = (b - r).astype(float)
    above = (x > 0).astype(float)
    X = np.column_stack([np.ones_like(x), above, x, x * above])
    coef, *_ = np.linalg.lstsq(X, share, rcond=None)
    resid = share - X @ coef
    n, k = X.shape
    bread = np.linalg.inv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    vcov = n / (n - k) * bread @ meat @ bread
    se = np.sqrt(np.diag(vcov))
    return DensityRdFit(r, h, dict(zip(DENSITY_NAMES, coef.tolist())), dict(zip(DENSITY_NAMES, se.tolist())),
                        int(n), float(total))
