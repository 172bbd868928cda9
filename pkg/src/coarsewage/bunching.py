"""Bunching at round wages: histograms, counterfactual densities and theta-hat.

Wages are grouped into R$1 bins (a bin holds every wage from ``b`` up to
``b + 0.99``).  The counterfactual count at each bin comes from a
kernel-weighted local polynomial fitted to the bins that are neither
round nor minimum-wage bins.  Predicted counts are rescaled by
``lam = sum(C) / sum(C_hat)`` so they add up to the sample size, and the
share of coarse-priced hires is estimated as the summed excess at round
bins divided by ``N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence
import warnings

import numpy as np
import pandas as pd
from numpy.polynomial import legendre
from scipy import signal

from . import money
from .errors import DomainError, InfeasibleFitError, NoDataError

KERNELS = ("uniform", "triangular", "epanechnikov")
DEFAULT_SUPPORT_HI = 10_100
# Fig-E3-sized cap on manipulation windows, in bins
MAX_WINDOW_HALFWIDTH = 166


@dataclass(frozen=True)
class FitSpec:
    """Local polynomial settings.  ``bandwidth`` is the window half-width in bins."""

    degree: int = 7
    bandwidth: int = 500
    kernel: str = "uniform"
    grain: int = 10

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise DomainError(f"degree must be a nonnegative integer, got {self.degree!r}")
        if int(self.bandwidth) != self.bandwidth or self.bandwidth < 1:
            raise DomainError(f"bandwidth must be a positive integer, got {self.bandwidth!r}")
        if self.kernel not in KERNELS:
            raise DomainError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        money.check_grain(self.grain)


@dataclass(frozen=True)
class WageHistogram:
    """Counts in R$1 bins ``lo, lo + 1, ..., hi``.

    ``excluded_mw`` lists minimum-wage bins (reais) kept out of the fit and
    out of the round set.  ``n_dropped_mw`` counts hires removed because
    they earn exactly their year's minimum wage; ``n_winsorized`` counts
    wages folded into the top bin.
    """

    lo: int
    counts: np.ndarray
    excluded_mw: tuple[int, ...] = ()
    n_dropped_mw: int = 0
    n_winsorized: int = 0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise NoDataError("histogram has no bins")
        if np.any(c < 0):
            raise DomainError("histogram counts must be nonnegative")
        object.__setattr__(self, "counts", c)

    @property
    def bins(self) -> np.ndarray:
        return self.lo + np.arange(self.counts.size)

    @property
    def hi(self) -> int:
        return self.lo + self.counts.size - 1

    @property
    def N(self) -> float:
        return float(self.counts.sum())

    def count(self, b: int) -> float:
        i = int(b) - self.lo
        return float(self.counts[i]) if 0 <= i < self.counts.size else 0.0

    def as_dict(self) -> dict[int, float]:
        nz = np.flatnonzero(self.counts)
        return {int(self.lo + i): float(self.counts[i]) for i in nz}


def _as_cents(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


def build_histogram(wages, years=None, min_wage=None, support_lo: int | None = None,
                    support_hi: int = DEFAULT_SUPPORT_HI, weights=None) -> WageHistogram:
    """Bin wages (centavos) into R$1 bins.

    Parameters
    ----------
    wages : array of int
        Contracted wages in centavos.
    years, min_wage :
        Optional.  ``min_wage`` is a scalar or ``{year: centavos}``; hires at
        exactly their year's minimum are dropped and every minimum-wage bin
        in the schedule (for the years present) is marked excluded.
    support_lo, support_hi : int
        Bin range in reais.  Wages above ``support_hi`` go into the top bin;
        the default lower end is the lowest retained bin.
    weights : array, optional
        Per-record multiplicities, used by the cluster bootstrap.
    """
    w = _as_cents(wages)
    wt = np.ones(w.size) if weights is None else np.asarray(weights, dtype=float)
    if w.size == 0:
        raise NoDataError("no wages to bin")
    excluded: tuple[int, ...] = ()
    n_dropped = 0
    if min_wage is not None:
        yrs = np.zeros(w.size, dtype=np.int64) if years is None else np.asarray(years)
        if isinstance(min_wage, Mapping):
            mw = money.mw_lookup(min_wage, yrs)
            present = np.unique(yrs)
            sched = [int(min_wage[int(y)]) for y in present]
        else:
            mw = np.full(w.size, int(min_wage), dtype=np.int64)
            sched = [int(min_wage)]
        at_mw = w == mw
        n_dropped = int(wt[at_mw].sum())
        w, wt = w[~at_mw], wt[~at_mw]
        excluded = tuple(sorted({c // money.CENTAVOS_PER_REAL for c in sched}))
    keep = wt > 0
    w, wt = w[keep], wt[keep]
    if w.size == 0:
        raise NoDataError("no wages left after dropping minimum-wage hires")
    b = w // money.CENTAVOS_PER_REAL
    top = int(support_hi)
    over = b > top
    n_wins = int(wt[over].sum())
    b = np.minimum(b, top)
    lo = int(b.min()) if support_lo is None else int(support_lo)
    if lo > top:
        raise DomainError("support_lo exceeds support_hi")
    inside = b >= lo
    counts = np.bincount(b[inside] - lo, weights=wt[inside], minlength=top - lo + 1)
    if counts.sum() == 0:
        raise NoDataError("no wages inside the histogram support")
    return WageHistogram(lo=lo, counts=counts, excluded_mw=excluded,
                         n_dropped_mw=n_dropped, n_winsorized=n_wins)


def histogram_from_records(records: pd.DataFrame, min_wage=None, support_hi: int = DEFAULT_SUPPORT_HI,
                           weights=None) -> WageHistogram:
    return build_histogram(records["wage_centavos"].to_numpy(), records["year"].to_numpy(),
                           min_wage, support_hi=support_hi, weights=weights)


def excluded_mask(hist: WageHistogram, grain: int) -> np.ndarray:
    """Bins kept out of the fit: round bins, minimum-wage bins and a winsorized top bin."""
    bins = hist.bins
    mask = bins % money.check_grain(grain) == 0
    if hist.excluded_mw:
        mask |= np.isin(bins, hist.excluded_mw)
    if hist.n_winsorized > 0:
        mask[-1] = True
    return mask


def round_mask(hist: WageHistogram, grain: int) -> np.ndarray:
    """Round bins counted in the excess mass (minimum-wage and winsorized top bins excluded)."""
    bins = hist.bins
    mask = bins % money.check_grain(grain) == 0
    if hist.excluded_mw:
        mask &= ~np.isin(bins, hist.excluded_mw)
    if hist.n_winsorized > 0:
        mask[-1] = False
    return mask


@dataclass(frozen=True)
class CounterfactualFit:
    predicted: np.ndarray
    reweight_factor: float
    negative_prediction_flag: bool
    spec: FitSpec
    excluded: np.ndarray
    lo: int

    @property
    def reweighted(self) -> np.ndarray:
        return self.reweight_factor * self.predicted

    def at(self, b: int) -> float:
        return float(self.predicted[int(b) - self.lo])


def _kernel(u: np.ndarray, kind: str) -> np.ndarray:
    if kind == "uniform":
        return np.ones_like(u)
    if kind == "triangular":
        return 1.0 - np.abs(u)
    return 0.75 * (1.0 - u**2)


def _convolve(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # 'same'-aligned direct convolution; taps are symmetric about the centre
    return signal.convolve(x, taps[::-1], mode="same", method="direct")


def local_poly_predict(counts: np.ndarray, usable: np.ndarray, spec: FitSpec) -> np.ndarray:
    """Kernel-weighted local polynomial prediction at every bin.

    The fit at bin ``b`` uses usable bins ``j`` with ``|j - b| <= bandwidth``
    and evaluates the polynomial at ``b``.  Normal equations are assembled
    for all bins at once by convolving the usable-bin indicator (and the
    masked counts) with ``K(u) P_i(u) P_j(u)`` where ``P`` are Legendre
    polynomials in ``u = (j - b) / bandwidth``.
    """
    h, d = int(spec.bandwidth), int(spec.degree)
    n = counts.size
    u = np.arange(-h, h + 1) / h
    k = _kernel(u, spec.kernel)
    basis = np.stack([legendre.legval(u, np.eye(d + 1)[i]) for i in range(d + 1)])
    m = usable.astype(float)
    y = np.where(usable, counts, 0.0)

    pad = h
    mp = np.pad(m, pad)
    yp = np.pad(y, pad)
    gram = np.empty((n, d + 1, d + 1))
    rhs = np.empty((n, d + 1))
    for i in range(d + 1):
        rhs[:, i] = _convolve(yp, k * basis[i])[pad:pad + n]
        for j in range(i, d + 1):
            g = _convolve(mp, k * basis[i] * basis[j])[pad:pad + n]
            gram[:, i, j] = g
            gram[:, j, i] = g

    support = _convolve(mp, (k > 0).astype(float))[pad:pad + n]
    support = np.rint(support).astype(int)
    thin = np.flatnonzero(support < d + 1)
    if thin.size:
        raise InfeasibleFitError(
            f"only {support[thin[0]]} usable bins within the window of bin index {thin[0]}; "
            f"need at least {d + 1}", bin=int(thin[0]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cond = np.linalg.cond(gram)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > 1e13))
    if bad.size:
        raise InfeasibleFitError(
            f"rank-deficient local design at bin index {bad[0]}; lower the degree or widen the bandwidth",
            bin=int(bad[0]))
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    at_zero = np.array([legendre.legval(0.0, np.eye(d + 1)[i]) for i in range(d + 1)])
    return coef @ at_zero


def fit_counterfactual(hist: WageHistogram, spec: FitSpec = FitSpec()) -> CounterfactualFit:
    """Counterfactual counts at every bin from non-round, non-minimum-wage bins."""
    excl = excluded_mask(hist, spec.grain)
    pred = local_poly_predict(hist.counts, ~excl, spec)
    negative = bool(np.any(pred < 0))
    if negative:
        warnings.warn("counterfactual prediction is negative at some bins", RuntimeWarning, stacklevel=2)
    total = pred.sum()
    if not total > 0:
        raise InfeasibleFitError("counterfactual counts sum to a nonpositive total")
    lam = hist.N / total
    return CounterfactualFit(predicted=pred, reweight_factor=float(lam), negative_prediction_flag=negative,
                             spec=spec, excluded=excl, lo=hist.lo)


def excess_mass(hist: WageHistogram, fit: CounterfactualFit, grain: int | None = None) -> dict[int, float]:
    """``C_r - lam * C_hat_r`` at every round bin of the given grain (default: the fit's grain)."""
    g = fit.spec.grain if grain is None else grain
    mask = round_mask(hist, g)
    diff = hist.counts - fit.reweighted
    return {int(b): float(v) for b, v in zip(hist.bins[mask], diff[mask])}


@dataclass(frozen=True)
class BunchingEstimate:
    per_round_excess: dict
    B_hat: float
    theta_hat: float
    N: float
    reweight_factor: float = float("nan")
    bootstrap_se: float | None = None
    manipulation_windows: dict = field(default_factory=dict)

    @property
    def theta_clamped(self) -> float:
        return min(max(self.theta_hat, 0.0), 1.0)

    def by_grain(self, grains: Sequence[int] = money.DEFAULT_GRAINS, exclusive: bool = False) -> dict[int, float]:
        """Theta-hat restricted to rounds divisible by each grain (optionally not by ten times it)."""
        r = np.fromiter(self.per_round_excess.keys(), dtype=np.int64, count=len(self.per_round_excess))
        b = np.fromiter(self.per_round_excess.values(), dtype=float, count=len(self.per_round_excess))
        out = {}
        for g in grains:
            sel = r % g == 0
            if exclusive:
                sel &= r % (10 * g) != 0
            out[g] = float(b[sel].sum() / self.N)
        return out


def theta_hat(excess: Mapping[int, float], N: float, reweight_factor: float = float("nan")) -> BunchingEstimate:
    if not N > 0:
        raise DomainError("N must be positive")
    B = float(sum(excess.values()))
    return BunchingEstimate(per_round_excess=dict(excess), B_hat=B, theta_hat=B / N, N=float(N),
                            reweight_factor=reweight_factor)


def estimate(hist: WageHistogram, spec: FitSpec = FitSpec()) -> tuple[BunchingEstimate, CounterfactualFit]:
    """Fit, excess masses and theta-hat in one call."""
    fit = fit_counterfactual(hist, spec)
    est = theta_hat(excess_mass(hist, fit), hist.N, fit.reweight_factor)
    return est, fit


@dataclass(frozen=True)
class MissingMassWindow:
    lo: int
    hi: int
    missing: float
    excess: float
    balanced: bool


def missing_mass_window(hist: WageHistogram, fit: CounterfactualFit, r: int, tolerance: float | None = None,
                        max_halfwidth: int | None = None) -> MissingMassWindow:
    """Narrowest symmetric window around ``r`` whose shortfall offsets the excess at ``r``.

    The shortfall is ``sum(max(lam * C_hat_b - C_b, 0))`` over non-round
    bins in the window.  The half-width is capped at half the spacing
    between adjacent rounds of the fit's grain and never exceeds 166
    bins; if the cap is hit first, ``balanced`` is False.
    """
    r = int(r)
    i = r - hist.lo
    if not 0 < i < hist.counts.size - 1:
        raise DomainError(f"round wage {r} is not in the interior of the histogram support")
    excess = float(hist.counts[i] - fit.reweighted[i])
    tol = max(0.005 * abs(excess), 1.0) if tolerance is None else float(tolerance)
    if excess <= tol:
        return MissingMassWindow(r, r, 0.0, excess, abs(excess) <= tol)
    cap = max_halfwidth
    if cap is None:
        cap = min(fit.spec.grain // 2, MAX_WINDOW_HALFWIDTH)
    short = np.where(fit.excluded, 0.0, np.maximum(fit.reweighted - hist.counts, 0.0))
    missing = 0.0
    k = 0
    while k < cap:
        k += 1
        for j in (i - k, i + k):
            if 0 <= j < short.size:
                missing += short[j]
        if missing >= excess - tol:
            break
    return MissingMassWindow(r - k, r + k, float(missing), excess, abs(missing - excess) <= tol)


def manipulation_windows(hist: WageHistogram, fit: CounterfactualFit, grain: int | None = None,
                         **kw) -> dict[int, MissingMassWindow]:
    g = fit.spec.grain if grain is None else grain
    out = {}
    for b in hist.bins[round_mask(hist, g)]:
        if hist.lo < b < hist.hi:
            out[int(b)] = missing_mass_window(hist, fit, int(b), **kw)
    return out


# -- resampling and conditioning -------------------------------------------------

def _theta_from_records(records: pd.DataFrame, spec: FitSpec, min_wage, support_hi, weights=None) -> float:
    hist = histogram_from_records(records, min_wage, support_hi, weights)
    est, _ = estimate(hist, spec)
    return est.theta_hat


@dataclass(frozen=True)
class BootstrapResult:
    se: float
    replicates: np.ndarray


def bootstrap_se(records: pd.DataFrame, spec: FitSpec = FitSpec(), B: int = 200, seed: int = 0,
                 cluster: str = "firm_id", min_wage=None,
                 support_hi: int = DEFAULT_SUPPORT_HI) -> BootstrapResult:
    """Firm-cluster bootstrap of theta-hat.

    Each replicate draws clusters with replacement and re-runs the whole
    pipeline with records weighted by their cluster's multiplicity.
    Replicate ``b`` uses the stream ``SeedSequence(seed, spawn_key=(b,))``.
    """
    if B < 2:
        raise DomainError("bootstrap needs at least two replications")
    codes, uniq = pd.factorize(records[cluster], sort=True)
    G = len(uniq)
    reps = np.empty(B)
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(b,)))
        draw = np.bincount(rng.integers(0, G, G), minlength=G)
        reps[b] = _theta_from_records(records, spec, min_wage, support_hi, weights=draw[codes])
    return BootstrapResult(se=float(np.std(reps, ddof=1)), replicates=reps)


@dataclass(frozen=True)
class ThetaCell:
    covariate: str
    cell: str
    theta_hat: float
    se: float | None
    N_cell: float


def _cell_labels(records: pd.DataFrame, by, n_quantiles: int) -> pd.Series:
    cols = (by,) if isinstance(by, str) else tuple(by)
    parts = []
    for c in cols:
        s = records[c]
        if pd.api.types.is_float_dtype(s):
            q = pd.qcut(s, n_quantiles, labels=False, duplicates="drop")
            parts.append(c + "_q" + q.astype(int).astype(str))
        else:
            parts.append(c + "=" + s.astype(str))
    label = parts[0]
    for p in parts[1:]:
        label = label + "|" + p
    return label


def conditional_theta(records: pd.DataFrame, by, spec: FitSpec = FitSpec(), min_wage=None,
                      n_quantiles: int = 5, policy: str = "drop", B: int = 0, seed: int = 0,
                      support_hi: int = DEFAULT_SUPPORT_HI) -> list[ThetaCell]:
    """Theta-hat within cells of one covariate or a tuple of covariates.

    Float covariates are cut into ``n_quantiles`` quantile groups.  Cells
    whose fit is infeasible are dropped (``policy="drop"``) or pooled with
    the preceding cell (``policy="merge"``).  With ``B > 0`` each cell also
    gets a firm-cluster bootstrap SE.
    """
    if policy not in ("drop", "merge"):
        raise DomainError(f"policy must be 'drop' or 'merge', got {policy!r}")
    name = by if isinstance(by, str) else "|".join(by)
    labels = _cell_labels(records, by, n_quantiles)
    order = sorted(labels.unique())
    groups = [[c] for c in order]
    cells: list[ThetaCell] = []
    k = 0
    while k < len(groups):
        sel = labels.isin(groups[k]).to_numpy()
        sub = records[sel]
        try:
            hist = histogram_from_records(sub, min_wage, support_hi)
            est, _ = estimate(hist, spec)
        except (InfeasibleFitError, NoDataError):
            if policy == "merge" and len(groups) > 1:
                j = k - 1 if k > 0 else k + 1
                groups[j] = sorted(groups[j] + groups[k]) if j < k else groups[k] + groups[j]
                del groups[k]
                if j < k:
                    cells.pop()
                    k = j
                continue
            k += 1
            continue
        se = bootstrap_se(sub, spec, B, seed, min_wage=min_wage, support_hi=support_hi).se if B >= 2 else None
        cells.append(ThetaCell(name, "+".join(groups[k]), est.theta_hat, se, est.N))
        k += 1
    if not cells:
        raise InfeasibleFitError(f"no feasible cell when conditioning on {name}")
    return cells


# -- tables ---------------------------------------------------------------------

def bins_table(hist: WageHistogram, fit: CounterfactualFit, grain: int | None = None) -> pd.DataFrame:
    g = fit.spec.grain if grain is None else grain
    rnd = round_mask(hist, g)
    return pd.DataFrame({
        "bin": hist.bins,
        "count": hist.counts,
        "counterfactual": fit.predicted,
        "reweighted": fit.reweighted,
        "is_round": rnd.astype(int),
        "excess": np.where(rnd, hist.counts - fit.reweighted, 0.0),
    })


def estimates_table(est: BunchingEstimate, grain: int, windows: Mapping[int, MissingMassWindow] | None = None) -> pd.DataFrame:
    rows = []
    for r, b in est.per_round_excess.items():
        w = (windows or {}).get(r)
        rows.append({"grain": grain, "r": r, "B_r": b,
                     "window_lo": w.lo if w else r, "window_hi": w.hi if w else r})
    return pd.DataFrame(rows, columns=["grain", "r", "B_r", "window_lo", "window_hi"])
