"""Linear probability models with absorbed fixed effects and clustered SEs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import CollinearityError, ConvergenceError, DomainError, NoDataError


def cluster_vcov(X: np.ndarray, resid: np.ndarray, clusters, n_params: int | None = None) -> np.ndarray:
    """Sandwich covariance with cluster sums and multiplier ``G/(G-1) * (n-1)/(n-k)``.

    ``n_params`` (k) defaults to the number of columns of ``X``.
    """
    n, k = X.shape
    k = k if n_params is None else n_params
    codes, uniq = pd.factorize(np.asarray(clusters), sort=False)
    G = len(uniq)
    if G < 2:
        raise NoDataError("clustered standard errors need at least two clusters")
    if n <= k:
        raise NoDataError("fewer observations than parameters")
    bread = np.linalg.inv(X.T @ X)
    scores = np.zeros((G, X.shape[1]))
    np.add.at(scores, codes, X * resid[:, None])
    meat = scores.T @ scores
    c = G / (G - 1) * (n - 1) / (n - k)
    return c * bread @ meat @ bread


def demean(values: np.ndarray, groups: Sequence[np.ndarray], tol: float = 1e-8,
           max_sweeps: int = 10_000) -> tuple[np.ndarray, int]:
    """Alternating within-group demeaning of each column of ``values``.

    Sweeps cycle through the grouping variables (integer codes) until every
    group mean of every column is at most ``tol`` in absolute value.
    Returns the demeaned copy and the number of sweeps used.
    """
    v = np.array(values, dtype=float, copy=True)
    if v.ndim == 1:
        v = v[:, None]
    if not groups:
        return v, 0
    sizes = [np.bincount(g).astype(float) for g in groups]

    def group_means(g, size):
        sums = np.stack([np.bincount(g, weights=v[:, j], minlength=size.size) for j in range(v.shape[1])], axis=1)
        with np.errstate(invalid="ignore"):
            return np.where(size[:, None] > 0, sums / np.maximum(size, 1)[:, None], 0.0)

    worst = np.inf
    for sweep in range(1, max_sweeps + 1):
        for g, size in zip(groups, sizes):
            v -= group_means(g, size)[g]
        worst = max(float(np.abs(group_means(g, size)).max()) for g, size in zip(groups, sizes))
        if worst <= tol:
            return v, sweep
    raise ConvergenceError(
        f"fixed effects did not converge after {max_sweeps} sweeps (max |group mean| = {worst:.3g})",
        sweeps=max_sweeps, max_abs_mean=worst)


@dataclass(frozen=True)
class LpmFit:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    n_obs: int
    n_clusters: int
    fe_groups: tuple[str, ...]
    standardized: bool
    sweeps: int
    scales: np.ndarray

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def stderr(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"name": list(self.names), "estimate": self.coef, "se": self.se})


def _is_dummy(x: np.ndarray) -> bool:
    return bool(np.all((x == 0) | (x == 1)))


def lpm_fit(records: pd.DataFrame, outcome: str, covariates: Sequence[str], fe_groups: Sequence[str] = (),
            cluster: str = "firm_id", standardize: bool = True, standardize_outcome: bool = False,
            tol: float = 1e-8, max_sweeps: int = 10_000) -> LpmFit:
    """Least squares of ``outcome`` on ``covariates`` after absorbing fixed effects.

    With ``standardize`` every non-dummy covariate is divided by its sample
    standard deviation before fitting, so slopes are per standard
    deviation.  ``standardize_outcome`` also scales the outcome; with a
    single covariate and no fixed effects the slope is then the sample
    correlation.  Without fixed effects the model has an intercept
    (absorbed as one all-encompassing group).
    """
    covariates = list(covariates)
    if not covariates:
        raise DomainError("lpm_fit needs at least one covariate")
    cols = [outcome, *covariates, *fe_groups, cluster]
    missing = [c for c in cols if c not in records]
    if missing:
        raise DomainError(f"columns not found: {missing}")
    data = records[list(dict.fromkeys(cols))].dropna()
    n = len(data)
    if n == 0:
        raise NoDataError("no complete observations")
    y = data[outcome].to_numpy(dtype=float)
    X = data[covariates].to_numpy(dtype=float)
    scales = np.ones(X.shape[1])
    if standardize:
        for j in range(X.shape[1]):
            if not _is_dummy(X[:, j]):
                sd = X[:, j].std(ddof=1)
                if not sd > 0:
                    raise CollinearityError(covariates[j])
                scales[j] = sd
        X = X / scales
    if standardize_outcome:
        sd_y = y.std(ddof=1)
        if sd_y > 0:
            y = y / sd_y

    groups = [pd.factorize(data[g], sort=True)[0] for g in fe_groups] or [np.zeros(n, dtype=np.int64)]
    Z, sweeps = demean(np.column_stack([y, X]), groups, tol, max_sweeps)
    yd, Xd = Z[:, 0], Z[:, 1:]

    # Gram-Schmidt style check: a covariate with no variation left is collinear
    raw_norm = np.linalg.norm(X - X.mean(axis=0), axis=0)
    for j in range(Xd.shape[1]):
        if raw_norm[j] == 0 or np.linalg.norm(Xd[:, j]) <= 1e-10 * max(raw_norm[j], 1.0):
            raise CollinearityError(covariates[j])
        if j:
            q, *_ = np.linalg.lstsq(Xd[:, :j], Xd[:, j], rcond=None)
            if np.linalg.norm(Xd[:, j] - Xd[:, :j] @ q) <= 1e-10 * np.linalg.norm(Xd[:, j]):
                raise CollinearityError(covariates[j])

    beta, *_ = np.linalg.lstsq(Xd, yd, rcond=None)
    resid = yd - Xd @ beta
    vcov = cluster_vcov(Xd, resid, data[cluster].to_numpy(), n_params=Xd.shape[1] + 1)
    return LpmFit(
        names=tuple(covariates), coef=beta, se=np.sqrt(np.diag(vcov)), n_obs=n,
        n_clusters=int(data[cluster].nunique()), fe_groups=tuple(fe_groups),
        standardized=standardize, sweeps=sweeps, scales=scales,
    )


def firm_outcome_regression(data: pd.DataFrame, outcome: str, bunching_flag: str = "bunching_firm",
                            controls: Sequence[str] = (), fe: Sequence[str] = (), cluster: str = "firm_id",
                            **kw) -> LpmFit:
    """Regress a worker- or firm-level outcome on the bunching-firm dummy plus controls."""
    return lpm_fit(data, outcome, [bunching_flag, *controls], fe, cluster, standardize=kw.pop("standardize", False), **kw)
