"""Inequality and stickiness descriptives."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import pandas as pd

from ..errors import DomainError, NoDataError


def gini(values) -> float:
    """Mean absolute difference over twice the mean, via the sorted-prefix identity.

    With ``x`` sorted ascending, ``sum_{i,j} |x_i - x_j| = 2 sum_i (2i - n - 1) x_i``
    (1-based ``i``).
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise NoDataError("gini of an empty sample")
    if np.any(x < 0):
        raise DomainError("gini expects nonnegative values")
    total = x.sum()
    if total == 0:
        raise DomainError("gini undefined when every value is zero")
    i = np.arange(1, n + 1)
    return float(np.sum((2 * i - n - 1) * x) / (n * total))


def nearest_rank(values, q: float) -> float:
    """Smallest order statistic whose rank fraction reaches ``q`` percent."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise NoDataError("quantile of an empty sample")
    if not 0 < q <= 100:
        raise DomainError(f"percentile must lie in (0, 100], got {q}")
    k = int(np.ceil(q / 100 * x.size))
    return float(x[max(k, 1) - 1])


def percentile_ratio(values, hi: float = 90, lo: float = 10) -> float:
    if np.asarray(values).size < 2:
        raise NoDataError("percentile ratio needs at least two values")
    if not 0 < lo < hi < 100:
        raise DomainError("need 0 < lo < hi < 100")
    den = nearest_rank(values, lo)
    if den == 0:
        raise DomainError(f"the {lo}th percentile is zero")
    return nearest_rank(values, hi) / den


class Stickiness(NamedTuple):
    indicator: pd.Series
    share: float
    n_skipped: int
    by_group: dict


def stickiness_indicator(records: pd.DataFrame, by: str | None = None) -> Stickiness:
    """Whether next year's wage equals the contracted wage, to the centavo.

    Records without a next-year wage are skipped and counted.
    """
    nxt = records["wage_next_centavos"]
    present = nxt.notna().to_numpy()
    n_skipped = int((~present).sum())
    sub = records[present]
    if len(sub) == 0:
        raise NoDataError("no record has a next-year wage")
    ind = pd.Series(sub["wage_next_centavos"].to_numpy(np.int64) == sub["wage_centavos"].to_numpy(np.int64),
                    index=sub.index, name="sticky")
    groups = {}
    if by is not None:
        groups = {k: float(v) for k, v in ind.groupby(sub[by]).mean().items()}
    return Stickiness(ind, float(ind.mean()), n_skipped, groups)
