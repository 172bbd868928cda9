"""Wage transitions around minimum-wage increases.

Hires are split by their contracted wage ``w`` relative to the minimum
wage of their year (``mw0``) and of the next year (``mw1``):

* panel A: ``w == mw0``
* panel B: ``mw0 < w < mw1`` (overtaken by the new minimum)
* panel C: ``w >= mw1``

and by whether ``w`` is round (divisible by R$10).  Each row reports where
next year's wage lands.  The contrast of interest is the share moving to
a non-round wage other than the new minimum, for round-origin workers in
panel B versus panel C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .. import money
from ..errors import NoDataError

COLUMNS = ["origin_share", "at_mw", "round", "non_round", "round_excl_mw", "non_round_excl_mw"]
PANELS = ("A", "B", "C")
ORIGINS = ("round", "non_round")


@dataclass(frozen=True)
class TransitionTable:
    rows: pd.DataFrame  # index (panel, origin), COLUMNS plus n
    n_total: int
    n_below_mw: int

    def share(self, panel: str, origin: str, column: str) -> float:
        return float(self.rows.loc[(panel, origin), column])

    def _need(self, panel: str, origin: str) -> float:
        v = self.share(panel, origin, "non_round_excl_mw")
        if not np.isfinite(v):
            raise NoDataError(f"panel {panel} has no {origin.replace('_', '-')}-origin workers; DiD unavailable")
        return v

    @property
    def did(self) -> float:
        """Panel-B minus panel-C share moving to non-round wages, round-origin workers."""
        return self._need("B", "round") - self._need("C", "round")

    @property
    def did_relative(self) -> float:
        return self.did / self._need("B", "round")

    @property
    def ratio_to_benchmark(self) -> float:
        """Panel-B round-origin share over the panel-C non-round-origin share."""
        return self._need("B", "round") / self._need("C", "non_round")

    def as_frame(self) -> pd.DataFrame:
        return self.rows.reset_index()


def spillover_table(records: pd.DataFrame, min_wage) -> TransitionTable:
    """Destination shares by origin panel and roundness.

    ``min_wage`` is ``{year: centavos}`` covering every year and year + 1.
    Hires below their year's minimum and records without a next-year wage
    are left out.  Empty rows hold NaN shares.
    """
    rec = records[records["wage_next_centavos"].notna()]
    w = rec["wage_centavos"].to_numpy(np.int64)
    w1 = rec["wage_next_centavos"].to_numpy(np.int64)
    year = rec["year"].to_numpy()
    mw0 = money.mw_lookup(min_wage, year)
    mw1 = money.mw_lookup(min_wage, year + 1)
    below = w < mw0
    w, w1, mw0, mw1 = w[~below], w1[~below], mw0[~below], mw1[~below]
    n = w.size
    if n == 0:
        raise NoDataError("no hire at or above the minimum wage has a next-year wage")

    panel = np.select([w == mw0, w < mw1], ["A", "B"], default="C")
    origin_round = money.is_divisible_array(w, 10)
    dest_mw = w1 == mw1
    dest_round = money.is_divisible_array(w1, 10)

    rows = []
    for p in PANELS:
        for o in ORIGINS:
            sel = (panel == p) & (origin_round if o == "round" else ~origin_round)
            k = int(sel.sum())
            if k == 0:
                vals = [0.0] + [np.nan] * 5
            else:
                at = dest_mw[sel].mean()
                rnd = dest_round[sel].mean()
                vals = [k / n, at, rnd, 1.0 - rnd,
                        (dest_round[sel] & ~dest_mw[sel]).mean(),
                        (~dest_round[sel] & ~dest_mw[sel]).mean()]
            rows.append((p, o, k, *vals))
    frame = pd.DataFrame(rows, columns=["panel", "origin", "n", *COLUMNS]).set_index(["panel", "origin"])
    return TransitionTable(frame, n, int(below.sum()))
