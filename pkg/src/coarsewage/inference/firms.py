"""Bunching-firm classification from the round share of each firm's hires."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .. import money


@dataclass(frozen=True)
class FirmProfile:
    firm_id: int
    n_hires: int
    share_round: float
    share_div100: float
    all_round: bool
    more_than_half: bool
    more_than_two_thirds: bool
    all_div100: bool
    all_yearly_round: bool


def eligible_hires(records: pd.DataFrame, min_wage=None) -> pd.DataFrame:
    """Drop hires at or below their year's minimum wage and non-monthly contracts."""
    keep = np.ones(len(records), dtype=bool)
    if min_wage is not None:
        mw = money.mw_lookup(min_wage, records["year"].to_numpy())
        keep &= records["wage_centavos"].to_numpy(np.int64) > mw
    if "monthly_contract" in records:
        keep &= records["monthly_contract"].to_numpy(bool)
    return records[keep]


def firm_profiles(records: pd.DataFrame, grain: int = 10, min_wage=None) -> pd.DataFrame:
    """One row per firm with round shares and every bunching-firm flag.

    Thresholds are strict: ``more_than_half`` needs a share above 1/2.
    The yearly variant asks whether 12 times each monthly wage is round.
    """
    hires = eligible_hires(records, min_wage)
    w = hires["wage_centavos"].to_numpy(np.int64)
    frame = pd.DataFrame({
        "firm_id": hires["firm_id"].to_numpy(),
        "round": money.is_divisible_array(w, grain),
        "div100": money.is_divisible_array(w, 100),
        "yearly": money.is_divisible_array(12 * w, grain),
    })
    g = frame.groupby("firm_id", sort=True)
    out = pd.DataFrame({
        "n_hires": g.size(),
        "share_round": g["round"].mean(),
        "share_div100": g["div100"].mean(),
        "share_yearly": g["yearly"].mean(),
    })
    # compare counts, not float shares, so 2/3 thresholds are exact
    n_round = g["round"].sum()
    out["all_round"] = n_round == out["n_hires"]
    out["more_than_half"] = 2 * n_round > out["n_hires"]
    out["more_than_two_thirds"] = 3 * n_round > 2 * out["n_hires"]
    out["all_div100"] = g["div100"].sum() == out["n_hires"]
    out["all_yearly_round"] = g["yearly"].sum() == out["n_hires"]
    return out.reset_index()


def classify_firms(records: pd.DataFrame, grain: int = 10, min_wage=None) -> list[FirmProfile]:
    prof = firm_profiles(records, grain, min_wage)
    return [
        FirmProfile(int(r.firm_id), int(r.n_hires), float(r.share_round), float(r.share_div100),
                    bool(r.all_round), bool(r.more_than_half), bool(r.more_than_two_thirds),
                    bool(r.all_div100), bool(r.all_yearly_round))
        for r in prof.itertuples(index=False)
    ]


def attach_flag(records: pd.DataFrame, profiles: pd.DataFrame, flag: str = "all_round",
                name: str = "bunching_firm") -> pd.DataFrame:
    """Merge a firm-level flag onto hire records as a 0/1 column."""
    m = profiles.set_index("firm_id")[flag].astype(int)
    out = records.copy()
    out[name] = out["firm_id"].map(m).fillna(0).astype(int)
    return out
