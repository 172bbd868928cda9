"""Seeded generator of hire records from the coarse wage-setting model.

Each hire gets a fully-optimal wage ``w* = p eta / (1 + eta)`` from a
lognormal productivity draw.  The hiring firm starts from ``w*`` rounded
to the configured grain and computes the exact wage only when
``eta**2 * wedge**2 >= tau * m``, where ``tau`` is the firm's cost draw and
``m`` is a multiplier that falls with firm size and hiring experience and
rises with the local price level.  Posted wages are floored at the
year's minimum wage.

Generation is split into fixed blocks of firms.  Block ``k`` draws from
``SeedSequence(seed).spawn(...)[k + 1]`` so output depends on the seed
alone, never on how many blocks run or in which order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping, NamedTuple

import numpy as np
import pandas as pd

from . import model, money
from .errors import ConfigError, DomainError
from .model import CostDistribution

# Federal monthly minimum wage, end of year, in reais.
BRAZIL_MINIMUM_WAGE = {
    2003: 240, 2004: 260, 2005: 300, 2006: 350, 2007: 380, 2008: 415,
    2009: 465, 2010: 510, 2011: 545, 2012: 622, 2013: 678, 2014: 724,
    2015: 788, 2016: 880, 2017: 937, 2018: 954,
}

RECORD_COLUMNS = [
    "worker_id", "firm_id", "year", "month", "region",
    "wage_centavos", "wage_next_centavos", "separated", "resigned",
    "education", "occupation", "firm_size", "hiring_experience",
    "log_cpi", "has_hr", "firm_age",
]
LATENT_COLUMNS = ["was_coarse", "w_star", "chosen_grain", "mw_floored"]

_BLOCK_FIRMS = 500
# Centering constants for the cost links; fixed so blocks stay independent.
_SIZE_CENTER, _SIZE_SCALE = 2.5, 1.2
_EXP_CENTER, _EXP_SCALE = 1.5, 1.0


def _schedule(mw: Mapping[int, int]) -> dict[int, int]:
    return {int(y): money.reais(v) for y, v in mw.items()}


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a simulated cohort.  Money amounts are in reais."""

    n_firms: int = 20_000
    hires_per_firm: float = 10.0
    productivity_median: float = 1000.0
    productivity_sigma: float = 0.4
    firm_sigma_share: float = 0.5
    elasticity: float = 2.0
    costs: CostDistribution = field(default_factory=lambda: CostDistribution.uniform(0.0, 0.005))
    grain: int = 100
    ladder: tuple[CostDistribution, CostDistribution, CostDistribution] | None = None
    size_cost_slope: float = 0.3
    experience_cost_slope: float = 0.3
    cpi_cost_slope: float = 1.0
    n_regions: int = 11
    years: tuple[int, ...] = (2003, 2004, 2005, 2006, 2007)
    inflation_range: tuple[float, float] = (0.03, 0.09)
    min_wage: Mapping[int, float] = field(default_factory=lambda: dict(BRAZIL_MINIMUM_WAGE))
    resign_rate: float = 0.05
    separation_rate: float = 0.20
    round_resign_effect: float = 0.0
    round_separation_effect: float = 0.0
    # next-year wage rule
    coarse_stickiness: float = 0.5
    optimizer_stickiness: float = 0.1
    coarse_exact_raise: float = 0.5
    raise_range: tuple[float, float] = (0.02, 0.12)
    raise_steps: int = 5
    reoptimize_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(name, msg)

        need(self.n_firms >= 1, "n_firms", "must be >= 1")
        need(self.hires_per_firm >= 1, "hires_per_firm", "mean hires per firm must be >= 1")
        need(self.productivity_median > 0, "productivity_median", "must be positive")
        need(self.productivity_sigma >= 0, "productivity_sigma", "must be nonnegative")
        need(0 <= self.firm_sigma_share <= 1, "firm_sigma_share", "must lie in [0, 1]")
        need(self.elasticity > 0, "elasticity", "must be positive")
        need(isinstance(self.costs, CostDistribution), "costs", "must be a CostDistribution")
        try:
            money.check_grain(self.grain)
        except DomainError as exc:
            raise ConfigError("grain", str(exc)) from None
        if self.ladder is not None:
            need(len(self.ladder) == 3 and all(isinstance(c, CostDistribution) for c in self.ladder),
                 "ladder", "needs three CostDistribution step costs")
        need(self.n_regions >= 1, "n_regions", "must be >= 1")
        need(len(self.years) >= 1, "years", "needs at least one hiring year")
        lo, hi = self.inflation_range
        need(lo <= hi, "inflation_range", "lower bound exceeds upper bound")
        missing = [y for y in self.years if y not in self.min_wage]
        need(not missing, "min_wage", f"no minimum wage for years {missing}")
        for name in ("resign_rate", "separation_rate", "coarse_stickiness", "optimizer_stickiness",
                     "coarse_exact_raise", "reoptimize_prob"):
            need(0 <= getattr(self, name) <= 1, name, "must be a probability")
        need(0 <= self.resign_rate + self.round_resign_effect <= 1, "round_resign_effect",
             "pushes the resignation probability outside [0, 1]")
        need(0 <= self.separation_rate + self.round_separation_effect <= 1, "round_separation_effect",
             "pushes the separation probability outside [0, 1]")
        g_lo, g_hi = self.raise_range
        need(0 < g_lo <= g_hi, "raise_range", "raises must be strictly positive")
        need(self.raise_steps >= 1, "raise_steps", "must be >= 1")
        need(isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64, "seed",
             "must be a 64-bit nonnegative integer")

    def min_wage_centavos(self) -> dict[int, int]:
        return _schedule(self.min_wage)

    def as_flat(self) -> dict[str, str]:
        """Flat ``key -> str`` view used in run manifests."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, CostDistribution):
                v = f"{v.family}:{','.join(repr(x) for x in v.params)}"
            elif f.name == "ladder" and v is not None:
                v = ";".join(f"{c.family}:{','.join(repr(x) for x in c.params)}" for c in v)
            elif isinstance(v, Mapping):
                v = ",".join(f"{k}:{v[k]}" for k in sorted(v))
            elif isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            out[f.name] = str(v)
        return out


def baseline_config(**overrides) -> SimConfig:
    """Lognormal productivity with median R$1,000, eta = 2, tau ~ U[0, 0.005]."""
    return replace(SimConfig(), **overrides)


def frictionless_config(**overrides) -> SimConfig:
    return replace(SimConfig(), costs=CostDistribution.point(0.0), **overrides)


class CohortSummary(NamedTuple):
    N: int
    theta_true: float
    theta_true_by_grain: dict
    divisibility: dict
    n_mw_floored: int


def summarize(records: pd.DataFrame, grains=money.DEFAULT_GRAINS) -> CohortSummary:
    coarse = records["was_coarse"].to_numpy(bool)
    chosen = records["chosen_grain"].to_numpy()
    by_grain = {g: float(np.mean(coarse & (chosen == g))) for g in model.LADDER}
    shares = money.divisibility_shares(records["wage_centavos"].to_numpy(), grains).shares
    return CohortSummary(
        N=len(records),
        theta_true=float(coarse.mean()),
        theta_true_by_grain=by_grain,
        divisibility=shares,
        n_mw_floored=int(records["mw_floored"].sum()),
    )


def _cpi_table(cfg: SimConfig, ss: np.random.SeedSequence) -> np.ndarray:
    """Log CPI per (region, year index, month); base 100 in January of the first year."""
    rng = np.random.default_rng(ss)
    n_years = len(cfg.years) + 1
    rates = rng.uniform(*cfg.inflation_range, size=cfg.n_regions)
    t = np.arange(n_years)[:, None] + np.arange(12)[None, :] / 12.0
    noise = rng.normal(0.0, 0.004, size=(cfg.n_regions, n_years, 12))
    return np.log(100.0) + rates[:, None, None] * t[None] + noise


def _simulate_block(cfg: SimConfig, ss: np.random.SeedSequence, firm_offset: int, n_firms: int,
                    log_cpi: np.ndarray, mw: dict[int, int]) -> pd.DataFrame:
    rng = np.random.default_rng(ss)
    years = np.asarray(cfg.years)

    # firm primitives
    region = rng.integers(0, cfg.n_regions, n_firms)
    sigma_f = cfg.productivity_sigma * np.sqrt(cfg.firm_sigma_share)
    sigma_w = cfg.productivity_sigma * np.sqrt(1.0 - cfg.firm_sigma_share)
    log_p_firm = np.log(cfg.productivity_median) + rng.normal(0.0, sigma_f, n_firms)
    if cfg.ladder is None:
        tau_firm = cfg.costs.sample(rng, n_firms)
    else:
        tau_firm = np.column_stack([c.sample(rng, n_firms) for c in cfg.ladder])
    log_size0 = rng.normal(_SIZE_CENTER, _SIZE_SCALE, n_firms)
    growth = rng.normal(0.05, 0.15, n_firms)
    first_year_idx = rng.integers(0, len(years), n_firms)
    age0 = rng.integers(0, 20, n_firms)
    n_hires = 1 + rng.poisson(cfg.hires_per_firm - 1.0, n_firms)

    # hires, grouped by firm
    fidx = np.repeat(np.arange(n_firms), n_hires)
    n = fidx.size
    span = len(years) - first_year_idx[fidx]
    year_idx = first_year_idx[fidx] + np.floor(rng.random(n) * span).astype(int)
    month = rng.integers(1, 13, n)
    order = np.lexsort((month, year_idx, fidx))
    fidx, year_idx, month = fidx[order], year_idx[order], month[order]
    starts = np.r_[0, np.cumsum(n_hires)[:-1]]
    prior_hires = np.arange(n) - starts[fidx]

    years_active = year_idx - first_year_idx[fidx]
    firm_size = log_size0[fidx] + growth[fidx] * years_active + rng.normal(0.0, 0.05, n)
    hiring_experience = np.log1p(prior_hires)
    reg = region[fidx]
    lcpi = log_cpi[reg, year_idx, month - 1]

    p = np.exp(log_p_firm[fidx] + rng.normal(0.0, sigma_w, n) + lcpi - np.log(100.0))
    eta = cfg.elasticity
    w_star = model.optimal_wage(p, eta)

    cost_mult = np.exp(
        -cfg.size_cost_slope * (firm_size - _SIZE_CENTER) / _SIZE_SCALE
        - cfg.experience_cost_slope * (hiring_experience - _EXP_CENTER) / _EXP_SCALE
        + cfg.cpi_cost_slope * (lcpi - np.log(100.0))
    )
    if cfg.ladder is None:
        anchor = model.coarse_anchor(w_star, cfg.grain)
        w_tilde = model.wedge(anchor / 100.0, w_star)
        was_coarse = tau_firm[fidx] * cost_mult > eta**2 * w_tilde**2
        posted = np.where(was_coarse, anchor, model.to_centavos(w_star))
        chosen_grain = np.where(was_coarse, cfg.grain, 0)
    else:
        supply = model.LaborSupply(elasticity=eta, reference_wage=cfg.productivity_median)
        step_costs = np.minimum(tau_firm[fidx] * cost_mult[:, None], 0.999)
        stop = model.ladder_stop_index(w_star, p, supply, step_costs)
        cand = model.ladder_wages(w_star)
        posted = cand[np.arange(n), stop]
        was_coarse = stop < 3
        chosen_grain = np.asarray(model.LADDER + (0,))[stop]

    year = years[year_idx]
    mw_now = money.mw_lookup(mw, year)
    floored = posted < mw_now
    posted = np.where(floored, mw_now, posted)

    is_round = money.is_divisible_array(posted, 10)
    resigned = rng.random(n) < cfg.resign_rate + cfg.round_resign_effect * is_round
    other_sep = rng.random(n) < cfg.separation_rate + cfg.round_separation_effect * is_round
    separated = resigned | other_sep

    size_level = np.exp(firm_size)
    return pd.DataFrame({
        "worker_id": np.zeros(n, dtype=np.int64),
        "firm_id": (firm_offset + fidx).astype(np.int64),
        "year": year.astype(np.int64),
        "month": month.astype(np.int64),
        "region": reg.astype(np.int64),
        "wage_centavos": posted.astype(np.int64),
        "wage_next_centavos": pd.array([pd.NA] * n, dtype="Int64"),
        "separated": separated,
        "resigned": resigned,
        "education": rng.integers(0, 4, n).astype(np.int64),
        "occupation": rng.integers(1, 21, n).astype(np.int64),
        "firm_size": firm_size,
        "hiring_experience": hiring_experience,
        "log_cpi": lcpi,
        "has_hr": size_level > 50.0,
        "firm_age": (age0[fidx] + years_active).astype(np.int64),
        "was_coarse": was_coarse,
        "w_star": w_star,
        "chosen_grain": chosen_grain.astype(np.int64),
        "mw_floored": floored,
    })


def simulate_hires(config: SimConfig) -> tuple[pd.DataFrame, CohortSummary]:
    """Generate a hire-level cohort and its label summary.

    Returns a frame with :data:`RECORD_COLUMNS` followed by
    :data:`LATENT_COLUMNS`; ``chosen_grain`` is 0 for exact optimisers.
    """
    config.validate()
    mw = config.min_wage_centavos()
    root = np.random.SeedSequence(int(config.seed))
    n_blocks = -(-config.n_firms // _BLOCK_FIRMS)
    children = root.spawn(n_blocks + 1)
    log_cpi = _cpi_table(config, children[0])
    parts = []
    for b in range(n_blocks):
        lo = b * _BLOCK_FIRMS
        size = min(_BLOCK_FIRMS, config.n_firms - lo)
        parts.append(_simulate_block(config, children[b + 1], lo, size, log_cpi, mw))
    records = pd.concat(parts, ignore_index=True)
    records["worker_id"] = np.arange(len(records), dtype=np.int64)
    return records, summarize(records)


def _next_year_stream(config: SimConfig) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(config.seed), spawn_key=(2**32 - 1,)))


def _nonround(c: np.ndarray) -> np.ndarray:
    return np.where(c % 1000 == 0, c + 1, c)


def simulate_next_year(records: pd.DataFrame, config: SimConfig) -> pd.DataFrame:
    """Fill ``wage_next_centavos`` using the transition rule.

    For a hire at wage ``w`` in year ``t``, let ``base = max(w, MW[t+1])``.
    A round wage overtaken by the new minimum (``w < MW[t+1]``) is
    re-optimized with probability ``reoptimize_prob``: it moves to an exact
    wage strictly above ``MW[t+1]``.  Otherwise coarse-priced workers keep
    ``base`` with probability ``coarse_stickiness``, else get an exact raise
    with probability ``coarse_exact_raise`` or a raise of 1..``raise_steps``
    grains above ``base``.  Exactly-priced workers keep ``base`` with
    probability ``optimizer_stickiness`` and get an exact raise otherwise.
    Exact raises multiply by ``1 + U(raise_range)`` and never land on a
    multiple of R$10.
    """
    mw = config.min_wage_centavos()
    next_years = sorted({int(y) + 1 for y in records["year"].unique()})
    missing = [y for y in next_years if y not in mw]
    if missing:
        raise ConfigError("min_wage", f"no minimum wage for years {missing}")
    rng = _next_year_stream(config)
    n = len(records)
    u_reopt, u_stick, u_exact = rng.random(n), rng.random(n), rng.random(n)
    g = rng.uniform(*config.raise_range, n)
    k = rng.integers(1, config.raise_steps + 1, n)

    w = records["wage_centavos"].to_numpy(np.int64)
    mw_next = money.mw_lookup(mw, records["year"].to_numpy() + 1)
    round_origin = money.is_divisible_array(w, 10)
    if "was_coarse" in records:
        coarse = records["was_coarse"].to_numpy(bool)
    else:
        coarse = round_origin
    w_star = (records["w_star"].to_numpy(float) * 100.0) if "w_star" in records else w.astype(float)

    affected = w < mw_next
    base = np.maximum(w, mw_next)
    step = config.grain * money.CENTAVOS_PER_REAL
    exact_raise = _nonround(np.floor(base * (1.0 + g) + 0.5).astype(np.int64))
    round_raise = (base // step + k) * step
    reopt = _nonround(np.floor(np.maximum(w_star, base) * (1.0 + g) + 0.5).astype(np.int64))

    coarse_next = np.where(u_stick < config.coarse_stickiness, base,
                           np.where(u_exact < config.coarse_exact_raise, exact_raise, round_raise))
    optimizer_next = np.where(u_stick < config.optimizer_stickiness, base, exact_raise)
    nxt = np.where(coarse, coarse_next, optimizer_next)
    nxt = np.where(affected & round_origin & (u_reopt < config.reoptimize_prob), reopt, nxt)

    out = records.copy()
    out["wage_next_centavos"] = pd.array(nxt, dtype="Int64")
    return out


def inject_discontinuity(records: pd.DataFrame, r: int, jump: float, side: str = "at",
                         kind: str = "resigned", seed: int = 0) -> pd.DataFrame:
    """Test fixture: shift an outcome probability or the wage density at round wage ``r``.

    ``kind`` is an outcome column (``"resigned"``/``"separated"``) or
    ``"density"``.  For outcomes, records exactly at ``r`` (``side="at"``)
    or strictly above it (``side="above"``) have their outcome rate moved
    by ``jump`` in expectation.  For the density, records above ``r`` are
    duplicated (``jump > 0``) or dropped (``jump < 0``) with probability
    ``|jump|``, scaling the density above ``r`` by ``1 + jump``.
    """
    if side not in ("at", "above"):
        raise DomainError(f"side must be 'at' or 'above', got {side!r}")
    if not np.isfinite(jump) or abs(jump) > 1:
        raise DomainError(f"jump must lie in [-1, 1], got {jump}")
    if jump == 0:
        return records
    r = int(r)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(r, 7)))
    w = records["wage_centavos"].to_numpy(np.int64)
    target = (w == r) if side == "at" else (w > r)
    u = rng.random(len(records))
    out = records.copy()
    if kind == "density":
        if side != "above":
            raise DomainError("density injection applies above r only")
        if jump > 0:
            extra = out[target & (u < jump)].copy()
            extra["worker_id"] = out["worker_id"].max() + 1 + np.arange(len(extra))
            return pd.concat([out, extra], ignore_index=True)
        return out[~(target & (u < -jump))].reset_index(drop=True)
    y = out[kind].to_numpy(bool).copy()
    rate = y[target].mean() if target.any() else 0.0
    if jump > 0:
        if rate + jump > 1:
            raise DomainError("jump pushes the outcome rate above 1")
        flip = target & ~y & (u < jump / (1.0 - rate))
        y[flip] = True
    else:
        if rate + jump < 0:
            raise DomainError("jump pushes the outcome rate below 0")
        flip = target & y & (u < -jump / rate)
        y[flip] = False
    out[kind] = y
    if kind == "resigned" and "separated" in out:
        out["separated"] = out["separated"].to_numpy(bool) | y
    return out
