import numpy as np
import pandas as pd
import pytest
from scipy import stats

from coarsewage import io, model, money, simulate
from coarsewage.errors import ConfigError, DomainError
from coarsewage.model import CostDistribution

FLAT = dict(size_cost_slope=0.0, experience_cost_slope=0.0, cpi_cost_slope=0.0)


def test_output_is_seed_deterministic():
    cfg = simulate.baseline_config(n_firms=1200, seed=7)
    a, sa = simulate.simulate_hires(cfg)
    b, sb = simulate.simulate_hires(cfg)
    assert io.records_to_csv(a) == io.records_to_csv(b)
    assert sa == sb
    c, _ = simulate.simulate_hires(simulate.baseline_config(n_firms=1200, seed=8))
    assert io.records_to_csv(a) != io.records_to_csv(c)


def test_blocks_do_not_depend_on_cohort_size():
    # the first block's firms are drawn from their own stream
    small, _ = simulate.simulate_hires(simulate.baseline_config(n_firms=500, seed=3))
    big, _ = simulate.simulate_hires(simulate.baseline_config(n_firms=1500, seed=3))
    head = big[big["firm_id"] < 500].reset_index(drop=True)
    cols = [c for c in small.columns if c != "worker_id"]
    pd.testing.assert_frame_equal(small[cols], head[cols])


def test_schema(frictionless):
    rec, _ = frictionless
    assert list(rec.columns) == simulate.RECORD_COLUMNS + simulate.LATENT_COLUMNS
    assert rec["worker_id"].is_unique
    assert rec["wage_next_centavos"].isna().all()


@pytest.mark.parametrize("field,value", [
    ("n_firms", 0), ("elasticity", -1.0), ("grain", 50), ("resign_rate", 1.5),
    ("min_wage", {2003: 240}), ("raise_range", (0.0, 0.1)), ("inflation_range", (0.1, 0.0)),
])
def test_invalid_config_names_field(field, value):
    with pytest.raises(ConfigError) as err:
        simulate.baseline_config(**{field: value})
    assert err.value.field == field


def test_frictionless_cohort(frictionless):
    rec, summ = frictionless
    assert summ.theta_true == 0.0
    # exact wages hit a multiple of R$10 with chance 1/1000 (centavo resolution)
    free = rec[~rec["mw_floored"]]
    share = money.divisibility_shares(free["wage_centavos"].to_numpy(), (10,)).shares[10]
    p0 = 1e-3
    assert abs(share - p0) <= 3 * np.sqrt(p0 * (1 - p0) / len(free))


def test_always_coarse_when_cost_dominates():
    # wedge is at most 50 / w*, so eta^2 w~^2 < 0.99 once w* > 101
    cfg = simulate.baseline_config(n_firms=2000, costs=CostDistribution.point(0.99), seed=5, **FLAT)
    rec, summ = simulate.simulate_hires(cfg)
    assert rec["w_star"].min() > 101
    assert summ.theta_true == 1.0


def test_latent_labels_consistent(baseline):
    rec, summ = baseline
    assert summ.N == len(rec)
    assert summ.theta_true == rec["was_coarse"].mean()
    assert 0 <= summ.theta_true <= 1
    coarse = rec["was_coarse"].to_numpy()
    floored = rec["mw_floored"].to_numpy()
    w = rec["wage_centavos"].to_numpy()
    g = rec["chosen_grain"].to_numpy()
    assert np.all(g[coarse] == 100) and np.all(g[~coarse] == 0)
    ok = coarse & ~floored
    assert np.all(w[ok] % (g[ok] * 100) == 0)
    mw = money.mw_lookup(simulate.baseline_config().min_wage_centavos(), rec["year"].to_numpy())
    assert np.all(w[floored] == mw[floored])
    assert np.all(w >= mw)
    assert summ.n_mw_floored == floored.sum()


def test_mixture_cdf_matches_analytic_components():
    """Half the firms are coarse at grain 100 whatever the wedge, the rest optimize.

    The exact component is lognormal and the coarse component is its
    rounding to R$100, so the observed CDF is an explicit two-part mixture.
    """
    sigma, median, eta = 0.4, 1000.0, 2.0
    cfg = simulate.baseline_config(
        n_firms=100_000, hires_per_firm=1.0, firm_sigma_share=0.0, costs=CostDistribution.empirical([0.0, 0.99]),
        inflation_range=(0.0, 0.0), min_wage={y: 1 for y in range(2003, 2009)}, seed=11, **FLAT)
    rec, summ = simulate.simulate_hires(cfg)
    assert not rec["mw_floored"].any()
    # CPI noise (sd 0.004) adds to the log-productivity spread
    s = np.hypot(sigma, 0.004)
    mu = np.log(median * eta / (1 + eta))
    exact = lambda x: stats.norm.cdf((np.log(np.maximum(x, 1e-300)) - mu) / s)
    coarse = lambda x: np.where(np.asarray(x) >= 100, exact((np.floor(np.asarray(x) / 100) + 0.5) * 100), 0.0)
    F = model.mixture_cdf(summ.theta_true, coarse, exact)
    x = np.sort(rec["wage_centavos"].to_numpy() / 100.0)
    n = x.size
    ecdf_hi = np.searchsorted(x, x, side="right") / n
    ecdf_lo = np.searchsorted(x, x, side="left") / n
    ks = max(np.max(np.abs(ecdf_hi - F(x))), np.max(np.abs(ecdf_lo - F(x - 0.005))))
    assert n >= 100_000
    assert abs(summ.theta_true - 0.5) < 0.01
    assert ks <= 0.01


def test_comparative_statics_in_generated_data(baseline):
    rec, _ = baseline
    coarse = rec["was_coarse"].astype(float)
    for col, sign in (("log_cpi", 1), ("firm_size", -1), ("hiring_experience", -1)):
        q = pd.qcut(rec[col], 4, labels=False, duplicates="drop")
        by = coarse.groupby(q).mean()
        assert sign * (by.iloc[-1] - by.iloc[0]) > 0, col


def test_next_year_sticky_coarse_keep_wage():
    cfg = simulate.baseline_config(n_firms=800, seed=2, coarse_stickiness=1.0,
                                   min_wage={y: 1 for y in range(2003, 2009)})
    rec, _ = simulate.simulate_hires(cfg)
    nxt = simulate.simulate_next_year(rec, cfg)
    c = nxt["was_coarse"].to_numpy()
    assert c.any()
    assert np.array_equal(nxt["wage_next_centavos"].to_numpy(np.int64)[c], nxt["wage_centavos"].to_numpy()[c])


def test_next_year_reoptimization_clears_overtaken_round_wages():
    cfg = simulate.baseline_config(n_firms=3000, seed=4, reoptimize_prob=1.0, productivity_median=500.0)
    rec, _ = simulate.simulate_hires(cfg)
    nxt = simulate.simulate_next_year(rec, cfg)
    mw = cfg.min_wage_centavos()
    w = nxt["wage_centavos"].to_numpy()
    w1 = nxt["wage_next_centavos"].to_numpy(np.int64)
    mw1 = money.mw_lookup(mw, nxt["year"].to_numpy() + 1)
    hit = (w < mw1) & (w % 1000 == 0)
    assert hit.sum() > 50
    assert np.all(w1[hit] != w[hit])
    assert np.all(w1[hit] > mw1[hit])
    assert not np.any(w1[hit] % 1000 == 0)


def test_next_year_lifts_to_minimum():
    cfg = simulate.baseline_config(n_firms=1000, seed=9)
    nxt = simulate.simulate_next_year(simulate.simulate_hires(cfg)[0], cfg)
    mw1 = money.mw_lookup(cfg.min_wage_centavos(), nxt["year"].to_numpy() + 1)
    assert np.all(nxt["wage_next_centavos"].to_numpy(np.int64) >= mw1)


def test_next_year_missing_schedule_year():
    cfg = simulate.baseline_config(n_firms=50, years=(2018,))
    rec, _ = simulate.simulate_hires(cfg)
    with pytest.raises(ConfigError) as err:
        simulate.simulate_next_year(rec, cfg)
    assert err.value.field == "min_wage"


def test_inject_zero_is_identity(frictionless):
    rec, _ = frictionless
    assert simulate.inject_discontinuity(rec, 70_000, 0.0) is rec


@pytest.mark.parametrize("jump", [1.5, -1.01, float("nan")])
def test_inject_rejects_bad_jump(frictionless, jump):
    with pytest.raises(DomainError):
        simulate.inject_discontinuity(frictionless[0], 70_000, jump)


def test_inject_outcome_rate():
    n = 200_000
    rec = pd.DataFrame({"wage_centavos": np.full(n, 70_000), "resigned": np.zeros(n, bool),
                        "separated": np.zeros(n, bool), "worker_id": np.arange(n)})
    out = simulate.inject_discontinuity(rec, 70_000, 0.015, seed=1)
    assert abs(out["resigned"].mean() - 0.015) < 4 * np.sqrt(0.015 * 0.985 / n)
    assert np.array_equal(out["separated"], out["resigned"])


def test_inject_density_above(frictionless):
    rec, _ = frictionless
    r = 60_000
    out = simulate.inject_discontinuity(rec, r, 0.2, side="above", kind="density", seed=3)
    w0, w1 = rec["wage_centavos"].to_numpy(), out["wage_centavos"].to_numpy()
    above0, above1 = (w0 > r).sum(), (w1 > r).sum()
    assert abs(above1 / above0 - 1.2) < 4 * np.sqrt(0.2 * 0.8 / above0)
    assert (w1 <= r).sum() == (w0 <= r).sum()
    assert out["worker_id"].is_unique
