"""Command-line entry point.

Every subcommand reads defaults, then ``--config`` (key = value), then
flags, and writes CSV artifacts into ``--out`` whose first line is the run
manifest.  Exit status: 0 success, 2 bad input or configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from . import bunching, io, money, simulate
from .errors import InputError, NumericalError
from .inference import (
    firm_profiles, lpm_fit, rd_aggregate, rd_density, rd_many, spillover_table,
)

COMMANDS = ("simulate", "digits", "estimate", "rd", "spillover", "predict-tests", "classify-firms")
DEMO_FIRMS = 5_000

# flag name -> RunConfig field
_FLAG_FIELDS = {
    "input": "input", "out": "out", "seed": "seed", "degree": "degree", "bandwidth": "bandwidth",
    "kernel": "kernel", "grain": "grain", "min_wage": "min_wage", "winsorize": "winsorize",
    "bootstrap": "bootstrap", "cells": "cells", "rd_grain": "rd_grain", "rd_bandwidth": "rd_bandwidth",
    "outcome": "outcome", "n_firms": "n_firms",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--input", help="hire CSV in the canonical schema")
    common.add_argument("--demo", action="store_true", help="use a simulated demo cohort as input")
    common.add_argument("--min-wage", dest="min_wage", help="centavos, or year:centavos,... schedule")
    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--degree", type=int)
    est.add_argument("--bandwidth", type=int)
    est.add_argument("--kernel", choices=bunching.KERNELS)
    est.add_argument("--grain", type=int)
    est.add_argument("--winsorize", type=int, help="top bin in centavos")

    p = argparse.ArgumentParser(prog="coarsewage", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="simulate a hire cohort")
    s.add_argument("--n-firms", dest="n_firms", type=int)
    s.add_argument("--no-next-year", dest="next_year", action="store_false", default=None)
    sub.add_parser("digits", parents=[common], help="shares of wages divisible by 10/100/1000")
    e = sub.add_parser("estimate", parents=[common, est], help="bunching estimate of the coarse share")
    e.add_argument("--bootstrap", type=int, help="firm-cluster bootstrap replications")
    e.add_argument("--cells", help="covariate(s) to condition on, comma-separated")
    r = sub.add_parser("rd", parents=[common, est], help="discontinuity tests at round wages")
    r.add_argument("--rd-grain", dest="rd_grain", type=int)
    r.add_argument("--rd-bandwidth", dest="rd_bandwidth", type=int)
    r.add_argument("--outcome", choices=("resigned", "separated"))
    sub.add_parser("spillover", parents=[common], help="minimum-wage transition table")
    t = sub.add_parser("predict-tests", parents=[common, est], help="fixed-effects regression design")
    t.add_argument("--bootstrap", type=int)
    sub.add_parser("classify-firms", parents=[common, est], help="bunching-firm flags")
    return p


def resolve_config(args: argparse.Namespace) -> io.RunConfig:
    cfg = io.RunConfig(command=args.command)
    if getattr(args, "config", None):
        cfg = io.RunConfig.from_mapping(io.load_config(args.config), cfg)
        cfg.command = args.command
    flags = {}
    for name, fld in _FLAG_FIELDS.items():
        v = getattr(args, name, None)
        if v is not None:
            flags[fld] = str(v)
    if getattr(args, "next_year", None) is not None:
        flags["next_year"] = str(args.next_year)
    if getattr(args, "demo", False):
        flags["demo"] = "true"
    return io.RunConfig.from_mapping(flags, cfg)


def _sim_config(cfg: io.RunConfig, n_firms: int) -> simulate.SimConfig:
    mw = cfg.min_wage
    sched = ({y: money.to_reais(c) for y, c in mw.items()} if isinstance(mw, dict)
             else simulate.SimConfig().min_wage)
    return simulate.baseline_config(seed=cfg.seed, n_firms=n_firms, min_wage=sched)


def load_input(cfg: io.RunConfig):
    """Records, ingestion report line and input digest."""
    if cfg.demo:
        sc = _sim_config(cfg, DEMO_FIRMS)
        rec, _ = simulate.simulate_hires(sc)
        rec = simulate.simulate_next_year(rec, sc)
        return rec, f"demo n_firms={DEMO_FIRMS}", "demo"
    if not cfg.input:
        raise io.SchemaError("no input given (use --input or --demo)")
    rec, report = io.ingest(cfg.input, cfg.min_wage)
    return rec, report.as_line(), io.file_digest(cfg.input)


def _out(cfg: io.RunConfig) -> Path:
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _spec(cfg: io.RunConfig) -> bunching.FitSpec:
    return bunching.FitSpec(degree=cfg.degree, bandwidth=cfg.bandwidth, kernel=cfg.kernel, grain=cfg.grain)


def _hist(cfg: io.RunConfig, rec: pd.DataFrame) -> bunching.WageHistogram:
    return bunching.histogram_from_records(rec, cfg.min_wage, support_hi=cfg.winsorize // money.CENTAVOS_PER_REAL)


def cmd_simulate(cfg: io.RunConfig) -> list[str]:
    sc = _sim_config(cfg, cfg.n_firms)
    rec, summ = simulate.simulate_hires(sc)
    if cfg.next_year:
        rec = simulate.simulate_next_year(rec, sc)
    man = cfg.manifest()
    io.write_records(rec, _out(cfg) / "hires.csv", man)
    by = " ".join(f"theta_{g}={summ.theta_true_by_grain[g]!r}" for g in sorted(summ.theta_true_by_grain))
    return [f"N={summ.N} theta_true={summ.theta_true!r} {by} mw_floored={summ.n_mw_floored}"]


def cmd_digits(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    w = rec["wage_centavos"].to_numpy(np.int64)
    if cfg.min_wage is not None and len(w):
        w = w[w != money.mw_lookup(cfg.min_wage, rec["year"].to_numpy())]
    res = money.divisibility_shares(w, money.DEFAULT_GRAINS)
    excl = {g: float(np.mean(money.is_exclusively_divisible_array(w, g))) for g in money.DEFAULT_GRAINS}
    tab = pd.DataFrame({
        "grain": list(res.shares),
        "share": list(res.shares.values()),
        "exclusive_share": [excl[g] for g in res.shares],
        "baseline": list(res.baselines.values()),
    })
    io.write_table(tab, _out(cfg) / "digits.csv", cfg.manifest(digest))
    return [rep] + [f"grain={g} share={s:.3f} baseline={res.baselines[g]:.3f}" for g, s in res.shares.items()]


def cmd_estimate(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    man = cfg.manifest(digest)
    spec = _spec(cfg)
    hist = _hist(cfg, rec)
    est, fit = bunching.estimate(hist, spec)
    windows = bunching.manipulation_windows(hist, fit)
    se = None
    if cfg.bootstrap >= 2:
        se = bunching.bootstrap_se(rec, spec, cfg.bootstrap, cfg.seed, min_wage=cfg.min_wage,
                                   support_hi=hist.hi).se
    out = _out(cfg)
    io.write_table(bunching.bins_table(hist, fit), out / "bins.csv", man)
    io.write_table(bunching.estimates_table(est, spec.grain, windows), out / "estimates.csv", man)
    cum, excl = est.by_grain(), est.by_grain(exclusive=True)
    summary = pd.DataFrame([{
        "grain": spec.grain, "N": est.N, "B_hat": est.B_hat, "theta_hat": est.theta_hat,
        "reweight_factor": est.reweight_factor, "bootstrap_se": np.nan if se is None else se,
        "negative_prediction": int(fit.negative_prediction_flag),
        "n_dropped_mw": hist.n_dropped_mw, "n_winsorized": hist.n_winsorized,
        **{f"theta_div{g}": cum[g] for g in cum}, **{f"theta_only{g}": excl[g] for g in excl},
    }])
    io.write_table(summary, out / "theta.csv", man)
    lines = [rep, f"theta_hat={est.theta_hat:.6f} B_hat={est.B_hat:.1f} N={est.N:.0f}"]
    if cfg.cells:
        cells = bunching.conditional_theta(rec, tuple(cfg.cells.split(",")), spec, cfg.min_wage,
                                           B=cfg.bootstrap, seed=cfg.seed, support_hi=hist.hi)
        tab = pd.DataFrame([c.__dict__ for c in cells])
        io.write_table(tab, out / "theta_cells.csv", man)
        lines.append(f"cells={len(cells)}")
    return lines


def cmd_rd(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    man = cfg.manifest(digest)
    hist = _hist(cfg, rec)
    step = money.check_grain(cfg.rd_grain)
    rounds = [r for r in range(-(-hist.lo // step) * step, hist.hi + 1, step) if r not in hist.excluded_mw]
    fits = rd_many(rec, [r * money.CENTAVOS_PER_REAL for r in rounds], cfg.rd_bandwidth, cfg.outcome)
    rows = [{"r": f.r // money.CENTAVOS_PER_REAL, "n_obs": f.n_obs, "n_at": f.n_at,
             **{k: f.coef[k] for k in ("beta", "gamma")},
             "se_beta": f.se["beta"], "se_gamma": f.se["gamma"]} for f in fits]
    out = _out(cfg)
    io.write_table(pd.DataFrame(rows, columns=["r", "n_obs", "n_at", "beta", "gamma", "se_beta", "se_gamma"]),
                   out / "rd.csv", man)
    drows = []
    for r in rounds:
        try:
            d = rd_density(hist, r, cfg.rd_bandwidth)
        except InputError:
            continue
        drows.append({"r": r, "beta": d.coef["beta"], "se_beta": d.se["beta"], "p_value": d.p_value()})
    io.write_table(pd.DataFrame(drows, columns=["r", "beta", "se_beta", "p_value"]), out / "rd_density.csv", man)
    lines = [rep, f"rd_fits={len(fits)} density_fits={len(drows)}"]
    if fits:
        for name in ("beta", "gamma"):
            a = rd_aggregate(fits, name)
            lines.append(f"weighted_{name}={a.estimate:.6f} se={a.se:.6f}")
    return lines


def cmd_spillover(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    if not isinstance(cfg.min_wage, dict):
        raise io.ConfigError("min_wage", "spillover needs a year:centavos schedule")
    tt = spillover_table(rec, cfg.min_wage)
    io.write_table(tt.as_frame(), _out(cfg) / "transition.csv", cfg.manifest(digest))
    lines = [rep]
    try:
        lines.append(f"did={tt.did:.6f} did_relative={tt.did_relative:.6f} ratio_to_benchmark={tt.ratio_to_benchmark:.6f}")
    except InputError as exc:
        lines.append(f"did unavailable: {exc}")
    return lines


def cmd_predict_tests(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    rec = rec.copy()
    rec["round"] = money.is_divisible_array(rec["wage_centavos"].to_numpy(np.int64), cfg.grain).astype(int)
    if cfg.min_wage is not None:
        rec = rec[rec["wage_centavos"].to_numpy(np.int64) != money.mw_lookup(cfg.min_wage, rec["year"].to_numpy())]
    covs = ["log_cpi", "firm_size", "hiring_experience"]
    fit = lpm_fit(rec, "round", covs, ["firm_id", "year", "region"], cluster="firm_id")
    tab = fit.table()
    tab.insert(0, "spec", "lpm_fe")
    corr = [lpm_fit(rec, "round", [c], (), cluster="firm_id", standardize_outcome=True) for c in covs]
    ctab = pd.DataFrame({"spec": "correlation", "name": covs, "estimate": [f.coef[0] for f in corr],
                         "se": [f.se[0] for f in corr]})
    io.write_table(pd.concat([tab, ctab], ignore_index=True), _out(cfg) / "coefficients.csv", cfg.manifest(digest))
    return [rep] + [f"{n}={c:.6f} (se {s:.6f})" for n, c, s in zip(fit.names, fit.coef, fit.se)]


def cmd_classify_firms(cfg: io.RunConfig) -> list[str]:
    rec, rep, digest = load_input(cfg)
    prof = firm_profiles(rec, cfg.grain, cfg.min_wage)
    for c in prof.columns:
        if prof[c].dtype == bool:
            prof[c] = prof[c].astype(int)
    io.write_table(prof, _out(cfg) / "firms.csv", cfg.manifest(digest))
    return [rep, f"firms={len(prof)} all_round_share={prof['all_round'].mean():.6f}"]


HANDLERS = {
    "simulate": cmd_simulate, "digits": cmd_digits, "estimate": cmd_estimate, "rd": cmd_rd,
    "spillover": cmd_spillover, "predict-tests": cmd_predict_tests, "classify-firms": cmd_classify_firms,
}


def run(cfg: io.RunConfig) -> list[str]:
    if cfg.command not in HANDLERS:
        raise io.ConfigError("command", f"unknown command {cfg.command!r}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        lines = run(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(cfg.manifest())
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
