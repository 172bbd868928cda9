"""Regression tests, descriptives and minimum-wage transitions."""

from .descriptives import gini, nearest_rank, percentile_ratio, stickiness_indicator
from .firms import FirmProfile, attach_flag, classify_firms, eligible_hires, firm_profiles
from .lpm import LpmFit, cluster_vcov, demean, firm_outcome_regression, lpm_fit
from .rd import DensityRdFit, RdFit, rd_aggregate, rd_density, rd_many, rd_outcome
from .spillover import TransitionTable, spillover_table
