"""Steady-state analysis of Markovian vacation queues with impatient customers."""

from .analytic_mv import MultipleVacationModel, mv_measures, mv_p00, mv_p11, mv_pgf0, mv_pgf1, mv_sojourn
from .analytic_sv import (
    SingleVacationModel,
    sv_kernels,
    sv_measures,
    sv_p00,
    sv_pgf0,
    sv_pgf1,
    sv_sojourn_busy,
    sv_sojourn_vacation,
)
from .model import BalanceVariant, Engine, ModelParams, Policy, QueueState, rate_of, transitions, validate
from .oracle import build_generator, oracle_measures, solve_sojourn, solve_stationary, stationary
from .report import PerformanceReport, PgfEvaluation
from .sim import SimConfig, SimEstimate, estimate_conditional_sojourn, simulate

__version__ = "0.1.0"

__all__ = [
    "BalanceVariant", "Engine", "ModelParams", "MultipleVacationModel", "PerformanceReport",
    "PgfEvaluation", "Policy", "QueueState", "SimConfig", "SimEstimate", "SingleVacationModel",
    "build_generator", "estimate_conditional_sojourn", "mv_measures", "mv_p00", "mv_p11",
    "mv_pgf0", "mv_pgf1", "mv_sojourn", "oracle_measures", "rate_of", "simulate", "solve_sojourn",
    "solve_stationary", "stationary", "sv_kernels", "sv_measures", "sv_p00", "sv_pgf0", "sv_pgf1",
    "sv_sojourn_busy", "sv_sojourn_vacation", "transitions", "validate",
]
