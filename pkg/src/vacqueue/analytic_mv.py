"""Closed-form engine for the single-server queue with multiple vacations and impatience.

``P0`` has the same form as under single vacations.  The busy-phase PGF is

    P1(z) = p00 exp(k z) z^(1-m) [-g B(z) + D(z)/A]
          = p00 exp(k z) z^(1-m) [-g B(z) + E(z)/A - C(z)/A]

which vanishes at ``z = 0`` because state (1,0) does not exist, and

    1/p00 = xi/(A gamma) + exp(k) [(-g B + E/A)(1) - C(1)/A].

The published normalisation combines ``B`` and ``E`` with the coefficient
``1/A - xi/(A mu) + gamma/mu`` on ``E``.  That combination does not cancel
the logarithmic singularity at 1, so it is evaluated only to demonstrate the
failure and is reported as ``nan``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytic_sv import _ClosedFormModel, sojourn_busy, sojourn_vacation_sequence
from .errors import CancellationFailure, DomainError, NonPositiveResult
from .kernels import DELTA
from .model import Engine, ModelParams, Policy
from .quad import DEFAULT_TOL, QuadResult, integrate_cancelling
from .report import PerformanceReport, PgfEvaluation


@dataclass(frozen=True)
class MvKernels:
    A_of: Callable[[float], QuadResult]
    A1: float
    B_of: Callable[[float], QuadResult]
    E_of: Callable[[float], QuadResult]
    combined_BE: QuadResult


class MultipleVacationModel(_ClosedFormModel):
    policy = Policy.MULTIPLE

    def kernels_view(self) -> MvKernels:
        ker = self.kernels
        return MvKernels(ker.A, ker.A1, ker.B, ker.E, ker.combined_be(1.0))

    @functools.lru_cache(maxsize=None)
    def p00(self) -> float:
        p = self.params
        bracket = self.kernels.combined_be(1.0).value - self.C1.value / self.A1
        value = 1.0 / (p.xi / (self.A1 * p.gamma) + math.exp(self.k) * bracket)
        if not 0.0 < value < 1.0:
            raise NonPositiveResult(f"p00 = {value!r} outside (0, 1) for {p}")
        return value

    def published_e_coefficient(self) -> float:
        p = self.params
        return 1.0 / self.A1 - p.xi / (self.A1 * p.mu) + p.gamma / p.mu

    def p00_published(self) -> float:
        """The published normalisation; raises CancellationFailure."""
        ker = self.kernels
        p = self.params
        combo = integrate_cancelling(
            [ker.b_integrand(), ker.e_integrand()], [-self.g, self.published_e_coefficient()],
            0.0, 1.0, self.tol,
        )
        return 1.0 / (p.xi / (self.A1 * p.gamma) + math.exp(self.k) * combo.value)

    def p11(self) -> float:
        p = self.params
        numerator = p.xi - p.gamma * self.A1
        if numerator <= 0.0:
            raise NonPositiveResult(f"xi - gamma A = {numerator!r} <= 0; A is not below xi/gamma")
        return numerator / (p.mu * self.A1) * self.p00()

    def p_ser(self) -> float:
        return 1.0 - self.p_vac()

    def _bracket(self, z: float, tol: float) -> QuadResult:
        return self.kernels.combined_bd(z, tol)

    def pgf1_limit_at_zero(self) -> float:
        return 0.0

    def pgf1_complex(self, z: complex) -> complex:
        return self.p00() * np.exp(self.k * z) * self._u_integral(z)

    def pgf1_published(self, z: float) -> float:
        """Published busy-phase PGF, built from raw ``B`` and ``E`` on ``(0, 1 - DELTA]``."""
        if not 0.0 < z <= 1.0 - DELTA:
            raise DomainError(f"raw kernels need 0 < z <= 1 - {DELTA:g}, got {z}")
        ker = self.kernels
        p00, p11 = self.p00(), self.p11()
        b, e = ker.B(z).value, ker.E(z).value
        bracket = -p00 * self.g * b + self.g * p00 * e + p11 * (self.m - 1.0) * e
        return math.exp(self.k * z) * z ** (1.0 - self.m) * bracket

    def mean_n1_published(self) -> float:
        p = self.params
        p0 = self.p_vac()
        return ((-p.lam + p.mu - p.xi) * (1.0 - p0) - p.gamma * p0) / (p.xi - p.gamma)

    def sojourn(self, phase: int, n: int) -> float:
        if phase == 1 and n == 0:
            raise DomainError("state (1,0) does not exist under multiple vacations")
        return super().sojourn(phase, n)

    def measures(self) -> PerformanceReport:
        p = self.params
        p00, p11 = self.p00(), self.p11()
        p_vac = self.p_vac()
        p_ser = 1.0 - p_vac
        mean_n0 = self.mean_n0()
        mean_n1, mean_n1_err = self.mean_n1_numerical()
        total = mean_n0 + mean_n1
        p1_at_one = float(self._pgf1_raw(1.0).value)
        try:
            p00_published = self.p00_published()
            published_ok = 1.0
        except CancellationFailure:
            p00_published = float("nan")
            published_ok = 0.0
        s00 = sojourn_vacation_sequence(p, 0)[0]
        extra = {
            "A": self.A1,
            "P1_at_1": p1_at_one,
            "normalization_residual": p_vac + p1_at_one - 1.0,
            "mean_n1_richardson": mean_n1,
            "mean_n1_richardson_error": mean_n1_err,
            "mean_n1_flow_balance": (p.lam - p.mu * p_ser) / p.xi + p_ser - mean_n0,
            "mean_n1_published_formula": (
                self.mean_n1_published() if p.xi != p.gamma else float("nan")
            ),
            "p00_published_formula": p00_published,
            "p00_published_formula_cancels": published_ok,
            "mass_identity_residual": p.gamma * p_vac - (p.mu * p11 + p.gamma * p00),
            "S_0_0_recursion": s00,
            "S_0_0_published_formula": p.gamma / (p.gamma + p.xi) * (1.0 + p.gamma / p.mu),
            "reneging_rate": p.xi * (total - p_ser),
        }
        extra["S_0_0_discrepancy"] = extra["S_0_0_published_formula"] - s00
        return PerformanceReport(
            engine=Engine.ANALYTIC,
            p00=p00, p10=0.0, p11=p11,
            p_vac=p_vac, p_idle=0.0, p_ser=p_ser,
            mean_n0=mean_n0, mean_n1=mean_n1, mean_n_total=total,
            sojourn_10=None, sojourn_00=s00,
            mean_sojourn=total / p.lam,
            fraction_served=p.mu * p_ser / p.lam,
            extra=extra,
        )


@functools.lru_cache(maxsize=128)
def _model(params: ModelParams, tol: float) -> MultipleVacationModel:
    return MultipleVacationModel(params, tol)


def mv_kernels(params: ModelParams, tol: float = DEFAULT_TOL) -> MvKernels:
    return _model(params, tol).kernels_view()


def mv_p00(params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    return _model(params, tol).p00()


def mv_p11(params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    return _model(params, tol).p11()


def mv_pgf0(params: ModelParams, z: float, tol: float = DEFAULT_TOL) -> PgfEvaluation:
    return _model(params, tol).pgf0(z)


def mv_pgf1(params: ModelParams, z: float, tol: float = DEFAULT_TOL) -> PgfEvaluation:
    return _model(params, tol).pgf1(z)


def mv_measures(params: ModelParams, tol: float = DEFAULT_TOL) -> PerformanceReport:
    return _model(params, tol).measures()


def mv_sojourn(params: ModelParams, phase: int, n: int) -> float:
    if phase == 1:
        if n == 0:
            raise DomainError("state (1,0) does not exist under multiple vacations")
        return sojourn_busy(params, n)
    return sojourn_vacation_sequence(params, n)[n]
