"""Closed-form engine for the single-server queue with single vacations and impatience.

The partial generating functions are

    P0(z) = p00 exp(k z) (1-z)^(-g) [1 - A(z)/A]
    P1(z) = p00 exp(k z) z^(1-m) [-g B(z) + (mu-xi) gamma/(xi lam) C(z) + D(z)/A]

and ``p00`` follows from ``P0(1) + P1(1) = 1``.  See :mod:`vacqueue.kernels`
for the kernel definitions.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonPositiveResult
from .kernels import DELTA, KernelSet, kernel_set
from .model import Engine, ModelParams, Policy, validate
from .numdiff import richardson_left_derivative, taylor_coefficients
from .quad import DEFAULT_TOL, QuadResult, WeightedIntegrand, integrate
from .report import PerformanceReport, PgfEvaluation


@dataclass(frozen=True)
class SvKernels:
    A_of: Callable[[float], QuadResult]
    A1: float
    B_of: Callable[[float], QuadResult]
    C_of: Callable[[float], QuadResult]
    D_of: Callable[[float], QuadResult]
    combined_BD: QuadResult


@dataclass(frozen=True)
class BoundaryProbs:
    p00: float
    p10: float
    p11: float


def sojourn_busy(params: ModelParams, n: int) -> float:
    """Mean sojourn of a customer who finds the server busy with ``n`` customers."""
    return (n + 1) / (params.mu + n * params.xi)


def sojourn_vacation_sequence(params: ModelParams, n_max: int) -> list[float]:
    """``E(S_{0,n})`` for ``n = 0..n_max`` by first-step recursion.

    A customer arriving during a vacation to ``n`` others waits until the
    vacation ends (then continues as a busy-phase arrival), one of the
    others reneges, or it reneges itself.
    """
    lam, mu, gamma, xi = params.lam, params.mu, params.gamma, params.xi
    out = []
    prev = 0.0
    for n in range(n_max + 1):
        rate = gamma + (n + 1) * xi
        value = (1.0 + gamma * sojourn_busy(params, n) + n * xi * prev) / rate
        out.append(value)
        prev = value
    return out


def sojourn_vacation_sum(params: ModelParams, n: int, printed: bool = False) -> float:
    """Unrolled recursion as a finite sum.

    ``printed=True`` reproduces the published variant, which uses
    ``mu + n xi`` in every term where the unrolling gives ``mu + k xi``.
    """
    mu, gamma, xi = params.mu, params.gamma, params.xi
    total = 0.0
    for k in range(n + 1):
        denom = 1.0
        for j in range(k + 1, n + 2):
            denom *= gamma + j * xi
        ratio = math.factorial(n) / math.factorial(k)
        busy = mu + (n if printed else k) * xi
        total += xi ** (n - k) / denom * ratio * ((k + 1) * gamma / busy + 1.0)
    return total


def sojourn_00_printed(params: ModelParams) -> float:
    """The published closed form ``gamma/(gamma+xi) (1 + gamma/mu)``."""
    g = params.gamma
    return g / (g + params.xi) * (1.0 + g / params.mu)


class _ClosedFormModel:
    """Pieces shared by both vacation policies."""

    policy: Policy

    def __init__(self, params: ModelParams, tol: float = DEFAULT_TOL):
        if params.policy is not self.policy:
            params = params.replace(policy=self.policy)
        validate(params, Engine.ANALYTIC).raise_if_invalid()
        self.params = params
        self.tol = tol
        self.kernels: KernelSet = kernel_set(params, tol)

    # scalar helpers
    @property
    def k(self) -> float:
        return self.kernels.k

    @property
    def g(self) -> float:
        return self.kernels.g

    @property
    def m(self) -> float:
        return self.kernels.m

    @property
    def A1(self) -> float:
        return self.kernels.A1

    @functools.cached_property
    def C1(self) -> QuadResult:
        return self.kernels.C(1.0)

    def p00(self) -> float:
        raise NotImplementedError

    def p_vac(self) -> float:
        return self.p00() * self.params.xi / (self.params.gamma * self.A1)

    def mean_n0(self) -> float:
        p = self.params
        return p.lam / (p.gamma + p.xi) * self.p_vac()

    # generating functions
    def pgf0(self, z: float) -> PgfEvaluation:
        if not 0.0 <= z < 1.0:
            raise DomainError(f"P0(z) is evaluated on [0, 1); use p_vac for z = 1 (got {z})")
        if z > 1.0 - DELTA:
            raise DomainError(f"P0(z) kernel path is not used within {DELTA:g} of 1")
        p00 = self.p00()
        if z == 0.0:
            return PgfEvaluation(0, 0.0, p00, 0.0)
        tail = self.kernels.A_tail(z)
        factor = p00 * math.exp(self.k * z) * (1.0 - z) ** (-self.g) / self.A1
        return PgfEvaluation(0, z, factor * tail.value, factor * tail.abs_error_estimate)

    def pgf0_complex(self, z: complex) -> complex:
        """``P0`` for complex ``|z| < 1`` via the Kummer-series form (entire in ``z``)."""
        from .kernels import kummer_unit

        x = self.k * (1.0 - z)
        return complex(self.p00() * np.exp(-x) * kummer_unit(self.g, x) / (self.g * self.A1))

    def _bracket(self, z: float, tol: float) -> QuadResult:
        raise NotImplementedError

    def _pgf1_raw(self, z: float) -> QuadResult:
        """``P1(z)`` on ``(0, 1]`` through the cancelling combination (``z = 1`` allowed)."""
        # the bracket behaves like z^(m-1); tighten tol so z^(1-m) does not amplify it
        tol = self.tol * min(1.0, z ** (self.m - 1.0))
        bracket = self._bracket(z, max(tol, 1e-300))
        factor = self.p00() * math.exp(self.k * z) * z ** (1.0 - self.m)
        return QuadResult(factor * bracket.value, factor * bracket.abs_error_estimate, bracket.evaluations)

    def pgf1_limit_at_zero(self) -> float:
        raise NotImplementedError

    def pgf1(self, z: float) -> PgfEvaluation:
        if not 0.0 <= z < 1.0:
            raise DomainError(f"P1(z) is evaluated on [0, 1); use p_ser/p_idle for z = 1 (got {z})")
        if z == 0.0:
            return PgfEvaluation(1, 0.0, self.pgf1_limit_at_zero(), 0.0)
        res = self._pgf1_raw(z)
        return PgfEvaluation(1, z, float(res.value), res.abs_error_estimate)

    def _u_integral(self, z: complex) -> complex:
        """``z * int_0^1 u^(m-1) K(z u) du`` with ``K`` the combined B/D kernel."""
        ker = self.kernels
        f = WeightedIntegrand(lambda u: ker.combined_kernel(z * u), self.m - 1.0, 0.0)
        return z * integrate(f, 0.0, 1.0, self.tol * 1e-2).value

    def pgf1_complex(self, z: complex) -> complex:
        raise NotImplementedError

    def taylor_coefficients(self, phase: int, orders: int = 6, radius: float = 0.5, points: int = 32):
        """Stationary probabilities ``p_{phase, n}``, ``n < orders``, read off the PGF."""
        f = self.pgf0_complex if phase == 0 else self.pgf1_complex
        return taylor_coefficients(f, orders, radius, points)

    def mean_n1_numerical(self) -> tuple[float, float]:
        """``P1'(1)`` by Richardson-extrapolated one-sided differences."""
        p1_at_one = float(self._pgf1_raw(1.0).value)
        return richardson_left_derivative(lambda z: float(self._pgf1_raw(z).value), 1.0, p1_at_one)

    def sojourn(self, phase: int, n: int) -> float:
        if phase == 1:
            return sojourn_busy(self.params, n)
        return sojourn_vacation_sequence(self.params, n)[-1]


class SingleVacationModel(_ClosedFormModel):
    policy = Policy.SINGLE

    @property
    def c_coefficient(self) -> float:
        p = self.params
        return (p.mu - p.xi) * p.gamma / (p.xi * p.lam)

    def kernels_view(self) -> SvKernels:
        ker = self.kernels
        return SvKernels(ker.A, ker.A1, ker.B, ker.C, ker.D, ker.combined_bd(1.0))

    @functools.lru_cache(maxsize=None)
    def p00(self) -> float:
        p = self.params
        ker = self.kernels
        bracket = ker.combined_bd(1.0).value + self.c_coefficient * self.C1.value
        inverse = p.xi / (p.gamma * self.A1) + math.exp(self.k) * bracket
        value = 1.0 / inverse
        if not 0.0 < value < 1.0:
            raise NonPositiveResult(f"p00 = {value!r} outside (0, 1) for {p}")
        return value

    def boundary(self) -> BoundaryProbs:
        p = self.params
        p00 = self.p00()
        return BoundaryProbs(p00, p.gamma / p.lam * p00, p.xi / (p.mu * self.A1) * p00)

    def p_idle(self) -> float:
        return self.params.gamma / self.params.lam * self.p00()

    def p_ser(self) -> float:
        return 1.0 - self.p_idle() - self.p_vac()

    def _bracket(self, z: float, tol: float) -> QuadResult:
        ker = self.kernels
        bd = ker.combined_bd(z, tol)
        c = ker.C(z, tol)
        cc = self.c_coefficient
        return QuadResult(
            bd.value + cc * c.value,
            bd.abs_error_estimate + abs(cc) * c.abs_error_estimate,
            bd.evaluations + c.evaluations,
        )

    def pgf1_limit_at_zero(self) -> float:
        return self.p_idle()

    def pgf1_complex(self, z: complex) -> complex:
        k, m = self.k, self.m
        c_part = integrate(
            WeightedIntegrand(lambda u: np.exp(-k * z * u), m - 2.0, 0.0), 0.0, 1.0, self.tol * 1e-2
        ).value
        return self.p00() * np.exp(k * z) * (self._u_integral(z) + self.c_coefficient * c_part)

    def mean_n1_published(self) -> float:
        p = self.params
        return (p.lam - p.mu + p.xi) / p.xi + (
            p.lam / ((p.lam + p.xi) * self.A1) - p.gamma / p.lam + p.mu * p.gamma / (p.lam * p.xi)
        ) * self.p00()

    def measures(self) -> PerformanceReport:
        p = self.params
        b = self.boundary()
        p_vac, p_idle = self.p_vac(), self.p_idle()
        p_ser = 1.0 - p_idle - p_vac
        mean_n0 = self.mean_n0()
        mean_n1, mean_n1_err = self.mean_n1_numerical()
        total = mean_n0 + mean_n1
        s00 = sojourn_vacation_sequence(p, 0)[0]
        p1_at_one = float(self._pgf1_raw(1.0).value)
        extra = {
            "A": self.A1,
            "P1_at_1": p1_at_one,
            "normalization_residual": p_vac + p1_at_one - 1.0,
            "mean_n1_richardson": mean_n1,
            "mean_n1_richardson_error": mean_n1_err,
            "mean_n1_flow_balance": (p.lam - p.mu * p_ser) / p.xi + p_ser - mean_n0,
            "mean_n1_published_formula": self.mean_n1_published(),
            "p_ser_published_formula": 1.0 - b.p00 * (p.gamma / p.lam - p.xi / (p.gamma * self.A1)),
            "S_0_0_recursion": s00,
            "S_0_0_published_formula": sojourn_00_printed(p),
            "S_0_0_discrepancy": sojourn_00_printed(p) - s00,
            "reneging_rate": p.xi * (total - p_ser),
        }
        return PerformanceReport(
            engine=Engine.ANALYTIC,
            p00=b.p00, p10=b.p10, p11=b.p11,
            p_vac=p_vac, p_idle=p_idle, p_ser=p_ser,
            mean_n0=mean_n0, mean_n1=mean_n1, mean_n_total=total,
            sojourn_10=sojourn_busy(p, 0), sojourn_00=s00,
            mean_sojourn=total / p.lam,
            fraction_served=p.mu * p_ser / p.lam,
            extra=extra,
        )


@functools.lru_cache(maxsize=128)
def _model(params: ModelParams, tol: float) -> SingleVacationModel:
    return SingleVacationModel(params, tol)


def sv_kernels(params: ModelParams, tol: float = DEFAULT_TOL) -> SvKernels:
    return _model(params, tol).kernels_view()


def sv_p00(params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    return _model(params, tol).p00()


def sv_boundary(params: ModelParams, tol: float = DEFAULT_TOL) -> BoundaryProbs:
    return _model(params, tol).boundary()


def sv_pgf0(params: ModelParams, z: float, tol: float = DEFAULT_TOL) -> PgfEvaluation:
    return _model(params, tol).pgf0(z)


def sv_pgf1(params: ModelParams, z: float, tol: float = DEFAULT_TOL) -> PgfEvaluation:
    return _model(params, tol).pgf1(z)


def sv_measures(params: ModelParams, tol: float = DEFAULT_TOL) -> PerformanceReport:
    return _model(params, tol).measures()


def sv_sojourn_busy(params: ModelParams, n: int) -> float:
    return sojourn_busy(params, n)


def sv_sojourn_vacation(params: ModelParams, n: int) -> float:
    return sojourn_vacation_sequence(params, n)[n]
