"""Integral kernels shared by the single- and multiple-vacation engines.

With ``k = lam/xi``, ``g = gamma/xi`` and ``m = mu/xi``:

    A(z) = int_0^z exp(-k s) (1-s)^(g-1) ds
    B(z) = int_0^z s^(m-1) (1-s)^(-g-1) (1 - A(s)/A) ds
    C(z) = int_0^z exp(-k s) s^(m-2) ds
    D(z) = int_0^z exp(-k s) s^(m-1) (1-s)^(-1) ds
    E(z) = int_0^z exp(-k s) s^(m-2) (1-s)^(-1) ds

``A = A(1)`` is finite for every ``g > 0``.  ``B``, ``D`` and ``E`` diverge
logarithmically at 1, so they are only exposed on ``z <= 1 - DELTA``; the
finite combinations ``-g B + D/A`` and ``-g B + E/A`` are evaluated through
:func:`~vacqueue.quad.integrate_cancelling`.

The factor ``(1-s)^(-g) (1 - A(s)/A)`` inside ``B`` loses every digit to
cancellation near ``s = 1`` if ``A(s)`` is taken from quadrature.  It equals
``exp(-k) M(g, g+1, k(1-s)) / (g A)`` with ``M`` Kummer's function, whose
series ``sum_n g/(g+n) x^n/n!`` has positive terms for ``s <= 1``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .model import ModelParams
from .quad import (
    DEFAULT_TOL,
    QuadResult,
    WeightedIntegrand,
    integrate,
    integrate_cancelling,
)

DELTA = 1e-6


def _series(x, coef: Callable[[int], float], start: int = 0):
    """``sum_{n>=start} coef(n) x^(n-start) / (n-start)!`` for array (possibly complex) ``x``."""
    x = np.asarray(x)
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    term = np.ones_like(x, dtype=np.result_type(x, float))
    total = coef(start) * term
    i = 0
    while True:
        i += 1
        term = term * x / i
        contribution = coef(start + i) * term
        total = total + contribution
        if i > scale and np.all(np.abs(contribution) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
        if i > 2000:
            break
    return total


def kummer_unit(g: float, x):
    """``M(g, g+1, x) = sum_{n>=0} g/(g+n) x^n/n!``."""
    return _series(x, lambda n: g / (g + n))


def kummer_excess_ratio(g: float, x):
    """``(exp(x) - M(g, g+1, x)) / x = sum_{n>=1} x^(n-1) / ((g+n) (n-1)!)``."""
    return _series(x, lambda n: 1.0 / (g + n), start=1)


@dataclass(frozen=True)
class KernelSet:
    params: ModelParams
    tol: float
    A1: float
    A1_error: float

    @property
    def k(self) -> float:
        return self.params.lam / self.params.xi

    @property
    def g(self) -> float:
        return self.params.gamma / self.params.xi

    @property
    def m(self) -> float:
        return self.params.mu / self.params.xi

    # integrands -------------------------------------------------------
    def a_integrand(self) -> WeightedIntegrand:
        k = self.k
        return WeightedIntegrand(lambda s: np.exp(-k * s), 0.0, self.g - 1.0)

    def phi(self, s):
        """``(1-s)^(-g) (1 - A(s)/A)``, evaluated without cancellation."""
        s = np.asarray(s)
        return math.exp(-self.k) * kummer_unit(self.g, self.k * (1.0 - s)) / (self.g * self.A1)

    def b_integrand(self) -> WeightedIntegrand:
        return WeightedIntegrand(self.phi, self.m - 1.0, -1.0)

    def c_integrand(self) -> WeightedIntegrand:
        k = self.k
        return WeightedIntegrand(lambda s: np.exp(-k * s), self.m - 2.0, 0.0)

    def d_integrand(self) -> WeightedIntegrand:
        k = self.k
        return WeightedIntegrand(lambda s: np.exp(-k * s), self.m - 1.0, -1.0)

    def e_integrand(self) -> WeightedIntegrand:
        k = self.k
        return WeightedIntegrand(lambda s: np.exp(-k * s), self.m - 2.0, -1.0)

    def combined_kernel(self, s):
        """``(-g B'(s) + D'(s)/A) / s^(m-1)`` in closed series form; entire in ``s``."""
        s = np.asarray(s)
        k = self.k
        return (k * math.exp(-k) / self.A1) * kummer_excess_ratio(self.g, k * (1.0 - s))

    # kernel values ----------------------------------------------------
    def A(self, z: float, tol: float | None = None) -> QuadResult:
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"A(z) needs 0 <= z <= 1, got {z}")
        return integrate(self.a_integrand(), 0.0, z, tol or self.tol)

    def A_tail(self, z: float, tol: float | None = None) -> QuadResult:
        """``A - A(z)`` integrated directly over ``[z, 1]``."""
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"A(z) needs 0 <= z <= 1, got {z}")
        return integrate(self.a_integrand(), z, 1.0, tol or self.tol)

    def _raw(self, f: WeightedIntegrand, z: float, name: str, tol: float | None) -> QuadResult:
        if not 0.0 <= z <= 1.0 - DELTA:
            raise DomainError(
                f"{name}(z) diverges at 1; raw evaluation is limited to z <= 1 - {DELTA:g}, got {z}"
            )
        return integrate(f, 0.0, z, tol or self.tol)

    def B(self, z: float, tol: float | None = None) -> QuadResult:
        return self._raw(self.b_integrand(), z, "B", tol)

    def C(self, z: float, tol: float | None = None) -> QuadResult:
        if not 0.0 <= z <= 1.0:
            raise DomainError(f"C(z) needs 0 <= z <= 1, got {z}")
        return integrate(self.c_integrand(), 0.0, z, tol or self.tol)

    def D(self, z: float, tol: float | None = None) -> QuadResult:
        return self._raw(self.d_integrand(), z, "D", tol)

    def E(self, z: float, tol: float | None = None) -> QuadResult:
        return self._raw(self.e_integrand(), z, "E", tol)

    def combined_bd(self, z: float = 1.0, tol: float | None = None) -> QuadResult:
        """``-g B(z) + D(z)/A``, integrated as one finite integrand."""
        return integrate_cancelling(
            [self.b_integrand(), self.d_integrand()], [-self.g, 1.0 / self.A1], 0.0, z, tol or self.tol
        )

    def combined_be(self, z: float = 1.0, tol: float | None = None) -> QuadResult:
        """``-g B(z) + E(z)/A``, integrated as one finite integrand."""
        return integrate_cancelling(
            [self.b_integrand(), self.e_integrand()], [-self.g, 1.0 / self.A1], 0.0, z, tol or self.tol
        )


@functools.lru_cache(maxsize=256)
def kernel_set(params: ModelParams, tol: float = DEFAULT_TOL) -> KernelSet:
    """Kernels for ``params``; cached so both engines share one ``A``.

    The cache key ignores the vacation policy: the kernels do not depend on it.
    """
    return _kernel_set(params.lam, params.mu, params.gamma, params.xi, tol)


@functools.lru_cache(maxsize=256)
def _kernel_set(lam, mu, gamma, xi, tol) -> KernelSet:
    params = ModelParams(lam, mu, gamma, xi)
    k, g = lam / xi, gamma / xi
    res = integrate(WeightedIntegrand(lambda s: np.exp(-k * s), 0.0, g - 1.0), 0.0, 1.0, tol)
    return KernelSet(params, tol, float(res.value), res.abs_error_estimate)
