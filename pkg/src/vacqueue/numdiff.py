"""Numerical differentiation and coefficient extraction for generating functions."""

from __future__ import annotations

from typing import Callable

import numpy as np


def richardson_left_derivative(
    f: Callable[[float], float], x: float, fx: float | None = None, h0: float = 0.1, levels: int = 6
) -> tuple[float, float]:
    """Derivative at ``x`` from one-sided differences on ``[x - h, x]``.

    Step sizes ``h0 / 2**i`` feed a Richardson table that removes the
    ``h, h^2, ...`` error terms.  Returns ``(estimate, error_estimate)``.
    """
    if fx is None:
        fx = f(x)
    table: list[list[float]] = []
    for i in range(levels):
        h = h0 / 2**i
        row = [(fx - f(x - h)) / h]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (2**j - 1))
        table.append(row)
    best = table[-1][-1]
    err = abs(best - table[-1][-2]) if levels > 1 else float("inf")
    return best, err


def taylor_coefficients(
    f: Callable[[complex], complex], orders: int, radius: float = 0.5, points: int = 32
) -> np.ndarray:
    """Coefficients ``a_0..a_{orders-1}`` of a function analytic on ``|z| <= radius``.

    Trapezoidal rule for the Cauchy integral on the circle, i.e. the
    discrete Fourier transform of samples ``f(radius * w^j)``.  Aliasing
    error is ``a_{n+points} radius^points``.
    """
    if orders > points:
        raise ValueError("need points >= orders")
    z = radius * np.exp(2j * np.pi * np.arange(points) / points)
    values = np.array([f(zj) for zj in z], dtype=complex)
    coeffs = np.fft.fft(values) / points
    n = np.arange(orders)
    return (coeffs[:orders] / radius**n).real
