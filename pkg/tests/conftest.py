from __future__ import annotations

import functools

import pytest

from vacqueue.model import ModelParams, Policy
from vacqueue.oracle import oracle_measures, solve_sojourn, stationary

STANDARD = dict(lam=0.5, mu=1.0, gamma=0.5, xi=0.2)

# lambda x gamma x xi with mu = 1; every point has rho < 1 and xi < mu
GRID = [
    (lam, 1.0, gamma, xi)
    for lam in (0.3, 0.5, 0.8)
    for gamma in (0.3, 1.0, 3.0)
    for xi in (0.1, 0.3, 0.6)
]


@functools.lru_cache(maxsize=None)
def oracle_table(params: ModelParams, n_trunc: int = 400):
    return stationary(params, n_trunc)


@functools.lru_cache(maxsize=None)
def oracle_report(params: ModelParams, n_trunc: int = 400):
    return oracle_measures(oracle_table(params, n_trunc))


@functools.lru_cache(maxsize=None)
def oracle_sojourn(params: ModelParams, n_trunc: int = 400):
    return solve_sojourn(params, n_trunc)


@pytest.fixture
def sv_params() -> ModelParams:
    return ModelParams(**STANDARD)


@pytest.fixture
def mv_params() -> ModelParams:
    return ModelParams(**STANDARD, policy=Policy.MULTIPLE)
