from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vacqueue.errors import InvalidState, ValidationError
from vacqueue.model import (
    BalanceVariant,
    Engine,
    ModelParams,
    Policy,
    QueueState,
    rate_of,
    states,
    transitions,
    validate,
)

rates = st.floats(min_value=0.05, max_value=5.0, allow_nan=False)


def test_validate_accepts_standard_point() -> None:
    assert validate(ModelParams(0.5, 1, 0.5, 0.2), Engine.ANALYTIC).ok


def test_validate_rejects_xi_not_below_mu() -> None:
    result = validate(ModelParams(0.5, 1, 0.5, 1.5), Engine.ANALYTIC)
    assert not result.ok
    assert [cond for cond, _ in result.violations] == ["xi < mu"]
    assert "xi=1.5" in result.violations[0][1]


def test_validate_xi_equal_mu_rejected() -> None:
    assert not validate(ModelParams(0.5, 1, 0.5, 1.0), Engine.ANALYTIC).ok


def test_oracle_needs_only_positivity() -> None:
    assert validate(ModelParams(2, 1, 0.5, 0.2), Engine.ORACLE).ok
    assert not validate(ModelParams(2, 1, 0.5, 0.2), Engine.ANALYTIC).ok


def test_oracle_without_impatience_needs_stability() -> None:
    assert validate(ModelParams(0.5, 1, 0.5, 0.0), Engine.ORACLE).ok
    assert not validate(ModelParams(1.5, 1, 0.5, 0.0), Engine.SIMULATION).ok


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lam=0, mu=1, gamma=1, xi=0.1),
        dict(lam=1, mu=-1, gamma=1, xi=0.1),
        dict(lam=1, mu=1, gamma=float("inf"), xi=0.1),
        dict(lam=1, mu=1, gamma=1, xi=float("nan")),
        dict(lam=1, mu=1, gamma=1, xi=0.1, servers=0),
        dict(lam=1, mu=1, gamma=1, xi=0.1, servers=2, policy="multiple"),
    ],
)
def test_params_reject_bad_values(kwargs) -> None:
    with pytest.raises(ValidationError):
        ModelParams(**kwargs)


def test_single_server_rates() -> None:
    p = ModelParams(0.5, 1, 0.5, 0.2)
    assert rate_of(p, QueueState(1, 1), QueueState(0, 0)) == 1.0
    assert rate_of(p, QueueState(0, 0), QueueState(1, 0)) == 0.5
    assert rate_of(p, QueueState(0, 4), QueueState(0, 3)) == pytest.approx(4 * 0.2)
    assert rate_of(p, QueueState(1, 4), QueueState(1, 3)) == pytest.approx(1 + 3 * 0.2)
    assert rate_of(p, QueueState(1, 4), QueueState(1, 5)) == 0.5
    assert rate_of(p, QueueState(0, 3), QueueState(1, 3)) == 0.5
    assert rate_of(p, QueueState(0, 3), QueueState(1, 5)) == 0.0


def test_multiple_vacation_never_enters_idle_state() -> None:
    p = ModelParams(0.5, 1, 0.5, 0.2, policy=Policy.MULTIPLE)
    with pytest.raises(InvalidState):
        rate_of(p, QueueState(0, 0), QueueState(1, 0))
    for s in states(p, 30):
        assert all(t.target != QueueState(1, 0) for t in transitions(p, s))
    assert rate_of(p, QueueState(1, 1), QueueState(0, 0)) == 1.0
    # no vacation end from the empty vacation state
    assert [t.target for t in transitions(p, QueueState(0, 0))] == [QueueState(0, 1)]


def test_three_servers_reneging_on_vacation() -> None:
    p = ModelParams(1.5, 1, 0.5, 0.2, servers=3)
    assert rate_of(p, QueueState(0, 2), QueueState(0, 1)) == pytest.approx(0.4)
    assert rate_of(p, QueueState(0, 2), QueueState(1, 2)) == pytest.approx(1.5)
    assert rate_of(p, QueueState(2, 5), QueueState(2, 4)) == pytest.approx(2 * 1 + 3 * 0.2)
    assert rate_of(p, QueueState(2, 2), QueueState(1, 1)) == pytest.approx(2.0)
    assert rate_of(p, QueueState(3, 1), QueueState(2, 0)) == pytest.approx(1.0)


def test_literal_variant_uses_diagram_labels() -> None:
    p = ModelParams(1.5, 1, 0.5, 0.2, servers=3)
    lit = BalanceVariant.LITERAL
    assert rate_of(p, QueueState(0, 0), QueueState(1, 0), lit) == pytest.approx(1.0)
    assert rate_of(p, QueueState(0, 3), QueueState(1, 3), lit) == pytest.approx(1.5)
    assert rate_of(p, QueueState(1, 3), QueueState(2, 3), lit) == pytest.approx(1.0)
    assert rate_of(p, QueueState(2, 3), QueueState(3, 3), lit) == pytest.approx(1.0)
    assert rate_of(p, QueueState(2, 3), QueueState(3, 3)) == pytest.approx(0.5)


def _balance_diagonal(p: ModelParams, j: int, n: int) -> float:
    """Outflow coefficient of p_{j,n} as written in the balance equations."""
    lam, mu, gamma, xi, c = p.lam, p.mu, p.gamma, p.xi, p.servers
    if c == 1 and p.policy is Policy.SINGLE:
        if j == 0:
            return lam + gamma + n * xi
        return lam if n == 0 else lam + mu + (n - 1) * xi
    if c == 1:
        if j == 0:
            return lam if n == 0 else lam + gamma + n * xi
        return lam + mu + (n - 1) * xi
    up = (c - j) * gamma
    if j == 0:
        return lam + up + n * xi
    if n <= j:
        return lam + up + n * mu
    return lam + up + j * mu + (n - j) * xi


@pytest.mark.parametrize(
    "servers, policy",
    [(1, Policy.SINGLE), (1, Policy.MULTIPLE), (2, Policy.SINGLE), (3, Policy.SINGLE), (4, Policy.SINGLE)],
)
def test_outflow_matches_balance_diagonals(servers: int, policy: Policy) -> None:
    p = ModelParams(0.7, 1.3, 0.4, 0.25, servers=servers, policy=policy)
    for s in states(p, 20):
        out = sum(t.rate for t in transitions(p, s))
        assert out == pytest.approx(_balance_diagonal(p, s.phase, s.count), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(lam=rates, mu=rates, gamma=rates, xi=rates, servers=st.integers(1, 4))
def test_transitions_have_no_self_loops_and_positive_rates(lam, mu, gamma, xi, servers) -> None:
    p = ModelParams(lam, mu, gamma, xi, servers=servers)
    for s in states(p, 12):
        for t in transitions(p, s):
            assert t.rate > 0
            assert t.target != t.source
            assert abs(t.target.count - s.count) <= 1


def test_truncation_blocks_arrivals() -> None:
    p = ModelParams(0.5, 1, 0.5, 0.2)
    targets = [t.target for t in transitions(p, QueueState(1, 10), max_count=10)]
    assert QueueState(1, 11) not in targets
