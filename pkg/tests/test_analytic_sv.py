from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import oracle_report, oracle_sojourn, oracle_table
from vacqueue.analytic_sv import (
    SingleVacationModel,
    sojourn_00_printed,
    sojourn_vacation_sum,
    sv_boundary,
    sv_kernels,
    sv_measures,
    sv_p00,
    sv_pgf0,
    sv_pgf1,
    sv_sojourn_busy,
    sv_sojourn_vacation,
)
from vacqueue.errors import DomainError, ValidationError
from vacqueue.model import ModelParams

SV_GRID_81 = [
    (lam, mu, gamma, xi)
    for lam in (0.3, 0.5, 0.8)
    for mu in (1.0, 1.5, 2.0)
    for gamma in (0.3, 1.0, 3.0)
    for xi in (0.1, 0.3, 0.6)
]


def test_kernels_vanish_at_zero(sv_params) -> None:
    k = sv_kernels(sv_params)
    for fn in (k.A_of, k.B_of, k.C_of, k.D_of):
        assert fn(0.0).value == 0.0


def test_a_is_monotone_and_bounded(sv_params) -> None:
    k = sv_kernels(sv_params)
    values = [k.A_of(z).value for z in np.linspace(0, 1, 11)]
    assert np.all(np.diff(values) > 0)
    assert 0 < k.A1 <= sv_params.xi / sv_params.gamma
    assert k.A_of(0.5).value < k.A1


def test_a_without_arrivals_limit() -> None:
    k = sv_kernels(ModelParams(1e-9, 1, 0.5, 0.2))
    assert k.A1 == pytest.approx(0.2 / 0.5, rel=1e-8)


def test_divergent_kernels_refuse_one(sv_params) -> None:
    k = sv_kernels(sv_params)
    with pytest.raises(DomainError):
        k.B_of(1.0)
    with pytest.raises(DomainError):
        k.D_of(1 - 1e-7)
    assert math.isfinite(k.combined_BD.value)


def test_analytic_validation_is_enforced() -> None:
    with pytest.raises(ValidationError):
        SingleVacationModel(ModelParams(0.5, 1, 0.5, 1.0))
    with pytest.raises(ValidationError):
        SingleVacationModel(ModelParams(1.5, 1, 0.5, 0.2))


@pytest.mark.parametrize("params", [(0.5, 1, 0.5, 0.2), (0.1, 1, 2, 0.05)])
def test_p00_matches_oracle(params) -> None:
    p = ModelParams(*params)
    assert sv_p00(p) == pytest.approx(oracle_table(p).prob(0, 0), abs=1e-6)


def test_p00_follows_oracle_shape_in_arrival_rate() -> None:
    # p00 is not monotone in lam: p10 = (gamma/lam) p00 forces p00 -> 0 as lam -> 0
    lams = np.round(np.arange(0.1, 0.95, 0.1), 10)
    analytic = np.array([sv_p00(ModelParams(lam, 1, 0.5, 0.2)) for lam in lams])
    oracle = np.array([oracle_table(ModelParams(lam, 1, 0.5, 0.2)).prob(0, 0) for lam in lams])
    np.testing.assert_allclose(analytic, oracle, rtol=0, atol=1e-6)
    assert np.array_equal(np.sign(np.diff(analytic)), np.sign(np.diff(oracle)))
    assert np.diff(analytic)[0] > 0 and np.diff(analytic)[-1] < 0
    assert sv_p00(ModelParams(1e-4, 1, 0.5, 0.2)) < 1e-3


def test_boundary_relations(sv_params) -> None:
    b = sv_boundary(sv_params)
    k = sv_kernels(sv_params)
    assert b.p10 == pytest.approx(sv_params.gamma / sv_params.lam * b.p00, rel=1e-15)
    assert b.p11 == pytest.approx(sv_params.xi / (sv_params.mu * k.A1) * b.p00, rel=1e-15)


def test_pgf_at_zero(sv_params) -> None:
    assert sv_pgf0(sv_params, 0.0).value == sv_p00(sv_params)
    assert sv_pgf1(sv_params, 0.0).value == sv_boundary(sv_params).p10
    # the closed form approaches the same limit from the right
    assert sv_pgf1(sv_params, 1e-4).value == pytest.approx(sv_boundary(sv_params).p10, abs=1e-4)


@pytest.mark.parametrize("z", [0.2, 0.5, 0.8])
def test_pgfs_match_oracle_partial_sums(sv_params, z: float) -> None:
    table = oracle_table(sv_params)
    p0, p1 = sv_pgf0(sv_params, z), sv_pgf1(sv_params, z)
    assert p0.value == pytest.approx(table.pgf(0, z), abs=1e-6)
    assert p1.value == pytest.approx(table.pgf(1, z), abs=1e-6)
    assert 0 <= p0.value <= 1 and 0 <= p1.value <= 1
    assert p1.abs_error_estimate < 1e-8


def test_pgf_refuses_one(sv_params) -> None:
    with pytest.raises(DomainError):
        sv_pgf0(sv_params, 1.0)
    with pytest.raises(DomainError):
        sv_pgf1(sv_params, 1.0)
    with pytest.raises(DomainError):
        sv_pgf0(sv_params, 1 - 1e-8)


def test_taylor_coefficients_nonnegative_and_match_oracle(sv_params) -> None:
    model = SingleVacationModel(sv_params)
    table = oracle_table(sv_params)
    for phase in (0, 1):
        coeffs = model.taylor_coefficients(phase, 6)
        assert np.all(coeffs >= -1e-9)
        np.testing.assert_allclose(coeffs, table.probs[phase, :6], rtol=0, atol=1e-6)


def test_normalisation_limit(sv_params) -> None:
    totals = [
        sv_pgf0(sv_params, 1 - 10.0**-k).value + sv_pgf1(sv_params, 1 - 10.0**-k).value for k in range(2, 7)
    ]
    # P0 + P1 is smooth at 1, so one Richardson step in h = 10^-k removes the linear term
    extrapolated = (10 * totals[-1] - totals[-2]) / 9
    assert extrapolated == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(totals) > 0)


def test_measures_match_oracle(sv_params) -> None:
    analytic = sv_measures(sv_params)
    oracle = oracle_report(sv_params)
    for name, value in analytic.measures().items():
        expected = getattr(oracle, name)
        assert value == pytest.approx(expected, abs=1e-5), name


def test_measure_identities(sv_params) -> None:
    r = sv_measures(sv_params)
    assert r.p_vac + r.p_idle + r.p_ser == pytest.approx(1.0, abs=1e-8)
    p = sv_params
    assert r.mean_n0 == pytest.approx(p.lam / (p.gamma + p.xi) * r.p_vac, rel=1e-15)
    assert r.extra["mean_n1_flow_balance"] == pytest.approx(r.mean_n1, abs=1e-9)
    assert r.extra["mean_n1_richardson_error"] < 1e-8


def test_published_formulas_are_reported_not_used(sv_params) -> None:
    r = sv_measures(sv_params)
    oracle = oracle_report(sv_params)
    # the printed mean and the printed serving probability both miss the chain's values
    assert abs(r.extra["mean_n1_published_formula"] - oracle.mean_n1) > 1e-2
    assert abs(r.extra["p_ser_published_formula"] - oracle.p_ser) > 1e-2
    # with the sign of the vacation term flipped the printed serving probability is right
    p00, A = r.p00, r.extra["A"]
    fixed = 1 - p00 * (sv_params.gamma / sv_params.lam + sv_params.xi / (sv_params.gamma * A))
    assert fixed == pytest.approx(oracle.p_ser, abs=1e-9)


@pytest.mark.parametrize("params", SV_GRID_81)
def test_oracle_equivalence_grid(params) -> None:
    p = ModelParams(*params)
    analytic = sv_measures(p)
    oracle = oracle_report(p)
    for name in ("p00", "p10", "p11", "p_vac", "p_idle"):
        assert getattr(analytic, name) == pytest.approx(getattr(oracle, name), abs=1e-6), name


def test_small_impatience_approaches_classical_queue() -> None:
    classical = oracle_report(ModelParams(0.5, 1, 0.5, 0.0))
    gaps = []
    for xi in (0.1, 0.05, 0.02):
        r = sv_measures(ModelParams(0.5, 1, 0.5, xi))
        gaps.append([abs(getattr(r, n) - getattr(classical, n)) for n in ("p00", "p_vac", "p_idle", "mean_n0")])
    gaps = np.array(gaps)
    assert np.all(np.diff(gaps, axis=0) < 0)
    assert np.all(gaps[-1] < 5e-2)


def test_sojourn_busy_values() -> None:
    p = ModelParams(0.5, 1, 0.5, 0.2)
    assert sv_sojourn_busy(p, 0) == 1.0
    assert sv_sojourn_busy(p, 3) == pytest.approx(2.5)
    patient = ModelParams(0.5, 1.3, 0.5, 0.0)
    for n in range(10):
        assert sv_sojourn_busy(patient, n) == pytest.approx((n + 1) / 1.3)


def test_sojourn_vacation_values(sv_params) -> None:
    p = sv_params
    assert sv_sojourn_vacation(p, 0) == pytest.approx(1 / (p.gamma + p.xi) + p.gamma / ((p.gamma + p.xi) * p.mu))
    fast = p.replace(gamma=1e9)
    for n in range(6):
        assert sv_sojourn_vacation(fast, n) == pytest.approx(sv_sojourn_busy(fast, n), rel=1e-6)


def test_sojourn_sum_forms(sv_params) -> None:
    for n in range(11):
        assert sojourn_vacation_sum(sv_params, n) == pytest.approx(sv_sojourn_vacation(sv_params, n), abs=1e-12)
    # the printed sum only agrees when the busy denominators coincide
    assert sojourn_vacation_sum(sv_params, 0, printed=True) == pytest.approx(sv_sojourn_vacation(sv_params, 0))
    assert abs(sojourn_vacation_sum(sv_params, 4, printed=True) - sv_sojourn_vacation(sv_params, 4)) > 1e-3
    assert abs(sojourn_00_printed(sv_params) - sv_sojourn_vacation(sv_params, 0)) > 1e-3


def test_sojourn_recursion_matches_first_step_system(sv_params) -> None:
    system = oracle_sojourn(sv_params)
    for n in range(21):
        assert sv_sojourn_vacation(sv_params, n) == pytest.approx(system(0, n), abs=1e-8)
        assert sv_sojourn_busy(sv_params, n) == pytest.approx(system(1, n), abs=1e-10)


valid = st.tuples(
    st.floats(0.05, 0.95), st.floats(0.1, 3.0), st.floats(0.05, 0.95)
).map(lambda t: (t[0], 1.0, t[1], t[2]))


@settings(max_examples=20, deadline=None)
@given(valid)
def test_probabilities_are_probabilities(params) -> None:
    p = ModelParams(*params)
    assume(p.xi < p.mu)
    r = sv_measures(p)
    for name in ("p00", "p10", "p11", "p_vac", "p_idle", "p_ser", "fraction_served"):
        assert 0 <= getattr(r, name) <= 1, name
    assert r.p_vac + r.p_idle + r.p_ser == pytest.approx(1, abs=1e-8)
    assert r.mean_n0 >= 0 and r.mean_n1 >= 0
    assert r.extra["A"] < p.xi / p.gamma
