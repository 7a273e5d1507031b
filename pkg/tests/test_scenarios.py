import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexbundle.errors import DomainError, InvalidConfig
from indexbundle.scenarios import (
    J2,
    ScenarioConfig,
    analytic_solution_minus,
    analytic_solution_plus,
    build_family,
    e1,
    e2,
    moebius_family,
    pejsachowicz_family,
    s_theta,
)

angles = st.floats(-20, 20, allow_nan=False)


def test_s_theta_values():
    np.testing.assert_array_equal(s_theta(0.0), [[1, 0], [0, -1]])
    np.testing.assert_allclose(s_theta(np.pi / 2), [[0, 1], [1, 0]], atol=1e-16)


@settings(max_examples=100)
@given(angles)
def test_s_theta_identities(theta):
    S = s_theta(theta)
    np.testing.assert_allclose(S @ S, np.eye(2), atol=1e-12)
    assert np.linalg.det(S) == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_allclose(S @ e2(theta), e2(theta), atol=1e-12)
    np.testing.assert_allclose(S @ e1(theta), -e1(theta), atol=1e-12)
    np.testing.assert_allclose(s_theta(theta + 2 * np.pi), S, atol=1e-12)


def test_moebius_limits_and_midpoint():
    fam = moebius_family(a_plus=2.0, a_minus=0.5)
    th = 1.1
    np.testing.assert_allclose(fam.evaluate([th], 60.0), 2.0 * J2 @ s_theta(th), atol=1e-12)
    np.testing.assert_allclose(fam.evaluate([th], -60.0), 0.5 * J2 @ s_theta(0.0), atol=1e-12)
    np.testing.assert_allclose(fam.asymptotic_plus([th]), 2.0 * J2 @ s_theta(th))
    np.testing.assert_allclose(fam.asymptotic_minus([th]), 0.5 * J2 @ s_theta(0.0))
    mid = (0.5 * J2 @ s_theta(0.0) + 2.0 * J2 @ s_theta(th)) / 2
    np.testing.assert_allclose(fam.evaluate([th], 0.0), mid, atol=1e-15)


def test_moebius_inert_coordinates_ignored():
    fam = moebius_family(inert_dims=2)
    assert fam.torus_dim == 3
    np.testing.assert_allclose(fam.evaluate([0.3, -1.0, 0.7], 0.2), fam.evaluate([2.0, 1.0, 0.7], 0.2))


def test_pejsachowicz_values():
    fam = pejsachowicz_family(2)
    np.testing.assert_allclose(fam.evaluate([np.pi / 4, np.pi / 4], 1.0), (np.pi / 4) * J2 @ s_theta(np.pi / 2), atol=1e-15)
    np.testing.assert_array_equal(fam.evaluate([0.4, 1.0], 0.0), np.zeros((2, 2)))
    np.testing.assert_allclose(fam.asymptotic_plus([0.4, 1.0]), (np.pi / 2) * J2 @ s_theta(1.4))
    np.testing.assert_allclose(fam.evaluate([0.4, 1.0], -1.0), -(np.pi / 4) * J2 @ s_theta(0.0))
    assert fam.breakpoints == (0.0,)


def test_batch_evaluation_matches_pointwise():
    fam = pejsachowicz_family(3)
    pts = np.random.default_rng(0).uniform(-np.pi, np.pi, (5, 3))
    for t in (-2.0, 0.5):
        np.testing.assert_allclose(fam.evaluate_batch(pts, t), [fam.evaluate(p, t) for p in pts])


def test_analytic_solutions_at_zero():
    np.testing.assert_allclose(analytic_solution_minus([0.3], 0.0), [1.0, 0.0])
    np.testing.assert_allclose(analytic_solution_plus([0.3, 0.5], 0.0), [np.cos(0.4), np.sin(0.4)])
    with pytest.raises(DomainError):
        analytic_solution_minus([0.0], 1.0)
    with pytest.raises(DomainError):
        analytic_solution_plus([0.0], -1.0)


def central_derivative(f, t, h=1e-4):
    return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)


@pytest.mark.parametrize("point", [[0.0], [1.3], [0.5, -2.0]])
def test_analytic_solutions_solve_interior(point):
    fam = pejsachowicz_family(len(point))
    for t in (-3.0, -0.7):
        u = lambda s: analytic_solution_minus(point, s)
        r = J2 @ central_derivative(u, t) + fam.evaluate(point, t) @ u(t)
        assert np.linalg.norm(r) < 1e-9
    for t in (0.7, 3.0):
        u = lambda s: analytic_solution_plus(point, s)
        r = J2 @ central_derivative(u, t) + fam.evaluate(point, t) @ u(t)
        assert np.linalg.norm(r) < 1e-9


def test_scenario_config_validation():
    assert build_family(ScenarioConfig("pejsachowicz", m=3)).torus_dim == 3
    assert build_family(ScenarioConfig("moebius")).describe()["family"] == "moebius"
    for bad in (dict(name="nope"), dict(name="moebius", a_plus=0.0), dict(name="pejsachowicz", m=0)):
        with pytest.raises(InvalidConfig):
            ScenarioConfig(**bad)
