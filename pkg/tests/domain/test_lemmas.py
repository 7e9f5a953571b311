"""Closed-form determinants and the coupling matrix bound."""

import numpy as np
import pytest

from mpet_lab.domain.lemmas import (
    LemmaViolation,
    coupling_matrix,
    draw_parameters,
    g_matrix_checks,
    lemma3_det,
    lemma3_matrix,
    lemma4_det,
    lemma4_matrix,
    run_lemma_suite,
)
from mpet_lab.domain.parameters import MpetParameters, derive_coefficients


def test_subdiagonal_determinant_examples():
    assert lemma3_det(1.0, [2.0, 3.0, 4.0]) == pytest.approx(-4.0)
    assert lemma3_det(2.5, [1.0, 0.0]) == 0.0
    assert lemma3_det(3.0, [7.0]) == pytest.approx(-7.0)


def test_arrow_determinant_examples():
    assert lemma4_det(3.0, 2.0, [1.0]) == pytest.approx(5.0)
    assert lemma4_det(2.0, 1.0, [1.0, 1.0]) == pytest.approx(0.0, abs=1e-15)
    assert lemma4_det(1.5, 2.0, [0.0, 0.0, 0.0]) == pytest.approx(2.0**3 * 1.5)


@pytest.mark.parametrize("n", range(1, 9))
def test_closed_forms_match_dense_determinants(n):
    rng = np.random.default_rng(n)
    a, c = rng.uniform(0.5, 2.0), rng.standard_normal()
    b = rng.standard_normal(n)

    assert lemma3_det(a, b) == pytest.approx(
        np.linalg.det(lemma3_matrix(a, b)), rel=1e-10, abs=1e-12
    )
    assert lemma4_det(c, a, b) == pytest.approx(
        np.linalg.det(lemma4_matrix(c, a, b)), rel=1e-10, abs=1e-12
    )


def test_coupling_matrix_is_identity_without_coupling():
    params = MpetParameters.create(
        2, phi=0.25, rho=1.0, rho_m=4.0, K=1e15, tau=1e-3, mu=1.0, lam=1.0
    )
    g, b, c = coupling_matrix(derive_coefficients(params))

    np.testing.assert_allclose(g, np.eye(3), atol=1e-10)
    check = g_matrix_checks(params)
    assert check.lambda_max == pytest.approx(1.0, abs=1e-10)


def test_b_squared_matches_the_density_form():
    params = MpetParameters.create(2, phi=[0.1, 0.3], rho=[1.0, 2.0], K=[1e-2, 1.0])
    derived = derive_coefficients(params)
    _, b, _ = coupling_matrix(derived)
    tau = params.tau
    phi, rho = np.array(params.phi), np.array(params.rho)
    rho_m, conductivity = np.array(params.rho_m), np.array(params.K)
    gamma = phi * rho_m + tau * phi / (2.0 * conductivity) - rho
    gamma_u = (1.0 - phi.sum()) * params.rho_s + 1.0 + phi @ gamma
    gamma_max = max(tau**2 * params.mu / 2.0, tau**2 * params.lam / 4.0, gamma_u)
    expected = gamma**2 * phi / ((rho + gamma + phi) * gamma_max)

    np.testing.assert_allclose(b**2, expected, rtol=1e-13)
    assert np.all(rho - phi * rho_m <= 0)


def test_random_draws_satisfy_the_bounds():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        check = g_matrix_checks(draw_parameters(rng, n))
        assert check.sum_b2 <= 1.0 + 1e-12
        assert check.lambda_max <= 2.0 + 1e-12


def test_suite_reports_every_draw():
    results = run_lemma_suite(draws=100, seed=7)

    assert set(results) == {"lemma3", "lemma4", "g_matrix"}
    for result in results.values():
        assert result.total == 100
        assert result.ok, result.failures[:3]


def test_violation_is_an_assertion():
    assert issubclass(LemmaViolation, AssertionError)
