import math

import numpy as np
import pytest

from newtonmr.linalg import eigh, spectral_norm
from newtonmr.perturb import (DIAGNOSTIC_COLUMNS, PerturbationSpec, RegimeError, SpectralDiagnostics,
                              TheoryConstants, delta_gate, diagnostics_csv, diagnostics_row,
                              epsilon_thresholds, measure_diagnostics, predicted_eta,
                              predicted_gamma_tilde, predicted_local_constants, predicted_nu_tilde,
                              predicted_teps, projected_gradient_gap, sample_goe, subspace_sin)


def diag(gamma=1.0, nu=1.0, eps=0.1, acute=False, C=1.0):
    return SpectralDiagnostics(gamma=gamma, nu=nu, epsilon=eps, C_const=C, r=1,
                               r_tilde=1 if acute else 2, acute=acute)


def test_sample_goe():
    assert np.all(sample_goe(5, 0.0, 1) == 0.0)
    E = sample_goe(2, 0.5, 3)
    assert np.array_equal(E, E.T)
    assert abs(spectral_norm(E) - 0.5) <= 1e-10 * 0.5
    E1, E2 = sample_goe(50, 1.0, 1), sample_goe(50, 1.0, 2)
    assert np.linalg.norm(E1 - E2) > 0
    np.testing.assert_array_equal(E1, sample_goe(50, 1.0, 1))


def test_perturbation_spec():
    with pytest.raises(ValueError):
        PerturbationSpec("goe", -1.0)
    with pytest.raises(ValueError):
        PerturbationSpec("fixed_matrix", 0.1)
    with pytest.raises(ValueError):
        PerturbationSpec("laplace", 0.1)
    assert np.all(PerturbationSpec().draw(3) == 0)
    E = PerturbationSpec("fixed_matrix", 0.2, matrix=np.diag([4.0, -1.0])).draw(2)
    np.testing.assert_allclose(E, np.diag([0.2, -0.05]))


def test_measure_diagnostics_examples():
    d = measure_diagnostics(np.diag([1.0, 0.0]), np.diag([1.0, 0.5]), [1.0, 0.0])
    assert (d.gamma, d.nu, d.epsilon, d.r, d.r_tilde, d.acute) == (1.0, 1.0, 0.5, 1, 2, False)
    H = np.diag([1.0, 0.0])
    d = measure_diagnostics(H, H, [3.0, 1.0])
    assert d.epsilon == 0.0 and d.acute and d.C_const == 0.0
    assert d.nu == pytest.approx(0.9, abs=1e-15)


def test_measure_diagnostics_degenerate():
    d = measure_diagnostics(np.zeros((2, 2)), np.zeros((2, 2)), [0.0, 0.0])
    assert d.nu == 1.0 and not d.gamma_defined and math.isnan(d.gamma)


def test_predicted_teps():
    assert predicted_teps(diag(eps=0.1)) == pytest.approx(0.4)
    assert predicted_teps(diag(eps=0.1, acute=True)) == pytest.approx(0.2)
    assert predicted_teps(diag(nu=0.75, eps=0.0)) == pytest.approx(0.5)
    with pytest.raises(RegimeError):
        predicted_teps(diag(eps=1.0))


def test_predicted_nu_tilde():
    assert predicted_nu_tilde(diag(eps=0.1)) == pytest.approx(0.6)
    assert predicted_nu_tilde(diag(eps=0.1, acute=True)) == pytest.approx(0.8)
    with pytest.raises(RegimeError, match="0.05"):
        predicted_nu_tilde(diag(nu=0.6, eps=0.1))


def test_predicted_gamma_tilde():
    assert predicted_gamma_tilde(diag(eps=0.1, acute=True)) == pytest.approx(0.9)
    assert predicted_gamma_tilde(diag(eps=0.1)) == pytest.approx(1 / (1 / 0.9 + 2), abs=1e-12)
    assert predicted_gamma_tilde(diag(eps=0.1)) == pytest.approx(0.32143, abs=1e-5)
    small = predicted_gamma_tilde(diag(nu=8 / 9, eps=1e-8))
    large = predicted_gamma_tilde(diag(nu=8 / 9, eps=1e-2))
    assert small < large
    with pytest.raises(RegimeError):
        predicted_gamma_tilde(diag(eps=1.5))


def test_predicted_eta():
    # acute: nu_tilde = 1 - 0.2 = 0.8, gamma_tilde = 0.9 as in the worked example
    d = diag(eps=0.1, acute=True)
    tc = TheoryConstants(L_x0=10.0, rho=0.25)
    expected = 4 * 0.25 * 0.8 * 0.81 / 10 * (0.75 * 0.8 - 0.1 / 0.9)
    assert predicted_eta(tc, d) == pytest.approx(expected, rel=1e-14)
    assert predicted_eta(tc, d) == pytest.approx(0.03168, abs=1e-5)
    # clamp branch: (1 - rho) nu~ <= eps / gamma~
    assert predicted_eta(TheoryConstants(rho=0.99), d) == 0.0
    # theta = 1 - nu~ gives the same value bit-for-bit
    nt = predicted_nu_tilde(d)
    tci = TheoryConstants(L_x0=10.0, rho=0.25, theta=1.0 - nt)
    assert predicted_eta(tci, d, "inexact") == predicted_eta(tc, d, "exact")
    with pytest.raises(ValueError):
        predicted_eta(tc, d, "other")


def test_predicted_local_constants():
    d0 = SpectralDiagnostics(gamma=1.0, nu=1.0, epsilon=0.0, C_const=0.0, r=1, r_tilde=1, acute=True)
    assert predicted_local_constants(TheoryConstants(L_H=2.0), d0) == (1.0, 0.0)
    d = diag(eps=0.1, acute=True)
    c1, c2 = predicted_local_constants(TheoryConstants(L_H=2.0), d)
    assert c1 == pytest.approx(2 / (2 * 0.81), abs=1e-12)
    assert c1 == pytest.approx(1.2346, abs=1e-4)
    assert c2 == pytest.approx(0.1 / 0.9 + math.sqrt(0.2), abs=1e-12)
    assert c2 == pytest.approx(0.5583, abs=1e-4)
    _, c2i = predicted_local_constants(TheoryConstants(L_H=2.0, theta=0.04), d, "inexact")
    assert c2i == pytest.approx(0.1 / 0.9 + 0.2, abs=1e-12)
    assert c2i == pytest.approx(0.3111, abs=1e-4)


def test_epsilon_thresholds():
    d = SpectralDiagnostics(gamma=1.0, nu=1.0, epsilon=0.0, C_const=1.0, r=1, r_tilde=1, acute=True)
    th = epsilon_thresholds(d, 0.5)
    assert th["general_bound"] == pytest.approx((5.5 - math.sqrt(22.25)) / 8, abs=1e-14)
    assert th["general_bound"] == pytest.approx(0.09789, abs=5e-5)  # quoted value is rounded
    assert th["delta_C"] == pytest.approx(math.sqrt(3) / 2, abs=1e-14)
    # the implicit acute bound solves eps = (1 - rho)(gamma - eps)(nu gamma - 2 eps)/gamma
    e = th["acute_eta_bound"]
    assert 0 < e < 0.5
    assert abs(0.5 * (1 - e) * (1 - 2 * e) - e) <= 1e-10
    # eps = 0 strictly satisfies the acute inequality
    assert 0.0 < (1 - 0.5) * 1.0 * 1.0 / 1.0
    # b <= 0 (nu too small) means no admissible general eps
    d_bad = SpectralDiagnostics(gamma=1.0, nu=0.5, epsilon=0.0, C_const=1.0, r=1, r_tilde=1, acute=True)
    assert epsilon_thresholds(d_bad, 0.5)["general_bound"] == 0.0


def test_delta_gate():
    assert delta_gate(1.0, 0.5) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)


def test_subspace_sin(rng):
    U = np.eye(2)[:, :1]
    assert subspace_sin(U, U) == 0.0
    assert subspace_sin(U, np.eye(2)[:, 1:]) == pytest.approx(1.0)
    A, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    B, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    oracle = np.max(np.abs(np.linalg.eigvalsh(A @ A.T - B @ B.T)))
    assert subspace_sin(A, B) == pytest.approx(oracle, abs=1e-12)
    with pytest.raises(ValueError):
        subspace_sin(A, B[:, :1])


def test_projected_gradient_gap():
    H = np.diag([1.0, 0.0])
    assert projected_gradient_gap(H, H, [1.0, 2.0]) == 0.0
    assert projected_gradient_gap(H, np.diag([1.0, 0.3]), [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert projected_gradient_gap(H, np.diag([1.0, 0.3]), [0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        projected_gradient_gap(H, H, [0.0, 0.0])


def test_diagnostics_row_and_csv():
    d = measure_diagnostics(np.diag([2.0, 1.0, 0.0]), np.diag([2.0, 1.05, 0.0]), [1.0, 1.0, 0.1])
    row = diagnostics_row(d, TheoryConstants(L_x0=4.0, L_H=1.0))
    assert tuple(row) == DIAGNOSTIC_COLUMNS
    assert row["acute"] == 1 and 0 <= row["eta"] <= 1
    text = diagnostics_csv([row])
    assert text.splitlines()[0] == ",".join(DIAGNOSTIC_COLUMNS)
    # outside the regime the rate columns are NaN rather than an exception
    far = measure_diagnostics(np.diag([1.0, 0.0]), np.diag([1.0, 5.0]), [1.0, 1.0])
    assert math.isnan(diagnostics_row(far, TheoryConstants())["eta"])


def test_C_constant_floor():
    d = measure_diagnostics(np.diag([1.0, 0.5]), np.diag([1.01, 0.5]), [1.0, 1.0])
    assert d.C_measured < 1.0 and d.C_const == 1.0
