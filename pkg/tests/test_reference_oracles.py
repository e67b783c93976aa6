import numpy as np
import pytest
from numpy.testing import assert_allclose

from xxzbath.bethe_core import ChainSpec, MagnonState, ResourceCapError
from xxzbath.reference_oracles import (
    AccuracyError, bilateral_cnot_round, build_sector_hamiltonian, eigenstate_residual,
    matrix_exponential_small, ode_integrate, pv_quadrature, sector_spectrum, translation_operator,
)


def test_two_site_ring():
    H = build_sector_hamiltonian(2, 1, 0.7).matrix
    assert_allclose(H, [[0.7, -2.0], [-2.0, 0.7]])


def test_vacuum_block():
    assert_allclose(build_sector_hamiltonian(4, 0, 1.5).matrix, [[-3.0]])


def test_bond_counting_diagonal():
    # N=5, one magnon: two anti-aligned bonds
    H = build_sector_hamiltonian(5, 1, 1.0).matrix
    assert_allclose(np.diag(H), -2.5 + 2.0)
    assert_allclose(H, H.T)


def test_hamiltonian_commutes_with_translation():
    for N, l in ((8, 2), (9, 3)):
        H = build_sector_hamiltonian(N, l, -0.3).matrix
        T = translation_operator(N, l)
        assert np.max(np.abs(H @ T - T @ H)) < 1e-14


def test_sector_caps():
    with pytest.raises(ResourceCapError):
        build_sector_hamiltonian(17, 2, 0.0)
    with pytest.raises(ResourceCapError):
        build_sector_hamiltonian(13, 4, 0.0)


def test_plane_wave_residual():
    st = MagnonState.one_magnon(ChainSpec(5, 0.4), 2 * np.pi / 5)
    assert eigenstate_residual(st) < 1e-12
    assert eigenstate_residual(MagnonState.vacuum(ChainSpec(5, 0.4))) == 0.0


def test_bound_residual_at_twelve_sites():
    assert eigenstate_residual(MagnonState.bound(ChainSpec(12, 3.0))) < 1e-8


def test_bound_level_counting():
    from xxzbath.verification import zero_momentum_spectrum
    for N in (6, 8, 10):
        for d in (0.5, 2.0):
            spec = zero_momentum_spectrum(N, 2, d)
            below = np.sum(spec < -0.5 * N * d + 4 * (d - 1) - 1e-9)
            assert below == (1 if d > 1 else 0)


def test_ode_matches_expm():
    rng = np.random.default_rng(3)
    for _ in range(10):
        M = rng.uniform(0, 1, (4, 4))
        np.fill_diagonal(M, 0)
        M -= np.diag(M.sum(0))
        w0 = rng.dirichlet(np.ones(4))
        for t in (0.0, 0.7, 5.0):
            a = ode_integrate(M, w0, t, tol=1e-12)
            b = matrix_exponential_small(M, t) @ w0
            assert np.max(np.abs(a - b)) < 1e-10


def test_ode_diagonal_generator():
    M = np.diag([-1.0, -0.5, 0.0])
    assert_allclose(ode_integrate(M, [1, 1, 1], 2.0), np.exp([-2.0, -1.0, 0.0]), atol=1e-11)


def test_expm_basic_cases():
    assert_allclose(matrix_exponential_small(np.zeros((3, 3)), 4.0), np.eye(3))
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert_allclose(matrix_exponential_small(N, 2.5), [[1.0, 2.5], [0.0, 1.0]])
    with pytest.raises(ResourceCapError):
        matrix_exponential_small(np.zeros((9, 9)), 1.0)


def test_expm_column_sums():
    rng = np.random.default_rng(5)
    M = rng.uniform(0, 2, (6, 6))
    np.fill_diagonal(M, 0)
    M -= np.diag(M.sum(0))
    assert_allclose(matrix_exponential_small(M, 3.0).sum(0), 1.0, atol=1e-12)


def test_cnot_round_pure_ghz():
    r = bilateral_cnot_round(1.0, 0.0, 0.5, 3)
    assert_allclose([r.u, r.w, r.v, r.probability, r.trace_before], [1, 0, 0.5, 1, 1], atol=1e-14)


def test_cnot_round_diagonal_input_stays_diagonal():
    r = bilateral_cnot_round(0.6, 0.4, 0.0, 4)
    assert abs(r.v) < 1e-15 and r.leakage < 1e-12


def test_cnot_cap():
    with pytest.raises(ResourceCapError):
        bilateral_cnot_round(1.0, 0.0, 0.5, 6)


def test_pv_trivial_cases():
    assert abs(pv_quadrature(lambda x: 1.0, 0.3, 1.0)) < 1e-10
    # removable singularity: f(x) = x - pole integrates to 2 * window
    assert_allclose(pv_quadrature(lambda x: x - 0.3, 0.3, 1.5), 3.0, atol=1e-9)


def test_pv_analytic_case():
    # PV int_{-1}^{3} e^x / (x - 1) dx = e (Ei(2) - Ei(-2))
    from scipy.special import expi
    val = pv_quadrature(np.exp, 1.0, 2.0, tol=1e-10)
    assert_allclose(val, np.e * (expi(2.0) - expi(-2.0)), atol=1e-8)


def test_pv_logistic_stable():
    f = lambda x: 1.0 / (1.0 + np.exp(2 * 1.7 * x))  # noqa: E731
    a = pv_quadrature(f, 0.2, 4.0, tol=1e-10)
    b = pv_quadrature(f, 0.2, 4.0, tol=1e-10, eps0=0.01)
    assert abs(a - b) < 1e-8


def test_pv_bad_window():
    with pytest.raises(ValueError):
        pv_quadrature(np.exp, 0.0, 0.0)


def test_pv_accuracy_error_for_singular_integrand():
    with pytest.raises(AccuracyError):
        # one-sided x^(-1/2) blow-up: the excised integrals diverge as eps -> 0
        pv_quadrature(lambda x: (x - 0.5) ** -0.5 if x > 0.5 else 0.0, 0.5, 1.0,
                      tol=1e-10, max_halvings=6)


def test_sector_spectrum_sorted():
    s = sector_spectrum(8, 2, 0.5)
    assert np.all(np.diff(s) >= 0)
