import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal, eigvalsh

from conftest import align_signs
from shgpla import ArgumentError, Block, ModelParams, amplitudes_from_lambda, hamiltonian_matrix, solve, sturm_polynomials
from shgpla.exact import eigenvalues_sturm, log_norm_factor


def test_sturm_polynomials_two_level():
    seq = sturm_polynomials(Block(0, 1), ModelParams.resonant(1.0), 0.0)
    np.testing.assert_allclose(seq.values(), [1.0, 0.0, -2.0], atol=1e-15)
    assert seq.count == 1
    seq = sturm_polynomials(Block(0, 1), ModelParams.resonant(1.0), math.sqrt(2))
    assert abs(seq.values()[-1]) < 1e-15


def test_sturm_count_all_below():
    assert sturm_polynomials(Block(0, 2), ModelParams.resonant(1.0), 5.0).count == 3


def test_sturm_polynomials_vectorized_and_scaled():
    b, p = Block(1, 400), ModelParams.from_detuning(1.7, 2.0)
    lam = np.array([-1e4, 0.3, 2e4])
    seq = sturm_polynomials(b, p, lam)
    assert seq.mantissa.shape == (402, 3)
    m = np.abs(seq.mantissa)
    assert np.all((m == 0) | ((m >= 0.5) & (m < 1.0)))
    w = eigvalsh(hamiltonian_matrix(b, p).dense())
    np.testing.assert_array_equal(seq.count, [np.sum(w < x) for x in lam])


def test_sturm_polynomials_reject_nonfinite():
    with pytest.raises(ArgumentError):
        sturm_polynomials(Block(0, 3), ModelParams.resonant(), float("inf"))


def test_small_spectra():
    p = ModelParams.resonant(1.0)
    np.testing.assert_allclose(eigenvalues_sturm(Block(0, 1), p), [-math.sqrt(2), math.sqrt(2)], rtol=1e-14)
    np.testing.assert_allclose(eigenvalues_sturm(Block(0, 2), p), [-4, 0, 4], atol=1e-13)
    np.testing.assert_allclose(solve(Block(1, 1), p).lambdas, [-math.sqrt(6), math.sqrt(6)], rtol=1e-14)


def test_s0_block():
    p = ModelParams.from_detuning(2.4)
    for k in (0, 1):
        for method in ("sturm", "oracle"):
            sol = solve(Block(k, 0), p, method=method)
            assert sol.lambdas.tolist() == [2.4 * k / 3.0]
            assert sol.Q.tolist() == [[1.0]]


def test_amplitude_examples():
    p = ModelParams.resonant(1.0)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(amplitudes_from_lambda(Block(0, 1), p, math.sqrt(2)), [r, r], atol=1e-15)
    np.testing.assert_allclose(amplitudes_from_lambda(Block(0, 1), p, -math.sqrt(2)), [r, -r], atol=1e-15)
    np.testing.assert_allclose(amplitudes_from_lambda(Block(0, 2), p, 0.0), [math.sqrt(3) / 2, 0, -0.5], atol=1e-15)


def test_amplitudes_reject_non_eigenvalue():
    with pytest.raises(ArgumentError):
        amplitudes_from_lambda(Block(0, 5), ModelParams.resonant(), 0.123)


def test_norm_factor_inverts_structure_poly_product():
    from shgpla import structure_poly

    for k in (0, 1):
        b = Block(k, 15)
        prod = 1
        for f in range(b.dim):
            if f:
                prod *= structure_poly(b, f)
            assert math.exp(-2 * log_norm_factor(b)[f]) == pytest.approx(prod, rel=1e-12)


def test_s100_reference_levels(sol100):
    expected = [-1536.9, -1151.7, -798.1, -480.3, -205.5, 0.0, 205.5, 480.3, 798.1, 1151.7, 1536.9]
    np.testing.assert_allclose(sol100.lambdas[::10], expected, atol=0.2)


def test_solution_invariants_s100(sol100, oracle100):
    lam, Q = sol100.lambdas, sol100.Q
    assert np.all(np.diff(lam) > 0)
    n = lam.size
    assert np.max(np.abs(Q.T @ Q - np.eye(n))) <= 1e-10
    assert np.max(np.abs(Q @ Q.T - np.eye(n))) <= 1e-10
    T = hamiltonian_matrix(sol100.block, ModelParams.resonant())
    assert np.max(np.abs(T.matvec(Q) - Q * lam)) <= 1e-9 * max(1, np.max(np.abs(lam)))
    assert np.max(np.abs(lam - oracle100.lambdas)) <= 1e-8 * sol100.spectral_radius
    assert np.max(np.abs(Q - oracle100.Q)) <= 1e-7


def test_first_component_positive_where_representable():
    for s in (5, 40, 120):
        sol = solve(Block(1, s), ModelParams.from_detuning(-1.7, 0.3))
        q0 = sol.Q[0]
        assert np.all(q0[q0 != 0] > 0)


def test_resonance_antisymmetry_and_zero_mode(sol100):
    lam, Q = sol100.lambdas, sol100.Q
    assert np.max(np.abs(lam + lam[::-1])) <= 1e-9 * np.max(np.abs(lam))
    assert abs(lam[50]) <= 1e-9 * np.max(np.abs(lam))
    D = (-1.0) ** np.arange(101)
    assert np.max(np.abs(Q[:, ::-1] - D[:, None] * Q)) <= 1e-8


@given(st.sampled_from([0, 1]), st.integers(1, 60), st.sampled_from([0.0, 1.7, -1.7]), st.sampled_from([0.3, 1.0, 2.0]))
def test_oracle_equivalence_property(k, s, delta, g):
    b, p = Block(k, s), ModelParams.from_detuning(delta, g)
    a, o = solve(b, p), solve(b, p, method="oracle")
    assert np.max(np.abs(a.lambdas - o.lambdas)) <= 1e-8 * max(1.0, o.spectral_radius)
    assert np.max(np.abs(a.Q - align_signs(a.Q, o.Q))) <= 1e-7


@given(st.sampled_from([0, 1]), st.integers(2, 80), st.floats(-3, 3), st.floats(0.05, 4))
def test_interlacing(k, s, delta, g):
    b, p = Block(k, s), ModelParams.from_detuning(delta, g)
    lam = solve(b, p, vectors=False).lambdas
    T = hamiltonian_matrix(b, p)
    mu = eigh_tridiagonal(T.diag[:-1], T.offdiag[:-1], eigvals_only=True)
    tol = 1e-13 * T.norm_inf()
    assert np.all(lam[:-1] <= mu + tol) and np.all(mu <= lam[1:] + tol)
    assert np.all(np.diff(lam) > 0)


@given(st.sampled_from([0, 1]), st.integers(1, 80), st.floats(0.1, 10))
def test_scaling_covariance(k, s, c):
    b = Block(k, s)
    one = solve(b, ModelParams.resonant(1.0))
    scaled = solve(b, ModelParams.resonant(c))
    np.testing.assert_allclose(scaled.lambdas, c * one.lambdas, rtol=1e-12, atol=1e-12 * c * one.spectral_radius)
    assert np.max(np.abs(scaled.Q - one.Q)) <= 1e-9


def test_workers_bit_identical():
    b, p = Block(0, 700), ModelParams.from_detuning(0.9, 1.3)
    a = solve(b, p, vectors=False, workers=1).lambdas
    c = solve(b, p, vectors=False, workers=4).lambdas
    assert a.tobytes() == c.tobytes()


def test_zero_coupling_block():
    p = ModelParams.from_detuning(1.5, 0.0)
    sol = solve(Block(0, 6), p)
    np.testing.assert_allclose(sol.lambdas, 1.5 * (np.arange(7) - 2.0), atol=1e-13)
    np.testing.assert_array_equal(sol.Q, np.eye(7))


def test_unknown_method():
    with pytest.raises(ArgumentError):
        solve(Block(0, 3), ModelParams.resonant(), method="qr")


def test_amplitudes_fock_reattach_phase():
    b = Block(1, 8)
    p = ModelParams(0.3, 0.9, 1.4, 1.1)
    sol = solve(b, p)
    A = sol.amplitudes_fock(p)
    T = hamiltonian_matrix(b, p).dense()
    H = np.diag(T.diagonal()).astype(complex)
    for f in range(b.s):
        H[f + 1, f] = p.g * T[f + 1, f] / p.g_abs
        H[f, f + 1] = np.conj(H[f + 1, f])
    assert np.max(np.abs(H @ A - A * sol.lambdas)) <= 1e-10


def test_large_block_vectors_orthonormal():
    sol = solve(Block(0, 200), ModelParams.from_detuning(1.7, 2.0))
    assert np.max(np.abs(sol.Q.T @ sol.Q - np.eye(201))) <= 1e-10
