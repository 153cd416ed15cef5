import math

import numpy as np
import pytest

from unravel import (
    OperatorMatrix,
    ShapeError,
    StateVector,
    TruncationWarning,
    ValidationError,
    annihilation_op,
    coherent_state,
    creation_op,
    expectation,
    fock_state,
    identity_op,
    momentum_op,
    number_op,
    position_op,
    variance,
)


def test_annihilation_dim2():
    a = annihilation_op(2).entries
    assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_dim3_entry():
    a = annihilation_op(3).entries
    assert a[1, 2] == pytest.approx(math.sqrt(2.0))


def test_annihilation_rejects_small_dim():
    with pytest.raises(ValidationError):
        annihilation_op(1)


def test_commutator_truncation_corner():
    # Explicit matrix multiplication: [a, a†] = I except the (7,7) corner,
    # where the truncated product leaves -(dim-1).
    dim = 8
    a = annihilation_op(dim).entries
    ad = a.conj().T
    comm = a @ ad - ad @ a
    expected = np.eye(dim, dtype=complex)
    expected[dim - 1, dim - 1] = -(dim - 1)
    assert np.max(np.abs(comm - expected)) <= 1e-12


def test_quadratures_dim2():
    q = position_op(2).entries
    p = momentum_op(2).entries
    r = 1.0 / math.sqrt(2.0)
    assert np.allclose(q, [[0, r], [r, 0]], atol=1e-15)
    assert np.allclose(p, [[0, -1j * r], [1j * r, 0]], atol=1e-15)


def test_canonical_commutator_upper_block():
    dim = 10
    q = position_op(dim).entries
    p = momentum_op(dim).entries
    comm = q @ p - p @ q
    block = comm[: dim - 1, : dim - 1] - 1j * np.eye(dim - 1)
    assert np.max(np.abs(block)) <= 1e-12


def test_q2_plus_p2_identity():
    dim = 12
    q = position_op(dim).entries
    p = momentum_op(dim).entries
    lhs = q @ q + p @ p
    rhs = 2.0 * number_op(dim).entries + identity_op(dim).entries
    assert np.max(np.abs((lhs - rhs)[: dim - 1, : dim - 1])) <= 1e-12


def test_fock_state_basics():
    assert np.array_equal(fock_state(0, 4).amplitudes, [1, 0, 0, 0])
    assert np.array_equal(fock_state(2, 4).amplitudes, [0, 0, 1, 0])
    with pytest.raises(IndexError):
        fock_state(4, 4)


def test_number_eigenstates():
    dim = 9
    n_op = number_op(dim)
    for n in range(dim):
        psi = fock_state(n, dim)
        assert expectation(psi, n_op) == pytest.approx(n)
        assert np.allclose(n_op.entries @ psi.amplitudes, n * psi.amplitudes)


def test_coherent_vacuum():
    assert np.array_equal(coherent_state(0.0, 8).amplitudes,
                          fock_state(0, 8).amplitudes)


def test_coherent_amplitude_against_series():
    # Independent formula: c_n = e^{-|a|^2/2} a^n / sqrt(n!).
    psi = coherent_state(1.0, 20)
    c0 = math.exp(-0.5)
    assert abs(psi.amplitudes[0] - c0) <= 1e-8
    for n in (1, 3, 7):
        cn = math.exp(-0.5) / math.sqrt(math.factorial(n))
        assert abs(psi.amplitudes[n] - cn) <= 1e-8


def test_coherent_eigenvalue_residual():
    psi = coherent_state(1.0, 20)
    a = annihilation_op(20).entries
    residual = np.linalg.norm(a @ psi.amplitudes - 1.0 * psi.amplitudes)
    assert residual <= 1e-6


def test_coherent_truncation_warning():
    with pytest.warns(TruncationWarning):
        coherent_state(3.0, 8)


def test_expectation_cases():
    assert expectation(fock_state(1, 4), number_op(4)) == pytest.approx(1.0)
    assert expectation(fock_state(0, 4), annihilation_op(4)) == pytest.approx(0.0)
    psi = coherent_state(0.5, 16)
    assert abs(expectation(psi, annihilation_op(16)) - 0.5) <= 1e-8


def test_expectation_shape_error():
    with pytest.raises(ShapeError):
        expectation(fock_state(0, 4), number_op(5))


def test_expectation_hermitian_real():
    rng = np.random.default_rng(3)
    dim = 7
    h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = OperatorMatrix((h + h.conj().T) / 2, hermitian_hint=True)
    for _ in range(20):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi = StateVector(v).normalize()
        assert abs(expectation(psi, h).imag) <= 1e-10


def test_variance_cases():
    q = position_op(20)
    assert variance(coherent_state(1.0, 20), q) == pytest.approx(0.5, abs=1e-6)
    assert variance(fock_state(0, 8), position_op(8)) == pytest.approx(0.5, abs=1e-12)
    assert variance(fock_state(1, 8), number_op(8)) == pytest.approx(0.0, abs=1e-12)


def test_variance_nonnegative_for_hermitian():
    rng = np.random.default_rng(11)
    q = position_op(10)
    for _ in range(25):
        v = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        psi = StateVector(v).normalize()
        assert variance(psi, q) >= -1e-10


def test_normalize_contract():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    psi = StateVector(v).normalize()
    assert abs(psi.norm() ** 2 - 1.0) <= 1e-12
    twice = psi.normalize()
    assert np.max(np.abs(twice.amplitudes - psi.amplitudes)) <= 1e-15


def test_normalize_zero_state():
    with pytest.raises(ValidationError):
        StateVector(np.zeros(4)).normalize()


def test_state_immutable():
    psi = fock_state(0, 4)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 2.0


def test_hermitian_hint_check():
    bad = OperatorMatrix(np.array([[0, 1], [0, 0]], dtype=complex), hermitian_hint=True)
    with pytest.raises(ValidationError):
        bad.require_hermitian()
    position_op(5).require_hermitian()


def test_boundary_population():
    psi = fock_state(19, 20)
    assert psi.boundary_population() == pytest.approx(1.0)
    assert fock_state(0, 20).boundary_population() == pytest.approx(0.0)
