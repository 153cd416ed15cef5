import math

import numpy as np
import pytest

from unravel import (
    ConfigurationError,
    DensityMatrix,
    HOParams,
    annihilation_op,
    build_damped_ho,
    coherent_state,
    fock_state,
    lindblad_rhs,
    moment,
    number_op,
    propagate,
    pure_density,
    purity,
)


def _damped_ho(nbar=0.0, dim=12, gamma=1.0):
    return build_damped_ho(HOParams(omega=1.0, gamma=gamma, nbar=nbar, dim=dim))


def test_rhs_stationary_on_closed_eigenstate():
    m = _damped_ho(gamma=0.0, dim=6)
    rho = pure_density(fock_state(2, 6))
    rhs = lindblad_rhs(rho, m, 0.3)
    assert np.max(np.abs(rhs)) <= 1e-12


def test_rhs_traceless_and_hermitian():
    m = _damped_ho(nbar=0.5, dim=10)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    rho = v @ v.conj().T
    rho = DensityMatrix(rho / np.trace(rho))
    rhs = lindblad_rhs(rho, m, 0.0)
    assert abs(np.trace(rhs)) <= 1e-12
    assert np.max(np.abs(rhs - rhs.conj().T)) <= 1e-12


def test_rhs_number_decay_rate():
    # d<n>/dt = trace(n RHS) must equal -gamma <n> for the zero-T oscillator.
    m = _damped_ho(dim=8)
    rho = pure_density(fock_state(1, 8))
    rhs = lindblad_rhs(rho, m, 0.0)
    rate = np.trace(number_op(8).entries @ rhs).real
    assert rate == pytest.approx(-1.0, abs=1e-12)


def test_propagate_zero_time_is_identity():
    m = _damped_ho(dim=6)
    rho = pure_density(fock_state(1, 6))
    out = propagate(rho, m, 0.0, 1e-3)
    assert np.array_equal(out.entries, rho.entries)


def test_propagate_coherent_amplitude_decay():
    # Closed form from the linear moment equation: <a>(t) = e^{-(i+1/2)t} a0.
    dim = 30
    m = _damped_ho(dim=dim)
    rho = pure_density(coherent_state(1.0, dim))
    out = propagate(rho, m, 1.0, 1e-3)
    a = annihilation_op(dim)
    expected = np.exp(-(1j + 0.5) * 1.0)
    assert abs(moment(out, a) - expected) <= 1e-6


def test_propagate_thermal_steady_state():
    dim = 30
    m = _damped_ho(nbar=0.5, dim=dim)
    rho = pure_density(fock_state(0, dim))
    out = propagate(rho, m, 15.0, 1e-3)
    assert moment(out, number_op(dim)).real == pytest.approx(0.5, abs=1e-3)
    out.check_invariants()


def test_propagate_invariants_along_the_way():
    dim = 12
    m = _damped_ho(nbar=0.5, dim=dim)
    rho = pure_density(fock_state(3, dim))
    for _ in range(5):
        rho = propagate(rho, m, 0.4, 1e-3)
        rho.check_invariants()


def test_propagate_linearity():
    dim = 8
    m = _damped_ho(nbar=0.2, dim=dim)
    r1 = pure_density(fock_state(0, dim))
    r2 = pure_density(fock_state(2, dim))
    a, b = 0.3, 0.7
    mixed = DensityMatrix(a * r1.entries + b * r2.entries)
    lhs = propagate(mixed, m, 1.0, 1e-3).entries
    rhs = a * propagate(r1, m, 1.0, 1e-3).entries + b * propagate(r2, m, 1.0, 1e-3).entries
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


def test_rk4_convergence_order():
    # Error against a dt/8 reference must shrink ~16x per dt halving.
    dim = 16
    m = _damped_ho(nbar=0.3, dim=dim)
    rho0 = pure_density(coherent_state(1.0, dim))
    t = 0.5
    ref = propagate(rho0, m, t, 2e-3 / 8.0).entries
    e1 = np.max(np.abs(propagate(rho0, m, t, 2e-3).entries - ref))
    e2 = np.max(np.abs(propagate(rho0, m, t, 1e-3).entries - ref))
    assert 8.0 <= e1 / e2 <= 32.0


def test_purity_and_moment():
    rho = pure_density(fock_state(1, 4))
    assert purity(rho) == pytest.approx(1.0, abs=1e-10)
    assert moment(rho, number_op(4)).real == pytest.approx(1.0)
    mixed = DensityMatrix(np.eye(4) / 4.0)
    assert purity(mixed) == pytest.approx(0.25)


def test_dim_limit_and_override():
    dim = 140
    m = _damped_ho(dim=dim)
    rho = pure_density(fock_state(0, dim))
    with pytest.raises(ConfigurationError):
        propagate(rho, m, 0.01, 1e-3)
    with pytest.warns(UserWarning):
        out = propagate(rho, m, 0.01, 1e-3, allow_large=True)
    assert out.dim == dim


def test_step_count_guard():
    m = _damped_ho(dim=4)
    rho = pure_density(fock_state(0, 4))
    with pytest.raises(ConfigurationError):
        propagate(rho, m, 1e9, 1e-12)
