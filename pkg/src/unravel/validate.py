"""Validation routines for the damped harmonic oscillator.

These are the quantitative checks that the unraveled dynamics behave as
the closed-form theory of the damped HO says they must: localization to
a minimum wavepacket, agreement between the full state-vector evolution
and the reduced coherent-amplitude equation driven by the same noise,
Monte Carlo moments of the reduced equations, and the jump-rate law.
Each routine returns plain numbers; callers decide how to report them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import coherent_qj_paths, coherent_qsd_paths
from .errors import ValidationError
from .fock import StateVector, annihilation_op, coherent_state, fock_state, number_op
from .master import moment, propagate, pure_density
from .model import HOParams, build_damped_ho
from .noise import NoiseStream
from .trajectories import _compile, _final_state, _qsd_step, _wiener_row, run_trajectory

__all__ = [
    "CheckResult",
    "localization_check",
    "shared_noise_comparison",
    "qsd_moment_check",
    "qj_moment_check",
    "jump_rate_check",
]


@dataclass
class CheckResult:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool

    def __post_init__(self):
        # numpy scalars sneak in from vectorized estimators; JSON needs natives
        self.measured = float(self.measured)
        self.expected = float(self.expected)
        self.tolerance = float(self.tolerance)
        self.passed = bool(self.passed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name}: measured {self.measured:.6g}, "
                f"expected {self.expected:.6g} (tol {self.tolerance:.3g})")


def localization_check(gamma: float = 1.0, t_final: float = 10.0, dt: float = 1e-3,
                       dim: int = 24, base_seed: int = 0,
                       n_initial: int = 2) -> list[CheckResult]:
    """Single QSD trajectory of the zero-temperature damped HO from |n>.

    Any initial state contracts onto a coherent state, so both quadrature
    variances must end in [0.45, 0.55].
    """
    p = HOParams(omega=1.0, gamma=gamma, nbar=0.0, dim=dim)
    m = build_damped_ho(p)
    s = NoiseStream(base_seed, 0)
    records = run_trajectory(m, fock_state(n_initial, dim), t_final, dt, "qsd", s,
                             sample_every=max(1, round(t_final / dt)))
    last = records[-1]
    return [
        CheckResult("localization deltaQ^2", last.q_var, 0.5, 0.05,
                    0.45 <= last.q_var <= 0.55),
        CheckResult("localization deltaP^2", last.p_var, 0.5, 0.05,
                    0.45 <= last.p_var <= 0.55),
    ]


def shared_noise_comparison(omega: float, gamma: float, nbar: float, alpha0: complex,
                            dim: int, t_final: float, dt: float, base_seed: int,
                            stream_index: int = 0):
    """Full QSD trajectory vs the reduced amplitude equation, same noise.

    The full damped-HO state starts at |alpha0> and every complex Wiener
    increment drawn for its channels also feeds the reduced equation
    d alpha = -(i omega + gamma/2) alpha dt + sqrt(nbar*gamma) dxi_up,
    where dxi_up is the increment of the upward (a†) channel.  Returns
    (times, full <a> path, reduced alpha path).
    """
    m = build_damped_ho(HOParams(omega=omega, gamma=gamma, nbar=nbar, dim=dim))
    c = _compile(m)
    a = annihilation_op(dim).entries
    psi = coherent_state(alpha0, dim).amplitudes
    alpha = complex(alpha0)
    s = NoiseStream(base_seed, stream_index)
    n_steps = max(1, round(t_final / dt))
    h = t_final / n_steps
    coeff_up = math.sqrt(nbar * gamma)
    decay = -1j * omega - 0.5 * gamma
    ts = np.empty(n_steps + 1)
    full = np.empty(n_steps + 1, dtype=np.complex128)
    reduced = np.empty(n_steps + 1, dtype=np.complex128)
    ts[0], full[0], reduced[0] = 0.0, complex(np.vdot(psi, a @ psi)), alpha
    for k in range(n_steps):
        dxi = _wiener_row(s.normals(2 * c.n_channels), h)
        psi = _qsd_step(c, psi, k * h, h, dxi)
        alpha = alpha + decay * alpha * h
        if coeff_up > 0.0:
            # channel 0 is the a† (thermal excitation) channel
            alpha += coeff_up * dxi[0]
        ts[k + 1] = (k + 1) * h
        full[k + 1] = np.vdot(psi, a @ psi)
        reduced[k + 1] = alpha
    return ts, full, reduced


def qsd_moment_check(omega: float, gamma: float, nbar: float, alpha0: complex,
                     t_final: float, dt: float, n_paths: int,
                     base_seed: int) -> list[CheckResult]:
    """Monte Carlo first and second moments of the reduced diffusion.

    Exact values for the linear equation: M(alpha) = e^{-(i omega+gamma/2)t}
    alpha0 and Var(alpha) = nbar (1 - e^{-gamma t}).
    """
    n_steps = max(1, round(t_final / dt))
    s = NoiseStream(base_seed, 0)
    finals = coherent_qsd_paths(alpha0, omega, gamma, nbar, t_final / n_steps,
                                n_steps, n_paths, s)
    mean_exact = np.exp(-(1j * omega + 0.5 * gamma) * t_final) * alpha0
    var_exact = nbar * (1.0 - math.exp(-gamma * t_final))
    mean_est = complex(finals.mean())
    var_est = float(np.mean(np.abs(finals - mean_est) ** 2))
    stderr = math.sqrt(var_est / n_paths) if var_est > 0 else 1e-12
    mean_dev = abs(mean_est - mean_exact)
    results = [
        CheckResult("reduced-diffusion M(alpha) deviation", mean_dev, 0.0,
                    3.0 * stderr, mean_dev <= 3.0 * stderr),
    ]
    if var_exact > 0.0:
        rel = abs(var_est - var_exact) / var_exact
        results.append(CheckResult("reduced-diffusion Var(alpha) rel. error",
                                   rel, 0.0, 0.05, rel <= 0.05))
    return results


def qj_moment_check(omega: float, gamma: float, nbar: float, alpha0: complex,
                    t_final: float, dt: float, n_paths: int,
                    base_seed: int) -> list[CheckResult]:
    """Monte Carlo mean of the reduced jump equation.

    The compensated noise has zero mean, so M(alpha) follows the same
    exponential as the diffusive case.
    """
    n_steps = max(1, round(t_final / dt))
    s = NoiseStream(base_seed, 1)
    finals = coherent_qj_paths(alpha0, omega, gamma, nbar, t_final / n_steps,
                               n_steps, n_paths, s)
    mean_exact = np.exp(-(1j * omega + 0.5 * gamma) * t_final) * alpha0
    mean_est = complex(finals.mean())
    var_est = float(np.mean(np.abs(finals - mean_est) ** 2))
    stderr = math.sqrt(var_est / n_paths) if var_est > 0 else 1e-12
    dev = abs(mean_est - mean_exact)
    return [CheckResult("reduced-jump M(alpha) deviation", dev, 0.0,
                        3.0 * stderr, dev <= 3.0 * stderr)]


def expected_jump_integral(m, rho0, t_final: float, dt: float,
                           segments: int = 100) -> float:
    """Oracle integral of the total jump rate sum_j <Lj†Lj> over [0, t]."""
    ks = [op.entries.conj().T @ op.entries for op in m.lindblads]
    k_total = sum(ks) if ks else np.zeros((m.dim, m.dim), dtype=complex)
    from .fock import OperatorMatrix
    k_op = OperatorMatrix(k_total)
    rho = rho0
    seg = t_final / segments
    rate_prev = moment(rho, k_op).real
    total = 0.0
    for _ in range(segments):
        rho = propagate(rho, m, seg, dt)
        rate = moment(rho, k_op).real
        total += 0.5 * (rate_prev + rate) * seg
        rate_prev = rate
    return total


def jump_rate_check(gamma: float, n_initial: int, t_final: float, dt: float,
                    n_traj: int, dim: int, base_seed: int) -> tuple[CheckResult, dict]:
    """Cumulative QJ jump count vs the oracle rate integral.

    For the zero-temperature HO from |n>, each jump lowers n by one, so
    the expected count per trajectory is the integral of gamma <n>.
    """
    if n_initial >= dim:
        raise ValidationError(f"n_initial {n_initial} needs dim > {n_initial}")
    p = HOParams(omega=1.0, gamma=gamma, nbar=0.0, dim=dim)
    m = build_damped_ho(p)
    psi0 = fock_state(n_initial, dim).amplitudes
    total = 0
    for i in range(n_traj):
        _, jumps = _final_state(m, psi0, t_final, dt, "qj", NoiseStream(base_seed, i))
        total += jumps
    expected_per = expected_jump_integral(m, pure_density(fock_state(n_initial, dim)),
                                          t_final, dt)
    expected = n_traj * expected_per
    tol = 3.0 * math.sqrt(expected)
    passed = abs(total - expected) <= tol
    detail = {
        "total_jumps": total,
        "expected": expected,
        "analytic": n_traj * n_initial * (1.0 - math.exp(-gamma * t_final)),
    }
    return CheckResult("jump count vs oracle rate integral", float(total),
                       expected, tol, passed), detail
