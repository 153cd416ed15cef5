"""Classical and semi-classical reference dynamics.

The classical side is the forced damped Duffing oscillator

    dx/dt = p,    dp/dt = -2 Gamma p - x^3 + x + g cos(t),

integrated with fixed-step RK4 (numba-compiled inner loops).  The
semi-classical side evolves the complex amplitude of a damped harmonic
oscillator that stays on the coherent manifold: a diffusive version
driven by a complex Wiener increment, and a jump version driven by a
real compensated-Poisson increment with matching first two moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DivergenceError, StepSizeError, ValidationError
from .noise import NoiseStream, sample_complex_wiener

__all__ = [
    "PhasePoint",
    "CoherentAmplitude",
    "duffing_rhs",
    "integrate_classical",
    "integrate_classical_arrays",
    "duffing_extent",
    "classical_duffing_map",
    "coherent_qsd_step",
    "coherent_qj_step",
    "coherent_qsd_paths",
    "coherent_qj_paths",
    "jump_rate_on_manifold",
    "ehrenfest_defect",
]


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float
    t: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.p, self.t))):
            raise ValidationError(f"phase point must be finite, got {self}")


@dataclass(frozen=True)
class CoherentAmplitude:
    alpha: complex
    t: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha.real) and math.isfinite(self.alpha.imag)
                and math.isfinite(self.t)):
            raise ValidationError(f"amplitude must be finite, got {self}")


def duffing_rhs(s: PhasePoint, Gamma: float, g: float) -> tuple[float, float]:
    """(dx/dt, dp/dt) at the phase point's own time."""
    return s.p, -2.0 * Gamma * s.p - s.x ** 3 + s.x + g * math.cos(s.t)


@njit(cache=True)
def _rk4_path(x, p, gamma2, g, dt, n, xs, ps):
    t = 0.0
    xs[0] = x
    ps[0] = p
    for k in range(n):
        k1x = p
        k1p = -gamma2 * p - x ** 3 + x + g * np.cos(t)
        x2 = x + 0.5 * dt * k1x
        p2 = p + 0.5 * dt * k1p
        k2x = p2
        k2p = -gamma2 * p2 - x2 ** 3 + x2 + g * np.cos(t + 0.5 * dt)
        x3 = x + 0.5 * dt * k2x
        p3 = p + 0.5 * dt * k2p
        k3x = p3
        k3p = -gamma2 * p3 - x3 ** 3 + x3 + g * np.cos(t + 0.5 * dt)
        x4 = x + dt * k3x
        p4 = p + dt * k3p
        k4x = p4
        k4p = -gamma2 * p4 - x4 ** 3 + x4 + g * np.cos(t + dt)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        t += dt
        xs[k + 1] = x
        ps[k + 1] = p
    return x, p


@njit(cache=True)
def _rk4_span(x, p, gamma2, g, t, dt, n):
    """Advance n steps from time t without storing; returns (x, p, max|x|, max|p|)."""
    mx = abs(x)
    mp = abs(p)
    for _ in range(n):
        k1x = p
        k1p = -gamma2 * p - x ** 3 + x + g * np.cos(t)
        x2 = x + 0.5 * dt * k1x
        p2 = p + 0.5 * dt * k1p
        k2x = p2
        k2p = -gamma2 * p2 - x2 ** 3 + x2 + g * np.cos(t + 0.5 * dt)
        x3 = x + 0.5 * dt * k2x
        p3 = p + 0.5 * dt * k2p
        k3x = p3
        k3p = -gamma2 * p3 - x3 ** 3 + x3 + g * np.cos(t + 0.5 * dt)
        x4 = x + dt * k3x
        p4 = p + dt * k3p
        k4x = p4
        k4p = -gamma2 * p4 - x4 ** 3 + x4 + g * np.cos(t + dt)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        t += dt
        if abs(x) > mx:
            mx = abs(x)
        if abs(p) > mp:
            mp = abs(p)
    return x, p, mx, mp


def _check_dt(dt: float) -> None:
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")


def integrate_classical_arrays(s0: PhasePoint, Gamma: float, g: float,
                               t_final: float, dt: float):
    """Fixed-step RK4 path as arrays (t, x, p), sampled at every step."""
    _check_dt(dt)
    if t_final < 0.0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}")
    n = max(1, round(t_final / dt)) if t_final > 0.0 else 0
    h = t_final / n if n else dt
    xs = np.empty(n + 1)
    ps = np.empty(n + 1)
    _rk4_path(s0.x, s0.p, 2.0 * Gamma, g, h, n, xs, ps)
    ts = np.arange(n + 1) * h
    bad = np.flatnonzero(~(np.isfinite(xs) & np.isfinite(ps)))
    if bad.size:
        raise DivergenceError(float(ts[bad[0]]))
    return ts, xs, ps


def integrate_classical(s0: PhasePoint, Gamma: float, g: float,
                        t_final: float, dt: float) -> list[PhasePoint]:
    """As ``integrate_classical_arrays`` but returning PhasePoints."""
    ts, xs, ps = integrate_classical_arrays(s0, Gamma, g, t_final, dt)
    return [PhasePoint(float(x), float(p), float(t)) for t, x, p in zip(ts, xs, ps)]


def duffing_extent(s0: PhasePoint, Gamma: float, g: float,
                   t_final: float, dt: float) -> tuple[float, float]:
    """(max|x|, max|p|) along the whole path, without storing it."""
    _check_dt(dt)
    n = max(1, round(t_final / dt))
    h = t_final / n
    x, p, mx, mp = _rk4_span(s0.x, s0.p, 2.0 * Gamma, g, s0.t, h, n)
    if not (math.isfinite(x) and math.isfinite(p)):
        raise DivergenceError(t_final)
    return float(mx), float(mp)


def classical_duffing_map(x: float, p: float, Gamma: float, g: float,
                          dt: float = 1e-3, t0: float = 0.0) -> tuple[float, float]:
    """One period of the 2pi strobe map, starting at phase t0.

    dt is adjusted to divide 2pi exactly so the map lands on the strobe.
    """
    _check_dt(dt)
    steps = max(1, round(2.0 * math.pi / dt))
    h = 2.0 * math.pi / steps
    x1, p1, _, _ = _rk4_span(x, p, 2.0 * Gamma, g, t0, h, steps)
    if not (math.isfinite(x1) and math.isfinite(p1)):
        raise DivergenceError(t0 + 2.0 * math.pi)
    return float(x1), float(p1)


def coherent_qsd_step(a: CoherentAmplitude, omega: float, gamma: float, nbar: float,
                      dt: float, s: NoiseStream) -> CoherentAmplitude:
    """Euler-Maruyama step of the coherent-manifold diffusion:
    d alpha = -(i omega + gamma/2) alpha dt + sqrt(nbar*gamma) dxi."""
    _check_dt(dt)
    alpha = a.alpha + (-1j * omega - 0.5 * gamma) * a.alpha * dt
    coeff = math.sqrt(nbar * gamma)
    if coeff > 0.0:
        alpha += coeff * sample_complex_wiener(dt, s)
    return CoherentAmplitude(alpha, a.t + dt)


def jump_rate_on_manifold(alpha: complex, gamma: float, nbar: float) -> float:
    """Total jump rate of both thermal channels on a coherent state:
    gamma*(nbar+1)|alpha|^2 + gamma*nbar*(|alpha|^2 + 1)."""
    n = abs(alpha) ** 2
    return gamma * (nbar + 1.0) * n + gamma * nbar * (n + 1.0)


def coherent_qj_step(a: CoherentAmplitude, omega: float, gamma: float, nbar: float,
                     dt: float, s: NoiseStream) -> CoherentAmplitude:
    """Euler step of the coherent-manifold jump equation:
    d alpha = -(i omega + gamma/2) alpha dt
              + sqrt(nbar*gamma) * alpha/sqrt(|alpha|^2+1) * dW.

    dW is realized as a compensated Poisson increment (dN - lam dt)/sqrt(lam)
    with lam the total jump rate on the manifold, so M(dW) = 0 and
    M(dW^2) = dt up to O(dt^2).
    """
    _check_dt(dt)
    alpha = a.alpha + (-1j * omega - 0.5 * gamma) * a.alpha * dt
    coeff = math.sqrt(nbar * gamma)
    if coeff > 0.0:
        lam = jump_rate_on_manifold(a.alpha, gamma, nbar)
        if lam > 0.0:
            if lam * dt > 0.5:
                raise StepSizeError(
                    f"jump rate {lam:.3g} * dt = {lam * dt:.3g} exceeds 0.5; reduce dt")
            dn = 1.0 if float(s.uniforms()) < lam * dt else 0.0
            dw = (dn - lam * dt) / math.sqrt(lam)
            alpha += coeff * (a.alpha / math.sqrt(abs(a.alpha) ** 2 + 1.0)) * dw
    return CoherentAmplitude(alpha, a.t + dt)


def coherent_qsd_paths(alpha0: complex, omega: float, gamma: float, nbar: float,
                       dt: float, n_steps: int, n_paths: int,
                       s: NoiseStream) -> np.ndarray:
    """Monte Carlo helper: final alphas of n_paths diffusive paths.

    Same update rule as ``coherent_qsd_step``, vectorized over paths with
    one batched draw per step.
    """
    _check_dt(dt)
    alphas = np.full(n_paths, complex(alpha0), dtype=np.complex128)
    decay = -1j * omega - 0.5 * gamma
    coeff = math.sqrt(nbar * gamma) * math.sqrt(dt / 2.0)
    for _ in range(n_steps):
        z = s.normals((2, n_paths))
        alphas += decay * alphas * dt
        if coeff > 0.0:
            alphas += coeff * (z[0] + 1j * z[1])
    return alphas


def coherent_qj_paths(alpha0: complex, omega: float, gamma: float, nbar: float,
                      dt: float, n_steps: int, n_paths: int,
                      s: NoiseStream) -> np.ndarray:
    """Monte Carlo helper: final alphas of n_paths jump paths."""
    _check_dt(dt)
    alphas = np.full(n_paths, complex(alpha0), dtype=np.complex128)
    decay = -1j * omega - 0.5 * gamma
    coeff = math.sqrt(nbar * gamma)
    for _ in range(n_steps):
        us = s.uniforms(n_paths)
        n = np.abs(alphas) ** 2
        lam = gamma * (nbar + 1.0) * n + gamma * nbar * (n + 1.0)
        if float(lam.max()) * dt > 0.5:
            raise StepSizeError("jump rate * dt exceeds 0.5 on some path; reduce dt")
        old = alphas.copy()
        alphas += decay * old * dt
        if coeff > 0.0:
            safe = np.where(lam > 0.0, lam, 1.0)
            dw = ((us < lam * dt) - lam * dt) / np.sqrt(safe)
            alphas += np.where(lam > 0.0,
                               coeff * old / np.sqrt(n + 1.0) * dw,
                               0.0)
    return alphas


def ehrenfest_defect(times: np.ndarray, q_means: np.ndarray, p_means: np.ndarray,
                     q3_means: np.ndarray, Gamma: float, g: float,
                     beta: float) -> np.ndarray:
    """Residual of the sampled moments against the classical flow.

    Central differences of <Q>, <P> are compared with
    (<P>, -2 Gamma <P> + <Q> - <Q^3>/beta^2 - g beta cos t) at the interior
    sample times; returns an (n-2, 2) array.  This is a diagnostic of how
    well the friction ansatz reproduces classical motion; it is reported,
    not asserted.
    """
    t = np.asarray(times, dtype=float)
    q = np.asarray(q_means, dtype=float)
    p = np.asarray(p_means, dtype=float)
    q3 = np.asarray(q3_means, dtype=float)
    if t.size < 3:
        return np.empty((0, 2))
    span = t[2:] - t[:-2]
    dq = (q[2:] - q[:-2]) / span
    dp = (p[2:] - p[:-2]) / span
    ti, qi, pi, q3i = t[1:-1], q[1:-1], p[1:-1], q3[1:-1]
    res_q = dq - pi
    res_p = dp - (-2.0 * Gamma * pi + qi - q3i / beta ** 2 - g * beta * np.cos(ti))
    return np.column_stack([res_q, res_p])
