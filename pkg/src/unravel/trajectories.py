"""Stochastic pure-state trajectories and ensemble aggregation.

Two unravelings of the same master equation are implemented as explicit
first-order steppers:

* QSD — Ito diffusion driven by one complex Wiener increment per
  coupling channel (Euler-Maruyama),
* QJ — deterministic nonlinear drift punctuated by Poissonian jumps to
  L|psi>/||L|psi>||, realized by per-step Bernoulli thinning.

Both renormalize after every step.  Averaging the pure-state projectors
of many independent trajectories reproduces the density matrix of the
master equation; ``ensemble_density`` performs that average with one
noise stream per trajectory so results are bit-reproducible no matter
how the work is scheduled.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    NumericalError,
    ShapeError,
    StepFailureError,
    StepSizeError,
    TruncationBreachError,
    ValidationError,
)
from .fock import StateVector, momentum_op, position_op
from .master import DensityMatrix
from .model import LindbladModel
from .noise import NoiseStream

__all__ = [
    "TrajectoryRecord",
    "EnsembleResult",
    "TrajectoryError",
    "qsd_step",
    "qj_step",
    "run_trajectory",
    "ensemble_density",
    "UNRAVELINGS",
]

UNRAVELINGS = ("qsd", "qj")

BOUNDARY_LIMIT = 1e-3          # abort threshold for top-decile population
_NORM_COLLAPSE = 1e-6          # pre-renormalization norm below this aborts
_JUMP_WARN, _JUMP_ERROR = 0.1, 0.5
_CHUNK = 512                   # noise draws are batched this many steps at a time


@dataclass
class TrajectoryRecord:
    """Moments of one trajectory at one sample time.

    jump_count is cumulative and stays 0 for QSD; q3_mean carries <Q^3>
    for the Ehrenfest residual diagnostic.
    """

    t: float
    q_mean: float
    p_mean: float
    n_mean: float
    q_var: float
    p_var: float
    boundary_population: float
    jump_count: int
    q3_mean: float


@dataclass(frozen=True)
class EnsembleResult:
    rho_estimate: DensityMatrix
    n_trajectories: int
    stderr_scale: float


class TrajectoryError(NumericalError):
    """A trajectory failed; carries which one."""

    def __init__(self, index: int, detail):
        self.index = index
        self.detail = str(detail)
        super().__init__(index, self.detail)

    def __str__(self):
        return f"trajectory {self.index}: {self.detail}"


class _Compiled:
    """Model baked into plain arrays for the step loop."""

    __slots__ = ("dim", "m0", "drive", "amp", "om", "ls", "n_channels")

    def __init__(self, m: LindbladModel):
        self.dim = m.dim
        self.ls = [op.entries for op in m.lindblads]
        self.n_channels = len(self.ls)
        k0 = np.zeros((m.dim, m.dim), dtype=np.complex128)
        for l in self.ls:
            k0 += l.conj().T @ l
        # Drift matrix shared by both unravelings: -iH_static - K0/2.
        self.m0 = -1j * m.h_static.entries - 0.5 * k0
        self.amp = m.drive_amplitude
        self.om = m.drive_frequency
        self.drive = m.drive_op.entries if self.amp != 0.0 else None


@lru_cache(maxsize=16)
def _compile(m: LindbladModel) -> _Compiled:
    return _Compiled(m)


def _drive_part(c: _Compiled, psi: np.ndarray, t: float) -> np.ndarray | None:
    if c.drive is None:
        return None
    return (-1j * c.amp * math.cos(c.om * t)) * (c.drive @ psi)


def _qsd_increment(c: _Compiled, psi: np.ndarray, t: float, dt: float,
                   dxi: np.ndarray) -> np.ndarray:
    """Raw Ito increment d|psi> (drift*dt + noise), no renormalization."""
    drift = c.m0 @ psi
    dp = _drive_part(c, psi, t)
    if dp is not None:
        drift = drift + dp
    dpsi = drift * dt
    for j, l in enumerate(c.ls):
        lpsi = l @ psi
        ell = np.vdot(psi, lpsi)
        dpsi += (np.conj(ell) * lpsi - 0.5 * abs(ell) ** 2 * psi) * dt
        dpsi += (lpsi - ell * psi) * dxi[j]
    return dpsi


def _qsd_step(c: _Compiled, psi: np.ndarray, t: float, dt: float,
              dxi: np.ndarray) -> np.ndarray:
    new = psi + _qsd_increment(c, psi, t, dt, dxi)
    nrm = np.linalg.norm(new)
    if nrm < _NORM_COLLAPSE:
        raise StepFailureError(
            f"state norm collapsed to {nrm:.3e} at t={t:g}; reduce dt")
    return new / nrm


def _qj_step(c: _Compiled, psi: np.ndarray, t: float, dt: float,
             u: float) -> tuple[np.ndarray, bool]:
    lpsis = [l @ psi for l in c.ls]
    rates = [float(np.vdot(w, w).real) for w in lpsis]
    p_total = sum(rates) * dt
    if p_total > _JUMP_ERROR:
        raise StepSizeError(
            f"total jump probability {p_total:.3g} per step exceeds {_JUMP_ERROR}; reduce dt")
    if p_total > _JUMP_WARN:
        warnings.warn(
            f"total jump probability {p_total:.3g} per step exceeds {_JUMP_WARN}; "
            "first-order splitting is getting inaccurate", stacklevel=2)
    if u < p_total:
        acc = 0.0
        for j, r in enumerate(rates):
            acc += r * dt
            if u < acc:
                w = lpsis[j]
                nrm = np.linalg.norm(w)
                if nrm == 0.0:
                    raise NumericalError(
                        "jump selected on a channel with vanishing L|psi>; "
                        "this indicates an internal inconsistency")
                return w / nrm, True
        # u < p_total but fell through: only possible through rounding at
        # the last boundary; take the last open channel.
        w = lpsis[-1]
        return w / np.linalg.norm(w), True
    drift = c.m0 @ psi + (0.5 * sum(rates)) * psi
    dp = _drive_part(c, psi, t)
    if dp is not None:
        drift = drift + dp
    new = psi + drift * dt
    return new / np.linalg.norm(new), False


def floquet_growth_factor(m: LindbladModel, dt: float, steps_per_period: int,
                          sweeps: int = 12) -> float:
    """Per-period growth of the dominant mode of the explicit drift map.

    Power iteration on the one-period product of (I + dt * drift matrix)
    including the cosine drive modulation.  Frozen-time spectral radii are
    misleading here: the modulated quartic models can be parametrically
    unstable even when every frozen propagator is contracting, which shows
    up as spurious amplitude climbing the basis until the truncation
    monitor aborts.  A return value above 1 means the top modes grow by
    that factor every period.
    """
    c = _compile(m)
    a = np.eye(m.dim) + dt * c.m0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m.dim) + 1j * rng.standard_normal(m.dim)
    v /= np.linalg.norm(v)
    growth = 1.0
    for _ in range(sweeps):
        for k in range(steps_per_period):
            w = a @ v
            if c.drive is not None:
                w += (-1j * dt * c.amp * math.cos(c.om * k * dt)) * (c.drive @ v)
            v = w
        growth = float(np.linalg.norm(v))
        v /= growth
    return growth


def _check_step_args(psi: StateVector, m: LindbladModel, dt: float) -> None:
    if psi.dim != m.dim:
        raise ShapeError(f"state dim {psi.dim} != model dim {m.dim}")
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")


def _wiener_row(z: np.ndarray, dt: float) -> np.ndarray:
    """Map 2m standard normals to m complex Wiener increments."""
    return (z[0::2] + 1j * z[1::2]) * math.sqrt(dt / 2.0)


def qsd_step(psi: StateVector, m: LindbladModel, t: float, dt: float,
             s: NoiseStream) -> StateVector:
    """One Euler-Maruyama QSD step, renormalized.

    Drift: -iH psi dt - 1/2 sum_j (Lj†Lj - 2<Lj†>Lj + |<Lj>|^2) psi dt.
    Noise: sum_j (Lj - <Lj>) psi dxi_j, one fresh complex Wiener increment
    per channel, drawn in channel order.
    """
    _check_step_args(psi, m, dt)
    c = _compile(m)
    dxi = _wiener_row(s.normals(2 * c.n_channels), dt)
    return StateVector(_qsd_step(c, psi.amplitudes, t, dt, dxi))


def qj_step(psi: StateVector, m: LindbladModel, t: float, dt: float,
            s: NoiseStream) -> tuple[StateVector, bool]:
    """One quantum-jump step; returns (state, jumped).

    A single uniform draw both decides whether any channel jumps this
    step (probability <Lj†Lj> dt each) and selects the channel; otherwise
    the no-jump drift -iH psi dt - 1/2 sum_j (Lj†Lj - <Lj†Lj>) psi dt is
    applied and the state renormalized.
    """
    _check_step_args(psi, m, dt)
    c = _compile(m)
    u = float(s.uniforms())
    new, jumped = _qj_step(c, psi.amplitudes, t, dt, u)
    return StateVector(new), jumped


class _Recorder:
    """Computes TrajectoryRecords and polices the truncation monitor."""

    def __init__(self, dim: int):
        self.q = position_op(dim).entries
        self.p = momentum_op(dim).entries
        self.ns = np.arange(dim, dtype=np.float64)
        self.start = (9 * dim) // 10

    def record(self, t: float, psi: np.ndarray, jump_count: int) -> TrajectoryRecord:
        wq = self.q @ psi
        wp = self.p @ psi
        q_mean = float(np.vdot(psi, wq).real)
        p_mean = float(np.vdot(psi, wp).real)
        q_var = float(np.vdot(wq, wq).real) - q_mean ** 2
        p_var = float(np.vdot(wp, wp).real) - p_mean ** 2
        probs = np.abs(psi) ** 2
        n_mean = float(self.ns @ probs)
        boundary = float(probs[self.start:].sum())
        q3_mean = float(np.vdot(wq, self.q @ wq).real)
        if boundary > BOUNDARY_LIMIT:
            raise TruncationBreachError(t, boundary)
        return TrajectoryRecord(t, q_mean, p_mean, n_mean, q_var, p_var,
                                boundary, jump_count, q3_mean)


def _normalize_unraveling(unraveling: str) -> str:
    u = str(unraveling).lower()
    if u not in UNRAVELINGS:
        raise ValidationError(f"unknown unraveling {unraveling!r}; choose from {UNRAVELINGS}")
    return u


def _steps_for(t_final: float, dt: float) -> tuple[int, float]:
    if t_final < 0.0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}")
    if t_final == 0.0:
        return 0, dt
    n = max(1, round(t_final / dt))
    return n, t_final / n


def run_trajectory(m: LindbladModel, psi0: StateVector, t_final: float, dt: float,
                   unraveling: str, s: NoiseStream,
                   sample_every: int = 1) -> list[TrajectoryRecord]:
    """Integrate one trajectory and sample its moments.

    Emits a record at t=0, then every ``sample_every`` steps, and at the
    final step.  Aborts with a TruncationBreachError if more than 1e-3 of
    the probability reaches the top decile of the basis at a sample time.
    """
    unraveling = _normalize_unraveling(unraveling)
    _check_step_args(psi0, m, dt)
    if sample_every < 1:
        raise ValidationError(f"sample_every must be >= 1, got {sample_every}")
    n_steps, h = _steps_for(t_final, dt)
    c = _compile(m)
    rec = _Recorder(m.dim)
    psi = psi0.normalize().amplitudes
    jumps = 0
    records = [rec.record(0.0, psi, 0)]
    k = 0
    while k < n_steps:
        span = min(_CHUNK, n_steps - k)
        if unraveling == "qsd":
            zs = s.normals((span, 2 * c.n_channels))
            for i in range(span):
                psi = _qsd_step(c, psi, (k + i) * h, h, _wiener_row(zs[i], h))
                ki = k + i + 1
                if ki % sample_every == 0 or ki == n_steps:
                    records.append(rec.record(ki * h, psi, jumps))
        else:
            us = s.uniforms(span)
            for i in range(span):
                psi, jumped = _qj_step(c, psi, (k + i) * h, h, float(us[i]))
                jumps += jumped
                ki = k + i + 1
                if ki % sample_every == 0 or ki == n_steps:
                    records.append(rec.record(ki * h, psi, jumps))
        k += span
    return records


def _final_state(m: LindbladModel, psi0_amps: np.ndarray, t_final: float, dt: float,
                 unraveling: str, s: NoiseStream) -> tuple[np.ndarray, int]:
    """Lean integration loop returning only the final state and jump count.

    Unlike ``run_trajectory`` this path does not abort on the truncation
    monitor: ensemble estimates are validated against an oracle built on
    the same truncated generator, so rare boundary excursions of single
    members do not invalidate the comparison.
    """
    n_steps, h = _steps_for(t_final, dt)
    c = _compile(m)
    psi = psi0_amps
    jumps = 0
    k = 0
    while k < n_steps:
        span = min(_CHUNK, n_steps - k)
        if unraveling == "qsd":
            zs = s.normals((span, 2 * c.n_channels))
            for i in range(span):
                psi = _qsd_step(c, psi, (k + i) * h, h, _wiener_row(zs[i], h))
        else:
            us = s.uniforms(span)
            for i in range(span):
                psi, jumped = _qj_step(c, psi, (k + i) * h, h, float(us[i]))
                jumps += jumped
        k += span
    return psi, jumps


# Worker-side context for ensemble runs; set once per pool worker.
_WORKER_CTX: dict = {}


def _init_worker(m, psi0_amps, t_final, dt, unraveling, base_seed):
    _WORKER_CTX["args"] = (m, psi0_amps, t_final, dt, unraveling, base_seed)


def _worker_run(index: int) -> np.ndarray:
    m, psi0_amps, t_final, dt, unraveling, base_seed = _WORKER_CTX["args"]
    return _run_one(index, m, psi0_amps, t_final, dt, unraveling, base_seed)


def _run_one(index, m, psi0_amps, t_final, dt, unraveling, base_seed) -> np.ndarray:
    try:
        s = NoiseStream(base_seed, index)
        psi, _ = _final_state(m, psi0_amps, t_final, dt, unraveling, s)
        return psi
    except NumericalError as e:
        raise TrajectoryError(index, e) from e


def ensemble_density(m: LindbladModel, psi0: StateVector, t_final: float, dt: float,
                     unraveling: str, n_traj: int, base_seed: int,
                     workers: int | None = None) -> EnsembleResult:
    """Average |psi><psi| over n_traj independent trajectories at t_final.

    Trajectory i uses NoiseStream(base_seed, i); projectors are summed in
    ascending index order, so the result is identical whether the
    trajectories run serially or on a worker pool.
    """
    unraveling = _normalize_unraveling(unraveling)
    _check_step_args(psi0, m, dt)
    if n_traj < 1:
        raise ValidationError(f"n_traj must be >= 1, got {n_traj}")
    psi0_amps = psi0.normalize().amplitudes
    acc = np.zeros((m.dim, m.dim), dtype=np.complex128)
    if workers is not None and workers > 1 and n_traj > 1:
        chunksize = max(1, n_traj // (8 * workers))
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(m, psi0_amps, t_final, dt, unraveling, base_seed)) as pool:
            for psi in pool.map(_worker_run, range(n_traj), chunksize=chunksize):
                acc += np.outer(psi, psi.conj())
    else:
        for i in range(n_traj):
            psi = _run_one(i, m, psi0_amps, t_final, dt, unraveling, base_seed)
            acc += np.outer(psi, psi.conj())
    acc = (acc + acc.conj().T) / 2.0
    acc /= np.trace(acc).real
    return EnsembleResult(DensityMatrix(acc), n_traj, 1.0 / math.sqrt(n_traj))
