"""Concrete open-system models.

Two systems are provided: the damped harmonic oscillator at finite
temperature, and the quartic double-well (Duffing) oscillator with
sinusoidal forcing, linear damping, and a classicality scale beta that
stretches the phase-space extent of the problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError
from .fock import (
    OperatorMatrix,
    annihilation_op,
    creation_op,
    momentum_op,
    number_op,
    position_op,
)

__all__ = [
    "LindbladModel",
    "HOParams",
    "DuffingParams",
    "build_damped_ho",
    "build_duffing",
    "hamiltonian_at",
]


def _symmetrized(entries: np.ndarray) -> np.ndarray:
    # (A + A†)/2 is Hermitian bit-for-bit, which keeps the model invariant
    # exact even after long chains of matrix products.
    return (entries + entries.conj().T) / 2.0


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """One Markovian open system: H(t) plus a list of coupling operators.

    The full Hamiltonian at time t is
    ``h_static + drive_amplitude * cos(drive_frequency * t) * drive_op``.
    """

    h_static: OperatorMatrix
    drive_op: OperatorMatrix
    drive_amplitude: float
    drive_frequency: float
    lindblads: tuple[OperatorMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "lindblads", tuple(self.lindblads))
        self.h_static.require_hermitian(name="h_static")
        self.drive_op.require_hermitian(name="drive_op")
        dim = self.h_static.dim
        if self.drive_op.dim != dim:
            raise ShapeError(f"drive_op dim {self.drive_op.dim} != h_static dim {dim}")
        for k, op in enumerate(self.lindblads):
            if op.dim != dim:
                raise ShapeError(f"lindblads[{k}] dim {op.dim} != h_static dim {dim}")

    @property
    def dim(self) -> int:
        return self.h_static.dim


def hamiltonian_at(m: LindbladModel, t: float) -> OperatorMatrix:
    """Hamiltonian at time t; Hermitian, 2pi-periodic when drive_frequency=1."""
    h = m.h_static.entries
    if m.drive_amplitude != 0.0:
        h = h + (m.drive_amplitude * math.cos(m.drive_frequency * t)) * m.drive_op.entries
    return OperatorMatrix(h, hermitian_hint=True)


def _validate(params, rules) -> None:
    bad = [f"{name}={getattr(params, name)!r} ({why})"
           for name, ok, why in rules if not ok]
    if bad:
        raise ValidationError(f"invalid {type(params).__name__}: " + "; ".join(bad))


@dataclass(frozen=True)
class HOParams:
    """Damped harmonic oscillator at temperature set by nbar."""

    omega: float
    gamma: float
    nbar: float
    dim: int

    def __post_init__(self):
        _validate(self, [
            ("omega", self.omega > 0, "must be > 0"),
            ("gamma", self.gamma >= 0, "must be >= 0"),
            ("nbar", self.nbar >= 0, "must be >= 0"),
            ("dim", isinstance(self.dim, (int, np.integer)) and self.dim >= 2, "must be an integer >= 2"),
        ])


@dataclass(frozen=True)
class DuffingParams:
    """Forced damped double-well oscillator with classicality scale beta.

    ansatz_coeff multiplies the (QP + PQ) term of the Hamiltonian; it
    defaults to sqrt(Gamma).  The term exists to mimic classical friction
    in the equations of motion, and the default can be overridden to
    explore how well it does so (see the Ehrenfest residual diagnostic).
    """

    Gamma: float
    g: float
    beta: float = 1.0
    dim: int = 64
    ansatz_coeff: float | None = None

    def __post_init__(self):
        _validate(self, [
            ("Gamma", self.Gamma >= 0, "must be >= 0"),
            ("g", math.isfinite(self.g), "must be finite"),
            ("beta", self.beta >= 1, "must be >= 1"),
            ("dim", isinstance(self.dim, (int, np.integer)) and self.dim >= 2, "must be an integer >= 2"),
        ])
        if self.ansatz_coeff is None:
            object.__setattr__(self, "ansatz_coeff", math.sqrt(self.Gamma))


def build_damped_ho(p: HOParams) -> LindbladModel:
    """Damped HO: H = omega a†a, couplings sqrt(nbar*gamma) a† and
    sqrt((nbar+1)*gamma) a.  Zero-coefficient couplings are dropped."""
    h = p.omega * number_op(p.dim).entries
    lindblads = []
    c_up = math.sqrt(p.nbar * p.gamma)
    c_down = math.sqrt((p.nbar + 1.0) * p.gamma)
    if c_up > 0.0:
        lindblads.append(OperatorMatrix(c_up * creation_op(p.dim).entries))
    if c_down > 0.0:
        lindblads.append(OperatorMatrix(c_down * annihilation_op(p.dim).entries))
    zero = OperatorMatrix(np.zeros((p.dim, p.dim), dtype=np.complex128), hermitian_hint=True)
    return LindbladModel(
        h_static=OperatorMatrix(h, hermitian_hint=True),
        drive_op=zero,
        drive_amplitude=0.0,
        drive_frequency=0.0,
        lindblads=tuple(lindblads),
    )


def build_duffing(p: DuffingParams) -> LindbladModel:
    """Quantum forced damped Duffing oscillator at scale beta.

    H_static = P²/2 + Q⁴/(4 beta²) - Q²/2 + ansatz_coeff (QP + PQ), driven
    by g*beta*cos(t) Q; damping enters through L = sqrt(2 Gamma)(Q + iP).
    beta = 1 recovers the unscaled system.
    """
    q = position_op(p.dim).entries
    pm = momentum_op(p.dim).entries
    q2 = q @ q
    h = (pm @ pm) / 2.0 + (q2 @ q2) / (4.0 * p.beta ** 2) - q2 / 2.0
    if p.ansatz_coeff != 0.0:
        h = h + p.ansatz_coeff * (q @ pm + pm @ q)
    lindblads = []
    if p.Gamma > 0.0:
        lindblads.append(OperatorMatrix(math.sqrt(2.0 * p.Gamma) * (q + 1j * pm)))
    return LindbladModel(
        h_static=OperatorMatrix(_symmetrized(h), hermitian_hint=True),
        drive_op=position_op(p.dim),
        drive_amplitude=p.g * p.beta,
        drive_frequency=1.0,
        lindblads=tuple(lindblads),
    )
