"""States and operators on a truncated Fock (number-state) basis.

Conventions used throughout the package: hbar = 1, mass m = 1, basis
index = occupation number n in ascending order, and

    a = (Q + iP)/sqrt(2),   Q = (a + a†)/sqrt(2),   P = -i(a - a†)/sqrt(2),

so [Q, P] = i on the part of the basis unaffected by truncation.  All
values are immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError

__all__ = [
    "StateVector",
    "OperatorMatrix",
    "TruncationWarning",
    "annihilation_op",
    "creation_op",
    "number_op",
    "identity_op",
    "position_op",
    "momentum_op",
    "fock_state",
    "coherent_state",
    "expectation",
    "variance",
]


class TruncationWarning(UserWarning):
    """The requested state is not well supported by the truncated basis."""


def _check_dim(dim: int) -> int:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise ValidationError(f"invalid dimension {dim!r}: need an integer >= 2")
    return int(dim)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state |psi> over a truncated Fock basis.

    amplitudes[n] is the amplitude on occupation number n.  The array is
    stored read-only; ``normalize`` returns a new instance.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if amps.ndim != 1:
            raise ShapeError(f"state amplitudes must be a vector, got shape {amps.shape}")
        _check_dim(amps.size)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n <= 0.0 or not math.isfinite(n):
            raise ValidationError("cannot normalize a zero or non-finite state")
        return StateVector(self.amplitudes / n)

    def boundary_population(self) -> float:
        """Probability in the top 10% of basis indices (truncation monitor)."""
        start = (9 * self.dim) // 10
        tail = self.amplitudes[start:]
        return float(np.real(np.vdot(tail, tail)))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator on the same truncated basis.

    ``hermitian_hint`` is advisory; it is only verified when a consumer
    calls ``require_hermitian`` (constructors here set it truthfully).
    """

    entries: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"operator must be a square matrix, got shape {m.shape}")
        _check_dim(m.shape[0])
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, hermitian_hint=self.hermitian_hint)

    def hermiticity_defect(self) -> float:
        """max |A - A†| entrywise."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def require_hermitian(self, tol: float = 1e-12, name: str = "operator") -> None:
        defect = self.hermiticity_defect()
        if defect > tol:
            raise ValidationError(f"{name} is not Hermitian: max|A - A†| = {defect:.3e} > {tol:g}")

    # Small algebra so model building reads naturally.  Sums and real
    # rescalings of Hermitian operators stay Hermitian; products do not.
    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries + other.entries,
                              hermitian_hint=self.hermitian_hint and other.hermitian_hint)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries - other.entries,
                              hermitian_hint=self.hermitian_hint and other.hermitian_hint)

    def __mul__(self, scalar) -> "OperatorMatrix":
        keep = self.hermitian_hint and np.isrealobj(np.asarray(scalar))
        return OperatorMatrix(self.entries * scalar, hermitian_hint=bool(keep))

    __rmul__ = __mul__

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.dim != other.dim:
            raise ShapeError(f"operator dims differ: {self.dim} vs {other.dim}")
        return OperatorMatrix(self.entries @ other.entries)


def annihilation_op(dim: int) -> OperatorMatrix:
    """Annihilation operator a on a ``dim``-level truncated basis.

    Entry (n-1, n) = sqrt(n) for n = 1..dim-1; everything else zero.
    The commutator [a, a†] equals the identity except in the truncation
    corner (dim-1, dim-1), where it is -(dim-1).
    """
    dim = _check_dim(dim)
    m = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    m[ns - 1, ns] = np.sqrt(ns)
    return OperatorMatrix(m)


def creation_op(dim: int) -> OperatorMatrix:
    """Creation operator a†, the adjoint of ``annihilation_op``."""
    return annihilation_op(dim).dagger()


def number_op(dim: int) -> OperatorMatrix:
    """Number operator a†a = diag(0, 1, ..., dim-1)."""
    dim = _check_dim(dim)
    return OperatorMatrix(np.diag(np.arange(dim, dtype=np.complex128)), hermitian_hint=True)


def identity_op(dim: int) -> OperatorMatrix:
    dim = _check_dim(dim)
    return OperatorMatrix(np.eye(dim, dtype=np.complex128), hermitian_hint=True)


def position_op(dim: int) -> OperatorMatrix:
    """Position quadrature Q = (a + a†)/sqrt(2); Hermitian."""
    a = annihilation_op(dim).entries
    return OperatorMatrix((a + a.conj().T) / np.sqrt(2.0), hermitian_hint=True)


def momentum_op(dim: int) -> OperatorMatrix:
    """Momentum quadrature P = -i(a - a†)/sqrt(2); Hermitian."""
    a = annihilation_op(dim).entries
    return OperatorMatrix(-1j * (a - a.conj().T) / np.sqrt(2.0), hermitian_hint=True)


def fock_state(n: int, dim: int) -> StateVector:
    """Number state |n> on a ``dim``-level basis."""
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise IndexError(f"occupation number {n} outside basis range [0, {dim})")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[n] = 1.0
    return StateVector(amps)


def coherent_state(alpha: complex, dim: int) -> StateVector:
    """Coherent state |alpha>, renormalized within the truncated basis.

    Amplitudes are proportional to alpha^n / sqrt(n!), evaluated in log
    space to stay finite for any alpha.  A ``TruncationWarning`` is
    emitted when |alpha|^2 + 5|alpha| + 10 > dim, the rule of thumb for
    an adequate basis; the state is still returned.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    mag = abs(alpha)
    if mag == 0.0:
        return fock_state(0, dim)
    if mag ** 2 + 5.0 * mag + 10.0 > dim:
        warnings.warn(
            f"dim={dim} is marginal for |alpha|={mag:.3g}; "
            "expect a visible truncation residual",
            TruncationWarning,
            stacklevel=2,
        )
    ns = np.arange(dim)
    logmag = ns * math.log(mag) - 0.5 * np.array([math.lgamma(n + 1.0) for n in range(dim)])
    logmag -= logmag.max()
    amps = np.exp(logmag) * np.exp(1j * ns * np.angle(alpha))
    return StateVector(amps).normalize()


def _check_match(psi: StateVector, a: OperatorMatrix) -> None:
    if psi.dim != a.dim:
        raise ShapeError(f"state dim {psi.dim} does not match operator dim {a.dim}")


def expectation(psi: StateVector, a: OperatorMatrix) -> complex:
    """<psi| A |psi> for a normalized state."""
    _check_match(psi, a)
    return complex(np.vdot(psi.amplitudes, a.entries @ psi.amplitudes))


def variance(psi: StateVector, a: OperatorMatrix) -> float:
    """<A^2> - <A>^2, real part; nonnegative up to rounding for Hermitian A."""
    _check_match(psi, a)
    w = a.entries @ psi.amplitudes
    m2 = np.vdot(psi.amplitudes, a.entries @ w)
    m1 = np.vdot(psi.amplitudes, w)
    return float((m2 - m1 * m1).real)
