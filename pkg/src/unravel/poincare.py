"""Constant-phase (stroboscopic) surfaces of section.

A periodically forced flow becomes a planar map when sampled at the
drive phase, t_n = 2 pi n.  Classical sections integrate the Duffing
equation with a step adjusted to divide 2 pi exactly, so strobe times
are hit exactly; quantum sections pick the trajectory record nearest
each strobe time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .classical import PhasePoint, _rk4_span
from .errors import DivergenceError, GapError, StepSizeError, ValidationError
from .model import LindbladModel
from .trajectories import TrajectoryRecord, floquet_growth_factor

__all__ = [
    "SectionPoint",
    "SectionSeries",
    "strobe_aligned_dt",
    "stable_strobe_dt",
    "classical_section",
    "quantum_section",
    "write_section_csv",
    "read_section_csv",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SectionPoint:
    n: int
    x: float
    p: float


@dataclass(frozen=True, eq=False)
class SectionSeries:
    """Ordered strobe samples plus how they were produced.

    ``normalization`` records the factor applied to both coordinates
    (1, or 1/beta when a quantum section is rescaled for overlay with
    the classical map).
    """

    points: tuple[SectionPoint, ...]
    skipped_transient: int
    normalization: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        ns = [q.n for q in self.points]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValidationError("section strobe indices must be strictly increasing")

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ns = np.array([q.n for q in self.points], dtype=np.int64)
        xs = np.array([q.x for q in self.points])
        ps = np.array([q.p for q in self.points])
        return ns, xs, ps


def strobe_aligned_dt(dt: float, sample_every: int = 1) -> tuple[float, int]:
    """Largest step <= about dt that divides one period 2 pi, with the
    steps-per-period count rounded to a multiple of sample_every.

    Returns (adjusted dt, steps per period)."""
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if sample_every < 1:
        raise ValidationError(f"sample_every must be >= 1, got {sample_every}")
    steps = max(1, round(TWO_PI / dt))
    steps = max(sample_every, sample_every * round(steps / sample_every))
    return TWO_PI / steps, steps


def stable_strobe_dt(m: LindbladModel, dt_request: float, sample_every: int = 1,
                     n_periods: int = 1, growth_budget: float = 2.0,
                     max_halvings: int = 14) -> tuple[float, int]:
    """Largest strobe-aligned step at which explicit stepping stays stable.

    Explicit first-order stepping amplifies the stiffest basis modes by the
    spectral radius of I + dt*(drift matrix) each step; for the quartic
    Hamiltonians this exceeds 1 at coarse dt and spurious amplitude climbs
    the basis until the truncation monitor aborts.  Starting from
    ``dt_request`` the step is halved (keeping strobe alignment) until the
    accumulated log-growth over the whole run is within ``growth_budget``.
    Returns (dt, steps per period).
    """
    for j in range(max_halvings):
        dt_j, spp_j = strobe_aligned_dt(dt_request / 2.0 ** j, sample_every)
        growth = em_growth_factor(m, dt_j) - 1.0
        if growth * spp_j * n_periods <= growth_budget:
            return dt_j, spp_j
    raise StepSizeError(
        f"no stable strobe-aligned step found down to {dt_request / 2.0 ** (max_halvings - 1):.2e}; "
        "reduce the basis dimension")


def classical_section(s0: PhasePoint, Gamma: float, g: float, n_points: int,
                      n_skip: int, dt: float) -> SectionSeries:
    """Strobe samples n = n_skip .. n_skip+n_points-1 of the Duffing flow."""
    if n_points < 1:
        raise ValidationError(f"n_points must be >= 1, got {n_points}")
    if n_skip < 0:
        raise ValidationError(f"n_skip must be >= 0, got {n_skip}")
    h, steps = strobe_aligned_dt(dt)
    x, p = s0.x, s0.p
    gamma2 = 2.0 * Gamma
    points = []
    if n_skip == 0:
        points.append(SectionPoint(0, float(x), float(p)))
    for n in range(1, n_skip + n_points):
        # Each period starts at drive phase 0, so strobe times are exact
        # and no precision is lost to large cosine arguments.
        x, p, _, _ = _rk4_span(x, p, gamma2, g, 0.0, h, steps)
        if not (math.isfinite(x) and math.isfinite(p)):
            raise DivergenceError(n * TWO_PI)
        if n >= n_skip:
            points.append(SectionPoint(n, float(x), float(p)))
    return SectionSeries(tuple(points), skipped_transient=n_skip, normalization=1.0)


def quantum_section(records: list[TrajectoryRecord], beta: float,
                    normalize_by_beta: bool = False) -> SectionSeries:
    """Strobe the (<Q>, <P>) series of a trajectory at t = 2 pi n.

    The record nearest each strobe is selected; a strobe with no record
    within half the record spacing raises a GapError.  With
    ``normalize_by_beta`` both coordinates are divided by exactly beta,
    which puts the section in classical units for overlay plots.
    """
    if not records:
        raise ValidationError("no records to section")
    if beta <= 0.0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    ts = np.array([r.t for r in records])
    if np.any(np.diff(ts) <= 0.0):
        raise ValidationError("records must be strictly increasing in time")
    if ts.size == 1:
        n = int(round(ts[0] / TWO_PI))
        scale = 1.0 / beta if normalize_by_beta else 1.0
        r = records[0]
        return SectionSeries((SectionPoint(n, r.q_mean * scale, r.p_mean * scale),),
                             skipped_transient=n, normalization=scale)
    tol = float(np.median(np.diff(ts))) / 2.0
    n_lo = max(0, math.ceil((ts[0] - tol) / TWO_PI))
    n_hi = math.floor((ts[-1] + tol) / TWO_PI)
    scale = 1.0 / beta if normalize_by_beta else 1.0
    points = []
    for n in range(n_lo, n_hi + 1):
        t_n = n * TWO_PI
        i = int(np.searchsorted(ts, t_n))
        best = min((j for j in (i - 1, i) if 0 <= j < ts.size),
                   key=lambda j: abs(ts[j] - t_n))
        if abs(ts[best] - t_n) > tol * (1.0 + 1e-9):
            raise GapError(
                f"no record within {tol:g} of strobe t = 2*pi*{n} = {t_n:g}; "
                "sample more densely or align sampling with the drive period")
        r = records[best]
        points.append(SectionPoint(n, r.q_mean * scale, r.p_mean * scale))
    return SectionSeries(tuple(points), skipped_transient=n_lo, normalization=scale)


def write_section_csv(series: SectionSeries, path) -> None:
    """CSV with header n,x,p; floats as 17-significant-digit decimal text."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["n", "x", "p"])
        for q in series.points:
            w.writerow([q.n, format(q.x, ".17g"), format(q.p, ".17g")])


def read_section_csv(path) -> SectionSeries:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:3] != ["n", "x", "p"]:
        raise ValidationError(f"{path}: expected header n,x,p")
    points = tuple(SectionPoint(int(r[0]), float(r[1]), float(r[2])) for r in rows[1:])
    skip = points[0].n if points else 0
    return SectionSeries(points, skipped_transient=skip)
