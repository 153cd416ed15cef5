import math

import numpy as np
import pytest

from unravel import (
    GapError,
    PhasePoint,
    SectionPoint,
    SectionSeries,
    ValidationError,
    classical_section,
    quantum_section,
    read_section_csv,
    strobe_aligned_dt,
    write_section_csv,
)
from unravel.trajectories import TrajectoryRecord


def _rec(t, q=0.0, p=0.0):
    return TrajectoryRecord(t=t, q_mean=q, p_mean=p, n_mean=0.0, q_var=0.5,
                            p_var=0.5, boundary_population=0.0, jump_count=0,
                            q3_mean=0.0)


def test_strobe_aligned_dt():
    dt, steps = strobe_aligned_dt(1e-3)
    assert steps == 6283
    assert steps * dt == pytest.approx(2.0 * math.pi, abs=1e-15)
    dt10, steps10 = strobe_aligned_dt(1e-3, sample_every=10)
    assert steps10 % 10 == 0
    assert steps10 * dt10 == pytest.approx(2.0 * math.pi, abs=1e-15)


def test_constant_equilibrium_section():
    series = classical_section(PhasePoint(0.0, 0.0), 0.125, 0.0, 3, 0, 1e-3)
    assert [q.n for q in series.points] == [0, 1, 2]
    for q in series.points:
        assert q.x == pytest.approx(0.0, abs=1e-12)
        assert q.p == pytest.approx(0.0, abs=1e-12)


def test_post_transient_fixed_point_section():
    series = classical_section(PhasePoint(0.1, 0.0), 0.125, 0.0, 10, 50, 1e-3)
    assert [q.n for q in series.points] == list(range(50, 60))
    for q in series.points:
        assert q.x == pytest.approx(1.0, abs=1e-3)
        assert q.p == pytest.approx(0.0, abs=1e-3)


def test_periodic_orbit_gives_identical_points():
    # Weak forcing settles onto a period-1 orbit; its strobes must agree
    # to integrator accuracy.
    series = classical_section(PhasePoint(0.9, 0.0), 0.125, 0.05, 5, 200, 1e-3)
    xs = [q.x for q in series.points]
    ps = [q.p for q in series.points]
    assert max(xs) - min(xs) <= 1e-6
    assert max(ps) - min(ps) <= 1e-6


@pytest.mark.slow
def test_chaotic_section_is_extended():
    series = classical_section(PhasePoint(0.5, 0.0), 0.125, 0.3, 2000, 100, 1e-3)
    ns, xs, ps = series.arrays()
    assert len(series.points) == 2000
    assert np.abs(xs).max() <= 3.0
    assert np.abs(ps).max() <= 3.0
    assert xs.std() >= 0.1


def test_section_validation():
    with pytest.raises(ValidationError):
        classical_section(PhasePoint(0.0, 0.0), 0.125, 0.3, 0, 0, 1e-3)
    with pytest.raises(ValidationError):
        SectionSeries((SectionPoint(2, 0.0, 0.0), SectionPoint(1, 0.0, 0.0)), 0)


def test_quantum_section_single_record():
    series = quantum_section([_rec(0.0, 1.0, -1.0)], beta=1.0)
    assert len(series.points) == 1
    assert series.points[0] == SectionPoint(0, 1.0, -1.0)


def test_quantum_section_short_run_single_point():
    dt = 0.01
    records = [_rec(k * dt, 1.0, 2.0) for k in range(100)]  # t < 2 pi
    series = quantum_section(records, beta=1.0)
    assert [q.n for q in series.points] == [0]


def test_quantum_section_constant_records():
    two_pi = 2.0 * math.pi
    dt = two_pi / 100.0
    records = [_rec(k * dt, 0.7, -0.2) for k in range(501)]
    series = quantum_section(records, beta=1.0)
    assert [q.n for q in series.points] == [0, 1, 2, 3, 4, 5]
    for q in series.points:
        assert q.x == pytest.approx(0.7)
        assert q.p == pytest.approx(-0.2)


def test_quantum_section_normalization_divides_by_beta():
    records = [_rec(0.0, 3.0, -1.5)]
    series = quantum_section(records, beta=4.0, normalize_by_beta=True)
    assert series.points[0].x == 3.0 / 4.0
    assert series.points[0].p == -1.5 / 4.0
    assert series.normalization == 0.25
    raw = quantum_section(records, beta=4.0, normalize_by_beta=False)
    assert raw.points[0].x == 3.0
    assert raw.normalization == 1.0


def test_quantum_section_strobe_alignment():
    # Records on a grid commensurate with 2 pi: selected times sit within
    # half the record spacing of each strobe.
    dt, steps = strobe_aligned_dt(0.05)
    records = [_rec(k * dt, math.sin(k * dt), 0.0) for k in range(3 * steps + 1)]
    series = quantum_section(records, beta=1.0)
    assert [q.n for q in series.points] == [0, 1, 2, 3]
    for q in series.points:
        assert abs(q.x - math.sin(q.n * 2.0 * math.pi)) <= dt


def test_quantum_section_gap_error():
    # Densely sampled at both ends but with a hole spanning the strobe at
    # t = 2 pi: no record within half the typical spacing.
    records = ([_rec(k * 0.1) for k in range(11)]
               + [_rec(12.0 + k * 0.1) for k in range(11)])
    with pytest.raises(GapError):
        quantum_section(records, beta=1.0)


def test_csv_round_trip(tmp_path):
    series = SectionSeries((SectionPoint(3, 1.0 / 3.0, -2.0 / 7.0),
                            SectionPoint(4, 0.1, 0.2)), skipped_transient=3)
    path = tmp_path / "section.csv"
    write_section_csv(series, path)
    text = path.read_text()
    assert text.startswith("n,x,p\n")
    back = read_section_csv(path)
    assert back.points == series.points  # 17 significant digits round-trip


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValidationError):
        read_section_csv(path)
