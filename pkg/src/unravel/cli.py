"""Command-line driver.

Subcommands: classical-section, quantum-section, oracle-compare,
ho-validate, convergence-study.  Every run writes its CSV artifacts plus
a JSON manifest holding the fully resolved configuration and package
version, which is enough to reproduce the outputs byte-for-byte.

Exit codes: 0 all checks passed, 2 validation error, 3 numerical error
or failed tolerance check, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import PhasePoint, ehrenfest_defect
from .config import RunConfig, config_as_dict, defaults_reference, load_config
from .errors import NumericalError, ValidationError
from .fock import coherent_state
from .master import propagate, pure_density
from .noise import NoiseStream
from .poincare import (
    SectionSeries,
    classical_section,
    quantum_section,
    stable_strobe_dt,
    write_section_csv,
)
from .trajectories import ensemble_density, run_trajectory
from .validate import (
    CheckResult,
    jump_rate_check,
    localization_check,
    qj_moment_check,
    qsd_moment_check,
    shared_noise_comparison,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_TWO_PI = 2.0 * math.pi


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _resolve_workers(value: int | None) -> int:
    if value is None:
        env = os.environ.get("UNRAVEL_WORKERS", "").strip()
        if env:
            try:
                value = int(env)
            except ValueError as e:
                raise ValidationError(f"UNRAVEL_WORKERS={env!r} is not an integer") from e
    if value is None:
        value = os.cpu_count() or 1
    if value < 1:
        raise ValidationError(f"workers must be >= 1, got {value}")
    return value


def _write_manifest(out_dir: Path, stem: str, command: str, cfg: RunConfig,
                    outputs: list[str], report: dict | None = None) -> Path:
    doc = {
        "command": command,
        "version": __version__,
        "config": config_as_dict(cfg),
        "outputs": outputs,
    }
    if report is not None:
        doc["report"] = report
    path = out_dir / f"{stem}.manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _write_checks_csv(path: Path, checks) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name", "measured", "expected", "tolerance", "passed"])
        for c in checks:
            w.writerow([c.name, _fmt(c.measured), _fmt(c.expected),
                        _fmt(c.tolerance), int(c.passed)])


def cmd_classical_section(cfg: RunConfig, out_dir: Path) -> int:
    n_skip = 100 if cfg.n_skip is None else cfg.n_skip
    series = classical_section(PhasePoint(cfg.x0, cfg.p0), cfg.big_gamma, cfg.g,
                               cfg.n_points, n_skip, cfg.dt)
    stem = f"{cfg.prefix}.classical-section"
    csv_path = out_dir / f"{stem}.csv"
    write_section_csv(series, csv_path)
    _, xs, ps = series.arrays()
    report = {
        "n_points": len(series.points),
        "sigma_x": float(xs.std()),
        "max_abs_x": float(np.abs(xs).max()),
        "max_abs_p": float(np.abs(ps).max()),
    }
    _write_manifest(out_dir, stem, "classical-section", cfg, [csv_path.name], report)
    print(f"classical-section: {len(series.points)} points -> {csv_path}")
    print(f"  sigma_x = {report['sigma_x']:.4f}, "
          f"max|x| = {report['max_abs_x']:.3f}, max|p| = {report['max_abs_p']:.3f}")
    return EXIT_OK


def cmd_quantum_section(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind != "duffing":
        raise ValidationError("quantum-section requires model.kind = duffing")
    n_skip = 20 if cfg.n_skip is None else cfg.n_skip
    if cfg.dim > 256:
        steps = (n_skip + cfg.n_points) * round(_TWO_PI / cfg.dt)
        est_s = steps * (20e-6 + 1.5e-9 * cfg.dim * cfg.dim)
        est_mb = 3 * 16 * cfg.dim * cfg.dim / 1e6
        print(f"warning: dim={cfg.dim} is large; expect roughly {est_s / 60:.0f} min "
              f"and {est_mb:.0f} MB of operator storage", file=sys.stderr)
    model = cfg.build_model()
    # Keep the record cadence at about sample_every * requested dt even if
    # the step must shrink for stability, so strobes always hit a record.
    records_per_period = max(1, round(_TWO_PI / cfg.dt / cfg.sample_every))
    dt_eff, steps_per_period = stable_strobe_dt(model, cfg.dt, records_per_period,
                                                n_periods=n_skip + cfg.n_points)
    if dt_eff < 0.6 * cfg.dt:
        print(f"note: dt reduced to {dt_eff:.3e} to keep explicit stepping stable "
              f"at dim={cfg.dim}", file=sys.stderr)
    t_final = (n_skip + cfg.n_points - 1) * _TWO_PI
    alpha0 = cfg.beta * complex(cfg.x0, cfg.p0) / math.sqrt(2.0)
    psi0 = coherent_state(alpha0, cfg.dim)
    records = run_trajectory(model, psi0, t_final, dt_eff, cfg.unraveling,
                             NoiseStream(cfg.base_seed, 0),
                             steps_per_period // records_per_period)
    full = quantum_section(records, cfg.beta, cfg.normalize_by_beta)
    kept = tuple(q for q in full.points if q.n >= n_skip)
    series = SectionSeries(kept, skipped_transient=n_skip, normalization=full.normalization)
    stem = f"{cfg.prefix}.quantum-section"
    csv_path = out_dir / f"{stem}.csv"
    write_section_csv(series, csv_path)
    ts = np.array([r.t for r in records])
    defect = ehrenfest_defect(ts, np.array([r.q_mean for r in records]),
                              np.array([r.p_mean for r in records]),
                              np.array([r.q3_mean for r in records]),
                              cfg.big_gamma, cfg.g, cfg.beta)
    rms = [float(np.sqrt(np.mean(defect[:, i] ** 2))) for i in (0, 1)] if defect.size else [0.0, 0.0]
    _, xs, _ = series.arrays()
    report = {
        "n_points": len(series.points),
        "dt_effective": dt_eff,
        "sigma_x": float(xs.std()) if len(series.points) > 1 else 0.0,
        "max_boundary_population": max(r.boundary_population for r in records),
        "jump_count": records[-1].jump_count,
        "ehrenfest_rms_dq": rms[0],
        "ehrenfest_rms_dp": rms[1],
    }
    _write_manifest(out_dir, stem, "quantum-section", cfg, [csv_path.name], report)
    print(f"quantum-section: {len(series.points)} points -> {csv_path}")
    print(f"  max boundary population = {report['max_boundary_population']:.2e}")
    print(f"  Ehrenfest residual RMS (dQ, dP) = ({rms[0]:.4f}, {rms[1]:.4f})  [diagnostic]")
    return EXIT_OK


def cmd_oracle_compare(cfg: RunConfig, out_dir: Path, workers: int) -> int:
    model = cfg.build_model()
    psi0 = cfg.initial_state()
    ens = ensemble_density(model, psi0, cfg.t_final, cfg.dt, cfg.unraveling,
                           cfg.n_trajectories, cfg.base_seed, workers=workers)
    oracle = propagate(pure_density(psi0), model, cfg.t_final, cfg.oracle_dt)
    err = np.abs(ens.rho_estimate.entries - oracle.entries)
    max_err = float(err.max())
    stem = f"{cfg.prefix}.oracle-compare"
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["row", "col", "abs_error"])
        for i in range(err.shape[0]):
            for j in range(err.shape[1]):
                w.writerow([i, j, _fmt(err[i, j])])
    passed = max_err <= cfg.tolerance
    report = {
        "unraveling": cfg.unraveling,
        "n_trajectories": cfg.n_trajectories,
        "max_entrywise_error": max_err,
        "stderr_scale": ens.stderr_scale,
        "tolerance": cfg.tolerance,
        "passed": passed,
    }
    _write_manifest(out_dir, stem, "oracle-compare", cfg, [csv_path.name], report)
    print(f"oracle-compare ({cfg.unraveling}, n={cfg.n_trajectories}): "
          f"max entrywise error = {max_err:.4f}, "
          f"stderr scale = {ens.stderr_scale:.4f}, tolerance = {cfg.tolerance}")
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_ho_validate(cfg: RunConfig, out_dir: Path) -> int:
    if cfg.kind != "damped-ho":
        raise ValidationError("ho-validate requires model.kind = damped-ho")
    checks = []
    checks += localization_check(gamma=cfg.gamma, t_final=cfg.loc_t, dt=cfg.dt,
                                 dim=max(cfg.dim, 24), base_seed=cfg.base_seed)

    # Reduced-equation path match, zero temperature: noiseless on the
    # coherent manifold, so the full <a> path must track the exponential.
    alpha0 = 2.0 + 0.0j
    ts, full, reduced = shared_noise_comparison(cfg.omega, cfg.gamma, 0.0, alpha0,
                                                dim=40, t_final=cfg.shared_t,
                                                dt=cfg.dt, base_seed=cfg.base_seed)
    dev0 = float(np.abs(full - reduced).max()) / abs(alpha0)
    checks.append(CheckResult("shared-noise deviation (nbar=0)", dev0, 0.0, 0.01,
                              dev0 <= 0.01))
    if cfg.nbar > 0.0:
        dim_hot = max(40, cfg.dim)
        ts, full, reduced = shared_noise_comparison(cfg.omega, cfg.gamma, cfg.nbar,
                                                    alpha0, dim=dim_hot,
                                                    t_final=cfg.shared_t, dt=cfg.dt,
                                                    base_seed=cfg.base_seed)
        dev_hot = float(np.abs(full - reduced).max()) / abs(alpha0)
        print(f"  diagnostic: shared-noise deviation at nbar={cfg.nbar}: {dev_hot:.4f}")

    checks += qsd_moment_check(cfg.omega, cfg.gamma, cfg.nbar, 1.0 + 0.0j,
                               cfg.mc_t, cfg.dt, cfg.mc_paths, cfg.base_seed)
    checks += qj_moment_check(0.0, cfg.gamma, cfg.nbar, 3.0 + 0.0j,
                              min(cfg.mc_t, 1.0), cfg.dt, cfg.mc_paths, cfg.base_seed)
    jump_check, _ = jump_rate_check(cfg.gamma, 3, cfg.jump_t, cfg.dt,
                                    cfg.jump_n_traj, max(cfg.dim, 8), cfg.base_seed)
    checks.append(jump_check)

    stem = f"{cfg.prefix}.ho-validate"
    csv_path = out_dir / f"{stem}.csv"
    _write_checks_csv(csv_path, checks)
    all_passed = all(c.passed for c in checks)
    report = {"checks": [{"name": c.name, "measured": c.measured, "expected": c.expected,
                          "tolerance": c.tolerance, "passed": c.passed} for c in checks],
              "passed": all_passed}
    _write_manifest(out_dir, stem, "ho-validate", cfg, [csv_path.name], report)
    for c in checks:
        print(c.line())
    return EXIT_OK if all_passed else EXIT_NUMERICAL


def cmd_convergence_study(cfg: RunConfig, out_dir: Path, workers: int) -> int:
    model = cfg.build_model()
    psi0 = cfg.initial_state()
    oracle = propagate(pure_density(psi0), model, cfg.t_final, cfg.oracle_dt)
    rows = []
    errors = []
    for n in cfg.levels:
        ens = ensemble_density(model, psi0, cfg.t_final, cfg.dt, cfg.unraveling,
                               n, cfg.base_seed, workers=workers)
        err = float(np.abs(ens.rho_estimate.entries - oracle.entries).max())
        errors.append(err)
        rows.append([n, err])
        print(f"n={n}: max entrywise error = {err:.5f}")
    ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    ok = all(1.4 <= r <= 2.9 for r in ratios)
    for (na, nb), r in zip(zip(cfg.levels, cfg.levels[1:]), ratios):
        print(f"error ratio {na} -> {nb}: {r:.3f} (expected about sqrt({nb}/{na}))")
    stem = f"{cfg.prefix}.convergence"
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["n_trajectories", "max_entrywise_error"])
        for n, err in rows:
            w.writerow([n, _fmt(err)])
    report = {"levels": list(cfg.levels), "errors": errors, "ratios": ratios, "passed": ok}
    _write_manifest(out_dir, stem, "convergence-study", cfg, [csv_path.name], report)
    print("PASS" if ok else "FAIL", "(ratios within [1.4, 2.9])")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unravel",
        description="Stochastic unravelings of open quantum systems.")
    parser.add_argument("--defaults", action="store_true",
                        help="print the configuration reference page and exit")
    sub = parser.add_subparsers(dest="command")
    for name, needs_workers in [("classical-section", False), ("quantum-section", False),
                                ("oracle-compare", True), ("ho-validate", False),
                                ("convergence-study", True)]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="override run.base_seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: UNRAVEL_WORKERS or CPU count)"
                       if needs_workers else argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.defaults:
        print(defaults_reference())
        return EXIT_OK
    if args.command is None:
        _build_parser().print_help()
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.base_seed = args.seed
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "classical-section":
            return cmd_classical_section(cfg, out_dir)
        if args.command == "quantum-section":
            return cmd_quantum_section(cfg, out_dir)
        if args.command == "oracle-compare":
            return cmd_oracle_compare(cfg, out_dir, _resolve_workers(args.workers))
        if args.command == "ho-validate":
            return cmd_ho_validate(cfg, out_dir)
        if args.command == "convergence-study":
            return cmd_convergence_study(cfg, out_dir, _resolve_workers(args.workers))
        raise ValidationError(f"unknown command {args.command}")
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
