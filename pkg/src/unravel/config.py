"""Run configuration: a flat INI file with sections.

Every knob has a documented default; ``defaults_reference()`` generates
the single reference page listing them all.  Validation failures name
the offending ``section.key`` so configs are easy to fix.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields

from .errors import ValidationError
from .fock import StateVector, coherent_state, fock_state
from .model import DuffingParams, HOParams, LindbladModel, build_damped_ho, build_duffing

__all__ = ["RunConfig", "load_config", "defaults_reference"]


@dataclass
class RunConfig:
    # [model]
    kind: str = "damped-ho"            # damped-ho | duffing
    dim: int = 15                      # Fock truncation dimension
    omega: float = 1.0                 # HO frequency
    gamma: float = 1.0                 # HO damping rate (inverse relaxation time)
    nbar: float = 0.5                  # HO thermal mean photon number
    big_gamma: float = 0.125           # Duffing damping Gamma
    g: float = 0.3                     # Duffing drive strength
    beta: float = 1.0                  # Duffing classicality scale
    ansatz_coeff: float | None = None  # (QP+PQ) coefficient; blank = sqrt(Gamma)
    # [run]
    unraveling: str = "qsd"            # qsd | qj
    dt: float = 1e-3                   # stochastic/oracle step
    t_final: float = 2.0               # trajectory end time (non-section commands)
    n_trajectories: int = 1000         # ensemble size
    base_seed: int = 2026              # RNG base seed
    sample_every: int = 10             # record every this many steps
    initial: str = "fock:1"            # fock:N | coherent:RE[,IM]
    # [section]
    n_skip: int | None = None          # transient periods; default 100 classical / 20 quantum
    n_points: int = 300                # strobe points to keep
    normalize_by_beta: bool = True     # divide quantum section by beta
    x0: float = 0.5                    # classical initial position
    p0: float = 0.0                    # classical initial momentum
    # [oracle]
    oracle_dt: float = 1e-3            # master-equation RK4 step
    tolerance: float = 0.05            # max entrywise |rho_hat - rho_oracle| allowed
    # [validate]
    loc_t: float = 10.0                # localization run length
    mc_paths: int = 10000              # Monte Carlo paths for moment checks
    mc_t: float = 2.0                  # Monte Carlo end time
    shared_t: float = 2.0              # shared-noise comparison end time
    jump_n_traj: int = 200             # trajectories for the jump-rate check
    jump_t: float = 5.0                # jump-rate run length
    # [convergence]
    levels: tuple[int, ...] = (250, 1000, 4000)  # ensemble sizes, ascending
    # [output]
    prefix: str = "run"                # output file name prefix

    def validate(self) -> None:
        checks = [
            ("model.kind", self.kind in ("damped-ho", "duffing"), "must be damped-ho or duffing"),
            ("model.dim", self.dim >= 2, "must be >= 2"),
            ("model.omega", self.omega > 0, "must be > 0"),
            ("model.gamma", self.gamma >= 0, "must be >= 0"),
            ("model.nbar", self.nbar >= 0, "must be >= 0"),
            ("model.Gamma", self.big_gamma >= 0, "must be >= 0"),
            ("model.beta", self.beta >= 1, "must be >= 1"),
            ("run.unraveling", self.unraveling in ("qsd", "qj"), "must be qsd or qj"),
            ("run.dt", self.dt > 0, "must be > 0"),
            ("run.t_final", self.t_final >= 0, "must be >= 0"),
            ("run.n_trajectories", self.n_trajectories >= 1, "must be >= 1"),
            ("run.sample_every", self.sample_every >= 1, "must be >= 1"),
            ("section.n_skip", self.n_skip is None or self.n_skip >= 0, "must be >= 0"),
            ("section.n_points", self.n_points >= 1, "must be >= 1"),
            ("oracle.oracle_dt", self.oracle_dt > 0, "must be > 0"),
            ("oracle.tolerance", self.tolerance > 0, "must be > 0"),
            ("validate.mc_paths", self.mc_paths >= 10, "must be >= 10"),
            ("validate.jump_n_traj", self.jump_n_traj >= 1, "must be >= 1"),
            ("convergence.levels", len(self.levels) >= 2 and all(b > a for a, b in zip(self.levels, self.levels[1:])),
             "need at least two ascending sizes"),
        ]
        bad = [f"{path} {why}" for path, ok, why in checks if not ok]
        if bad:
            raise ValidationError("invalid config: " + "; ".join(bad))

    def build_model(self) -> LindbladModel:
        if self.kind == "damped-ho":
            return build_damped_ho(HOParams(self.omega, self.gamma, self.nbar, self.dim))
        return build_duffing(DuffingParams(self.big_gamma, self.g, self.beta,
                                           self.dim, self.ansatz_coeff))

    def initial_state(self) -> StateVector:
        tag, _, arg = self.initial.partition(":")
        try:
            if tag == "fock":
                return fock_state(int(arg or 0), self.dim)
            if tag == "coherent":
                re, _, im = arg.partition(",")
                return coherent_state(complex(float(re or 0.0), float(im or 0.0)), self.dim)
        except (ValueError, IndexError) as e:
            raise ValidationError(f"run.initial: cannot parse {self.initial!r}: {e}") from e
        raise ValidationError(f"run.initial: unknown form {self.initial!r}; use fock:N or coherent:RE[,IM]")


# section -> key -> (attribute, parser, description)
def _pos_or_blank(text: str):
    return None if text.strip() == "" else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _levels(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace(",", " ").split())


_SCHEMA = {
    "model": {
        "kind": ("kind", str, "system: damped-ho or duffing"),
        "dim": ("dim", int, "Fock truncation dimension"),
        "omega": ("omega", float, "HO frequency"),
        "gamma": ("gamma", float, "HO damping rate"),
        "nbar": ("nbar", float, "HO thermal mean photon number"),
        "Gamma": ("big_gamma", float, "Duffing damping"),
        "g": ("g", float, "Duffing drive strength"),
        "beta": ("beta", float, "Duffing classicality scale (>= 1)"),
        "ansatz_coeff": ("ansatz_coeff", _pos_or_blank, "(QP+PQ) coefficient; blank = sqrt(Gamma)"),
    },
    "run": {
        "unraveling": ("unraveling", lambda s: s.strip().lower(), "qsd or qj"),
        "dt": ("dt", float, "stochastic integrator step"),
        "t_final": ("t_final", float, "end time for non-section commands"),
        "n_trajectories": ("n_trajectories", int, "ensemble size"),
        "base_seed": ("base_seed", int, "RNG base seed"),
        "sample_every": ("sample_every", int, "record every this many steps"),
        "initial": ("initial", str, "initial state: fock:N or coherent:RE[,IM]"),
    },
    "section": {
        "n_skip": ("n_skip", lambda s: None if s.strip() == "" else int(s),
                   "transient periods to skip (blank: 100 classical, 20 quantum)"),
        "n_points": ("n_points", int, "strobe points to keep"),
        "normalize_by_beta": ("normalize_by_beta", _bool, "divide quantum section by beta"),
        "x0": ("x0", float, "classical initial position"),
        "p0": ("p0", float, "classical initial momentum"),
    },
    "oracle": {
        "oracle_dt": ("oracle_dt", float, "master-equation RK4 step"),
        "tolerance": ("tolerance", float, "allowed max entrywise error vs oracle"),
    },
    "validate": {
        "loc_t": ("loc_t", float, "localization run length"),
        "mc_paths": ("mc_paths", int, "Monte Carlo paths for moment checks"),
        "mc_t": ("mc_t", float, "Monte Carlo end time"),
        "shared_t": ("shared_t", float, "shared-noise comparison end time"),
        "jump_n_traj": ("jump_n_traj", int, "trajectories for jump-rate check"),
        "jump_t": ("jump_t", float, "jump-rate run length"),
    },
    "convergence": {
        "levels": ("levels", _levels, "comma-separated ensemble sizes, ascending"),
    },
    "output": {
        "prefix": ("prefix", str, "output file name prefix"),
    },
}


def load_config(path) -> RunConfig:
    """Parse and validate an INI run configuration."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ValidationError(f"config file not found: {path}")
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValidationError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            spec = _SCHEMA[section].get(key)
            if spec is None:
                raise ValidationError(f"unknown config key {section}.{key}")
            attr, parse, _ = spec
            try:
                setattr(cfg, attr, parse(raw))
            except (TypeError, ValueError) as e:
                raise ValidationError(f"bad value for {section}.{key}: {raw!r} ({e})") from e
    cfg.validate()
    return cfg


def config_as_dict(cfg: RunConfig) -> dict:
    """Resolved configuration as nested {section: {key: value}} for manifests."""
    by_attr = {attr: (section, key) for section, keys in _SCHEMA.items()
               for key, (attr, _, _) in keys.items()}
    out: dict = {section: {} for section in _SCHEMA}
    for f in fields(cfg):
        section, key = by_attr[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        out[section][key] = value
    return out


def defaults_reference() -> str:
    """One generated page documenting every config key and its default."""
    cfg = RunConfig()
    lines = [
        "# Run configuration reference",
        "",
        "INI format; every key optional.  Defaults below.",
        "",
    ]
    for section, keys in _SCHEMA.items():
        lines.append(f"## [{section}]")
        lines.append("")
        lines.append("| key | default | meaning |")
        lines.append("| --- | --- | --- |")
        for key, (attr, _, desc) in keys.items():
            default = getattr(cfg, attr)
            if isinstance(default, tuple):
                default = ",".join(map(str, default))
            if default is None:
                default = "(blank)"
            lines.append(f"| {key} | `{default}` | {desc} |")
        lines.append("")
    return "\n".join(lines)
