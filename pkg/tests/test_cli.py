import json

import pytest

from unravel.cli import main


def run_cli(*argv):
    return main(list(argv))


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


CLASSICAL_INI = """
[model]
kind = duffing
Gamma = 0.125
g = 0.3

[section]
n_points = 60
n_skip = 5
x0 = 0.5
p0 = 0.0
"""

QUANTUM_INI = """
[model]
kind = duffing
dim = 16
Gamma = 0.125
g = 0.3
beta = 1.0

[run]
unraveling = qsd
dt = 1e-3
base_seed = 3
sample_every = 10

[section]
n_points = 3
n_skip = 0
normalize_by_beta = true
"""

ORACLE_INI = """
[model]
kind = damped-ho
dim = 10
omega = 1.0
gamma = 1.0
nbar = 0.5

[run]
unraveling = qsd
t_final = 0.5
n_trajectories = 60
base_seed = 3

[oracle]
tolerance = 0.2
"""

VALIDATE_INI = """
[model]
kind = damped-ho
dim = 15
omega = 1.0
gamma = 1.0
nbar = 0.5

[run]
base_seed = 5

[validate]
mc_paths = 4000
mc_t = 1.0
shared_t = 1.0
loc_t = 8.0
jump_n_traj = 40
jump_t = 3.0
"""

CONVERGENCE_INI = """
[model]
kind = damped-ho
dim = 8
omega = 1.0
gamma = 1.0
nbar = 0.3

[run]
unraveling = qsd
t_final = 0.5
base_seed = 1

[convergence]
levels = 50, 200
"""


def test_defaults_page(capsys):
    assert run_cli("--defaults") == 0
    out = capsys.readouterr().out
    assert "[model]" in out and "base_seed" in out


def test_no_command_exits_validation(capsys):
    assert run_cli() == 2


def test_classical_section_writes_csv_and_manifest(tmp_path):
    cfg = write(tmp_path, "c.ini", CLASSICAL_INI)
    out = tmp_path / "out"
    assert run_cli("classical-section", "--config", cfg, "--out", str(out)) == 0
    csv_path = out / "run.classical-section.csv"
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "n,x,p"
    assert len(rows) == 61
    manifest = json.loads((out / "run.classical-section.manifest.json").read_text())
    assert manifest["command"] == "classical-section"
    assert manifest["config"]["section"]["n_points"] == 60
    assert manifest["outputs"] == ["run.classical-section.csv"]


def test_classical_section_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "c.ini", CLASSICAL_INI)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli("classical-section", "--config", cfg, "--out", str(out1)) == 0
    assert run_cli("classical-section", "--config", cfg, "--out", str(out2)) == 0
    a = (out1 / "run.classical-section.csv").read_bytes()
    b = (out2 / "run.classical-section.csv").read_bytes()
    assert a == b


def test_classical_section_validation_error(tmp_path):
    cfg = write(tmp_path, "bad.ini", CLASSICAL_INI.replace("n_points = 60",
                                                           "n_points = 0"))
    assert run_cli("classical-section", "--config", cfg, "--out",
                   str(tmp_path / "o")) == 2


def test_missing_config_is_validation_error(tmp_path):
    assert run_cli("classical-section", "--config", str(tmp_path / "nope.ini"),
                   "--out", str(tmp_path / "o")) == 2


def test_quantum_section_small_run(tmp_path):
    cfg = write(tmp_path, "q.ini", QUANTUM_INI)
    out = tmp_path / "out"
    assert run_cli("quantum-section", "--config", cfg, "--out", str(out)) == 0
    rows = (out / "run.quantum-section.csv").read_text().splitlines()
    assert rows[0] == "n,x,p"
    assert len(rows) == 4  # strobes 0, 1, 2
    manifest = json.loads((out / "run.quantum-section.manifest.json").read_text())
    assert "ehrenfest_rms_dp" in manifest["report"]
    assert manifest["report"]["max_boundary_population"] < 1e-3


def test_quantum_section_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, "q.ini", QUANTUM_INI)
    out1, out2, out3 = (tmp_path / d for d in ("a", "b", "c"))
    assert run_cli("quantum-section", "--config", cfg, "--out", str(out1)) == 0
    assert run_cli("quantum-section", "--config", cfg, "--out", str(out2),
                   "--seed", "99") == 0
    assert run_cli("quantum-section", "--config", cfg, "--out", str(out3),
                   "--seed", "99") == 0
    base = (out1 / "run.quantum-section.csv").read_bytes()
    alt1 = (out2 / "run.quantum-section.csv").read_bytes()
    alt2 = (out3 / "run.quantum-section.csv").read_bytes()
    assert base != alt1
    assert alt1 == alt2


def test_quantum_section_requires_duffing(tmp_path):
    cfg = write(tmp_path, "q.ini", QUANTUM_INI.replace("kind = duffing",
                                                       "kind = damped-ho"))
    assert run_cli("quantum-section", "--config", cfg, "--out",
                   str(tmp_path / "o")) == 2


def test_oracle_compare_passes_and_writes_errors(tmp_path):
    cfg = write(tmp_path, "o.ini", ORACLE_INI)
    out = tmp_path / "out"
    assert run_cli("oracle-compare", "--config", cfg, "--out", str(out),
                   "--workers", "1") == 0
    rows = (out / "run.oracle-compare.csv").read_text().splitlines()
    assert rows[0] == "row,col,abs_error"
    assert len(rows) == 1 + 10 * 10
    manifest = json.loads((out / "run.oracle-compare.manifest.json").read_text())
    assert manifest["report"]["passed"] is True
    assert manifest["report"]["max_entrywise_error"] <= 0.2


def test_oracle_compare_rerun_byte_identical(tmp_path):
    cfg = write(tmp_path, "o.ini", ORACLE_INI)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run_cli("oracle-compare", "--config", cfg, "--out", str(out),
                       "--workers", "1") == 0
    assert (out1 / "run.oracle-compare.csv").read_bytes() == \
           (out2 / "run.oracle-compare.csv").read_bytes()


def test_oracle_compare_fails_on_tight_tolerance(tmp_path):
    cfg = write(tmp_path, "o.ini", ORACLE_INI.replace("tolerance = 0.2",
                                                      "tolerance = 1e-6"))
    assert run_cli("oracle-compare", "--config", cfg, "--out",
                   str(tmp_path / "o"), "--workers", "1") == 3


def test_workers_env_fallback(tmp_path, monkeypatch):
    cfg = write(tmp_path, "o.ini", ORACLE_INI)
    monkeypatch.setenv("UNRAVEL_WORKERS", "2")
    assert run_cli("oracle-compare", "--config", cfg, "--out",
                   str(tmp_path / "env")) == 0
    monkeypatch.setenv("UNRAVEL_WORKERS", "zebra")
    assert run_cli("oracle-compare", "--config", cfg, "--out",
                   str(tmp_path / "bad")) == 2


def test_ho_validate(tmp_path, capsys):
    cfg = write(tmp_path, "v.ini", VALIDATE_INI)
    out = tmp_path / "out"
    assert run_cli("ho-validate", "--config", cfg, "--out", str(out)) == 0
    lines = capsys.readouterr().out
    assert "localization" in lines
    rows = (out / "run.ho-validate.csv").read_text().splitlines()
    assert rows[0] == "name,measured,expected,tolerance,passed"
    assert all(row.endswith(",1") for row in rows[1:])


def test_ho_validate_requires_damped_ho(tmp_path):
    cfg = write(tmp_path, "v.ini", VALIDATE_INI.replace("kind = damped-ho",
                                                        "kind = duffing"))
    assert run_cli("ho-validate", "--config", cfg, "--out",
                   str(tmp_path / "o")) == 2


def test_convergence_study(tmp_path):
    cfg = write(tmp_path, "conv.ini", CONVERGENCE_INI)
    out = tmp_path / "out"
    assert run_cli("convergence-study", "--config", cfg, "--out", str(out),
                   "--workers", "1") == 0
    rows = (out / "run.convergence.csv").read_text().splitlines()
    assert rows[0] == "n_trajectories,max_entrywise_error"
    assert len(rows) == 3
    manifest = json.loads((out / "run.convergence.manifest.json").read_text())
    assert manifest["report"]["passed"] is True
