"""Configuration parsing, validation paths, and the command line surface."""

import json

import numpy as np
import pytest

from torusma.cli import build_parser, main
from torusma.config import ExperimentConfig, default_config
from torusma.diagnostics import CSV_COLUMNS
from torusma.errors import ConfigError
from torusma.grid import load_field


def cfg_from(data):
    return ExperimentConfig.from_dict(data)


def small_direct_config(**overrides):
    data = {
        "grid": {"n": 1, "N": 16},
        "solve_ma": {"lam": 1.0,
                     "source": {"seed": 11, "amplitude": 0.3}},
        "schedule": {"s_min": 0.5, "s_max": 2.0},
    }
    data.update(overrides)
    return data


# -- validation ------------------------------------------------------------

def test_default_config_is_valid_and_buildable():
    cfg = cfg_from(default_config())
    grid = cfg.build_grid()
    assert (grid.n, grid.N) == (2, 16)
    assert cfg.build_twist() is not None
    assert cfg.build_collapsing(grid).c_value == 2.0
    assert cfg.build_schedule()[0] == 0.25
    assert cfg.build_solver_options().newton_tol == 1e-10


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["grid"].update(N=7), "grid.N"),
    (lambda d: d["grid"].update(N=300), "grid.N"),
    (lambda d: d["grid"].update(n=3), "grid.n"),
    (lambda d: d["grid"].pop("N"), "grid.N"),
    (lambda d: d.update(bogus={}), "config.bogus"),
    (lambda d: d["solver"].update(frobnicate=1), "solver.frobnicate"),
    (lambda d: d["solver"].update(newton_tol=-1.0), "solver"),
    (lambda d: d["schedule"].update(s_min=-2.0), "schedule.s_min"),
    (lambda d: d["schedule"].update(ratio=1.0), "schedule.ratio"),
    (lambda d: d["omega0"]["perturbation"].pop("seed"),
     "omega0.perturbation.seed"),
    (lambda d: d["omega0"]["perturbation"].update(amplitude=0.0),
     "omega0.perturbation.amplitude"),
    (lambda d: d["omega0"].update(matrix=[[1.0]]), "omega0.matrix"),
    (lambda d: d["twist"].update(matrix=[[1.0, "x"], [0.0, 1.0]]),
     "twist.matrix[0][1]"),
    (lambda d: d["maxtime"].update(s_max=0.0), "maxtime.s_max"),
    (lambda d: d["solve_ma"].update(lam=0.0), "solve_ma.lam"),
    (lambda d: d["output"].update(directory=""), "output.directory"),
])
def test_validation_reports_dotted_field_path(mutate, field):
    data = default_config()
    mutate(data)
    with pytest.raises(ConfigError) as err:
        cfg_from(data)
    assert err.value.field == field


def test_collapsing_requires_two_dimensions():
    data = small_direct_config()
    data["collapsing"] = {"omega_P": [[1.0]], "sigma0": [[1.0]]}
    with pytest.raises(ConfigError) as err:
        cfg_from(data)
    assert err.value.field == "collapsing"


def test_matrix_entries_accept_re_im_pairs():
    cfg = cfg_from({
        "grid": {"n": 2, "N": 8},
        "omega0": {"matrix": [[2.0, [0.0, 1.0]], [[0.0, -1.0], 2.0]]},
    })
    m = cfg.build_omega0()
    assert m.entries[0, 0, 0, 0, 0, 1] == 1j
    assert m.entries[0, 0, 0, 0, 1, 0] == -1j


def test_booleans_are_not_numbers():
    with pytest.raises(ConfigError):
        cfg_from({"grid": {"n": 1, "N": True}})


# -- hashing and resolution ------------------------------------------------

def test_hash_is_stable_and_covers_defaults():
    a = cfg_from(default_config())
    b = cfg_from(default_config())
    assert a.hash() == b.hash()
    # writing a default out explicitly must not change the hash
    data = default_config()
    data["solver"]["max_newton"] = 50
    assert cfg_from(data).hash() == a.hash()
    # while changing anything that affects results must
    data["solver"]["max_newton"] = 49
    assert cfg_from(data).hash() != a.hash()
    data = default_config()
    data["omega0"]["perturbation"]["seed"] = 32
    assert cfg_from(data).hash() != a.hash()


def test_resolved_pins_every_solver_tolerance():
    cfg = cfg_from(small_direct_config())
    solver = cfg.resolved()["solver"]
    from torusma.ma import SolverOptions
    defaults = SolverOptions()
    for key, value in solver.items():
        assert value == getattr(defaults, key)


def test_omega0_from_file_matches_from_dict(tmp_path):
    text = """
[grid]
n = 2
N = 8

[omega0]
matrix = [[2.0, [0.0, 1.0]], [[0.0, -1.0], 2.0]]

[solver]
newton_tol = 1e-9
"""
    p = tmp_path / "exp.toml"
    p.write_text(text)
    cfg = ExperimentConfig.from_file(p)
    same = cfg_from({"grid": {"n": 2, "N": 8},
                     "omega0": {"matrix": [[2.0, [0.0, 1.0]],
                                           [[0.0, -1.0], 2.0]]},
                     "solver": {"newton_tol": 1e-9}})
    assert cfg.hash() == same.hash()


def test_unreadable_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("not toml [")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(bad)


# -- command line ----------------------------------------------------------

def write_toml(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_solve_ma_roundtrip_and_determinism(tmp_path):
    conf = write_toml(tmp_path, """
[grid]
n = 1
N = 16

[solve_ma]
lam = 1.0
[solve_ma.source]
seed = 11
amplitude = 0.3
""")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["solve-ma", "--config", conf, "--out", str(out),
                     "--snapshot-fields", "--verbose"])
        assert code == 0
        outs.append(out)
    for fname in ("manifest.json", "phi.field", "trace.csv"):
        assert (outs[0] / fname).read_bytes() == \
            (outs[1] / fname).read_bytes()
    m = json.loads((outs[0] / "manifest.json").read_text())
    assert m["artifact"] == "solve-ma"
    assert m["tool"]["name"] == "torusma"
    assert m["config_hash"]
    assert m["config"]["grid"] == {"n": 1, "N": 16}
    assert m["results"]["final_residual"] <= 1e-10
    phi = load_field(outs[0] / "phi.field")
    assert np.abs(phi.values).max() == m["results"]["sup_phi"]


def test_invalid_grid_exits_2_naming_the_field(tmp_path, capsys):
    conf = write_toml(tmp_path, "[grid]\nn = 2\nN = 7\n")
    code = main(["solve-ma", "--config", conf, "--out",
                 str(tmp_path / "o")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == "grid.N"
    assert err["exit_code"] == 2
    on_disk = json.loads((tmp_path / "o" / "failure.json").read_text())
    assert on_disk == err


def test_infeasible_parameter_exits_3(tmp_path, capsys):
    conf = write_toml(tmp_path, """
[grid]
n = 2
N = 8

[twist]
matrix = [[-1.0, 0.0], [0.0, 0.0]]

[schedule]
s_min = 2.0
s_max = 4.0
""")
    code = main(["sweep", "--config", conf, "--out", str(tmp_path / "o")])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InfeasibleParameterError"
    assert err["s"] == 2.0


def test_non_convergence_exits_4(tmp_path, capsys):
    conf = write_toml(tmp_path, """
[grid]
n = 1
N = 16

[solver]
max_newton = 1

[solve_ma]
[solve_ma.source]
seed = 11
amplitude = 0.3
""")
    code = main(["solve-ma", "--config", conf, "--out",
                 str(tmp_path / "o")])
    assert code == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "NonConvergenceError"


def test_maxtime_example_manifest(tmp_path):
    conf = write_toml(tmp_path, """
[grid]
n = 2
N = 8

[omega0]
matrix = [[1.0, 0.0], [0.0, 1.0]]

[twist]
matrix = [[-1.0, 0.0], [0.0, 0.0]]

[maxtime]
s_max = 4.0
""")
    out = tmp_path / "mt"
    assert main(["maxtime", "--config", conf, "--out", str(out)]) == 0
    r = json.loads((out / "manifest.json").read_text())["results"]
    assert r["T_closed"] == 1.0
    assert 0.99 <= r["T_bisect"] <= 1.01
    assert r["verdict"] == "bracketed"
    assert all("feasible" in p for p in r["probes"])


def test_verify_identities_default_config(tmp_path):
    out = tmp_path / "vi"
    assert main(["verify-identities", "--out", str(out)]) == 0
    r = json.loads((out / "manifest.json").read_text())["results"]
    assert r["pass"] is True
    assert r["cherrier"]["residual_fine"] <= 1e-6
    assert r["trdet"]["max_residual"] <= 1e-12
    assert r["trdet"]["pointwise_pairs"] >= 1000
    assert r["gauduchon"]["closed_defect"] <= 1e-8
    assert r["gauduchon"]["generic_defect"] > 1e-3
    assert r["volume_expansion"]["max_deviation"] <= 1e-12
    assert r["ce"]["residual"] <= r["ce"]["threshold"]


def test_sweep_writes_csv_and_snapshots(tmp_path):
    conf = write_toml(tmp_path, """
[grid]
n = 1
N = 16

[omega0]
[omega0.perturbation]
seed = 311
amplitude = 0.2
max_mode = 1
num_modes = 4

[schedule]
s_min = 1.0
s_max = 4.0
""")
    out = tmp_path / "sw"
    assert main(["sweep", "--config", conf, "--out", str(out),
                 "--snapshot-fields"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == ("s,sup_phi,final_residual,newton_iterations,"
                       "positivity_margin,sup_ric,ce_residual")
    assert len(lines) == 4
    snaps = sorted((out / "snapshots").iterdir())
    assert [p.name for p in snaps] == [f"phi_{i:04d}.field"
                                       for i in range(3)]
    load_field(snaps[0])


def test_normalized_sweep_diagnostics_contract(tmp_path):
    conf = write_toml(tmp_path, """
[grid]
n = 2
N = 8

[collapsing]
omega_P = [[2.0, 0.0], [0.0, 1.0]]
sigma0 = [[1.0, 0.0], [0.0, 0.0]]

[schedule]
s_min = 10.0
s_max = 160.0
""")
    out = tmp_path / "nsw"
    assert main(["normalized-sweep", "--config", conf,
                 "--out", str(out)]) == 0
    lines = (out / "diagnostics.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 6
    r = json.loads((out / "manifest.json").read_text())["results"]
    assert r["c_value"] == 2.0
    assert len(r["records"]) == 5
    assert "sup_phi_scaled" in r["ratios"]


def test_acceptance_unknown_suite_exits_2(tmp_path, capsys):
    code = main(["acceptance", "--suite", "bogus",
                 "--out", str(tmp_path / "o")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == "suite.name"
