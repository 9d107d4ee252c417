import json
import subprocess
import sys

import numpy as np
import pytest

from qdirac.cli import SCHEMA, main, run, validate
from qdirac.errors import ConfigError


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_gen(tmp_path):
    code = main(["gen", "--mesh", "hemisphere", "--n-r", "3", "--n-s", "12",
                 "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "mesh.obj").exists() and (tmp_path / "frame.json").exists()
    man = _manifest(tmp_path)
    assert man["exit_code"] == 0 and man["results"]["euler_characteristic"] == 1
    assert man["versions"]["numpy"] == np.__version__


def test_check_bc_exit_codes(tmp_path):
    base = ["check-bc", "--mesh", "hemisphere", "--n-r", "3", "--n-s", "12"]
    bad = json.dumps({"kind": "canonical", "V": "N", "Vt": [1, 0, 0]})
    assert main(base + ["--bc", bad, "--out", str(tmp_path / "n")]) == 1
    rep = json.loads((tmp_path / "n" / "check_bc.json").read_text())
    assert rep["message"].startswith("not elliptic, margin 0")
    good = json.dumps({"kind": "canonical", "V": "B", "Vt": [1, 0, 0]})
    assert main(base + ["--bc", good, "--out", str(tmp_path / "b")]) == 0
    rep = json.loads((tmp_path / "b" / "check_bc.json").read_text())
    assert rep["elliptic"] and rep["selfadjoint"]


def test_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mesh": {"kind": "icosphere", "level": 1}, "colour": 3}))
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    man = _manifest(tmp_path / "o")
    assert man["status"] == "ConfigError"
    with pytest.raises(ConfigError):
        validate({"solver": {"svd_tol": -1}})


def test_usage_error_exits_3(capsys):
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 3
    assert main(["gen", "--config", "/nonexistent.json"]) == 3


def test_spectrum_writes_csv_and_figure(tmp_path):
    code = run("spectrum", {"mesh": {"kind": "icosphere", "level": 1},
                            "solver": {"window": [-2.5, 0.5], "deform": [0]}}, tmp_path)
    assert code == 0
    rows = np.loadtxt(tmp_path / "eigenvalues.csv", delimiter=",", skiprows=1, ndmin=2)
    assert len(rows) == _manifest(tmp_path)["results"]["count"]
    assert (tmp_path / "spectrum.png").stat().st_size > 0
    assert (tmp_path / "deform_0.obj").exists()


def test_index_vekua(tmp_path):
    bc = json.dumps({"kind": "vekua", "p1": 1, "p2": 0})
    code = main(["index", "--mesh", "flat_disc", "--n-r", "8", "--n-s", "32", "--bc", bc,
                 "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "index.json").read_text())
    assert (rep["ker_dim"], rep["coker_dim"], rep["index"]) == (1, 1, 0)


def test_vekua_command(tmp_path):
    code = main(["vekua", "--p1", "0", "--p2", "0", "--n-r", "8", "--n-s", "32",
                 "--out", str(tmp_path)])
    assert code == 0
    rows = json.loads((tmp_path / "vekua.json").read_text())
    assert rows[0]["index"] == 2 and rows[0]["fem_ker"] == 2
    for name in ("vekua.csv", "vekua.md", "vekua.png"):
        assert (tmp_path / name).exists()


def test_vekua_length_mismatch(tmp_path):
    cfg = {"vekua": {"p1": [0, 1], "p2": [0, 1, 2], "n_r": 4, "n_s": 16}}
    assert run("vekua", cfg, tmp_path) == 3


def test_flow_command(tmp_path):
    cfg = {"mesh": {"kind": "hemisphere", "n_r": 6, "n_s": 24},
           "bc": {"kind": "family_bcproof", "steps": 16}}
    assert run("flow", cfg, tmp_path) == 0
    data = json.loads((tmp_path / "flow.json").read_text())
    assert data["sf"] == 1 and data["deg_torus"] == 1
    assert (tmp_path / "flow.png").exists() and (tmp_path / "tracks.csv").exists()
    assert run("flow", {**cfg, "solver": {"reverse": True}}, tmp_path / "r") == 0
    assert json.loads((tmp_path / "r" / "flow.json").read_text())["sf"] == -1


def test_deform_double(tmp_path):
    cfg = {"mesh": {"kind": "hemisphere", "n_r": 6, "n_s": 24},
           "bc": {"kind": "family_bcproof", "steps": 8, "t": 0.0},
           "spinor": {"kind": "eigen", "mu": -2.0, "double": True}}
    assert run("deform", cfg, tmp_path) == 0
    rep = json.loads((tmp_path / "deform.json").read_text())
    assert rep["doubled_euler_characteristic"] == 2
    assert (tmp_path / "doubled.obj").exists() and (tmp_path / "deform.png").exists()


def test_table_command(tmp_path):
    cfg = {"table": {"n_r": 6, "n_s": 24, "mus": [0], "reflection": False}}
    assert run("table", cfg, tmp_path) == 0
    data = json.loads((tmp_path / "table.json").read_text())
    assert data["n_modes"] == {"0": 1}
    assert (tmp_path / "sphere_mu0_l0.obj").exists() and (tmp_path / "table.png").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "qdirac.cli", "gen", "--mesh", "icosphere",
                          "--level", "0", "--out", str(tmp_path)], capture_output=True)
    assert out.returncode == 0
    assert "mesh" in SCHEMA["properties"]
