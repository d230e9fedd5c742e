import json
import os
import subprocess
import sys

import pytest

CMD = [sys.executable, "-m", "dilatlab.cli"]


def run_cli(*args, env_seed=None):
    env = os.environ.copy()
    env.pop("DILATLAB_SEED", None)
    if env_seed is not None:
        env["DILATLAB_SEED"] = str(env_seed)
    return subprocess.run(CMD + list(args), capture_output=True, env=env)


def test_list_shows_ids():
    proc = run_cli("list", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert "conical:heisenberg:koranyi" in payload["structures"]
    assert "engel" in payload["groups"]


def test_verify_passes_on_euclidean():
    proc = run_cli("verify", "euclidean:2", "--samples", "40", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["verdict"] is True
    assert payload["sweeps"]["a3"]["verdict"] is True


def test_verify_unknown_id_exits_2():
    proc = run_cli("verify", "nosuch")
    assert proc.returncode == 2


def test_bad_arguments_exit_2():
    proc = run_cli("sweep", "euclidean:2", "--defect", "bogus")
    assert proc.returncode == 2


def test_verify_deterministic_bytes():
    a = run_cli("verify", "chart:2", "--samples", "30", "--json", env_seed=7)
    b = run_cli("verify", "chart:2", "--samples", "30", "--json", env_seed=7)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_sweep_writes_csv_and_figure(tmp_path):
    out = tmp_path / "report.csv"
    proc = run_cli("sweep", "chart:2", "--defect", "a3", "--samples", "10",
                   "--out", str(out), "--json")
    assert proc.returncode == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,defect"
    assert len(lines) == 17
    figure = out.with_suffix(".png")
    assert figure.exists() and figure.stat().st_size > 1000


def test_sweep_no_plot_skips_figure(tmp_path):
    out = tmp_path / "plain.csv"
    proc = run_cli("sweep", "euclidean:2", "--defect", "cone", "--samples", "8",
                   "--out", str(out), "--no-plot", "--json")
    assert proc.returncode == 0
    assert out.exists()
    assert not out.with_suffix(".png").exists()


def test_sweep_deterministic_bytes(tmp_path):
    args = ("sweep", "conical:heisenberg:koranyi", "--defect", "a4",
            "--samples", "10", "--json")
    a = run_cli(*args, env_seed=3)
    b = run_cli(*args, env_seed=3)
    assert a.returncode == 0
    assert a.stdout == b.stdout


def test_sweep_diff_demo():
    proc = run_cli("sweep", "euclidean:2", "--defect", "diff",
                   "--samples", "10", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["order"] == pytest.approx(1.0, abs=0.2)


def test_sweep_diff_unsupported_structure_exits_4():
    proc = run_cli("sweep", "chart:2", "--defect", "diff", "--samples", "8")
    assert proc.returncode == 4


def test_tangent_command():
    proc = run_cli("tangent", "euclidean:2", "--x", "0,0", "--u", "1,0",
                   "--v", "0,1", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["dist"]["value"] == pytest.approx(2**0.5)


def test_ccdist_horizontal():
    proc = run_cli("ccdist", "heisenberg:1", "--from", "0,0,0", "--to", "1,0,0",
                   "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["lower"] == 1.0
    assert payload["upper"] <= 1.0 + 1e-4
    assert payload["residual"] <= 1e-8
    assert payload["word"] == [[0, 1.0]]


def test_ccdist_central_word_bound():
    proc = run_cli("ccdist", "heisenberg:1", "--to", "0,0,1", "--K", "16",
                   "--iterations", "10", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["upper"] <= 4.0


def test_ccdist_engel_central_exits_4():
    proc = run_cli("ccdist", "engel", "--to", "0,0,1,0")
    assert proc.returncode == 4


def test_bch_command():
    proc = run_cli("bch", "heisenberg:1", "--g", "1,0,0", "--h", "0,1,0", "--json")
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["product"] == [1.0, 1.0, 0.5]


def test_decompose_command():
    proc = run_cli("decompose", "heisenberg:1", "--x", "0,0,1", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["word"] == [[0, 1.0], [1, 1.0], [0, -1.0], [1, -1.0]]
    assert payload["residual"] <= 1e-12


def test_decompose_unsupported_exits_4():
    proc = run_cli("decompose", "engel", "--x", "0,0,1,0")
    assert proc.returncode == 4


def test_ccdist_group_from_algebra_file(tmp_path):
    payload = {"dim": 3, "weights": [1, 1, 2], "brackets": [[1, 2, 3, 1, 1]]}
    algebra_file = tmp_path / "heis.json"
    algebra_file.write_text(json.dumps(payload))
    proc = run_cli("ccdist", str(algebra_file), "--to", "1,0,0", "--K", "16",
                   "--json")
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["lower"] == 1.0


def test_io_error_exits_3(tmp_path):
    proc = run_cli("sweep", "euclidean:2", "--defect", "a3", "--samples", "6",
                   "--out", str(tmp_path / "missing-dir" / "x.csv"))
    assert proc.returncode == 3


def test_negative_point_coordinates_accepted():
    proc = run_cli("tangent", "chart:2", "--x", "0,0", "--u", "0.2,0.3",
                   "--v", "-0.25,0.15", "--json")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["dist"]["value"] > 0.4


def test_bch_negative_coordinates():
    proc = run_cli("bch", "heisenberg:1", "--g", "-1,0,0", "--h", "0,-1,0",
                   "--json")
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["product"] == [-1.0, -1.0, 0.5]
