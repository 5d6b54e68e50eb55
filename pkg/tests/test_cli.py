import json

import pytest

from rpmlbie.cli import main
from rpmlbie.io import read_csv


def _write(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return str(p)


SMALL = {"geometry": {"kind": "flat", "n_total": 200},
         "output": {"grid": {"spacing": 0.25, "height": 0.5, "depth": 0.5}, "probes": 5}}


def test_solve_writes_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["N_tot"] == 200 and summary["error"]["E_rel"] < 1e-4
    for name in ("nodes.csv", "field.csv", "errors.csv"):
        meta, cols = read_csv(tmp_path / "o" / name)
        assert meta["problem_key"] == summary["problem_key"]
    meta, cols = read_csv(tmp_path / "o" / "nodes.csv")
    assert cols["x1"].size == 200


def test_sweep(tmp_path, capsys):
    cfg = _write(tmp_path, dict(SMALL, geometry={"kind": "flat", "n_total": 400}))
    assert main(["sweep", "--config", cfg, "--param", "S", "--from", "0.1", "--to", "1.0",
                 "--steps", "2", "--out", str(tmp_path / "o")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["rows"]) == 2 and out["reference"] == "exact"
    _, cols = read_csv(tmp_path / "o" / "sweep_S.csv")
    assert cols["E_rel"][1] < 1e-2 * cols["E_rel"][0]


def test_greens(tmp_path, capsys):
    cfg = _write(tmp_path, {"greens": {"source": [0.1, 0.2], "targets": [[0.3, 0.4]],
                                       "angles": [1.0]}})
    assert main(["greens", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["values"]) == 1 and len(out["farfield"]) == 1


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"layer": {"S": -1}})
    assert main(["solve", "--config", cfg]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "none.json")]) == 2


def test_sweep_needs_parameters(tmp_path):
    assert main(["sweep", "--config", _write(tmp_path, SMALL)]) == 2


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
