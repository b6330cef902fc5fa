import csv
import json

import pytest

from cclt.cli import main, read_config


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def test_oracle_check_wedge_table(tmp_path):
    code, out = run(tmp_path, "oracle-check", "--model", "wedge-edge", "--n", "4")
    assert code == 0
    rows = list(csv.DictReader(open(out / "oracle-check.csv")))
    assert len(rows) == 7
    assert max(float(r["abs_error"]) for r in rows) == 0.0
    manifest = (out / "manifest.txt").read_text()
    assert "config.model=wedge-edge" in manifest and "wall_time_s=" in manifest and "version.numpy" in manifest


def test_bound_json_mirrors_report(tmp_path):
    code, out = run(tmp_path, "bound", "--model", "pattern01", "--theorem", "t23", "--n", "256", "--k", "0",
                    "--samples", "2000")
    assert code == 0
    data = json.loads((out / "bound.json").read_text())
    assert data["theorem"] == "T2.3"
    assert set(data["terms"]) == {"A_hat_k", "B_hat_k", "C_hat_k", "D_hat_k", "E_hat_k"}
    assert data["total"] == pytest.approx(sum(data["terms"].values()))


def test_rate_writes_rows_and_slope(tmp_path):
    code, out = run(tmp_path, "rate", "--model", "pattern01", "--p", "0.5", "--k", "0", "--ns", "16,32,64,128",
                    "--samples", "1000", "--seed", "7")
    assert code == 0
    rows = list(csv.DictReader(open(out / "rate.csv")))
    assert [int(r["n"]) for r in rows] == [16, 32, 64, 128]
    assert all(r["seed"] == "7" and r["samples"] == "1000" for r in rows)
    assert "summary.slope=" in (out / "manifest.txt").read_text()


def test_identical_runs_are_byte_identical(tmp_path):
    bodies = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(["distance", "--n", "32", "--samples", "1500", "--seed", "11", "--out", str(out)])
        bodies.append((out / "distance.csv").read_bytes())
    assert bodies[0] == bodies[1]


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nmodel = wedge-edge\nn = 5\nseed = 3\n")
    assert read_config(cfg)["model"] == "wedge-edge"
    code, out = run(tmp_path, "oracle-check", "--config", str(cfg), "--n", "4")
    assert code == 0
    text = (out / "manifest.txt").read_text()
    assert "config.n=4" in text and "config.seed=3" in text


@pytest.mark.parametrize("args,message", [
    (["verify-assumptions", "--n", "40"], "at most 12"),
    (["decompose", "--n", "9"], "at most 7"),
    (["oracle-check", "--n", "30"], "limit"),
    (["distance", "--model", "nope"], "unknown model"),
    (["distance", "--p", "1.5"], "p must lie"),
])
def test_errors_name_the_violated_limit(tmp_path, capsys, args, message):
    code, _ = run(tmp_path, *args)
    assert code == 2
    assert message in capsys.readouterr().err


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model\n")
    code, _ = run(tmp_path, "llt", "--config", str(cfg))
    assert code == 2
    assert "key=value" in capsys.readouterr().err


@pytest.mark.parametrize("cmd", [["verify-assumptions", "--n", "8", "--model", "evenodd11"],
                                 ["llt", "--n", "100"], ["decompose", "--n", "5", "--H", "p4"]])
def test_remaining_subcommands_run(tmp_path, cmd):
    code, out = run(tmp_path, *cmd)
    assert code == 0
    assert (out / f"{cmd[0]}.csv").exists()


def test_json_format_flag(tmp_path):
    code, out = run(tmp_path, "llt", "--n", "50", "--format", "json")
    assert code == 0
    data = json.loads((out / "llt.json").read_text())
    assert data[0]["n"] == 50
