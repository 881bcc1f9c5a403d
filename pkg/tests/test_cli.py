import json
import math
import subprocess
import sys

import pytest

from delayfront.cli import main


def _run(tmp_path, *args, out="runs"):
    return main(["--out", str(tmp_path / out), *args])


def _only_dir(base):
    dirs = list(base.iterdir())
    assert len(dirs) == 1
    return dirs[0]


def test_profile_writes_bounded_profile(tmp_path, capsys):
    assert _run(tmp_path, "profile", "--c", "3", "--h", "1") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["sup"] <= math.exp(3)
    d = _only_dir(tmp_path / "runs")
    assert (d / "profile.csv").read_text().startswith("z,phi\n")
    assert json.loads((d / "config.json").read_text())["c"] == 3.0


def test_profile_monotone_front(tmp_path, capsys):
    assert _run(tmp_path, "profile", "--c", "2.5", "--h", "0") == 0
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["phi_end"] - 1) <= 1e-3


def test_subcritical_speed_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "profile", "--c", "1.5", "--h", "1") == 2
    assert "subcritical" in capsys.readouterr().err
    assert not (tmp_path / "runs").exists()


@pytest.mark.parametrize("argv", [
    ["certify", "--h", "-1"],
    ["certify", "--sup-bound", "lots"],
    ["stability", "--dz", "0"],
    ["nosuch"],
])
def test_bad_config_exit_2(tmp_path, argv, capsys):
    assert _run(tmp_path, *argv) == 2


def test_certify_reference(tmp_path, capsys):
    assert _run(tmp_path, "certify", "--c", "3", "--h", "1", "--lambda", "1.5",
                "--sup-bound", "auto") == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["feasible"] and cert["delta"] == pytest.approx(-0.7687, abs=1e-3)


def test_certify_direct_evaluation(tmp_path, capsys):
    assert _run(tmp_path, "certify", "--c", "2.5", "--h", "1", "--lambda", "1.25",
                "--sup-bound", repr(math.exp(2.5))) == 0
    cert = json.loads(capsys.readouterr().out)
    beta = 2.5 * 1.25 - 1.25 ** 2 - 1
    R = math.exp(-1.25 * 2.5) * math.exp(2.5)
    assert cert["feasible"] == (R <= beta)
    assert "crossover_delay" in cert


def test_certify_linear_case(tmp_path, capsys):
    assert _run(tmp_path, "certify", "--c", "3", "--h", "0", "--lambda", "1.5",
                "--sup-bound", "1") == 0
    assert json.loads(capsys.readouterr().out)["delta"] == pytest.approx(-0.25, abs=1e-9)


def test_require_feasible_exit_4(tmp_path, capsys):
    assert _run(tmp_path, "certify", "--c", "2.5", "--h", "0.5", "--require-feasible") == 4
    # the report is still written
    d = _only_dir(tmp_path / "runs")
    assert not json.loads((d / "certificate.json").read_text())["feasible"]


def test_region_small_lattice(tmp_path, capsys):
    assert _run(tmp_path, "region", "--h-min", "0.5", "--h-max", "1.5", "--h-step", "0.5",
                "--c-min", "2.5", "--c-max", "3.5", "--c-step", "0.5") == 0
    d = _only_dir(tmp_path / "runs")
    lines = (d / "region.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 9
    for r in rows:
        if float(r["c"]) > 2 * math.sqrt(2):
            assert r["stable"] == "true"
    spot = next(r for r in rows if float(r["c"]) == 3.0 and float(r["h"]) == 1.0)
    assert spot["unique"] == "true"


def test_deterministic_reruns(tmp_path, capsys):
    argv = ["certify", "--c", "3.5", "--h", "2"]
    assert _run(tmp_path, *argv, out="a") == 0
    assert _run(tmp_path, *argv, out="b") == 0
    da, db = _only_dir(tmp_path / "a"), _only_dir(tmp_path / "b")
    assert da.name == db.name
    for f in da.iterdir():
        assert f.read_bytes() == (db / f.name).read_bytes()


def test_profile_rerun_byte_identical(tmp_path, capsys):
    argv = ["profile", "--c", "3", "--h", "0.5"]
    _run(tmp_path, *argv, out="a")
    _run(tmp_path, *argv, out="b")
    da, db = _only_dir(tmp_path / "a"), _only_dir(tmp_path / "b")
    for name in ("profile.csv", "profile.json", "config.json"):
        assert (da / name).read_bytes() == (db / name).read_bytes()


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"c": 4.0, "h": 0.5, "lambda": 2.0}))
    assert main(["--out", str(tmp_path / "runs"), "--config", str(cfg), "certify"]) == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["params"] == {"c": 4.0, "h": 0.5}
    echo = json.loads((_only_dir(tmp_path / "runs") / "config.json").read_text())
    assert echo["c"] == 4.0 and echo["lam"] == 2.0


def test_config_echo_reruns(tmp_path, capsys):
    _run(tmp_path, "certify", "--c", "3", "--h", "1", out="a")
    echo = _only_dir(tmp_path / "a") / "config.json"
    assert main(["--out", str(tmp_path / "b"), "--config", str(echo), "certify"]) == 0
    assert _only_dir(tmp_path / "a").name == _only_dir(tmp_path / "b").name


def test_unreadable_config_exit_2(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.json"), "certify"]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "delayfront", "--out", str(tmp_path),
                        "certify", "--c", "1.5"], capture_output=True, text=True)
    assert r.returncode == 2


@pytest.mark.slow
def test_oracle_and_uniqueness_commands(tmp_path, capsys):
    assert _run(tmp_path, "oracle", "--c", "3", "--h", "1") == 0
    cmp = json.loads(capsys.readouterr().out)
    assert cmp["sup_error"] <= 5e-3
    assert _run(tmp_path, "uniqueness", "--c", "3", "--h", "1", "--dzs", "0.01", "0.01") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["sup_difference"] <= 5e-3
