import json

import pytest

from qcycles import cli


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def test_parse_lists():
    assert cli.parse_list("1e-3..1e-1:3") == pytest.approx([1e-3, 1e-2, 1e-1])
    assert cli.parse_list("0.1, 0.2") == [0.1, 0.2]
    assert cli.parse_lin_list("0..10:3") == [0.0, 5.0, 10.0]
    for bad in ("a..b", "1..0.1", ""):
        with pytest.raises(cli.ConfigError):
            cli.parse_list(bad)


def test_fmt():
    assert cli.fmt(float("inf")) == "inf"
    assert float(cli.fmt(0.1)) == 0.1
    assert cli.fmt(1 / 3) == "0.33333333333333331"


def test_full_cycle_outputs(tmp_path):
    code, out = _run(tmp_path, "full-cycle", "--znu", "1", "--delta", "0.5")
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == ",".join(cli.COLUMNS)
    zero = [l for l in lines[1:] if l.startswith("0,")]
    assert zero and zero[0].split(",")[5] == "inf"
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["results"]["n_exc"]["relative_deviation"]) < 1e-3
    assert summary["config"]["delta"] == 0.5
    assert "wall_clock_seconds" in json.loads((out / "timing.json").read_text())


def test_summary_reproducible(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for o in (a, b):
        assert cli.main(["half-cycle", "--znu", "2", "--delta", "0.01", "--out", str(o)]) == 0
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    sa["config"].pop("out"), sb["config"].pop("out")
    assert sa == sb
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nznu = 2\ndelta=0.5\n")
    code, out = _run(tmp_path, "half-cycle", "--config", str(cfg), "--znu", "0.5")
    assert code == 0
    c = json.loads((out / "summary.json").read_text())["config"]
    assert c["znu"] == 0.5 and c["delta"] == 0.5


@pytest.mark.parametrize("argv", [
    ["full-cycle", "--tol", "1"], ["full-cycle", "--znu", "-1"], ["nonsense"],
    ["universality", "--znu", "2", "--n-corr", "3"], ["spherical", "--L", "1"],
])
def test_config_errors(tmp_path, capsys, argv):
    code, out = _run(tmp_path, *argv)
    assert code == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "config"
    assert not out.exists()


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    code, _ = _run(tmp_path, "full-cycle", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG
    code, _ = _run(tmp_path, "full-cycle", "--config", str(tmp_path / "missing.cfg"))
    assert code == cli.EXIT_CONFIG


def test_numeric_failure_leaves_no_files(tmp_path, capsys):
    # a plateau window far too short to hold two oscillations
    code, out = _run(tmp_path, "full-cycle", "--s-end", "1.2")
    assert code == cli.EXIT_NUMERIC
    assert json.loads(capsys.readouterr().err)["error"] == "numeric"
    assert not out.exists()


def test_verify(tmp_path):
    code, out = _run(tmp_path, "verify")
    assert code == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["results"]["all_passed"]


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_checks", lambda tol: [("dummy", False, 1.0, 0.5)])
    code, _ = _run(tmp_path, "verify")
    assert code == cli.EXIT_VERIFY


def test_scans(tmp_path):
    code, out = _run(tmp_path, "kzm-fit", "--znu", "1", "--deltas", "1e-3..1e-1:4")
    assert code == 0
    r = json.loads((out / "summary.json").read_text())["results"]
    assert abs(r["exponent_deviation"]) < 0.02
    assert (out / "scan.csv").read_text().startswith("delta,heat_end,impulse_estimate")
    code, out = _run(tmp_path, "gapped", "--znu", "1", "--s0", "0..4:3")
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["results"]["heat_monotone_decreasing"]
    code, out = _run(tmp_path, "universality", "--znu", "0.5", "--gamma", "0,0.005")
    assert code == 0


def test_spherical_command(tmp_path):
    code, out = _run(tmp_path, "spherical", "--L", "32", "--delta", "0.2", "--s-end", "15", "--tol", "1e-11")
    assert code == 0
    assert (out / "modes.csv").read_text().splitlines()[0] == "q,energy,xi,xi_dot,n_exc"
    r = json.loads((out / "summary.json").read_text())["results"]
    assert abs(r["zero_mode_n_exc"]["relative_deviation"]) < 0.1
