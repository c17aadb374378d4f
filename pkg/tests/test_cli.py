import json

import pytest

from ctdvs.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from ctdvs.scenariofile import default_scenario_text


def short_scenario(tmp_path, horizon="1 s"):
    p = tmp_path / "short.toml"
    p.write_text(default_scenario_text().replace('horizon = "12 s"', f'horizon = "{horizon}"'))
    return p


def test_design_reference_poles(capsys):
    assert main(["design", "--k-lambda", "1.5", "--pole-a", "0.3", "--pole-b", "0.1",
                 "--json"]) == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["kp"] == 0.6 and abs(rec["ki"] - 1.1333333333) < 1e-9 and rec["stable"]


def test_design_deadbeat(capsys):
    assert main(["design", "--k-lambda", "1", "--pole-a", "0", "--pole-b", "0", "--json"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert (rec["kp"], rec["ki"]) == (1.0, 1.0)


def test_design_inverse(capsys):
    assert main(["design", "--k-lambda", "1.5", "--kp", "0.6", "--ki", "1.133333"]) == 0
    out = capsys.readouterr().out
    assert "a = 0.3," in out and "b = 0.100001" in out and "stable" in out


def test_design_unstable_verdict(capsys):
    assert main(["design", "--k-lambda", "1.5", "--pole-a", "0.9", "--pole-b", "0.5"]) == 0
    assert "UNSTABLE" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["design", "--k-lambda", "abc", "--pole-a", "0.3"],
        ["design", "--k-lambda", "1.5"],
        ["design", "--k-lambda", "1.5", "--pole-a", "0.3", "--kp", "1", "--ki", "1"],
        ["design", "--k-lambda", "1.5", "--kp", "1"],
        ["design", "--k-lambda", "0", "--pole-a", "0.3"],
        ["run", "--scheme", "dvs7"],
        ["run", "--scheme", "dvs0", "--seed", "x"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_run_dvs0_and_determinism(tmp_path, capsys):
    sc = short_scenario(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["run", "--scenario", str(sc), "--scheme", "ctdvs", "--seed", "7",
                     "--out", str(out)]) == EXIT_OK
    a = (out1 / "trace_ctdvs_7.csv").read_bytes()
    assert a == (out2 / "trace_ctdvs_7.csv").read_bytes()
    assert main(["run", "--scenario", str(sc), "--scheme", "dvs0", "--out", str(out1),
                 "--emit-plots"]) == EXIT_OK
    rows = (out1 / "trace_dvs0_0.csv").read_text().splitlines()[3:]
    assert rows and all(r.split(",")[5] == "1" for r in rows)
    assert {p.name for p in out1.glob("*.svg")} == {
        "energy_dvs0_0.svg", "utilization_dvs0_0.svg", "cost_dvs0_0.svg"}


def test_missing_scenario_no_output(tmp_path, capsys):
    out = tmp_path / "never"
    code = main(["run", "--scenario", str(tmp_path / "nope.toml"), "--scheme", "dvs0",
                 "--out", str(out)])
    assert code == EXIT_IO and not out.exists()
    assert "cannot read scenario" in capsys.readouterr().err


def test_invalid_scenario_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[[task]]\nperiod = 1\nest_exec = 2\nwcet = 3\n")
    out = tmp_path / "o"
    assert main(["compare", "--scenario", str(bad), "--out", str(out)]) == EXIT_VALIDATION
    assert not out.exists()
    err = capsys.readouterr().err
    assert "bad.toml:2:1" in err


def test_unwritable_out(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["run", "--scenario", str(short_scenario(tmp_path)), "--scheme", "dvs0",
                 "--out", str(blocker / "sub")])
    assert code == EXIT_IO


def test_env_default_out(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CTDVS_OUT", str(tmp_path / "env"))
    assert main(["run", "--scenario", str(short_scenario(tmp_path)), "--scheme", "dvs1"]) == 0
    assert (tmp_path / "env" / "trace_dvs1_0.csv").exists()


def test_compare_outputs(tmp_path, capsys):
    sc = short_scenario(tmp_path, "2 s")
    out_s, out_p = tmp_path / "s", tmp_path / "p"
    assert main(["compare", "--scenario", str(sc), "--seed", "3", "--out", str(out_s)]) == 0
    text = capsys.readouterr().out
    assert "dvs1" in text and "54.76%" in text
    assert main(["compare", "--scenario", str(sc), "--seed", "3", "--out", str(out_p),
                 "--parallel", "--emit-plots"]) == 0
    for name in ["compare_3.csv", "compare_3.txt"] + [f"trace_{s}_3.csv" for s in
                                                      ("dvs0", "dvs1", "dvs2", "ctdvs")]:
        assert (out_s / name).read_bytes() == (out_p / name).read_bytes()
    assert (out_p / "cost_compare_3.svg").exists()


def test_scenario_command(capsys):
    assert main(["scenario"]) == 0
    assert capsys.readouterr().out == default_scenario_text()
