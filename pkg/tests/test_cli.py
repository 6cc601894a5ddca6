"""End-to-end checks of the command-line surface.

Everything runs in process through ``cli.main`` with a patched stdin;
one subprocess test at the end confirms the installed entry point.
"""

import io
import json
import subprocess
import sys

import pytest

from evshape.cli import main
from evshape.continuous import make_step_density
from evshape.pmf import make_pmf, sample


def run_cli(monkeypatch, capsys, argv, stdin_text=""):
    monkeypatch.setattr(sys, "stdin", io.StringIO(stdin_text))
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def stream_of(masses, seed, n):
    return "\n".join(str(x) for x in sample(make_pmf(0, masses), seed, n))


def test_test_monotone_rejects(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-monotone", "--alpha", "0.05"],
                           stream_of([0.25, 0.75], seed=4, n=2000))
    assert code == 2
    payload = json.loads(out)
    assert payload["decision"] == "reject"
    assert payload["n"] <= 2000
    assert payload["log_value"] >= 2.9957 - 1e-3


def test_test_monotone_continues(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-monotone", "--alpha", "0.05"],
                           "1\n0\n0\n")
    assert code == 0
    payload = json.loads(out)
    assert payload == {"decision": "continue", "n": 3,
                       "log_value": payload["log_value"]}
    assert payload["log_value"] < 3.0


def test_test_monotone_accepts_jsonl(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-monotone", "--alpha", "0.5"],
                           '{"x": 0}\n{"x": 1}\n')
    assert code == 0
    assert json.loads(out)["n"] == 2


def test_test_unimodal(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-unimodal", "--alpha", "0.05",
                            "--theta", "5"],
                           stream_of([0.5, 0.0, 0.5], seed=9, n=3000))
    assert code == 2
    payload = json.loads(out)
    assert payload["decision"] == "reject"
    assert payload["theta"] == 5

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-unimodal", "--alpha", "0.05",
                            "--theta", "0"],
                           "0\n1\n2\n")
    assert code == 0
    assert json.loads(out)["decision"] == "continue"


def test_test_unimodal_free(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-unimodal-free", "--alpha", "0.05",
                            "--phi", "1"],
                           stream_of([0.4, 0.1, 0.5], seed=2, n=20_000))
    assert code == 2
    payload = json.loads(out)
    assert payload["decision"] == "reject"
    lo, hi = payload["window"]
    assert lo <= hi

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["test-unimodal-free", "--alpha", "0.05",
                            "--phi", "1"],
                           "3\n3\n3\n")
    assert code == 0
    assert json.loads(out)["decision"] == "continue"


def test_mode_ci(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["mode-ci", "--alpha", "0.1", "--phi", "0"],
                           "5\n")
    assert code == 0
    assert json.loads(out) == {
        "x": 5, "alpha": 0.1, "phi": 0,
        "interval": {"kind": "range", "lo": -99, "hi": 109},
    }


def test_mode_ci_finite(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["mode-ci", "--alpha", "0.2", "--phi", "1",
                            "--finite"],
                           "0\n")
    assert code == 0
    assert json.loads(out)["interval"] == {"kind": "range",
                                           "lo": -20, "hi": 20}


def test_mode_ci_empty_stdin_is_an_error(monkeypatch, capsys):
    code, _, err = run_cli(monkeypatch, capsys,
                           ["mode-ci", "--alpha", "0.1", "--phi", "0"], "")
    assert code == 1
    assert "evshape:" in err


def test_mode_track_streams_jsonl(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["mode-track", "--alpha", "0.05"],
                           "4\n4\n5\n")
    assert code == 0
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert [line["n"] for line in lines] == [1, 2, 3]
    for line in lines:
        assert set(line) == {"n", "rejected", "window", "estimate_excluded"}
        assert line["rejected"] == []


def test_check_evalue_constant_one(monkeypatch, capsys):
    e_json = json.dumps({"lo": 0, "values": [1.0, 1.0],
                         "left_tail": 1.0, "right_tail": 1.0})
    code, out, _ = run_cli(monkeypatch, capsys, ["check-evalue"], e_json)
    assert code == 0
    assert json.loads(out) == {"polar_M": True, "polar_D_0": True}

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["check-evalue", "--theta", "2"], e_json)
    assert json.loads(out) == {"polar_M": True, "polar_D_2": True}


def test_check_evalue_rejects_negative(monkeypatch, capsys):
    bad = json.dumps({"lo": 0, "values": [-0.5],
                      "left_tail": 0.0, "right_tail": 0.0})
    code, _, err = run_cli(monkeypatch, capsys, ["check-evalue"], bad)
    assert code == 1
    assert "evshape:" in err


def test_numeraire_command(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys, ["numeraire"],
                           "0 0.1\n1 0.9\n")
    assert code == 0
    payload = json.loads(out)
    assert payload["contacts"] == [-1, 1]
    assert payload["slopes"] == pytest.approx([0.5, 0.5])
    assert payload["ripr"]["masses"] == pytest.approx([0.5, 0.5])
    assert payload["numeraire"]["values"] == pytest.approx([0.2, 1.8])
    assert payload["max_epower"] == pytest.approx(0.36806420716849717,
                                                  abs=1e-9)


def test_cont_ci(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["cont-ci", "--alpha", "0.1", "--phi", "0"],
                           "5\n")
    assert code == 0
    interval = json.loads(out)["interval"]
    assert interval["lo"] == pytest.approx(-100.0)
    assert interval["hi"] == pytest.approx(110.0)

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["cont-ci", "--alpha", "0.1", "--phi", "0",
                            "--edelman"],
                           "5\n")
    interval = json.loads(out)["interval"]
    assert interval["lo"] == pytest.approx(-90.0)
    assert interval["hi"] == pytest.approx(100.0)


def test_cont_pvalue(monkeypatch, capsys):
    code, out, _ = run_cli(monkeypatch, capsys,
                           ["cont-pvalue", "--a", "1"], "3\n")
    assert code == 0
    assert json.loads(out)["pvalue"] == pytest.approx(0.8)


def test_cont_numeraire(monkeypatch, capsys):
    q = make_step_density((0.0, 1.0, 2.0), (0.25, 0.75))
    code, out, _ = run_cli(monkeypatch, capsys, ["cont-numeraire"],
                           json.dumps(q.to_json()))
    assert code == 0
    payload = json.loads(out)
    assert payload["lcm"]["levels"] == pytest.approx([0.5])
    assert payload["numeraire"]["levels"] == pytest.approx([0.5, 1.5])
    assert payload["max_epower"] == pytest.approx(
        0.25 * -0.6931471805599453 + 0.75 * 0.4054651081081644, abs=1e-12)


def test_simulate(monkeypatch, capsys, tmp_path):
    cfg = {
        "scenario": "growth",
        "distribution": make_pmf(0, [0.25, 0.75]).to_json(),
        "n": 100, "reps": 2, "alpha": 0.05, "seed": 11,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    csv_path = tmp_path / "agg.csv"

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["simulate", "--config", str(cfg_path),
                            "--csv", str(csv_path)])
    assert code == 0
    report = json.loads(out)
    assert report["config"]["seed"] == 11
    assert len(report["records"]) == 2
    assert "mean_rate" in csv_path.read_text()

    code, out, _ = run_cli(monkeypatch, capsys,
                           ["simulate", "--config", str(cfg_path),
                            "--seed", "99"])
    assert json.loads(out)["config"]["seed"] == 99


def test_simulate_missing_file(monkeypatch, capsys, tmp_path):
    code, _, err = run_cli(monkeypatch, capsys,
                           ["simulate", "--config",
                            str(tmp_path / "absent.json")])
    assert code == 1
    assert err


def test_usage_errors_exit_one(monkeypatch, capsys):
    assert run_cli(monkeypatch, capsys, ["no-such-command"])[0] == 1
    assert run_cli(monkeypatch, capsys, ["test-monotone"])[0] == 1
    assert run_cli(monkeypatch, capsys,
                   ["test-monotone", "--alpha", "oops"])[0] == 1


def test_installed_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "evshape.cli", "mode-ci",
         "--alpha", "0.5", "--phi", "0"],
        input="1\n", capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["interval"] == {"kind": "range",
                                                   "lo": -3, "hi": 5}
