"""Command-line interface smoke tests."""

import json

import pytest

from pooltest.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_plan_command(capsys, tmp_path):
    code, out = run(capsys, "plan", "--n", "7", "--q", "0.9999",
                    "--data-dir", str(tmp_path))
    assert code == 0
    assert "[[xx][[xx][x[xx]]]]" in out
    assert "1.002899610" in out


def test_plan_json(capsys, tmp_path):
    code, out = run(capsys, "plan", "--n", "3", "--q", "0.5", "--out", "json",
                    "--data-dir", str(tmp_path))
    payload = json.loads(out)
    assert payload["plan"] == "xxx" and payload["expected_tests"] == 3.0


def test_plan_cache_reused(capsys, tmp_path):
    run(capsys, "plan", "--n", "10", "--q", "0.9", "--data-dir", str(tmp_path))
    cache = list((tmp_path / "plans").glob("*.npz"))
    assert len(cache) == 1
    code, out = run(capsys, "plan", "--n", "10", "--q", "0.9",
                    "--data-dir", str(tmp_path))
    assert code == 0
    assert len(list((tmp_path / "plans").glob("*.npz"))) == 1


def test_value_command(capsys, tmp_path):
    code, out = run(capsys, "value", "--structure", "[x[xx]]", "--q", "0.9999",
                    "--data-dir", str(tmp_path))
    assert code == 0
    assert "1.000699960" in out


def test_table_command_csv(capsys, tmp_path):
    code, out = run(capsys, "table", "--n-lo", "3", "--n-hi", "5", "--q", "0.9999",
                    "--data-dir", str(tmp_path))
    lines = out.strip().splitlines()
    assert lines[0] == "n,expected_tests,split_left,split_right"
    assert lines[1] == "3,1.000699960,1,2"


def test_simulate_command(capsys, tmp_path):
    code, out = run(capsys, "simulate", "--n", "100", "--q", "0.99",
                    "--trials", "50", "--seed", "4", "--data-dir", str(tmp_path))
    payload = json.loads(out)
    assert payload["trials"] == 50 and payload["mode"] == "fixed"
    code, out2 = run(capsys, "simulate", "--n", "100", "--q", "0.99",
                     "--trials", "50", "--seed", "4", "--mode", "restructure",
                     "--data-dir", str(tmp_path))
    assert json.loads(out2)["mode"] == "restructuring"


def test_oracle_command(capsys, tmp_path):
    code, out = run(capsys, "oracle", "--n", "3", "--q", "0.9", "--nonnested",
                    "--data-dir", str(tmp_path))
    payload = json.loads(out)
    assert payload["agree"] is True
    assert payload["brute_structure"] == "[x[xx]]"
    assert payload["nonnested_expected_tests"] < payload["nested_expected_tests"]


def test_fib_check_command(capsys, tmp_path):
    code, out = run(capsys, "fib-check", "--n-hi", "60", "--q", "0.9999",
                    "--out", "csv", "--data-dir", str(tmp_path))
    assert code == 0
    assert out.splitlines()[0] == "n,split_left,split_right,verdict"
    assert "violates" not in out


def test_session_requires_params():
    with pytest.raises(SystemExit):
        main(["session"])
