import json

import pytest

from habibullin_verify.main import main, parse_grid, parse_rational_flag


def test_rational_flags():
    assert parse_rational_flag("3/4") == pytest.approx(0.75)
    assert parse_rational_flag("-2") == -2
    assert len(parse_grid("0:1:1/4")) == 5
    assert parse_grid("1:0:1/4") == []
    for bad in ("0.5", "1e-3", "1/0", "x"):
        with pytest.raises(Exception):
            parse_rational_flag(bad)


def test_no_arguments_is_a_usage_error():
    assert main([]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--conjecture", "2", "--epsilon", "0.5"],
        ["verify", "--conjecture", "4", "--epsilon", "1"],
        ["verify", "--conjecture", "2", "--epsilon", "2"],
        ["verify", "--conjecture", "1", "--epsilon", "1", "--n", "1"],
        ["sweep", "--conjecture", "2", "--epsilon-grid", "1:0:1/2"],
        ["emit", "--function", "h", "--epsilon", "1", "--range", "1:0", "--samples", "5", "--out", "x.csv"],
        ["emit", "--function", "h", "--epsilon", "1", "--range", "0", "--samples", "5", "--out", "x.csv"],
    ],
)
def test_invalid_input_exits_with_one(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1


def test_confirmed_counterexample(tmp_path, capsys):
    path = tmp_path / "c2.json"
    assert main(["verify", "--conjecture", "2", "--epsilon", "1", "--json", str(path)]) == 0
    report = json.loads(path.read_text())
    assert report["verdict"] == "COUNTEREXAMPLE_CONFIRMED"
    assert report["violation_report"]["verdict"] == "VIOLATED"
    assert "COUNTEREXAMPLE_CONFIRMED" in capsys.readouterr().out


def test_exploratory_epsilon_two(tmp_path):
    path = tmp_path / "eps2.json"
    argv = ["verify", "--conjecture", "2", "--epsilon", "2", "--exploratory", "--json", str(path)]
    assert main(argv) == 3
    report = json.loads(path.read_text())
    assert report["verdict"] == "HYPOTHESIS_FAILED"
    assert report["shape_report"]["nonnegative"] is False
    assert report["violation_report"] is None


def test_emit_samples(tmp_path):
    out = tmp_path / "h.csv"
    argv = ["emit", "--function", "h", "--epsilon", "1", "--range", "0:1", "--samples", "5", "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,value,width"
    assert len(lines) == 6
    assert lines[1].startswith("0,0")

    q_out = tmp_path / "q.csv"
    argv = ["emit", "--function", "q", "--epsilon", "1", "--range", "1:2", "--samples", "2", "--out", str(q_out)]
    assert main(argv) == 0
    assert q_out.read_text().splitlines()[1].startswith("1,12")


def test_bad_environment(monkeypatch):
    monkeypatch.setenv("HABIBULLIN_PRECISION", "enormous")
    assert main(["conjectures"]) == 1


def test_listing_commands(capsys):
    assert main(["conjectures"]) == 0
    out = capsys.readouterr().out
    assert "C1" in out and "C3" in out
    assert main(["chain"]) == 0
    assert main(["chain", "--epsilon", "1/3"]) == 0


def test_extended_precision_flag(tmp_path):
    path = tmp_path / "c3.json"
    argv = ["verify", "--extended-precision", "--conjecture", "3", "--epsilon", "1", "--json", str(path)]
    assert main(argv) == 0
    assert json.loads(path.read_text())["run"]["precision_mode"] == "extended"
