import csv
import json
from fractions import Fraction

import pytest
from mpmath import mp

from habibullin_verify.agent import VerificationAgent
from habibullin_verify.config import Settings
from habibullin_verify.sharipov_family import FamilyParams, build_h, build_q, family_definition
from habibullin_verify.tools import SWEEP_COLUMNS, CommandExecutor


@pytest.fixture(scope="session")
def executor(agent):
    return CommandExecutor(agent)


@pytest.fixture(scope="session")
def c2_sweep(executor, tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep") / "sweep.csv"
    grid = [Fraction(0), Fraction(1, 2), Fraction(1)]
    return executor.sweep(2, grid, csv_path=str(path))


def test_sweep_rows(c2_sweep):
    assert c2_sweep["success"]
    assert c2_sweep["exit_code"] == 0
    rows = c2_sweep["rows"]
    assert [row["epsilon"] for row in rows] == ["0", "1/2", "1"]
    assert rows[0]["verdict"] == "NOT_A_COUNTEREXAMPLE"
    assert rows[0]["conclusion"] == "EQUALITY_WITHIN_TOL"
    assert all(row["verdict"] == "COUNTEREXAMPLE_CONFIRMED" for row in rows[1:])
    assert all(row["hypothesis"] == "CERTIFIED" for row in rows)


def test_sweep_margins_and_linearity(c2_sweep):
    rows = c2_sweep["rows"]
    half, full = mp.mpf(rows[1]["margin_lo"]), mp.mpf(rows[2]["margin_lo"])
    assert abs(full - 2 * half) < 1e-9
    linearity = c2_sweep["linearity"]
    assert linearity["checked"] and linearity["within_bounds"]
    assert linearity["margins_increasing"]


def test_sweep_csv(c2_sweep):
    with open(c2_sweep["csv_path"], newline="") as f:
        lines = list(csv.reader(f))
    assert lines[0] == SWEEP_COLUMNS
    assert len(lines) == 4


def test_sweep_rejects_empty_grid(executor):
    result = executor.sweep(2, [])
    assert not result["success"] and result["exit_code"] == 1


def test_sweep_of_bad_epsilon_is_invalid_input(executor):
    result = executor.sweep(2, [Fraction(1), Fraction(2)])
    assert result["exit_code"] == 1
    assert "epsilon = 2" in result["error"]


def test_process_input_errors(agent):
    assert agent.process(4, 1)["exit_code"] == 1
    result = agent.process(1, 1, n=1)
    assert not result["success"] and "n >= 2" in result["error"]
    assert agent.process(2, 2)["exit_code"] == 1


def test_exploratory_epsilon_two_fails_the_hypothesis(agent):
    result = agent.process(2, 2, exploratory=True)
    assert result["success"]
    assert result["verdict"] == "HYPOTHESIS_FAILED"
    assert result["exit_code"] == 3
    report = result["report"]
    assert report.shape_report.nonnegative is False
    assert any("NON-CONFORMANT" in note for note in report.notes)


def test_defaults_come_from_the_registry(agent):
    params = agent.resolve_params(1)
    assert params.n == 2 and params.exponent == 4
    assert agent.resolve_params(3).exponent == 2
    assert agent.resolve_params(2, n=1).n == 1


def test_verify_writes_json(executor, tmp_path):
    path = tmp_path / "c2.json"
    result = executor.verify(2, Fraction(1), json_path=str(path))
    assert result["exit_code"] == 0
    data = json.loads(path.read_text())
    assert data["verdict"] == "COUNTEREXAMPLE_CONFIRMED"


def test_verify_from_a_function_file(executor, tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps(family_definition(build_h(FamilyParams(Fraction(1, 2))))))
    result = executor.verify(2, function_file=str(path))
    assert result["exit_code"] == 0
    assert result["report"].run.epsilon == "1/2"
    assert executor.verify(2, function_file=str(tmp_path / "missing.json"))["exit_code"] == 1
    assert executor.verify(2)["exit_code"] == 1


def test_emit(executor, tmp_path):
    out = tmp_path / "h.csv"
    result = executor.emit("h", 1, 0, 1, 5, str(out))
    assert result["exit_code"] == 0
    rows = result["rows"]
    assert [row["x"] for row in rows] == ["0", "1/4", "1/2", "3/4", "1"]
    assert mp.mpf(rows[0]["value"]) == 0
    assert mp.mpf(rows[-1]["value"]) == 6
    assert out.read_text().splitlines()[0] == "x,value,width"


def test_emit_rejects_bad_ranges(executor, tmp_path):
    out = str(tmp_path / "x.csv")
    assert executor.emit("q", 1, 1, 0, 5, out)["exit_code"] == 1
    assert executor.emit("q", 1, -1, 1, 5, out)["exit_code"] == 1
    assert executor.emit("q", 1, 0, 1, 1, out)["exit_code"] == 1


def test_chain_and_conjectures(executor):
    chain = executor.chain(1)
    assert chain["exit_code"] == 0
    assert all(chain["checks"].values())
    assert set(chain["moments"].values()) == {"0"}
    listing = executor.conjectures()
    assert [entry["name"] for entry in listing["conjectures"]] == ["C1", "C2", "C3"]


def test_selfcheck(executor):
    result = executor.selfcheck()
    assert result["exit_code"] == 0, [name for name, ok in result["checks"].items() if not ok]


def test_unknown_command(executor):
    assert executor.execute_command("plot", {})["exit_code"] == 1


def test_manifest_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        VerificationAgent(Settings(), manifest_path=str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValueError):
        VerificationAgent(Settings(), manifest_path=str(broken))
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    with pytest.raises(ValueError):
        VerificationAgent(Settings(), manifest_path=str(empty))


def _role_free_definition(function, path):
    data = family_definition(function)
    data.pop("role")
    path.write_text(json.dumps(data))
    return str(path)


def test_conjecture_three_from_a_role_free_file(executor, tmp_path):
    path = _role_free_definition(build_q(FamilyParams(1)), tmp_path / "q.json")
    result = executor.verify(3, function_file=path)
    assert result["exit_code"] == 0, result.get("error")
    report = result["report"]
    assert report.verdict.value == "COUNTEREXAMPLE_CONFIRMED"
    shape = report.shape_report
    assert shape.role == "Q"
    assert shape.nondecreasing is None and shape.log_convex is None
    assert not shape.failures


def test_role_free_files_get_the_checks_of_their_conjecture(executor, tmp_path):
    path = _role_free_definition(build_h(FamilyParams(1)), tmp_path / "h.json")
    shape = executor.verify(2, function_file=path)["report"].shape_report
    assert shape.nondecreasing is True
    assert shape.log_convex is None


def test_unwritable_report_path(executor, tmp_path):
    result = executor.verify(2, Fraction(1), json_path=str(tmp_path / "missing" / "c2.json"))
    assert not result["success"]
    assert result["exit_code"] == 1
    assert "Cannot write report" in result["error"]


def test_unwritable_csv_path(executor, tmp_path):
    result = executor.emit("h", 1, 0, 1, 3, str(tmp_path / "missing" / "h.csv"))
    assert result["exit_code"] == 1
