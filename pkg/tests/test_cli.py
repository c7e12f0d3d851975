import io
import json

import pytest

from choreo.main import main
from choreo.services.syntax import parse
from tests.conftest import SAMPLES


def sample(name: str) -> str:
    return str(SAMPLES / f"{name}.chor")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def diagnostic(err: str) -> dict:
    # log records may precede the JSON document on stderr
    return json.loads(err[err.index("{"):])


def write(tmp_path, text: str, name: str = "input.chor") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ============================================================================
# CHECK
# ============================================================================

def test_check_connected(capsys):
    code, out, _ = run(capsys, "check", sample("intro_connected"))
    assert code == 0
    assert json.loads(out) == {"connected": True, "violations": []}


def test_check_reports_violations(capsys):
    code, out, _ = run(capsys, "check", sample("two_buyers"))
    assert code == 1
    result = json.loads(out)
    assert not result["connected"]
    assert [v["kind"] for v in result["violations"]] == ["SeqNotConnected", "ChoiceNotUniquePoint"]
    assert "rename_advice" not in result


def test_check_with_rename_advice(capsys):
    code, out, _ = run(capsys, "check", "--advise-rename", sample("parallel"))
    assert code == 1
    advice = json.loads(out)["rename_advice"]
    assert [item["suggested"] for item in advice] == ["o_2"]


def test_check_reads_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("a->b:o1 ; b->c:o2"))
    code, _, _ = run(capsys, "check", "-")
    assert code == 0


def test_parse_error_is_reported_as_json(capsys, tmp_path):
    code, out, err = run(capsys, "check", write(tmp_path, "a->b:o ;\n  ; c->d:o"))
    assert code == 2
    assert out == ""
    report = diagnostic(err)
    assert report["error"] == "ParseError"
    assert report["line"] == 2


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check", str(tmp_path / "missing.chor"))
    assert code == 2
    assert diagnostic(err)["error"] == "FileNotFoundError"


def test_runtime_terms_are_rejected(capsys, tmp_path):
    code, _, _ = run(capsys, "check", write(tmp_path, "a->b:o ; 0"))
    assert code == 2


# ============================================================================
# AMEND
# ============================================================================

def test_amend_prints_connected_choreography(capsys, tmp_path):
    report_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "amend", sample("parallel"), "--emit-report", str(report_path))
    assert code == 0
    amended = out.strip()
    assert main(["check", write(tmp_path, amended, "amended.chor")]) == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert len(report["steps"]) == 9
    assert report["steps"][0]["pattern"] == "Normalize"
    assert report["fresh_roles"] == 3


def test_amend_intro(capsys):
    code, out, _ = run(capsys, "amend", sample("intro"))
    assert code == 0
    assert out.strip() == "(a->b:o1 ; b->_e1:_f1*) ; _e1->c:_f2* ; c->d:o2"


def test_amend_connected_input_is_unchanged(capsys, tmp_path):
    report_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "amend", sample("intro_connected"), "--emit-report", str(report_path))
    assert code == 0
    assert parse(out) == parse((SAMPLES / "intro_connected.chor").read_text(encoding="utf-8"))
    assert json.loads(report_path.read_text(encoding="utf-8"))["steps"] == []


def test_amend_fresh_prefix(capsys):
    code, out, _ = run(capsys, "amend", sample("intro"), "--fresh-prefix", "gen_")
    assert code == 0
    assert "gen_e1" in out


def test_amend_budget_exceeded(capsys, tmp_path):
    code, out, err = run(capsys, "amend", write(tmp_path, " | ".join(["a->b:o"] * 8)))
    assert code == 3
    assert out == ""
    assert diagnostic(err)["error"] == "ExpansionBudgetExceeded"


def test_amend_invalid_configuration(capsys):
    code, _, err = run(capsys, "amend", sample("intro"), "--max-rounds", "0")
    assert code == 2
    assert diagnostic(err)["error"] == "ValidationError"


# ============================================================================
# PROJECT
# ============================================================================

def test_project_refuses_disconnected_input(capsys):
    code, out, err = run(capsys, "project", sample("intro"))
    assert code == 1
    assert out == ""
    assert diagnostic(err)["violations"][0]["kind"] == "SeqNotConnected"


def test_project_force(capsys):
    code, out, _ = run(capsys, "project", "--force", sample("intro"))
    assert code == 0
    assert out.strip() == "[!o1 ; 1]@a || [?o1 ; 1]@b || [1 ; !o2]@c || [1 ; ?o2]@d"


def test_project_without_roles(capsys, tmp_path):
    code, _, err = run(capsys, "project", write(tmp_path, "1"))
    assert code == 1
    assert diagnostic(err)["error"] == "EmptyChoreography"


# ============================================================================
# TRACES
# ============================================================================

def test_traces_choreography(capsys):
    code, out, _ = run(capsys, "traces", sample("parallel"))
    assert code == 0
    assert json.loads(out) == [["a->b:o", "c->d:o", "TICK"], ["c->d:o", "a->b:o", "TICK"]]


@pytest.mark.parametrize("extra, expected", [
    (["--mode", "sync"], [["o1:a->b", "o2:c->d", "TICK"], ["o2:c->d", "o1:a->b", "TICK"]]),
    (["--mode", "sync", "--weak"], [["o1:a->b", "o2:c->d", "TICK"], ["o2:c->d", "o1:a->b", "TICK"]]),
])
def test_traces_of_projection(capsys, extra, expected):
    code, out, _ = run(capsys, "traces", sample("intro"), *extra)
    assert code == 0
    assert json.loads(out) == expected


def test_traces_async_shows_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "traces", write(tmp_path, "a->b:o"), "--mode", "async")
    assert code == 0
    assert json.loads(out) == [["!o@a", "o:a->b", "TICK"]]


def test_traces_cap(capsys):
    code, _, err = run(capsys, "traces", sample("parallel"), "--cap", "1")
    assert code == 3
    assert diagnostic(err)["error"] == "CapExceeded"


def test_cap_must_be_positive(capsys):
    with pytest.raises(SystemExit) as info:
        main(["traces", sample("parallel"), "--cap", "0"])
    assert info.value.code == 2


# ============================================================================
# VERIFY AND CONFORMANCE
# ============================================================================

def test_verify_weak_by_default(capsys):
    code, out, _ = run(capsys, "verify", sample("intro"), sample("intro_connected"))
    assert code == 0
    assert json.loads(out) == {"equivalent": True, "mode": "weak"}


def test_verify_strong(capsys):
    code, out, _ = run(capsys, "verify", "--strong", sample("intro"), sample("intro_connected"))
    assert code == 1
    result = json.loads(out)
    assert result["mode"] == "strong"
    assert result["witness"] == ["a->b:o1", "b->e:o3*", "e->c:o4*", "c->d:o2", "TICK"]


def test_verify_modes_are_exclusive(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--weak", "--strong", sample("intro"), sample("intro")])


def test_conformance(capsys):
    code, out, _ = run(capsys, "conformance", sample("intro"))
    assert code == 1
    assert json.loads(out)["counterexample"] == ["o2:c->d", "o1:a->b", "TICK"]
    code, out, _ = run(capsys, "conformance", sample("intro_connected"))
    assert code == 0
    assert json.loads(out)["sync_strong_equal"]


@pytest.mark.parametrize("name", ["intro", "parallel", "two_buyers"])
def test_amend_output_pipes_into_check(capsys, monkeypatch, name):
    code, out, _ = run(capsys, "amend", sample(name))
    assert code == 0
    monkeypatch.setattr("sys.stdin", io.StringIO(out))
    code, out, _ = run(capsys, "check", "-")
    assert code == 0
    assert json.loads(out)["connected"]
