import json
import re

import pytest

from grafcet_analyzer import expr as ex
from grafcet_analyzer.frontend import (
    SCHEMA_VERSION,
    GrafcetParseError,
    build_report,
    emit_report,
    format_expr,
    format_grafcet,
    parse,
    report_json,
    tokenize,
)
from grafcet_analyzer.frontend.cli import main

from conftest import CORPUS, load

GRAFCET_FILES = sorted(p.name for p in CORPUS.glob("*.grafcet") if p.name != "broken.grafcet")


def parse_errors(text: str):
    with pytest.raises(GrafcetParseError) as info:
        parse(text, "t.grafcet")
    return info.value.errors


# -- parser --


def test_fig2_shape():
    g = load("fig2.grafcet")
    assert len(g.partials) == 1
    p = g.partials[0]
    assert len(p.steps) == 2 and len(p.transitions) == 2
    assert p.transition("t1").condition == ex.EdgeAtom("rising", ex.VarRef("button"))


def test_missing_closing_brace():
    (err,) = parse_errors("input bool a;\npartial P {\n  step 1 initial\n")
    assert err.kind == "syntax"
    assert (err.span.file, err.span.line, err.span.column) == ("t.grafcet", 4, 1)
    assert err.span.length >= 1


def test_unknown_step():
    (err,) = parse_errors("input bool a;\npartial P {\n step 1 initial\n transition t1: {1} -> {99} when a;\n}\n")
    assert err.kind == "unknown-reference"
    assert "99" in err.message
    assert (err.span.line, err.span.column, err.span.length) == (4, 25, 2)


def test_lexical_error():
    (err,) = parse_errors("partial P { step 1 initial $ }")
    assert err.kind == "lexical" and err.span.column == 28


def test_duplicate_ids():
    errs = parse_errors(
        "input bool a; internal int a;\npartial P { step 1 initial step 1 transition t: {1} -> {1} when a;"
        " transition t: {1} -> {1} when a; }\npartial P { step 1 initial }"
    )
    assert [e.kind for e in errs] == ["duplicate-id"] * 4


def test_unknown_variable_and_partial():
    errs = parse_errors("partial P { step 1 initial encloses Q transition t: {1} -> {1} when q; }")
    assert sorted(e.kind for e in errs) == ["unknown-reference"] * 2


def test_recovery_reports_every_error():
    errors = parse_errors((CORPUS / "broken.grafcet").read_text())
    assert [(e.kind, e.span.line) for e in errors] == [("syntax", 5), ("unknown-reference", 6), ("syntax", 7)]


def test_error_formatting():
    (err,) = parse_errors("partial P { step 1 initial $ }")
    assert str(err) == "t.grafcet:1:28: lexical error: unexpected character '$'"


def test_comments_are_skipped():
    tokens, errors = tokenize("step # comment\n1")
    assert errors == []
    assert [t.text for t in tokens][:2] == ["step", "1"]


@pytest.mark.parametrize(
    "text,expected",
    [
        ("a | b & c", ex.Or(ex.VarRef("a"), ex.And(ex.VarRef("b"), ex.VarRef("c")))),
        ("k + 1 * 2 < 3", ex.Compare("<", ex.Arith("+", ex.VarRef("k"), ex.Arith("*", ex.IntConst(1), ex.IntConst(2))), ex.IntConst(3))),
        ("-2", ex.IntConst(-2)),
        ("!a & true", ex.And(ex.Not(ex.VarRef("a")), ex.BoolConst(True))),
        ("falling(a) | step(P, 1)", ex.Or(ex.EdgeAtom("falling", ex.VarRef("a")), ex.StepRef("P", 1))),
    ],
)
def test_expression_syntax(text, expected):
    g = parse(f"input bool a, b, c; internal int k; partial P {{ step 1 initial transition t: {{1}} -> {{1}} when {text}; }}")
    assert g.partials[0].transitions[0].condition == expected


# -- printer --


@pytest.mark.parametrize("name", GRAFCET_FILES)
def test_round_trip(name):
    g = load(name)
    assert parse(format_grafcet(g)) == g


@pytest.mark.parametrize(
    "e",
    [
        ex.Arith("-", ex.VarRef("k"), ex.Arith("-", ex.VarRef("x"), ex.IntConst(1))),
        ex.Arith("*", ex.Arith("+", ex.VarRef("k"), ex.IntConst(1)), ex.IntConst(-3)),
        ex.Not(ex.Or(ex.VarRef("a"), ex.Compare("=", ex.VarRef("k"), ex.IntConst(0)))),
        ex.And(ex.VarRef("a"), ex.And(ex.VarRef("b"), ex.VarRef("c"))),
        ex.Arith("-", ex.IntConst(0), ex.VarRef("k")),
    ],
)
def test_expression_round_trip(e):
    text = f"input bool a, b, c; internal int k, x; partial P {{ step 1 initial transition t: {{1}} -> {{1}} when {format_expr(e)}; }}"
    assert parse(text).partials[0].transitions[0].condition == e


# -- reports --


def test_table_row(g20):
    text = emit_report(build_report(g20, "g20.grafcet", only="G20"))
    assert "Node | k2 | station2_finished | fault" in text
    assert "Step 204 | [3,3] | [0,1] | [0,1]" in text.splitlines()


def test_json_schema(g20):
    doc = json.loads(emit_report(build_report(g20, "g20.grafcet"), "json"))
    assert doc["schema_version"] == SCHEMA_VERSION
    assert set(doc) == {"schema_version", "file", "model", "warnings", "gate", "partials", "timing"}
    assert doc["gate"] == {"passed": True, "violations": []}
    g20_doc = next(p for p in doc["partials"] if p["name"] == "G20")
    assert g20_doc["diagnostics"] == []
    node = next(n for n in g20_doc["nodes"] if n["id"] == "204")
    assert node == {
        "id": "204",
        "kind": "step",
        "label": "Step 204",
        "reachable": True,
        "env": {"k2": [3, 3], "station2_finished": [0, 1], "fault": [0, 1]},
    }


def test_empty_diagnostics_are_an_empty_list(g20):
    assert '"diagnostics": []' in emit_report(build_report(g20, only="G20"), "json")


def test_json_is_stable_across_runs(g20):
    def strip(doc):
        doc["timing"] = None
        for p in doc["partials"]:
            p["time_ms"] = None
        return doc

    a = strip(report_json(build_report(g20)))
    b = strip(report_json(build_report(g20)))
    assert a == b


@pytest.mark.parametrize("name", ["g20.grafcet", "soundness.grafcet", "g20_mutated.grafcet", "unbounded_counter.grafcet"])
def test_text_and_json_agree(name):
    g = load(name)
    report = build_report(g, name)
    text = emit_report(report, "text").splitlines()
    doc = report_json(report)

    def cell(v):
        if v == "bottom":
            return "bottom"
        return "[{},{}]".format(*v)

    for p in doc["partials"]:
        start = text.index(next(line for line in text if line.startswith(f"== {p['name']} (")))
        header = next(i for i in range(start, len(text)) if text[i].startswith("Node"))
        rows = text[header + 1 : header + 1 + len(p["nodes"])]
        for node, row in zip(p["nodes"], rows):
            cells = [cell(node["env"][v]) for v in p["tracked"]]
            if not p["tracked"] and not node["reachable"]:
                cells = ["bottom"]
            expected = [node["label"], *cells]
            assert row.split(" | ") == expected


def test_enclosed_partial_carries_reentry_note(g20):
    doc = report_json(build_report(g20))
    notes = {p["name"]: p["notes"] for p in doc["partials"]}
    assert notes["G10"] == []
    assert len(notes["G20"]) == 1 and "step 12" in notes["G20"][0]


def test_bottom_rendering():
    g = parse("input bool a; internal int k; partial P { step 1 initial { store k := 1 on activation; } step 2 transition t1: {1} -> {2} when 0 = 1; }")
    report = build_report(g)
    assert "Step 2 | bottom" in emit_report(report).splitlines()
    node = next(n for n in report_json(report)["partials"][0]["nodes"] if n["id"] == "2")
    assert node["env"] == {"k": "bottom"} and not node["reachable"]


def test_infinite_bounds_in_json():
    g = load("unbounded_counter.grafcet")
    doc = report_json(build_report(g))
    node = next(n for n in doc["partials"][0]["nodes"] if n["id"] == "1")
    assert node["env"]["k"] == [0, "+inf"]


def test_model_summary_counts():
    g = load("plant.grafcet")
    m = report_json(build_report(g, analyze=False))["model"]
    assert (m["partials"], m["steps"], m["transitions"], m["stored_actions"], m["continuous_actions"]) == (8, 60, 62, 46, 15)


def test_parallel_jobs_give_same_tables():
    g = load("plant.grafcet")

    def tables(jobs):
        return [(p["name"], p["nodes"], p["diagnostics"]) for p in report_json(build_report(g, jobs=jobs))["partials"]]

    assert tables(1) == tables(4)


# -- command line --

EXIT_CODES = {
    "broken.grafcet": (3, 3),
    "fig2.grafcet": (0, 0),
    "forced_multi.grafcet": (2, 2),
    "g1.grafcet": (2, 2),
    "g2.grafcet": (2, 2),
    "g3.grafcet": (2, 2),
    "g4.grafcet": (2, 2),
    "g5.grafcet": (2, 2),
    "g6.grafcet": (2, 2),
    "g7_g8.grafcet": (2, 2),
    "g20.grafcet": (0, 0),
    "g20_mutated.grafcet": (0, 1),
    "plant.grafcet": (0, 0),
    "unbounded_counter.grafcet": (0, 0),
}


@pytest.mark.parametrize("name", sorted(EXIT_CODES))
def test_exit_codes(name, capsys):
    check, analyze = EXIT_CODES[name]
    assert main(["check", str(CORPUS / name)]) == check
    assert main(["analyze", str(CORPUS / name)]) == analyze


def test_check_g6_reports_parallel_write(capsys):
    assert main(["check", str(CORPUS / "g6.grafcet")]) == 2
    assert "PARALLEL_WRITE" in capsys.readouterr().out


def test_analyze_broken_prints_errors_to_stderr(capsys):
    assert main(["analyze", str(CORPUS / "broken.grafcet")]) == 3
    out = capsys.readouterr()
    assert out.out == ""
    assert re.search(r"broken\.grafcet:5:\d+: syntax error", out.err)


def test_missing_file(capsys, tmp_path):
    assert main(["check", str(tmp_path / "absent.grafcet")]) == 3


def test_analyze_g20_text(capsys):
    assert main(["analyze", str(CORPUS / "g20.grafcet"), "--partial", "G20"]) == 0
    out = capsys.readouterr().out
    assert "Step 204 | [3,3] | [0,1] | [0,1]" in out
    assert "== G10" not in out


def test_unknown_partial(capsys):
    assert main(["analyze", str(CORPUS / "g20.grafcet"), "--partial", "Nope"]) == 3


def test_allow_unsound_marks_result(capsys):
    assert main(["analyze", str(CORPUS / "g6.grafcet"), "--allow-unsound", "--format", "json"]) == 2
    doc = json.loads(capsys.readouterr().out)
    assert all(p["analyzed"] and not p["sound"] for p in doc["partials"] if not doc["gate"]["passed"])


def test_skipped_without_allow_unsound(capsys):
    main(["analyze", str(CORPUS / "g6.grafcet"), "--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    assert [p["skipped"] for p in doc["partials"]] == ["concurrency gate failed"] * len(doc["partials"])


def test_iteration_limit_exit(capsys):
    assert main(["analyze", str(CORPUS / "g20.grafcet"), "--max-visits", "1"]) == 4
    assert "ITERATION_LIMIT" in capsys.readouterr().err


def test_analysis_flags(capsys):
    path = str(CORPUS / "unbounded_counter.grafcet")
    assert main(["analyze", path, "--widen-delay", "0", "--no-narrow", "--jobs", "2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["partials"][0]["analyzed"]


def test_bad_flag_values(capsys):
    with pytest.raises(SystemExit):
        main(["analyze", "x.grafcet", "--max-visits", "0"])
