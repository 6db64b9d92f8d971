import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from seqfmeca import (
    completeness_check,
    default_matrix,
    enumerate_candidates,
    init_worksheet,
    merge_annotations,
    rank_rows,
    residual_risk,
    risk_rank,
    schemas,
)
from seqfmeca.fmeca import (
    AnnotationError,
    MatrixError,
    Probability,
    RiskClass,
    RiskMatrix,
    Severity,
    Worksheet,
    WorksheetError,
    WorksheetRow,
    model_digest,
)
from seqfmeca.catalog import ErrorModel, FailureModeCandidate
from seqfmeca.model import Message

S, P, R = Severity, Probability, RiskClass

E8 = "InstallInit/m2/E8/pressure/above_max"
E3 = "InstallInit/m2/E3/-/-"
E2 = "InstallInit/m2/E2/m1/-"


def ann(rows):
    return {"schema_version": 1, "kind": "annotations", "rows": rows}


# -- scales and matrix ------------------------------------------------------


def test_scales():
    assert [s.name for s in S] == ["CATASTROPHIC", "SEVERE", "MAJOR", "MINOR", "NEGLIGIBLE"]
    assert int(S.CATASTROPHIC) == 1 and S.MINOR.label == "minor (4)"
    assert [p.abbreviation for p in sorted(P, reverse=True)] == ["F", "P", "O", "R", "I"]
    assert P.parse("P") is P.PROBABLE and P.parse("O") is P.OCCASIONAL
    assert S.parse("sever") is S.SEVERE and S.parse("2") is S.SEVERE and S.parse(3) is S.MAJOR
    for bad in ("X", "", "often"):
        with pytest.raises(ValueError):
            P.parse(bad)
    for bad in (0, 6, "huge"):
        with pytest.raises(ValueError):
            S.parse(bad)


# Frozen copy of the shipped default table, columns F P O R I.
DEFAULT_TABLE = {
    S.CATASTROPHIC: "IIIUA",
    S.SEVERE: "IIUTA",
    S.MAJOR: "UUTTA",
    S.MINOR: "UTTAA",
    S.NEGLIGIBLE: "TTAAA",
}
LETTER = {"I": R.INTOLERABLE, "U": R.UNDESIRABLE, "T": R.TOLERABLE, "A": R.ACCEPTABLE}


def test_default_matrix_pinned():
    m = default_matrix()
    for s, row in DEFAULT_TABLE.items():
        for p, letter in zip(sorted(P, reverse=True), row):
            assert risk_rank(s, p, m) is LETTER[letter], (s, p)


def test_default_matrix_design_rules():
    m = default_matrix()
    assert m.check() == []
    for s in S:
        assert risk_rank(s, P.IMPOSSIBLE, m) is R.ACCEPTABLE
    for s in (S.CATASTROPHIC, S.SEVERE):
        for p in (P.FREQUENT, P.PROBABLE):
            assert risk_rank(s, p, m) is R.INTOLERABLE
    assert risk_rank(S.CATASTROPHIC, P.OCCASIONAL, m) is R.INTOLERABLE
    assert risk_rank(S.NEGLIGIBLE, P.RARE, m) is R.ACCEPTABLE
    assert risk_rank(S.NEGLIGIBLE, P.FREQUENT, m) <= R.TOLERABLE


def test_monotone_by_brute_force():
    m = default_matrix()
    for s1 in S:
        for s2 in S:
            for p1 in P:
                for p2 in P:
                    if s2 >= s1 and p2 <= p1:  # less severe and less likely
                        assert m.lookup(s2, p2) <= m.lookup(s1, p1)


def test_matrix_json_round_trip():
    m = default_matrix()
    assert RiskMatrix.from_json(m.to_json()) == m


def test_non_monotone_matrix_rejected():
    doc = default_matrix().to_json()
    doc["rows"]["negligible"][0] = "intolerable"
    with pytest.raises(MatrixError) as exc:
        RiskMatrix.from_json(doc)
    assert {d.code for d in exc.value.diagnostics} == {"matrix-not-monotone"}


def test_impossible_column_enforced():
    doc = default_matrix().to_json()
    doc["rows"]["catastrophic"][4] = "tolerable"
    with pytest.raises(MatrixError) as exc:
        RiskMatrix.from_json(doc)
    assert "matrix-impossible-column" in {d.code for d in exc.value.diagnostics}


def test_matrix_schema_and_syntax_errors():
    with pytest.raises(MatrixError):
        RiskMatrix.loads("{")
    doc = default_matrix().to_json()
    doc["rows"]["major"] = ["acceptable"] * 4
    with pytest.raises(MatrixError) as exc:
        RiskMatrix.from_json(doc)
    assert {d.code for d in exc.value.diagnostics} == {"matrix-schema"}


# -- worksheet --------------------------------------------------------------


def test_init_linear3(linear3):
    ws = init_worksheet(linear3, enumerate_candidates(linear3))
    assert len(ws.rows) == 10
    assert not any(r.disposed for r in ws.rows)
    assert ws.model_digest == model_digest(linear3)


def test_init_prefill(ter_blank):
    row = ter_blank.row(E3)
    assert row.failure_mode_text == "Omission of a message among an interaction."
    assert row.display_name == "Install/Init Control System:: Set air pressure in artificial muscles"
    assert ter_blank.row(E8).failure_mode_text.endswith("[pressure, above_max]")


def test_init_empty(ter):
    ws = init_worksheet(ter, [])
    assert ws.rows == ()
    assert Worksheet.loads(ws.dumps()) == ws


def test_init_rejects_foreign_candidates(ter):
    with pytest.raises(WorksheetError):
        init_worksheet(ter, [FailureModeCandidate("Nope", "m1", ErrorModel.E3)])
    with pytest.raises(WorksheetError):
        init_worksheet(ter, [FailureModeCandidate("InstallInit", "m99", ErrorModel.E3)])


def test_merge_worked_values(ter_ws):
    assert (ter_ws.row(E3).severity, ter_ws.row(E3).probability) == (S.MINOR, P.PROBABLE)
    assert (ter_ws.row(E2).severity, ter_ws.row(E2).probability) == (S.SEVERE, P.PROBABLE)
    assert (ter_ws.row(E8).severity, ter_ws.row(E8).probability) == (S.CATASTROPHIC, P.OCCASIONAL)
    assert ter_ws.row(E8).failure_mode_text == "Pressure too high (E.8)"
    assert sum(r.disposed for r in ter_ws.rows) == 3


def test_merge_idempotent(ter_ws, ter_annotations):
    again = merge_annotations(ter_ws, ter_annotations)
    assert again == ter_ws
    assert again.dumps() == ter_ws.dumps()


def test_merge_commutes_for_disjoint_rows(ter_blank, ter_annotations):
    rows = list(ter_annotations["rows"].items())
    a, b = ann(dict(rows[:1])), ann(dict(rows[1:]))
    ab = merge_annotations(merge_annotations(ter_blank, a), b)
    ba = merge_annotations(merge_annotations(ter_blank, b), a)
    assert ab == ba == merge_annotations(ter_blank, ter_annotations)


@pytest.mark.parametrize("rows, code", [
    ({"InstallInit/m9/E3/-/-": {"severity": 3}}, "unknown-candidate"),
    ({E3: {"severity": 9, "probability": "P"}}, "malformed-severity"),
    ({E3: {"severity": 3, "probability": "Z"}}, "malformed-probability"),
    ({E3: {"waived": True}}, "waiver-without-justification"),
    ({E3: {"severity": 3, "probability": "O", "residual_severity": 1}}, "residual-invariant"),
    ({E3: {"severity": 3, "probability": "O", "residual_probability": "F"}}, "residual-invariant"),
    ({E3: {"colour": "red"}}, "annotation-schema"),
])
def test_merge_errors(ter_blank, rows, code):
    with pytest.raises(AnnotationError) as exc:
        merge_annotations(ter_blank, ann(rows))
    assert code in {d.code for d in exc.value.diagnostics}


def test_merge_all_or_nothing(ter_blank):
    doc = ann({E3: {"severity": 4, "probability": "P"}, "I/x/E3/-/-": {"severity": 1}})
    with pytest.raises(AnnotationError):
        merge_annotations(ter_blank, doc)
    assert ter_blank.row(E3).severity is None


def test_waiver_disposes(ter_blank):
    ws = merge_annotations(ter_blank, ann({E3: {"waived": True, "waiver_justification": "covered by interlock"}}))
    assert ws.row(E3).disposed and not ws.row(E3).rated


def test_worksheet_json_round_trip(ter_ws):
    assert Worksheet.loads(ter_ws.dumps()) == ter_ws


def test_worksheet_rejects_bad_documents(ter_ws):
    doc = ter_ws.to_json()
    doc["rows"].append(doc["rows"][0])
    with pytest.raises(WorksheetError):
        Worksheet.from_json(doc)
    with pytest.raises(WorksheetError):
        Worksheet.loads("[]")


# -- residual risk ----------------------------------------------------------


def rated(s, p, **kw):
    return WorksheetRow("I/m/E3/-/-", ErrorModel.E3, "I", "m", "I:: m", "x", severity=s, probability=p, **kw)


def test_residual_examples():
    m = default_matrix()
    before, after = residual_risk(rated(S.CATASTROPHIC, P.OCCASIONAL, residual_severity=S.MAJOR), m)
    assert (before, after) == (R.INTOLERABLE, R.TOLERABLE)
    assert residual_risk(rated(S.MINOR, P.PROBABLE), m) == (R.TOLERABLE, R.TOLERABLE)
    before, after = residual_risk(rated(S.MINOR, P.PROBABLE, residual_probability=P.RARE), m)
    assert (before, after) == (R.TOLERABLE, R.ACCEPTABLE)


def test_residual_rejects_unrated_and_bad_residuals():
    m = default_matrix()
    with pytest.raises(ValueError):
        residual_risk(rated(None, None), m)
    with pytest.raises(ValueError):
        residual_risk(rated(S.MAJOR, P.RARE, residual_severity=S.CATASTROPHIC), m)


@given(st.sampled_from(list(S)), st.sampled_from(list(P)), st.data())
def test_residual_never_worse(s, p, data):
    rs = data.draw(st.sampled_from([None] + [x for x in S if x >= s]))
    rp = data.draw(st.sampled_from([None] + [x for x in P if x <= p]))
    before, after = residual_risk(rated(s, p, residual_severity=rs, residual_probability=rp), default_matrix())
    assert after <= before


# -- completeness -----------------------------------------------------------


def test_completeness_fully_disposed(ter, ter_ws):
    cands = enumerate_candidates(ter)
    rows = {r["candidate_id"]: {"severity": 5, "probability": "R"} for r in ter_ws.to_json()["rows"]
            if not ter_ws.row(r["candidate_id"]).disposed}
    full = merge_annotations(ter_ws, ann(rows))
    assert completeness_check(full, cands, model_digest(ter)) == []


def test_completeness_undisposed_warnings(ter, ter_ws):
    diags = completeness_check(ter_ws, enumerate_candidates(ter), model_digest(ter))
    assert {d.code for d in diags} == {"undisposed-row"}
    assert len(diags) == len(ter_ws.rows) - 3
    assert not any(d.is_error for d in diags)


def test_completeness_one_missing_severity(linear3):
    cands = enumerate_candidates(linear3)
    ws = init_worksheet(linear3, cands)
    rows = {c.id: {"severity": 3, "probability": "R"} for c in cands[1:]}
    rows[cands[0].id] = {"probability": "R"}
    diags = completeness_check(merge_annotations(ws, ann(rows)), cands)
    assert [(d.code, d.location) for d in diags] == [("undisposed-row", cands[0].id)]


def test_completeness_model_edit(ter, ter_ws):
    inter = ter.interaction("InstallInit")
    extra = Message("m6", "Operator", "ControlSystem", "Check", predecessors=("m5",))
    edited = replace(ter, interactions=(replace(inter, messages=inter.messages + (extra,)),))
    before = {c.id for c in enumerate_candidates(ter)}
    cands = enumerate_candidates(edited)
    new = [c.id for c in cands if c.id not in before]
    diags = completeness_check(ter_ws, cands, model_digest(edited))
    assert [d.location for d in diags if d.code == "missing-row"] == new
    assert [d.code for d in diags if d.is_error].count("worksheet-drift") == 1


def test_completeness_stale_rows(ter, ter_ws):
    inter = ter.interaction("InstallInit")
    edited = replace(ter, interactions=(replace(inter, messages=inter.messages[:4]),))
    diags = completeness_check(ter_ws, enumerate_candidates(edited))
    stale = [d for d in diags if d.code == "stale-row"]
    assert stale and all(d.severity.value == "info" for d in stale)
    assert all("/m5/" in d.location or "ControlSystem" in d.location for d in stale)


# -- ranking ----------------------------------------------------------------


def test_rank_ter_e8_first(ter_ws):
    ranked = rank_rows(ter_ws, default_matrix())
    assert [r.candidate_id for r in ranked[:3]] == [E8, E2, E3]


def test_rank_waived_last_in_id_order(ter_blank):
    rows = {r.candidate_id: {"waived": True, "waiver_justification": "n/a"} for r in ter_blank.rows}
    ws = merge_annotations(ter_blank, ann(rows))
    assert [r.candidate_id for r in rank_rows(ws, default_matrix())] == sorted(rows)


def test_rank_single_row(ter_blank):
    ws = replace(ter_blank, rows=ter_blank.rows[:1])
    assert rank_rows(ws, default_matrix()) == list(ws.rows)


_SEV = st.sampled_from([None] + list(S))
_PROB = st.sampled_from([None] + list(P))


@given(st.lists(st.tuples(_SEV, _PROB, st.booleans()), min_size=1, max_size=25), st.randoms())
def test_rank_is_shuffle_invariant_permutation(specs, rnd):
    rows = [
        WorksheetRow(f"I/m{k}/E3/-/-", ErrorModel.E3, "I", f"m{k}", "I", "x", severity=s, probability=p,
                     waived=w, waiver_justification="j" if w else "")
        for k, (s, p, w) in enumerate(specs)
    ]
    m = default_matrix()
    ranked = rank_rows(Worksheet("S", "d", tuple(rows)), m)
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    assert ranked == rank_rows(Worksheet("S", "d", tuple(shuffled)), m)
    assert sorted(r.candidate_id for r in ranked) == sorted(r.candidate_id for r in rows)
    rated = [r for r in ranked if r.rated and not r.waived]
    risks = [m.lookup(r.severity, r.probability) for r in rated]
    assert risks == sorted(risks, reverse=True)
    assert ranked[:len(rated)] == rated


def test_digest_changes_with_model(ter):
    inter = ter.interaction("InstallInit")
    edited = replace(ter, interactions=(replace(inter, realizes="Robot management"),))
    assert model_digest(edited) != model_digest(ter)
    assert model_digest(ter) == model_digest(ter)


def test_shipped_documents_match_schemas(ter_annotations, ter_ws):
    assert schemas.errors(ter_annotations, "annotations") == []
    assert schemas.errors(json.loads(ter_ws.dumps()), "worksheet") == []
    assert schemas.errors(default_matrix().to_json(), "matrix") == []
