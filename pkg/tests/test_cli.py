import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from seqfmeca.cli import main
from seqfmeca.fmeca import default_matrix

from conftest import LINEAR3, TER, TER_ANNOTATIONS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ter_files(tmp_path):
    model = tmp_path / "ter.rau"
    shutil.copy(TER, model)
    ann = tmp_path / "ann.json"
    shutil.copy(TER_ANNOTATIONS, ann)
    return model, ann, tmp_path / "ws.json"


def test_check_ter_clean(capsys):
    code, out, err = run(capsys, "check", TER)
    assert code == 0
    assert out == ""


def test_check_syntax_error(capsys, tmp_path):
    bad = tmp_path / "bad.rau"
    bad.write_text("system S {\n  actor A kind;\n}\n")
    code, out, err = run(capsys, "check", bad)
    assert code == 1
    assert f"{bad}:2:" in err


def test_check_json(capsys, tmp_path):
    bad = tmp_path / "bad.rau"
    bad.write_text("system S { actor A kind human; }\ninteraction I { msg m1: A -> Ghost : Op(); }\n")
    code, out, err = run(capsys, "check", "--json", bad)
    doc = json.loads(out)
    assert code == 1 and err == ""
    assert [d["code"] for d in doc["diagnostics"]] == ["unresolved-participant"]


def test_check_missing_file(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.rau")[0] == 3


def test_enumerate_linear3(capsys):
    code, out, _ = run(capsys, "enumerate", LINEAR3)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 10
    code, out, _ = run(capsys, "enumerate", "--json", LINEAR3)
    assert [c["id"] for c in json.loads(out)["candidates"]] == lines


def test_enumerate_profile(capsys, tmp_path):
    prof = tmp_path / "p.txt"
    prof.write_text("profile human { E4 suppressed; }\n")
    code, out, _ = run(capsys, "enumerate", "--profile", prof, LINEAR3)
    assert code == 0 and len(out.splitlines()) == 7
    assert run(capsys, "enumerate", "--profile", tmp_path / "missing", LINEAR3)[0] == 3
    prof.write_text("profile robot {}")
    assert run(capsys, "enumerate", "--profile", prof, LINEAR3)[0] == 1


def test_enumerate_invalid_model(capsys, tmp_path):
    bad = tmp_path / "bad.rau"
    bad.write_text("system S {}\ninteraction I { msg m1: A -> B : Op(); }\n")
    assert run(capsys, "enumerate", bad)[0] == 1


def test_worksheet_lifecycle(capsys, ter_files):
    model, ann, ws = ter_files
    assert run(capsys, "worksheet", "init", model, "-o", ws)[0] == 0
    assert run(capsys, "worksheet", "check", ws, model)[0] == 0
    assert run(capsys, "worksheet", "check", "--strict", ws, model)[0] == 1
    assert run(capsys, "worksheet", "merge", ws, ann)[0] == 0
    code, _, err = run(capsys, "worksheet", "check", ws, model)
    assert code == 0 and "undisposed-row" in err and "error" not in err


def test_worksheet_merge_unknown_candidate(capsys, ter_files, tmp_path):
    model, _, ws = ter_files
    run(capsys, "worksheet", "init", model, "-o", ws)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "kind": "annotations",
                               "rows": {"InstallInit/m9/E3/-/-": {"severity": 1}}}))
    before = ws.read_bytes()
    code, _, err = run(capsys, "worksheet", "merge", ws, bad)
    assert code == 1 and "unknown-candidate" in err
    assert ws.read_bytes() == before


def test_worksheet_drift(capsys, ter_files):
    model, _, ws = ter_files
    run(capsys, "worksheet", "init", model, "-o", ws)
    text = model.read_text()
    extra = "  msg m6: Operator -> ControlSystem : Check() after m5;\n}\n"
    model.write_text(text.rstrip().removesuffix("}") + extra)
    code, out, _ = run(capsys, "worksheet", "check", "--json", ws, model)
    codes = [d["code"] for d in json.loads(out)["diagnostics"]]
    assert code == 1
    assert "worksheet-drift" in codes and "missing-row" in codes


def test_report_formats(capsys, ter_files):
    model, ann, ws = ter_files
    run(capsys, "worksheet", "init", model, "-o", ws)
    run(capsys, "worksheet", "merge", ws, ann)
    code, out, _ = run(capsys, "report", ws)
    assert code == 0 and "Set air pressure in artificial muscles" in out
    code, out, _ = run(capsys, "report", "--format", "csv", ws)
    n = len(json.loads(ws.read_text())["rows"])
    assert len(list(csv.reader(io.StringIO(out, newline="")))) == n + 1
    code, out, _ = run(capsys, "report", "--summary", ws)
    assert code == 0 and "| intolerable | 2 |" in out


def test_report_matrix_flag_and_env(capsys, ter_files, tmp_path, monkeypatch):
    model, ann, ws = ter_files
    run(capsys, "worksheet", "init", model, "-o", ws)
    doc = default_matrix().to_json()
    doc["rows"]["negligible"][0] = "intolerable"
    bad = tmp_path / "bad_matrix.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "report", "--matrix", bad, ws)
    assert code == 1 and "matrix-not-monotone" in err
    monkeypatch.setenv("SEQFMECA_MATRIX", str(bad))
    assert run(capsys, "report", ws)[0] == 1
    good = tmp_path / "good.json"
    good.write_text(json.dumps(default_matrix().to_json()))
    assert run(capsys, "report", "--matrix", good, ws)[0] == 0
    assert run(capsys, "report", "--matrix", tmp_path / "none.json", ws)[0] == 3


def test_report_usage_errors(capsys, ter_files):
    model, _, ws = ter_files
    run(capsys, "worksheet", "init", model, "-o", ws)
    assert run(capsys, "report", "--format", "html", ws)[0] == 2
    assert run(capsys, "report", "--top-n", "0", ws)[0] == 2


def test_mutate_by_error(capsys, tmp_path):
    out = tmp_path / "mut"
    code, _, _ = run(capsys, "mutate", LINEAR3, "--error", "E.3", "--out-dir", out)
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "Start__m1__E3__-__-.puml", "Start__m2__E3__-__-.puml", "Start__m3__E3__-__-.puml"]


def test_mutate_by_candidate(capsys, tmp_path):
    out = tmp_path / "mut"
    code, _, _ = run(capsys, "mutate", LINEAR3, "--candidate", "Start/m2/E2/m1/-", "--out-dir", out)
    (f,) = out.iterdir()
    arrows = [ln for ln in f.read_text().splitlines() if "->" in ln]
    assert code == 0
    assert [a.split(" : ")[1] for a in arrows] == ["Load()", "Prime()", "Run()"]


def test_mutate_usage_errors(capsys, tmp_path):
    out = tmp_path / "mut"
    assert run(capsys, "mutate", LINEAR3, "--error", "E.12", "--out-dir", out)[0] == 2
    assert run(capsys, "mutate", LINEAR3, "--candidate", "Start/m9/E3/-/-", "--out-dir", out)[0] == 2
    assert run(capsys, "mutate", LINEAR3, "--out-dir", out)[0] == 2


def test_trace(capsys):
    code, out, _ = run(capsys, "trace", TER, "InstallInit")
    assert code == 0 and out.startswith("@startuml")
    assert run(capsys, "trace", TER, "Nope")[0] == 2


def test_no_command_is_usage_error(capsys):
    assert run(capsys)[0] == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "seqfmeca.cli", "enumerate", str(LINEAR3)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 10
