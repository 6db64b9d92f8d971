"""
Command-line pipeline: check -> enumerate -> worksheet init/merge/check ->
report -> mutate.

Exit status: 0 success, 1 diagnostics with errors, 2 usage error, 3 I/O error.
Human-readable diagnostics go to stderr; machine output (``--json``) and
artifacts go to stdout or ``--out``.

Profile override files use the model language's block syntax::

    profile human {
      E4 rare;
      E9 suppressed "use E6-E8 on the response";
    }
    profile external { E9 applies; }
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import diagnostics as dg
from .catalog import DEFAULT_PROFILE, ErrorModel, enumerate_candidates, parse_profile
from .dsl import parse
from .fmeca import (
    AnnotationError,
    MatrixError,
    RiskMatrix,
    Worksheet,
    WorksheetError,
    completeness_check,
    default_matrix,
    init_worksheet,
    merge_annotations,
    model_digest,
)
from .model import allocation_lints, validate_model
from .mutator import mutate, nominal_trace
from .reporting import FORMATS, ReportOptions, emit_fmeca, emit_sequence_text, emit_summary

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_USAGE = 2
EXIT_IO = 3

MATRIX_ENV = "SEQFMECA_MATRIX"


class Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        super().__init__(message)


def _report(diags, as_json=False):
    if as_json:
        sys.stdout.write(dg.dumps(diags))
    else:
        for d in diags:
            print(d.format(), file=sys.stderr)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise Exit(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str | None, data: bytes):
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise Exit(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def _text(path: str) -> str:
    try:
        return _read(path).decode("utf-8")
    except UnicodeDecodeError:
        raise Exit(EXIT_DIAGNOSTICS, f"{path} is not valid UTF-8") from None


def load_model(path: str, as_json=False):
    result = parse(_read(path), path)
    diags = list(result.diagnostics)
    if result.model is not None:
        diags += validate_model(result.model)
    if dg.has_errors(diags):
        _report(diags, as_json)
        raise Exit(EXIT_DIAGNOSTICS)
    return result.model


def load_profile(path: str | None):
    if path is None:
        return DEFAULT_PROFILE
    profile, diags = parse_profile(_text(path), path)
    if profile is None:
        _report(diags)
        raise Exit(EXIT_DIAGNOSTICS)
    return profile


def load_matrix(path: str | None) -> RiskMatrix:
    path = path or os.environ.get(MATRIX_ENV) or None
    if path is None:
        return default_matrix()
    try:
        return RiskMatrix.loads(_text(path))
    except MatrixError as exc:
        _report([dg.Diagnostic(d.severity, d.code, f"{path}:{d.location}", d.text) for d in exc.diagnostics])
        raise Exit(EXIT_DIAGNOSTICS) from None


def load_worksheet(path: str) -> Worksheet:
    try:
        return Worksheet.loads(_text(path))
    except WorksheetError as exc:
        raise Exit(EXIT_DIAGNOSTICS, f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    result = parse(_read(args.model), args.model)
    diags = list(result.diagnostics)
    if result.model is not None:
        diags += validate_model(result.model)
        if not dg.has_errors(diags):
            diags += allocation_lints(result.model, args.load_threshold)
    _report(diags, args.json)
    return EXIT_DIAGNOSTICS if dg.has_errors(diags) else EXIT_OK


def cmd_enumerate(args) -> int:
    model = load_model(args.model, args.json)
    profile = load_profile(args.profile)
    cands = enumerate_candidates(model, profile)
    if args.json:
        doc = {"schema_version": 1, "kind": "candidates", "model": model.name,
               "candidates": [c.to_json() for c in cands]}
        _write(None, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))
    else:
        _write(None, "".join(c.id + "\n" for c in cands).encode("utf-8"))
    return EXIT_OK


def cmd_worksheet_init(args) -> int:
    model = load_model(args.model)
    cands = enumerate_candidates(model, load_profile(args.profile))
    ws = init_worksheet(model, cands, args.matrix_ref)
    _write(args.out, ws.dumps().encode("utf-8"))
    return EXIT_OK


def cmd_worksheet_merge(args) -> int:
    ws = load_worksheet(args.worksheet)
    try:
        annotations = json.loads(_text(args.annotations))
    except json.JSONDecodeError as exc:
        raise Exit(EXIT_DIAGNOSTICS, f"{args.annotations}: not valid JSON: {exc}") from None
    try:
        merged = merge_annotations(ws, annotations)
    except AnnotationError as exc:
        _report(exc.diagnostics)
        return EXIT_DIAGNOSTICS
    _write(args.out or args.worksheet, merged.dumps().encode("utf-8"))
    return EXIT_OK


def cmd_worksheet_check(args) -> int:
    ws = load_worksheet(args.worksheet)
    model = load_model(args.model, args.json)
    cands = enumerate_candidates(model, load_profile(args.profile))
    diags = completeness_check(ws, cands, model_digest(model))
    _report(diags, args.json)
    if dg.has_errors(diags):
        return EXIT_DIAGNOSTICS
    if args.strict and any(d.severity is dg.Level.WARNING for d in diags):
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def cmd_report(args) -> int:
    matrix = load_matrix(args.matrix)
    ws = load_worksheet(args.worksheet)
    if args.summary:
        data = emit_summary(ws, matrix, args.top_n or 10)
    else:
        data = emit_fmeca(ws, matrix, ReportOptions(args.format, not args.exclude_waived, args.top_n))
    _write(args.out, data)
    return EXIT_OK


def _file_stem(candidate_id: str) -> str:
    return candidate_id.replace("/", "__").replace("->", "-to-").replace("*", "all")


def cmd_mutate(args) -> int:
    model = load_model(args.model)
    cands = enumerate_candidates(model, load_profile(args.profile))
    if args.candidate is not None:
        chosen = [c for c in cands if c.id == args.candidate]
        if not chosen:
            raise Exit(EXIT_USAGE, f"unknown candidate {args.candidate!r}")
    else:
        try:
            err = ErrorModel.parse(args.error)
        except ValueError as exc:
            raise Exit(EXIT_USAGE, str(exc)) from None
        chosen = [c for c in cands if c.error is err]
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise Exit(EXIT_IO, f"cannot create {out_dir}: {exc.strerror or exc}") from None
    written = 0
    for c in chosen:
        inter = model.interaction(c.interaction)
        mutants = mutate(inter, c, seed=args.seed)
        for k, mt in enumerate(mutants):
            suffix = f".{k}" if len(mutants) > 1 else ""
            _write(str(out_dir / f"{_file_stem(c.id)}{suffix}.puml"), emit_sequence_text(inter, mt))
            written += 1
    print(f"wrote {written} mutant diagram(s) to {out_dir}", file=sys.stderr)
    return EXIT_OK


def cmd_trace(args) -> int:
    model = load_model(args.model)
    try:
        inter = model.interaction(args.interaction)
    except LookupError as exc:
        raise Exit(EXIT_USAGE, str(exc)) from None
    _write(args.out, emit_sequence_text(inter, nominal_trace(inter)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqfmeca", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a model, with allocation lints")
    p.add_argument("model")
    p.add_argument("--json", action="store_true", help="machine-readable diagnostics on stdout")
    p.add_argument("--load-threshold", type=int, default=3,
                   help="use cases per human actor that trigger a concurrent-load warning")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("enumerate", help="list failure-mode candidates")
    p.add_argument("model")
    p.add_argument("--profile", help="actor profile override file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("worksheet", help="create, annotate and check FMECA worksheets")
    wsub = p.add_subparsers(dest="action", required=True)
    w = wsub.add_parser("init", help="blank worksheet with one row per candidate")
    w.add_argument("model")
    w.add_argument("--profile")
    w.add_argument("--matrix-ref", default="default", help="name of the matrix recorded in the worksheet")
    w.add_argument("-o", "--out")
    w.set_defaults(func=cmd_worksheet_init)
    w = wsub.add_parser("merge", help="apply an annotation document (rewrites the worksheet)")
    w.add_argument("worksheet")
    w.add_argument("annotations")
    w.add_argument("-o", "--out", help="write here instead of rewriting the worksheet")
    w.set_defaults(func=cmd_worksheet_merge)
    w = wsub.add_parser("check", help="completeness and drift check against the model")
    w.add_argument("worksheet")
    w.add_argument("model")
    w.add_argument("--profile")
    w.add_argument("--strict", action="store_true", help="fail on undisposed rows too")
    w.add_argument("--json", action="store_true")
    w.set_defaults(func=cmd_worksheet_check)

    p = sub.add_parser("report", help="emit an FMECA table or summary")
    p.add_argument("worksheet")
    p.add_argument("--format", choices=FORMATS, default="markdown")
    p.add_argument("--matrix", help=f"risk matrix JSON (default: ${MATRIX_ENV} or the shipped matrix)")
    p.add_argument("--top-n", type=int)
    p.add_argument("--exclude-waived", action="store_true")
    p.add_argument("--summary", action="store_true", help="risk-class counts and top rows instead of the table")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("mutate", help="write PlantUML diagrams of mutant traces")
    p.add_argument("model")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--candidate", help="candidate id")
    g.add_argument("--error", help="error model, e.g. E.3")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("trace", help="PlantUML text of an interaction's nominal trace")
    p.add_argument("model")
    p.add_argument("interaction")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_trace)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "top_n", None) is not None and args.top_n < 1:
        print("seqfmeca: --top-n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except Exit as exc:
        if str(exc):
            print(f"seqfmeca: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
