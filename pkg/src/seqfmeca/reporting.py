"""
Report emitters: FMECA tables (Markdown, CSV, JSON), ranked summaries and
PlantUML sequence text for nominal and mutant traces.

Every emitter is a pure function returning UTF-8 bytes; identical inputs give
identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .catalog import parse_candidate_id
from .fmeca import (
    SCHEMA_VERSION,
    RiskClass,
    RiskMatrix,
    Worksheet,
    WorksheetRow,
    rank_rows,
    residual_risk,
    row_risk,
)
from .model import Interaction
from .mutator import EXTRANEOUS, Delivery, MutantTrace, ResponseTag, Timing, Treatment

FORMATS = ("markdown", "csv", "json")

CSV_HEADER = [
    "Candidate id",
    "Interaction/Message",
    "Failure mode (error)",
    "Effects a. Same level",
    "Effects b. Upper level",
    "Effects c. System level",
    "Severity",
    "Probability",
    "Detection a. Failure mode",
    "Detection b. Effects",
    "Solutions a. Prevention",
    "Solutions b. Protection",
    "Solutions c. Other actions",
    "Solutions d. Remarks",
    "Risk class",
]

MD_HEADER = [
    "Id",
    "Interaction/Message",
    "Failure mode (error)",
    "Effects",
    "Severity",
    "Probability",
    "Possible detection means (online)",
    "Potential solutions",
    "Risk",
]


@dataclass(frozen=True)
class ReportOptions:
    format: str = "markdown"
    include_waived: bool = True
    top_n: int | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown report format {self.format!r}")
        if self.top_n is not None and self.top_n < 1:
            raise ValueError("top_n must be at least 1")


def _failure_text(row: WorksheetRow) -> str:
    tag = row.error.tag
    return row.failure_mode_text if tag in row.failure_mode_text else f"{row.failure_mode_text} ({tag})"


def _risk_text(row: WorksheetRow, matrix: RiskMatrix) -> str:
    if row.waived:
        return f"waived: {row.waiver_justification}"
    if not row.rated:
        return ""
    before, after = residual_risk(row, matrix)
    if (row.residual_severity, row.residual_probability) == (None, None):
        return str(before)
    return f"{before} (residual: {after})"


def _lettered(*parts: str) -> str:
    return " ".join(f"{letter}. {p}" for letter, p in zip("abcd", parts) if p)


def _select(worksheet: Worksheet, matrix: RiskMatrix, options: ReportOptions) -> list[WorksheetRow]:
    rows = list(worksheet.rows)
    if options.top_n is not None:
        rows = rank_rows(worksheet, matrix)[:options.top_n]
    if not options.include_waived:
        rows = [r for r in rows if not r.waived]
    return rows


def _md_cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\r\n", "\n").replace("\n", "<br>")


def _md_table(rows, matrix) -> list[str]:
    lines = ["| " + " | ".join(MD_HEADER) + " |", "|" + "---|" * len(MD_HEADER)]
    for r in rows:
        cells = [
            r.candidate_id,
            r.display_name,
            _failure_text(r),
            _lettered(r.effect_local, r.effect_upper, r.effect_system),
            r.severity.label if r.severity else "",
            r.probability.label if r.probability else "",
            _lettered(r.detection_failure_mode, r.detection_effects),
            _lettered(r.prevention, r.protection, r.other_actions, r.remarks),
            _risk_text(r, matrix),
        ]
        lines.append("| " + " | ".join(_md_cell(c) for c in cells) + " |")
    return lines


def _markdown(worksheet, matrix, rows) -> str:
    out = [f"# FMECA: {worksheet.model_name}", ""]
    if not rows:
        out += _md_table([], matrix)
        return "\n".join(out) + "\n"
    groups: dict[str, list[WorksheetRow]] = {}
    titles: dict[str, str] = {}
    for r in rows:
        groups.setdefault(r.interaction, []).append(r)
        titles.setdefault(r.interaction, r.display_name.split("::")[0])
    for inter, group in groups.items():
        out += [f"## {titles[inter]} ({inter})", ""]
        out += _md_table(group, matrix)
        out.append("")
    return "\n".join(out)


def _csv(rows, matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            r.candidate_id,
            r.display_name,
            _failure_text(r),
            r.effect_local,
            r.effect_upper,
            r.effect_system,
            r.severity.label if r.severity else "",
            r.probability.label if r.probability else "",
            r.detection_failure_mode,
            r.detection_effects,
            r.prevention,
            r.protection,
            r.other_actions,
            r.remarks,
            _risk_text(r, matrix),
        ])
    return buf.getvalue()


def report_document(worksheet: Worksheet, matrix: RiskMatrix, rows) -> dict:
    entries = []
    for r in rows:
        risk = row_risk(r, matrix)
        residual = residual_risk(r, matrix)[1] if risk is not None else None
        entries.append({
            "row": r.to_json(),
            "risk_class": str(risk) if risk is not None else None,
            "residual_risk_class": str(residual) if residual is not None else None,
            "severity_label": r.severity.label if r.severity else None,
            "probability_label": r.probability.label if r.probability else None,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fmeca_report",
        "model": {"name": worksheet.model_name, "digest": worksheet.model_digest},
        "matrix": matrix.name,
        "rows": entries,
    }


def emit_fmeca(worksheet: Worksheet, matrix: RiskMatrix, options: ReportOptions = ReportOptions()) -> bytes:
    rows = _select(worksheet, matrix, options)
    if options.format == "csv":
        return _csv(rows, matrix).encode("utf-8")
    if options.format == "json":
        doc = report_document(worksheet, matrix, rows)
        return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    return _markdown(worksheet, matrix, rows).encode("utf-8")


def emit_summary(worksheet: Worksheet, matrix: RiskMatrix, top_n: int = 10) -> bytes:
    ranked = rank_rows(worksheet, matrix)
    rated = [r for r in ranked if not r.waived and r.rated]
    waived = [r for r in ranked if r.waived]
    undisposed = [r for r in worksheet.rows if not r.disposed]
    counts = {c: 0 for c in RiskClass}
    for r in rated:
        counts[row_risk(r, matrix)] += 1

    out = [f"# FMECA summary: {worksheet.model_name}", "", f"Risk matrix: {matrix.name}", "",
           "| Risk class | Rows |", "|---|---|"]
    for c in sorted(RiskClass, reverse=True):
        out.append(f"| {c} | {counts[c]} |")
    out.append(f"| waived | {len(waived)} |")
    out.append(f"| undisposed | {len(undisposed)} |")
    out += ["", f"## Top {top_n} rows", ""]
    if not rated:
        out.append("(no rated rows)")
    for k, r in enumerate(rated[:top_n], 1):
        out.append(f"{k}. [{row_risk(r, matrix)}] {r.candidate_id}: {r.display_name}: {_failure_text(r)} "
                   f"({r.severity.label}, {r.probability.label})")
    out += ["", "## Undisposed candidates", ""]
    out += [f"- {r.candidate_id}" for r in undisposed] or ["(none)"]
    out += ["", "## Waivers", ""]
    out += [f"- {r.candidate_id}: {r.waiver_justification}" for r in waived] or ["(none)"]
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# sequence diagrams


def _arg_text(arg) -> str:
    return arg.name if arg.value is None else f"{arg.name}={arg.value}"


def _arrow(interaction: Interaction, ev) -> str:
    arrow = "->" if ev.delivery is Delivery.DELIVERED else "->x"
    if ev.message == EXTRANEOUS:
        return f"{ev.sender} {arrow} {ev.receiver} : <extraneous message>"
    msg = interaction.message(ev.message)
    label = f"{msg.operation}({', '.join(_arg_text(a) for a in ev.arguments)})"
    if msg.response is not None:
        if ev.response_tag is ResponseTag.NOMINAL:
            label += " / (" + ", ".join(p.name for p in msg.response.values) + ")"
        elif ev.response_tag is not ResponseTag.ABSENT:
            label += f" / <{ev.response_tag.value}>"
    tags = []
    if ev.timing_tag is not Timing.ON_TIME:
        tags.append(ev.timing_tag.value)
    if ev.treatment_tag is not Treatment.WITHIN_LIMIT:
        tags.append(f"treatment {ev.treatment_tag.value}")
    if ev.delivery is not Delivery.DELIVERED:
        tags.append(ev.delivery.value)
    if tags:
        label += " [" + ", ".join(tags) + "]"
    return f"{ev.sender} {arrow} {ev.receiver} : {label}"


def emit_sequence_text(interaction: Interaction, trace) -> bytes:
    """PlantUML text for a nominal trace (tuple of events) or a MutantTrace."""
    mutant = trace if isinstance(trace, MutantTrace) else None
    events = mutant.trace if mutant else trace
    lines = ["@startuml", f"title {interaction.name}"]
    lines += [f"participant {p}" for p in interaction.participants]
    arrows = [_arrow(interaction, ev) for ev in events]
    if mutant is not None:
        _, mid, err, _, _ = parse_candidate_id(mutant.candidate_id)
        if mutant.position < len(events) and not (err.name == "E3"):
            ev = events[mutant.position]
            over = (ev.sender, ev.receiver)
            at = mutant.position + 1
        else:
            msg = interaction.message(mid)
            over = (msg.sender, msg.receiver)
            at = mutant.position
        who = over[0] if over[0] == over[1] else f"{over[0]}, {over[1]}"
        arrows.insert(at, f"note over {who} : {err.tag} {mutant.note}")
    lines += arrows
    lines.append("@enduml")
    return ("\n".join(lines) + "\n").encode("utf-8")
