"""
FMECA worksheets: construction from candidates, analyst annotations,
qualitative risk through a severity x probability matrix, residual risk,
completeness checks and ranking.

Severity counts down (1 = catastrophic is worst); probability counts up
(frequent is highest). Risk classes are ordered acceptable < tolerable <
undesirable < intolerable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from enum import IntEnum
from importlib import resources

from . import schemas
from .catalog import ErrorModel, FailureModeCandidate
from .diagnostics import Diagnostic, error, info, warning
from .dsl import serialize
from .model import SystemModel

SCHEMA_VERSION = 1


class Severity(IntEnum):
    CATASTROPHIC = 1
    SEVERE = 2
    MAJOR = 3
    MINOR = 4
    NEGLIGIBLE = 5

    @property
    def label(self) -> str:
        return f"{self.name.lower()} ({self.value})"

    @classmethod
    def parse(cls, token) -> "Severity":
        if isinstance(token, bool):
            raise ValueError(f"malformed severity {token!r}")
        if isinstance(token, int) or (isinstance(token, str) and token.strip().isdigit()):
            return cls(int(token))
        if isinstance(token, str):
            t = token.strip().lower()
            if t == "sever":
                return cls.SEVERE
            if t.upper() in cls.__members__:
                return cls[t.upper()]
        raise ValueError(f"malformed severity {token!r}")


class Probability(IntEnum):
    IMPOSSIBLE = 1
    RARE = 2
    OCCASIONAL = 3
    PROBABLE = 4
    FREQUENT = 5

    @property
    def abbreviation(self) -> str:
        return self.name[0]

    @property
    def label(self) -> str:
        return f"{self.name.lower()} ({self.abbreviation})"

    @classmethod
    def parse(cls, token) -> "Probability":
        if isinstance(token, str):
            t = token.strip().upper()
            if t in cls.__members__:
                return cls[t]
            for p in cls:
                if p.abbreviation == t:
                    return p
        raise ValueError(f"malformed probability {token!r}")


class RiskClass(IntEnum):
    ACCEPTABLE = 1
    TOLERABLE = 2
    UNDESIRABLE = 3
    INTOLERABLE = 4

    def __str__(self) -> str:
        return self.name.lower()


class MatrixError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.text for d in diagnostics))


class WorksheetError(ValueError):
    pass


class AnnotationError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.text for d in diagnostics))


# ---------------------------------------------------------------------------
# risk matrix


@dataclass(frozen=True)
class RiskMatrix:
    """5x5 table; ``cells[severity - 1][5 - probability]`` holds the class."""

    cells: tuple[tuple[RiskClass, ...], ...]
    name: str = "custom"

    def lookup(self, severity: Severity, probability: Probability) -> RiskClass:
        return self.cells[int(severity) - 1][5 - int(probability)]

    def check(self) -> list[Diagnostic]:
        """Monotonicity and impossible-column violations."""
        out = []
        for s in Severity:
            if self.lookup(s, Probability.IMPOSSIBLE) is not RiskClass.ACCEPTABLE:
                out.append(error("matrix-impossible-column", f"matrix/{s.name.lower()}/impossible",
                                 f"({s.label}, impossible) must be acceptable"))
        for s in Severity:
            for p in Probability:
                here = self.lookup(s, p)
                if s < Severity.NEGLIGIBLE and self.lookup(Severity(s + 1), p) > here:
                    out.append(error("matrix-not-monotone", f"matrix/{s.name.lower()}/{p.name.lower()}",
                                     f"risk worsens from {s.label} to {Severity(s + 1).label} at {p.name.lower()}"))
                if p > Probability.IMPOSSIBLE and self.lookup(s, Probability(p - 1)) > here:
                    out.append(error("matrix-not-monotone", f"matrix/{s.name.lower()}/{p.name.lower()}",
                                     f"risk worsens from {p.name.lower()} to {Probability(p - 1).name.lower()} "
                                     f"at {s.label}"))
        return out

    @classmethod
    def from_json(cls, doc) -> "RiskMatrix":
        problems = schemas.errors(doc, "matrix")
        if problems:
            raise MatrixError([error("matrix-schema", "matrix", p) for p in problems])
        col = {name: k for k, name in enumerate(doc["columns"])}
        cells = []
        for s in Severity:
            row = doc["rows"][s.name.lower()]
            cells.append(tuple(RiskClass[row[col[p.name.lower()]].upper()] for p in reversed(Probability)))
        matrix = cls(tuple(cells), doc.get("name", "custom"))
        problems = matrix.check()
        if problems:
            raise MatrixError(problems)
        return matrix

    @classmethod
    def loads(cls, text: str) -> "RiskMatrix":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MatrixError([error("matrix-syntax", "matrix", f"not valid JSON: {exc}")]) from None
        return cls.from_json(doc)

    def to_json(self) -> dict:
        cols = [p.name.lower() for p in reversed(Probability)]
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "risk_matrix",
            "name": self.name,
            "columns": cols,
            "rows": {s.name.lower(): [str(c) for c in self.cells[s - 1]] for s in Severity},
        }


def default_matrix() -> RiskMatrix:
    text = resources.files(__package__).joinpath("data", "default_matrix.json").read_text("utf-8")
    return RiskMatrix.loads(text)


def risk_rank(severity: Severity, probability: Probability, matrix: RiskMatrix) -> RiskClass:
    return matrix.lookup(severity, probability)


# ---------------------------------------------------------------------------
# worksheet


@dataclass(frozen=True)
class WorksheetRow:
    candidate_id: str
    error: ErrorModel
    interaction: str
    message: str | None
    display_name: str
    failure_mode_text: str
    cause: str = ""
    effect_local: str = ""
    effect_upper: str = ""
    effect_system: str = ""
    severity: Severity | None = None
    probability: Probability | None = None
    detection_failure_mode: str = ""
    detection_effects: str = ""
    prevention: str = ""
    protection: str = ""
    other_actions: str = ""
    remarks: str = ""
    waived: bool = False
    waiver_justification: str = ""
    residual_severity: Severity | None = None
    residual_probability: Probability | None = None

    @property
    def rated(self) -> bool:
        return self.severity is not None and self.probability is not None

    @property
    def disposed(self) -> bool:
        return self.rated or (self.waived and bool(self.waiver_justification.strip()))

    def residual_problems(self) -> list[str]:
        out = []
        if self.residual_severity is not None:
            if self.severity is None:
                out.append("residual severity given without a severity")
            elif self.residual_severity < self.severity:
                out.append(f"residual severity {self.residual_severity.label} is worse than {self.severity.label}")
        if self.residual_probability is not None:
            if self.probability is None:
                out.append("residual probability given without a probability")
            elif self.residual_probability > self.probability:
                out.append(f"residual probability {self.residual_probability.name.lower()} "
                           f"exceeds {self.probability.name.lower()}")
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["error"] = self.error.name
        for key in ("severity", "residual_severity"):
            d[key] = int(d[key]) if d[key] is not None else None
        for key in ("probability", "residual_probability"):
            d[key] = d[key].name.lower() if d[key] is not None else None
        return d

    @classmethod
    def from_json(cls, d: dict) -> "WorksheetRow":
        d = dict(d)
        d["error"] = ErrorModel.parse(d["error"])
        for key in ("severity", "residual_severity"):
            d[key] = Severity(d[key]) if d[key] is not None else None
        for key in ("probability", "residual_probability"):
            d[key] = Probability.parse(d[key]) if d[key] is not None else None
        return cls(**d)


ANNOTATABLE = tuple(
    f.name for f in fields(WorksheetRow)
    if f.name not in ("candidate_id", "error", "interaction", "message", "display_name")
)


@dataclass(frozen=True)
class Worksheet:
    model_name: str
    model_digest: str
    rows: tuple[WorksheetRow, ...] = ()
    matrix_ref: str = "default"

    def row(self, candidate_id: str) -> WorksheetRow | None:
        for r in self.rows:
            if r.candidate_id == candidate_id:
                return r
        return None

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "worksheet",
            "model": {"name": self.model_name, "digest": self.model_digest},
            "matrix": self.matrix_ref,
            "rows": [r.to_json() for r in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc) -> "Worksheet":
        problems = schemas.errors(doc, "worksheet")
        if problems:
            raise WorksheetError("worksheet does not match schema: " + "; ".join(problems))
        rows = tuple(WorksheetRow.from_json(r) for r in doc["rows"])
        ids = [r.candidate_id for r in rows]
        if len(set(ids)) != len(ids):
            raise WorksheetError("worksheet rows repeat a candidate id")
        return cls(doc["model"]["name"], doc["model"]["digest"], rows, doc["matrix"])

    @classmethod
    def loads(cls, text: str) -> "Worksheet":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise WorksheetError(f"worksheet is not valid JSON: {exc}") from None
        return cls.from_json(doc)


def model_digest(model: SystemModel) -> str:
    """SHA-256 of the canonical serialization; comments and layout do not count."""
    return hashlib.sha256(serialize(model).encode("utf-8")).hexdigest()


def display_name(model: SystemModel, interaction: str, message: str | None) -> str:
    inter = model.interaction(interaction)
    head = inter.realizes or inter.name
    if message is None:
        return head
    return f"{head}:: {inter.message(message).operation}"


def prefill_text(c: FailureModeCandidate) -> str:
    details = [x for x in (c.element, c.variant) if x]
    if not details:
        return c.error.description
    return f"{c.error.description} [{', '.join(details)}]"


def init_worksheet(model: SystemModel, candidates, matrix_ref: str = "default") -> Worksheet:
    rows = []
    for c in candidates:
        try:
            inter = model.interaction(c.interaction)
            if c.message is not None:
                inter.message(c.message)
        except LookupError as exc:
            raise WorksheetError(f"candidate {c.id} does not belong to model {model.name!r}: {exc}") from None
        rows.append(WorksheetRow(
            candidate_id=c.id,
            error=c.error,
            interaction=c.interaction,
            message=c.message,
            display_name=display_name(model, c.interaction, c.message),
            failure_mode_text=prefill_text(c),
        ))
    ids = [r.candidate_id for r in rows]
    if len(set(ids)) != len(ids):
        raise WorksheetError("candidate ids are not unique")
    return Worksheet(model.name, model_digest(model), tuple(rows), matrix_ref)


def merge_annotations(worksheet: Worksheet, annotations: dict) -> Worksheet:
    """Copy annotated fields onto matching rows. All-or-nothing: any problem
    raises AnnotationError carrying every diagnostic found."""
    problems = schemas.errors(annotations, "annotations")
    if problems:
        raise AnnotationError([error("annotation-schema", "annotations", p) for p in problems])
    diags: list[Diagnostic] = []
    updated = {}
    for cid, fields_ in annotations["rows"].items():
        row = worksheet.row(cid)
        loc = f"annotations/{cid}"
        if row is None:
            diags.append(error("unknown-candidate", loc, f"no worksheet row for candidate {cid!r}"))
            continue
        changes = {}
        for key, value in fields_.items():
            if key in ("severity", "residual_severity"):
                try:
                    value = Severity.parse(value)
                except ValueError as exc:
                    diags.append(error("malformed-severity", loc, str(exc)))
                    continue
            elif key in ("probability", "residual_probability"):
                try:
                    value = Probability.parse(value)
                except ValueError as exc:
                    diags.append(error("malformed-probability", loc, str(exc)))
                    continue
            changes[key] = value
        new = replace(row, **changes)
        if new.waived and not new.waiver_justification.strip():
            diags.append(error("waiver-without-justification", loc, "a waiver needs a justification"))
        for text in new.residual_problems():
            diags.append(error("residual-invariant", loc, text))
        updated[cid] = new
    if any(d.is_error for d in diags):
        raise AnnotationError(diags)
    rows = tuple(updated.get(r.candidate_id, r) for r in worksheet.rows)
    return replace(worksheet, rows=rows)


def residual_risk(row: WorksheetRow, matrix: RiskMatrix) -> tuple[RiskClass, RiskClass]:
    if row.waived or not row.rated:
        raise ValueError(f"row {row.candidate_id} is not rated")
    problems = row.residual_problems()
    if problems:
        raise ValueError("; ".join(problems))
    before = matrix.lookup(row.severity, row.probability)
    after = matrix.lookup(row.residual_severity or row.severity, row.residual_probability or row.probability)
    return before, after


def completeness_check(worksheet: Worksheet, candidates, model_digest: str | None = None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if model_digest is not None and model_digest != worksheet.model_digest:
        out.append(error("worksheet-drift", "worksheet",
                         "model changed since the worksheet was created "
                         f"({worksheet.model_digest[:12]} -> {model_digest[:12]})"))
    live = {c.id for c in candidates}
    have = {r.candidate_id for r in worksheet.rows}
    for c in candidates:
        if c.id not in have:
            out.append(error("missing-row", c.id, f"candidate {c.id} has no worksheet row"))
    for r in worksheet.rows:
        if r.candidate_id not in live:
            out.append(info("stale-row", r.candidate_id, f"row {r.candidate_id} matches no current candidate"))
        elif not r.disposed:
            out.append(warning("undisposed-row", r.candidate_id, f"row {r.candidate_id} has no risk rating or waiver"))
    return out


def rank_key(row: WorksheetRow, matrix: RiskMatrix):
    if row.waived:
        return (2, 0, 0, 0, row.candidate_id)
    if not row.rated:
        return (1, 0, 0, 0, row.candidate_id)
    risk = matrix.lookup(row.severity, row.probability)
    return (0, -int(risk), int(row.severity), -int(row.probability), row.candidate_id)


def rank_rows(worksheet: Worksheet, matrix: RiskMatrix) -> list[WorksheetRow]:
    """Rated rows by risk, then unrated rows, then waived rows (each by id)."""
    return sorted(worksheet.rows, key=lambda r: rank_key(r, matrix))


def row_risk(row: WorksheetRow, matrix: RiskMatrix) -> RiskClass | None:
    if row.waived or not row.rated:
        return None
    return matrix.lookup(row.severity, row.probability)
