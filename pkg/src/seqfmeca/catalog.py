"""
Message error models E1..E11, actor profiles and failure-mode enumeration.

Enumeration granularity (one candidate per analyzable decision):

    E1   one per (interaction, sending participant)
    E2   one per (message, direct predecessor)
    E3   one per message
    E4   one per message
    E5   one per declared send/receive deadline and variant (too_soon, too_late)
    E6   one per message with parameters
    E7   two per message with parameters (too_few, too_many)
    E8   per parameter: below_min and above_max when interval-bounded, else perturbed
    E9   one per declared response, unless the responder's profile suppresses it
    E10  one per treatment deadline
    E11  one per distinct (sender, receiver) pair of an interaction

Profile rules are looked up for the participant committing the error: the
sender for every model except E9, where the receiver produces the response.
Internal objects use the external-system table.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

from .diagnostics import Diagnostic
from .dsl import Parser, _Bail, tokenize
from .model import ActorKind, Interaction, MessageElements, SystemModel, message_elements


class ErrorModel(IntEnum):
    E1 = 1
    E2 = 2
    E3 = 3
    E4 = 4
    E5 = 5
    E6 = 6
    E7 = 7
    E8 = 8
    E9 = 9
    E10 = 10
    E11 = 11

    @property
    def description(self) -> str:
        return DESCRIPTIONS[self]

    @property
    def tag(self) -> str:
        """Dotted form used in worksheets, e.g. ``E.3``."""
        return f"E.{self.value}"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, token: str) -> "ErrorModel":
        t = token.strip().upper().replace(".", "")
        if t.startswith("E") and t[1:].isdigit() and t in cls.__members__:
            return cls[t]
        raise ValueError(f"unknown error model {token!r} (expected E.1 .. E.11)")


DESCRIPTIONS = {
    ErrorModel.E1: "Sending of a message not belonging to the planned interaction.",
    ErrorModel.E2: "Execution of one or several messages in a wrong order.",
    ErrorModel.E3: "Omission of a message among an interaction.",
    ErrorModel.E4: "Lack of an instance to receive the message.",
    ErrorModel.E5: "Sending or receiving of a message outside its specified time limits (too soon or too late).",
    ErrorModel.E6: "The arguments type is different from the type of parameters expected by the receiver.",
    ErrorModel.E7: "The number of message arguments is different from the number of parameters expected by the receiver.",
    ErrorModel.E8: "The value of message arguments is different from the value of parameters expected by the receiver.",
    ErrorModel.E9: "The values returned by a response to a message do not fit with the expected values "
                   "(for example: constant, random, out of limits, etc.).",
    ErrorModel.E10: "Treatment of a message out of the specified time limits.",
    ErrorModel.E11: "Lack of link between sender and receiver objects.",
}

class Applicability(str, Enum):
    APPLIES = "applies"
    RARE = "rare"
    SUPPRESSED = "suppressed"


@dataclass(frozen=True)
class Rule:
    applicability: Applicability = Applicability.APPLIES
    note: str = ""


@dataclass(frozen=True)
class ActorProfile:
    """Per actor kind, the applicability of every error model."""

    tables: tuple[tuple[ActorKind, tuple[tuple[ErrorModel, Rule], ...]], ...]

    def rule(self, kind: ActorKind | None, err: ErrorModel) -> Rule:
        kind = kind or ActorKind.EXTERNAL_SYSTEM
        for k, table in self.tables:
            if k is kind:
                for e, r in table:
                    if e is err:
                        return r
        return Rule()

    def with_rule(self, kind: ActorKind, err: ErrorModel, rule: Rule) -> "ActorProfile":
        tables = []
        for k in ActorKind:
            rows = {e: self.rule(k, e) for e in ErrorModel}
            if k is kind:
                rows[err] = rule
            tables.append((k, tuple(rows.items())))
        return ActorProfile(tuple(tables))


def _table(overrides: dict[ErrorModel, Rule]) -> tuple[tuple[ErrorModel, Rule], ...]:
    return tuple((e, overrides.get(e, Rule())) for e in ErrorModel)


HUMAN_TABLE = _table({
    ErrorModel.E4: Rule(Applicability.RARE, "requires the interface object to be absent"),
    ErrorModel.E5: Rule(Applicability.APPLIES, "only given timing constraints"),
    ErrorModel.E10: Rule(Applicability.APPLIES, "only given timing constraints"),
    ErrorModel.E9: Rule(Applicability.SUPPRESSED, "use E6-E8 on the response"),
})

DEFAULT_PROFILE = ActorProfile((
    (ActorKind.HUMAN, HUMAN_TABLE),
    (ActorKind.EXTERNAL_SYSTEM, _table({})),
))

ALL_APPLIES = ActorProfile(((ActorKind.HUMAN, _table({})), (ActorKind.EXTERNAL_SYSTEM, _table({}))))


def _committer_kind(err: ErrorModel, elements: MessageElements) -> ActorKind | None:
    return elements.receiver_kind if err is ErrorModel.E9 else elements.sender_kind


def structurally_applicable(elements: MessageElements) -> set[ErrorModel]:
    found = {ErrorModel.E1, ErrorModel.E3, ErrorModel.E4, ErrorModel.E11}
    if elements.predecessors:
        found.add(ErrorModel.E2)
    if elements.send_deadline is not None or (
        elements.response is not None and elements.response.receive_deadline is not None
    ):
        found.add(ErrorModel.E5)
    if elements.parameters:
        found |= {ErrorModel.E6, ErrorModel.E7, ErrorModel.E8}
    if elements.response is not None:
        found.add(ErrorModel.E9)
    if elements.treatment_period is not None:
        found.add(ErrorModel.E10)
    return found


def applicable_errors(elements: MessageElements, profile: ActorProfile = DEFAULT_PROFILE) -> set[ErrorModel]:
    return {
        e for e in structurally_applicable(elements)
        if profile.rule(_committer_kind(e, elements), e).applicability is not Applicability.SUPPRESSED
    }


@dataclass(frozen=True)
class FailureModeCandidate:
    interaction: str
    message: str | None
    error: ErrorModel
    element: str | None = None
    variant: str | None = None
    likelihood_hint: str = "normal"

    @property
    def id(self) -> str:
        return candidate_id(self.interaction, self.message, self.error, self.element, self.variant)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "interaction": self.interaction,
            "message": self.message,
            "error": self.error.name,
            "element": self.element,
            "variant": self.variant,
            "likelihood_hint": self.likelihood_hint,
        }


def candidate_id(interaction: str, message: str | None, err: ErrorModel,
                 element: str | None = None, variant: str | None = None) -> str:
    return f"{interaction}/{message or '*'}/{err.name}/{element or '-'}/{variant or '-'}"


def parse_candidate_id(text: str) -> tuple[str, str | None, ErrorModel, str | None, str | None]:
    parts = text.split("/")
    if len(parts) != 5:
        raise ValueError(f"malformed candidate id {text!r}")
    inter, msg, err, element, variant = parts
    return (
        inter,
        None if msg == "*" else msg,
        ErrorModel.parse(err),
        None if element == "-" else element,
        None if variant == "-" else variant,
    )


def _hint(rule: Rule) -> str:
    return "rare" if rule.applicability is Applicability.RARE else "normal"


def enumerate_interaction(model: SystemModel, interaction: Interaction,
                          profile: ActorProfile = DEFAULT_PROFILE) -> list[FailureModeCandidate]:
    out: list[FailureModeCandidate] = []
    name = interaction.name

    senders = list(dict.fromkeys(m.sender for m in interaction.messages))
    for s in senders:
        rule = profile.rule(model.kind_of(s), ErrorModel.E1)
        if rule.applicability is not Applicability.SUPPRESSED:
            out.append(FailureModeCandidate(name, None, ErrorModel.E1, s, None, _hint(rule)))
    pairs = list(dict.fromkeys((m.sender, m.receiver) for m in interaction.messages))
    for s, r in pairs:
        rule = profile.rule(model.kind_of(s), ErrorModel.E11)
        if rule.applicability is not Applicability.SUPPRESSED:
            out.append(FailureModeCandidate(name, None, ErrorModel.E11, f"{s}->{r}", None, _hint(rule)))

    for msg in interaction.messages:
        el = message_elements(interaction, msg.id, model)
        errors = applicable_errors(el, profile) - {ErrorModel.E1, ErrorModel.E11}
        for err in sorted(errors):
            hint = _hint(profile.rule(_committer_kind(err, el), err))

            def add(element=None, variant=None):
                out.append(FailureModeCandidate(name, msg.id, err, element, variant, hint))

            if err is ErrorModel.E2:
                for p in dict.fromkeys(msg.predecessors):
                    add(p)
            elif err is ErrorModel.E5:
                if msg.send_deadline is not None:
                    add("send", "too_soon")
                    add("send", "too_late")
                if msg.response is not None and msg.response.receive_deadline is not None:
                    add("receive", "too_soon")
                    add("receive", "too_late")
            elif err is ErrorModel.E7:
                add(None, "too_few")
                add(None, "too_many")
            elif err is ErrorModel.E8:
                for p in msg.parameters:
                    if p.interval_bounded:
                        add(p.name, "below_min")
                        add(p.name, "above_max")
                    else:
                        add(p.name, "perturbed")
            elif err is ErrorModel.E9:
                add("response")
            elif err is ErrorModel.E10:
                add("treatment")
            else:
                add()
    return out


def enumerate_candidates(model: SystemModel, profile: ActorProfile = DEFAULT_PROFILE) -> list[FailureModeCandidate]:
    """All failure-mode candidates of a well-formed model, in a fixed order."""
    out: list[FailureModeCandidate] = []
    for inter in model.interactions:
        out.extend(enumerate_interaction(model, inter, profile))
    return out


# ---------------------------------------------------------------------------
# profile override files
#
#   profile human {
#     E4 rare;
#     E9 suppressed "use E6-E8 on the response";
#   }

_PROFILE_KINDS = {"human": ActorKind.HUMAN, "external": ActorKind.EXTERNAL_SYSTEM}
_APPLICABILITY = {a.value: a for a in Applicability}


def parse_profile(text: str, file: str = "<profile>",
                  base: ActorProfile = DEFAULT_PROFILE) -> tuple[ActorProfile | None, list[Diagnostic]]:
    """Apply a profile override file on top of ``base``."""
    tokens, diags = tokenize(text, file)
    p = Parser(tokens, file)
    profile = base
    while not p.at("eof"):
        try:
            p.expect("ident", "profile", what="'profile'")
            kind = p.keyword(_PROFILE_KINDS, "'human' or 'external'")

            def item(kind=kind):
                nonlocal profile
                tok = p.ident("error model such as E4")
                try:
                    err = ErrorModel.parse(tok.value)
                except ValueError as exc:
                    p.semantic("unknown-error-model", str(exc), tok.span)
                    raise _Bail()
                appl = p.keyword(_APPLICABILITY, "'applies', 'rare' or 'suppressed'")
                note = ""
                if p.at("string"):
                    note = p.advance().value
                p.expect("punct", ";")
                profile = profile.with_rule(kind, err, Rule(appl, note))

            p.block(item, ())
        except _Bail:
            p.advance()
            while not p.at("eof") and not p.at_kw("profile"):
                p.advance()
    diags = diags + p.diagnostics
    if any(d.is_error for d in diags):
        return None, diags
    return profile, diags


def structural_precondition_holds(model: SystemModel, c: FailureModeCandidate) -> bool:
    """Re-derive from the model that the candidate's targeted element exists."""
    inter = model.interaction(c.interaction)
    if c.message is None:
        if c.error is ErrorModel.E1:
            return any(m.sender == c.element for m in inter.messages)
        if c.error is ErrorModel.E11:
            return any(f"{m.sender}->{m.receiver}" == c.element for m in inter.messages)
        return False
    m = inter.message(c.message)
    e = c.error
    if e is ErrorModel.E2:
        return c.element in m.predecessors
    if e is ErrorModel.E5:
        if c.element == "send":
            return m.send_deadline is not None
        return m.response is not None and m.response.receive_deadline is not None
    if e in (ErrorModel.E6, ErrorModel.E7):
        return bool(m.parameters)
    if e is ErrorModel.E8:
        return any(p.name == c.element for p in m.parameters)
    if e is ErrorModel.E9:
        return m.response is not None
    if e is ErrorModel.E10:
        return m.treatment_deadline is not None
    return e in (ErrorModel.E3, ErrorModel.E4)
