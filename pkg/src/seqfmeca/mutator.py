"""
Executable error models: nominal traces and single-fault mutants.

A nominal trace linearizes an interaction's "after" constraints (stable
topological sort, ties broken by declaration order). ``mutate`` turns one
failure-mode candidate into concrete deviating traces; ``classify`` is an
independent diff that maps a mutant back to the error model it realizes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum

from .catalog import ErrorModel, FailureModeCandidate
from .model import Interaction, NumericInterval, linearize

EXTRANEOUS = "<extraneous>"


class Delivery(str, Enum):
    DELIVERED = "delivered"
    RECEIVER_ABSENT = "receiver_absent"
    LINK_DOWN = "link_down"


class Timing(str, Enum):
    ON_TIME = "on_time"
    TOO_SOON = "too_soon"
    TOO_LATE = "too_late"


class Treatment(str, Enum):
    WITHIN_LIMIT = "within_limit"
    OVERRUN = "overrun"


class ResponseTag(str, Enum):
    NOMINAL = "nominal"
    CONSTANT = "constant"
    RANDOM = "random"
    OUT_OF_LIMITS = "out_of_limits"
    ABSENT = "absent"


class MutationError(ValueError):
    pass


@dataclass(frozen=True)
class Sentinel:
    """Tagged non-value standing in for a faulty argument."""

    kind: str  # type_mismatch, below_min, above_max, perturbed, extra
    value: str | None = None

    def __str__(self) -> str:
        return f"<{self.kind}{'=' + self.value if self.value is not None else ''}>"


@dataclass(frozen=True)
class Arg:
    name: str
    value: Sentinel | None = None  # None: nominal value


@dataclass(frozen=True)
class TraceEvent:
    message: str
    sender: str
    receiver: str
    arguments: tuple[Arg, ...] = ()
    delivery: Delivery = Delivery.DELIVERED
    timing_tag: Timing = Timing.ON_TIME
    treatment_tag: Treatment = Treatment.WITHIN_LIMIT
    response_tag: ResponseTag = ResponseTag.ABSENT


Trace = tuple[TraceEvent, ...]


@dataclass(frozen=True)
class MutantTrace:
    candidate_id: str
    error: ErrorModel
    trace: Trace
    note: str
    position: int  # index in ``trace`` where the deviation is shown


def nominal_trace(interaction: Interaction) -> Trace:
    by_id = {m.id: m for m in interaction.messages}
    events = []
    for mid in linearize(interaction):
        m = by_id[mid]
        events.append(TraceEvent(
            message=mid,
            sender=m.sender,
            receiver=m.receiver,
            arguments=tuple(Arg(p.name) for p in m.parameters),
            response_tag=ResponseTag.NOMINAL if m.response is not None else ResponseTag.ABSENT,
        ))
    return tuple(events)


def _set(trace: Trace, k: int, **changes) -> Trace:
    return trace[:k] + (replace(trace[k], **changes),) + trace[k + 1:]


def _locate(trace: Trace, message_id: str) -> int:
    for k, ev in enumerate(trace):
        if ev.message == message_id:
            return k
    raise MutationError(f"message {message_id!r} is not in the trace")


def _ancestors(interaction: Interaction, message_id: str) -> set[str]:
    preds = {m.id: m.predecessors for m in interaction.messages}
    seen: set[str] = set()
    stack = list(preds[message_id])
    while stack:
        q = stack.pop()
        if q not in seen:
            seen.add(q)
            stack.extend(preds[q])
    return seen


def _boundary_sentinel(domain: NumericInterval, variant: str) -> Sentinel:
    step = domain.granularity
    value = domain.lower - step if variant == "below_min" else domain.upper + step
    text = format(value, "f")
    if domain.unit:
        text += f" {domain.unit}"
    return Sentinel(variant, text)


def mutate(interaction: Interaction, candidate: FailureModeCandidate, seed: int = 0) -> list[MutantTrace]:
    if candidate.interaction != interaction.name:
        raise MutationError(f"candidate {candidate.id} does not belong to interaction {interaction.name!r}")
    nominal = nominal_trace(interaction)
    cid, err = candidate.id, candidate.error

    def mutant(trace, note, position):
        return MutantTrace(cid, err, trace, note, position)

    if err is ErrorModel.E1:
        sender = candidate.element
        receivers = [m.receiver for m in interaction.messages if m.sender == sender]
        if not receivers:
            raise MutationError(f"{sender!r} sends nothing in {interaction.name!r}")
        extra = TraceEvent(EXTRANEOUS, sender, receivers[0])
        return [
            mutant(nominal[:k] + (extra,) + nominal[k:], f"{cid}: extraneous message from {sender} at position {k}", k)
            for k in range(len(nominal) + 1)
        ]

    if err is ErrorModel.E11:
        pair = candidate.element
        hit = [k for k, ev in enumerate(nominal) if f"{ev.sender}->{ev.receiver}" == pair]
        if not hit:
            raise MutationError(f"no message travels on {pair!r}")
        trace = nominal
        for k in hit:
            trace = _set(trace, k, delivery=Delivery.LINK_DOWN, response_tag=ResponseTag.ABSENT)
        return [mutant(trace, f"{cid}: no link {pair}; {len(hit)} message(s) lost", hit[0])]

    try:
        msg = interaction.message(candidate.message)
    except LookupError as exc:
        raise MutationError(str(exc)) from None
    k = _locate(nominal, msg.id)
    ev = nominal[k]

    if err is ErrorModel.E2:
        p = _locate(nominal, candidate.element)
        # m's own ancestors sitting between p and m travel with it, so the
        # only broken constraint is the targeted one (unless p reaches m
        # through another path, which makes that impossible)
        anc = _ancestors(interaction, msg.id)
        block = [j for j in range(p + 1, k) if nominal[j].message in anc] + [k]
        moved = tuple(nominal[j] for j in block)
        rest = tuple(e for j, e in enumerate(nominal) if j not in block)
        trace = rest[:p] + moved + rest[p:]
        return [mutant(trace, f"{cid}: {msg.id} sent before {candidate.element}", p + len(moved) - 1)]
    if err is ErrorModel.E3:
        return [mutant(nominal[:k] + nominal[k + 1:], f"{cid}: {msg.id} omitted", k)]
    if err is ErrorModel.E4:
        trace = _set(nominal, k, delivery=Delivery.RECEIVER_ABSENT, response_tag=ResponseTag.ABSENT)
        return [mutant(trace, f"{cid}: receiver {msg.receiver} absent", k)]
    if err is ErrorModel.E5:
        tag = Timing(candidate.variant)
        return [mutant(_set(nominal, k, timing_tag=tag), f"{cid}: {candidate.element} {tag.value}", k)]
    if err is ErrorModel.E6:
        out = []
        for j, p in enumerate(msg.parameters):
            args = list(ev.arguments)
            args[j] = Arg(p.name, Sentinel("type_mismatch", f"not {p.type_tag.value}"))
            out.append(mutant(_set(nominal, k, arguments=tuple(args)), f"{cid}: {p.name} has the wrong type", k))
        return out
    if err is ErrorModel.E7:
        if candidate.variant == "too_few":
            args = ev.arguments[:-1]
            note = f"{cid}: argument {ev.arguments[-1].name} dropped"
        else:
            args = ev.arguments + (Arg("extra", Sentinel("extra")),)
            note = f"{cid}: unexpected extra argument"
        return [mutant(_set(nominal, k, arguments=args), note, k)]
    if err is ErrorModel.E8:
        j = next((i for i, p in enumerate(msg.parameters) if p.name == candidate.element), None)
        if j is None:
            raise MutationError(f"no parameter {candidate.element!r} on {msg.id}")
        p = msg.parameters[j]
        if candidate.variant in ("below_min", "above_max"):
            if not isinstance(p.domain, NumericInterval):
                raise MutationError(f"{p.name} has no interval domain")
            sentinel = _boundary_sentinel(p.domain, candidate.variant)
        else:
            sentinel = Sentinel("perturbed")
        args = list(ev.arguments)
        args[j] = Arg(p.name, sentinel)
        return [mutant(_set(nominal, k, arguments=tuple(args)), f"{cid}: {p.name} = {sentinel}", k)]
    if err is ErrorModel.E9:
        rng = random.Random(seed)
        out = []
        for tag in (ResponseTag.CONSTANT, ResponseTag.RANDOM, ResponseTag.OUT_OF_LIMITS):
            note = f"{cid}: response {tag.value}"
            if tag is ResponseTag.RANDOM:
                note += f" (seed={seed}, draw={rng.random():.6f})"
            out.append(mutant(_set(nominal, k, response_tag=tag), note, k))
        return out
    if err is ErrorModel.E10:
        return [mutant(_set(nominal, k, treatment_tag=Treatment.OVERRUN), f"{cid}: treatment overrun", k)]
    raise MutationError(f"unsupported error model {err}")


def mutants_per_candidate(interaction: Interaction, candidate: FailureModeCandidate) -> int:
    """Closed-form mutant count for one candidate."""
    e = candidate.error
    if e is ErrorModel.E1:
        return len(interaction.messages) + 1
    if e is ErrorModel.E6:
        return len(interaction.message(candidate.message).parameters)
    if e is ErrorModel.E9:
        return 3
    return 1


def mutant_counts(interaction: Interaction, candidates) -> dict[ErrorModel, int]:
    counts = {e: 0 for e in ErrorModel}
    for c in candidates:
        if c.interaction == interaction.name:
            counts[c.error] += mutants_per_candidate(interaction, c)
    return counts


# ---------------------------------------------------------------------------
# classification


_FIELDS = ("message", "sender", "receiver", "arguments", "delivery", "timing_tag", "treatment_tag", "response_tag")


def _changed(a: TraceEvent, b: TraceEvent) -> set[str]:
    return {f for f in _FIELDS if getattr(a, f) != getattr(b, f)}


def classify(nominal: Trace, mutant: Trace) -> ErrorModel | None:
    """Name the single error model that turns ``nominal`` into ``mutant``.

    Returns None when the two traces differ in no respect or in more than one.
    """
    n, m = len(nominal), len(mutant)
    if m == n + 1:
        extra = [k for k, ev in enumerate(mutant) if ev.message == EXTRANEOUS]
        if len(extra) == 1 and mutant[:extra[0]] + mutant[extra[0] + 1:] == nominal:
            return ErrorModel.E1
        return None
    if m == n - 1:
        if any(nominal[:k] + nominal[k + 1:] == mutant for k in range(n)):
            return ErrorModel.E3
        return None
    if m != n:
        return None
    if [e.message for e in nominal] != [e.message for e in mutant]:
        if sorted(nominal, key=repr) == sorted(mutant, key=repr):
            return ErrorModel.E2
        return None

    diffs = [k for k in range(n) if nominal[k] != mutant[k]]
    if not diffs:
        return None
    changes = [_changed(nominal[k], mutant[k]) for k in diffs]

    link_down = all(mutant[k].delivery is Delivery.LINK_DOWN for k in diffs)
    if link_down and all(c <= {"delivery", "response_tag"} for c in changes):
        pairs = {(mutant[k].sender, mutant[k].receiver) for k in diffs}
        if len(pairs) == 1:
            (s, r), = pairs
            on_pair = [k for k in range(n) if (nominal[k].sender, nominal[k].receiver) == (s, r)]
            if on_pair == diffs:
                return ErrorModel.E11
        return None
    if len(diffs) != 1:
        return None
    a, b = nominal[diffs[0]], mutant[diffs[0]]
    changed = changes[0]
    if b.delivery is Delivery.RECEIVER_ABSENT and changed <= {"delivery", "response_tag"} and "delivery" in changed:
        return ErrorModel.E4
    if changed == {"timing_tag"}:
        return ErrorModel.E5
    if changed == {"treatment_tag"}:
        return ErrorModel.E10
    if changed == {"response_tag"} and b.response_tag in (
        ResponseTag.CONSTANT, ResponseTag.RANDOM, ResponseTag.OUT_OF_LIMITS
    ):
        return ErrorModel.E9
    if changed == {"arguments"}:
        if abs(len(a.arguments) - len(b.arguments)) == 1:
            return ErrorModel.E7
        if len(a.arguments) != len(b.arguments):
            return None
        bad = [(x, y) for x, y in zip(a.arguments, b.arguments) if x != y]
        if len(bad) != 1 or bad[0][1].value is None or bad[0][0].name != bad[0][1].name:
            return None
        kind = bad[0][1].value.kind
        if kind == "type_mismatch":
            return ErrorModel.E6
        if kind in ("below_min", "above_max", "perturbed"):
            return ErrorModel.E8
    return None
