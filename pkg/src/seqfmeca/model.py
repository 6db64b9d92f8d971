"""
Domain model: actors, use cases, boundary allocation and message interactions.

All types are frozen dataclasses holding tuples, so models are hashable,
compare structurally and can be shared between analysis passes. Source spans
ride along for diagnostics but never take part in equality.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Iterator

from .diagnostics import Diagnostic, SourceSpan, error, warning


class ActorKind(str, Enum):
    HUMAN = "human"
    EXTERNAL_SYSTEM = "external_system"


class Allocation(str, Enum):
    INSIDE_SYSTEM = "inside_system"
    OPERATIONAL_PROCESS = "operational_process"
    EXCLUDED = "excluded"


class TypeTag(str, Enum):
    NUMBER = "number"
    TEXT = "text"
    BOOLEAN = "boolean"
    ENUM = "enum"


DURATION_UNITS = {"ms": 1, "s": 1000, "min": 60_000}


class UnknownMessageError(LookupError):
    pass


class CycleError(ValueError):
    def __init__(self, members):
        self.members = tuple(members)
        super().__init__("precedence cycle among " + ", ".join(self.members))


@dataclass(frozen=True)
class Duration:
    amount: int
    unit: str = "ms"

    @property
    def millis(self) -> int:
        return self.amount * DURATION_UNITS[self.unit]

    def __str__(self) -> str:
        return f"{self.amount}{self.unit}"


@dataclass(frozen=True)
class DurationBound:
    lower: Duration
    upper: Duration

    def __str__(self) -> str:
        return f"{self.lower}..{self.upper}"


@dataclass(frozen=True)
class NumericInterval:
    lower: Decimal
    upper: Decimal
    unit: str | None = None

    @property
    def granularity(self) -> Decimal:
        """Smallest step expressible with the bounds' written precision."""
        exp = min(self.lower.as_tuple().exponent, self.upper.as_tuple().exponent, 0)
        return Decimal(1).scaleb(exp)


@dataclass(frozen=True)
class EnumDomain:
    values: tuple[str, ...]


Domain = NumericInterval | EnumDomain


@dataclass(frozen=True)
class Parameter:
    name: str
    type_tag: TypeTag
    domain: Domain | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def interval_bounded(self) -> bool:
        return isinstance(self.domain, NumericInterval)


@dataclass(frozen=True)
class Response:
    values: tuple[Parameter, ...] = ()
    receive_deadline: DurationBound | None = None


@dataclass(frozen=True)
class Message:
    id: str
    sender: str
    receiver: str
    operation: str
    parameters: tuple[Parameter, ...] = ()
    predecessors: tuple[str, ...] = ()
    send_deadline: DurationBound | None = None
    treatment_deadline: DurationBound | None = None
    response: Response | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Interaction:
    name: str
    realizes: str | None = None
    messages: tuple[Message, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def participants(self) -> tuple[str, ...]:
        """Senders and receivers in order of first appearance."""
        seen: dict[str, None] = {}
        for m in self.messages:
            seen.setdefault(m.sender)
            seen.setdefault(m.receiver)
        return tuple(seen)

    def message(self, message_id: str) -> Message:
        for m in self.messages:
            if m.id == message_id:
                return m
        raise UnknownMessageError(f"no message {message_id!r} in interaction {self.name!r}")

    def index(self, message_id: str) -> int:
        for i, m in enumerate(self.messages):
            if m.id == message_id:
                return i
        raise UnknownMessageError(f"no message {message_id!r} in interaction {self.name!r}")


@dataclass(frozen=True)
class Actor:
    name: str
    kind: ActorKind
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UseCase:
    name: str
    linked_actors: tuple[str, ...] = ()
    description: str = ""
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoundaryAllocation:
    entries: tuple[tuple[str, Allocation], ...] = ()

    def __post_init__(self):
        # a mapping: canonical order makes equality independent of insertion order
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e[0])))

    def get(self, use_case: str) -> Allocation | None:
        for name, alloc in self.entries:
            if name == use_case:
                return alloc
        return None

    def __iter__(self) -> Iterator[tuple[str, Allocation]]:
        return iter(self.entries)


@dataclass(frozen=True)
class SystemModel:
    name: str
    actors: tuple[Actor, ...] = ()
    objects: tuple[str, ...] = ()
    use_cases: tuple[UseCase, ...] = ()
    interactions: tuple[Interaction, ...] = ()
    boundary: BoundaryAllocation = BoundaryAllocation()

    def kind_of(self, participant: str) -> ActorKind | None:
        """Actor kind, or None for internal objects and unknown names."""
        for a in self.actors:
            if a.name == participant:
                return a.kind
        return None

    def interaction(self, name: str) -> Interaction:
        for i in self.interactions:
            if i.name == name:
                return i
        raise LookupError(f"no interaction {name!r}")

    def use_case(self, name: str) -> UseCase | None:
        for u in self.use_cases:
            if u.name == name:
                return u
        return None


@dataclass(frozen=True)
class MessageElements:
    """Element roles of one message, derived from its interaction."""

    interaction: str
    message: str
    previous: str | None
    next: str | None
    sender: str
    receiver: str
    sender_kind: ActorKind | None
    receiver_kind: ActorKind | None
    sending_event: str
    receiving_event: str
    parameters: tuple[Parameter, ...]
    predecessors: tuple[str, ...]
    send_deadline: DurationBound | None
    response: Response | None
    treatment_period: DurationBound | None


# ---------------------------------------------------------------------------
# ordering


def linearize(interaction: Interaction) -> list[str]:
    """Stable topological order of message ids; ties go to declaration order.

    Unknown predecessor ids are ignored. Raises CycleError on cyclic constraints.
    """
    index = {m.id: i for i, m in enumerate(interaction.messages)}
    succs: dict[str, list[str]] = {m.id: [] for m in interaction.messages}
    indeg = {m.id: 0 for m in interaction.messages}
    for m in interaction.messages:
        for p in dict.fromkeys(m.predecessors):
            if p in index:
                succs[p].append(m.id)
                indeg[m.id] += 1
    heap = [index[mid] for mid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        mid = interaction.messages[heapq.heappop(heap)].id
        order.append(mid)
        for s in succs[mid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, index[s])
    if len(order) != len(interaction.messages):
        raise CycleError(mid for mid, d in indeg.items() if d > 0)
    return order


def predecessors(interaction: Interaction, message_id: str) -> list[str]:
    """Direct "after" constraints of a message, in declaration order."""
    return list(interaction.message(message_id).predecessors)


def message_elements(
    interaction: Interaction, message_id: str, model: SystemModel | None = None
) -> MessageElements:
    msg = interaction.message(message_id)
    order = linearize(interaction)
    k = order.index(message_id)
    kind = model.kind_of if model is not None else (lambda _name: None)
    return MessageElements(
        interaction=interaction.name,
        message=msg.id,
        previous=order[k - 1] if k > 0 else None,
        next=order[k + 1] if k + 1 < len(order) else None,
        sender=msg.sender,
        receiver=msg.receiver,
        sender_kind=kind(msg.sender),
        receiver_kind=kind(msg.receiver),
        sending_event=f"{msg.id}.send",
        receiving_event=f"{msg.id}.receive",
        parameters=msg.parameters,
        predecessors=msg.predecessors,
        send_deadline=msg.send_deadline,
        response=msg.response,
        treatment_period=msg.treatment_deadline,
    )


# ---------------------------------------------------------------------------
# validation


def _duplicates(names):
    seen, dups = set(), []
    for n in names:
        if n in seen and n not in dups:
            dups.append(n)
        seen.add(n)
    return dups


def _check_bound(bound, path, label, out):
    if bound is None:
        return
    if bound.lower.amount < 0 or bound.upper.amount < 0:
        out.append(error("invalid-duration-bound", path, f"{label} deadline has a negative duration"))
    elif bound.lower.unit not in DURATION_UNITS or bound.upper.unit not in DURATION_UNITS:
        out.append(error("invalid-duration-bound", path, f"{label} deadline uses an unknown unit"))
    elif bound.lower.millis > bound.upper.millis:
        out.append(error("invalid-duration-bound", path, f"{label} deadline {bound} has min > max"))


def _check_params(params, path, out):
    for name in _duplicates(p.name for p in params):
        out.append(error("duplicate-name", path, f"parameter {name!r} declared more than once"))
    for p in params:
        ppath = f"{path}/parameter/{p.name}"
        d = p.domain
        if d is None:
            continue
        if isinstance(d, NumericInterval):
            if p.type_tag is not TypeTag.NUMBER:
                out.append(error("domain-type-mismatch", ppath, f"numeric interval on {p.type_tag.value} parameter"))
            elif d.lower > d.upper:
                out.append(error("invalid-domain", ppath, f"interval lower bound {d.lower} exceeds upper {d.upper}"))
        elif isinstance(d, EnumDomain):
            if p.type_tag is not TypeTag.ENUM:
                out.append(error("domain-type-mismatch", ppath, f"enumerated set on {p.type_tag.value} parameter"))
            elif not d.values:
                out.append(error("invalid-domain", ppath, "enumerated domain is empty"))


def _cycles(interaction):
    """Groups of mutually reachable messages (including self-loops)."""
    ids = [m.id for m in interaction.messages]
    known = set(ids)
    adj = {m.id: [p for p in m.predecessors if p in known] for m in interaction.messages}

    def reach(start):
        seen, stack = set(), list(adj[start])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(adj[n])
        return seen

    closure = {i: reach(i) for i in ids}
    groups, done = [], set()
    for i in ids:
        if i in done or i not in closure[i]:
            continue
        group = [j for j in ids if j in closure[i] and i in closure[j]]
        done.update(group)
        groups.append(group)
    return groups


def validate_model(model: SystemModel) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    participants = [a.name for a in model.actors] + list(model.objects)
    for name in _duplicates(participants):
        out.append(error("duplicate-name", f"participant/{name}", f"participant {name!r} declared more than once"))
    for name in _duplicates(u.name for u in model.use_cases):
        out.append(error("duplicate-name", f"usecase/{name}", f"use case {name!r} declared more than once"))
    for name in _duplicates(i.name for i in model.interactions):
        out.append(error("duplicate-name", f"interaction/{name}", f"interaction {name!r} declared more than once"))

    actor_names = {a.name for a in model.actors}
    known = set(participants)
    use_cases = {u.name for u in model.use_cases}

    for a in model.actors:
        if not isinstance(a.kind, ActorKind):
            out.append(error("invalid-actor-kind", f"actor/{a.name}", f"actor kind {a.kind!r} is not human or external"))
    for u in model.use_cases:
        for name in u.linked_actors:
            if name not in actor_names:
                out.append(error("unresolved-actor", f"usecase/{u.name}", f"use case links undeclared actor {name!r}"))
    for name in _duplicates(n for n, _ in model.boundary):
        out.append(error("duplicate-allocation", f"boundary/{name}", f"use case {name!r} allocated more than once"))
    for name, _ in model.boundary:
        if name not in use_cases:
            out.append(error("unresolved-use-case", f"boundary/{name}", f"allocation for undeclared use case {name!r}"))

    for inter in model.interactions:
        ipath = f"interaction/{inter.name}"
        if inter.realizes is not None and inter.realizes not in use_cases:
            out.append(error("unresolved-use-case", ipath, f"realizes undeclared use case {inter.realizes!r}", inter.span))
        for mid in _duplicates(m.id for m in inter.messages):
            out.append(error("duplicate-name", ipath, f"message id {mid!r} declared more than once"))
        ids = {m.id for m in inter.messages}
        for m in inter.messages:
            mpath = f"{ipath}/message/{m.id}"
            local: list[Diagnostic] = []
            for role, who in (("sender", m.sender), ("receiver", m.receiver)):
                if who not in known:
                    local.append(error("unresolved-participant", mpath, f"{role} {who!r} is not a declared actor or object"))
            for p in m.predecessors:
                if p not in ids:
                    local.append(error("unresolved-predecessor", mpath, f"'after {p}' names no message of {inter.name!r}"))
            for p in _duplicates(m.predecessors):
                local.append(error("duplicate-predecessor", mpath, f"'after {p}' listed more than once"))
            _check_params(m.parameters, mpath, local)
            _check_bound(m.send_deadline, mpath, "send", local)
            _check_bound(m.treatment_deadline, mpath, "treatment", local)
            if m.response is not None:
                _check_params(m.response.values, f"{mpath}/response", local)
                _check_bound(m.response.receive_deadline, mpath, "response", local)
            out.extend(replace(d, span=m.span) for d in local)
        for group in _cycles(inter):
            out.append(error("precedence-cycle", ipath, "precedence cycle among " + ", ".join(group), inter.span))

    out.sort(key=lambda d: (d.location, d.code))
    return out


def allocation_lints(model: SystemModel, load_threshold: int = 3) -> list[Diagnostic]:
    """Task-allocation warnings: unallocated/orphan use cases, overloaded humans,
    interactions realizing excluded use cases."""
    out: list[Diagnostic] = []
    for u in model.use_cases:
        path = f"usecase/{u.name}"
        if model.boundary.get(u.name) is None:
            out.append(warning("unallocated-use-case", path, f"use case {u.name!r} has no boundary allocation", u.span))
        if not u.linked_actors:
            out.append(warning("orphan-use-case", path, f"use case {u.name!r} is linked to no actor", u.span))
    for a in model.actors:
        if a.kind is not ActorKind.HUMAN:
            continue
        linked = [u.name for u in model.use_cases if a.name in u.linked_actors]
        if len(linked) >= load_threshold:
            out.append(warning(
                "concurrent-load", f"actor/{a.name}",
                f"human actor {a.name!r} takes part in {len(linked)} use cases "
                f"({', '.join(linked)}); check tasks that may run simultaneously",
                a.span,
            ))
    for inter in model.interactions:
        if inter.realizes is not None and model.boundary.get(inter.realizes) is Allocation.EXCLUDED:
            out.append(warning(
                "excluded-realization", f"interaction/{inter.name}",
                f"interaction realizes {inter.realizes!r}, which is allocated outside the system",
                inter.span,
            ))
    out.sort(key=lambda d: (d.location, d.code))
    return out
