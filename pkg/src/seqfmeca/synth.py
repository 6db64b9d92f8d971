"""Seeded generator of random well-formed models, for property tests and sweeps."""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import Decimal

from .model import (
    DURATION_UNITS,
    Actor,
    ActorKind,
    Allocation,
    BoundaryAllocation,
    Duration,
    DurationBound,
    EnumDomain,
    Interaction,
    Message,
    NumericInterval,
    Parameter,
    Response,
    SystemModel,
    TypeTag,
    UseCase,
)


@dataclass(frozen=True)
class SynthConfig:
    max_actors: int = 3
    max_objects: int = 2
    max_use_cases: int = 4
    max_interactions: int = 3
    max_messages: int = 8
    max_parameters: int = 3
    p_edge: float = 0.35
    p_deadline: float = 0.3
    p_response: float = 0.3


_LABELS = ["Set power supply", "Connect", 'Say "hi"', "a, b", "tab\there", "back\\slash", "ünïcode"]


def _duration(rng: random.Random) -> DurationBound:
    unit = rng.choice(sorted(DURATION_UNITS))
    lo = rng.randint(0, 50)
    return DurationBound(Duration(lo, unit), Duration(lo + rng.randint(0, 50), unit))


def _parameter(rng: random.Random, name: str) -> Parameter:
    tag = rng.choice(list(TypeTag))
    domain = None
    if tag is TypeTag.NUMBER and rng.random() < 0.7:
        places = rng.choice([0, 0, 1, 2])
        lo = Decimal(rng.randint(-100, 100)).scaleb(-places)
        hi = lo + Decimal(rng.randint(0, 500)).scaleb(-places)
        domain = NumericInterval(lo, hi, rng.choice([None, "bar", "ms", "kPa"]))
    elif tag is TypeTag.ENUM and rng.random() < 0.8:
        domain = EnumDomain(tuple(f"v{k}" for k in range(rng.randint(1, 4))))
    return Parameter(name, tag, domain)


def _params(rng: random.Random, cfg: SynthConfig, prefix: str) -> tuple[Parameter, ...]:
    return tuple(_parameter(rng, f"{prefix}{k}") for k in range(rng.randint(0, cfg.max_parameters)))


def random_interaction(rng: random.Random, name: str, participants: list[str],
                       realizes: str | None = None, cfg: SynthConfig = SynthConfig()) -> Interaction:
    n = rng.randint(0, cfg.max_messages)
    ids = [f"m{k + 1}" for k in range(n)]
    # hidden topological order, then a shuffled declaration order
    order = ids[:]
    rng.shuffle(order)
    rank = {mid: k for k, mid in enumerate(order)}
    messages = []
    for mid in ids:
        earlier = [q for q in ids if rank[q] < rank[mid]]
        preds = tuple(q for q in earlier if rng.random() < cfg.p_edge)
        sender, receiver = rng.choice(participants), rng.choice(participants)
        op = rng.choice(["Op" + mid.upper(), rng.choice(_LABELS)])
        response = None
        if rng.random() < cfg.p_response:
            response = Response(_params(rng, cfg, "r"),
                                _duration(rng) if rng.random() < cfg.p_deadline else None)
        messages.append(Message(
            id=mid,
            sender=sender,
            receiver=receiver,
            operation=op,
            parameters=_params(rng, cfg, "p"),
            predecessors=preds,
            send_deadline=_duration(rng) if rng.random() < cfg.p_deadline else None,
            treatment_deadline=_duration(rng) if rng.random() < cfg.p_deadline else None,
            response=response,
        ))
    return Interaction(name, realizes, tuple(messages))


def random_model(seed: int, cfg: SynthConfig = SynthConfig()) -> SystemModel:
    rng = random.Random(seed)
    actors = tuple(
        Actor(f"A{k}", rng.choice(list(ActorKind))) for k in range(rng.randint(1, cfg.max_actors))
    )
    objects = tuple(f"Obj{k}" for k in range(rng.randint(0, cfg.max_objects)))
    use_cases = []
    alloc = []
    for k in range(rng.randint(0, cfg.max_use_cases)):
        linked = tuple(a.name for a in actors if rng.random() < 0.5) or (actors[0].name,)
        title = rng.choice([f"UC {k}", f"Use case #{k}: do \"it\""])
        use_cases.append(UseCase(title, linked, rng.choice(["", "some description", "two\nlines"])))
        alloc.append((title, rng.choice([Allocation.INSIDE_SYSTEM, Allocation.OPERATIONAL_PROCESS])))
    participants = [a.name for a in actors] + list(objects)
    interactions = tuple(
        random_interaction(
            rng, f"I{k}", participants,
            rng.choice([None] + [u.name for u in use_cases]), cfg,
        )
        for k in range(rng.randint(0, cfg.max_interactions))
    )
    return SystemModel(
        name=f"Sys{seed}",
        actors=actors,
        objects=objects,
        use_cases=tuple(use_cases),
        interactions=interactions,
        boundary=BoundaryAllocation(tuple(alloc)),
    )
