"""
Parser and canonical serializer for ``.rau`` interaction models.

The grammar is documented in docs/grammar.md. The parser is a hand-written
recursive descent parser that never raises on bad input: lexical, syntactic
and duplicate-name problems come back as diagnostics with source spans, and
recovery resumes at the next declaration so one run reports several errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable

from .diagnostics import Diagnostic, SourceSpan, error, has_errors
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

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

ACTOR_KINDS = {"human": ActorKind.HUMAN, "external": ActorKind.EXTERNAL_SYSTEM}
ALLOCATIONS = {
    "inside": Allocation.INSIDE_SYSTEM,
    "process": Allocation.OPERATIONAL_PROCESS,
    "excluded": Allocation.EXCLUDED,
}
TYPE_TAGS = {t.value: t for t in TypeTag}
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_PUNCT = set("{}()[];:,")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, punct, eof
    value: str
    span: SourceSpan

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "string":
            return "string literal"
        return repr(self.value)


@dataclass
class ParseResult:
    model: SystemModel | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None


def _is_ascii_letter(c: str) -> bool:
    return ("a" <= c <= "z") or ("A" <= c <= "Z")


def _is_digit(c: str) -> bool:
    return "0" <= c <= "9"


def tokenize(text: str, file: str = "<input>") -> tuple[list[Token], list[Diagnostic]]:
    """Split source text into tokens; illegal input yields diagnostics, not exceptions."""
    text = text.replace("\r\n", "\n")
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    i, line, col, n = 0, 1, 1, len(text)

    def span(l0, c0, l1, c1):
        return SourceSpan(file, l0, c0, l1, c1)

    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i, col = i + 1, col + 1
            continue
        start, scol = i, col
        if _is_ascii_letter(c):
            while i < n and (_is_ascii_letter(text[i]) or _is_digit(text[i]) or text[i] == "_"):
                i += 1
            col += i - start
            tokens.append(Token("ident", text[start:i], span(line, scol, line, col)))
        elif _is_digit(c) or (c == "-" and i + 1 < n and _is_digit(text[i + 1])):
            i += 1
            while i < n and _is_digit(text[i]):
                i += 1
            if i + 1 < n and text[i] == "." and _is_digit(text[i + 1]):
                i += 1
                while i < n and _is_digit(text[i]):
                    i += 1
            col += i - start
            tokens.append(Token("number", text[start:i], span(line, scol, line, col)))
        elif c == '"':
            i += 1
            chars = []
            closed = False
            while i < n and text[i] != "\n":
                ch = text[i]
                if ch == '"':
                    i += 1
                    closed = True
                    break
                if ch == "\\" and i + 1 < n and text[i + 1] in _ESCAPES:
                    chars.append(_ESCAPES[text[i + 1]])
                    i += 2
                    continue
                if ch == "\\":
                    esc_col = scol + (i - start)
                    diags.append(error("invalid-escape", f"{file}:{line}",
                                       "unknown escape sequence in string",
                                       span(line, esc_col, line, esc_col + 1)))
                chars.append(ch)
                i += 1
            col += i - start
            sp = span(line, scol, line, col)
            if not closed:
                diags.append(error("unterminated-string", f"{file}:{line}", "string literal is not closed on this line", sp))
            tokens.append(Token("string", "".join(chars), sp))
        elif text.startswith("->", i) or text.startswith("..", i):
            i += 2
            col += 2
            tokens.append(Token("punct", text[start:i], span(line, scol, line, col)))
        elif c in _PUNCT:
            i += 1
            col += 1
            tokens.append(Token("punct", c, span(line, scol, line, col)))
        else:
            i += 1
            col += 1
            diags.append(error("illegal-character", f"{file}:{line}",
                               f"illegal character {c!r}", span(line, scol, line, col)))
    tokens.append(Token("eof", "", span(line, col, line, col)))
    return tokens, diags


class _Bail(Exception):
    """Abandon the current declaration; the caller resynchronizes."""


class Parser:
    """Recursive descent over the token list produced by :func:`tokenize`."""

    def __init__(self, tokens: list[Token], file: str = "<input>"):
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.diagnostics: list[Diagnostic] = []

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind == "ident" and self.tok.value in words

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def fail(self, expected: str, tok: Token | None = None):
        tok = tok or self.tok
        self.diagnostics.append(error(
            "unexpected-token", f"{self.file}:{tok.span.start_line}",
            f"expected {expected}, found {tok.describe()}", tok.span,
        ))
        raise _Bail()

    def expect(self, kind: str, value: str | None = None, what: str | None = None) -> Token:
        if self.at(kind, value):
            return self.advance()
        self.fail(what or (repr(value) if value else kind))

    def ident(self, what: str = "identifier") -> Token:
        return self.expect("ident", what=what)

    def keyword(self, table: dict, what: str):
        t = self.tok
        if t.kind == "ident" and t.value in table:
            self.advance()
            return table[t.value]
        self.fail(what)

    def semantic(self, code: str, text: str, span: SourceSpan):
        self.diagnostics.append(error(code, f"{self.file}:{span.start_line}", text, span))

    def span_from(self, start: Token) -> SourceSpan:
        end = self.tokens[self.pos - 1].span if self.pos > 0 else start.span
        return SourceSpan(self.file, start.span.start_line, start.span.start_col, end.end_line, end.end_col)

    # -- recovery -----------------------------------------------------------

    def sync_decl(self):
        """Skip to just past the next ';' or to the next '}' of the enclosing block."""
        depth = 0
        while not self.at("eof"):
            t = self.tok
            if t.kind == "punct":
                if t.value in "{([":
                    depth += 1
                elif t.value in ")]":
                    depth = max(depth - 1, 0)
                elif t.value == "}":
                    if depth == 0:
                        return
                    depth -= 1
                elif t.value == ";" and depth == 0:
                    self.advance()
                    return
            elif depth == 0 and t.value in ("system", "interaction") and self.peek().kind == "ident":
                return
            self.advance()

    def sync_top(self):
        depth = 0
        while not self.at("eof"):
            t = self.tok
            if t.kind == "punct" and t.value == "{":
                depth += 1
            elif t.kind == "punct" and t.value == "}":
                depth = max(depth - 1, 0)
            elif depth == 0 and t.kind == "ident" and t.value in ("system", "interaction"):
                return
            self.advance()

    def block(self, item: Callable[[], None], item_words: tuple[str, ...]):
        """Parse ``{ item* }``; an item failure resyncs to the next declaration."""
        self.expect("punct", "{")
        while not self.at("punct", "}"):
            if self.at("eof"):
                self.fail("'}'")
            if self.at_kw("system", "interaction") and not self.at_kw(*item_words):
                # a top-level block starts here: the closing brace was forgotten
                self.diagnostics.append(error(
                    "unexpected-token", f"{self.file}:{self.tok.span.start_line}",
                    f"expected '}}', found {self.tok.describe()}", self.tok.span,
                ))
                return
            try:
                item()
            except _Bail:
                self.sync_decl()
        self.advance()

    # -- grammar -------------------------------------------------------------

    def parse_file(self) -> SystemModel | None:
        header: dict | None = None
        interactions: list[Interaction] = []
        interaction_names: dict[str, Token] = {}
        while not self.at("eof"):
            try:
                if self.at_kw("system"):
                    start = self.tok
                    sys_decl = self.system_block()
                    if header is not None:
                        self.semantic("multiple-systems", "only one system block is allowed per file", start.span)
                    else:
                        header = sys_decl
                elif self.at_kw("interaction"):
                    name_tok = self.peek()
                    inter = self.interaction_block()
                    if inter.name in interaction_names:
                        self.semantic("duplicate-name", f"interaction {inter.name!r} declared more than once", name_tok.span)
                    else:
                        interaction_names[inter.name] = name_tok
                    interactions.append(inter)
                else:
                    self.fail("'system' or 'interaction'")
            except _Bail:
                self.sync_top()
        if header is None:
            if not self.diagnostics:
                self.semantic("missing-system", "no system block declared", self.tok.span)
            return None
        return SystemModel(
            name=header["name"],
            actors=tuple(header["actors"]),
            objects=tuple(header["objects"]),
            use_cases=tuple(header["use_cases"]),
            interactions=tuple(interactions),
            boundary=BoundaryAllocation(tuple(header["allocations"])),
        )

    def system_block(self) -> dict:
        self.expect("ident", "system")
        name = self.ident("system name").value
        decl = {"name": name, "actors": [], "objects": [], "use_cases": [], "allocations": []}
        participants: set[str] = set()
        titles: set[str] = set()

        def item():
            start = self.tok
            if self.accept("ident", "actor"):
                tok = self.ident("actor name")
                self.expect("ident", "kind")
                kind = self.keyword(ACTOR_KINDS, "'human' or 'external'")
                self.expect("punct", ";")
                if tok.value in participants:
                    self.semantic("duplicate-name", f"participant {tok.value!r} declared more than once", tok.span)
                    return
                participants.add(tok.value)
                decl["actors"].append(Actor(tok.value, kind, self.span_from(start)))
            elif self.accept("ident", "object"):
                tok = self.ident("object name")
                self.expect("punct", ";")
                if tok.value in participants:
                    self.semantic("duplicate-name", f"participant {tok.value!r} declared more than once", tok.span)
                    return
                participants.add(tok.value)
                decl["objects"].append(tok.value)
            elif self.accept("ident", "usecase"):
                title = self.expect("string", what="use case title in quotes")
                actors: list[str] = []
                allocation = None
                description = ""
                seen: set[str] = set()
                while not self.at("punct", ";"):
                    clause = self.tok
                    if clause.kind != "ident" or clause.value not in ("actors", "allocation", "description") \
                            or clause.value in seen:
                        self.fail("'actors', 'allocation', 'description' or ';'")
                    seen.add(clause.value)
                    self.advance()
                    if clause.value == "actors":
                        actors = self.name_list()
                    elif clause.value == "allocation":
                        allocation = self.keyword(ALLOCATIONS, "'inside', 'process' or 'excluded'")
                    else:
                        description = self.expect("string", what="description string").value
                self.advance()
                if title.value in titles:
                    self.semantic("duplicate-name", f"use case {title.value!r} declared more than once", title.span)
                    return
                titles.add(title.value)
                decl["use_cases"].append(UseCase(title.value, tuple(actors), description, self.span_from(start)))
                if allocation is not None:
                    decl["allocations"].append((title.value, allocation))
            else:
                self.fail("'actor', 'object' or 'usecase'")

        self.block(item, ("actor", "object", "usecase"))
        return decl

    def name_list(self) -> list[str]:
        names = [self.ident().value]
        while self.accept("punct", ","):
            names.append(self.ident().value)
        return names

    def interaction_block(self) -> Interaction:
        start = self.expect("ident", "interaction")
        name = self.ident("interaction name").value
        realizes = None
        if self.accept("ident", "realizes"):
            realizes = self.expect("string", what="use case title in quotes").value
        messages: list[Message] = []
        ids: set[str] = set()

        def item():
            m = self.message(ids)
            if m is not None:
                ids.add(m.id)
                messages.append(m)

        self.block(item, ("msg",))
        return Interaction(name, realizes, tuple(messages), self.span_from(start))

    def message(self, ids: set[str]) -> Message | None:
        """One ``msg`` declaration; None when its id duplicates an earlier one."""
        msg_start = self.tok
        self.expect("ident", "msg", what="'msg'")
        id_tok = self.ident("message id")
        self.expect("punct", ":")
        sender = self.ident("sender").value
        self.expect("punct", "->")
        receiver = self.ident("receiver").value
        self.expect("punct", ":")
        op_tok = self.tok
        if op_tok.kind not in ("ident", "string"):
            self.fail("operation name")
        self.advance()
        params = self.param_list()
        preds: list[str] = []
        send = treat = None
        response = None
        seen: set[str] = set()
        while not self.at("punct", ";"):
            clause = self.tok
            key = clause.value
            if clause.kind == "ident" and key == "deadline":
                key = "deadline send"
            if clause.kind != "ident" or key not in ("after", "deadline send", "treat", "response") \
                    or key in seen:
                self.fail("'after', 'deadline send', 'treat', 'response' or ';'")
            seen.add(key)
            self.advance()
            if key == "after":
                preds = self.name_list()
            elif key == "deadline send":
                self.expect("ident", "send")
                send = self.duration_bound()
            elif key == "treat":
                treat = self.duration_bound()
            else:
                values = self.param_list()
                recv = None
                if self.at_kw("deadline") and not (self.peek().kind == "ident" and self.peek().value == "send"):
                    self.advance()
                    recv = self.duration_bound()
                response = Response(tuple(values), recv)
        self.advance()
        if id_tok.value in ids:
            self.semantic("duplicate-name", f"message id {id_tok.value!r} declared more than once", id_tok.span)
            return None
        return Message(
            id=id_tok.value, sender=sender, receiver=receiver, operation=op_tok.value,
            parameters=tuple(params), predecessors=tuple(preds), send_deadline=send,
            treatment_deadline=treat, response=response, span=self.span_from(msg_start),
        )

    def param_list(self) -> list[Parameter]:
        self.expect("punct", "(")
        params: list[Parameter] = []
        names: set[str] = set()
        if not self.at("punct", ")"):
            while True:
                p = self.parameter()
                if p.name in names:
                    self.semantic("duplicate-name", f"parameter {p.name!r} declared more than once", p.span)
                names.add(p.name)
                params.append(p)
                if not self.accept("punct", ","):
                    break
        self.expect("punct", ")", what="',' or ')'")
        return params

    def parameter(self) -> Parameter:
        name = self.ident("parameter name")
        self.expect("punct", ":")
        type_tag = self.keyword(TYPE_TAGS, "'number', 'text', 'boolean' or 'enum'")
        domain = None
        if self.accept("ident", "in"):
            if self.accept("punct", "["):
                lo = Decimal(self.expect("number", what="lower bound").value)
                self.expect("punct", "..")
                hi = Decimal(self.expect("number", what="upper bound").value)
                self.expect("punct", "]")
                unit = None
                if self.at("ident"):
                    unit = self.advance().value
                domain = NumericInterval(lo, hi, unit)
            elif self.accept("punct", "{"):
                values: list[str] = []
                if not self.at("punct", "}"):
                    values = self.name_list()
                self.expect("punct", "}", what="',' or '}'")
                domain = EnumDomain(tuple(values))
            else:
                self.fail("'[' or '{' after 'in'")
        return Parameter(name.value, type_tag, domain, self.span_from(name))

    def duration(self) -> Duration:
        num = self.expect("number", what="duration")
        if not num.value.isdigit():
            self.fail("non-negative integer duration", num)
        unit = self.tok
        if unit.kind != "ident" or unit.value not in DURATION_UNITS:
            self.fail("duration unit 'ms', 's' or 'min'")
        self.advance()
        return Duration(int(num.value), unit.value)

    def duration_bound(self) -> DurationBound:
        lo = self.duration()
        self.expect("punct", "..")
        return DurationBound(lo, self.duration())


def parse(text: str | bytes, file: str = "<input>") -> ParseResult:
    """Parse model source. Never raises; problems are reported as diagnostics."""
    if isinstance(text, (bytes, bytearray)):
        raw = bytes(text)
        if raw.startswith(b"\xef\xbb\xbf"):
            raw = raw[3:]
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            head = raw[:exc.start].decode("utf-8", errors="replace").replace("\r\n", "\n")
            line = head.count("\n") + 1
            col = len(head) - (head.rfind("\n") + 1) + 1
            sp = SourceSpan(file, line, col, line, col + 1)
            return ParseResult(None, [error("invalid-encoding", f"{file}:{line}", "source is not valid UTF-8", sp)])
    elif text.startswith("\ufeff"):
        text = text[1:]
    tokens, diags = tokenize(text, file)
    parser = Parser(tokens, file)
    model = parser.parse_file()
    diags = sorted(diags + parser.diagnostics, key=lambda d: (d.span.start_line, d.span.start_col) if d.span else (0, 0))
    if has_errors(diags):
        model = None
    return ParseResult(model, diags)


def parse_file(path) -> ParseResult:
    from pathlib import Path

    p = Path(path)
    return parse(p.read_bytes(), str(p))


# ---------------------------------------------------------------------------
# serialization


def quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{out}"'


def _number(d: Decimal) -> str:
    return format(d, "f")


def _param(p: Parameter) -> str:
    s = f"{p.name}: {p.type_tag.value}"
    d = p.domain
    if isinstance(d, NumericInterval):
        s += f" in [{_number(d.lower)}..{_number(d.upper)}]"
        if d.unit:
            s += f" {d.unit}"
    elif isinstance(d, EnumDomain):
        s += " in {" + ", ".join(d.values) + "}"
    return s


def _params(ps) -> str:
    return "(" + ", ".join(_param(p) for p in ps) + ")"


_ACTOR_WORD = {v: k for k, v in ACTOR_KINDS.items()}
_ALLOC_WORD = {v: k for k, v in ALLOCATIONS.items()}


def serialize_message(m: Message) -> str:
    op = m.operation if IDENT_RE.match(m.operation) else quote(m.operation)
    s = f"msg {m.id}: {m.sender} -> {m.receiver} : {op}{_params(m.parameters)}"
    if m.predecessors:
        s += " after " + ", ".join(m.predecessors)
    if m.send_deadline is not None:
        s += f" deadline send {m.send_deadline}"
    if m.treatment_deadline is not None:
        s += f" treat {m.treatment_deadline}"
    if m.response is not None:
        s += " response " + _params(m.response.values)
        if m.response.receive_deadline is not None:
            s += f" deadline {m.response.receive_deadline}"
    return s + ";"


def serialize(model: SystemModel) -> str:
    body = [f"  actor {a.name} kind {_ACTOR_WORD[a.kind]};" for a in model.actors]
    body += [f"  object {o};" for o in model.objects]
    for u in model.use_cases:
        s = f"  usecase {quote(u.name)}"
        if u.linked_actors:
            s += " actors " + ", ".join(u.linked_actors)
        alloc = model.boundary.get(u.name)
        if alloc is not None:
            s += f" allocation {_ALLOC_WORD[alloc]}"
        if u.description:
            s += f" description {quote(u.description)}"
        body.append(s + ";")
    if body:
        chunks = [f"system {model.name} {{\n" + "\n".join(body) + "\n}\n"]
    else:
        chunks = [f"system {model.name} {{}}\n"]
    for inter in model.interactions:
        head = f"interaction {inter.name}"
        if inter.realizes is not None:
            head += f" realizes {quote(inter.realizes)}"
        if inter.messages:
            lines = "\n".join("  " + serialize_message(m) for m in inter.messages)
            chunks.append(f"{head} {{\n{lines}\n}}\n")
        else:
            chunks.append(f"{head} {{}}\n")
    return "\n".join(chunks)
