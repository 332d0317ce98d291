"""Netlist Description Language: parser, elaborator and printer.

NDL is line-oriented.  One declaration per line, ``#`` starts a comment,
keywords are case-sensitive, subcycles are written ``I II III IV``::

    circuit adder4
    input a width=4 phase=IV
    input b width=4 phase=I
    adder s = ADD(a, b) width=4
    probe sum = s phase=III
    probe carry = s.cout phase=II
    vectors
    a=1010, b=0110 -> sum=0000, carry=1

The header may carry ``origin=PHASE`` (first subcycle of each machine
cycle, default IV) and ``latency=N`` (cycles an input is held before its
probes are compared, default 1).  Bit strings are written MSB first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .mech import CouplingKind, Direction, DriveMode, LeverKind, Subcycle
from .netlist import macros
from .netlist.circuit import (
    Circuit,
    ElementDecl,
    Hazard,
    HazardError,
    HazardKind,
    InputPort,
    Lever,
    MacroDecl,
    Probe,
    RectifiedMerge,
    Relay,
    VectorRow,
)
from .netlist.validate import validate

KEYWORDS = ("circuit", "input", "element", "relay", "lever", "rect", "gate",
            "delay", "adder", "probe", "vectors")
GATE_KINDS = {"NOT": 1, "AND": 2, "OR": 2, "XOR": 2, "CHAIN": None}
PHASES = ("I", "II", "III", "IV")
DIRECTIONS = ("W", "S", "E", "N")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#.*)
  | (?P<arrow>->)
  | (?P<punct>[=(),\[\]])
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<int>[0-9]+)
  | (?P<bad>.)
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    start: int  # 1-based column
    end: int    # inclusive, >= start

    def __str__(self) -> str:
        return f"{self.line}:{self.start}"


class ParseError(Exception):
    def __init__(self, span: SourceSpan, expected: tuple[str, ...], found: str, message: str):
        self.span = span
        self.expected = expected
        self.found = found
        self.message = message
        super().__init__(f"{span}: {message}")


class ElaborationError(HazardError):
    """All hazards met while elaborating an NDL file."""


@dataclass(frozen=True)
class Token:
    kind: str  # name, int, punct, arrow, bad, eol
    text: str
    span: SourceSpan

    def describe(self) -> str:
        return self.text if self.kind != "eol" else self.text.strip("<>")


# -- AST ------------------------------------------------------------------

@dataclass
class Decl:
    span: SourceSpan = field(compare=False)
    refs: dict[str, SourceSpan] = field(default_factory=dict, compare=False, repr=False)


@dataclass
class InputNode(Decl):
    name: str = ""
    width: int = 1
    phase: Subcycle = Subcycle.I


@dataclass
class ElementNode(Decl):
    name: str = ""
    direction: Direction = Direction.W


@dataclass
class RelayNode(Decl):
    name: str = ""
    control: str = ""
    actuator: str = ""
    actuated: str = ""
    kind: CouplingKind = CouplingKind.COUPLED_WHEN_ONE
    mode: DriveMode = DriveMode.PUSH
    drive: Subcycle | None = None


@dataclass
class LeverNode(Decl):
    name: str = ""
    source: str = ""
    target: str = ""
    kind: LeverKind = LeverKind.REVERSE


@dataclass
class RectNode(Decl):
    name: str = ""
    sources: tuple[str, ...] = ()
    target: str = ""


@dataclass
class GateNode(Decl):
    name: str = ""
    kind: str = ""
    args: tuple[str, ...] = ()
    drive: Subcycle = Subcycle.I


@dataclass
class DelayNode(Decl):
    name: str = ""
    source: str = ""
    n: int = 0
    start: Subcycle = Subcycle.I


@dataclass
class AdderNode(Decl):
    name: str = ""
    a: str = ""
    b: str = ""
    cin: str | None = None
    width: int = 1


@dataclass
class ProbeNode(Decl):
    name: str = ""
    refs_in_order: tuple[str, ...] = ()
    phase: Subcycle = Subcycle.I


@dataclass
class VectorNode(Decl):
    inputs: tuple[tuple[str, str], ...] = ()
    expects: tuple[tuple[str, str], ...] = ()


@dataclass
class NdlAst:
    name: str
    span: SourceSpan
    origin: Subcycle | None = None
    latency: int | None = None
    decls: list[Decl] = field(default_factory=list)
    vectors: list[VectorNode] = field(default_factory=list)


# -- parsing ----------------------------------------------------------------

def _tokenize(line: str, lineno: int, last: bool) -> list[Token]:
    toks = []
    for m in _TOKEN.finditer(line):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        toks.append(Token(kind, m.group(), SourceSpan(lineno, m.start() + 1, m.end())))
    col = len(line) + 1
    toks.append(Token("eol", "<end of input>" if last else "<end of line>", SourceSpan(lineno, col, col)))
    return toks


class _Line:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, expected: tuple[str, ...], message: str | None = None, tok: Token | None = None):
        tok = tok or self.tok
        if message is None:
            exp = ", ".join(expected)
            if tok.kind == "eol":
                message = f"unexpected {tok.describe()}, expected {exp}"
            else:
                message = f"unexpected {tok.text!r}, expected {exp}"
        return ParseError(tok.span, expected, tok.describe(), message)

    def take(self) -> Token:
        t = self.tok
        if t.kind != "eol":
            self.i += 1
        return t

    def punct(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("punct", "arrow"):
            raise self.error((repr(text),))
        return self.take()

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "arrow") and self.tok.text == text

    def name(self, what: str = "name") -> Token:
        if self.tok.kind != "name":
            raise self.error((what,))
        if self.tok.text in KEYWORDS:
            raise self.error((what,), f"{self.tok.text!r} is a keyword, expected {what}")
        return self.take()

    def integer(self, what: str = "integer") -> tuple[int, Token]:
        if self.tok.kind != "int":
            raise self.error((what,))
        t = self.take()
        return int(t.text), t

    def ref(self, decl: Decl) -> str:
        t = self.name("reference")
        text = t.text
        end = t.span.end
        if self.at("["):
            self.take()
            n, _ = self.integer("bit index")
            close = self.punct("]")
            text, end = f"{text}[{n}]", close.span.end
        decl.refs.setdefault(text, SourceSpan(t.span.line, t.span.start, end))
        return text

    def end(self) -> None:
        if self.tok.kind != "eol":
            raise self.error(("end of line",))


def _phase(p: _Line) -> Subcycle:
    t = p.tok
    if t.kind == "name" and t.text in PHASES:
        p.take()
        return Subcycle[t.text]
    raise p.error(PHASES, f"malformed phase {t.describe()!r}, expected one of {', '.join(PHASES)}")


def _choice(options: tuple[str, ...], what: str) -> Callable[[_Line], str]:
    def parse(p: _Line) -> str:
        t = p.tok
        if t.kind == "name" and t.text in options:
            p.take()
            return t.text
        raise p.error(options, f"malformed {what} {t.describe()!r}, expected one of {', '.join(options)}")
    return parse


def _attrs(p: _Line, schema: dict[str, Callable[[_Line], object]], required: tuple[str, ...]) -> dict:
    """Parse ``key=value`` pairs until end of line."""
    out: dict[str, object] = {}
    while p.tok.kind != "eol":
        t = p.tok
        if t.kind != "name" or t.text not in schema:
            raise p.error(tuple(f"{k}=" for k in schema if k not in out) or ("end of line",))
        if t.text in out:
            raise p.error((), f"duplicate attribute {t.text}=")
        p.take()
        p.punct("=")
        out[t.text] = schema[t.text](p)
    missing = [k for k in required if k not in out]
    if missing:
        raise p.error(tuple(f"{k}=" for k in missing), f"missing {missing[0]}= attribute")
    return out


def _int_at_least(lo: int, what: str) -> Callable[[_Line], int]:
    def parse(p: _Line) -> int:
        t = p.tok
        n, _ = p.integer(what)
        if n < lo:
            raise p.error((), f"{what} must be at least {lo}, got {n}", tok=t)
        return n
    return parse


def _parse_header(p: _Line) -> NdlAst:
    kw = p.tok
    if kw.kind != "name" or kw.text != "circuit":
        raise p.error(("'circuit'",))
    p.take()
    name = p.name("circuit name")
    a = _attrs(p, {"origin": _phase, "latency": _int_at_least(1, "latency")}, ())
    return NdlAst(name.text, kw.span, a.get("origin"), a.get("latency"))


def _parse_decl(p: _Line, kw: Token) -> Decl:
    span = SourceSpan(kw.span.line, kw.span.start, max(t.span.end for t in p.toks))
    k = kw.text
    if k == "input":
        d = InputNode(span, name=p.name().text)
        a = _attrs(p, {"width": _int_at_least(1, "width"), "phase": _phase}, ("phase",))
        d.width, d.phase = a.get("width", 1), a["phase"]
    elif k == "element":
        d = ElementNode(span, name=p.name().text)
        a = _attrs(p, {"dir": _choice(DIRECTIONS, "direction")}, ("dir",))
        d.direction = Direction(a["dir"])
    elif k == "relay":
        d = RelayNode(span, name=p.name().text)
        r = lambda q: q.ref(d)  # noqa: E731
        a = _attrs(p, {"control": r, "actuator": r, "actuated": r,
                       "kind": _choice(("open", "closed"), "relay kind"),
                       "mode": _choice(("push", "pull"), "drive mode"), "drive": _phase},
                   ("control", "actuator", "actuated", "kind", "mode"))
        d.control, d.actuator, d.actuated = a["control"], a["actuator"], a["actuated"]
        if len({d.control, d.actuator, d.actuated}) != 3:
            raise ParseError(span, (), "", f"relay {d.name}: control, actuator and actuated must be distinct")
        d.kind, d.mode, d.drive = CouplingKind(a["kind"]), DriveMode(a["mode"]), a.get("drive")
    elif k == "lever":
        d = LeverNode(span, name=p.name().text)
        r = lambda q: q.ref(d)  # noqa: E731
        a = _attrs(p, {"from": r, "to": r, "kind": _choice(("reverse", "cw", "ccw"), "lever kind")},
                   ("from", "to", "kind"))
        d.source, d.target, d.kind = a["from"], a["to"], LeverKind(a["kind"])
    elif k == "rect":
        d = RectNode(span, name=p.name().text)

        def sources(q: _Line) -> tuple[str, ...]:
            out = [q.ref(d)]
            while q.at(","):
                q.take()
                out.append(q.ref(d))
            return tuple(out)
        a = _attrs(p, {"sources": sources, "target": lambda q: q.ref(d)}, ("sources", "target"))
        d.sources, d.target = a["sources"], a["target"]
    elif k == "gate":
        d = GateNode(span, name=p.name().text)
        p.punct("=")
        kt = p.tok
        if kt.kind != "name":
            raise p.error(tuple(GATE_KINDS))
        if kt.text not in GATE_KINDS:
            raise p.error(tuple(GATE_KINDS), f"unknown gate kind {kt.text}")
        p.take()
        p.punct("(")
        args = [p.ref(d)]
        while p.at(","):
            p.take()
            args.append(p.ref(d))
        close = p.punct(")")
        arity = GATE_KINDS[kt.text]
        if arity is not None and len(args) != arity:
            raise ParseError(SourceSpan(kt.span.line, kt.span.start, close.span.end), (), kt.text,
                             f"{kt.text} takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)}")
        d.kind, d.args = kt.text, tuple(args)
        d.drive = _attrs(p, {"drive": _phase}, ("drive",))["drive"]
    elif k == "delay":
        d = DelayNode(span, name=p.name().text)
        p.punct("=")
        d.source = p.ref(d)
        a = _attrs(p, {"n": _int_at_least(0, "n"), "start": _phase}, ("n", "start"))
        d.n, d.start = a["n"], a["start"]
    elif k == "adder":
        d = AdderNode(span, name=p.name().text)
        p.punct("=")
        kt = p.tok
        if kt.kind != "name" or kt.text != "ADD":
            raise p.error(("ADD",))
        p.take()
        p.punct("(")
        d.a = p.ref(d)
        p.punct(",")
        d.b = p.ref(d)
        if p.at(","):
            p.take()
            d.cin = p.ref(d)
        p.punct(")")
        d.width = _attrs(p, {"width": _int_at_least(1, "width")}, ("width",))["width"]
    elif k == "probe":
        d = ProbeNode(span, name=p.name().text)
        p.punct("=")
        refs = [p.ref(d)]
        while p.at(","):
            p.take()
            refs.append(p.ref(d))
        d.refs_in_order = tuple(refs)
        d.phase = _attrs(p, {"phase": _phase}, ("phase",))["phase"]
    else:  # pragma: no cover - callers dispatch on KEYWORDS
        raise p.error(KEYWORDS)
    p.end()
    return d


def _parse_pairs(p: _Line) -> list[tuple[str, str]]:
    pairs = []
    while True:
        n = p.name("port or probe name")
        p.punct("=")
        t = p.tok
        if t.kind != "int" or set(t.text) - {"0", "1"}:
            raise p.error(("bit string",), f"malformed bit string {t.describe()!r}, expected 0s and 1s")
        p.take()
        pairs.append((n.text, t.text))
        if not p.at(","):
            return pairs
        p.take()


def _parse_vector_row(p: _Line) -> VectorNode:
    first = p.tok
    inputs = _parse_pairs(p)
    expects: list[tuple[str, str]] = []
    if p.at("->"):
        p.take()
        expects = _parse_pairs(p)
    p.end()
    span = SourceSpan(first.span.line, first.span.start, max(t.span.end for t in p.toks))
    return VectorNode(span, inputs=tuple(inputs), expects=tuple(expects))


def parse(text: str) -> NdlAst:
    """Parse NDL source.  Raises :class:`ParseError` at the first syntax error."""
    lines = text.split("\n")
    ast: NdlAst | None = None
    in_vectors = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        p = _Line(_tokenize(line, lineno, lineno == len(lines)))
        if p.tok.kind == "eol":
            continue
        if ast is None:
            ast = _parse_header(p)
            continue
        kw = p.tok
        if kw.kind == "name" and kw.text in KEYWORDS:
            p.take()
            if kw.text == "circuit":
                raise p.error((), "circuit header may appear only once", tok=kw)
            if kw.text == "vectors":
                p.end()
                in_vectors = True
                continue
            in_vectors = False
            ast.decls.append(_parse_decl(p, kw))
        elif in_vectors:
            ast.vectors.append(_parse_vector_row(p))
        else:
            if kw.kind == "name":
                raise p.error(KEYWORDS, f"unknown keyword {kw.text!r}")
            raise p.error(KEYWORDS)
    if ast is None:
        n = len(lines)
        col = len(lines[-1]) + 1
        raise ParseError(SourceSpan(n, col, col), ("'circuit'",), "end of input",
                         "unexpected end of input, expected 'circuit'")
    return ast


def render_error(e: ParseError, text: str) -> str:
    """Source line, a caret run under the span, and the message."""
    lines = text.split("\n")
    src = lines[e.span.line - 1] if 0 < e.span.line <= len(lines) else ""
    src = src.rstrip("\r")
    start = max(1, e.span.start)
    width = max(1, e.span.end - start + 1)
    caret = " " * (start - 1) + "^" * width
    return f"{src}\n{caret}\n{e.span.line}:{e.span.start}: {e.message}"


# -- elaboration ------------------------------------------------------------

def elaborate(ast: NdlAst) -> Circuit:
    """Build and validate the circuit; raise :class:`ElaborationError` with every hazard."""
    c = Circuit(ast.name, ast.origin or Subcycle.IV, ast.latency or 1)
    owner: dict[str, SourceSpan] = {}
    hazards: list[Hazard] = []

    for d in ast.decls:
        before = set(c._names)
        try:
            _build(c, d)
        except HazardError as err:
            for h in err.hazards:
                where = next((d.refs[n] for n in h.location if n in d.refs), d.span)
                hazards.append(Hazard(h.kind, h.location, h.message, where))
        except ValueError as err:
            name = getattr(d, "name", "")
            hazards.append(Hazard(HazardKind.DANGLING_REFERENCE, (name,), str(err), d.span))
        for n in c._names - before:
            owner[n] = d.span

    seen = {(h.kind, h.location, h.message) for h in hazards}
    for h in validate(c):
        if (h.kind, h.location, h.message) not in seen:
            where = next((owner[n] for n in h.location if n in owner), None)
            hazards.append(Hazard(h.kind, h.location, h.message, where))
    if hazards:
        raise ElaborationError(hazards)
    c.vectors = [VectorRow(dict(v.inputs), dict(v.expects)) for v in ast.vectors]
    return c


def _build(c: Circuit, d: Decl) -> None:
    bit = c.resolve_bit
    if isinstance(d, InputNode):
        c.add_input(d.name, d.phase, d.width)
    elif isinstance(d, ElementNode):
        c.add_element(d.name, d.direction)
    elif isinstance(d, RelayNode):
        c.add_relay(d.name, bit(d.control), bit(d.actuator), bit(d.actuated), d.kind, d.mode, d.drive)
    elif isinstance(d, LeverNode):
        c.add_lever(d.name, bit(d.source), bit(d.target), d.kind)
    elif isinstance(d, RectNode):
        c.add_merge(d.name, [bit(s) for s in d.sources], bit(d.target))
    elif isinstance(d, GateNode):
        args = [bit(a) for a in d.args]
        if d.kind == "NOT":
            macros.gate_not(c, args[0], d.drive, d.name, check=False)
        elif d.kind == "AND":
            macros.gate_and(c, args[0], args[1], d.drive, d.name, check=False)
        elif d.kind == "OR":
            macros.gate_or(c, args[0], args[1], d.drive, d.name, check=False)
        elif d.kind == "XOR":
            macros.gate_xor(c, args[0], args[1], d.drive, d.name, check=False)
        else:
            macros.conjunction_chain(c, args, d.drive, d.name, check=False)
    elif isinstance(d, DelayNode):
        macros.delay_line(c, bit(d.source), d.n, d.start, d.name, check=False)
    elif isinstance(d, AdderNode):
        if len(c.resolve(d.a)) != d.width or len(c.resolve(d.b)) != d.width:
            raise ValueError(f"adder {d.name}: width={d.width} but operands are "
                             f"{len(c.resolve(d.a))} and {len(c.resolve(d.b))} bits")
        macros.adder(c, d.name, d.a, d.b, d.cin, check=False)
    elif isinstance(d, ProbeNode):
        c.add_probe(d.name, d.refs_in_order, d.phase)


def load_text(text: str) -> Circuit:
    return elaborate(parse(text))


# -- printing ---------------------------------------------------------------

def emit(c: Circuit) -> str:
    """Canonical NDL for a circuit built from declarations and macros."""
    head = f"circuit {c.name}"
    if c.origin is not Subcycle.IV:
        head += f" origin={c.origin}"
    if c.latency != 1:
        head += f" latency={c.latency}"
    out = [head]
    for d in c.decls:
        out.append(_emit_decl(d))
    if c.vectors:
        out.append("vectors")
        for row in c.vectors:
            line = ", ".join(f"{k}={v}" for k, v in row.inputs.items())
            if row.expects:
                line += " -> " + ", ".join(f"{k}={v}" for k, v in row.expects.items())
            out.append(line)
    return "\n".join(out) + "\n"


def _emit_decl(d) -> str:
    if isinstance(d, InputPort):
        width = f" width={d.width}" if d.width != 1 else ""
        return f"input {d.name}{width} phase={d.phase}"
    if isinstance(d, ElementDecl):
        return f"element {d.name} dir={d.direction.value}"
    if isinstance(d, Relay):
        if d.crossing:
            raise ValueError(f"relay {d.name!r}: delay stages are written with the delay macro")
        drive = f" drive={d.drive}" if d.drive is not None else ""
        return (f"relay {d.name} control={d.control} actuator={d.actuator} actuated={d.actuated} "
                f"kind={d.kind.value} mode={d.mode.value}{drive}")
    if isinstance(d, Lever):
        return f"lever {d.name} from={d.source} to={d.target} kind={d.kind.value}"
    if isinstance(d, RectifiedMerge):
        return f"rect {d.name} sources={','.join(d.sources)} target={d.target}"
    if isinstance(d, Probe):
        return f"probe {d.name} = {', '.join(d.refs)} phase={d.sample_phase}"
    if isinstance(d, MacroDecl):
        if d.kind == "DELAY":
            return f"delay {d.name} = {d.args[0]} n={d.n} start={d.drive}"
        if d.kind == "ADD":
            return f"adder {d.name} = ADD({', '.join(d.args)}) width={d.width}"
        return f"gate {d.name} = {d.kind}({', '.join(d.args)}) drive={d.drive}"
    raise TypeError(f"cannot print {d!r}")
