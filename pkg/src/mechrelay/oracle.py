"""Relay-free references for checking simulated circuits.

:func:`logic_net` reads only the macro-level declarations of a circuit, never
its relays, so a bug in the relay expansion or in the engine cannot leak into
the expected values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .engine import load
from .netlist.circuit import Circuit, InputPort, MacroDecl, Probe

MAX_EQUIVALENCE_BITS = 20


@dataclass
class LogicNet:
    """Boolean DAG.  Node ``i`` is ``(op, *args)``; args are earlier node ids.

    ops: ``("input", port, bit)``, ``("const", v)``, ``("not", x)``,
    ``("and", x, y)``, ``("or", x, y)``, ``("xor", x, y)``.
    """

    nodes: list[tuple] = field(default_factory=list)
    inputs: dict[str, list[int]] = field(default_factory=dict)
    outputs: dict[str, list[int]] = field(default_factory=dict)

    def add(self, op: str, *args) -> int:
        if op in ("not", "and", "or", "xor"):
            for a in args:
                if not 0 <= a < len(self.nodes):
                    raise ValueError(f"node {a} does not precede new {op} node")
        self.nodes.append((op, *args))
        return len(self.nodes) - 1

    def add_input(self, name: str, width: int = 1) -> list[int]:
        ids = [self.add("input", name, i) for i in range(width)]
        self.inputs[name] = ids
        return ids


def eval_boolean(net: LogicNet, assignment: Mapping[str, int | Sequence[int]]) -> dict[str, tuple[int, ...]]:
    """Evaluate every output of ``net``; values are LSB-first bit tuples.

    ``assignment`` maps each input to an integer or an LSB-first bit sequence.
    """
    bits: dict[str, Sequence[int]] = {}
    for name, ids in net.inputs.items():
        if name not in assignment:
            raise KeyError(f"no value for input {name!r}")
        v = assignment[name]
        bits[name] = [(v >> i) & 1 for i in range(len(ids))] if isinstance(v, int) else list(v)
    val = [0] * len(net.nodes)
    for i, node in enumerate(net.nodes):
        op = node[0]
        if op == "input":
            val[i] = bits[node[1]][node[2]] & 1
        elif op == "const":
            val[i] = node[1]
        elif op == "not":
            val[i] = 1 - val[node[1]]
        elif op == "and":
            val[i] = val[node[1]] & val[node[2]]
        elif op == "or":
            val[i] = val[node[1]] | val[node[2]]
        elif op == "xor":
            val[i] = val[node[1]] ^ val[node[2]]
        else:
            raise ValueError(f"unknown node op {op!r}")
    return {name: tuple(val[j] for j in ids) for name, ids in net.outputs.items()}


def logic_net(c: Circuit) -> LogicNet:
    """Boolean reading of a macro-level circuit; one output per probe."""
    net = LogicNet()
    sig: dict[str, int] = {}

    def ref(name: str) -> int:
        for e in c.resolve(name):
            if e in sig:
                return sig[e]
        raise ValueError(f"{name!r} is not driven by a macro-level declaration")

    for d in c.decls:
        if isinstance(d, InputPort):
            for e, nid in zip(d.elements, net.add_input(d.name, d.width)):
                sig[e] = nid
        elif isinstance(d, MacroDecl):
            _macro_logic(net, c, d, ref, sig)
        elif isinstance(d, Probe):
            net.outputs[d.name] = [sig[e] if e in sig else _undriven(e) for e in d.elements]
        else:
            raise ValueError(f"relay-level declaration {getattr(d, 'name', d)!r} has no macro-level logic")
    return net


def _undriven(e: str):
    raise ValueError(f"probe element {e!r} is not a macro-level signal")


def _macro_logic(net: LogicNet, c: Circuit, d: MacroDecl, ref: Callable[[str], int], sig: dict) -> None:
    if d.kind == "NOT":
        sig[d.name] = net.add("not", ref(d.args[0]))
    elif d.kind in ("AND", "CHAIN"):
        acc = ref(d.args[0])
        for a in d.args[1:]:
            acc = net.add("and", acc, ref(a))
        sig[d.name] = acc
    elif d.kind == "OR":
        sig[d.name] = net.add("or", ref(d.args[0]), ref(d.args[1]))
    elif d.kind == "XOR":
        sig[d.name] = net.add("xor", ref(d.args[0]), ref(d.args[1]))
    elif d.kind == "DELAY":
        src = ref(d.args[0])
        for e in c.resolve(d.name):
            sig[e] = src
    elif d.kind == "ADD":
        a_ids = [sig[e] for e in c.resolve(d.args[0])]
        b_ids = [sig[e] for e in c.resolve(d.args[1])]
        carry = ref(d.args[2]) if len(d.args) > 2 else net.add("const", 0)
        for i, (x, y) in enumerate(zip(a_ids, b_ids)):
            sig[c.resolve(d.name)[i]] = net.add("xor", net.add("xor", x, y), carry)
            # majority of the three
            carry = net.add("or", net.add("or", net.add("and", x, y), net.add("and", x, carry)),
                            net.add("and", y, carry))
        sig[f"{d.name}.cout"] = carry
    else:
        raise ValueError(f"unknown macro {d.kind!r}")


def int_add(a: int, b: int, width: int, carry_in: int = 0) -> tuple[tuple[int, ...], int]:
    """(a + b + carry_in) mod 2**width as LSB-first bits, and the carry out."""
    if width < 1:
        raise ValueError("width must be at least 1")
    for v in (a, b):
        if not 0 <= v < (1 << width):
            raise ValueError(f"operand {v} out of range for width {width}")
    if carry_in not in (0, 1):
        raise ValueError("carry_in must be 0 or 1")
    total = a + b + carry_in
    return tuple((total >> i) & 1 for i in range(width)), total >> width


Reference = Union[LogicNet, Callable[[dict[str, int]], Mapping[str, int | Sequence[int]]]]


@dataclass
class EquivalenceReport:
    cases: int
    mismatches: list[tuple[dict, dict, dict]]
    elapsed: float

    @property
    def ok(self) -> bool:
        return not self.mismatches


def lane_pattern(bit: int, lanes: int) -> int:
    """Mask of lanes ``k`` in ``range(lanes)`` whose bit ``bit`` is set."""
    if bit < 3:
        raw = bytes([(0xAA, 0xCC, 0xF0)[bit]]) * ((lanes + 7) // 8)
    else:
        half = 1 << (bit - 3)
        period = 1 << (bit + 1)
        raw = (b"\x00" * half + b"\xff" * half) * -(-lanes // period)
    return int.from_bytes(raw, "little") & ((1 << lanes) - 1)


def _unpack(mask: int, lanes: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((lanes + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:lanes].astype(np.int64)


def _as_int(v: int | Sequence[int]) -> int:
    if isinstance(v, (int, np.integer)):
        return int(v)
    return sum((b & 1) << i for i, b in enumerate(v))


def exhaustive_equivalence(c: Circuit, reference: Reference,
                           input_ports: Sequence[str] | None = None,
                           cycles: int | None = None) -> EquivalenceReport:
    """Simulate every assignment of ``input_ports`` and compare with ``reference``.

    All assignments run as lanes of one batched simulation.  Inputs are held
    for ``cycles`` machine cycles (default: the circuit's latency) and the
    probes of the last cycle are compared.  Only probes the reference
    reports are compared.
    """
    t0 = time.perf_counter()
    ports = list(c.inputs) if input_ports is None else list(input_ports)
    for p in ports:
        if p not in c.inputs:
            raise KeyError(f"unknown input port {p!r}")
    nbits = c.input_width(ports)
    if nbits > MAX_EQUIVALENCE_BITS:
        raise ValueError(f"{nbits} input bits exceed the exhaustive bound of {MAX_EQUIVALENCE_BITS}")
    lanes = 1 << nbits
    cycles = c.latency if cycles is None else cycles

    s = load(c, lanes=lanes, trace=False)
    vectors, offsets, off = {}, {}, 0
    for p in ports:
        w = c.inputs[p].width
        offsets[p] = (off, w)
        vectors[p] = [lane_pattern(off + i, lanes) for i in range(w)]
        off += w
    probes: dict[str, tuple[int, ...]] = {}
    for _ in range(cycles):
        probes = s.run_cycle(vectors)

    got = {}
    for name, masks in probes.items():
        v = np.zeros(lanes, dtype=np.int64)
        for i, m in enumerate(masks):
            v |= _unpack(m, lanes) << i
        got[name] = v

    evaluate = (lambda asg: eval_boolean(reference, asg)) if isinstance(reference, LogicNet) else reference
    expected: dict[str, np.ndarray] = {}
    for k in range(lanes):
        asg = {p: (k >> o) & ((1 << w) - 1) for p, (o, w) in offsets.items()}
        for name, v in evaluate(asg).items():
            if name not in expected:
                expected[name] = np.zeros(lanes, dtype=np.int64)
            expected[name][k] = _as_int(v)

    for name in expected:
        if name not in got:
            raise KeyError(f"reference output {name!r} is not a probe of {c.name!r}")
    bad = np.zeros(lanes, dtype=bool)
    for name, exp in expected.items():
        bad |= exp != got[name]
    mismatches = []
    for k in np.flatnonzero(bad):
        asg = {p: (int(k) >> o) & ((1 << w) - 1) for p, (o, w) in offsets.items()}
        mismatches.append((asg, {n: int(v[k]) for n, v in expected.items()},
                           {n: int(got[n][k]) for n in expected}))
    return EquivalenceReport(lanes, mismatches, time.perf_counter() - t0)


def adder_reference(width: int) -> Callable[[dict[str, int]], dict[str, int]]:
    """Reference for :func:`~mechrelay.netlist.macros.ripple_adder` probes."""
    def ref(asg: dict[str, int]) -> dict[str, int]:
        bits, carry = int_add(asg["a"], asg["b"], width, asg.get("cin", 0))
        return {"sum": _as_int(bits), "carry_out": carry}
    return ref
