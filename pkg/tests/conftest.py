"""Shared circuit builders for the test suite."""

import random
import sys
from pathlib import Path

from mechrelay.mech import Subcycle
from mechrelay.netlist import (
    Circuit,
    conjunction_chain,
    delay_line,
    gate_and,
    gate_not,
    gate_or,
    gate_xor,
    new_circuit,
)

I, II, III, IV = Subcycle.I, Subcycle.II, Subcycle.III, Subcycle.IV
CIRCUITS = Path(__file__).resolve().parent.parent / "circuits"

GATES = {"NOT": gate_not, "AND": gate_and, "OR": gate_or, "XOR": gate_xor}
TRUTH = {
    "NOT": lambda a, b=0: 1 - a,
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
}


def gate_circuit(kind: str, drive=I, in_phase=None) -> Circuit:
    """Inputs a (and b) set at ``in_phase`` feeding one gate ``q``; probe ``out``."""
    in_phase = drive.shift(-1) if in_phase is None else in_phase
    c = new_circuit(kind.lower(), origin=in_phase)
    a = c.add_input("a", in_phase).elements[0]
    if kind == "NOT":
        gate_not(c, a, drive, "q")
    else:
        b = c.add_input("b", in_phase).elements[0]
        GATES[kind](c, a, b, drive, "q")
    c.add_probe("out", ["q"], drive)
    return c


def random_macro_circuit(rng: random.Random, name: str = "rand") -> Circuit:
    """Layers of random gates at I, II, III over inputs set at IV, plus delay taps.

    Every gate reads only signals of the previous layer, so the result is
    legal by construction and at most three stages deep.
    """
    c = new_circuit(name)
    prev = []
    for i in range(rng.randint(1, 3)):
        prev += c.add_input(f"x{i}", IV, rng.randint(1, 2)).elements
    latency = 1
    for layer, drive in enumerate((I, II, III)[: rng.randint(1, 3)]):
        outs = []
        for j in range(rng.randint(1, 3)):
            g = f"g{layer}_{j}"
            kind = rng.choice(["NOT", "AND", "OR", "XOR", "CHAIN"])
            if kind == "NOT":
                gate_not(c, rng.choice(prev), drive, g)
            elif kind == "CHAIN":
                conjunction_chain(c, [rng.choice(prev) for _ in range(rng.randint(1, 4))], drive, g)
            else:
                GATES[kind](c, rng.choice(prev), rng.choice(prev), drive, g)
            c.add_probe(f"p_{g}", [g], drive)
            outs.append(g)
            if rng.random() < 0.3:
                n = rng.randint(0, 6)
                d = f"d{layer}_{j}"
                delay_line(c, g, n, drive.shift(1), d)
                # tick of the output within the machine cycle (origin IV is tick 0)
                end = drive.value + 1 + n
                c.add_probe(f"p_{d}", [d], drive.shift(n))
                latency = max(latency, end // 4 + 1)
        prev = outs
    c.latency = latency
    return c


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
