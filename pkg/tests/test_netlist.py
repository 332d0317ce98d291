import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import GATES, TRUTH, gate_circuit, random_macro_circuit
from mechrelay.engine import load
from mechrelay.mech import CouplingKind, Direction, DriveMode, LeverKind, Subcycle
from mechrelay.netlist import (
    MAX_DEPTH,
    HazardError,
    HazardKind,
    adder,
    adder_cell,
    conjunction_chain,
    delay_line,
    gate_and,
    gate_not,
    new_circuit,
    ripple_adder,
    validate,
)
from mechrelay.oracle import exhaustive_equivalence, logic_net

I, II, III, IV = Subcycle.I, Subcycle.II, Subcycle.III, Subcycle.IV
ONE, ZERO = CouplingKind.COUPLED_WHEN_ONE, CouplingKind.COUPLED_WHEN_ZERO


def out_of(c, **inputs):
    s = load(c)
    got = s.run_cycle({k: v for k, v in inputs.items()})
    return got["out"][0]


def kinds(hazards):
    return {h.kind for h in hazards}


# -- construction -------------------------------------------------------------

def test_new_circuit():
    c = new_circuit("adder8")
    assert c.name == "adder8"
    assert not c.elements and not c.relays
    assert validate(c) == []


def test_duplicate_name_rejected():
    c = new_circuit("dup")
    c.add_element("x", Direction.W)
    with pytest.raises(HazardError) as e:
        c.add_element("x", Direction.S)
    assert e.value.hazards[0].kind is HazardKind.DANGLING_REFERENCE
    c.add_input("a", I)
    with pytest.raises(HazardError):
        gate_not(c, "a[0]", II, "x")


def test_relay_ports_distinct():
    c = new_circuit("r")
    for n in "xyz":
        c.add_element(n, Direction.W)
    with pytest.raises(ValueError):
        c.add_relay("r", "x", "x", "y", ONE)


def test_unknown_reference():
    c = new_circuit("r")
    with pytest.raises(HazardError) as e:
        gate_not(c, "nowhere", I)
    assert e.value.hazards[0].kind is HazardKind.DANGLING_REFERENCE
    assert "nowhere" in e.value.hazards[0].message


# -- gate examples ------------------------------------------------------------

@pytest.mark.parametrize("a,want", [(0, 1), (1, 0)])
def test_not_examples(a, want):
    assert out_of(gate_circuit("NOT"), a=a) == want


@pytest.mark.parametrize("kind,a,b,want", [
    ("AND", 1, 1, 1), ("AND", 1, 0, 0), ("AND", 0, 0, 0),
    ("OR", 0, 1, 1), ("OR", 1, 1, 1), ("OR", 0, 0, 0),
    ("XOR", 1, 0, 1), ("XOR", 1, 1, 0), ("XOR", 0, 0, 0),
])
def test_binary_gate_examples(kind, a, b, want):
    assert out_of(gate_circuit(kind), a=a, b=b) == want


LEGAL_PLACEMENTS = [(d, d.shift(-1)) for d in Subcycle] + [(d, d) for d in Subcycle]


@pytest.mark.parametrize("kind", list(GATES))
@pytest.mark.parametrize("drive,in_phase", LEGAL_PLACEMENTS)
def test_gate_truth_tables_every_phase(kind, drive, in_phase):
    c = gate_circuit(kind, drive, in_phase)
    assert validate(c) == []
    ins = ["a"] if kind == "NOT" else ["a", "b"]
    for vals in itertools.product((0, 1), repeat=len(ins)):
        assert out_of(c, **dict(zip(ins, vals))) == TRUTH[kind](*vals)
    assert exhaustive_equivalence(c, logic_net(c)).ok


@pytest.mark.parametrize("kind", list(GATES))
def test_gate_too_late_is_setup_violation(kind):
    # inputs asserted one subcycle after the drive cannot be seen
    c = new_circuit("late", origin=I)
    a = c.add_input("a", II).elements[0]
    b = c.add_input("b", II).elements[0]
    args = (a,) if kind == "NOT" else (a, b)
    with pytest.raises(HazardError) as e:
        GATES[kind](c, *args, I, "q")
    assert kinds(e.value.hazards) == {HazardKind.SETUP_VIOLATION}
    assert "q" not in c.elements


def test_double_not_is_two_subcycle_delay():
    c = new_circuit("nn")
    x = c.add_input("x", IV).elements[0]
    n1 = gate_not(c, x, I, "n1")
    gate_not(c, n1, II, "n2")
    for v in (0, 1):
        s = load(c)
        s.run_cycle({"x": v})
        rise = {e.element: e.tick for e in s.trace if e.state == 1}
        if v:
            assert "n2" in rise and rise["n2"] == rise["x[0]"] + 2
        else:
            assert "n2" not in rise


# -- chains and delays --------------------------------------------------------

def chain_circuit(k):
    c = new_circuit(f"chain{k}")
    xs = c.add_input("x", IV, k).elements
    conjunction_chain(c, xs, I, "q")
    c.add_probe("out", ["q"], I)
    return c


def test_chain_100():
    c = chain_circuit(100)
    assert validate(c) == []
    s = load(c)
    assert s.run_cycle({"x": (1 << 100) - 1})["out"] == (1,)
    rise = [e for e in s.trace if e.element == "q" and e.state == 1]
    assert len(rise) == 1 and rise[0].subcycle is I
    for zero_at in (0, 57, 99):
        assert load(c).run_cycle({"x": ((1 << 100) - 1) ^ (1 << zero_at)})["out"] == (0,)


def test_chain_of_one_copies_after_one_subcycle():
    c = chain_circuit(1)
    s = load(c)
    s.run_cycle({"x": 1})
    rise = {e.element: e.tick for e in s.trace if e.state == 1}
    assert rise["q"] == rise["x[0]"] + 1


def test_delay_line_examples():
    c = new_circuit("d")
    x = c.add_input("x", IV).elements[0]
    assert delay_line(c, x, 0, I, "d0") == x
    assert c.resolve("d0") == (x,)
    d1 = delay_line(c, x, 1, I, "d1")
    d4 = delay_line(c, x, 4, I, "d4")
    assert validate(c) == []
    s = load(c)
    s.run_cycle({"x": 1})
    s.run_cycle({"x": 0})
    rise = {e.element: e.tick for e in s.trace if e.state == 1}
    assert rise[d1] == rise[x] + 1
    assert rise[d4] == rise[x] + 4


def test_delay_line_adds_no_depth():
    c = new_circuit("d")
    x = c.add_input("x", IV).elements[0]
    y = gate_and(c, x, x, I, "y")
    z = delay_line(c, y, 12, II, "z")
    gate_not(c, z, II, "w")  # z moves at I (tick 13), seen at II
    assert validate(c) == []


# -- adder --------------------------------------------------------------------

def cell_circuit():
    c = new_circuit("cell")
    a = c.add_input("a", IV).elements[0]
    b = c.add_input("b", I).elements[0]
    cin = c.add_input("cin", I).elements[0]
    ports = adder_cell(c, a, b, cin, "s")
    c.add_probe("d", [ports.d_i], III)
    c.add_probe("cout", [ports.c_out], II)
    return c


@pytest.mark.parametrize("a,b,cin,d,cout", [(1, 1, 0, 0, 1), (0, 0, 1, 1, 0), (0, 1, 0, 1, 0)])
def test_adder_cell_examples(a, b, cin, d, cout):
    got = load(cell_circuit()).run_cycle({"a": a, "b": b, "cin": cin})
    assert got["d"] == (d,) and got["cout"] == (cout,)


def test_adder_cell_validates():
    assert validate(cell_circuit()) == []


def test_ripple_adder_examples():
    c = new_circuit("adder4")
    ripple_adder(c, 4)
    got = load(c).run_cycle({"a": "1010", "b": "0110"})
    assert got["sum"] == (0, 0, 0, 0) and got["carry_out"] == (1,)
    c8 = new_circuit("adder8")
    ripple_adder(c8, 8)
    got = load(c8).run_cycle({"a": 0, "b": 0})
    assert got["sum"] == (0,) * 8 and got["carry_out"] == (0,)


def test_adder_rejects_late_operands():
    c = new_circuit("late")
    c.add_input("a", II, 2)
    c.add_input("b", I, 2)
    with pytest.raises(HazardError) as e:
        adder(c, "s", "a", "b")
    assert HazardKind.SETUP_VIOLATION in kinds(e.value.hazards)


# -- validator ----------------------------------------------------------------

def test_same_subcycle_control_is_setup_violation():
    c = new_circuit("same")
    x = c.add_input("x", IV).elements[0]
    y = gate_not(c, x, I, "y")
    gate_not(c, y, I, "z", check=False)
    hs = validate(c)
    assert kinds(hs) == {HazardKind.SETUP_VIOLATION}
    assert any("z/r0" in h.location for h in hs)


def test_four_stages_exceed_depth():
    # stages at II, III, IV, then I of the next pass
    c = new_circuit("deep", origin=I)
    x = c.add_input("x", I).elements[0]
    v = x
    for i, p in enumerate((II, III, IV, I)):
        v = gate_not(c, v, p, f"s{i}")
    hs = validate(c)
    assert kinds(hs) == {HazardKind.DEPTH_EXCEEDED}
    assert [h.location for h in hs] == [("s3/r0",)]
    assert MAX_DEPTH == 3


def test_three_stages_are_fine():
    c = new_circuit("d3", origin=I)
    v = c.add_input("x", I).elements[0]
    for i, p in enumerate((II, III, IV)):
        v = gate_not(c, v, p, f"s{i}")
    assert validate(c) == []


def _plates(c, names, d=Direction.W):
    for n in names:
        c.add_element(n, d)


def test_unrectified_multi_drive():
    c = new_circuit("md")
    a = c.add_input("a", IV).elements[0]
    _plates(c, ["clk", "q"])
    c.add_relay("r0", a, "clk", "q", ONE, drive=I)
    c.add_relay("r1", a, "clk", "q", ZERO, drive=I)
    hs = validate(c)
    assert HazardKind.UNRECTIFIED_MULTI_DRIVE in kinds(hs)


def test_pull_relay_may_not_feed_a_merge():
    c = new_circuit("pull")
    a = c.add_input("a", IV).elements[0]
    _plates(c, ["clk", "p", "q", "out"])
    c.add_relay("r0", a, "clk", "p", ONE, DriveMode.PULL, I)
    c.add_relay("r1", a, "clk", "q", ONE, DriveMode.PUSH, I)
    c.add_merge("m", ["p", "q"], "out")
    hs = validate(c)
    assert kinds(hs) == {HazardKind.UNRECTIFIED_MULTI_DRIVE}
    assert ("m", "r0") in [h.location for h in hs]


def test_direction_mismatch_and_lever():
    c = new_circuit("dir")
    a = c.add_input("a", IV).elements[0]
    c.add_element("clk", Direction.W)
    c.add_element("q", Direction.S)
    c.add_relay("r", a, "clk", "q", ONE, drive=I)
    assert kinds(validate(c)) == {HazardKind.DIRECTION_MISMATCH}

    c = new_circuit("lever")
    a = c.add_input("a", IV).elements[0]
    _plates(c, ["clk", "q"])
    c.add_element("qs", Direction.S)
    c.add_relay("r", a, "clk", "q", ONE, drive=I)
    c.add_lever("l", "q", "qs", LeverKind.ROTATE_CCW)
    assert validate(c) == []
    c.add_element("qn", Direction.N)
    c.add_lever("l2", "q", "qn", LeverKind.ROTATE_CCW)
    assert kinds(validate(c)) == {HazardKind.DIRECTION_MISMATCH}


def test_clock_pulse_direction_checked():
    c = new_circuit("pulse")
    a = c.add_input("a", IV).elements[0]
    c.add_element("clk", Direction.E)
    c.add_element("q", Direction.E)
    c.add_relay("r", a, "clk", "q", ONE, drive=I)
    assert kinds(validate(c)) == {HazardKind.DIRECTION_MISMATCH}


def test_undriven_actuator_is_dangling():
    c = new_circuit("float")
    a = c.add_input("a", IV).elements[0]
    _plates(c, ["m", "q"])
    c.add_relay("r", a, "m", "q", ONE)
    assert kinds(validate(c)) == {HazardKind.DANGLING_REFERENCE}


def test_mixed_phase_merge():
    c = new_circuit("mix")
    a = c.add_input("a", IV).elements[0]
    x = gate_not(c, a, I, "x")
    _plates(c, ["c1", "p1", "out"])
    _plates(c, ["c2", "p2"], Direction.S)
    c.add_relay("r1", a, "c1", "p1", ONE, drive=I)
    c.add_relay("r2", x, "c2", "p2", ONE, drive=II)
    c.add_merge("m", ["p1", "p2"], "out")
    hs = validate(c)
    assert any(h.kind is HazardKind.SETUP_VIOLATION and h.location[0] == "m" for h in hs)


def bad_circuits():
    out = []
    c = new_circuit("same")
    x = c.add_input("x", IV).elements[0]
    gate_not(c, gate_not(c, x, I, "y"), I, "z", check=False)
    out.append(c)
    c = new_circuit("deep", origin=I)
    v = c.add_input("x", I).elements[0]
    for i, p in enumerate((II, III, IV, I)):
        v = gate_not(c, v, p, f"s{i}")
    out.append(c)
    c = new_circuit("loop")
    _plates(c, ["clk", "p", "q"])
    c.add_input("a", IV)
    c.add_relay("r0", "q", "clk", "p", ZERO, drive=I)
    c.add_relay("r1", "p", "clk", "q", ZERO, drive=I)
    out.append(c)
    c = new_circuit("dir")
    a = c.add_input("a", IV).elements[0]
    c.add_element("clk", Direction.W)
    c.add_element("q", Direction.S)
    c.add_relay("r", a, "clk", "q", ONE, drive=I)
    c.add_relay("r2", a, "clk", "q", ZERO, drive=I)
    out.append(c)
    return out


@pytest.mark.parametrize("c", bad_circuits(), ids=lambda c: c.name)
def test_hazards_name_existing_entities(c):
    hs = validate(c)
    assert hs
    for h in hs:
        assert h.location and any(n in c.entities() for n in h.location)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_macro_circuits_are_clean(seed):
    c = random_macro_circuit(random.Random(seed))
    assert validate(c) == []
    # every generated part lives under the name of the macro that made it
    tops = {d.name for d in c.decls}
    for n in c.elements:
        assert n.split("/")[0].split("[")[0] in tops
    assert exhaustive_equivalence(c, logic_net(c)).ok
