"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, and by ``python tests/test_acceptance.py``.
"""

import csv
import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import CIRCUITS, TRUTH, gate_circuit, random_macro_circuit  # noqa: E402
from mechrelay.cli import main as cli_main  # noqa: E402
from mechrelay.engine import Cause, load  # noqa: E402
from mechrelay.mech import Subcycle  # noqa: E402
from mechrelay.ndl import ElaborationError, ParseError, elaborate, emit, parse  # noqa: E402
from mechrelay.netlist import (  # noqa: E402
    HazardKind,
    Timing,
    adder,
    conjunction_chain,
    delay_line,
    gate_not,
    new_circuit,
    ripple_adder,
    validate,
)
from mechrelay.oracle import adder_reference, exhaustive_equivalence, int_add  # noqa: E402

I, II, III, IV = Subcycle.I, Subcycle.II, Subcycle.III, Subcycle.IV

RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    print(RESULTS[-1])
    assert ok, detail


def test_gate_truth_tables():
    t0 = time.perf_counter()
    bad, cases = [], 0
    for kind in ("NOT", "AND", "OR", "XOR"):
        c = gate_circuit(kind)
        ins = ["a"] if kind == "NOT" else ["a", "b"]
        for vals in itertools.product((0, 1), repeat=len(ins)):
            got = load(c).run_cycle(dict(zip(ins, vals)))["out"][0]
            cases += 1
            if got != TRUTH[kind](*vals):
                bad.append((kind, vals, got))
    dt = time.perf_counter() - t0
    record("gate truth tables", not bad and dt < 1.0,
           f"{cases} cases, {len(bad)} mismatches, {dt:.3f} s (limit 1 s)")


def test_adder_cell_case_rules():
    c = new_circuit("cell")
    c.add_input("a", IV)
    c.add_input("b", I)
    c.add_input("cin", I)
    adder(c, "s", "a", "b", "cin")
    c.add_probe("d", ["s"], III)
    c.add_probe("cout", ["s.cout"], II)
    bad = []
    for a, b, cin in itertools.product((0, 1), repeat=3):
        # carry out: generated by (1,1), or by a mixed pair with an active carry
        cout = int((a, b) == (1, 1) or ((a, b) in ((0, 1), (1, 0)) and cin == 1))
        # sum: equal pairs need a carry, mixed pairs need no carry
        d = cin if a == b else 1 - cin
        got = load(c).run_cycle({"a": a, "b": b, "cin": cin})
        if got != {"d": (d,), "cout": (cout,)}:
            bad.append(((a, b, cin), got))
    record("adder cell case rules", not bad, f"8 combinations, {len(bad)} mismatches")


def test_ripple_adder_exhaustive():
    t0 = time.perf_counter()
    total, mism, per = 0, 0, []
    for w in range(1, 9):
        c = new_circuit(f"adder{w}")
        ripple_adder(c, w)
        r = exhaustive_equivalence(c, adder_reference(w))
        assert r.cases == 2 ** (2 * w + 1)
        total += r.cases
        mism += len(r.mismatches)
        per.append(f"w{w}:{r.cases}")
    dt = time.perf_counter() - t0
    record("ripple adder widths 1-8", mism == 0 and dt < 60 and per[-1] == "w8:131072",
           f"{total} cases ({per[-1]}), {mism} mismatches, {dt:.2f} s (limit 60 s)")


def test_depth_three_law():
    rng = random.Random(3)
    problems = []
    for w in range(1, 9):
        c = new_circuit(f"adder{w}")
        ripple_adder(c, w)
        t = Timing(c)
        depth = max(t.relay_depth(r) for r in c.relays.values())
        if depth != 3:
            problems.append(f"width {w} depth {depth}")
        for _ in range(4):
            a, b, cin = rng.getrandbits(w), rng.getrandbits(w), rng.getrandbits(1)
            s = load(c)
            got = s.run_cycle({"a": a, "b": b, "cin": cin})
            bits, carry = int_add(a, b, w, cin)
            last = max((e.tick for e in s.trace if e.element.startswith("s[") and e.state == 1), default=None)
            if got["sum"] != bits or got["carry_out"] != (carry,):
                problems.append(f"width {w}: {a}+{b}+{cin} wrong after one cycle")
            if last is not None and (last >= 4 or s.subcycle_at(last) is not III):
                problems.append(f"width {w}: sum bit settled at tick {last}")
    deep = new_circuit("deep", origin=I)
    v = deep.add_input("x", I).elements[0]
    for i, p in enumerate((II, III, IV, I)):
        v = gate_not(deep, v, p, f"s{i}")
    rejected = {h.kind for h in validate(deep)} == {HazardKind.DEPTH_EXCEEDED}
    if not rejected:
        problems.append("four-stage chain not rejected")
    record("depth-3 law", not problems,
           "sum valid at end of III in cycle 0 for widths 1-8, depth 3 each; "
           f"4-stage chain rejected={rejected}" + (f"; {problems[:3]}" if problems else ""))


def test_timing_discipline():
    rng = random.Random(1000)
    bad_hold, bad_rtz, events = 0, 0, 0
    for k in range(1000):
        c = random_macro_circuit(random.Random(rng.getrandbits(32)), f"r{k}")
        assert validate(c) == []
        s = load(c)
        for _ in range(3):
            s.run_cycle({p: rng.getrandbits(port.width) for p, port in c.inputs.items()})
            if not s.check_return_to_zero():
                bad_rtz += 1
        falls = {(e.tick, e.element) for e in s.trace if e.cause is Cause.RETRACTION}
        rise_at = {}
        for e in s.trace:
            if e.state == 1:
                events += 1
                rise_at[e.element] = e.tick
                if e.tick + 2 < s.tick and (e.tick + 2, e.element) not in falls:
                    bad_hold += 1
            elif e.tick - rise_at.get(e.element, -99) != 2:
                bad_hold += 1
    record("timing discipline", bad_hold == 0 and bad_rtz == 0,
           f"1000 circuits, {events} drives, {bad_hold} bad retractions, {bad_rtz} return-to-zero failures")


def test_zero_delay_chains():
    ticks, bad = set(), 0
    for k in range(1, 11):
        c = new_circuit(f"chain{k}")
        xs = c.add_input("x", IV, k).elements
        conjunction_chain(c, xs, I, "q")
        c.add_probe("out", ["q"], I)
        s = load(c)
        s.run_cycle({"x": (1 << k) - 1})
        drive = [e.tick for e in s.trace if e.cause is Cause.CLOCK_DRIVE]
        rise = [e.tick for e in s.trace if e.element == "q" and e.state == 1]
        if rise != drive:
            bad += 1
        ticks.update(rise)
        r = exhaustive_equivalence(c, lambda asg, k=k: {"out": int(asg["x"] == (1 << k) - 1)})
        bad += len(r.mismatches)
    record("zero-delay chains", bad == 0 and ticks == {1},
           f"lengths 1-10 rise at drive tick {sorted(ticks)}, {bad} failures")


def test_delay_line():
    rng = random.Random(12)
    bad = 0
    for n in range(13):
        for _ in range(5):
            bits = [rng.getrandbits(1) for _ in range(16)]
            c = new_circuit(f"delay{n}")
            x = c.add_input("x", IV).elements[0]
            y = delay_line(c, x, n, I, "y")
            s = load(c)
            xs, ys = [], []
            for b in bits:
                s.set_input_vector("x", b)
                for _ in range(4):
                    s.step()
                    xs.append(s.state_of(x))
                    ys.append(s.state_of(y))
            bad += sum(ys[t] != (xs[t - n] if t >= n else 0) for t in range(len(xs)))
    record("delay line", bad == 0, f"n=0..12, 65 random 16-cycle sequences, {bad} mismatched ticks")


def test_clock_constant(tmp_path, capsys):
    spacings = {}
    for hz in (5, 10, 2.5, 1):
        path = tmp_path / f"t{hz}.csv"
        code = cli_main(["run", str(CIRCUITS / "adder4.ndl"), "--input", "a=1010", "--input", "b=0110",
                         "--cycles", "3", "--trace", str(path), "--hz", str(hz)])
        assert code == 0
        rows = list(csv.DictReader(path.open()))
        stamps = sorted({(int(r["tick"]), float(r["sim_time_s"])) for r in rows})
        spacings[hz] = max(abs(t - tick / (4 * hz)) for tick, t in stamps)
        consecutive = [(b[1] - a[1]) / (b[0] - a[0]) for a, b in zip(stamps, stamps[1:])]
        spacings[hz] = max(spacings[hz], max(abs(d - 1 / (4 * hz)) for d in consecutive))
    capsys.readouterr()
    ok = all(err < 1e-3 for err in spacings.values())
    record("clock constant", ok, "5 Hz ticks 0.050 s apart; --hz 10/2.5/1 give 0.025/0.100/0.250 s "
           f"(max deviation {max(spacings.values()):.4f} s)")


def _fuzz_inputs(rng: random.Random, count: int):
    """Uniform random bytes, bytes over NDL's alphabet, and corpus files with a few bytes changed."""
    alphabet = (b"circuit input gate relay probe vectors adder delay rect lever element "
                b"NOT AND OR XOR CHAIN ADD I II III IV W S E N = ( ) , [ ] -> 0 1 # \n\t\r")
    corpus = [p.read_bytes() for p in sorted(CIRCUITS.glob("*.ndl"))]
    for i in range(count):
        n = rng.randint(0, 80)
        if i % 3 == 0:
            yield bytes(rng.getrandbits(8) for _ in range(n))
        elif i % 3 == 1:
            yield bytes(rng.choice(alphabet) for _ in range(n))
        else:
            buf = bytearray(rng.choice(corpus))
            for _ in range(rng.randint(0, 3)):
                at = rng.randrange(len(buf))
                if rng.random() < 0.5:
                    buf[at] = rng.getrandbits(8)
                else:
                    del buf[at]
            yield bytes(buf)


def test_parser_totality():
    rng = random.Random(10 ** 5)
    asts = errors = crashes = 0
    for raw in _fuzz_inputs(rng, 10 ** 5):
        text = raw.decode("latin-1")
        try:
            parse(text)
            asts += 1
        except ParseError:
            errors += 1
        except Exception:  # noqa: BLE001 - counting crashes is the point
            crashes += 1
    corpus = []
    for p in sorted(CIRCUITS.glob("*.ndl")):
        try:
            corpus.append(elaborate(parse(p.read_text())))
        except (ParseError, ElaborationError):
            pass  # the deliberately broken and hazardous files
    for w in range(1, 9):
        c = new_circuit(f"adder{w}")
        ripple_adder(c, w)
        corpus.append(c)
    corpus += [random_macro_circuit(random.Random(s), f"r{s}") for s in range(200)]
    trips = sum(elaborate(parse(emit(c))).structure() == c.structure() for c in corpus)
    record("parser totality and round trip", crashes == 0 and trips == len(corpus),
           f"10^5 fuzz inputs: {asts} ASTs, {errors} ParseErrors, {crashes} crashes; "
           f"round trip {trips}/{len(corpus)} circuits")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
