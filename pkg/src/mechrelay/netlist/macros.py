"""Gate macros expanded into relays.

Every macro builds its own clock-driven actuator plate(s) and names its
internal parts ``<name>/<part>``.  The macro's output element carries the
macro name itself.  With ``check=True`` (the default) a control that cannot
be seen at the drive subcycle raises :class:`HazardError` before anything is
added; the NDL elaborator passes ``check=False`` and collects every hazard
from :func:`validate` afterwards instead.
"""

from __future__ import annotations

from typing import Sequence

from ..mech import CouplingKind, DriveMode, Subcycle
from .circuit import (
    AdderCellPorts,
    Circuit,
    ElementId,
    Hazard,
    HazardError,
    HazardKind,
    MacroDecl,
    Probe,
)
from .validate import MAX_DEPTH, Timing, setup_hazard

ONE = CouplingKind.COUPLED_WHEN_ONE
ZERO = CouplingKind.COUPLED_WHEN_ZERO


def _precheck(c: Circuit, name: str, controls: Sequence[ElementId], drive: Subcycle) -> None:
    for x in controls:
        c.resolve_bit(x)
    t = Timing(c)
    hazards = [h for x in controls if (h := setup_hazard(t, x, drive, name))]
    if hazards:
        raise HazardError(hazards)


def _clock(c: Circuit, name: str, drive: Subcycle) -> ElementId:
    return c._element(name, c.pulse_direction(drive))


def _plate(c: Circuit, name: str, drive: Subcycle) -> ElementId:
    return c._element(name, c.pulse_direction(drive))


def gate_not(c: Circuit, x: ElementId, drive: Subcycle, name: str | None = None,
             check: bool = True) -> ElementId:
    """NOT ``x`` at the end of ``drive``: one negating relay."""
    name = name or c.fresh("not")
    if check:
        _precheck(c, name, [x], drive)
    with c.macro(MacroDecl("NOT", name, (x,), drive)):
        clk = _clock(c, f"{name}/clk", drive)
        out = _plate(c, name, drive)
        c.add_relay(f"{name}/r0", x, clk, out, ZERO, drive=drive)
    return out


def conjunction_chain(c: Circuit, xs: Sequence[ElementId], drive: Subcycle,
                      name: str | None = None, check: bool = True,
                      _kind: str = "CHAIN") -> ElementId:
    """AND of all ``xs`` as relays in series carrying one actuator motion.

    The whole chain moves within the single subcycle ``drive`` whatever its
    length.
    """
    if not xs:
        raise ValueError("conjunction chain needs at least one input")
    name = name or c.fresh("chain")
    if check:
        _precheck(c, name, xs, drive)
    with c.macro(MacroDecl(_kind, name, tuple(xs), drive)):
        prev = _clock(c, f"{name}/clk", drive)
        for i, x in enumerate(xs):
            last = i == len(xs) - 1
            nxt = _plate(c, name if last else f"{name}/m{i}", drive)
            c.add_relay(f"{name}/r{i}", x, prev, nxt, ONE, drive=drive if i == 0 else None)
            prev = nxt
    return prev


def gate_and(c: Circuit, a: ElementId, b: ElementId, drive: Subcycle,
             name: str | None = None, check: bool = True) -> ElementId:
    name = name or c.fresh("and")
    return conjunction_chain(c, [a, b], drive, name, check, _kind="AND")


def gate_or(c: Circuit, a: ElementId, b: ElementId, drive: Subcycle,
            name: str | None = None, check: bool = True) -> ElementId:
    """OR: two push relays on one clock plate, rectified onto the output."""
    name = name or c.fresh("or")
    if check:
        _precheck(c, name, [a, b], drive)
    with c.macro(MacroDecl("OR", name, (a, b), drive)):
        clk = _clock(c, f"{name}/clk", drive)
        sa = _plate(c, f"{name}/a", drive)
        sb = _plate(c, f"{name}/b", drive)
        out = _plate(c, name, drive)
        c.add_relay(f"{name}/r0", a, clk, sa, ONE, DriveMode.PUSH, drive)
        c.add_relay(f"{name}/r1", b, clk, sb, ONE, DriveMode.PUSH, drive)
        c.add_merge(f"{name}/rect", [sa, sb], out)
    return out


def gate_xor(c: Circuit, a: ElementId, b: ElementId, drive: Subcycle,
             name: str | None = None, check: bool = True) -> ElementId:
    """XOR: two series pairs with opposite rest couplings, rectified together.

    One pair passes motion when a=1, b=0; the other when a=0, b=1.
    """
    name = name or c.fresh("xor")
    if check:
        _precheck(c, name, [a, b], drive)
    with c.macro(MacroDecl("XOR", name, (a, b), drive)):
        clk = _clock(c, f"{name}/clk", drive)
        m0 = _plate(c, f"{name}/m0", drive)
        m1 = _plate(c, f"{name}/m1", drive)
        p0 = _plate(c, f"{name}/p0", drive)
        p1 = _plate(c, f"{name}/p1", drive)
        out = _plate(c, name, drive)
        c.add_relay(f"{name}/r0", a, clk, m0, ONE, drive=drive)
        c.add_relay(f"{name}/r1", b, m0, p0, ZERO)
        c.add_relay(f"{name}/r2", a, clk, m1, ZERO, drive=drive)
        c.add_relay(f"{name}/r3", b, m1, p1, ONE)
        c.add_merge(f"{name}/rect", [p0, p1], out)
    return out


def delay_line(c: Circuit, x: ElementId, n: int, start: Subcycle,
               name: str | None = None, check: bool = True) -> ElementId:
    """Carry ``x`` forward ``n`` subcycles through relays driven at start, start+1, ...

    The stages are cycle-boundary relays: they hold a value, they add no
    logic depth.  ``n == 0`` returns ``x`` (bound to ``name`` as an alias).
    """
    if n < 0:
        raise ValueError("delay must be non-negative")
    name = name or c.fresh("delay")
    if check:
        _precheck(c, name, [x], start)
    with c.macro(MacroDecl("DELAY", name, (x,), start, n=n)):
        if n == 0:
            c.add_bus(name, (x,))
            return x
        prev = x
        for j in range(n):
            phase = start.shift(j)
            clk = _clock(c, f"{name}/clk{j}", phase)
            out = _plate(c, name if j == n - 1 else f"{name}/s{j}", phase)
            c.add_relay(f"{name}/r{j}", prev, clk, out, ONE, drive=phase, crossing=True)
            prev = out
    return prev


def _cell(c: Circuit, name: str, a: ElementId, b: ElementId, carry: ElementId | None,
          c_out: str, d_out: str) -> AdderCellPorts:
    """Three-stage cell; ``carry`` is a plate that moves during subcycle II."""
    I, II, III = Subcycle.I, Subcycle.II, Subcycle.III
    both = gate_and(c, a, b, I, f"{name}/and", check=False)
    either = gate_or(c, a, b, I, f"{name}/or", check=False)
    # stage II: generate from both, propagate the incoming carry motion through either
    clk2 = _clock(c, f"{name}/clk2", II)
    if carry is None:
        cout = _plate(c, c_out, II)
        c.add_relay(f"{name}/gen", both, clk2, cout, ONE, drive=II)
    else:
        g = _plate(c, f"{name}/g", II)
        p = _plate(c, f"{name}/p", II)
        cout = _plate(c, c_out, II)
        c.add_relay(f"{name}/gen", both, clk2, g, ONE, DriveMode.PUSH, II)
        c.add_relay(f"{name}/prop", either, carry, p, ONE, DriveMode.PUSH)
        c.add_merge(f"{name}/carry", [g, p], cout)
    # half sum at II: either AND NOT both
    m = _plate(c, f"{name}/hm", II)
    half = _plate(c, f"{name}/half", II)
    c.add_relay(f"{name}/h0", either, clk2, m, ONE, drive=II)
    c.add_relay(f"{name}/h1", both, m, half, ZERO)
    # stage III: d = half XOR carry
    if carry is None:
        d = conjunction_chain(c, [half], III, d_out, check=False)
    else:
        d = gate_xor(c, half, carry, III, d_out, check=False)
    return AdderCellPorts(a, b, carry, cout, d)


def _check_cell_inputs(c: Circuit, name: str, a: ElementId, b: ElementId,
                       level_carry: ElementId | None) -> None:
    t = Timing(c)
    hazards = [h for x in (a, b) if (h := setup_hazard(t, x, Subcycle.I, name))]
    if level_carry is not None and (h := setup_hazard(t, level_carry, Subcycle.II, name)):
        hazards.append(h)
    for x in (a, b) + ((level_carry,) if level_carry else ()):
        if t.depth(x) > 0:
            hazards.append(Hazard(
                HazardKind.DEPTH_EXCEEDED, (name, x),
                f"{x!r} is already {int(t.depth(x))} stage(s) deep; the cell needs "
                f"{MAX_DEPTH} more within the cycle"))
    if hazards:
        raise HazardError(hazards)


def adder_cell(c: Circuit, a: ElementId, b: ElementId, c_in: ElementId | None = None,
               name: str | None = None, check: bool = True) -> AdderCellPorts:
    """One column of the adder: a width-1 :func:`adder`.

    ``a`` set at IV, ``b`` at I, the carry level ``c_in`` by II.  Stage I
    forms AND/OR, stage II the outgoing carry (valid at the end of II), stage
    III the sum bit (valid at the end of III).
    """
    name = name or c.fresh("cell")
    (d,), cout = adder(c, name, a, b, c_in, check)
    return AdderCellPorts(a, b, c_in, cout, d)


def adder(c: Circuit, name: str, a: str, b: str, c_in: str | None = None,
          check: bool = True) -> tuple[tuple[ElementId, ...], ElementId]:
    """Ripple adder over buses ``a`` and ``b``; optional one-bit carry-in ``c_in``.

    The carry travels across all columns within subcycle II as one
    zero-delay chain, so the latency does not depend on the width.  Returns
    the sum bus ``name`` and the carry-out element ``<name>.cout``.
    """
    abus, bbus = c.resolve(a), c.resolve(b)
    if len(abus) != len(bbus):
        raise ValueError(f"adder {name!r}: operand widths differ ({len(abus)} vs {len(bbus)})")
    cin_elem = c.resolve_bit(c_in) if c_in is not None else None
    width = len(abus)
    if check:
        for i in range(width):
            _check_cell_inputs(c, name, abus[i], bbus[i], cin_elem if i == 0 else None)
    args = (a, b) if c_in is None else (a, b, c_in)
    with c.macro(MacroDecl("ADD", name, args, width=width)):
        carry = None
        if cin_elem is not None:
            carry = conjunction_chain(c, [cin_elem], Subcycle.II, f"{name}/cin", check=False)
        sums = []
        for i in range(width):
            cout_name = f"{name}.cout" if i == width - 1 else f"{name}/c{i}/cout"
            ports = _cell(c, f"{name}/c{i}", abus[i], bbus[i], carry, cout_name, f"{name}[{i}]")
            sums.append(ports.d_i)
            carry = ports.c_out
        c.add_bus(name, sums)
    return tuple(sums), carry


def ripple_adder(c: Circuit, width: int, name: str = "s") -> tuple[Probe, Probe]:
    """Complete adder: inputs ``a`` (IV), ``b`` (I), ``cin`` (I); probes ``sum`` and ``carry_out``."""
    if width < 1:
        raise ValueError("adder width must be at least 1")
    c.add_input("a", Subcycle.IV, width)
    c.add_input("b", Subcycle.I, width)
    c.add_input("cin", Subcycle.I, 1)
    adder(c, name, "a", "b", "cin")
    total = c.add_probe("sum", [name], Subcycle.III)
    carry = c.add_probe("carry_out", [f"{name}.cout"], Subcycle.II)
    return total, carry
