"""Static timing legality of a circuit.

Within a tick the engine retracts, then asserts clock and input plates, then
samples every relay's coupling, then propagates motion.  From that order:

* an asserted plate (input bit or clock-driven actuator) moving at ``p`` is
  visible to relays sampling at ``p`` and ``p+1``;
* a plate moved by propagation at ``p`` (relay output, merge target, lever
  target) is visible only at ``p+1``, since it retracts at ``p+2``.

A relay driven at ``p`` is legal when its control is visible at ``p``.
"""

from __future__ import annotations

import math
from typing import Iterable

from ..mech import DriveMode, Subcycle, apply_lever
from .circuit import Circuit, ElementId, Hazard, HazardKind, Relay

MAX_DEPTH = 3

_ALL = frozenset(Subcycle)


class Timing:
    """Driver, phase, visibility and depth analysis of one circuit snapshot."""

    def __init__(self, c: Circuit):
        self.c = c
        self.drivers: dict[ElementId, list[tuple[str, object]]] = {e: [] for e in c.elements}
        for port in c.inputs.values():
            for e in port.elements:
                self.drivers[e].append(("input", port))
        clocked: dict[ElementId, set[Subcycle]] = {}
        for r in c.relays.values():
            self.drivers[r.actuated].append(("relay", r))
            if r.drive is not None:
                clocked.setdefault(r.actuator, set()).add(r.drive)
        for e, phases in clocked.items():
            for p in sorted(phases):
                self.drivers[e].append(("clock", p))
        for m in c.merges.values():
            self.drivers[m.target].append(("merge", m))
        for l in c.levers.values():
            self.drivers[l.target].append(("lever", l))
        self._phase: dict[ElementId, Subcycle | None] = {}
        self._depth: dict[ElementId, float] = {}
        self._relay_depth: dict[str, float] = {}

    def driver(self, e: ElementId) -> tuple[str, object] | None:
        ds = self.drivers.get(e)
        return ds[0] if ds else None

    def motion_phase(self, e: ElementId) -> Subcycle | None:
        """Subcycle at which ``e`` moves, or None if nothing ever moves it."""
        if e in self._phase:
            return self._phase[e]
        self._phase[e] = None  # guards zero-delay motion loops
        d = self.driver(e)
        p: Subcycle | None = None
        if d is None:
            p = None
        elif d[0] == "input":
            p = d[1].phase
        elif d[0] == "clock":
            p = d[1]
        elif d[0] == "relay":
            p = self.motion_phase(d[1].actuator)
        elif d[0] == "merge":
            phases = [self.motion_phase(s) for s in d[1].sources]
            known = [q for q in phases if q is not None]
            p = known[0] if known else None
        elif d[0] == "lever":
            p = self.motion_phase(d[1].source)
        self._phase[e] = p
        return p

    def stage_phase(self, r: Relay) -> Subcycle | None:
        return r.drive if r.drive is not None else self.motion_phase(r.actuator)

    def visible(self, e: ElementId) -> frozenset[Subcycle]:
        """Subcycles at which a relay sampling ``e`` can see it moved."""
        d = self.driver(e)
        p = self.motion_phase(e)
        if d is None or p is None:
            return _ALL  # never moves: a constant rest position
        if d[0] in ("input", "clock"):
            return frozenset({p, p.shift(1)})
        return frozenset({p.shift(1)})

    def depth(self, e: ElementId) -> float:
        """Dependent relay stages behind ``e`` since the last cycle boundary."""
        if e in self._depth:
            return self._depth[e]
        self._depth[e] = math.inf  # a loop without a boundary never settles
        d = self.driver(e)
        if d is None or d[0] in ("input", "clock"):
            v: float = 0
        elif d[0] == "relay":
            v = self.relay_depth(d[1])
        elif d[0] == "merge":
            v = max(self.depth(s) for s in d[1].sources)
        else:
            v = self.depth(d[1].source)
        self._depth[e] = v
        return v

    def relay_depth(self, r: Relay) -> float:
        if r.name in self._relay_depth:
            return self._relay_depth[r.name]
        self._relay_depth[r.name] = math.inf
        if r.crossing:
            v: float = 0
        else:
            v = max(1 + self.depth(r.control), self.depth(r.actuator))
        self._relay_depth[r.name] = v
        return v


def setup_hazard(t: Timing, control: ElementId, drive: Subcycle, who: str) -> Hazard | None:
    if drive in t.visible(control):
        return None
    seen = ", ".join(str(p) for p in sorted(t.visible(control))) or "never"
    return Hazard(
        HazardKind.SETUP_VIOLATION, (who, control),
        f"control {control!r} is not set when {who!r} is driven at {drive} (visible at {seen})")


def validate(c: Circuit) -> list[Hazard]:
    """Every timing, drive, direction and reference hazard in ``c``."""
    t = Timing(c)
    hazards: list[Hazard] = []
    hazards += _references(c)
    hazards += _multi_drive(c, t)
    hazards += _directions(c)
    hazards += _setup(c, t)
    hazards += _depth(c, t)
    return hazards


def _references(c: Circuit) -> Iterable[Hazard]:
    known = c.elements
    for r in c.relays.values():
        for e in (r.control, r.actuator, r.actuated):
            if e not in known:
                yield Hazard(HazardKind.DANGLING_REFERENCE, (r.name,), f"relay {r.name!r} refers to unknown {e!r}")
    for m in c.merges.values():
        for e in (*m.sources, m.target):
            if e not in known:
                yield Hazard(HazardKind.DANGLING_REFERENCE, (m.name,), f"merge {m.name!r} refers to unknown {e!r}")
    for l in c.levers.values():
        for e in (l.source, l.target):
            if e not in known:
                yield Hazard(HazardKind.DANGLING_REFERENCE, (l.name,), f"lever {l.name!r} refers to unknown {e!r}")
    for p in c.probes.values():
        for e in p.elements:
            if e not in known:
                yield Hazard(HazardKind.DANGLING_REFERENCE, (p.name,), f"probe {p.name!r} refers to unknown {e!r}")


def _multi_drive(c: Circuit, t: Timing) -> Iterable[Hazard]:
    for e, ds in t.drivers.items():
        if len(ds) > 1:
            names = [getattr(obj, "name", str(obj)) for _, obj in ds]
            yield Hazard(
                HazardKind.UNRECTIFIED_MULTI_DRIVE, (e, *[n for n in names if n in c.entities()]),
                f"{e!r} has {len(ds)} drivers ({', '.join(f'{k} {n}' for (k, _), n in zip(ds, names))}) "
                "and no rectified merge")
    for m in c.merges.values():
        for s in m.sources:
            d = t.driver(s)
            if d and d[0] == "relay" and d[1].mode is DriveMode.PULL:
                yield Hazard(
                    HazardKind.UNRECTIFIED_MULTI_DRIVE, (m.name, d[1].name),
                    f"pull relay {d[1].name!r} feeds rectified merge {m.name!r}; only push relays rectify")
    for r in c.relays.values():
        if r.actuator in c.elements and t.driver(r.actuator) is None:
            yield Hazard(
                HazardKind.DANGLING_REFERENCE, (r.name, r.actuator),
                f"actuator {r.actuator!r} of {r.name!r} is neither clock-driven nor chained")


def _directions(c: Circuit) -> Iterable[Hazard]:
    el = c.elements

    def dir_of(e):
        return el[e].direction if e in el else None

    for r in c.relays.values():
        a, b = dir_of(r.actuator), dir_of(r.actuated)
        if a and b and a is not b:
            yield Hazard(
                HazardKind.DIRECTION_MISMATCH, (r.name, r.actuator, r.actuated),
                f"{r.name!r} moves {r.actuator!r} ({a.value}) onto {r.actuated!r} ({b.value}) without a lever")
        if r.drive is not None and a and a is not c.pulse_direction(r.drive):
            pulse = c.pulse_direction(r.drive)
            yield Hazard(
                HazardKind.DIRECTION_MISMATCH, (r.name, r.actuator),
                f"{r.name!r} is driven at {r.drive} (pulse {pulse.value}) but {r.actuator!r} moves {a.value}")
    for m in c.merges.values():
        tgt = dir_of(m.target)
        for s in m.sources:
            if tgt and dir_of(s) and dir_of(s) is not tgt:
                yield Hazard(
                    HazardKind.DIRECTION_MISMATCH, (m.name, s, m.target),
                    f"merge {m.name!r}: {s!r} moves {dir_of(s).value}, target moves {tgt.value}")
    for l in c.levers.values():
        src, tgt = dir_of(l.source), dir_of(l.target)
        if src and tgt and apply_lever(src, l.kind) is not tgt:
            yield Hazard(
                HazardKind.DIRECTION_MISMATCH, (l.name, l.source, l.target),
                f"lever {l.name!r} ({l.kind.value}) turns {src.value} into "
                f"{apply_lever(src, l.kind).value}, not {tgt.value}")


def _setup(c: Circuit, t: Timing) -> Iterable[Hazard]:
    for r in c.relays.values():
        if r.control not in c.elements or r.actuator not in c.elements:
            continue
        p = t.stage_phase(r)
        if p is None:
            continue
        h = setup_hazard(t, r.control, p, r.name)
        if h:
            yield h
    for m in c.merges.values():
        phases = {t.motion_phase(s) for s in m.sources if s in c.elements} - {None}
        if len(phases) > 1:
            yield Hazard(
                HazardKind.SETUP_VIOLATION, (m.name, *m.sources),
                f"merge {m.name!r} sources move at different subcycles "
                f"({', '.join(str(p) for p in sorted(phases))})")


def _depth(c: Circuit, t: Timing) -> Iterable[Hazard]:
    for r in c.relays.values():
        if r.control not in c.elements or r.actuator not in c.elements:
            continue
        d = t.relay_depth(r)
        if d > MAX_DEPTH:
            shown = "unbounded (feedback without a delay stage)" if math.isinf(d) else str(int(d))
            yield Hazard(
                HazardKind.DEPTH_EXCEEDED, (r.name,),
                f"{r.name!r} is dependent stage {shown} within one machine cycle (limit {MAX_DEPTH})")
