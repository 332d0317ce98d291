"""Circuit graph: plates, relays, rectified merges, levers, input ports, probes."""

from __future__ import annotations

import contextlib
import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..mech import (
    DEFAULT_PULSE_DIRECTIONS,
    CouplingKind,
    Direction,
    DriveMode,
    LeverKind,
    Subcycle,
)

ElementId = str

_INDEXED = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*)\[(\d+)\]$")


class HazardKind(enum.Enum):
    SETUP_VIOLATION = "SetupViolation"
    DEPTH_EXCEEDED = "DepthExceeded"
    UNRECTIFIED_MULTI_DRIVE = "UnrectifiedMultiDrive"
    DIRECTION_MISMATCH = "DirectionMismatch"
    DANGLING_REFERENCE = "DanglingReference"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Hazard:
    kind: HazardKind
    location: tuple[str, ...]
    message: str
    span: object = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.kind}: {self.message} [{', '.join(self.location)}]"


class HazardError(Exception):
    """Raised when construction or loading meets one or more hazards."""

    def __init__(self, hazards: Sequence[Hazard]):
        self.hazards = list(hazards)
        super().__init__("; ".join(str(h) for h in self.hazards))


def _dangling(name: str, message: str) -> HazardError:
    return HazardError([Hazard(HazardKind.DANGLING_REFERENCE, (name,), message)])


@dataclass(frozen=True)
class Element:
    name: ElementId
    direction: Direction


@dataclass(frozen=True)
class Relay:
    name: str
    control: ElementId
    actuator: ElementId
    actuated: ElementId
    kind: CouplingKind
    mode: DriveMode = DriveMode.PUSH
    drive: Subcycle | None = None
    # delay-line stage: holds a value across a cycle boundary, no logic depth
    crossing: bool = False


@dataclass(frozen=True)
class RectifiedMerge:
    name: str
    sources: tuple[ElementId, ...]
    target: ElementId


@dataclass(frozen=True)
class Lever:
    name: str
    source: ElementId
    target: ElementId
    kind: LeverKind


@dataclass(frozen=True)
class InputPort:
    name: str
    width: int
    phase: Subcycle
    elements: tuple[ElementId, ...]


@dataclass(frozen=True)
class Probe:
    name: str
    elements: tuple[ElementId, ...]
    sample_phase: Subcycle
    refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class ElementDecl:
    name: str
    direction: Direction


@dataclass(frozen=True)
class MacroDecl:
    """A top-level macro instantiation, kept for the oracle and the NDL printer.

    ``kind`` is one of NOT, AND, OR, XOR, CHAIN, DELAY, ADD.
    """

    kind: str
    name: str
    args: tuple[str, ...]
    drive: Subcycle | None = None
    n: int = 0
    width: int = 0


@dataclass(frozen=True)
class AdderCellPorts:
    a_i: ElementId
    b_i: ElementId
    c_in: ElementId | None
    c_out: ElementId
    d_i: ElementId


@dataclass
class VectorRow:
    inputs: dict[str, str]
    expects: dict[str, str]


class Circuit:
    """A named graph of mechanical elements.

    Names share one namespace: elements, relays, merges, levers, ports and
    probes.  Generated names from macros contain ``/`` and so cannot clash
    with names written in NDL.
    """

    def __init__(self, name: str, origin: Subcycle = Subcycle.IV, latency: int = 1):
        self.name = name
        # first subcycle of each machine cycle; IV is the setup subcycle before I
        self.origin = origin
        self.latency = latency
        self.pulse_directions = dict(DEFAULT_PULSE_DIRECTIONS)
        self.elements: dict[ElementId, Element] = {}
        self.relays: dict[str, Relay] = {}
        self.merges: dict[str, RectifiedMerge] = {}
        self.levers: dict[str, Lever] = {}
        self.inputs: dict[str, InputPort] = {}
        self.probes: dict[str, Probe] = {}
        self.buses: dict[str, tuple[ElementId, ...]] = {}
        self.decls: list = []
        self.vectors: list[VectorRow] = []
        self._names: set[str] = set()
        self._macro_depth = 0
        self._counter = 0

    def __repr__(self) -> str:
        return (f"Circuit({self.name!r}, elements={len(self.elements)}, "
                f"relays={len(self.relays)}, merges={len(self.merges)})")

    # -- naming -----------------------------------------------------------

    def _claim(self, name: str) -> None:
        if not name:
            raise ValueError("empty name")
        if name in self._names:
            raise _dangling(name, f"duplicate name {name!r}")
        self._names.add(name)

    def has_name(self, name: str) -> bool:
        return name in self._names

    def fresh(self, prefix: str) -> str:
        """A generated top-level name; ``_`` prefix keeps it out of NDL's way."""
        while True:
            self._counter += 1
            name = f"_{prefix}{self._counter}"
            if name not in self._names:
                return name

    @contextlib.contextmanager
    def macro(self, decl: MacroDecl) -> Iterator[None]:
        """Record ``decl`` as a top-level declaration unless nested in another macro."""
        if self._macro_depth == 0:
            self.decls.append(decl)
        self._macro_depth += 1
        try:
            yield
        finally:
            self._macro_depth -= 1

    @property
    def building_macro(self) -> bool:
        return self._macro_depth > 0

    def pulse_direction(self, p: Subcycle) -> Direction:
        return self.pulse_directions[p]

    # -- construction -----------------------------------------------------

    def add_element(self, name: ElementId, direction: Direction) -> ElementId:
        self._claim(name)
        self.elements[name] = Element(name, direction)
        if not self.building_macro:
            self.decls.append(ElementDecl(name, direction))
        return name

    def _element(self, name: ElementId, direction: Direction) -> ElementId:
        self._claim(name)
        self.elements[name] = Element(name, direction)
        return name

    def _require(self, name: ElementId) -> None:
        if name not in self.elements:
            raise _dangling(name, f"no element named {name!r}")

    def add_input(self, name: str, phase: Subcycle, width: int = 1) -> InputPort:
        if width < 1:
            raise ValueError(f"input {name!r}: width must be at least 1")
        self._claim(name)
        direction = self.pulse_direction(phase)
        if width == 1:
            elems: tuple[str, ...] = (self._element(name + "[0]", direction),)
        else:
            elems = tuple(self._element(f"{name}[{i}]", direction) for i in range(width))
        port = InputPort(name, width, phase, elems)
        self.inputs[name] = port
        self.buses[name] = elems
        if not self.building_macro:
            self.decls.append(port)
        return port

    def add_relay(self, name: str, control: ElementId, actuator: ElementId,
                  actuated: ElementId, kind: CouplingKind,
                  mode: DriveMode = DriveMode.PUSH, drive: Subcycle | None = None,
                  crossing: bool = False) -> Relay:
        if len({control, actuator, actuated}) != 3:
            raise ValueError(f"relay {name!r}: control, actuator and actuated must be distinct")
        for e in (control, actuator, actuated):
            self._require(e)
        self._claim(name)
        relay = Relay(name, control, actuator, actuated, kind, mode, drive, crossing)
        self.relays[name] = relay
        if not self.building_macro:
            self.decls.append(relay)
        return relay

    def add_merge(self, name: str, sources: Sequence[ElementId], target: ElementId) -> RectifiedMerge:
        if not sources:
            raise ValueError(f"merge {name!r} needs at least one source")
        if target in sources:
            raise ValueError(f"merge {name!r}: target cannot be one of its sources")
        for e in (*sources, target):
            self._require(e)
        self._claim(name)
        merge = RectifiedMerge(name, tuple(dict.fromkeys(sources)), target)
        self.merges[name] = merge
        if not self.building_macro:
            self.decls.append(merge)
        return merge

    def add_lever(self, name: str, source: ElementId, target: ElementId, kind: LeverKind) -> Lever:
        if source == target:
            raise ValueError(f"lever {name!r}: source and target must differ")
        self._require(source)
        self._require(target)
        self._claim(name)
        lever = Lever(name, source, target, kind)
        self.levers[name] = lever
        if not self.building_macro:
            self.decls.append(lever)
        return lever

    def add_probe(self, name: str, refs: Sequence[str], phase: Subcycle) -> Probe:
        elems: list[ElementId] = []
        for ref in refs:
            elems.extend(self.resolve(ref))
        if not elems:
            raise ValueError(f"probe {name!r} observes nothing")
        self._claim(name)
        probe = Probe(name, tuple(elems), phase, tuple(refs))
        self.probes[name] = probe
        if not self.building_macro:
            self.decls.append(probe)
        return probe

    def add_bus(self, name: str, elements: Sequence[ElementId]) -> None:
        self._claim(name)
        self.buses[name] = tuple(elements)

    # -- lookup -----------------------------------------------------------

    def resolve(self, ref: str) -> tuple[ElementId, ...]:
        """Elements a reference denotes: a bus, an element, or ``bus[i]``."""
        if ref in self.buses:
            return self.buses[ref]
        if ref in self.elements:
            return (ref,)
        m = _INDEXED.match(ref)
        if m and m.group(1) in self.buses:
            bus, i = self.buses[m.group(1)], int(m.group(2))
            if i < len(bus):
                return (bus[i],)
            raise _dangling(ref, f"{m.group(1)!r} has no bit {i} (width {len(bus)})")
        raise _dangling(ref, f"undeclared name {ref!r}")

    def resolve_bit(self, ref: str) -> ElementId:
        elems = self.resolve(ref)
        if len(elems) != 1:
            raise _dangling(ref, f"{ref!r} is {len(elems)} bits wide, expected a single bit")
        return elems[0]

    def entities(self) -> set[str]:
        return set(self._names) | set(self.elements)

    def input_width(self, ports: Sequence[str] | None = None) -> int:
        names = list(self.inputs) if ports is None else ports
        return sum(self.inputs[p].width for p in names)

    def structure(self) -> tuple:
        """Relay-level structure, used to compare circuits for equality."""
        return (
            tuple(sorted((e.name, e.direction.value) for e in self.elements.values())),
            tuple(sorted(self.relays.values(), key=lambda r: r.name)),
            tuple(sorted(self.merges.values(), key=lambda m: m.name)),
            tuple(sorted(self.levers.values(), key=lambda l: l.name)),
            tuple(sorted(self.inputs.values(), key=lambda p: p.name)),
            tuple(sorted(((p.name, p.elements, p.sample_phase) for p in self.probes.values()))),
            self.origin,
            self.latency,
        )


def new_circuit(name: str, origin: Subcycle = Subcycle.IV, latency: int = 1) -> Circuit:
    return Circuit(name, origin, latency)
