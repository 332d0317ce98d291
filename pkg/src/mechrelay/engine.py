"""Subcycle-stepped simulator.

Each tick is one subcycle and runs three ordered phases:

1. retract every plate that moved two ticks ago;
2. assert the clock-driven actuators and scheduled input bits of this subcycle;
3. sample every relay's coupling once, then propagate actuator motion through
   coupled relays, rectified merges and levers until nothing more moves.

A plate moved in phase 3 stays put until its retraction tick even if the
control that let it move retracts first.

States are Python ints used as bit vectors: bit ``k`` is simulation lane
``k``.  A single-lane state records a full trace; many lanes run the same
circuit on different inputs at once (the exhaustive sweeps use this).
"""

from __future__ import annotations

import copy
import csv
import enum
import io
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .mech import CouplingKind, Subcycle
from .netlist.circuit import Circuit, Hazard, HazardError, HazardKind
from .netlist.validate import validate


class Cause(enum.Enum):
    CLOCK_DRIVE = "ClockDrive"
    INPUT_ASSERT = "InputAssert"
    TRANSMISSION = "Transmission"
    RETRACTION = "Retraction"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    cycle: int
    subcycle: Subcycle
    element: str
    state: int
    cause: Cause
    sim_time: float


@dataclass(frozen=True)
class ClockConfig:
    frequency: float = 5.0  # machine cycles per second

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"clock frequency must be positive, got {self.frequency}")

    @property
    def tick_seconds(self) -> float:
        return 1.0 / (4.0 * self.frequency)


TRACE_HEADER = ("tick", "cycle", "subcycle", "sim_time_s", "element", "state", "cause")


class _Compiled:
    """Index-based view of a circuit for the stepping loop."""

    def __init__(self, c: Circuit):
        self.names = list(c.elements)
        idx = {n: i for i, n in enumerate(self.names)}
        self.index = idx
        n = len(self.names)
        self.clock: dict[Subcycle, list[int]] = {p: [] for p in Subcycle}
        seen = set()
        for r in c.relays.values():
            if r.drive is not None and (r.actuator, r.drive) not in seen:
                seen.add((r.actuator, r.drive))
                self.clock[r.drive].append(idx[r.actuator])
        self.relays = list(c.relays.values())
        self.control = [idx[r.control] for r in self.relays]
        self.negate = [r.kind is CouplingKind.COUPLED_WHEN_ZERO for r in self.relays]
        self.actuated = [idx[r.actuated] for r in self.relays]
        self.relay_names = [r.name for r in self.relays]
        # outgoing motion edges: (target index, driver id)
        self.edges: list[list[tuple[int, str]]] = [[] for _ in range(n)]
        self.relay_edges: list[list[int]] = [[] for _ in range(n)]
        for ri, r in enumerate(self.relays):
            self.relay_edges[idx[r.actuator]].append(ri)
        for m in c.merges.values():
            for s in m.sources:
                self.edges[idx[s]].append((idx[m.target], m.name))
        for l in c.levers.values():
            self.edges[idx[l.source]].append((idx[l.target], l.name))
        self.ports = {name: (p.phase, [idx[e] for e in p.elements]) for name, p in c.inputs.items()}
        self.probes = [(p.name, p.sample_phase, [idx[e] for e in p.elements]) for p in c.probes.values()]


class SimState:
    """One running simulation of a circuit.  Owned by one caller at a time."""

    def __init__(self, circuit: Circuit, cfg: ClockConfig, lanes: int = 1, trace: bool = True):
        if lanes < 1:
            raise ValueError("need at least one lane")
        self.circuit = circuit
        self.cfg = cfg
        self.lanes = lanes
        self.full = (1 << lanes) - 1
        self._k = _Compiled(circuit)
        self.tick = 0
        self.states = [0] * len(self._k.names)
        self.pending: dict[str, list[int]] = {}
        self.recording = trace and lanes == 1
        self.trace: list[TraceEvent] = []
        self.samples: dict[str, tuple[int, ...]] = {}
        self._rises: dict[int, list[tuple[int, int]]] = {}
        self._owner: dict[int, str] = {}

    # -- clock --------------------------------------------------------------

    def subcycle_at(self, tick: int) -> Subcycle:
        return self.circuit.origin.shift(tick)

    @property
    def subcycle(self) -> Subcycle:
        """Subcycle of the next tick to run."""
        return self.subcycle_at(self.tick)

    @property
    def cycle(self) -> int:
        return self.tick // 4

    def sim_time(self) -> float:
        return self.tick * self.cfg.tick_seconds

    # -- inspection ---------------------------------------------------------

    def state_of(self, element: str) -> int:
        return self.states[self._k.index[element]]

    def snapshot(self) -> dict[str, int]:
        return dict(zip(self._k.names, self.states))

    def clone(self) -> "SimState":
        other = copy.copy(self)
        other.states = list(self.states)
        other.pending = {k: list(v) for k, v in self.pending.items()}
        other.trace = list(self.trace)
        other.samples = dict(self.samples)
        other._rises = {k: list(v) for k, v in self._rises.items()}
        other._owner = dict(self._owner)
        return other

    # -- inputs -------------------------------------------------------------

    def set_input_vector(self, port: str, bits: str | int | Sequence[int]) -> "SimState":
        """Schedule ``bits`` on ``port`` for the port's next subcycle.

        ``bits`` is an MSB-first string such as ``"1010"`` (bit 3 and bit 1
        set), an integer value, or an LSB-first sequence of per-bit lane
        masks.  Setting a port again before its subcycle replaces the
        earlier vector.
        """
        if port not in self._k.ports:
            raise KeyError(f"unknown input port {port!r}")
        width = len(self._k.ports[port][1])
        if isinstance(bits, str):
            if len(bits) != width or set(bits) - {"0", "1"}:
                raise ValueError(f"port {port!r} takes {width} bits, got {bits!r}")
            masks = [self.full if ch == "1" else 0 for ch in reversed(bits)]
        elif isinstance(bits, int):
            if not 0 <= bits < (1 << width):
                raise ValueError(f"value {bits} does not fit port {port!r} of width {width}")
            masks = [self.full if (bits >> i) & 1 else 0 for i in range(width)]
        else:
            masks = [int(m) & self.full for m in bits]
            if len(masks) != width:
                raise ValueError(f"port {port!r} takes {width} bits, got {len(masks)}")
        self.pending[port] = masks
        return self

    # -- stepping -----------------------------------------------------------

    def _event(self, events, e: int, state: int, cause: Cause) -> None:
        if self.recording:
            t = self.tick
            events.append(TraceEvent(t, t // 4, self.subcycle_at(t), self._k.names[e], state,
                                     cause, t * self.cfg.tick_seconds))

    def step(self) -> list[TraceEvent]:
        """Run one subcycle.  Returns the events of this tick.

        Raises :class:`HazardError` (UnrectifiedMultiDrive) and leaves the
        state unchanged if two drivers move one plate.
        """
        saved = (list(self.states), {k: list(v) for k, v in self.pending.items()},
                 {k: list(v) for k, v in self._rises.items()}, dict(self._owner))
        try:
            return self._step()
        except HazardError:
            self.states, self.pending, self._rises, self._owner = saved
            raise

    def _step(self, assert_drivers: bool = True) -> list[TraceEvent]:
        k, st, full = self._k, self.states, self.full
        t, p = self.tick, self.subcycle_at(self.tick)
        events: list[TraceEvent] = []

        for e, mask in self._rises.pop(t - 2, ()):
            if st[e] & mask:
                st[e] &= ~mask
                self._event(events, e, 0, Cause.RETRACTION)
            if not st[e]:
                self._owner.pop(e, None)

        rose: list[tuple[int, int]] = []
        queue: deque[tuple[int, int]] = deque()

        def raise_(e: int, mask: int, driver: str, cause: Cause) -> None:
            owner = self._owner.get(e)
            if owner is not None and owner != driver:
                raise HazardError([Hazard(
                    HazardKind.UNRECTIFIED_MULTI_DRIVE, (k.names[e],),
                    f"{k.names[e]!r} moved by {driver!r} while held by {owner!r}")])
            new = mask & ~st[e]
            if not new:
                return
            st[e] |= new
            self._owner[e] = driver
            rose.append((e, new))
            queue.append((e, new))
            self._event(events, e, 1, cause)

        if assert_drivers:
            for e in k.clock[p]:
                raise_(e, full, f"clock {p}", Cause.CLOCK_DRIVE)
            for port in list(self.pending):
                phase, elems = k.ports[port]
                if phase is p:
                    for e, mask in zip(elems, self.pending.pop(port)):
                        if mask:
                            raise_(e, mask, f"input {port}", Cause.INPUT_ASSERT)

        if queue:
            sampled = list(st)
            control, negate, actuated, rnames = k.control, k.negate, k.actuated, k.relay_names
            while queue:
                e, mask = queue.popleft()
                for ri in k.relay_edges[e]:
                    c = sampled[control[ri]]
                    coupled = (~c & full) if negate[ri] else c
                    out = mask & coupled
                    if out:
                        raise_(actuated[ri], out, rnames[ri], Cause.TRANSMISSION)
                for target, driver in k.edges[e]:
                    raise_(target, mask, driver, Cause.TRANSMISSION)

        if rose:
            self._rises[t] = rose
        for name, phase, elems in k.probes:
            if phase is p:
                self.samples[name] = tuple(st[e] for e in elems)
        self.tick += 1
        self.trace.extend(events)
        return events

    def run_cycle(self, inputs: Mapping[str, str | int | Sequence[int]] | None = None
                  ) -> dict[str, tuple[int, ...]]:
        """Apply ``inputs`` and run four ticks; return each probe's sample (LSB-first)."""
        for port, bits in (inputs or {}).items():
            self.set_input_vector(port, bits)
        self.samples = {}
        for _ in range(4):
            self.step()
        return dict(self.samples)

    def check_return_to_zero(self, settle: int = 2) -> bool:
        """True iff every plate is at rest after ``settle`` ticks with nothing asserted.

        Works on a copy; this state is not advanced.
        """
        other = self.clone()
        other.recording = False
        for _ in range(settle):
            other._step(assert_drivers=False)
        return not any(other.states)

    # -- trace export -------------------------------------------------------

    def trace_csv(self, events: Iterable[TraceEvent] | None = None) -> str:
        buf = io.StringIO()
        write_trace_csv(self.trace if events is None else events, buf)
        return buf.getvalue()


def write_trace_csv(events: Iterable[TraceEvent], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for ev in events:
        w.writerow((ev.tick, ev.cycle, ev.subcycle.name, f"{ev.sim_time:.3f}",
                    ev.element, ev.state, ev.cause.value))


def load(c: Circuit, cfg: ClockConfig | None = None, lanes: int = 1, trace: bool = True,
         check: bool = True) -> SimState:
    """Fresh simulation of ``c`` at tick 0 with every plate at rest.

    Refuses circuits with hazards unless ``check`` is False.
    """
    if check:
        hazards = validate(c)
        if hazards:
            raise HazardError(hazards)
    return SimState(c, cfg or ClockConfig(), lanes, trace)


def step(s: SimState) -> tuple[SimState, list[TraceEvent]]:
    events = s.step()
    return s, events


def run_cycle(s: SimState, inputs: Mapping[str, str | int | Sequence[int]] | None = None
              ) -> tuple[SimState, dict[str, tuple[int, ...]]]:
    return s, s.run_cycle(inputs)


def sim_time(s: SimState) -> float:
    return s.sim_time()


def bits_str(values: Sequence[int]) -> str:
    """Render LSB-first single-lane bits MSB-first, as written a_k ... a_0."""
    return "".join(str(v & 1) for v in reversed(values))
