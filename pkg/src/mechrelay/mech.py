"""Vocabulary of the mechanical substrate.

Plates move one step along one of four compass directions; a clock cycle is
split into four subcycles; a relay couples an actuator plate to an actuated
plate depending on the position of its control plate.  Everything here is an
immutable value or a pure function.
"""

from __future__ import annotations

import enum


class Direction(enum.Enum):
    W = "W"
    S = "S"
    E = "E"
    N = "N"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        return cls(text)


# clockwise compass order, used by the lever rotations
_CLOCKWISE = (Direction.N, Direction.E, Direction.S, Direction.W)


class Subcycle(enum.IntEnum):
    """One of the four subcycles of the common cycle, in cyclic order."""

    I = 0
    II = 1
    III = 2
    IV = 3

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str) -> "Subcycle":
        try:
            return cls[text]
        except KeyError:
            raise ValueError(f"not a subcycle: {text!r}") from None

    def shift(self, n: int) -> "Subcycle":
        return Subcycle((self.value + n) % 4)

    def successor(self) -> "Subcycle":
        return self.shift(1)


class BitState(enum.IntEnum):
    REST = 0
    MOVED = 1


class CouplingKind(enum.Enum):
    COUPLED_WHEN_ONE = "open"     # plain relay: rest position is uncoupled
    COUPLED_WHEN_ZERO = "closed"  # negating relay: rest position is coupled


class DriveMode(enum.Enum):
    PUSH = "push"
    PULL = "pull"


class LeverKind(enum.Enum):
    REVERSE = "reverse"
    ROTATE_CW = "cw"
    ROTATE_CCW = "ccw"


# pulse direction of each subcycle unless a circuit overrides it
DEFAULT_PULSE_DIRECTIONS = {
    Subcycle.I: Direction.W,
    Subcycle.II: Direction.S,
    Subcycle.III: Direction.E,
    Subcycle.IV: Direction.N,
}


def is_coupled(kind: CouplingKind, control: int) -> bool:
    """Whether the relay transmits motion with its control plate at ``control``."""
    if kind is CouplingKind.COUPLED_WHEN_ONE:
        return control == 1
    return control == 0


def coupling_mask(kind: CouplingKind, control: int, full: int) -> int:
    """Bit-parallel :func:`is_coupled`: one bit per simulation lane."""
    if kind is CouplingKind.COUPLED_WHEN_ONE:
        return control & full
    return ~control & full


def transmit(coupled: bool, actuator: int) -> BitState:
    return BitState.MOVED if coupled and actuator == 1 else BitState.REST


def apply_lever(d: Direction, kind: LeverKind) -> Direction:
    i = _CLOCKWISE.index(d)
    if kind is LeverKind.REVERSE:
        return _CLOCKWISE[(i + 2) % 4]
    if kind is LeverKind.ROTATE_CW:
        return _CLOCKWISE[(i + 1) % 4]
    return _CLOCKWISE[(i - 1) % 4]


def retract_phase(p: Subcycle) -> Subcycle:
    """Subcycle at which a plate moved during ``p`` returns to rest."""
    return p.shift(2)


def setup_phase(p: Subcycle) -> Subcycle:
    """Latest subcycle at which a control feeding a relay driven at ``p`` may be set."""
    return p.shift(-1)
