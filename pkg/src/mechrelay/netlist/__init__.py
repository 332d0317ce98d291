"""Circuit graphs, the gate-macro library and the static timing validator."""

from .circuit import (
    AdderCellPorts,
    Circuit,
    Element,
    ElementDecl,
    ElementId,
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
    new_circuit,
)
from .macros import (
    adder,
    adder_cell,
    conjunction_chain,
    delay_line,
    gate_and,
    gate_not,
    gate_or,
    gate_xor,
    ripple_adder,
)
from .validate import MAX_DEPTH, Timing, validate

__all__ = [
    "AdderCellPorts", "Circuit", "Element", "ElementDecl", "ElementId", "Hazard",
    "HazardError", "HazardKind", "InputPort", "Lever", "MacroDecl", "Probe",
    "RectifiedMerge", "Relay", "VectorRow", "new_circuit", "adder", "adder_cell",
    "conjunction_chain", "delay_line", "gate_and", "gate_not", "gate_or", "gate_xor",
    "ripple_adder", "MAX_DEPTH", "Timing", "validate",
]
