"""Simulator for sliding-plate mechanical relay logic.

Sub-modules: :mod:`~mechrelay.mech` (plate and relay primitives),
:mod:`~mechrelay.netlist` (circuit graph, macros, validator),
:mod:`~mechrelay.engine` (subcycle stepper), :mod:`~mechrelay.ndl`
(text format), :mod:`~mechrelay.oracle` (references) and
:mod:`~mechrelay.cli`.
"""

from .engine import ClockConfig, SimState, load
from .netlist import Circuit, Hazard, HazardError, HazardKind, new_circuit, validate

__version__ = "0.1.0"

__all__ = ["Circuit", "ClockConfig", "Hazard", "HazardError", "HazardKind", "SimState",
           "load", "new_circuit", "validate", "__version__"]
