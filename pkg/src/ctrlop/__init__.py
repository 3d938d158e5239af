"""Controlled operations by Hilbert-space extension, with a linear-optics simulator."""

from .operators import CarrierState, DimensionMismatch, Operator, fidelity
from .qudit import (ResidualPopulationError, add_control, add_multi_control, controlled_xa, embed,
                    extract, restrict_to_qubits, xa_gate)

__version__ = "0.1.0"

__all__ = [
    "CarrierState", "DimensionMismatch", "Operator", "fidelity", "ResidualPopulationError",
    "add_control", "add_multi_control", "controlled_xa", "embed", "extract",
    "restrict_to_qubits", "xa_gate",
]
