"""Fock-state simulation of the polarization/path optical schemes."""

from .elements import OpticalCircuit, OpticalElement, apply_element, build_cp_gate
from .fock import CapacityError, FockState, ModeLabel, postselect
from .noise import CALIBRATED, NoiseDraw, NoiseModel, sample_counts
from .schemes import (MINUS, PLUS, ClassOutcome, DetectionPattern, PatternOutcome,
                      accepting_probability, run_entanglement_scheme, run_linear_combination)
from .sources import prepare_type1_source, prepare_type2_sagnac

__all__ = [
    "OpticalCircuit", "OpticalElement", "apply_element", "build_cp_gate", "CapacityError",
    "FockState", "ModeLabel", "postselect", "CALIBRATED", "NoiseDraw", "NoiseModel",
    "sample_counts", "MINUS", "PLUS", "ClassOutcome", "DetectionPattern", "PatternOutcome",
    "accepting_probability", "run_entanglement_scheme", "run_linear_combination",
    "prepare_type1_source", "prepare_type2_sagnac",
]
