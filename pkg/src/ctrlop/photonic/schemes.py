"""Post-selected red/blue schemes: entanglement-based control and linear combinations.

Output naming: after BS(kr, kb) the port ``kr`` is detector ``k`` and ``kb`` is
detector ``k'``.  With the real BS convention the blue branch picks up a
minus sign at every primed detector, so

* linear combination: (1,2) and (1',2') give A+B, (1,2') and (1',2) give A-B
  with no compensating sign;
* entanglement scheme: the control photon is accepted at ``1r`` after the PBS
  and a pattern is accepting when an even number of target photons reach
  primed detectors.  Odd patterns carry alpha|H>psi - beta|V>U psi.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from ..operators import CarrierState, DimensionMismatch, Operator
from .elements import OpticalCircuit, OpticalElement
from .fock import FockState, postselect
from .sources import slot_ports, spatially_entangled


@dataclass(frozen=True)
class DetectionPattern:
    """Exactly one photon at each listed port, one port per photon slot."""

    ports: tuple[str, ...]

    @property
    def label(self) -> str:
        return ",".join(_detector_name(p) for p in self.ports)

    def __str__(self) -> str:
        return self.label


def _detector_name(port: str) -> str:
    if port.endswith("r"):
        return port[:-1]
    if port.endswith("b"):
        return port[:-1] + "'"
    return port


@dataclass(frozen=True, eq=False)
class PatternOutcome:
    """Post-selected polarization state; its squared norm is the pattern probability."""

    state: CarrierState
    accepting: bool = True

    @property
    def probability(self) -> float:
        return self.state.probability

    @property
    def conditional(self) -> CarrierState:
        return self.state.normalized()


def _as_matrix(op, n_qubits: int) -> np.ndarray:
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if m.shape != (2 ** n_qubits, 2 ** n_qubits):
        raise DimensionMismatch(f"operator of shape {m.shape} cannot act on {n_qubits} polarization qubit(s)")
    return m


def entanglement_circuit(n_targets: int, op_blue) -> OpticalCircuit:
    pairs = slot_ports(n_targets + 1)
    blue_targets = [b for _, b in pairs[1:]]
    m = _as_matrix(op_blue, n_targets)
    elements = [OpticalElement("PolGate", tuple(blue_targets), matrix=m),
                OpticalElement("PBS", pairs[0])]
    elements += [OpticalElement("BS", pair) for pair in pairs[1:]]
    return OpticalCircuit(tuple(elements), tuple(p for pair in pairs for p in pair))


def run_entanglement_scheme(n_targets: int, op_blue, phi, *, phase: float = 0.0
                            ) -> dict[DetectionPattern, PatternOutcome]:
    """Controlled ``op_blue`` from a spatially entangled source.

    ``phi`` is the (n_targets + 1)-qubit polarization input with the control
    first.  Returns every coincidence pattern; accepting ones hold a state
    proportional to alpha|H>|psi> + beta|V> op_blue|psi>.
    """
    if n_targets < 1:
        raise ValueError("n_targets must be at least 1")
    phi = np.ravel(np.asarray(phi.amplitudes if isinstance(phi, CarrierState) else phi, dtype=complex))
    if phi.size != 2 ** (n_targets + 1):
        raise DimensionMismatch(f"phi must hold {n_targets + 1} qubits")
    circuit = entanglement_circuit(n_targets, op_blue)
    out = circuit.run(spatially_entangled(phi, n_targets + 1, phase=phase))
    pairs = slot_ports(n_targets + 1)
    results = {}
    for choice in product(*pairs):
        pattern = DetectionPattern(tuple(choice))
        n_primed = sum(p.endswith("b") for p in choice[1:])
        accepting = choice[0] == pairs[0][0] and n_primed % 2 == 0
        vec = postselect(out, choice)
        results[pattern] = PatternOutcome(CarrierState(vec), accepting)
    return results


def accepting_probability(results: dict[DetectionPattern, PatternOutcome]) -> float:
    return sum(o.probability for o in results.values() if o.accepting)


PLUS, MINUS = "A+B", "A-B"
CLASS_PATTERNS = {
    PLUS: (DetectionPattern(("1r", "2r")), DetectionPattern(("1b", "2b"))),
    MINUS: (DetectionPattern(("1r", "2b")), DetectionPattern(("1b", "2r"))),
}


def linear_combination_circuit(a, b) -> OpticalCircuit:
    am, bm = _as_matrix(a, 2), _as_matrix(b, 2)
    return OpticalCircuit((
        OpticalElement("PolGate", ("1r", "2r"), matrix=am),
        OpticalElement("PolGate", ("1b", "2b"), matrix=bm),
        OpticalElement("BS", ("1r", "1b")),
        OpticalElement("BS", ("2r", "2b")),
    ), ("1r", "1b", "2r", "2b"))


@dataclass(frozen=True, eq=False)
class ClassOutcome:
    """One pattern class of the linear-combination scheme.

    ``state`` is (A +- B)|phi>/2 as realized by the optics, so its squared
    norm is the class probability.  ``patterns`` holds the two member patterns.
    """

    state: CarrierState
    patterns: dict[DetectionPattern, PatternOutcome]

    @property
    def probability(self) -> float:
        return sum(o.probability for o in self.patterns.values())

    @property
    def conditional(self) -> CarrierState:
        return self.state.normalized()


def run_linear_combination_state(source: FockState, a, b) -> dict[str, ClassOutcome]:
    out = linear_combination_circuit(a, b).run(source)
    results = {}
    for name, pats in CLASS_PATTERNS.items():
        members = {p: PatternOutcome(CarrierState(postselect(out, p.ports))) for p in pats}
        first = members[pats[0]].state.amplitudes
        results[name] = ClassOutcome(CarrierState(np.sqrt(2) * first), members)
    return results


def run_linear_combination(a, b, phi, *, phase: float = 0.0, branch: str = "both"
                           ) -> dict[str, ClassOutcome]:
    """Send (|phi>_r + e^{i phase}|phi>_b)/sqrt2 through A (red) and B (blue) and two BSs.

    Returns the "A+B" and "A-B" classes; their states are proportional to
    (a + b)|phi> and (a - b)|phi> with probabilities ||(a +- b) phi||^2 / 4.
    """
    phi = np.ravel(np.asarray(phi.amplitudes if isinstance(phi, CarrierState) else phi, dtype=complex))
    if phi.size != 4:
        raise DimensionMismatch("phi must be a two-qubit polarization state")
    return run_linear_combination_state(spatially_entangled(phi, 2, phase=phase, branch=branch), a, b)


def class_of(pattern: DetectionPattern) -> str:
    for name, pats in CLASS_PATTERNS.items():
        if pattern in pats:
            return name
    raise KeyError(pattern)


def pattern_probabilities(results) -> dict[str, float]:
    """Flatten scheme results to {pattern label: probability}."""
    if all(isinstance(v, ClassOutcome) for v in results.values()):
        return {p.label: o.probability for c in results.values() for p, o in c.patterns.items()}
    return {p.label: o.probability for p, o in results.items()}


__all__: Sequence[str] = (
    "DetectionPattern", "PatternOutcome", "ClassOutcome", "run_entanglement_scheme",
    "run_linear_combination", "run_linear_combination_state", "accepting_probability",
    "entanglement_circuit", "linear_combination_circuit", "PLUS", "MINUS", "CLASS_PATTERNS",
    "class_of", "pattern_probabilities",
)
