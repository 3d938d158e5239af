"""Optical elements acting on FockState values.

Conventions (fixed here because the optics never pins them down):

* BS on ports (a, b): a^dag -> (a^dag + b^dag)/sqrt2, b^dag -> (a^dag - b^dag)/sqrt2,
  independently for H and V.  Port ``a`` is the unprimed output, ``b`` the primed one.
* PBS on ports (a, b): the transmitted polarization (H by default) stays in its
  port, the other polarization swaps ports.
* HWP(t) = R(-t) diag(1, -1) R(t), QWP(t) = R(-t) diag(1, i) R(t), angles
  measured from the H axis.
* PolCNOT and PolGate are ideal polarization gates on singly occupied ports.
  An unoccupied addressed port means the identity is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .fock import FockState, ModeLabel, transform_modes

KINDS = ("BS", "PBS", "HWP", "QWP", "PhaseShift", "Polarizer", "PolCNOT", "Jones", "PolGate")
_SQRT2 = np.sqrt(2.0)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def hwp(theta: float) -> np.ndarray:
    return rotation(-theta) @ np.diag([1, -1]).astype(complex) @ rotation(theta)


def qwp(theta: float) -> np.ndarray:
    return rotation(-theta) @ np.diag([1, 1j]) @ rotation(theta)


def linear_polarizer(theta: float) -> np.ndarray:
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(v, v).astype(complex)


@dataclass(frozen=True, eq=False)
class OpticalElement:
    kind: str
    ports: tuple[str, ...]
    angle: float = 0.0
    matrix: np.ndarray | None = field(default=None, repr=False)
    transmit: str = "H"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        object.__setattr__(self, "ports", tuple(self.ports))
        n = len(self.ports)
        expected = {"BS": 2, "PBS": 2, "HWP": 1, "QWP": 1, "PhaseShift": 1,
                    "Polarizer": 1, "PolCNOT": 2, "Jones": 1}.get(self.kind)
        if expected is not None and n != expected:
            raise ValueError(f"{self.kind} addresses {expected} port(s), got {n}")
        if len(set(self.ports)) != n:
            raise ValueError("element ports must be distinct")
        if self.kind in ("Jones", "PolGate"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} needs a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2 ** n, 2 ** n):
                raise ValueError(f"{self.kind} matrix must be {2 ** n}x{2 ** n}")
            object.__setattr__(self, "matrix", m)
        if self.kind == "PBS" and self.transmit not in ("H", "V"):
            raise ValueError("PBS transmits H or V")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "ports": list(self.ports), "angle": self.angle}
        if self.kind == "PBS" and self.transmit != "H":
            d["transmit"] = self.transmit
        if self.matrix is not None:
            d["matrix"] = {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> OpticalElement:
        m = d.get("matrix")
        if m is not None:
            m = np.asarray(m["re"], dtype=float) + 1j * np.asarray(m.get("im", 0.0), dtype=float)
        return cls(d["kind"], tuple(d["ports"]), float(d.get("angle", 0.0)), m, d.get("transmit", "H"))


def _jones(element: OpticalElement) -> np.ndarray:
    k = element.kind
    if k == "HWP":
        return hwp(element.angle)
    if k == "QWP":
        return qwp(element.angle)
    if k == "Polarizer":
        return linear_polarizer(element.angle)
    if k == "PhaseShift":
        return np.exp(1j * element.angle) * np.eye(2)
    return element.matrix


def _check_ports(state: FockState, ports: Sequence[str]) -> None:
    known = set(state.ports)
    for p in ports:
        if p not in known:
            raise KeyError(f"unknown port {p!r}")


def _polarization_gate(state: FockState, ports: Sequence[str], matrix: np.ndarray,
                       allow_partial: bool) -> FockState:
    idx = [(state.index(ModeLabel(p, "H")), state.index(ModeLabel(p, "V"))) for p in ports]
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.terms.items():
        counts = [occ[h] + occ[v] for h, v in idx]
        if any(c > 1 for c in counts):
            raise ValueError(f"multi-photon input on ports {list(ports)} of a polarization gate")
        if all(c == 0 for c in counts) or (allow_partial and not all(counts)):
            out[occ] = out.get(occ, 0j) + amp
            continue
        if not all(counts):
            raise ValueError(f"ports {list(ports)} are only partly occupied")
        col = int("".join(str(occ[v]) for _, v in idx), 2)
        for row, bits in enumerate(product((0, 1), repeat=len(ports))):
            coeff = matrix[row, col]
            if coeff == 0:
                continue
            new = list(occ)
            for (h, v), b in zip(idx, bits):
                new[h], new[v] = (0, 1) if b else (1, 0)
            key = tuple(new)
            out[key] = out.get(key, 0j) + amp * coeff
    return FockState(state.modes, out, state.n_photons)


_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def apply_element(state: FockState, element: OpticalElement) -> FockState:
    _check_ports(state, element.ports)
    k = element.kind
    if k == "BS":
        a, b = element.ports
        u = np.array([[1, 1], [1, -1]]) / _SQRT2
        for pol in ("H", "V"):
            state = transform_modes(state, [ModeLabel(a, pol), ModeLabel(b, pol)], u)
        return state
    if k == "PBS":
        a, b = element.ports
        swapped = "V" if element.transmit == "H" else "H"
        return transform_modes(state, [ModeLabel(a, swapped), ModeLabel(b, swapped)],
                               np.array([[0, 1], [1, 0]]))
    if k in ("HWP", "QWP", "Polarizer", "PhaseShift", "Jones"):
        (p,) = element.ports
        return transform_modes(state, [ModeLabel(p, "H"), ModeLabel(p, "V")], _jones(element))
    if k == "PolCNOT":
        ctrl, tgt = element.ports
        for occ in state.terms:
            if sum(occ[state.index(ModeLabel(tgt, pol))] for pol in ("H", "V")) > 1:
                raise ValueError(f"multi-photon input on PolCNOT target port {tgt!r}")
        return _polarization_gate(state, element.ports, _CNOT, allow_partial=True)
    return _polarization_gate(state, element.ports, element.matrix, allow_partial=False)


@dataclass(frozen=True)
class OpticalCircuit:
    elements: tuple[OpticalElement, ...]
    detection_ports: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "detection_ports", tuple(self.detection_ports))

    @property
    def ports(self) -> tuple[str, ...]:
        seen = dict.fromkeys(p for e in self.elements for p in e.ports)
        seen.update(dict.fromkeys(self.detection_ports))
        return tuple(seen)

    def run(self, state: FockState) -> FockState:
        _check_ports(state, self.ports)
        for e in self.elements:
            state = apply_element(state, e)
        return state

    def to_dict(self) -> dict:
        return {"elements": [e.to_dict() for e in self.elements],
                "detection_ports": list(self.detection_ports)}

    @classmethod
    def from_dict(cls, d: dict) -> OpticalCircuit:
        return cls(tuple(OpticalElement.from_dict(e) for e in d["elements"]),
                   tuple(d.get("detection_ports", ())))


def build_cp_gate(control_port: str, target_port: str) -> OpticalCircuit:
    """Controlled-path gate for a target entering on ``<target_port>b``.

    Split the target on a PBS, flip its polarization in both arms when the
    control is V, recombine on a V-transmitting PBS, and undo the flip with a
    HWP at 45 deg in the blue arm.  Result: control H sends the target to the
    red port, control V leaves it in the blue port, polarization intact.
    """
    if control_port == target_port:
        raise ValueError("control and target ports must differ")
    r, b = f"{target_port}r", f"{target_port}b"
    return OpticalCircuit((
        OpticalElement("PBS", (b, r)),
        OpticalElement("PolCNOT", (control_port, b)),
        OpticalElement("PolCNOT", (control_port, r)),
        OpticalElement("PBS", (b, r), transmit="V"),
        OpticalElement("HWP", (b,), np.pi / 4),
    ), (control_port, r, b))
