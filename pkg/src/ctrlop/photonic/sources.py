"""Photon-pair sources feeding the red/blue spatial-mode schemes."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .elements import OpticalElement, apply_element
from .fock import FockState, modes_for_ports

NORM_TOL = 1e-9


def slot_ports(n_photons: int) -> list[tuple[str, str]]:
    """(red, blue) port names per photon slot: ("1r", "1b"), ("2r", "2b"), ..."""
    return [(f"{k}r", f"{k}b") for k in range(1, n_photons + 1)]


def scheme_modes(n_photons: int):
    return modes_for_ports([p for pair in slot_ports(n_photons) for p in pair])


def _check_normalized(phi: np.ndarray) -> None:
    norm = np.linalg.norm(phi)
    if abs(norm - 1) > NORM_TOL:
        raise ValueError(f"polarization state is not normalized (norm {norm:.6g})")


def spatially_entangled(phi, n_photons: int | None = None, *, phase: float = 0.0,
                        branch: str = "both") -> FockState:
    """``(|phi>_red + e^{i phase} |phi>_blue)/sqrt2`` with one photon per slot.

    ``branch`` keeps only the "red" or "blue" half (still weighted 1/sqrt2);
    used to build the incoherent part of a partially distinguishable source.
    """
    phi = np.ravel(np.asarray(phi, dtype=complex))
    if n_photons is None:
        n_photons = int(np.log2(phi.size))
    if phi.size != 2 ** n_photons:
        raise ValueError(f"phi has {phi.size} amplitudes, need {2 ** n_photons}")
    _check_normalized(phi)
    pairs = slot_ports(n_photons)
    modes = scheme_modes(n_photons)
    red = FockState.single_photons(modes, [r for r, _ in pairs], phi / np.sqrt(2))
    blue = FockState.single_photons(modes, [b for _, b in pairs], np.exp(1j * phase) * phi / np.sqrt(2))
    if branch == "red":
        return red
    if branch == "blue":
        return blue
    if branch != "both":
        raise ValueError("branch must be 'both', 'red' or 'blue'")
    return red + blue


def prepare_type1_source(phi) -> FockState:
    """Two-photon four-port state (|phi>_{1r,2r} + |phi>_{1b,2b})/sqrt2."""
    phi = np.ravel(np.asarray(phi, dtype=complex))
    if phi.size != 4:
        raise ValueError("phi must be a two-qubit polarization state")
    return spatially_entangled(phi, 2)


def prepare_type2_sagnac(theta: float) -> FockState:
    """(|H>_{1r}|V>_{2r} + e^{i theta}|V>_{1b}|H>_{2b})/sqrt2 after the PBS part of the cubes."""
    modes = scheme_modes(2)
    red = FockState.single_photons(modes, ["1r", "2r"], [0, 1 / np.sqrt(2), 0, 0])
    blue = FockState.single_photons(modes, ["1b", "2b"], [0, 0, np.exp(1j * theta) / np.sqrt(2), 0])
    return red + blue


# Waveplates turning the Sagnac output into |+H> on both branches:
# 1r: H -> +, 2r: V -> H, 1b: V -> +, 2b untouched.
SAGNAC_TO_PLUS_H: Sequence[OpticalElement] = (
    OpticalElement("HWP", ("1r",), np.pi / 8),
    OpticalElement("HWP", ("2r",), np.pi / 4),
    OpticalElement("HWP", ("1b",), 3 * np.pi / 8),
)


def sagnac_plus_h(theta: float) -> FockState:
    """Sagnac source converted to (|+H>_r + e^{i theta}|+H>_b)/sqrt2."""
    state = prepare_type2_sagnac(theta)
    for e in SAGNAC_TO_PLUS_H:
        state = apply_element(state, e)
    return state
