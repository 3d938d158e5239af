"""Sparse Fock states over (port, polarization) modes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import factorial, sqrt
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_PHOTONS = 4
MAX_MODES = 16
POLS = ("H", "V")
_PRUNE = 1e-15


class CapacityError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ModeLabel:
    port: str
    pol: str

    def __post_init__(self):
        if self.pol not in POLS:
            raise ValueError(f"polarization must be H or V, got {self.pol!r}")

    def __str__(self) -> str:
        return f"{self.pol}_{self.port}"


def modes_for_ports(ports: Iterable[str]) -> tuple[ModeLabel, ...]:
    return tuple(ModeLabel(p, pol) for p in ports for pol in POLS)


class FockState:
    """Map from occupation vectors to amplitudes; all terms share one photon number."""

    __slots__ = ("modes", "terms", "n_photons", "_index")

    def __init__(self, modes: Sequence[ModeLabel], terms: Mapping[tuple[int, ...], complex],
                 n_photons: int | None = None):
        modes = tuple(modes)
        if len(set(modes)) != len(modes):
            raise ValueError("duplicate mode labels")
        if len(modes) > MAX_MODES:
            raise CapacityError(f"{len(modes)} modes exceeds the limit of {MAX_MODES}")
        clean = {}
        for occ, amp in terms.items():
            occ = tuple(int(x) for x in occ)
            if len(occ) != len(modes) or min(occ, default=0) < 0:
                raise ValueError(f"bad occupation vector {occ}")
            if n_photons is None:
                n_photons = sum(occ)
            elif sum(occ) != n_photons:
                raise ValueError(f"term {occ} has {sum(occ)} photons, expected {n_photons}")
            if abs(amp) > _PRUNE:
                clean[occ] = complex(amp)
        n_photons = n_photons or 0
        if n_photons > MAX_PHOTONS:
            raise CapacityError(f"{n_photons} photons exceeds the limit of {MAX_PHOTONS}")
        self.modes = modes
        self.terms = clean
        self.n_photons = n_photons
        self._index = {m: i for i, m in enumerate(modes)}

    def index(self, mode: ModeLabel) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise KeyError(f"unknown mode {mode}") from None

    @property
    def ports(self) -> tuple[str, ...]:
        seen = dict.fromkeys(m.port for m in self.modes)
        return tuple(seen)

    @property
    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def amplitude(self, occupation: Mapping[ModeLabel, int]) -> complex:
        occ = [0] * len(self.modes)
        for m, k in occupation.items():
            occ[self.index(m)] = k
        return self.terms.get(tuple(occ), 0j)

    def __add__(self, other: FockState) -> FockState:
        if other.modes != self.modes:
            raise ValueError("mode sets differ")
        terms = dict(self.terms)
        for occ, amp in other.terms.items():
            terms[occ] = terms.get(occ, 0j) + amp
        return FockState(self.modes, terms, self.n_photons if self.terms else other.n_photons)

    def scaled(self, factor: complex) -> FockState:
        return FockState(self.modes, {o: a * factor for o, a in self.terms.items()}, self.n_photons)

    def __repr__(self) -> str:
        parts = []
        for occ, amp in sorted(self.terms.items()):
            label = " ".join(f"{str(m)}^{k}" if k > 1 else str(m)
                             for m, k in zip(self.modes, occ) if k)
            parts.append(f"({amp:.4g})|{label}>")
        return " + ".join(parts) or "0"

    @classmethod
    def single_photons(cls, modes: Sequence[ModeLabel], ports: Sequence[str],
                       pol_amplitudes) -> FockState:
        """One photon in each of ``ports`` with joint polarization amplitudes.

        ``pol_amplitudes`` is a length ``2**len(ports)`` vector in H=0, V=1
        order with the first port as the most significant qubit.
        """
        vec = np.ravel(np.asarray(pol_amplitudes, dtype=complex))
        if vec.size != 2 ** len(ports):
            raise ValueError(f"need {2 ** len(ports)} amplitudes for {len(ports)} photons")
        if len(set(ports)) != len(ports):
            raise ValueError("ports must be distinct")
        probe = cls(modes, {}, len(ports))
        idx = [(probe.index(ModeLabel(p, "H")), probe.index(ModeLabel(p, "V"))) for p in ports]
        terms = {}
        for bits in product((0, 1), repeat=len(ports)):
            amp = vec[int("".join(map(str, bits)), 2)] if bits else vec[0]
            occ = [0] * len(modes)
            for (ih, iv), b in zip(idx, bits):
                occ[iv if b else ih] += 1
            terms[tuple(occ)] = amp
        return cls(modes, terms, len(ports))


def transform_modes(state: FockState, modes: Sequence[ModeLabel], u: np.ndarray) -> FockState:
    """Linear map of creation operators: a_i^dag -> sum_j u[j, i] a_j^dag over ``modes``.

    Works for non-unitary ``u`` (polarizers, projectors): amplitude that maps
    outside the span is simply dropped.
    """
    sub = [state.index(m) for m in modes]
    u = np.asarray(u, dtype=complex)
    if u.shape != (len(sub), len(sub)):
        raise ValueError("transfer matrix does not match mode count")
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.terms.items():
        photons = [k for k, i in enumerate(sub) for _ in range(occ[i])]
        if not photons:
            out[occ] = out.get(occ, 0j) + amp
            continue
        base = list(occ)
        norm_in = 1.0
        for i in sub:
            norm_in *= factorial(occ[i])
            base[i] = 0
        for targets in product(range(len(sub)), repeat=len(photons)):
            coeff = amp
            for t, src in zip(targets, photons):
                coeff *= u[t, src]
                if coeff == 0:
                    break
            if coeff == 0:
                continue
            new = list(base)
            for t in targets:
                new[sub[t]] += 1
            norm_out = 1.0
            for i in sub:
                norm_out *= factorial(new[i])
            key = tuple(new)
            out[key] = out.get(key, 0j) + coeff * sqrt(norm_out / norm_in)
    return FockState(state.modes, out, state.n_photons)


def port_occupation(state: FockState, occ: tuple[int, ...], port: str) -> tuple[int, int]:
    return occ[state.index(ModeLabel(port, "H"))], occ[state.index(ModeLabel(port, "V"))]


def postselect(state: FockState, ports: Sequence[str]) -> np.ndarray:
    """Polarization amplitudes conditioned on exactly one photon in each of ``ports``.

    Terms with photons anywhere else are discarded.  Returns a length
    ``2**len(ports)`` vector (H=0, V=1, first port most significant) whose
    squared norm is the probability of the coincidence.
    """
    if state.n_photons != len(ports):
        return np.zeros(2 ** len(ports), dtype=complex)
    idx = [(state.index(ModeLabel(p, "H")), state.index(ModeLabel(p, "V"))) for p in ports]
    vec = np.zeros(2 ** len(ports), dtype=complex)
    for occ, amp in state.terms.items():
        bits = []
        for ih, iv in idx:
            if occ[ih] + occ[iv] != 1:
                break
            bits.append(occ[iv])
        else:
            vec[int("".join(map(str, bits)), 2) if bits else 0] += amp
    return vec
