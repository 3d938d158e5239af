"""Imperfection model and coincidence-count sampling.

Three effects are modelled:

* r/b phase jitter: each draw adds a Gaussian phase between the red and blue
  halves of the source;
* partial distinguishability: with weight ``lam`` the two halves interfere,
  with weight ``1 - lam`` they add incoherently;
* element misalignment: each single-photon setting is rotated about the beam
  axis by a Gaussian angle, R(-e) J R(e), as a mis-set waveplate or polarizer is.

Probabilities are averaged over ``n_draws`` noise draws, then counts are drawn
as independent Poisson variables (Poisson total, multinomial split).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Mapping

import numpy as np

from .elements import rotation
from .schemes import MINUS, PLUS, run_linear_combination

DEFAULT_DRAWS = 64


@dataclass(frozen=True)
class NoiseModel:
    phase_jitter_sigma: float = 0.0
    distinguishability: float = 1.0
    waveplate_angle_error_sigma: float = 0.0
    poisson_counts: float = 2000.0

    def __post_init__(self):
        if self.phase_jitter_sigma < 0 or self.waveplate_angle_error_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if not 0.0 <= self.distinguishability <= 1.0:
            raise ValueError("distinguishability must lie in [0, 1]")
        if self.poisson_counts < 0:
            raise ValueError("poisson_counts must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return (self.phase_jitter_sigma == 0 and self.distinguishability == 1
                and self.waveplate_angle_error_sigma == 0)


# Calibration: EF classical fidelity ~0.98, CNOT process fidelity ~0.96 (see README).
CALIBRATED = NoiseModel(phase_jitter_sigma=0.15, distinguishability=0.97,
                         waveplate_angle_error_sigma=0.07, poisson_counts=2000.0)


@dataclass(frozen=True)
class NoiseDraw:
    phase: float
    angle_errors: tuple[float, ...]
    distinguishability: float


def draw_noise(noise: NoiseModel, rng: np.random.Generator, n_angles: int = 4) -> NoiseDraw:
    phase = rng.normal(0.0, noise.phase_jitter_sigma) if noise.phase_jitter_sigma else 0.0
    if noise.waveplate_angle_error_sigma:
        errs = tuple(rng.normal(0.0, noise.waveplate_angle_error_sigma, size=n_angles))
    else:
        errs = (0.0,) * n_angles
    return NoiseDraw(float(phase), tuple(float(e) for e in errs), noise.distinguishability)


def misaligned(m: np.ndarray, angle: float) -> np.ndarray:
    r = rotation(angle)
    return r.T @ m @ r


def linear_combination_densities(a1, a2, b1, b2, phi, draw: NoiseDraw) -> dict[str, np.ndarray]:
    """Class-conditional (sub-normalized) density matrices for one noise draw.

    Traces equal the class probabilities of the noisy setup.
    """
    e = draw.angle_errors
    a = np.kron(misaligned(a1, e[0]), misaligned(a2, e[1]))
    b = np.kron(misaligned(b1, e[2]), misaligned(b2, e[3]))
    lam = draw.distinguishability
    out = {PLUS: np.zeros((4, 4), complex), MINUS: np.zeros((4, 4), complex)}
    if lam > 0:
        for name, c in run_linear_combination(a, b, phi, phase=draw.phase).items():
            v = c.state.amplitudes
            out[name] += lam * np.outer(v, v.conj())
    if lam < 1:
        for branch in ("red", "blue"):
            for name, c in run_linear_combination(a, b, phi, branch=branch).items():
                v = c.state.amplitudes
                out[name] += (1 - lam) * np.outer(v, v.conj())
    return out


ProbabilityModel = Callable[[NoiseDraw], Mapping[Hashable, float]]


def averaged_probabilities(model: ProbabilityModel | Mapping[Hashable, float], noise: NoiseModel,
                           rng: np.random.Generator, n_draws: int = DEFAULT_DRAWS) -> dict:
    if not callable(model):
        return dict(model)
    if noise.is_ideal:
        return dict(model(NoiseDraw(0.0, (0.0,) * 4, 1.0)))
    acc: dict = {}
    for _ in range(n_draws):
        for k, p in model(draw_noise(noise, rng)).items():
            acc[k] = acc.get(k, 0.0) + p / n_draws
    return acc


def sample_counts(ideal: ProbabilityModel | Mapping[Hashable, float], noise: NoiseModel,
                  seed: int | np.random.Generator, n_draws: int = DEFAULT_DRAWS) -> dict:
    """Integer counts per outcome with expectation ``noise.poisson_counts * p``.

    ``ideal`` is either a fixed outcome->probability map or a callable that
    returns one for a given :class:`NoiseDraw`.  Deterministic for a fixed seed.
    Probabilities may sum to less than one (lost or rejected events).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = averaged_probabilities(ideal, noise, rng, n_draws)
    keys = list(probs)
    p = np.array([float(probs[k]) for k in keys])
    if np.any(p < -1e-12) or p.sum() > 1 + 1e-9:
        raise ValueError("outcome probabilities must be non-negative and sum to at most one")
    p = np.clip(p, 0.0, None)
    p = p / max(1.0, p.sum())
    n = rng.poisson(noise.poisson_counts)
    counts = rng.multinomial(n, np.append(p, max(0.0, 1.0 - p.sum())))
    return {k: int(c) for k, c in zip(keys, counts[:-1])}
