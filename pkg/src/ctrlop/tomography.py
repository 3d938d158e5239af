"""Two-qubit process tomography of the post-selected linear-combination gates.

The process is written as E(rho) = sum_mn chi_mn P_m rho P_n^dag over the
Pauli basis ordered II, IX, IY, IZ, XI, ..., ZZ (first factor is qubit 1).
With plain Pauli operators a trace-preserving process has Tr(chi) = 1.
Post-selection makes the physical process trace-decreasing, so the fit
carries a free overall scale and chi is renormalized to trace one at the end.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.optimize import minimize

from .gates import STATES, GateSettings
from .photonic.noise import NoiseDraw, NoiseModel, averaged_probabilities, linear_combination_densities
from .photonic.schemes import PLUS

log = logging.getLogger(__name__)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], complex),
    "Y": np.array([[0, -1j], [1j, 0]], complex),
    "Z": np.array([[1, 0], [0, -1]], complex),
}
PAULI_LABELS = tuple(a + b for a, b in product("IXYZ", repeat=2))
PREP_LABELS = tuple(a + b for a, b in product("HVDR", repeat=2))
# projectors grouped by measurement setting: each block of four sums to identity
_SETTING_STATES = {"Z": "HV", "X": "DA", "Y": "RL"}
MEAS_LABELS = tuple(a + b for s1, s2 in product("ZXY", repeat=2)
                    for a, b in product(_SETTING_STATES[s1], _SETTING_STATES[s2]))
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-10
NOMINAL_ACCEPTANCE = 0.25


class MLEConvergenceError(RuntimeError):
    def __init__(self, message: str, gradient_norm: float):
        self.gradient_norm = gradient_norm
        super().__init__(f"{message} (final gradient norm {gradient_norm:.3e})")


class RankDeficientError(ValueError):
    pass


def pauli_operator(label: str) -> np.ndarray:
    return np.kron(PAULI[label[0]], PAULI[label[1]])


def _ket(label: str) -> np.ndarray:
    return np.kron(STATES[label[0]], STATES[label[1]])


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """16x16 process matrix in the Pauli basis, Hermitian with unit trace."""

    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, complex)
        if m.shape != (16, 16):
            raise ValueError("chi must be 16x16")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("chi is not Hermitian")
        if abs(np.trace(m).real - 1) > TRACE_TOL:
            raise ValueError(f"chi trace {np.trace(m).real:.6g} is not 1")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def normalized(cls, m: np.ndarray, **meta) -> ChiMatrix:
        m = np.asarray(m, complex)
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if tr <= 0:
            raise ValueError("chi has non-positive trace")
        return cls(m / tr, dict(meta))

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> ChiMatrix:
        c = np.array([np.trace(pauli_operator(lab).conj().T @ u) / 4 for lab in PAULI_LABELS])
        return cls.normalized(np.outer(c, c.conj()))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    @property
    def psd_violation(self) -> bool:
        return self.min_eigenvalue < PSD_FLOOR

    def to_dict(self) -> dict:
        return {"basis": list(PAULI_LABELS), "re": self.matrix.real.tolist(),
                "im": self.matrix.imag.tolist()}


@dataclass(frozen=True, eq=False)
class TomographyDataset:
    """Counts per (preparation, projector); counts may be expected values (floats)."""

    prep_labels: tuple[str, ...]
    meas_labels: tuple[str, ...]
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.counts, float)
        if c.shape != (len(self.prep_labels), len(self.meas_labels)):
            raise ValueError("counts shape does not match the label sets")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        unknown = set("".join(self.prep_labels + self.meas_labels)) - set(STATES)
        if unknown:
            raise ValueError(f"unknown state labels {sorted(unknown)}")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def rows(self):
        for i, p in enumerate(self.prep_labels):
            for j, m in enumerate(self.meas_labels):
                yield p, m, self.counts[i, j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["prep_label", "meas_label", "count"])
        for p, m, c in self.rows():
            w.writerow([p, m, f"{c:.12g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> TomographyDataset:
        rows = list(csv.DictReader(io.StringIO(text)))
        preps = tuple(dict.fromkeys(r["prep_label"] for r in rows))
        meas = tuple(dict.fromkeys(r["meas_label"] for r in rows))
        counts = np.zeros((len(preps), len(meas)))
        for r in rows:
            counts[preps.index(r["prep_label"]), meas.index(r["meas_label"])] = float(r["count"])
        return cls(preps, meas, counts)

    def resampled(self, rng: np.random.Generator) -> TomographyDataset:
        return TomographyDataset(self.prep_labels, self.meas_labels,
                                 rng.poisson(self.counts).astype(float), dict(self.meta))


def generate_dataset(settings: GateSettings, noise: NoiseModel | None, shots_per_setting: float,
                     seed: int | None = None, *, expected: bool = False,
                     n_draws: int = 64) -> TomographyDataset:
    """Simulate every preparation/projector pair through the A+B class.

    ``shots_per_setting`` is the expected number of coincidences in one
    measurement setting (four projectors) for an ideal gate.  With
    ``expected=True`` the expected counts themselves are recorded.
    """
    if shots_per_setting <= 0:
        raise ValueError("shots_per_setting must be positive")
    noise = noise or NoiseModel()
    kets = np.array([_ket(m) for m in MEAS_LABELS])
    scale = shots_per_setting / NOMINAL_ACCEPTANCE
    counts = np.zeros((len(PREP_LABELS), len(MEAS_LABELS)))
    for i, prep in enumerate(PREP_LABELS):
        phi = _ket(prep)

        def model(draw: NoiseDraw, phi=phi) -> dict[int, float]:
            rho = linear_combination_densities(settings.a1, settings.a2, settings.b1, settings.b2,
                                               phi, draw)[PLUS]
            vals = np.einsum("ki,ij,kj->k", kets.conj(), rho, kets).real
            return dict(enumerate(np.clip(vals, 0.0, None)))

        rng = np.random.default_rng([seed if seed is not None else 0, i])
        probs = averaged_probabilities(model, noise, rng, n_draws)
        mu = scale * np.array([probs[j] for j in range(len(MEAS_LABELS))])
        if expected:
            counts[i] = mu
        else:
            if seed is None:
                raise ValueError("sampled datasets need a seed")
            counts[i] = rng.poisson(mu)
    meta = {"shots_per_setting": shots_per_setting, "seed": seed, "expected": expected,
            "noise": vars(noise).copy()}
    return TomographyDataset(PREP_LABELS, MEAS_LABELS, counts, meta)


@lru_cache(maxsize=8)
def _design(prep_labels: tuple[str, ...], meas_labels: tuple[str, ...]) -> np.ndarray:
    """Rows (prep, meas) x columns (m, n): Tr(Pi P_m rho P_n^dag), flattened row-major in (m, n)."""
    paulis = np.array([pauli_operator(lab) for lab in PAULI_LABELS])
    rows = []
    for p in prep_labels:
        k = _ket(p)
        vecs = paulis @ k  # P_m |prep>
        for m in meas_labels:
            o = _ket(m)
            amps = vecs @ o.conj()  # <meas|P_m|prep>
            rows.append(np.outer(amps, amps.conj()).ravel())
    return np.array(rows)


def _normalized_frequencies(data: TomographyDataset) -> np.ndarray:
    per_setting = data.counts.reshape(len(data.prep_labels), -1, 4).sum(axis=2)
    mean_total = per_setting.mean()
    if mean_total <= 0:
        raise ValueError("dataset holds no counts")
    return (data.counts / mean_total).ravel()


def linear_inversion(data: TomographyDataset) -> ChiMatrix:
    """Least-squares chi from normalized frequencies; may come out non-PSD."""
    a = _design(data.prep_labels, data.meas_labels)
    if np.linalg.matrix_rank(a, tol=1e-9) < 256:
        raise RankDeficientError("preparation/measurement set is not tomographically complete")
    sol, *_ = np.linalg.lstsq(a, _normalized_frequencies(data).astype(complex), rcond=None)
    chi = ChiMatrix.normalized(sol.reshape(16, 16), method="linear_inversion")
    if chi.psd_violation:
        log.info("linear inversion chi has min eigenvalue %.3g", chi.min_eigenvalue)
    return chi


def _psd_start(chi: ChiMatrix) -> np.ndarray:
    w, v = np.linalg.eigh(chi.matrix)
    w = np.clip(w, 1e-6, None)
    return v * np.sqrt(w / w.sum())


def mle_reconstruct(data: TomographyDataset, *, tol: float = 1e-10, max_iter: int = 100_000,
                    start: ChiMatrix | None = None) -> ChiMatrix:
    """Poisson maximum-likelihood chi over chi = T T^dag (PSD by construction).

    The objective is the log-likelihood per recorded count; iteration stops
    once an outer round improves it by less than ``tol`` or after ``max_iter``
    optimizer iterations in total.
    """
    a = _design(data.prep_labels, data.meas_labels)
    b_mats = a.reshape(-1, 16, 16).transpose(0, 2, 1)  # mu_k = Tr(B_k chi)
    n = data.counts.ravel()
    total = n.sum()
    if total <= 0:
        raise ValueError("dataset holds no counts")
    norm_n = n / total

    def unpack(x):
        return (x[:256] + 1j * x[256:]).reshape(16, 16)

    def objective(x):
        t = unpack(x)
        chi = t @ t.conj().T
        mu = np.einsum("kij,ji->k", b_mats, chi).real
        mu = np.maximum(mu, 1e-300)
        f = -(np.sum(norm_n * np.log(mu)) - mu.sum())
        w = norm_n / mu - 1.0
        g = 2 * np.einsum("k,kij->ij", w, b_mats) @ t
        return f, -np.concatenate([g.real.ravel(), g.imag.ravel()])

    if start is None:
        try:
            start = linear_inversion(data)
        except RankDeficientError:
            raise
    t0 = _psd_start(start)
    # put the scale near the data so the first steps are sensible
    mu0 = np.einsum("kij,ji->k", b_mats, t0 @ t0.conj().T).real
    t0 = t0 * np.sqrt(max(norm_n.sum(), 1e-12) / max(mu0.sum(), 1e-300))
    x = np.concatenate([t0.real.ravel(), t0.imag.ravel()])

    f_prev = objective(x)[0]
    used = 0
    while True:
        budget = max_iter - used
        if budget <= 0:
            gnorm = float(np.linalg.norm(objective(x)[1]))
            raise MLEConvergenceError("maximum-likelihood fit hit the iteration cap", gnorm)
        res = minimize(objective, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": min(budget, 5000), "ftol": 0.0, "gtol": 1e-12,
                                "maxcor": 30})
        used += max(int(res.nit), 1)
        x = res.x
        if f_prev - res.fun < tol:
            break
        f_prev = res.fun
    t = unpack(x)
    gnorm = float(np.linalg.norm(objective(x)[1]))
    chi = ChiMatrix.normalized(t @ t.conj().T, method="mle", iterations=used, gradient_norm=gnorm,
                               log_likelihood=float(-res.fun))
    return chi


def process_fidelity(chi_a: ChiMatrix, chi_ideal: ChiMatrix) -> float:
    """Tr(chi_a chi_ideal) against a rank-one ideal process."""
    for c in (chi_a, chi_ideal):
        if abs(np.trace(c.matrix).real - 1) > TRACE_TOL:
            raise ValueError("chi matrices must be trace-normalized")
    w = np.linalg.eigvalsh(chi_ideal.matrix)
    if w[-2] > 1e-8:
        raise ValueError("ideal chi must be rank one")
    return float(np.clip(np.trace(chi_a.matrix @ chi_ideal.matrix).real, 0.0, 1.0))


def predicted_counts(chi: ChiMatrix, data: TomographyDataset) -> np.ndarray:
    """Expected counts from chi with the overall scale fitted to the data total."""
    a = _design(data.prep_labels, data.meas_labels)
    mu = (a @ chi.matrix.T.ravel()).real
    mu = np.maximum(mu, 0.0)
    return (mu * data.counts.sum() / mu.sum()).reshape(data.counts.shape)


def error_bars(data: TomographyDataset, chi_ideal: ChiMatrix, n_resamples: int,
               seed: int) -> tuple[float, float]:
    """Mean and sample std of the fidelity over Poisson-resampled reconstructions."""
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    rng = np.random.default_rng(seed)
    fids = []
    skipped = 0
    for k in range(n_resamples):
        sample = data.resampled(rng)
        try:
            fids.append(process_fidelity(mle_reconstruct(sample), chi_ideal))
        except MLEConvergenceError as exc:
            skipped += 1
            log.warning("resample %d skipped: %s", k, exc)
    if skipped > 0.1 * n_resamples:
        raise MLEConvergenceError(f"{skipped} of {n_resamples} resamples failed to converge", float("nan"))
    fids = np.array(fids)
    return float(fids.mean()), float(fids.std(ddof=1))
