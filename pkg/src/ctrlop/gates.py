"""Two-qubit gates built as linear combinations A1(x)A2 + B1(x)B2, and how to score them.

Truth tables run the linear-combination scheme for each product input and
record output-basis probabilities conditioned on one pattern class.  Scores
follow the complementary-basis (Hofmann) method: two classical fidelities
bracket the process fidelity, and the average fidelity follows from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .operators import Operator
from .photonic.noise import NoiseDraw, NoiseModel, linear_combination_densities, sample_counts
from .photonic.schemes import MINUS, PLUS, DetectionPattern, run_linear_combination_state
from .photonic.sources import sagnac_plus_h, spatially_entangled

ORTHO_TOL = 1e-12
IDEAL_DRAW = NoiseDraw(0.0, (0.0,) * 4, 1.0)

_S2 = np.sqrt(2.0)
_P8 = np.pi / 8
STATES: dict[str, np.ndarray] = {
    "H": np.array([1, 0], complex),
    "V": np.array([0, 1], complex),
    "D": np.array([1, 1], complex) / _S2,
    "A": np.array([1, -1], complex) / _S2,
    "R": np.array([1, 1j], complex) / _S2,
    "L": np.array([1, -1j], complex) / _S2,
    # +1/-1 eigenstates of (sz + sx)/sqrt2, i.e. of the Hadamard
    "M": np.array([np.cos(_P8), np.sin(_P8)], complex),
    "N": np.array([np.sin(_P8), -np.cos(_P8)], complex),
    # +1/-1 eigenstates of (sz - sx)/sqrt2
    "J": np.array([np.cos(-_P8), np.sin(-_P8)], complex),
    "K": np.array([np.sin(-_P8), -np.cos(-_P8)], complex),
    "T": np.array([1, np.exp(1j * np.pi / 4)], complex) / _S2,
    "S": np.array([1, -np.exp(1j * np.pi / 4)], complex) / _S2,
}
STATES["+"], STATES["-"] = STATES["D"], STATES["A"]

PROJ_H = np.diag([1, 0]).astype(complex)
PROJ_V = np.diag([0, 1]).astype(complex)
I2 = np.eye(2, dtype=complex)


def named_gate(name: str, phi: float | None = None) -> Operator:
    """Single-qubit gates X, H, Z and Zphase(phi) = diag(1, e^{i phi})."""
    key = name.strip().lower()
    if key == "x":
        m = [[0, 1], [1, 0]]
    elif key == "h":
        m = np.array([[1, 1], [1, -1]]) / _S2
    elif key == "z":
        m = [[1, 0], [0, -1]]
    elif key in ("i", "id", "identity"):
        m = I2
    elif key.startswith("zphase"):
        if phi is None:
            inner = key[len("zphase"):].strip("()")
            if not inner:
                raise ValueError("Zphase needs an angle")
            phi = _parse_angle(inner)
        m = np.diag([1, np.exp(1j * phi)])
    else:
        raise ValueError(f"unknown gate {name!r}")
    return Operator(np.asarray(m, complex), (2,), (2,))


def _parse_angle(text: str) -> float:
    text = text.replace(" ", "").replace("π", "pi")
    if text.startswith("pi/"):
        return np.pi / float(text[3:])
    if text == "pi":
        return np.pi
    return float(text)


@dataclass(frozen=True, eq=False)
class BasisSet:
    name: str
    labels: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, complex)
        if v.shape != (len(self.labels), 4):
            raise ValueError("need one two-qubit vector per label")
        gram = v.conj() @ v.T
        if np.max(np.abs(gram - np.eye(len(self.labels)))) > ORTHO_TOL:
            raise ValueError(f"basis {self.name!r} is not orthonormal")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.labels)


def product_basis(labels: Sequence[str], name: str | None = None) -> BasisSet:
    """Basis of two-letter product labels, e.g. ["HD", "HA", "VR", "VL"]."""
    vecs = [np.kron(STATES[lab[0]], STATES[lab[1]]) for lab in labels]
    return BasisSet(name or "/".join(labels), tuple(labels), np.array(vecs))


def tensor_basis(first: str, second: str) -> BasisSet:
    """All four products of two single-qubit bases, e.g. ("HV", "MN")."""
    return product_basis([a + b for a, b in product(first, second)], f"{first}x{second}")


@dataclass(frozen=True, eq=False)
class GateSettings:
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            m = getattr(self, name)
            m = m.matrix if isinstance(m, Operator) else np.asarray(m, complex)
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            object.__setattr__(self, name, m)

    @property
    def a(self) -> np.ndarray:
        return np.kron(self.a1, self.a2)

    @property
    def b(self) -> np.ndarray:
        return np.kron(self.b1, self.b2)

    def combination(self, klass: str = PLUS) -> np.ndarray:
        return self.a + self.b if klass == PLUS else self.a - self.b


def cu_settings(u) -> GateSettings:
    """A1=|H><H|, A2=I, B1=|V><V|, B2=u: the A+B class is controlled-u."""
    return GateSettings(PROJ_H, I2, PROJ_V, u)


def ef_settings(variant: str = "projector") -> GateSettings:
    """Entanglement filter (projectors) or splitter (I and Z)."""
    if variant == "projector":
        return GateSettings(PROJ_H, PROJ_H, PROJ_V, PROJ_V)
    if variant == "unitary":
        z = named_gate("Z").matrix
        return GateSettings(I2, I2, z, z)
    raise ValueError("variant must be 'projector' or 'unitary'")


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Rows are inputs, columns outputs.

    ``probabilities`` is row-normalized (a row nothing got through stays zero);
    ``raw`` keeps the un-normalized class probabilities (exact mode) or counts.
    """

    in_labels: tuple[str, ...]
    out_labels: tuple[str, ...]
    probabilities: np.ndarray
    raw: np.ndarray
    counts: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_raw(cls, in_labels, out_labels, raw, counts=None, **metadata) -> TruthTable:
        raw = np.asarray(raw, float)
        sums = raw.sum(axis=1, keepdims=True)
        probs = np.divide(raw, sums, out=np.zeros_like(raw), where=sums > 0)
        return cls(tuple(in_labels), tuple(out_labels), probs, raw, counts, dict(metadata))

    def to_dict(self) -> dict:
        d = {"in_labels": list(self.in_labels), "out_labels": list(self.out_labels),
             "probabilities": self.probabilities.tolist(), "raw": self.raw.tolist(),
             "metadata": self.metadata}
        if self.counts is not None:
            d["counts"] = self.counts.astype(int).tolist()
        return d


def ideal_truth_table(gate: np.ndarray, in_basis: BasisSet, out_basis: BasisSet) -> TruthTable:
    """|<out|G|in>|^2 computed straight from the target matrix."""
    g = gate.matrix if isinstance(gate, Operator) else np.asarray(gate, complex)
    amp = out_basis.vectors.conj() @ g @ in_basis.vectors.T
    return TruthTable.from_raw(in_basis.labels, out_basis.labels, np.abs(amp.T) ** 2, kind="ideal")


def _row_model(settings: GateSettings, phi: np.ndarray, out_basis: BasisSet, klass: str):
    def model(draw: NoiseDraw) -> dict[str, float]:
        rho = linear_combination_densities(settings.a1, settings.a2, settings.b1, settings.b2,
                                           phi, draw)[klass]
        vals = np.einsum("ki,ij,kj->k", out_basis.vectors.conj(), rho, out_basis.vectors).real
        return dict(zip(out_basis.labels, np.clip(vals, 0.0, None)))
    return model


def measure_truth_table(settings: GateSettings, in_basis: BasisSet, out_basis: BasisSet,
                        mode: str = "exact", noise: NoiseModel | None = None,
                        seed: int | None = None, klass: str = PLUS,
                        n_draws: int = 64) -> TruthTable:
    """Run every input of ``in_basis`` through the scheme and analyse in ``out_basis``.

    Sampled mode draws Poisson counts; ``noise.poisson_counts`` is the
    expected count of a fully transmitted column, so the generated pair
    number is four times that (the class acceptance of an ideal gate is 1/4).
    Each row gets its own seed derived from ``seed``.
    """
    rows = []
    counts = []
    for i, phi in enumerate(in_basis.vectors):
        model = _row_model(settings, phi, out_basis, klass)
        if mode == "exact":
            p = model(IDEAL_DRAW)
            rows.append([p[lab] for lab in out_basis.labels])
        elif mode == "sampled":
            if noise is None or seed is None:
                raise ValueError("sampled mode needs a noise model and a seed")
            pairs = NoiseModel(noise.phase_jitter_sigma, noise.distinguishability,
                               noise.waveplate_angle_error_sigma, 4 * noise.poisson_counts)
            c = sample_counts(model, pairs, np.random.default_rng([seed, i]), n_draws)
            counts.append([c[lab] for lab in out_basis.labels])
            rows.append(counts[-1])
        else:
            raise ValueError("mode must be 'exact' or 'sampled'")
    meta = {"mode": mode, "class": klass, "in_basis": in_basis.name, "out_basis": out_basis.name}
    if mode == "sampled":
        meta.update(seed=seed, noise=vars(noise).copy())
    return TruthTable.from_raw(in_basis.labels, out_basis.labels, rows,
                               np.array(counts) if counts else None, **meta)


def classical_fidelity(measured: TruthTable, ideal: TruthTable, definition: str = "auto") -> float:
    """Probability mass on the ideal outputs.

    ``mean``: average over inputs of the row-normalized mass on the ideal
    columns (gates).  ``ratio``: correctly transmitted pairs over all
    transmitted pairs (filters).  ``auto`` picks ``ratio`` when the ideal
    table blocks some input entirely.
    """
    if measured.in_labels != ideal.in_labels or measured.out_labels != ideal.out_labels:
        raise ValueError("truth tables are expressed in different bases")
    if definition == "auto":
        definition = "ratio" if np.any(ideal.raw.sum(axis=1) <= 1e-12) else "mean"
    if definition == "mean":
        return float(np.mean(np.sum(measured.probabilities * ideal.probabilities, axis=1)))
    if definition == "ratio":
        total = measured.raw.sum()
        if total <= 0:
            raise ValueError("nothing was transmitted")
        return float(np.sum(measured.raw * (ideal.probabilities > 0.5)) / total)
    raise ValueError("definition must be 'auto', 'mean' or 'ratio'")


@dataclass(frozen=True)
class FidelityReport:
    f1: float
    f2: float
    fp_lower: float
    fp_upper: float
    f_avg_lower: float
    f_avg_upper: float
    d: int = 4

    def to_dict(self) -> dict:
        return dict(vars(self))


def average_fidelity(fp: float, d: int = 4) -> float:
    return (d * fp + 1) / (d + 1)


def fidelity_report(f1: float, f2: float, d: int = 4) -> FidelityReport:
    for f in (f1, f2):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"classical fidelity {f} outside [0, 1]")
    lo = max(f1 + f2 - 1.0, 0.0)
    hi = min(f1, f2)
    return FidelityReport(f1, f2, lo, hi, average_fidelity(lo, d), average_fidelity(hi, d), d)


@dataclass(frozen=True, eq=False)
class SplitterReport:
    plus: np.ndarray
    minus: np.ndarray
    plus_probability: float
    minus_probability: float
    plus_residual: float
    minus_residual: float

    @property
    def plus_degenerate(self) -> bool:
        return self.plus_probability <= 1e-24

    @property
    def minus_degenerate(self) -> bool:
        return self.minus_probability <= 1e-24


def eigen_splitter_check(w, phi) -> SplitterReport:
    """Check that (I +- W)phi are +-1 eigenvectors of W whenever W^2 = I.

    Residuals are ||W v -+ v|| for the normalized branches; an empty branch
    has residual 0 and is flagged degenerate.
    """
    w = w.matrix if isinstance(w, Operator) else np.asarray(w, complex)
    ident = np.eye(w.shape[0])
    if np.linalg.norm(w @ w - ident) >= 1e-10:
        raise ValueError("W must square to the identity")
    phi = np.ravel(np.asarray(phi, complex))
    branches = []
    for sign in (1, -1):
        v = (ident + sign * w) @ phi
        n = np.linalg.norm(v)
        res = float(np.linalg.norm(w @ v / n - sign * v / n)) if n > 1e-12 else 0.0
        branches.append((v, n ** 2 / 4, res))
    (vp, pp, rp), (vm, pm, rm) = branches
    return SplitterReport(vp, vm, float(pp), float(pm), rp, rm)


CNOT_SETTINGS = cu_settings(named_gate("X"))
PLUS_PLUS = np.kron(STATES["+"], STATES["+"])
PLUS_MINUS = np.kron(STATES["+"], STATES["-"])
DETECTORS_12 = DetectionPattern(("1r", "2r"))


def fringe_probabilities(theta: float, branch: str = "both") -> tuple[float, float]:
    """|++> and |+-> coincidence probabilities at detectors 1 and 2 (Sagnac CNOT).

    ``branch`` other than "both" sends only the red or blue half of the source,
    which is what a fully distinguishable pair contributes.
    """
    s = CNOT_SETTINGS
    if branch == "both":
        source = sagnac_plus_h(theta)
    else:
        source = spatially_entangled(np.kron(STATES["+"], STATES["H"]), 2, phase=theta, branch=branch)
    classes = run_linear_combination_state(source, s.a, s.b)
    vec = classes[PLUS].patterns[DETECTORS_12].state.amplitudes
    return float(abs(PLUS_PLUS.conj() @ vec) ** 2), float(abs(PLUS_MINUS.conj() @ vec) ** 2)


def fringe_scan(theta_grid: Sequence[float], mode: str = "exact", noise: NoiseModel | None = None,
                seed: int | None = None, pair_rate: float = 1.0, n_draws: int = 64) -> np.ndarray:
    """Rows (theta, rate_{++}, rate_{+-}).

    Exact rates are ``pair_rate`` times the coincidence probabilities, which
    follow C(1 +- cos theta)/2 with C = pair_rate/16.  Sampled mode returns
    Poisson counts with ``noise.poisson_counts`` generated pairs per point.
    """
    rows = []
    for i, theta in enumerate(theta_grid):
        if mode == "exact":
            pp, pm = fringe_probabilities(theta)
            rows.append((theta, pair_rate * pp, pair_rate * pm))
        elif mode == "sampled":
            if noise is None or seed is None:
                raise ValueError("sampled mode needs a noise model and a seed")
            lam = noise.distinguishability
            red, blue = fringe_probabilities(theta, "red"), fringe_probabilities(theta, "blue")
            flat = (red[0] + blue[0], red[1] + blue[1])

            def model(draw: NoiseDraw, theta=theta) -> dict[str, float]:
                pp, pm = fringe_probabilities(theta + draw.phase)
                return {"++": lam * pp + (1 - lam) * flat[0], "+-": lam * pm + (1 - lam) * flat[1]}

            c = sample_counts(model, noise, np.random.default_rng([seed, i]), n_draws)
            rows.append((theta, float(c["++"]), float(c["+-"])))
        else:
            raise ValueError("mode must be 'exact' or 'sampled'")
    return np.array(rows, dtype=float)


@dataclass(frozen=True)
class TableSpec:
    in_basis: BasisSet
    out_basis: BasisSet
    klass: str = PLUS


@dataclass(frozen=True, eq=False)
class Experiment:
    """A gate setting plus the truth tables used to score it.

    ``target`` is the operator the chosen class should implement (up to scale).
    With ``hofmann`` the two tables are complementary and bound the process fidelity.
    """

    name: str
    settings: GateSettings
    tables: tuple[TableSpec, ...]
    targets: tuple[np.ndarray, ...]
    hofmann: bool = True


def _controlled(u) -> np.ndarray:
    u = u.matrix if isinstance(u, Operator) else np.asarray(u, complex)
    return np.kron(PROJ_H, I2) + np.kron(PROJ_V, u)


def _cu_experiment(name: str, u: Operator, t1: tuple[BasisSet, BasisSet],
                   t2: tuple[BasisSet, BasisSet]) -> Experiment:
    cu = _controlled(u)
    return Experiment(name, cu_settings(u), (TableSpec(*t1), TableSpec(*t2)), (cu, cu))


def _phase_tables(a: str, b: str):
    # control V rotates D/A of the target to a/b, and vice versa for the control
    t1 = (tensor_basis("HV", "DA"), product_basis(["HD", "HA", "V" + a, "V" + b]))
    t2 = (tensor_basis("DA", "HV"), product_basis(["DH", "AH", a + "V", b + "V"]))
    return t1, t2


def _build_experiments() -> dict[str, Experiment]:
    hv = tensor_basis("HV", "HV")
    ex = {
        "cnot": _cu_experiment("cnot", named_gate("X"), (hv, hv),
                               (tensor_basis("DA", "DA"),) * 2),
        "ch": _cu_experiment("ch", named_gate("H"), (tensor_basis("HV", "JK"),) * 2,
                             (tensor_basis("DA", "MN"),) * 2),
        "cz": _cu_experiment("cz", named_gate("Z"), (tensor_basis("HV", "DA"),) * 2,
                             (tensor_basis("DA", "HV"),) * 2),
        "cz-pi2": _cu_experiment("cz-pi2", named_gate("zphase", np.pi / 2), *_phase_tables("R", "L")),
        "cz-pi4": _cu_experiment("cz-pi4", named_gate("zphase", np.pi / 4), *_phase_tables("T", "S")),
    }
    ef = ef_settings("projector")
    ex["ef"] = Experiment("ef", ef, (TableSpec(hv, hv),), (ef.combination(PLUS),), hofmann=False)
    es = ef_settings("unitary")
    ex["es"] = Experiment("es", es, (TableSpec(hv, hv, PLUS), TableSpec(hv, hv, MINUS)),
                          (es.combination(PLUS), es.combination(MINUS)), hofmann=False)
    return ex


EXPERIMENTS: dict[str, Experiment] = _build_experiments()


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    name: str
    measured: tuple[TruthTable, ...]
    ideal: tuple[TruthTable, ...]
    fidelities: tuple[float, ...]
    report: FidelityReport | None

    def to_dict(self) -> dict:
        d = {"experiment": self.name,
             "tables": [{"measured": m.to_dict(), "ideal": i.to_dict(), "classical_fidelity": f}
                        for m, i, f in zip(self.measured, self.ideal, self.fidelities)]}
        if self.report is not None:
            d["fidelity_report"] = self.report.to_dict()
        return d


def run_experiment(name: str, mode: str = "exact", noise: NoiseModel | None = None,
                   seed: int | None = None, n_draws: int = 64) -> ExperimentResult:
    try:
        exp = EXPERIMENTS[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    measured, ideal, fids = [], [], []
    for k, (spec, target) in enumerate(zip(exp.tables, exp.targets)):
        sub_seed = None if seed is None else seed * 16 + k
        m = measure_truth_table(exp.settings, spec.in_basis, spec.out_basis, mode, noise,
                                sub_seed, spec.klass, n_draws)
        i = ideal_truth_table(target, spec.in_basis, spec.out_basis)
        measured.append(m)
        ideal.append(i)
        fids.append(classical_fidelity(m, i))
    report = fidelity_report(*fids) if exp.hofmann else None
    return ExperimentResult(name, tuple(measured), tuple(ideal), tuple(fids), report)
