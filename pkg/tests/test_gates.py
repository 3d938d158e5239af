import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctrlop.gates import (CNOT_SETTINGS, EXPERIMENTS, STATES, TruthTable, average_fidelity,
                          classical_fidelity, cu_settings, eigen_splitter_check, ef_settings,
                          fidelity_report, fringe_scan, ideal_truth_table, measure_truth_table,
                          named_gate, product_basis, run_experiment, tensor_basis)
from ctrlop.photonic.noise import CALIBRATED, NoiseModel
from ctrlop.photonic.schemes import MINUS, PLUS

from .conftest import random_state

CNOT = np.eye(4)[[0, 1, 3, 2]]


def test_state_library_orthonormal_pairs():
    for a, b in ["HV", "DA", "RL", "MN", "JK", "TS"]:
        assert abs(np.vdot(STATES[a], STATES[b])) < 1e-15
        assert np.linalg.norm(STATES[a]) == pytest.approx(1.0)


def test_hadamard_eigenbases():
    h = named_gate("H").matrix
    assert np.allclose(h @ STATES["M"], STATES["M"])
    assert np.allclose(h @ STATES["N"], -STATES["N"])
    # J/K are swapped by the Hadamard up to phase
    assert abs(np.vdot(STATES["K"], h @ STATES["J"])) == pytest.approx(1.0)


def test_named_gate_parsing():
    assert np.allclose(named_gate("zphase(pi/4)").matrix, np.diag([1, np.exp(1j * np.pi / 4)]))
    assert np.allclose(named_gate("Zphase", np.pi).matrix, np.diag([1, -1]))
    with pytest.raises(ValueError):
        named_gate("toffoli")


def test_basis_must_be_orthonormal():
    with pytest.raises(ValueError):
        product_basis(["HH", "HD", "VV", "VA"])


def test_cnot_exact_truth_table_is_permutation():
    hv = tensor_basis("HV", "HV")
    tt = measure_truth_table(CNOT_SETTINGS, hv, hv)
    assert np.allclose(tt.probabilities, CNOT.T ** 2, atol=1e-12)
    # each input survives with the class probability of an ideal gate
    assert np.allclose(tt.raw.sum(axis=1), 0.25, atol=1e-12)


def test_ideal_truth_table_explicit_oracle():
    basis = tensor_basis("DA", "DA")
    # CNOT in the diagonal basis: control D/A flips by the target phase
    expect = {"DD": "DD", "DA": "AA", "AD": "AD", "AA": "DA"}
    tt = ideal_truth_table(CNOT, basis, basis)
    for i, lab in enumerate(basis.labels):
        assert tt.probabilities[i, basis.labels.index(expect[lab])] == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["cnot", "ch", "cz", "cz-pi2", "cz-pi4"])
def test_controlled_gate_experiments_exact(name):
    res = run_experiment(name)
    for m, i in zip(res.measured, res.ideal):
        assert np.allclose(m.probabilities, i.probabilities, atol=1e-12)
        # complementary tables are classical permutations
        assert np.allclose(np.sort(i.probabilities, axis=1)[:, -1], 1.0, atol=1e-12)
    assert res.fidelities == pytest.approx((1.0, 1.0))
    assert res.report.fp_lower == pytest.approx(1.0) and res.report.f_avg_upper == pytest.approx(1.0)


def test_ef_rejects_hv_vh():
    res = run_experiment("ef")
    raw = res.measured[0].raw
    labels = res.measured[0].in_labels
    for lab in ("HV", "VH"):
        assert np.all(raw[labels.index(lab)] == 0)
    assert res.fidelities[0] == 1.0


def test_es_splits_into_complementary_classes():
    res = run_experiment("es")
    plus, minus = res.measured
    assert np.allclose(plus.raw.sum(axis=1) + minus.raw.sum(axis=1), 1.0)
    assert res.fidelities == (1.0, 1.0)


def test_unknown_experiment():
    with pytest.raises(ValueError):
        run_experiment("swap")


def test_sampled_truth_table_reproducible():
    hv = tensor_basis("HV", "HV")
    a = measure_truth_table(CNOT_SETTINGS, hv, hv, "sampled", CALIBRATED, 4)
    b = measure_truth_table(CNOT_SETTINGS, hv, hv, "sampled", CALIBRATED, 4)
    assert np.array_equal(a.counts, b.counts)
    with pytest.raises(ValueError):
        measure_truth_table(CNOT_SETTINGS, hv, hv, "sampled", CALIBRATED, None)


def test_classical_fidelity_definitions():
    ideal = TruthTable.from_raw(["a", "b"], ["x", "y"], [[1, 0], [0, 1]])
    meas = TruthTable.from_raw(["a", "b"], ["x", "y"], [[90, 10], [20, 80]])
    assert classical_fidelity(meas, ideal, "mean") == pytest.approx(0.85)
    assert classical_fidelity(meas, ideal, "ratio") == pytest.approx(170 / 200)
    filt = TruthTable.from_raw(["a", "b"], ["x", "y"], [[1, 0], [0, 0]])
    meas2 = TruthTable.from_raw(["a", "b"], ["x", "y"], [[95, 0], [5, 0]])
    assert classical_fidelity(meas2, filt) == pytest.approx(0.95)


@settings(max_examples=50)
@given(f1=st.floats(0, 1), f2=st.floats(0, 1))
def test_hofmann_bounds(f1, f2):
    r = fidelity_report(f1, f2)
    assert r.fp_lower <= r.fp_upper + 1e-15
    assert r.fp_lower == pytest.approx(max(0.0, f1 + f2 - 1))
    assert r.f_avg_lower == pytest.approx((4 * r.fp_lower + 1) / 5)


def test_fidelity_report_range():
    with pytest.raises(ValueError):
        fidelity_report(1.1, 0.5)
    assert average_fidelity(1.0) == 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_eigen_splitter_residuals(seed):
    phi = random_state(4, np.random.default_rng(seed))
    zz = np.diag([1, -1, -1, 1]).astype(complex)
    rep = eigen_splitter_check(zz, phi)
    assert rep.plus_residual < 1e-12 and rep.minus_residual < 1e-12
    assert rep.plus_probability + rep.minus_probability == pytest.approx(1.0, abs=1e-12)


def test_eigen_splitter_degenerate_and_invalid():
    rep = eigen_splitter_check(np.diag([1, -1, -1, 1]), [0, 1, 0, 0])
    assert rep.plus_degenerate and not rep.minus_degenerate
    with pytest.raises(ValueError):
        eigen_splitter_check(np.diag([1, 2, 1, 1]), [1, 0, 0, 0])


def test_fringe_exact_formula():
    theta = np.linspace(0, 2 * np.pi, 17)
    rows = fringe_scan(theta)
    c = 1 / 16
    assert np.allclose(rows[:, 1], c * (1 + np.cos(theta)) / 2, atol=1e-14)
    assert np.allclose(rows[:, 2], c * (1 - np.cos(theta)) / 2, atol=1e-14)


def test_fringe_sampled_visibility_drops_with_distinguishability():
    theta = np.array([0.0, np.pi])
    noise = NoiseModel(0.0, 0.5, 0.0, 20000)
    rows = fringe_scan(theta, "sampled", noise, seed=1)
    vis = (rows[0, 1] - rows[1, 1]) / (rows[0, 1] + rows[1, 1])
    assert vis == pytest.approx(0.5, abs=0.05)


def test_experiment_registry_names():
    assert set(EXPERIMENTS) == {"cnot", "ch", "cz", "cz-pi2", "cz-pi4", "ef", "es"}
    assert np.allclose(cu_settings(np.eye(2)).combination(PLUS), np.eye(4))
    assert np.allclose(ef_settings("unitary").combination(MINUS), np.diag([0, 2, 2, 0]))
