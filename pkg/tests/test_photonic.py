import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctrlop.operators import fidelity
from ctrlop.photonic import (CapacityError, FockState, ModeLabel, NoiseModel, OpticalCircuit,
                             OpticalElement, apply_element, build_cp_gate, run_entanglement_scheme,
                             run_linear_combination, sample_counts)
from ctrlop.photonic.elements import hwp, qwp
from ctrlop.photonic.fock import modes_for_ports, postselect
from ctrlop.photonic.noise import NoiseDraw, averaged_probabilities, linear_combination_densities
from ctrlop.photonic.schemes import MINUS, PLUS, accepting_probability
from ctrlop.photonic.sources import sagnac_plus_h, spatially_entangled

from .conftest import random_state, random_unitary

H, V = np.array([1, 0], complex), np.array([0, 1], complex)


def two_port_state(occ, ports=("a", "b")):
    return FockState(modes_for_ports(ports), {occ: 1.0})


def test_hong_ou_mandel_dip():
    # identical photons in both inputs never leave through different outputs
    out = apply_element(two_port_state((1, 0, 1, 0)), OpticalElement("BS", ("a", "b")))
    assert abs(out.amplitude({ModeLabel("a", "H"): 1, ModeLabel("b", "H"): 1})) < 1e-15
    assert abs(out.amplitude({ModeLabel("a", "H"): 2})) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude({ModeLabel("b", "H"): 2})) ** 2 == pytest.approx(0.5)


def test_orthogonal_polarizations_do_not_bunch():
    out = apply_element(two_port_state((1, 0, 0, 1)), OpticalElement("BS", ("a", "b")))
    assert abs(out.amplitude({ModeLabel("a", "H"): 1, ModeLabel("b", "V"): 1})) ** 2 == pytest.approx(0.25)
    assert out.norm2 == pytest.approx(1.0)


def test_pbs_routes_by_polarization():
    pbs = OpticalElement("PBS", ("a", "b"))
    h_in = apply_element(two_port_state((1, 0, 0, 0)), pbs)
    v_in = apply_element(two_port_state((0, 1, 0, 0)), pbs)
    assert h_in.terms == {(1, 0, 0, 0): 1}
    assert v_in.terms == {(0, 0, 0, 1): 1}


def test_waveplate_matrices():
    d = np.array([1, 1]) / np.sqrt(2)
    assert fidelity(hwp(np.pi / 8) @ H, d) == pytest.approx(1.0)
    assert np.allclose(hwp(np.pi / 4) @ H, V)
    circ = qwp(np.pi / 4) @ H
    assert abs(abs(circ[0]) - abs(circ[1])) < 1e-12
    assert np.angle(circ[1] / circ[0]) == pytest.approx(np.pi / 2) or \
        np.angle(circ[1] / circ[0]) == pytest.approx(-np.pi / 2)


def test_capacity_limits():
    with pytest.raises(CapacityError):
        FockState(modes_for_ports(["a"]), {(5, 0): 1.0})
    with pytest.raises(CapacityError):
        FockState(modes_for_ports([str(i) for i in range(9)]), {})


def test_polcnot_rejects_multiphoton_target():
    state = FockState(modes_for_ports(["c", "t"]), {(1, 0, 2, 0): 1.0})
    with pytest.raises(ValueError, match="multi-photon"):
        apply_element(state, OpticalElement("PolCNOT", ("c", "t")))


def test_unknown_port():
    with pytest.raises(KeyError):
        apply_element(two_port_state((1, 0, 0, 0)), OpticalElement("HWP", ("zz",), 0.1))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_cp_gate_routes_target(seed):
    rng = np.random.default_rng(seed)
    ctrl, tgt = random_state(2, rng), random_state(2, rng)
    modes = modes_for_ports(["1", "2r", "2b"])
    state = FockState.single_photons(modes, ["1", "2b"], np.kron(ctrl, tgt))
    out = build_cp_gate("1", "2").run(state)
    # control H: target in red port, control V: target stays blue; polarizations intact
    red = postselect(out, ["1", "2r"])
    blue = postselect(out, ["1", "2b"])
    assert np.allclose(red, np.kron(ctrl[0] * H, tgt), atol=1e-12)
    assert np.allclose(blue, np.kron(ctrl[1] * V, tgt), atol=1e-12)


def test_circuit_json_round_trip():
    circ = build_cp_gate("1", "2")
    back = OpticalCircuit.from_dict(circ.to_dict())
    assert back.to_dict() == circ.to_dict()


@pytest.mark.parametrize("n", [1, 2])
def test_entanglement_scheme_patterns(n, rng):
    u = random_unitary(2 ** n, 11 + n)
    ctrl, psi = random_state(2, rng), random_state(2 ** n, rng)
    res = run_entanglement_scheme(n, u, np.kron(ctrl, psi))
    even = np.concatenate([ctrl[0] * psi, ctrl[1] * u @ psi])
    odd = np.concatenate([ctrl[0] * psi, -ctrl[1] * u @ psi])
    n_acc = 0
    for pattern, outcome in res.items():
        if pattern.ports[0] != "1r":
            continue
        target = even if outcome.accepting else odd
        assert fidelity(outcome.state, target) > 1 - 1e-12
        n_acc += outcome.accepting
    assert n_acc == 2 ** (n - 1)
    assert accepting_probability(res) == pytest.approx(0.25, abs=1e-12)
    assert sum(o.probability for o in res.values()) == pytest.approx(1.0, abs=1e-12)


def test_pattern_labels():
    res = run_entanglement_scheme(1, np.eye(2), np.kron(H, H))
    assert {p.label for p in res} == {"1,2", "1,2'", "1',2", "1',2'"}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_linear_combination_matches_operator_sum(seed):
    rng = np.random.default_rng(seed)
    a, b = random_unitary(4, seed), random_unitary(4, seed + 1)
    phi = random_state(4, rng)
    res = run_linear_combination(a, b, phi)
    for name, m in ((PLUS, a + b), (MINUS, a - b)):
        v = m @ phi / 2
        assert np.allclose(res[name].state.amplitudes, v, atol=1e-12)
        assert res[name].probability == pytest.approx(np.vdot(v, v).real, abs=1e-12)


def test_source_requires_normalized_phi():
    with pytest.raises(ValueError, match="normalized"):
        spatially_entangled(np.array([1, 1, 0, 0]), 2)


def test_sagnac_source_is_plus_h():
    theta = 0.7
    state = sagnac_plus_h(theta)
    plus_h = np.kron([1, 1], [1, 0]) / np.sqrt(2)
    red = postselect(state, ["1r", "2r"])
    blue = postselect(state, ["1b", "2b"])
    assert np.allclose(red, plus_h / np.sqrt(2), atol=1e-12)
    assert np.allclose(blue, np.exp(1j * theta) * plus_h / np.sqrt(2), atol=1e-12)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(distinguishability=1.5)
    with pytest.raises(ValueError):
        NoiseModel(phase_jitter_sigma=-0.1)


def test_fully_distinguishable_source_is_incoherent_sum():
    phi = np.array([1, 0, 0, 0], complex)
    draw = NoiseDraw(0.0, (0.0,) * 4, 0.0)
    e = np.eye(2)
    z = np.diag([1, -1])
    rho = linear_combination_densities(e, e, z, z, phi, draw)
    # no interference: each branch (weight 1/2) spreads evenly over the four patterns
    for name in (PLUS, MINUS):
        assert np.trace(rho[name]).real == pytest.approx(0.5)
    # the coherent source sends everything into A+B for this input
    coherent = linear_combination_densities(e, e, z, z, phi, NoiseDraw(0.0, (0.0,) * 4, 1.0))
    assert np.trace(coherent[PLUS]).real == pytest.approx(1.0)
    assert np.trace(coherent[MINUS]).real == pytest.approx(0.0, abs=1e-15)


def test_sample_counts_reproducible_and_rejects_bad_input():
    probs = {"x": 0.2, "y": 0.3}
    noise = NoiseModel(poisson_counts=1000)
    c1, c2 = sample_counts(probs, noise, 5), sample_counts(probs, noise, 5)
    assert c1 == c2 and all(isinstance(v, int) for v in c1.values())
    with pytest.raises(ValueError):
        sample_counts({"x": 0.8, "y": 0.5}, noise, 1)


def test_sample_counts_mean():
    noise = NoiseModel(poisson_counts=10_000)
    totals = np.array([list(sample_counts({"x": 0.25, "y": 0.5}, noise, s).values()) for s in range(40)])
    mean = totals.mean(axis=0)
    assert mean[0] == pytest.approx(2500, rel=0.02)
    assert mean[1] == pytest.approx(5000, rel=0.02)


def cp_gate_matrix():
    """CP circuit on control x {H_2b, V_2b, H_2r, V_2r}, one photon per slot."""
    modes = modes_for_ports(["1", "2r", "2b"])
    levels = [("2b", "H"), ("2b", "V"), ("2r", "H"), ("2r", "V")]
    circ = build_cp_gate("1", "2")
    m = np.zeros((8, 8), complex)
    for c, cpol in enumerate("HV"):
        for j, (port, pol) in enumerate(levels):
            occ = [0] * len(modes)
            occ[modes.index(ModeLabel("1", cpol))] += 1
            occ[modes.index(ModeLabel(port, pol))] += 1
            out = circ.run(FockState(modes, {tuple(occ): 1.0}))
            for c2, cpol2 in enumerate("HV"):
                for i, (p2, pol2) in enumerate(levels):
                    m[4 * c2 + i, 4 * c + j] = out.amplitude({ModeLabel("1", cpol2): 1, ModeLabel(p2, pol2): 1})
    return m


def test_cp_gate_is_level_swap_on_blue_inputs():
    m = cp_gate_matrix()
    assert np.allclose(m.conj().T @ m, np.eye(8), atol=1e-12)
    xa = np.eye(4)[[2, 3, 0, 1]]
    cxa = np.block([[xa, np.zeros((4, 4))], [np.zeros((4, 4)), np.eye(4)]])
    blue_cols = [0, 1, 4, 5]
    assert np.allclose(m[:, blue_cols], cxa[:, blue_cols], atol=1e-12)


@pytest.mark.parametrize("kind,angle", [("BS", 0), ("PBS", 0), ("HWP", 0.3), ("QWP", 1.1), ("PhaseShift", 0.7)])
def test_elements_conserve_photons_and_norm(kind, angle, rng):
    ports = ("a", "b") if kind in ("BS", "PBS") else ("a",)
    modes = modes_for_ports(["a", "b"])
    terms = {(1, 0, 1, 0): 0.6, (0, 1, 0, 1): 0.8j, (2, 0, 0, 0): 0.0}
    out = apply_element(FockState(modes, terms), OpticalElement(kind, ports, angle))
    assert out.n_photons == 2 and all(sum(o) == 2 for o in out.terms)
    assert out.norm2 == pytest.approx(1.0, abs=1e-12)


def test_polarizer_reduces_norm():
    out = apply_element(two_port_state((1, 0, 0, 0)), OpticalElement("Polarizer", ("a",), np.pi / 4))
    assert out.norm2 == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_parallelogram_law(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    phi = random_state(4, rng)
    res = run_linear_combination(a, b, phi)
    lhs = 4 * (res[PLUS].probability + res[MINUS].probability)
    rhs = 2 * (np.linalg.norm(a @ phi) ** 2 + np.linalg.norm(b @ phi) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_large_jitter_washes_out_splitter_interference():
    e, z = np.eye(2), np.diag([1, -1])
    d = np.array([1, 1, 1, 1], complex) / 2
    # uniform phase average of cos is zero: both classes get half the pairs
    model = NoiseModel(phase_jitter_sigma=50.0, poisson_counts=0)
    probs = averaged_probabilities(
        lambda draw: {k: np.trace(r).real for k, r in
                      linear_combination_densities(e, e, z, z, d, draw).items()},
        model, np.random.default_rng(0), 4000)
    assert probs[PLUS] == pytest.approx(0.5, abs=0.03)
    assert probs[MINUS] == pytest.approx(0.5, abs=0.03)


def test_ideal_sampling_matches_probabilities():
    probs = {"a": 0.1, "b": 0.15}
    n = 100_000
    counts = sample_counts(probs, NoiseModel(poisson_counts=n), 3)
    for k, p in probs.items():
        assert abs(counts[k] - n * p) < 3 * np.sqrt(n * p)
