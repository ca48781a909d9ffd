import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_instance
from sqc.agp import Schedule, adiabatic_hamiltonian, alpha1, build_schedule, cd_pauli_terms, hubo_to_pauli
from sqc.circuit import (
    RZZ_MAX,
    CircuitIR,
    Gate,
    LayerSchedule,
    build_dcqo_circuit,
    color_terms,
    decompose_circuit,
    decompose_pauli_rotation,
    rzz_gates,
)
from sqc.model import HuboInstance, heavy_hex_156
from sqc.pauli import PauliPolynomial, PauliString
from sqc.simulator import (
    BiasConfig,
    apply_pauli_rotation,
    gates_unitary,
    initial_hamiltonian,
    prepare_bias_state,
    run_circuit,
)


def phase_aligned_error(u, v):
    """Max elementwise |u - e^{i phi} v| with phi fitted from the largest entry."""
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    phase = u[k] / v[k]
    return float(np.max(np.abs(u - phase * v))), abs(abs(phase) - 1)


def rotation_oracle(p, theta, n):
    return expm(-0.5j * theta * p.to_dense(n))


# --- decomposition --------------------------------------------------------


def test_single_z_is_rz():
    gates = decompose_pauli_rotation(PauliString.from_label("Z"), 0.4)
    assert [(g.name, g.qubits, g.theta) for g in gates] == [("RZ", (0,), 0.4)]


def test_zz_uses_fractional_gate():
    gates = decompose_pauli_rotation(PauliString.from_label("ZZ"), 0.4)
    assert [(g.name, g.qubits, g.theta) for g in gates] == [("RZZ", (0, 1), 0.4)]


def test_yzz_against_matrix_exponential():
    p = PauliString.from_label("YZZ")
    u = gates_unitary(decompose_pauli_rotation(p, 0.83), 3)
    err, drift = phase_aligned_error(u, rotation_oracle(p, 0.83, 3))
    assert err < 1e-10 and drift < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3])
def test_every_string_decomposes(n):
    rng = np.random.default_rng(n)
    for letters in itertools.product("IXYZ", repeat=n):
        label = "".join(letters)
        if set(label) == {"I"}:
            continue
        p = PauliString.from_label(label)
        for theta in rng.uniform(-2 * math.pi, 2 * math.pi, size=4):
            gates = decompose_pauli_rotation(p, float(theta))
            assert {g.name for g in gates} <= {"RZ", "SX", "X", "CZ", "RZZ"}
            assert all(0 < g.theta <= RZZ_MAX for g in gates if g.name == "RZZ")
            err, drift = phase_aligned_error(gates_unitary(gates, n), rotation_oracle(p, theta, n))
            assert err < 1e-10 and drift < 1e-10


@pytest.mark.parametrize("theta", [math.pi / 2, math.pi, -math.pi, 3.0, -0.2, -1.7, 2 * math.pi, 7.5, 1e-9])
def test_rzz_rewriting(theta):
    gates = rzz_gates(0, 1, theta)
    assert all(0 < g.theta <= RZZ_MAX for g in gates if g.name == "RZZ")
    err, _ = phase_aligned_error(gates_unitary(gates, 2), rotation_oracle(PauliString.from_label("ZZ"), theta, 2))
    assert err < 1e-10


def test_identity_rotation_rejected():
    with pytest.raises(ValueError):
        decompose_pauli_rotation(PauliString(0, 0), 0.3)


def test_ir_rejects_out_of_range():
    with pytest.raises(ValueError):
        CircuitIR(2, (Gate("RZZ", (0, 1), 2.0),))
    with pytest.raises(ValueError):
        CircuitIR(2, (Gate("RZ", (2,), 0.1),))
    with pytest.raises(ValueError):
        Gate("CNOT", (0, 1))


# --- colouring ------------------------------------------------------------


def test_disjoint_edges_one_layer():
    assert color_terms([(0, 1), (2, 3)]).sizes == [2]


def test_triangle_three_layers():
    sched = color_terms([(0, 1), (1, 2), (0, 2)])
    assert len(sched) == 3 and sched.is_valid([(0, 1), (1, 2), (0, 2)])


def test_heavy_hex_edges_three_layers():
    cmap = heavy_hex_156()
    sched = color_terms(cmap.edges)
    assert len(sched) == 3
    assert sched.is_valid(cmap.edges)


def test_heavy_hex_triples_layering():
    cmap = heavy_hex_156()
    sched = color_terms(cmap.triples)
    assert len(sched) <= 7
    assert sum(sched.sizes) == 244
    assert sched.is_valid(cmap.triples)
    assert sched.sizes == sorted(sched.sizes, reverse=True)


def test_is_valid_detects_overlap_and_missing_terms():
    bad = LayerSchedule((((0, 1), (1, 2)),))
    assert not bad.is_valid([(0, 1), (1, 2)])
    assert not LayerSchedule((((0, 1),),)).is_valid([(0, 1), (2, 3)])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 9), min_size=1, max_size=3, unique=True), max_size=25))
def test_colouring_always_valid_and_deterministic(terms):
    sched = color_terms(terms)
    assert sched.is_valid(terms)
    assert color_terms(list(reversed(terms))) == sched


# --- circuit construction -------------------------------------------------


def one_qubit_problem():
    h_i = PauliPolynomial.from_labels([(-1, "X")])
    return h_i, HuboInstance(1, {(0,): 1.0}), BiasConfig.uniform(1)


def test_zero_steps_gives_preparation_only():
    h_i, inst, bias = one_qubit_problem()
    circ = build_dcqo_circuit(h_i, inst, bias, Schedule(1.0, 0))
    assert [(g.name, g.layer) for g in circ.gates] == [("RY", "prep")]


def test_single_qubit_cd_angle():
    h_i, inst, bias = one_qubit_problem()
    sched = build_schedule(1.0, 1)
    circ = build_dcqo_circuit(h_i, inst, bias, sched)
    prep, rot = circ.gates
    assert prep.name == "RY" and prep.theta == pytest.approx(math.pi / 2)
    assert rot.name == "PAULI_ROT" and rot.pauli == PauliString.from_label("Y")
    t = 0.5
    lam = math.sin(math.pi * t / 2) ** 2
    lam_dot = (math.pi / 2) * math.sin(math.pi * t)
    alpha = -1.0 / (4 * ((1 - lam) ** 2 + lam**2))
    # i[-X, Z] = -2Y
    assert rot.theta == pytest.approx(2 * 1.0 * lam_dot * alpha * -2.0, abs=1e-12)


def test_single_qubit_circuit_reaches_ground_state():
    h_i, inst, bias = one_qubit_problem()
    psi = run_circuit(build_dcqo_circuit(h_i, inst, bias, build_schedule(1.0, 3)))
    # h_z = 1 puts the ground state at spin -1, i.e. |1>
    assert abs(psi[1]) ** 2 > 0.95


def _instance_and_bias(seed, n=4):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    bias = BiasConfig(tuple([-1.0] * n), tuple(rng.uniform(-1, 1, size=n)))
    return inst, bias


@pytest.mark.parametrize("mode", ["cd_only", "full"])
def test_ir_matches_direct_rotations(mode):
    inst, bias = _instance_and_bias(0)
    h_i = initial_hamiltonian(bias)
    sched = build_schedule(1.0, 2)
    circ = build_dcqo_circuit(h_i, inst, bias, sched, mode)

    # expected angle per (step, block, string), recomputed from the polynomials
    h_f = hubo_to_pauli(inst)
    cd = cd_pauli_terms(h_i, h_f).real_coefficients()
    expected = {}
    for k, t in enumerate(sched.grid(), start=1):
        lam = sched.lam(t)
        if mode == "full":
            for p, c in adiabatic_hamiltonian(h_i, h_f, lam).real_coefficients().items():
                expected[(k, "ad", p)] = 2 * sched.dt * c
        for p, c in cd.items():
            expected[(k, "cd", p)] = 2 * sched.dt * sched.lam_dot(t) * alpha1(h_i, h_f, lam) * c
    got = {}
    for g in circ.gates[4:]:
        step, block, _ = g.layer.split("/")
        key = (int(step[1:]), block, g.pauli)
        assert key not in got
        got[key] = g.theta
    assert set(got) == set(expected)
    for key, theta in got.items():
        assert theta == pytest.approx(expected[key], rel=1e-10, abs=1e-14)

    psi = prepare_bias_state(bias)
    for g in circ.gates[4:]:
        psi = apply_pauli_rotation(psi, g.pauli, expected[(int(g.layer[1:].split("/")[0]), g.layer.split("/")[1], g.pauli)])
    assert abs(np.vdot(psi, run_circuit(circ))) ** 2 >= 1 - 1e-10


def test_decomposed_circuit_equals_ir():
    inst, bias = _instance_and_bias(1)
    circ = build_dcqo_circuit(initial_hamiltonian(bias), inst, bias, build_schedule(1.0, 2), "full")
    native = decompose_circuit(circ)
    assert set(native.count_ops()) <= {"RZ", "SX", "X", "CZ", "RZZ"}
    a, b = run_circuit(circ), run_circuit(native)
    assert abs(np.vdot(a, b)) ** 2 >= 1 - 1e-10


def test_layers_follow_colouring():
    inst, bias = _instance_and_bias(2, n=5)
    circ = build_dcqo_circuit(initial_hamiltonian(bias), inst, bias, build_schedule(1.0, 1))
    by_layer = {}
    for g in circ.gates[5:]:
        by_layer.setdefault(g.layer, []).append(g)
    for layer, gates in by_layer.items():
        assert layer.startswith("t1/cd/")
        supports = {g.qubits for g in gates}
        flat = [q for s in supports for q in s]
        assert len(flat) == len(set(flat)), layer


def test_construction_deterministic_and_text_round_trip():
    inst, bias = _instance_and_bias(3)
    h_i = initial_hamiltonian(bias)
    a = build_dcqo_circuit(h_i, inst, bias, build_schedule(1.0, 3), "full")
    b = build_dcqo_circuit(h_i, inst, bias, build_schedule(1.0, 3), "full")
    assert a == b
    text = a.to_text()
    assert CircuitIR.from_text(text) == a
    assert CircuitIR.from_text(text).to_text() == text


def test_bad_mode_and_size_mismatch():
    h_i, inst, bias = one_qubit_problem()
    with pytest.raises(ValueError):
        build_dcqo_circuit(h_i, inst, bias, build_schedule(1.0, 1), "both")
    with pytest.raises(ValueError):
        build_dcqo_circuit(h_i, inst, BiasConfig.uniform(2), build_schedule(1.0, 1))
