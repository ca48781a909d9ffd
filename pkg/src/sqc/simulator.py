"""Dense statevector engine.

Amplitude index b encodes qubit j in bit j (qubit 0 least significant). All
operations accept arrays of shape (2**N,) or (2**N, k); the trailing axis
lets a whole unitary be pushed through a gate list at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .model import CapacityError, HuboInstance, SampleSet
from .pauli import PauliPolynomial, PauliString

MAX_QUBITS = 24
NORM_TOL = 1e-10

_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class BiasConfig:
    """Per-spin transverse fields ``h_x`` and longitudinal bias fields ``h_b``.

    The initial Hamiltonian is ``sum_j h_x[j] X_j - h_b[j] Z_j``: a positive
    bias favours spin +1 (bit 0), so ``h_b = <sigma^z>`` pulls the next run
    towards the measured magnetisation.
    """

    h_x: tuple[float, ...]
    h_b: tuple[float, ...] = field(default=())

    def __post_init__(self):
        hx = tuple(float(v) for v in self.h_x)
        hb = tuple(float(v) for v in self.h_b) if self.h_b else (0.0,) * len(hx)
        if len(hb) != len(hx):
            raise ValueError("h_x and h_b lengths differ")
        if not all(math.isfinite(v) for v in hx + hb):
            raise ValueError("bias fields must be finite")
        if any(v == 0.0 for v in hx):
            raise ValueError("h_x must be nonzero on every spin")
        object.__setattr__(self, "h_x", hx)
        object.__setattr__(self, "h_b", hb)

    @classmethod
    def uniform(cls, num_spins: int, h_x: float = -1.0) -> "BiasConfig":
        return cls((h_x,) * num_spins, (0.0,) * num_spins)

    @property
    def num_spins(self) -> int:
        return len(self.h_x)

    def with_bias(self, h_b: Sequence[float]) -> "BiasConfig":
        return BiasConfig(self.h_x, tuple(h_b))


def initial_hamiltonian(bias: BiasConfig) -> PauliPolynomial:
    terms = []
    for j, (hx, hb) in enumerate(zip(bias.h_x, bias.h_b)):
        terms.append((PauliString.from_ops({j: "X"}), hx))
        terms.append((PauliString.from_ops({j: "Z"}), -hb))
    return PauliPolynomial(terms)


def bias_angles(bias: BiasConfig) -> np.ndarray:
    """RY angles whose product state is the ground state of the initial Hamiltonian."""
    hx = np.asarray(bias.h_x)
    hb = np.asarray(bias.h_b)
    lam_min = -np.sqrt(hb**2 + hx**2)
    return 2.0 * np.arctan((hb + lam_min) / hx)


def _check_capacity(n: int) -> None:
    if n > MAX_QUBITS:
        raise CapacityError(f"statevector limited to {MAX_QUBITS} qubits, got {n}")


def num_qubits(state: np.ndarray) -> int:
    n = state.shape[0].bit_length() - 1
    if 1 << n != state.shape[0]:
        raise ValueError("state length is not a power of two")
    return n


def zero_state(n: int) -> np.ndarray:
    _check_capacity(n)
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    return state


def product_state(single_qubit_states: Sequence[np.ndarray]) -> np.ndarray:
    _check_capacity(len(single_qubit_states))
    state = np.ones(1, dtype=complex)
    for vec in single_qubit_states:
        # later qubits are more significant
        state = np.kron(np.asarray(vec, dtype=complex), state)
    return state


def prepare_bias_state(bias: BiasConfig) -> np.ndarray:
    thetas = bias_angles(bias)
    return product_state([np.array([math.cos(t / 2), math.sin(t / 2)]) for t in thetas])


@lru_cache(maxsize=64)
def _indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _parity_sign(idx: np.ndarray, mask: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


def _bcast(vec: np.ndarray, state: np.ndarray) -> np.ndarray:
    return vec.reshape(vec.shape + (1,) * (state.ndim - 1))


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    """P |psi> by index arithmetic: X/Y permute amplitudes, Z/Y contribute signs."""
    n = num_qubits(state)
    if (p.x | p.z) >> n:
        raise ValueError(f"Pauli string {p} exceeds {n} qubits")
    idx = _indices(n)
    src = idx ^ p.x
    phase = (1, 1j, -1, -1j)[bin(p.x & p.z).count("1") % 4]
    return phase * _bcast(_parity_sign(src, p.z), state) * state[src]


def apply_pauli_rotation(state: np.ndarray, p: PauliString, theta: float) -> np.ndarray:
    """exp(-i theta/2 P) |psi>."""
    if p.is_identity():
        return np.exp(-0.5j * theta) * state
    return math.cos(theta / 2) * state - 1j * math.sin(theta / 2) * apply_pauli(state, p)


def apply_single_qubit(state: np.ndarray, matrix: np.ndarray, q: int) -> np.ndarray:
    n = num_qubits(state)
    if not 0 <= q < n:
        raise ValueError(f"qubit {q} out of range for {n} qubits")
    shaped = state.reshape((1 << (n - q - 1), 2, 1 << q, -1))
    out = np.einsum("ij,ajbk->aibk", matrix, shaped)
    return out.reshape(state.shape)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


SINGLE_QUBIT_GATES = {
    "X": lambda theta: _X,
    "SX": lambda theta: _SX,
    "RZ": _rz,
    "RX": _rx,
    "RY": _ry,
}


def apply_native_gate(state: np.ndarray, gate) -> np.ndarray:
    """Apply a gate object exposing ``name``, ``qubits``, ``theta`` and ``pauli``."""
    name = gate.name
    if name in SINGLE_QUBIT_GATES:
        (q,) = gate.qubits
        return apply_single_qubit(state, SINGLE_QUBIT_GATES[name](gate.theta), q)
    if name == "CZ":
        i, j = gate.qubits
        mask = (1 << i) | (1 << j)
        idx = _indices(num_qubits(state))
        sign = np.where((idx & mask) == mask, -1.0, 1.0)
        return _bcast(sign, state) * state
    if name == "RZZ":
        i, j = gate.qubits
        return apply_pauli_rotation(state, PauliString.z_string((i, j)), gate.theta)
    if name == "PAULI_ROT":
        return apply_pauli_rotation(state, gate.pauli, gate.theta)
    raise ValueError(f"unknown gate {name!r}")


def apply_gates(state: np.ndarray, gates: Iterable) -> np.ndarray:
    for gate in gates:
        state = apply_native_gate(state, gate)
    return state


def run_circuit(circuit, state: np.ndarray | None = None) -> np.ndarray:
    if state is None:
        state = zero_state(circuit.num_qubits)
    return apply_gates(state, circuit.gates)


def gates_unitary(gates: Iterable, n: int) -> np.ndarray:
    _check_capacity(n)
    return apply_gates(np.eye(1 << n, dtype=complex), gates)


def norm(state: np.ndarray) -> float:
    return float(np.linalg.norm(state))


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def expectation_z(state: np.ndarray, j: int) -> float:
    n = num_qubits(state)
    if not 0 <= j < n:
        raise ValueError(f"qubit {j} out of range for {n} qubits")
    return float(np.dot(probabilities(state), _parity_sign(_indices(n), 1 << j)))


def sample(state: np.ndarray, n_shots: int, seed: int, instance: HuboInstance) -> SampleSet:
    """Inverse-CDF sampling over the fixed amplitude ordering."""
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    n = num_qubits(state)
    if instance.num_spins != n:
        raise ValueError("instance and state sizes differ")
    cdf = np.cumsum(probabilities(state))
    rng = np.random.default_rng(seed)
    u = rng.random(n_shots) * cdf[-1]
    outcome = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    bits = ((outcome[:, None] >> np.arange(n)) & 1).astype(np.int8)
    return SampleSet.from_spins(instance, 1 - 2 * bits)
