"""Digitized counterdiabatic circuits: IR, native-gate decomposition, layering."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .agp import Alpha1Profile, Schedule, adiabatic_hamiltonian, cd_pauli_terms, hubo_to_pauli
from .model import HuboInstance
from .pauli import PauliPolynomial, PauliString
from .simulator import BiasConfig, bias_angles

NATIVE_GATES = ("RZ", "SX", "X", "CZ", "RZZ", "RX", "RY")
ALL_GATES = NATIVE_GATES + ("PAULI_ROT",)
RZZ_MAX = math.pi / 2
MODES = ("cd_only", "full")


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    theta: float | None = None
    pauli: PauliString | None = None
    layer: str | None = None

    def __post_init__(self):
        if self.name not in ALL_GATES:
            raise ValueError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))


@dataclass(frozen=True)
class CircuitIR:
    num_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 0 <= q < self.num_qubits for q in g.qubits):
                raise ValueError(f"gate {g} acts outside {self.num_qubits} qubits")
            if g.name == "RZZ" and not 0 < g.theta <= RZZ_MAX:
                raise ValueError(f"fractional RZZ angle {g.theta} outside (0, pi/2]")

    def count_ops(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.name] = out.get(g.name, 0) + 1
        return out

    def to_text(self) -> str:
        lines = [f"# circuit ir v1", f"num_qubits {self.num_qubits}"]
        for g in self.gates:
            parts = [g.name, ",".join(map(str, g.qubits))]
            parts.append(repr(g.theta) if g.theta is not None else "-")
            if g.pauli is not None:
                parts.append("pauli=" + ",".join(f"{p}{q}" for q, p in g.pauli.ops))
            if g.layer is not None:
                parts.append(f"layer={g.layer}")
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CircuitIR":
        n, gates = None, []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "num_qubits":
                n = int(parts[1])
                continue
            extras = dict(p.split("=", 1) for p in parts[3:])
            pauli = None
            if "pauli" in extras:
                pauli = PauliString.from_ops((int(tok[1:]), tok[0]) for tok in extras["pauli"].split(","))
            gates.append(
                Gate(
                    parts[0],
                    tuple(int(q) for q in parts[1].split(",")),
                    None if parts[2] == "-" else float(parts[2]),
                    pauli,
                    extras.get("layer"),
                )
            )
        if n is None:
            raise ValueError("missing num_qubits line")
        return cls(n, tuple(gates))


# ---------------------------------------------------------------------------
# Decomposition into the native set
# ---------------------------------------------------------------------------


def _h(q: int) -> list[Gate]:
    # Hadamard up to global phase
    return [Gate("RZ", (q,), math.pi / 2), Gate("SX", (q,)), Gate("RZ", (q,), math.pi / 2)]


def _cnot(c: int, t: int) -> list[Gate]:
    return _h(t) + [Gate("CZ", (c, t))] + _h(t)


def rzz_gates(i: int, j: int, theta: float) -> list[Gate]:
    """exp(-i theta/2 Z_i Z_j) with every emitted RZZ angle inside (0, pi/2]."""
    theta = math.remainder(theta, 2 * math.pi)  # global sign only
    if theta == -math.pi:
        theta = math.pi
    if theta == 0.0:
        return []
    gates: list[Gate] = []
    if abs(theta) > RZZ_MAX:
        # RZZ(+-pi) is Z (x) Z up to phase
        gates += [Gate("RZ", (i,), math.pi), Gate("RZ", (j,), math.pi)]
        theta = theta - math.copysign(math.pi, theta)
        if theta == 0.0:
            return gates
    if theta > 0:
        gates.append(Gate("RZZ", (i, j), theta))
    else:
        # X on one qubit flips the sign of Z_i Z_j
        gates += [Gate("X", (i,)), Gate("RZZ", (i, j), -theta), Gate("X", (i,))]
    return gates


def decompose_pauli_rotation(p: PauliString, theta: float) -> list[Gate]:
    """Native-gate list equal to exp(-i theta/2 P) up to global phase."""
    if p.is_identity():
        raise ValueError("cannot decompose a rotation about the identity")
    pre: list[Gate] = []
    post: list[Gate] = []
    for q, letter in p.ops:
        if letter == "X":
            pre += _h(q)
            post += _h(q)
        elif letter == "Y":
            # SX maps Y to Z under conjugation; SX^dagger = X SX
            pre.append(Gate("SX", (q,)))
            post += [Gate("X", (q,)), Gate("SX", (q,))]
    support = p.support
    if len(support) == 1:
        core = [Gate("RZ", support, theta)]
    elif len(support) == 2:
        core = rzz_gates(support[0], support[1], theta)
    else:
        ladder = [g for a, b in zip(support, support[1:]) for g in _cnot(a, b)]
        unladder = [g for a, b in reversed(list(zip(support, support[1:]))) for g in _cnot(a, b)]
        core = ladder + [Gate("RZ", (support[-1],), theta)] + unladder
    return pre + core + post


def decompose_circuit(circuit: CircuitIR) -> CircuitIR:
    """Rewrite PAULI_ROT, RX, RY into the native set {RZ, SX, X, CZ, RZZ}."""
    out: list[Gate] = []
    for g in circuit.gates:
        if g.name == "PAULI_ROT":
            expanded = decompose_pauli_rotation(g.pauli, g.theta)
        elif g.name == "RX":
            expanded = decompose_pauli_rotation(PauliString.from_ops({g.qubits[0]: "X"}), g.theta)
        elif g.name == "RY":
            expanded = decompose_pauli_rotation(PauliString.from_ops({g.qubits[0]: "Y"}), g.theta)
        else:
            expanded = [g]
        out += [Gate(e.name, e.qubits, e.theta, e.pauli, g.layer) for e in expanded]
    return CircuitIR(circuit.num_qubits, tuple(out))


# ---------------------------------------------------------------------------
# Layer scheduling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerSchedule:
    layers: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def sizes(self) -> list[int]:
        return [len(layer) for layer in self.layers]

    def __len__(self):
        return len(self.layers)

    def is_valid(self, terms: Iterable[Sequence[int]]) -> bool:
        seen = []
        for layer in self.layers:
            used: set[int] = set()
            for t in layer:
                if used & set(t):
                    return False
                used |= set(t)
                seen.append(t)
        expected = {tuple(sorted(t)) for t in terms}
        return len(seen) == len(set(seen)) and set(seen) == expected


def color_terms(terms: Iterable[Sequence[int]]) -> LayerSchedule:
    """DSATUR colouring of the conflict graph (terms conflict iff they share a qubit)."""
    nodes = sorted({tuple(sorted(int(q) for q in t)) for t in terms})
    by_qubit: dict[int, list[int]] = {}
    for idx, t in enumerate(nodes):
        for q in t:
            by_qubit.setdefault(q, []).append(idx)
    nbrs = [set() for _ in nodes]
    for members in by_qubit.values():
        for a in members:
            nbrs[a].update(m for m in members if m != a)
    colour = [-1] * len(nodes)
    seen_colours = [set() for _ in nodes]
    for _ in range(len(nodes)):
        pick = max(
            (i for i in range(len(nodes)) if colour[i] < 0),
            key=lambda i: (len(seen_colours[i]), len(nbrs[i]), -i),
        )
        c = 0
        while c in seen_colours[pick]:
            c += 1
        colour[pick] = c
        for m in nbrs[pick]:
            seen_colours[m].add(c)
    classes: dict[int, list] = {}
    for t, c in zip(nodes, colour):
        classes.setdefault(c, []).append(t)
    ordered = sorted(classes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    return LayerSchedule(tuple(tuple(ts) for _, ts in ordered))


def _grouped_rotations(coeffs: dict[PauliString, float]):
    """Yield (layer index, support-sorted strings) in colouring order."""
    by_support: dict[tuple[int, ...], list[PauliString]] = {}
    for p in sorted(coeffs):
        by_support.setdefault(p.support, []).append(p)
    schedule = color_terms(by_support)
    for li, layer in enumerate(schedule.layers):
        yield li, [p for support in layer for p in by_support[support]]


# ---------------------------------------------------------------------------
# Circuit construction
# ---------------------------------------------------------------------------


def preparation_layer(bias: BiasConfig) -> list[Gate]:
    return [Gate("RY", (j,), float(t), layer="prep") for j, t in enumerate(bias_angles(bias))]


def build_dcqo_circuit(
    h_i: PauliPolynomial,
    h_f: HuboInstance,
    bias: BiasConfig,
    schedule: Schedule,
    mode: str = "cd_only",
) -> CircuitIR:
    """Bias-state preparation followed by ``n_trot`` Trotter steps.

    Each step applies exp(-i dt lam_dot alpha_1 A) for the counterdiabatic
    core A = i[H_i, H_f]; ``full`` mode first applies exp(-i dt H_ad(lam)).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = h_f.num_spins
    if bias.num_spins != n:
        raise ValueError("bias and instance sizes differ")
    gates = preparation_layer(bias)
    if schedule.n_trot == 0:
        return CircuitIR(n, tuple(gates))

    hf_poly = hubo_to_pauli(h_f)
    cd = cd_pauli_terms(h_i, hf_poly).real_coefficients()
    profile = Alpha1Profile(h_i, hf_poly) if cd else None
    cd_groups = list(_grouped_rotations(cd))
    dt = schedule.dt
    for k, t in enumerate(schedule.grid(), start=1):
        lam = schedule.lam(t)
        if mode == "full":
            ad = adiabatic_hamiltonian(h_i, hf_poly, lam).real_coefficients()
            for li, strings in _grouped_rotations(ad):
                gates += [
                    Gate("PAULI_ROT", p.support, 2 * dt * ad[p], p, f"t{k}/ad/{li}")
                    for p in strings
                ]
        if profile is None:
            continue
        strength = 2 * dt * schedule.lam_dot(t) * profile(lam)
        for li, strings in cd_groups:
            gates += [
                Gate("PAULI_ROT", p.support, strength * cd[p], p, f"t{k}/cd/{li}")
                for p in strings
            ]
    return CircuitIR(n, tuple(gates))
