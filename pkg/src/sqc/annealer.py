"""Analog-stage stand-in: cubic-to-quadratic reduction and simulated annealing."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np

from .model import HuboInstance, SampleSet

QUBO_FORMAT_VERSION = 1


class UnsupportedArityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """``offset + sum_i a_i x_i + sum_{i<j} b_ij x_i x_j`` over booleans.

    Variables ``0..num_original-1`` are the source spins (x = (1 - s) / 2);
    the rest are auxiliaries standing for the product of their source pair.
    """

    num_vars: int
    linear: Mapping[int, float]
    quadratic: Mapping[tuple[int, int], float]
    offset: float = 0.0
    aux_map: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    num_original: int | None = None
    penalty: float = 0.0

    def __post_init__(self):
        if self.num_original is None:
            object.__setattr__(self, "num_original", self.num_vars - len(self.aux_map))
        for (i, j) in self.quadratic:
            if not 0 <= i < j < self.num_vars:
                raise ValueError(f"quadratic key {(i, j)} invalid")
        for name in ("linear", "quadratic", "aux_map"):
            value = getattr(self, name)
            object.__setattr__(self, name, MappingProxyType(dict(sorted(value.items()))))

    def energy(self, x) -> float:
        x = np.asarray(x)
        total = self.offset
        total += sum(c * x[i] for i, c in self.linear.items())
        total += sum(c * x[i] * x[j] for (i, j), c in self.quadratic.items())
        return float(total)

    def as_terms(self) -> dict[tuple[int, ...], float]:
        terms: dict[tuple[int, ...], float] = {(i,): c for i, c in self.linear.items()}
        terms.update(self.quadratic)
        return terms

    def encode(self, config) -> np.ndarray:
        """Spin configuration -> feasible boolean assignment (auxiliaries set to products)."""
        x = np.zeros(self.num_vars, dtype=np.int8)
        x[: self.num_original] = (1 - np.asarray(config, dtype=np.int8)) // 2
        for aux, (a, b) in self.aux_map.items():
            x[aux] = x[a] * x[b]
        return x

    def to_text(self) -> str:
        lines = [
            "# QUBO: offset, linear 'i a_i', quadratic 'i j b_ij', aux 'w a b'",
            f"version {QUBO_FORMAT_VERSION}",
            f"num_vars {self.num_vars}",
            f"num_original {self.num_original}",
            f"offset {self.offset!r}",
            f"penalty {self.penalty!r}",
        ]
        lines += [f"linear {i} {c!r}" for i, c in self.linear.items()]
        lines += [f"quadratic {i} {j} {c!r}" for (i, j), c in self.quadratic.items()]
        lines += [f"aux {w} {a} {b}" for w, (a, b) in self.aux_map.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuboInstance":
        head: dict[str, str] = {}
        linear, quadratic, aux = {}, {}, {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            kind, *rest = line.split()
            if kind == "linear":
                linear[int(rest[0])] = float(rest[1])
            elif kind == "quadratic":
                quadratic[(int(rest[0]), int(rest[1]))] = float(rest[2])
            elif kind == "aux":
                aux[int(rest[0])] = (int(rest[1]), int(rest[2]))
            else:
                head[kind] = rest[0]
        if int(head.get("version", -1)) != QUBO_FORMAT_VERSION:
            raise ValueError("unsupported QUBO version")
        return cls(
            int(head["num_vars"]), linear, quadratic, float(head["offset"]), aux,
            int(head["num_original"]), float(head.get("penalty", 0.0)),
        )


def spin_to_boolean(instance: HuboInstance) -> dict[tuple[int, ...], float]:
    """Expand prod_i (1 - 2 x_i) for every term; the key () holds the constant."""
    poly: dict[tuple[int, ...], float] = {}
    for key, coeff in instance.terms.items():
        for r in range(len(key) + 1):
            for sub in itertools.combinations(key, r):
                poly[sub] = poly.get(sub, 0.0) + coeff * (-2.0) ** r
    return {k: v for k, v in poly.items() if v != 0.0}


def hubo_to_qubo(instance: HuboInstance, penalty: float | str = "auto") -> QuboInstance:
    """Replace one variable pair of every cubic monomial by a shared auxiliary.

    Each auxiliary w = x_a x_b is enforced with ``penalty * (x_a x_b - 2 x_a w
    - 2 x_b w + 3 w)``, which is 0 when w equals the product and >= penalty
    otherwise.
    """
    if instance.max_order > 3:
        raise UnsupportedArityError(f"arity {instance.max_order} > 3 is not supported")
    poly = spin_to_boolean(instance)
    if penalty == "auto":
        penalty = 2.0 * sum(abs(c) for k, c in poly.items() if k)
    penalty = float(penalty)

    cubic = sorted(k for k in poly if len(k) == 3)
    freq = Counter(pair for k in cubic for pair in itertools.combinations(k, 2))
    n = instance.num_spins
    aux_of: dict[tuple[int, int], int] = {}
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}

    def add_quad(i, j, c):
        key = (i, j) if i < j else (j, i)
        quadratic[key] = quadratic.get(key, 0.0) + c

    for key, c in poly.items():
        if len(key) == 1:
            linear[key[0]] = linear.get(key[0], 0.0) + c
        elif len(key) == 2:
            add_quad(*key, c)
    for key in cubic:
        pairs = list(itertools.combinations(key, 2))
        pair = min(pairs, key=lambda p: (p not in aux_of, -freq[p], p))
        if pair not in aux_of:
            aux_of[pair] = n + len(aux_of)
        w = aux_of[pair]
        (rest,) = set(key) - set(pair)
        add_quad(w, rest, poly[key])
    for (a, b), w in aux_of.items():
        add_quad(a, b, penalty)
        add_quad(a, w, -2 * penalty)
        add_quad(b, w, -2 * penalty)
        linear[w] = linear.get(w, 0.0) + 3 * penalty

    return QuboInstance(
        n + len(aux_of),
        {i: c for i, c in linear.items() if c != 0.0},
        {k: c for k, c in quadratic.items() if c != 0.0},
        poly.get((), 0.0),
        {w: pair for pair, w in aux_of.items()},
        n,
        penalty,
    )


def decode(qubo: QuboInstance, x) -> np.ndarray:
    """Drop auxiliaries and map booleans back to spins."""
    x = np.asarray(x)
    return (1 - 2 * x[..., : qubo.num_original]).astype(np.int8)


# ---------------------------------------------------------------------------
# Simulated annealing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnealParams:
    """Geometric temperature ladder from ``t_hot`` to ``t_cold``.

    Temperatures left as None are derived from the problem: the hot end
    accepts the largest single-flip uphill move with probability 1/2, the
    cold end accepts the smallest with probability 1/100.
    """

    sweeps: int = 200
    restarts: int = 100
    t_hot: float | None = None
    t_cold: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1 or self.restarts < 1:
            raise ValueError("sweeps and restarts must be positive")
        if self.t_hot is not None and self.t_cold is not None:
            if not self.t_hot > self.t_cold > 0:
                raise ValueError("need t_hot > t_cold > 0")


class _Polynomial:
    """Term lists with per-variable adjacency, over spins or booleans."""

    def __init__(self, num_vars: int, terms: dict[tuple[int, ...], float], spin: bool):
        self.n = num_vars
        self.spin = spin
        self.keys = list(terms)
        self.coeffs = np.array([terms[k] for k in self.keys])
        self.adj: list[list[tuple[np.ndarray, float]]] = [[] for _ in range(num_vars)]
        for key, c in zip(self.keys, self.coeffs):
            for i in key:
                others = np.array([j for j in key if j != i], dtype=np.int64)
                self.adj[i].append((others, float(c)))

    def energy(self, state: np.ndarray) -> np.ndarray:
        s = state.astype(np.float64)
        out = np.zeros(state.shape[0])
        for key, c in zip(self.keys, self.coeffs):
            out += c * np.prod(s[:, key], axis=1)
        return out

    def delta(self, state: np.ndarray, i: int) -> np.ndarray:
        """Energy change of flipping variable i in every row."""
        field_ = np.zeros(state.shape[0])
        for others, c in self.adj[i]:
            if others.size:
                field_ += c * np.prod(state[:, others], axis=1)
            else:
                field_ += c
        if self.spin:
            return -2.0 * state[:, i] * field_
        return (1 - 2 * state[:, i]) * field_

    def delta_bounds(self) -> tuple[float, float]:
        scale = 2.0 if self.spin else 1.0
        big = max((scale * sum(abs(c) for _, c in row) for row in self.adj), default=0.0)
        small = min((scale * abs(c) for row in self.adj for _, c in row if c), default=0.0)
        return big, small


def _temperatures(poly: _Polynomial, params: AnnealParams) -> np.ndarray:
    big, small = poly.delta_bounds()
    t_hot = params.t_hot if params.t_hot is not None else max(big, 1e-12) / math.log(2)
    t_cold = params.t_cold if params.t_cold is not None else max(small, 1e-12) / math.log(100)
    t_cold = min(t_cold, t_hot)
    if params.sweeps == 1:
        return np.array([t_cold])
    return np.geomspace(t_hot, t_cold, params.sweeps)


def anneal_states(
    poly: _Polynomial, params: AnnealParams, check_every: int = 0, chunk: int = 256
) -> tuple[np.ndarray, np.ndarray]:
    """Best state visited per restart, with its energy.

    Restart r draws every random number from ``default_rng(seed + r)``, so the
    result does not depend on how restarts are batched into array rows.
    """
    temps = _temperatures(poly, params)
    states, values = [], []
    for start in range(0, params.restarts, chunk):
        seeds = range(params.seed + start, params.seed + min(start + chunk, params.restarts))
        b, e = _anneal_batch(poly, temps, [np.random.default_rng(s) for s in seeds], check_every)
        states.append(b)
        values.append(e)
    return np.concatenate(states), np.concatenate(values)


def _anneal_batch(poly: _Polynomial, temps: np.ndarray, gens, check_every: int):
    sweeps = temps.size
    init = np.stack([g.integers(0, 2, size=poly.n) for g in gens]).astype(np.int8)
    noise = np.stack([g.random((sweeps, poly.n)) for g in gens])
    state = (1 - 2 * init) if poly.spin else init
    cur = poly.energy(state)
    best, best_e = state.copy(), cur.copy()
    flips = 0
    for s, temp in enumerate(temps):
        for i in range(poly.n):
            d = poly.delta(state, i)
            accept = (d <= 0) | (noise[:, s, i] < np.exp(-np.maximum(d, 0) / temp))
            if poly.spin:
                state[accept, i] *= -1
            else:
                state[accept, i] ^= 1
            cur = cur + np.where(accept, d, 0.0)
            improved = cur < best_e
            if improved.any():
                best[improved] = state[improved]
                best_e = np.where(improved, cur, best_e)
            flips += 1
            if check_every and flips % check_every == 0:
                if not np.allclose(cur, poly.energy(state), atol=1e-9):
                    raise AssertionError("incremental energy drifted from full evaluation")
    return best, best_e


AnnealProblem = Union[HuboInstance, QuboInstance]


def simulated_anneal(
    problem: AnnealProblem,
    params: AnnealParams,
    instance: HuboInstance | None = None,
    check_every: int = 0,
) -> SampleSet:
    """One best-visited sample per restart, energies evaluated on the spin problem.

    For a QUBO the original HUBO must be passed as ``instance``.
    """
    if isinstance(problem, HuboInstance):
        poly = _Polynomial(problem.num_spins, dict(problem.terms), spin=True)
        best, _ = anneal_states(poly, params, check_every)
        return SampleSet.from_spins(problem, best)
    if instance is None:
        raise ValueError("annealing a QUBO needs the source HUBO for decoding")
    poly = _Polynomial(problem.num_vars, problem.as_terms(), spin=False)
    best, _ = anneal_states(poly, params, check_every)
    return SampleSet.from_spins(instance, decode(problem, best))
