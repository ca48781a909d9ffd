"""Higher-order Ising problems: instances, energies, exact reference, metrics.

Spin/bit convention used everywhere in the package: bit 0 <-> spin +1 and
bit 1 <-> spin -1, so that sigma^z |0> = +|0>. A bitstring is written with
qubit 0 as its first character.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

SIDON_VALUES = tuple(
    sign * Fraction(num, 28) for num in (8, 13, 19, 28) for sign in (1, -1)
)
SIDON_FLOATS = tuple(float(v) for v in SIDON_VALUES)

BRUTE_FORCE_MAX_SPINS = 26
INSTANCE_FORMAT_VERSION = 1


class CapacityError(ValueError):
    """Problem is too large for an exhaustive or dense method."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def _canonical_key(key: Iterable[int]) -> tuple[int, ...]:
    return tuple(int(k) for k in key)


@dataclass(frozen=True, eq=False)
class HuboInstance:
    """Sparse spin polynomial ``sum_t c_t prod_{i in t} s_i``.

    ``terms`` maps strictly increasing index tuples to nonzero coefficients.
    """

    num_spins: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_spins < 1:
            raise ValueError("num_spins must be positive")
        clean = {}
        for key, coeff in self.terms.items():
            key = _canonical_key(key)
            if len(key) == 0:
                raise ValueError("constant terms are not supported")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"term {key} is not strictly ascending")
            if key[0] < 0 or key[-1] >= self.num_spins:
                raise ValueError(f"term {key} out of range for {self.num_spins} spins")
            coeff = float(coeff)
            if coeff != 0.0:
                clean[key] = coeff
        ordered = dict(sorted(clean.items(), key=lambda kv: (len(kv[0]), kv[0])))
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    @classmethod
    def from_terms(cls, num_spins: int, terms: Iterable[tuple[Sequence[int], float]]):
        """Build an instance, sorting index tuples and summing duplicates."""
        acc: dict[tuple[int, ...], float] = {}
        for key, coeff in terms:
            key = tuple(sorted(int(k) for k in key))
            if len(set(key)) != len(key):
                raise ValueError(f"repeated index in term {key}; s_i^2 = 1 must be reduced first")
            acc[key] = acc.get(key, 0.0) + float(coeff)
        return cls(num_spins, acc)

    def __eq__(self, other):
        if not isinstance(other, HuboInstance):
            return NotImplemented
        return self.num_spins == other.num_spins and dict(self.terms) == dict(other.terms)

    def __add__(self, other: "HuboInstance") -> "HuboInstance":
        if self.num_spins != other.num_spins:
            raise ValueError("instances act on different numbers of spins")
        return HuboInstance.from_terms(
            self.num_spins, itertools.chain(self.terms.items(), other.terms.items())
        )

    def scaled(self, factor: float) -> "HuboInstance":
        return HuboInstance(self.num_spins, {k: factor * c for k, c in self.terms.items()})

    @property
    def max_order(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def order_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for key in self.terms:
            counts[len(key)] = counts.get(len(key), 0) + 1
        return counts

    def neighbourhoods(self) -> list[list[tuple[tuple[int, ...], float]]]:
        """Per spin, the terms that contain it."""
        out: list[list] = [[] for _ in range(self.num_spins)]
        for key, coeff in self.terms.items():
            for i in key:
                out[i].append((key, coeff))
        return out


def energy(instance: HuboInstance, config: Sequence[int]) -> float:
    spins = np.asarray(config)
    if spins.shape != (instance.num_spins,):
        raise ValueError(
            f"config has length {spins.size}, instance has {instance.num_spins} spins"
        )
    total = 0.0
    for key, coeff in instance.terms.items():
        total += coeff * float(np.prod(spins[list(key)]))
    return total


def energies(instance: HuboInstance, spins: np.ndarray) -> np.ndarray:
    """Vectorised energy of every row of a (k, N) array of +/-1 spins."""
    spins = np.asarray(spins)
    if spins.ndim != 2 or spins.shape[1] != instance.num_spins:
        raise ValueError(f"expected shape (k, {instance.num_spins}), got {spins.shape}")
    out = np.zeros(spins.shape[0])
    s = spins.astype(np.float64)
    for key, coeff in instance.terms.items():
        out += coeff * np.prod(s[:, key], axis=1)
    return out


# ---------------------------------------------------------------------------
# Bit/spin conversion
# ---------------------------------------------------------------------------


def bits_to_spins(bits) -> np.ndarray:
    return 1 - 2 * np.asarray(bits, dtype=np.int8)


def spins_to_bits(spins) -> np.ndarray:
    return ((1 - np.asarray(spins, dtype=np.int8)) // 2).astype(np.int8)


def bitstring_to_spins(bitstring: str) -> np.ndarray:
    return bits_to_spins([int(ch) for ch in bitstring])


def spins_to_bitstring(spins) -> str:
    return "".join(str(b) for b in spins_to_bits(spins))


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct measured configurations with multiplicities and energies.

    Rows are kept sorted by bitstring; use :meth:`sorted_by_energy` for the
    ascending-energy view.
    """

    spins: np.ndarray
    counts: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        spins = np.asarray(self.spins, dtype=np.int8)
        counts = np.asarray(self.counts, dtype=np.int64)
        en = np.asarray(self.energies, dtype=np.float64)
        if spins.ndim != 2 or counts.shape != (spins.shape[0],) or en.shape != counts.shape:
            raise ValueError("inconsistent SampleSet array shapes")
        if np.any(counts < 1):
            raise ValueError("multiplicities must be positive")
        for name, arr in (("spins", spins), ("counts", counts), ("energies", en)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_spins(cls, instance: HuboInstance, spins: np.ndarray, counts=None) -> "SampleSet":
        """Aggregate raw (shots, N) spin rows into distinct entries."""
        spins = np.asarray(spins, dtype=np.int8)
        if spins.ndim == 1:
            spins = spins[None, :]
        if counts is None:
            counts = np.ones(spins.shape[0], dtype=np.int64)
        bits = spins_to_bits(spins)
        uniq, inverse = np.unique(bits, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0], dtype=np.int64)
        np.add.at(merged, inverse.reshape(-1), np.asarray(counts, dtype=np.int64))
        uspins = bits_to_spins(uniq)
        return cls(uspins, merged, energies(instance, uspins))

    @classmethod
    def from_bitstrings(cls, instance: HuboInstance, bitstrings: Sequence[str], counts=None):
        spins = np.array([bitstring_to_spins(b) for b in bitstrings], dtype=np.int8)
        return cls.from_spins(instance, spins, counts)

    @property
    def num_spins(self) -> int:
        return self.spins.shape[1]

    @property
    def total_shots(self) -> int:
        return int(self.counts.sum())

    @property
    def bitstrings(self) -> list[str]:
        return ["".join(map(str, row)) for row in spins_to_bits(self.spins)]

    @property
    def entries(self) -> list[tuple[str, int, float]]:
        return list(zip(self.bitstrings, self.counts.tolist(), self.energies.tolist()))

    def __len__(self):
        return self.spins.shape[0]

    def energy_order(self) -> np.ndarray:
        """Row indices by ascending energy, ties by bitstring (rows are bitstring-sorted)."""
        return np.argsort(self.energies, kind="stable")

    def sorted_by_energy(self) -> "SampleSet":
        order = self.energy_order()
        return SampleSet(self.spins[order], self.counts[order], self.energies[order])

    def lowest_prefix_weights(self, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        """Row indices (energy order) and weights of the ceil(alpha*shots) lowest samples."""
        if len(self) == 0:
            raise ValueError("empty SampleSet")
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        keep = math.ceil(alpha * self.total_shots)
        order = self.energy_order()
        cum = np.cumsum(self.counts[order])
        before = cum - self.counts[order]
        weights = np.clip(keep - before, 0, self.counts[order])
        mask = weights > 0
        return order[mask], weights[mask]

    def best(self) -> tuple[str, float]:
        i = int(self.energy_order()[0])
        return self.bitstrings[i], float(self.energies[i])

    def identical(self, other: "SampleSet") -> bool:
        return (
            np.array_equal(self.spins, other.spins)
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.energies, other.energies)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bitstring", "multiplicity", "energy"])
        for b, m, e in self.entries:
            writer.writerow([b, m, repr(e)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        spins = np.array([bitstring_to_spins(r["bitstring"]) for r in rows], dtype=np.int8)
        return cls(
            spins,
            [int(r["multiplicity"]) for r in rows],
            [float(r["energy"]) for r in rows],
        )


def cvar_energy(samples: SampleSet, alpha: float) -> float:
    """Mean of the ceil(alpha * shots) lowest energies, multiplicity-expanded."""
    idx, weights = samples.lowest_prefix_weights(alpha)
    return float(np.dot(samples.energies[idx], weights) / weights.sum())


def approximation_ratio(samples: SampleSet, e0: float, alpha: float = 1.0) -> float:
    if e0 == 0:
        raise ZeroDivisionError("approximation ratio undefined for E_0 = 0")
    if e0 > 0:
        raise ValueError("approximation ratio is only meaningful for E_0 < 0")
    return cvar_energy(samples, alpha) / e0


# ---------------------------------------------------------------------------
# Exact reference
# ---------------------------------------------------------------------------


def brute_force_ground(instance: HuboInstance, chunk_bits: int = 20) -> tuple[np.ndarray, float]:
    """Exhaustive minimiser; ties go to the lexicographically smallest bitstring."""
    n = instance.num_spins
    if n > BRUTE_FORCE_MAX_SPINS:
        raise CapacityError(f"brute force limited to {BRUTE_FORCE_MAX_SPINS} spins, got {n}")
    # enumeration index k has spin j at bit (n-1-j): index order == bitstring order
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    chunk = 1 << min(n, chunk_bits)
    best_e, best_k = math.inf, -1
    for start in range(0, 1 << n, chunk):
        ks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        spins = (1 - 2 * ((ks[:, None] >> shifts) & 1)).astype(np.float64)
        en = np.zeros(ks.size)
        for key, coeff in instance.terms.items():
            en += coeff * np.prod(spins[:, key], axis=1)
        i = int(np.argmin(en))
        if en[i] < best_e:
            best_e, best_k = float(en[i]), int(ks[i])
    config = (1 - 2 * ((best_k >> shifts) & 1)).astype(np.int8)
    return config, best_e


# ---------------------------------------------------------------------------
# Coupling maps and instance generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingMap:
    num_nodes: int
    edges: frozenset[tuple[int, int]]
    triples: frozenset[tuple[int, int, int]] = frozenset()

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.num_nodes):
                raise ValueError(f"edge {(i, j)} invalid for {self.num_nodes} nodes")
        for t in self.triples:
            if not (len(t) == 3 and 0 <= t[0] < t[1] < t[2] < self.num_nodes):
                raise ValueError(f"triple {t} invalid")

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]]) -> "CouplingMap":
        canon = frozenset(tuple(sorted((int(i), int(j)))) for i, j in edges)
        return cls(num_nodes, canon)

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.num_nodes)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


def derive_triples(cmap: CouplingMap) -> CouplingMap:
    """Attach every 3-set whose induced subgraph contains a path of length 2."""
    triples = set()
    for centre, nbrs in enumerate(cmap.adjacency()):
        for a, b in itertools.combinations(sorted(nbrs), 2):
            triples.add(tuple(sorted((a, b, centre))))
    return CouplingMap(cmap.num_nodes, cmap.edges, frozenset(triples))


def parse_edge_list(text: str, num_nodes: int | None = None) -> CouplingMap:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'i j', got {raw!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node index in {raw!r}", lineno) from None
        if i < 0 or j < 0 or i == j:
            raise ParseError(f"invalid edge {raw!r}", lineno)
        edges.append((i, j))
    if num_nodes is None:
        num_nodes = 1 + max((max(e) for e in edges), default=-1)
    if num_nodes == 0:
        raise ParseError("edge list defines no nodes")
    return derive_triples(CouplingMap.from_edges(num_nodes, edges))


def load_coupling_map(path, num_nodes: int | None = None) -> CouplingMap:
    return parse_edge_list(Path(path).read_text(), num_nodes)


def heavy_hex_156() -> CouplingMap:
    """The shipped 156-qubit heavy-hex map, triples attached."""
    text = resources.files("sqc").joinpath("data/heavy_hex_156.txt").read_text()
    return parse_edge_list(text, num_nodes=156)


def random_coupling_map(n: int, edge_prob: float, seed: int, connected: bool = True) -> CouplingMap:
    """Erdos-Renyi graph; with ``connected`` a random spanning path is added first."""
    rng = np.random.default_rng(seed)
    edges = set()
    if connected and n > 1:
        perm = rng.permutation(n)
        edges.update(tuple(sorted((int(a), int(b)))) for a, b in zip(perm, perm[1:]))
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < edge_prob:
            edges.add((i, j))
    return derive_triples(CouplingMap.from_edges(n, edges))


def generate_sidon_instance(cmap: CouplingMap, seed: int) -> HuboInstance:
    """One Sidon-set coefficient per node, edge and triple of the map."""
    if cmap.num_nodes < 1:
        raise ValueError("coupling map is empty")
    keys = [(i,) for i in range(cmap.num_nodes)]
    keys += sorted(cmap.edges)
    keys += sorted(cmap.triples)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(SIDON_FLOATS), size=len(keys))
    return HuboInstance(cmap.num_nodes, {k: SIDON_FLOATS[p] for k, p in zip(keys, picks)})


# ---------------------------------------------------------------------------
# Instance file format
# ---------------------------------------------------------------------------

_RATIONAL_NAMES = {float(v): f"{v.numerator * 28 // v.denominator}/28" for v in SIDON_VALUES}


def _format_coeff(c: float) -> str:
    return _RATIONAL_NAMES.get(c, repr(c))


def _parse_coeff(token: str) -> float:
    if "/" in token:
        num, den = token.split("/")
        return int(num) / int(den)
    return float(token)


def dumps_instance(instance: HuboInstance) -> str:
    lines = [
        "# HUBO instance: coefficient followed by spin indices",
        f"version {INSTANCE_FORMAT_VERSION}",
        f"num_spins {instance.num_spins}",
        f"num_terms {len(instance.terms)}",
    ]
    for key, coeff in instance.terms.items():
        lines.append(f"{_format_coeff(coeff)} " + " ".join(map(str, key)))
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> HuboInstance:
    header: dict[str, int] = {}
    terms: dict[tuple[int, ...], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("version", "num_spins", "num_terms"):
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError(f"malformed header {raw!r}", lineno)
            header[parts[0]] = int(parts[1])
            continue
        if "num_spins" not in header:
            raise ParseError("term before num_spins header", lineno)
        try:
            coeff = _parse_coeff(parts[0])
            key = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise ParseError(f"malformed term {raw!r}", lineno) from None
        if not key:
            raise ParseError("term without indices", lineno)
        if any(a >= b for a, b in zip(key, key[1:])) or key[0] < 0 or key[-1] >= header["num_spins"]:
            raise ParseError(f"term {key} is not increasing within {header['num_spins']} spins", lineno)
        if key in terms:
            raise ParseError(f"duplicate term {key}", lineno)
        terms[key] = coeff
    if header.get("version") != INSTANCE_FORMAT_VERSION:
        raise ParseError(f"unsupported instance version {header.get('version')}")
    if "num_terms" in header and header["num_terms"] != len(terms):
        raise ParseError(f"header announces {header['num_terms']} terms, found {len(terms)}")
    try:
        return HuboInstance(header["num_spins"], terms)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def save_instance(instance: HuboInstance, path) -> None:
    Path(path).write_text(dumps_instance(instance))


def load_instance(path) -> HuboInstance:
    return loads_instance(Path(path).read_text())
