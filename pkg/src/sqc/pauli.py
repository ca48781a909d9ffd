"""Sparse Pauli strings and complex-weighted Pauli polynomials.

A string is stored as two bitmasks (x, z) and stands for
``i^{|x & z|} X^x Z^z``, so that x=z=1 on a site is exactly Y.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
import numbers
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOL = 1e-14

_PHASES = (1, 1j, -1, -1j)
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ExactComplex:
    """Gaussian rational re + i*im, for algebra that must be free of rounding.

    Mixes with ints, Fractions and complex numbers whose parts are integers
    (the Pauli phases), so polynomial arithmetic runs unchanged on it.
    """

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, v) -> "ExactComplex":
        if isinstance(v, ExactComplex):
            return v
        if isinstance(v, numbers.Rational):
            return cls(Fraction(v))
        if isinstance(v, complex) and v.real.is_integer() and v.imag.is_integer():
            return cls(Fraction(int(v.real)), Fraction(int(v.imag)))
        raise TypeError(f"cannot mix {type(v).__name__} {v!r} into exact arithmetic")

    @property
    def real(self) -> Fraction:
        return self.re

    @property
    def imag(self) -> Fraction:
        return self.im

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def __add__(self, other):
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-ExactComplex.coerce(other))

    def __rsub__(self, other):
        return ExactComplex.coerce(other) - self

    def __mul__(self, other):
        o = ExactComplex.coerce(other)
        return ExactComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __abs__(self) -> float:
        return abs(complex(self))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        try:
            o = ExactComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))


def _coerce(c):
    if isinstance(c, (ExactComplex, Fraction)):
        return ExactComplex.coerce(c)
    return complex(c)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    x: int = 0
    z: int = 0

    @classmethod
    def from_ops(cls, ops: Mapping[int, str] | Iterable[tuple[int, str]]) -> "PauliString":
        items = ops.items() if isinstance(ops, Mapping) else ops
        x = z = 0
        for q, letter in items:
            bx, bz = _LETTER_BITS[letter.upper()]
            if (x >> q) & 1 or (z >> q) & 1:
                raise ValueError(f"qubit {q} given twice")
            x |= bx << q
            z |= bz << q
        return cls(x, z)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Dense label with qubit 0 first, e.g. ``"YZI"``."""
        return cls.from_ops((q, ch) for q, ch in enumerate(label) if ch != "I")

    @classmethod
    def z_string(cls, qubits: Iterable[int]) -> "PauliString":
        return cls(0, reduce(lambda acc, q: acc | (1 << q), qubits, 0))

    @property
    def support(self) -> tuple[int, ...]:
        mask, out, q = self.x | self.z, [], 0
        while mask:
            if mask & 1:
                out.append(q)
            mask >>= 1
            q += 1
        return tuple(out)

    @property
    def ops(self) -> tuple[tuple[int, str], ...]:
        return tuple(
            (q, _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]) for q in self.support
        )

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def is_diagonal(self) -> bool:
        return self.x == 0

    def label(self, num_qubits: int) -> str:
        return "".join(
            _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(num_qubits)
        )

    def __str__(self):
        return " ".join(f"{p}{q}" for q, p in self.ops) or "I"

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def to_dense(self, num_qubits: int) -> np.ndarray:
        # qubit 0 is the least significant bit of the basis index
        mats = [_SINGLE[letter] for letter in reversed(self.label(num_qubits))]
        return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_product(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return (phase, c) with a @ b == phase * c."""
    x, z = a.x ^ b.x, a.z ^ b.z
    k = (
        _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        - _popcount(x & z)
        + 2 * _popcount(a.z & b.x)
    ) % 4
    return _PHASES[k], PauliString(x, z)


class PauliPolynomial:
    """Immutable map PauliString -> complex coefficient.

    Coefficients given as Fractions or :class:`ExactComplex` stay exact.
    """

    __slots__ = ("_terms",)
    # numpy scalars must defer to __rmul__ instead of iterating the keys
    __array_ufunc__ = None

    def __init__(self, terms: Mapping[PauliString, complex] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[PauliString, complex] = {}
        for p, c in items:
            acc[p] = acc.get(p, 0) + _coerce(c)
        self._terms = {p: c for p, c in acc.items() if abs(c) >= PRUNE_TOL}

    @classmethod
    def _raw(cls, terms: dict) -> "PauliPolynomial":
        obj = cls.__new__(cls)
        obj._terms = {p: c for p, c in terms.items() if abs(c) >= PRUNE_TOL}
        return obj

    @classmethod
    def from_labels(cls, pairs: Iterable[tuple[complex, str]]) -> "PauliPolynomial":
        return cls((PauliString.from_label(lab), c) for c, lab in pairs)

    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __getitem__(self, p: PauliString) -> complex:
        return self._terms.get(p, 0j)

    def __eq__(self, other):
        if not isinstance(other, PauliPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def allclose(self, other: "PauliPolynomial", atol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    def __add__(self, other: "PauliPolynomial") -> "PauliPolynomial":
        acc = dict(self._terms)
        for p, c in other._terms.items():
            acc[p] = acc.get(p, 0) + c
        return PauliPolynomial._raw(acc)

    def __neg__(self):
        return PauliPolynomial._raw({p: -c for p, c in self._terms.items()})

    def __sub__(self, other: "PauliPolynomial") -> "PauliPolynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PauliPolynomial):
            return self.product(other)
        return PauliPolynomial._raw({p: other * c for p, c in self._terms.items()})

    def __rmul__(self, scalar):
        return self * scalar

    def product(self, other: "PauliPolynomial") -> "PauliPolynomial":
        acc: dict[PauliString, complex] = {}
        for pa, ca in self._terms.items():
            for pb, cb in other._terms.items():
                phase, pc = pauli_product(pa, pb)
                acc[pc] = acc.get(pc, 0) + phase * ca * cb
        return PauliPolynomial._raw(acc)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real_coefficients(self, tol: float = 1e-12) -> dict[PauliString, float]:
        if not self.is_hermitian(tol):
            raise ValueError("polynomial is not Hermitian")
        return {p: c.real for p, c in self._terms.items()}

    @property
    def num_qubits(self) -> int:
        mask = 0
        for p in self._terms:
            mask |= p.x | p.z
        return mask.bit_length()

    def to_dense(self, num_qubits: int | None = None) -> np.ndarray:
        n = self.num_qubits if num_qubits is None else num_qubits
        out = np.zeros((1 << n, 1 << n), dtype=complex)
        for p, c in self._terms.items():
            out += c * p.to_dense(n)
        return out

    def dump(self, num_qubits: int | None = None) -> str:
        """Sorted text listing, one ``coeff  label`` per line."""
        n = self.num_qubits if num_qubits is None else num_qubits
        rows = sorted((p.label(n), c) for p, c in self._terms.items())
        return "".join(f"{c.real:+.16e}{c.imag:+.16e}j  {lab}\n" for lab, c in rows)

    def __repr__(self):
        return f"PauliPolynomial({len(self)} terms)"


def commutator(a: PauliPolynomial, b: PauliPolynomial) -> PauliPolynomial:
    """ab - ba; only anticommuting string pairs survive, each as 2ab."""
    acc: dict[PauliString, complex] = {}
    for pa, ca in a._terms.items():
        for pb, cb in b._terms.items():
            if pa.commutes(pb):
                continue
            phase, pc = pauli_product(pa, pb)
            acc[pc] = acc.get(pc, 0) + 2 * phase * ca * cb
    return PauliPolynomial._raw(acc)


def hs_norm_sq(a: PauliPolynomial) -> float:
    """sum |c_P|^2 == tr(A A^dagger) / 2^N."""
    return float(sum(abs(c) ** 2 for c in a._terms.values()))


def hs_inner(a: PauliPolynomial, b: PauliPolynomial) -> complex:
    """sum conj(a_P) b_P == tr(A^dagger B) / 2^N."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for p, c in small._terms.items():
        other = large._terms.get(p)
        if other is not None:
            total += c.conjugate() * other if small is a else other.conjugate() * c
    return total
