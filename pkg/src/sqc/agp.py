"""First-order adiabatic gauge potential for H_ad(lam) = (1 - lam) H_i + lam H_f."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import HuboInstance
from .pauli import PauliPolynomial, PauliString, commutator, hs_inner, hs_norm_sq

DEGENERATE_TOL = 1e-14


class DegenerateAlphaError(ArithmeticError):
    """The second nested commutator vanishes, so alpha_1 is undefined."""


def hubo_to_pauli(instance: HuboInstance) -> PauliPolynomial:
    return PauliPolynomial((PauliString.z_string(k), c) for k, c in instance.terms.items())


def adiabatic_hamiltonian(h_i: PauliPolynomial, h_f: PauliPolynomial, lam: float) -> PauliPolynomial:
    return (1 - lam) * h_i + lam * h_f


def _check_order(order: int) -> None:
    if order != 1:
        raise NotImplementedError("only the first-order nested commutator is implemented")


def alpha1(h_i: PauliPolynomial, h_f: PauliPolynomial, lam: float, order: int = 1) -> float:
    """alpha_1 = -||O_1||^2 / ||O_2||^2 with O_1 = [H_ad, dH], O_2 = [H_ad, O_1]."""
    _check_order(order)
    h_ad = adiabatic_hamiltonian(h_i, h_f, lam)
    o1 = commutator(h_ad, h_f - h_i)
    o2 = commutator(h_ad, o1)
    den = hs_norm_sq(o2)
    if den < DEGENERATE_TOL:
        raise DegenerateAlphaError(f"||O_2||^2 = {den:.3e} at lambda = {lam}")
    return -hs_norm_sq(o1) / den


class Alpha1Profile:
    """alpha_1(lam) for a fixed pair (H_i, H_f), precomputed for repeated evaluation.

    O_1 does not depend on lam, and O_2 = (1 - lam) [H_i, O_1] + lam [H_f, O_1],
    so each evaluation reduces to three cached inner products.
    """

    def __init__(self, h_i: PauliPolynomial, h_f: PauliPolynomial, order: int = 1):
        _check_order(order)
        self.o1 = commutator(h_i, h_f)
        a = commutator(h_i, self.o1)
        b = commutator(h_f, self.o1)
        self.num = hs_norm_sq(self.o1)
        self._aa = hs_norm_sq(a)
        self._bb = hs_norm_sq(b)
        self._ab = hs_inner(a, b).real

    def o2_norm_sq(self, lam: float) -> float:
        u, v = 1.0 - lam, lam
        return u * u * self._aa + v * v * self._bb + 2 * u * v * self._ab

    def __call__(self, lam: float) -> float:
        den = self.o2_norm_sq(lam)
        if den < DEGENERATE_TOL:
            raise DegenerateAlphaError(f"||O_2||^2 = {den:.3e} at lambda = {lam}")
        return -self.num / den


def cd_pauli_terms(h_i: PauliPolynomial, h_f: PauliPolynomial) -> PauliPolynomial:
    """Hermitian core i [H_i, H_f] of the first-order gauge potential.

    A^(1)(lam) = alpha_1(lam) * cd_pauli_terms(h_i, h_f).
    """
    return 1j * commutator(h_i, h_f)


@dataclass(frozen=True)
class Schedule:
    """lam(t) = sin^2(pi t / 2T) sampled at Trotter-step midpoints.

    ``n_trot = 0`` is allowed here and yields an empty grid (preparation only).
    """

    total_time: float
    n_trot: int

    @property
    def dt(self) -> float:
        return self.total_time / self.n_trot if self.n_trot else 0.0

    def lam(self, t: float) -> float:
        return math.sin(math.pi * t / (2 * self.total_time)) ** 2

    def lam_dot(self, t: float) -> float:
        return (math.pi / (2 * self.total_time)) * math.sin(math.pi * t / self.total_time)

    def grid(self) -> list[float]:
        return [(k - 0.5) * self.dt for k in range(1, self.n_trot + 1)]


def build_schedule(total_time: float, n_trot: int) -> Schedule:
    if not total_time > 0:
        raise ValueError(f"total time must be positive, got {total_time}")
    if n_trot < 1 or int(n_trot) != n_trot:
        raise ValueError(f"n_trot must be a positive integer, got {n_trot}")
    return Schedule(float(total_time), int(n_trot))
