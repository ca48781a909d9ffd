import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conftest import instances, random_instance
from sqc.agp import (
    Alpha1Profile,
    DegenerateAlphaError,
    Schedule,
    adiabatic_hamiltonian,
    alpha1,
    build_schedule,
    cd_pauli_terms,
    hubo_to_pauli,
)
from sqc.model import HuboInstance
from sqc.pauli import (
    ExactComplex,
    PauliPolynomial,
    PauliString,
    commutator,
    hs_inner,
    hs_norm_sq,
    pauli_product,
)
from sqc.simulator import BiasConfig, initial_hamiltonian

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
LETTERS = {"I": np.eye(2), "X": X, "Y": Y, "Z": Z}


def dense(label: str) -> np.ndarray:
    # label character j acts on qubit j; qubit 0 is the least significant index bit
    out = np.eye(1)
    for ch in label:
        out = np.kron(LETTERS[ch], out)
    return out


def dense_poly(pairs, n):
    return sum(c * dense(lab) for c, lab in pairs) if pairs else np.zeros((1 << n, 1 << n))


def random_poly(rng, n, k):
    labels = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(k)]
    coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
    pairs = list(zip(coeffs, labels))
    return PauliPolynomial.from_labels(pairs), dense_poly(pairs, n)


def random_bias_hamiltonian(rng, n):
    bias = BiasConfig(tuple(rng.choice([-1.0, -0.5, 0.7], size=n)), tuple(rng.uniform(-1, 1, size=n)))
    return initial_hamiltonian(bias)


# --- strings --------------------------------------------------------------


def test_label_round_trip_and_canonical_form():
    p = PauliString.from_label("YIZX")
    assert p.label(4) == "YIZX"
    assert p.support == (0, 2, 3)
    assert p == PauliString.from_ops([(3, "X"), (0, "Y"), (2, "Z"), (1, "I")])
    assert hash(p) == hash(PauliString.from_ops({0: "Y", 2: "Z", 3: "X"}))


def test_product_examples():
    assert pauli_product(PauliString.from_label("X"), PauliString.from_label("Z")) == (-1j, PauliString.from_label("Y"))
    assert pauli_product(PauliString.from_label("Z"), PauliString.from_label("Z")) == (1, PauliString(0, 0))
    assert pauli_product(PauliString.from_label("ZZ"), PauliString.from_label("XI")) == (1j, PauliString.from_label("YZ"))


def test_product_table_against_dense():
    for a, b in itertools.product(itertools.product("IXYZ", repeat=2), repeat=2):
        la, lb = "".join(a), "".join(b)
        phase, c = pauli_product(PauliString.from_label(la), PauliString.from_label(lb))
        assert np.allclose(dense(la) @ dense(lb), phase * c.to_dense(2))


def test_to_dense_matches_kron_oracle():
    for label in ("XYZ", "IZY", "YYI"):
        assert np.array_equal(PauliString.from_label(label).to_dense(3), dense(label))


# --- polynomials ----------------------------------------------------------


def test_commutator_examples():
    assert commutator(PauliPolynomial.from_labels([(1, "X")]), PauliPolynomial.from_labels([(1, "Z")])) == \
        PauliPolynomial.from_labels([(-2j, "Y")])
    zz_x = commutator(PauliPolynomial.from_labels([(1, "ZZ")]), PauliPolynomial.from_labels([(1, "XI")]))
    assert zz_x == PauliPolynomial.from_labels([(2j, "YZ")])


def test_hs_norm_examples():
    assert hs_norm_sq(PauliPolynomial.from_labels([(2, "Y")])) == 4.0
    assert hs_norm_sq(PauliPolynomial()) == 0.0


def test_pruning_and_hermiticity():
    p = PauliPolynomial.from_labels([(1e-15, "X"), (1.0, "Z"), (-1.0, "Z"), (0.5, "Y")])
    assert p == PauliPolynomial.from_labels([(0.5, "Y")])
    assert p.is_hermitian()
    assert not PauliPolynomial.from_labels([(1j, "Y")]).is_hermitian()
    with pytest.raises(ValueError):
        PauliPolynomial.from_labels([(1j, "Y")]).real_coefficients()


def test_dump_is_sorted():
    text = PauliPolynomial.from_labels([(1, "ZI"), (-2, "IX")]).dump()
    assert [line.split()[-1] for line in text.splitlines()] == ["IX", "ZI"]


@pytest.mark.parametrize("seed", range(10))
def test_polynomial_ops_match_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    a, da = random_poly(rng, n, 6)
    b, db = random_poly(rng, n, 5)
    assert np.allclose((a + b).to_dense(n), da + db, atol=1e-10)
    assert np.allclose((a * b).to_dense(n), da @ db, atol=1e-10)
    assert np.allclose(commutator(a, b).to_dense(n), da @ db - db @ da, atol=1e-10)
    assert hs_norm_sq(a) == pytest.approx(np.trace(da @ da.conj().T).real / 2**n, abs=1e-10)
    assert hs_inner(a, b) == pytest.approx(np.trace(da.conj().T @ db) / 2**n, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_commutator_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_poly(rng, 3, 4)
    b, _ = random_poly(rng, 3, 4)
    assert commutator(a, b) == -commutator(b, a)


def test_transverse_final_commutator_matches_dense():
    rng = np.random.default_rng(11)
    inst = random_instance(rng, 3)
    h_i = random_bias_hamiltonian(rng, 3)
    h_f = hubo_to_pauli(inst)
    di, df = h_i.to_dense(3), h_f.to_dense(3)
    assert np.allclose(commutator(h_i, h_f).to_dense(3), di @ df - df @ di, atol=1e-12)


def test_exact_coefficients_stay_exact():
    third = PauliPolynomial([(PauliString.from_label("X"), Fraction(1, 3))])
    zed = PauliPolynomial([(PauliString.from_label("Z"), Fraction(2, 7))])
    c = commutator(third, zed)
    assert c[PauliString.from_label("Y")] == ExactComplex(0, Fraction(-4, 21))
    with pytest.raises(TypeError):
        ExactComplex(1) + 0.1


# --- gauge potential ------------------------------------------------------


def alpha_closed_form(lam):
    return -1.0 / (4 * ((1 - lam) ** 2 + lam**2))


def dense_action_minimiser(di, df, lam):
    """argmin over scalar a of tr(G^2), G = dH + i[A, H], A = i a [H, dH]."""
    h = (1 - lam) * di + lam * df
    dh = df - di
    core = 1j * (h @ dh - dh @ h)

    def action(a):
        aa = a * core
        g = dh + 1j * (aa @ h - h @ aa)
        return np.trace(g @ g).real

    return minimize_scalar(action, bracket=(-1.0, 0.0), tol=1e-12).x


def test_alpha1_single_qubit_closed_form():
    h_i = PauliPolynomial.from_labels([(-1, "X")])
    h_f = PauliPolynomial.from_labels([(1, "Z")])
    assert alpha1(h_i, h_f, 0.5) == pytest.approx(-0.5, abs=1e-12)
    assert alpha1(h_i, h_f, 0.0) == pytest.approx(-0.25, abs=1e-12)
    for lam in np.linspace(0, 1, 7):
        assert alpha1(h_i, h_f, lam) == pytest.approx(alpha_closed_form(lam), abs=1e-12)
        assert dense_action_minimiser(-X, Z, lam) == pytest.approx(alpha_closed_form(lam), abs=1e-6)


@pytest.mark.parametrize("seed", range(8))
def test_alpha1_matches_dense_action_minimiser(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    h_i = random_bias_hamiltonian(rng, n)
    h_f = hubo_to_pauli(random_instance(rng, n))
    lam = float(rng.uniform())
    ref = dense_action_minimiser(h_i.to_dense(n), h_f.to_dense(n), lam)
    assert alpha1(h_i, h_f, lam) == pytest.approx(ref, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(instances(max_spins=4), st.floats(0, 1), st.integers(0, 10**6))
def test_profile_matches_direct_and_is_negative(inst, lam, seed):
    h_i = random_bias_hamiltonian(np.random.default_rng(seed), inst.num_spins)
    h_f = hubo_to_pauli(inst)
    try:
        direct = alpha1(h_i, h_f, lam)
    except DegenerateAlphaError:
        return
    assert Alpha1Profile(h_i, h_f)(lam) == pytest.approx(direct, rel=1e-10)
    assert direct < 0


def test_alpha1_degenerate_and_order():
    z = PauliPolynomial.from_labels([(1, "Z")])
    with pytest.raises(DegenerateAlphaError):
        alpha1(z, 2 * z, 0.3)
    with pytest.raises(NotImplementedError):
        alpha1(PauliPolynomial.from_labels([(-1, "X")]), z, 0.3, order=2)


def test_commutator_core_independent_of_lambda_exactly():
    rng = np.random.default_rng(5)
    inst = random_instance(rng, 4)
    h_f = PauliPolynomial((PauliString.z_string(k), Fraction(c).limit_denominator(28)) for k, c in inst.terms.items())
    h_i = PauliPolynomial([(PauliString.from_ops({j: "X"}), Fraction(-1)) for j in range(4)]
                          + [(PauliString.from_ops({j: "Z"}), Fraction(j - 2, 5)) for j in range(4)])
    values = [commutator(adiabatic_hamiltonian(h_i, h_f, Fraction(lam)), h_f - h_i)
              for lam in (0, Fraction(3, 10), Fraction(7, 10), 1)]
    assert all(v == values[0] for v in values)
    assert values[0] == commutator(h_i, h_f)


def test_cd_terms_single_qubit():
    out = cd_pauli_terms(PauliPolynomial.from_labels([(-1, "X")]), PauliPolynomial.from_labels([(1, "Z")]))
    assert out == PauliPolynomial.from_labels([(-2, "Y")])
    # dense oracle for i[H_i, H_f]
    assert np.allclose(out.to_dense(1), 1j * ((-X) @ Z - Z @ (-X)))


def test_cd_terms_two_body():
    out = cd_pauli_terms(PauliPolynomial.from_labels([(-1, "XI")]), PauliPolynomial.from_labels([(0.75, "ZZ")]))
    assert set(out.terms) == {PauliString.from_label("YZ")}
    assert out.is_hermitian()
    di, df = dense("XI") * -1, 0.75 * dense("ZZ")
    assert np.allclose(out.to_dense(2), 1j * (di @ df - df @ di))


def test_cd_terms_vanish_for_diagonal_pair():
    h_i = PauliPolynomial.from_labels([(1, "ZI"), (0.3, "IZ")])
    assert len(cd_pauli_terms(h_i, hubo_to_pauli(HuboInstance(2, {(0, 1): 1.0})))) == 0


@settings(max_examples=40, deadline=None)
@given(instances(max_spins=5), st.integers(0, 10**6))
def test_cd_terms_hermitian(inst, seed):
    h_i = random_bias_hamiltonian(np.random.default_rng(seed), inst.num_spins)
    out = cd_pauli_terms(h_i, hubo_to_pauli(inst))
    assert all(abs(c.imag) < 1e-12 for _, c in out.items())


# --- schedule -------------------------------------------------------------


def test_schedule_boundaries():
    s = build_schedule(2.0, 4)
    assert s.lam(0) == 0.0
    assert s.lam(2.0) == pytest.approx(1.0, abs=1e-15)
    assert s.lam(1.0) == pytest.approx(0.5, abs=1e-15)
    assert s.lam_dot(0) == 0.0
    assert s.lam_dot(2.0) == pytest.approx(0.0, abs=1e-15)
    assert s.grid() == pytest.approx([0.25, 0.75, 1.25, 1.75])
    assert s.dt == 0.5


def test_schedule_lam_dot_is_derivative_and_monotone():
    s = build_schedule(1.3, 5)
    ts = np.linspace(0, 1.3, 200)
    lam = [s.lam(t) for t in ts]
    assert all(b >= a for a, b in zip(lam, lam[1:]))
    h = 1e-6
    for t in ts[1:-1]:
        assert s.lam_dot(t) == pytest.approx((s.lam(t + h) - s.lam(t - h)) / (2 * h), abs=1e-6)


@pytest.mark.parametrize("args", [(0.0, 3), (-1.0, 3), (1.0, 0), (1.0, -2)])
def test_schedule_rejects_bad_inputs(args):
    with pytest.raises(ValueError):
        build_schedule(*args)


def test_zero_step_schedule_has_empty_grid():
    assert Schedule(1.0, 0).grid() == []
    assert not math.isnan(Schedule(1.0, 0).dt)
