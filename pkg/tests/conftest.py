import itertools

import numpy as np
from hypothesis import strategies as st

from sqc.model import SIDON_FLOATS, HuboInstance


def random_instance(rng: np.random.Generator, n: int, max_order: int = 3, density: float = 0.5) -> HuboInstance:
    terms = {}
    for order in range(1, min(max_order, n) + 1):
        for key in itertools.combinations(range(n), order):
            if rng.random() < density:
                terms[key] = float(rng.choice(SIDON_FLOATS))
    if not terms:
        terms[(0,)] = 1.0
    return HuboInstance(n, terms)


def all_spin_configs(n: int) -> np.ndarray:
    """Every spin configuration, written with plain itertools (independent of the library)."""
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int8)


def naive_energy(terms, config) -> float:
    total = 0.0
    for key, c in terms:
        prod = 1
        for i in key:
            prod *= config[i]
        total += c * prod
    return total


@st.composite
def instances(draw, min_spins=1, max_spins=6, max_order=3):
    n = draw(st.integers(min_spins, max_spins))
    keys = [k for order in range(1, max_order + 1) for k in itertools.combinations(range(n), order)]
    chosen = draw(st.lists(st.sampled_from(keys), min_size=1, max_size=len(keys), unique=True))
    coeffs = draw(st.lists(st.sampled_from(SIDON_FLOATS), min_size=len(chosen), max_size=len(chosen)))
    return HuboInstance(n, dict(zip(chosen, coeffs)))


@st.composite
def spin_configs(draw, n):
    return np.array(draw(st.lists(st.sampled_from((1, -1)), min_size=n, max_size=n)), dtype=np.int8)
