"""BF-DCQO iterations, bias transfer and sequential multi-backend chains."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .agp import build_schedule
from .annealer import AnnealParams, hubo_to_qubo, simulated_anneal
from .circuit import MODES, build_dcqo_circuit
from .model import HuboInstance, SampleSet, cvar_energy
from .simulator import BiasConfig, initial_hamiltonian, prepare_bias_state, run_circuit, sample

RESULT_SCHEMA_VERSION = 1
AR_ONE_TOL = 1e-12
TRANSFER_MODES = ("cvar", "full", "best")

BIAS_FUNCTIONS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "identity": lambda m, scale: m,
    "tanh": lambda m, scale: np.tanh(scale * m),
}


class StageError(RuntimeError):
    def __init__(self, message: str, partial: "RunResult"):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class Backend(Protocol):
    accepts_bias: bool
    produces_bias_grade_samples: bool

    def solve(
        self, instance: HuboInstance, bias: BiasConfig | None, shots: int, seed: int
    ) -> SampleSet: ...


@dataclass
class DigitalBackend:
    """BF-DCQO circuit executed on the statevector simulator."""

    total_time: float = 1.0
    n_trot: int = 3
    mode: str = "cd_only"
    accepts_bias: bool = field(default=True, init=False)
    produces_bias_grade_samples: bool = field(default=True, init=False)

    def circuit(self, instance: HuboInstance, bias: BiasConfig | None):
        bias = bias or BiasConfig.uniform(instance.num_spins)
        schedule = build_schedule(self.total_time, self.n_trot)
        return build_dcqo_circuit(initial_hamiltonian(bias), instance, bias, schedule, self.mode)

    def solve(self, instance, bias, shots, seed):
        return sample(run_circuit(self.circuit(instance, bias)), shots, seed, instance)


@dataclass
class PreparationBackend:
    """Samples the bias product state without any evolution."""

    accepts_bias: bool = field(default=True, init=False)
    produces_bias_grade_samples: bool = field(default=True, init=False)

    def solve(self, instance, bias, shots, seed):
        bias = bias or BiasConfig.uniform(instance.num_spins)
        return sample(prepare_bias_state(bias), shots, seed, instance)


@dataclass
class AnnealerBackend:
    """Simulated annealing, one restart per shot."""

    sweeps: int = 200
    t_hot: float | None = None
    t_cold: float | None = None
    use_qubo: bool = True
    accepts_bias: bool = field(default=False, init=False)
    produces_bias_grade_samples: bool = field(default=True, init=False)

    def solve(self, instance, bias, shots, seed):
        params = AnnealParams(self.sweeps, shots, self.t_hot, self.t_cold, seed)
        if self.use_qubo:
            return simulated_anneal(hubo_to_qubo(instance), params, instance=instance)
        return simulated_anneal(instance, params)


# ---------------------------------------------------------------------------
# Sample post-processing
# ---------------------------------------------------------------------------


def update_bias(
    samples: SampleSet,
    alpha: float,
    g: str | Callable = "identity",
    h_x: Sequence[float] | None = None,
    mode: str = "cvar",
    scale: float = 2.0,
) -> BiasConfig:
    """Bias fields h_b = g(<sigma^z>) over the lowest-energy fraction of the samples.

    ``mode`` picks the fraction: ``cvar`` uses ``alpha``, ``full`` all shots,
    ``best`` only the single lowest-energy sample.
    """
    if mode not in TRANSFER_MODES:
        raise ValueError(f"transfer mode must be one of {TRANSFER_MODES}")
    if mode == "cvar":
        idx, w = samples.lowest_prefix_weights(alpha)
    elif mode == "full":
        idx, w = samples.lowest_prefix_weights(1.0)
    else:
        idx, w = samples.energy_order()[:1], np.ones(1)
    mag = (samples.spins[idx].astype(np.float64) * w[:, None]).sum(axis=0) / w.sum()
    fn = BIAS_FUNCTIONS[g] if isinstance(g, str) else (lambda m, s: g(m))
    h_b = np.clip(fn(mag, scale), -1.0, 1.0)
    if h_x is None:
        h_x = (-1.0,) * samples.num_spins
    return BiasConfig(tuple(h_x), tuple(float(v) for v in h_b))


def local_search(samples: SampleSet, instance: HuboInstance, sweeps: int, top_k: int) -> SampleSet:
    """Greedy single-flip descent on the ``top_k`` lowest-energy distinct samples.

    Spins are visited in index order; a flip is kept only if it strictly lowers
    the energy.
    """
    if sweeps < 0:
        raise ValueError("sweeps must be non-negative")
    if sweeps == 0 or top_k <= 0 or len(samples) == 0:
        return samples
    order = samples.energy_order()
    chosen = order[:top_k]
    spins = samples.spins.astype(np.int8).copy()
    block = spins[chosen]
    nbhd = instance.neighbourhoods()
    for _ in range(sweeps):
        changed = False
        for i in range(instance.num_spins):
            field_ = np.zeros(block.shape[0])
            for key, c in nbhd[i]:
                field_ += c * np.prod(block[:, key], axis=1, dtype=np.float64)
            # flipping spin i changes the energy by -2 * (terms containing i)
            downhill = field_ > 0
            if downhill.any():
                block[downhill, i] *= -1
                changed = True
        if not changed:
            break
    spins[chosen] = block
    return SampleSet.from_spins(instance, spins, samples.counts)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class IterationRecord:
    iteration: int
    shots: int
    mean_energy: float
    raw_mean_energy: float
    cvar_energy: float
    iteration_best_energy: float
    best_energy: float
    best_bitstring: str
    ar: float | None
    best_ar: float | None
    h_x: list[float]
    h_b: list[float]


@dataclass
class StageResult:
    name: str
    kind: str
    records: list[IterationRecord] = field(default_factory=list)
    samples: SampleSet | None = field(default=None, repr=False)
    bias_out: BiasConfig | None = None

    @property
    def shots(self) -> int:
        return sum(r.shots for r in self.records)

    @property
    def best_energy(self) -> float:
        return min(r.best_energy for r in self.records)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "shots": self.shots,
            "records": [asdict(r) for r in self.records],
            "bias_out": None
            if self.bias_out is None
            else {"h_x": list(self.bias_out.h_x), "h_b": list(self.bias_out.h_b)},
        }


@dataclass
class RunResult:
    num_spins: int
    e0: float | None
    stages: list[StageResult] = field(default_factory=list)
    name: str = "run"

    @property
    def total_shots(self) -> int:
        return sum(s.shots for s in self.stages)

    @property
    def final_record(self) -> IterationRecord:
        return self.stages[-1].records[-1]

    def summary(self) -> dict:
        best = min((r for s in self.stages for r in s.records), key=lambda r: r.best_energy)
        final = self.final_record
        return {
            "approach": self.name,
            "shots": self.total_shots,
            "ar": final.ar,
            "best_ar": best.best_ar,
            "best_energy": best.best_energy,
            "best_bitstring": best.best_bitstring,
            "mean_energy": final.mean_energy,
            "qubits": self.num_spins,
        }

    def to_dict(self) -> dict:
        return {
            "version": RESULT_SCHEMA_VERSION,
            "name": self.name,
            "num_spins": self.num_spins,
            "e0": self.e0,
            "stages": [s.to_dict() for s in self.stages],
            "totals": self.summary() if self.stages and self.stages[-1].records else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BfDcqoConfig:
    iterations: int = 10
    shots: int = 1000
    cvar_alpha: float = 0.44
    ls_sweeps: int = 3
    ls_top_k: int | None = None
    total_time: float = 1.0
    n_trot: int = 3
    mode: str = "cd_only"
    bias_function: str = "identity"
    bias_scale: float = 2.0
    transfer: str = "cvar"
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.shots < 1 or self.ls_sweeps < 0 or self.n_trot < 1:
            raise ValueError("iterations, shots, ls_sweeps and n_trot must be positive")
        if not 0 < self.cvar_alpha <= 1:
            raise ValueError("cvar_alpha must lie in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.bias_function not in BIAS_FUNCTIONS:
            raise ValueError(f"bias function must be one of {sorted(BIAS_FUNCTIONS)}")
        if self.transfer not in TRANSFER_MODES:
            raise ValueError(f"transfer must be one of {TRANSFER_MODES}")

    @property
    def top_k(self) -> int:
        return self.ls_top_k if self.ls_top_k is not None else math.ceil(0.44 * self.shots)


def _record(
    iteration: int,
    raw: SampleSet,
    post: SampleSet,
    bias: BiasConfig,
    e0: float | None,
    cfg: BfDcqoConfig,
    prev: IterationRecord | None,
) -> IterationRecord:
    bitstring, it_best = post.best()
    if prev is not None and prev.best_energy <= it_best:
        best_e, best_b = prev.best_energy, prev.best_bitstring
    else:
        best_e, best_b = it_best, bitstring
    mean = cvar_energy(post, 1.0)
    return IterationRecord(
        iteration=iteration,
        shots=post.total_shots,
        mean_energy=mean,
        raw_mean_energy=cvar_energy(raw, 1.0),
        cvar_energy=cvar_energy(post, cfg.cvar_alpha),
        iteration_best_energy=it_best,
        best_energy=best_e,
        best_bitstring=best_b,
        ar=None if e0 is None else mean / e0,
        best_ar=None if e0 is None else best_e / e0,
        h_x=list(bias.h_x),
        h_b=list(bias.h_b),
    )


def run_stage(
    instance: HuboInstance,
    config: BfDcqoConfig,
    backend: Backend,
    initial_bias: BiasConfig | None = None,
    e0: float | None = None,
    name: str = "bf-dcqo",
    kind: str = "bf-dcqo",
) -> StageResult:
    """Sample, post-process and re-bias ``config.iterations`` times.

    Iteration k samples with seed ``config.seed + k``. ``iterations == 0``
    records a single draw of the initial state.
    """
    n = instance.num_spins
    if initial_bias is not None and not backend.accepts_bias:
        raise ValueError(f"backend of stage {name!r} does not accept bias fields")
    bias = initial_bias or BiasConfig.uniform(n)
    stage = StageResult(name, kind)
    if config.iterations == 0:
        raw = sample(prepare_bias_state(bias), config.shots, config.seed, instance)
        post = local_search(raw, instance, config.ls_sweeps, config.top_k)
        stage.records.append(_record(0, raw, post, bias, e0, config, None))
        stage.samples = post
        return stage
    prev = None
    for k in range(1, config.iterations + 1):
        raw = backend.solve(instance, bias if backend.accepts_bias else None, config.shots, config.seed + k)
        post = local_search(raw, instance, config.ls_sweeps, config.top_k)
        prev = _record(k, raw, post, bias, e0, config, prev)
        stage.records.append(prev)
        stage.samples = post
        if k < config.iterations:
            bias = update_bias(
                post, config.cvar_alpha, config.bias_function, bias.h_x,
                config.transfer, config.bias_scale,
            )
        if e0 is not None and abs(prev.ar - 1.0) <= AR_ONE_TOL:
            break
    return stage


def run_bf_dcqo(
    instance: HuboInstance,
    config: BfDcqoConfig,
    backend: Backend | None = None,
    initial_bias: BiasConfig | None = None,
    e0: float | None = None,
) -> RunResult:
    backend = backend or DigitalBackend(config.total_time, config.n_trot, config.mode)
    if not backend.accepts_bias:
        raise ValueError("BF-DCQO needs a backend that accepts bias fields")
    stage = run_stage(instance, config, backend, initial_bias, e0)
    return RunResult(instance.num_spins, e0, [stage], name="bf-dcqo")


@dataclass(frozen=True)
class Stage:
    name: str
    kind: str
    backend: Backend
    config: BfDcqoConfig


def annealer_stage(
    name: str = "annealer",
    shots: int = 300,
    sweeps: int = 200,
    ls_sweeps: int = 1,
    ls_top_k: int = 1,
    seed: int = 0,
    use_qubo: bool = True,
    **overrides,
) -> Stage:
    cfg = BfDcqoConfig(iterations=1, shots=shots, ls_sweeps=ls_sweeps, ls_top_k=ls_top_k, seed=seed, **overrides)
    return Stage(name, "annealer", AnnealerBackend(sweeps, use_qubo=use_qubo), cfg)


def bf_dcqo_stage(name: str = "bf-dcqo", **kwargs) -> Stage:
    cfg = BfDcqoConfig(**kwargs)
    return Stage(name, "bf-dcqo", DigitalBackend(cfg.total_time, cfg.n_trot, cfg.mode), cfg)


def run_sqc(
    instance: HuboInstance,
    stages: Sequence[Stage],
    e0: float | None = None,
    name: str = "sqc",
) -> RunResult:
    """Run stages in order, turning each stage's post-processed samples into the
    next stage's bias fields."""
    if not stages:
        raise ValueError("need at least one stage")
    result = RunResult(instance.num_spins, e0, [], name=name)
    bias = None
    for i, st in enumerate(stages):
        incoming = bias if i > 0 else None
        if incoming is not None and not st.backend.accepts_bias:
            raise StageError(f"stage {st.name!r} cannot take bias fields", result)
        try:
            res = run_stage(instance, st.config, st.backend, incoming, e0, st.name, st.kind)
        except Exception as exc:
            raise StageError(f"stage {st.name!r} failed: {exc}", result) from exc
        h_x = incoming.h_x if incoming is not None else None
        res.bias_out = update_bias(
            res.samples, st.config.cvar_alpha, st.config.bias_function, h_x,
            st.config.transfer, st.config.bias_scale,
        )
        bias = res.bias_out
        result.stages.append(res)
    return result


def with_seed(stage: Stage, seed: int) -> Stage:
    return replace(stage, config=replace(stage.config, seed=seed))

