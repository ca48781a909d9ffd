"""Sequential solver chains (annealing then bias-field digitized counterdiabatic
optimization) for cubic spin-glass problems, simulated exactly at desk scale."""
from .agp import Alpha1Profile, Schedule, alpha1, build_schedule, cd_pauli_terms, hubo_to_pauli
from .annealer import AnnealParams, QuboInstance, hubo_to_qubo, simulated_anneal
from .circuit import CircuitIR, Gate, build_dcqo_circuit, color_terms, decompose_circuit
from .model import (
    CouplingMap,
    HuboInstance,
    SampleSet,
    approximation_ratio,
    brute_force_ground,
    cvar_energy,
    energy,
    generate_sidon_instance,
    heavy_hex_156,
    random_coupling_map,
)
from .orchestrator import (
    AnnealerBackend,
    BfDcqoConfig,
    DigitalBackend,
    RunResult,
    annealer_stage,
    bf_dcqo_stage,
    local_search,
    run_bf_dcqo,
    run_sqc,
    update_bias,
)
from .pauli import PauliPolynomial, PauliString, commutator
from .simulator import BiasConfig, run_circuit, sample

__version__ = "0.1.0"
