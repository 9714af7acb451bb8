"""Pauli channel eigenvalue estimation and gate benchmarking toolkit."""

from .channels import (
    DENSE_MAX_QUBITS,
    PauliChannel,
    eigenvalue_query,
    sample_error,
    wht_forward,
    wht_inverse,
)
from .errors import (
    CapabilityError,
    ConfigError,
    FitError,
    PauliBenchError,
    UsageError,
)
from .estimation import (
    BenchmarkResult,
    DecaySeries,
    EstimateSet,
    FitResult,
    benchmark_alg2,
    estimate_alg1,
    fit_decay,
    required_samples,
)
from .pauli import (
    PauliLabel,
    compose,
    format_label,
    parse_label,
    symplectic_product,
    weight,
)
from .sampler import (
    Alg1Outcome,
    Alg2Shot,
    NoiseModel,
    alg2_statistic,
    outcome_distribution_alg1,
    simulate_round_alg1,
    simulate_shot_alg2,
)
from .seeding import derive_rng
from .stabilizer import (
    Covering,
    StabilizerGroup,
    mub_covering,
    pauli_basis_covering,
    verify_covering,
)

__version__ = "0.1.0"

__all__ = [
    "DENSE_MAX_QUBITS",
    "PauliChannel",
    "eigenvalue_query",
    "sample_error",
    "wht_forward",
    "wht_inverse",
    "CapabilityError",
    "ConfigError",
    "FitError",
    "PauliBenchError",
    "UsageError",
    "BenchmarkResult",
    "DecaySeries",
    "EstimateSet",
    "FitResult",
    "benchmark_alg2",
    "estimate_alg1",
    "fit_decay",
    "required_samples",
    "PauliLabel",
    "compose",
    "format_label",
    "parse_label",
    "symplectic_product",
    "weight",
    "Alg1Outcome",
    "Alg2Shot",
    "NoiseModel",
    "alg2_statistic",
    "outcome_distribution_alg1",
    "simulate_round_alg1",
    "simulate_shot_alg2",
    "derive_rng",
    "Covering",
    "StabilizerGroup",
    "mub_covering",
    "pauli_basis_covering",
    "verify_covering",
]
