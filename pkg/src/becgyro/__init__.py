"""Exact-diagonalization toolkit for entangled rotating-condensate gyroscopy.

Simulates few-boson condensates in a rotating, slightly anisotropic 2D
harmonic trap: builds angular-momentum-blocked Fock bases over oscillator
orbitals, assembles rotating-frame Hamiltonians with contact interactions,
locates the critical rotation frequency where the ground state becomes a
two-mode entangled superposition, propagates frequency ramps and trap
deformations in time, and evaluates the resulting interferometric
precision against shot-noise and Cramer-Rao benchmarks.
"""

__version__ = "0.1.0"

from .basis import FockState, ManyBodyBasis, Orbital, TruncationSpec, build_basis
from .dynamics import (
    EvolutionResult,
    IntegratorConfig,
    IsotropicEigenbasis,
    RampSchedule,
    RampSegment,
    anisotropy_continuation_map,
    anisotropy_switch_off,
    choose_switch_off_duration,
    free_evolution,
    integrate_tdse,
    plan_adiabatic_ramp,
    sudden_shift,
    sudden_validity_bound,
)
from .errors import (
    BasisCapacityError,
    BracketError,
    ConfigError,
    ConvergenceError,
    DeltaInstabilityError,
    IntegrationError,
)
from .hamiltonian import (
    HamiltonianModel,
    ModelParams,
    SparseHamiltonian,
    anisotropy_element,
    assemble,
    interaction_element,
    lll_interaction_element,
)
from .metrology import (
    MeasurementModel,
    PrecisionCurve,
    ProtocolConfig,
    ProtocolResult,
    estimate_precision,
    ideal_phase_family,
    qfi_pure,
    qfi_quadratic_approx,
    run_protocol,
    shot_noise_limit,
)
from .spectrum import (
    CriticalFrequency,
    EigenSolution,
    SpectrumSweep,
    find_critical_frequency,
    lowest_eigenpairs,
    perturbative_ground,
    parity_imbalance,
    sweep,
)
from .states import (
    ManyBodyState,
    NaturalOrbitals,
    TwoModeDecomposition,
    angular_momentum_moments,
    l_distribution,
    mode_entropy,
    spdm,
    two_mode_project,
)

__all__ = [
    "__version__",
    "FockState",
    "ManyBodyBasis",
    "Orbital",
    "TruncationSpec",
    "build_basis",
    "EvolutionResult",
    "IntegratorConfig",
    "IsotropicEigenbasis",
    "RampSchedule",
    "RampSegment",
    "anisotropy_continuation_map",
    "anisotropy_switch_off",
    "choose_switch_off_duration",
    "sudden_validity_bound",
    "free_evolution",
    "integrate_tdse",
    "plan_adiabatic_ramp",
    "sudden_shift",
    "BasisCapacityError",
    "BracketError",
    "ConfigError",
    "ConvergenceError",
    "DeltaInstabilityError",
    "IntegrationError",
    "HamiltonianModel",
    "ModelParams",
    "SparseHamiltonian",
    "anisotropy_element",
    "assemble",
    "interaction_element",
    "lll_interaction_element",
    "MeasurementModel",
    "PrecisionCurve",
    "ProtocolConfig",
    "ProtocolResult",
    "estimate_precision",
    "ideal_phase_family",
    "qfi_pure",
    "qfi_quadratic_approx",
    "run_protocol",
    "shot_noise_limit",
    "CriticalFrequency",
    "EigenSolution",
    "SpectrumSweep",
    "find_critical_frequency",
    "lowest_eigenpairs",
    "parity_imbalance",
    "perturbative_ground",
    "sweep",
    "ManyBodyState",
    "NaturalOrbitals",
    "TwoModeDecomposition",
    "angular_momentum_moments",
    "l_distribution",
    "mode_entropy",
    "spdm",
    "two_mode_project",
]
