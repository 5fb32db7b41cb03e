"""Pulse-level quantum simulation with analytic and stochastic gradients.

The package simulates parametrized pulse programs on few-qubit systems
and differentiates them three ways: analytically from effective
generators (odegen), stochastically via split-time parameter shifts
(sps), and exactly through integrator sensitivities.  On top sit a small
optimization harness, calibration and frequency-sweep experiments, and a
CLI that emits reproducible CSV tables.
"""

from .circuits import (
    Circuit,
    Device,
    DeviceConfig,
    DigitalRotation,
    FixedUnitary,
    PauliGate,
    PulseGate,
    apply_word,
    expectation,
    ground_energy,
    insert_before_pulse,
    run,
    split_pulse_gate,
)
from .experiments import (
    CalibrationResult,
    OptimizerConfig,
    SnrStudy,
    SweepResult,
    TrainingTrace,
    bloch_trajectory,
    calibrate_pulse,
    echoed_cr_ansatz,
    frequency_sweep,
    snr_study,
    toy_hamiltonian,
    vqe_run,
)
from .fileio import (
    LoadedProgram,
    ParseError,
    load_hamiltonian,
    load_program,
    parse_angular,
    parse_hamiltonian,
    parse_program,
    serialize_hamiltonian,
)
from .gradients import (
    EffectiveGenerator,
    OdegenPlan,
    SpsConfig,
    build_odegen_plan,
    effective_generators,
    exact_gradient,
    finite_difference_gradient,
    hamiltonian_dla,
    odegen_gradient,
    odegen_plans,
    resources_odegen,
    resources_sps,
    sps_gradient,
    two_term_shift,
    words_outside_closure,
)
from .ode import OdeConfig, PropagatorResult, evolve, evolve_with_sensitivity
from .paulis import (
    DLAResult,
    PauliDecomposition,
    PauliSum,
    PauliWord,
    commutator,
    dla_closure,
    pauli_decompose,
)
from .pulses import (
    ConstantEnvelope,
    DriveChannel,
    DriveTerm,
    LegendreEnvelope,
    NegatedEnvelope,
    ParametrizedHamiltonian,
    PiecewiseConstantEnvelope,
    TransmonSpec,
    transmon_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Device",
    "DeviceConfig",
    "DigitalRotation",
    "FixedUnitary",
    "PauliGate",
    "PulseGate",
    "apply_word",
    "expectation",
    "ground_energy",
    "insert_before_pulse",
    "run",
    "split_pulse_gate",
    "CalibrationResult",
    "OptimizerConfig",
    "SnrStudy",
    "SweepResult",
    "TrainingTrace",
    "bloch_trajectory",
    "calibrate_pulse",
    "echoed_cr_ansatz",
    "frequency_sweep",
    "snr_study",
    "toy_hamiltonian",
    "vqe_run",
    "LoadedProgram",
    "ParseError",
    "load_hamiltonian",
    "load_program",
    "parse_angular",
    "parse_hamiltonian",
    "parse_program",
    "serialize_hamiltonian",
    "EffectiveGenerator",
    "OdegenPlan",
    "SpsConfig",
    "build_odegen_plan",
    "effective_generators",
    "exact_gradient",
    "finite_difference_gradient",
    "hamiltonian_dla",
    "odegen_gradient",
    "odegen_plans",
    "resources_odegen",
    "resources_sps",
    "sps_gradient",
    "two_term_shift",
    "words_outside_closure",
    "OdeConfig",
    "PropagatorResult",
    "evolve",
    "evolve_with_sensitivity",
    "DLAResult",
    "PauliDecomposition",
    "PauliSum",
    "PauliWord",
    "commutator",
    "dla_closure",
    "pauli_decompose",
    "ConstantEnvelope",
    "DriveChannel",
    "DriveTerm",
    "LegendreEnvelope",
    "NegatedEnvelope",
    "ParametrizedHamiltonian",
    "PiecewiseConstantEnvelope",
    "TransmonSpec",
    "transmon_hamiltonian",
    "__version__",
]
