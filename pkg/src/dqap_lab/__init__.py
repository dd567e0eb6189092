"""Simulation and optimization of layered bond-alternation circuits on
the free-fermion chain, with entanglement and scheduling diagnostics
and a brute-force occupation-basis oracle for cross-checks."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DimensionMismatch,
    DqapError,
    LinearSolveError,
    NoConvergence,
    OpenShellError,
    SingularOverlapError,
    SizeLimitExceeded,
)
from .lattice import (
    LatticeSpec,
    bond_pairs,
    build_hamiltonian,
    build_v1,
    build_v2,
    exact_ground_state,
    initial_state,
    single_particle_spectrum,
)
from .slater import (
    SlaterState,
    apply_bond_layer,
    energy_expectation,
    overlap,
    transition_density,
    two_body_expectation,
)
from .ansatz import (
    DqapParams,
    ImagParams,
    build_dqap_state,
    build_imag_state,
    dqap_param_derivatives,
    imag_param_derivatives,
    intermediate_states,
    orbital_support,
    state_and_derivatives,
)
from .optimizer import (
    NaturalGradientWorkspace,
    OptResult,
    OptimizerConfig,
    assemble_metric_and_force,
    linear_schedule_params,
    natural_gradient_step,
    optimize,
    optimize_imaginary,
    warm_start,
)
from .entanglement import (
    CorrelationSpectrum,
    SpectrumDiagnostic,
    Subsystem,
    boundary_rank_diagnostic,
    correlation_spectrum,
    entanglement_entropy,
    entropy_from_levels,
    entropy_mode_form,
    mutual_information,
    one_particle_dm,
    scaling_exponents,
)
from .adiabatic import (
    EvolutionPlan,
    ScheduleSample,
    aggregate_times,
    evolve_linear_schedule,
    find_T_epsilon,
    magnus_step,
    maximize_overlap,
    qab_gap,
    qab_samples,
    qab_schedule,
    scheduling_overlap,
)
from .fock import (
    FockBasis,
    FockVector,
    fock_apply_hamiltonian,
    fock_entropy,
    fock_evolve,
    fock_expectation,
    fock_reduced_dm,
    many_body_matrix,
    slater_to_fock,
)
from .experiments import (
    ExperimentConfig,
    RunManifest,
    fit_power_law,
    run_experiment,
)
