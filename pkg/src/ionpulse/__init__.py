"""Pulse synthesis for drift-robust trapped-ion entangling gates.

The package designs piecewise-constant amplitude/phase pulse sequences that
close the ion-phonon phase-space trajectories, accumulate the target
entangling phase, and additionally zero the first-order sensitivity of both
to a common sideband-frequency drift. Modules:

chain_model        ion-chain equilibria, transverse modes, couplings
pulse_schedule     segmented pulses and the free-parameter layout
coupling_integrals closed-form couplings + independent quadrature oracles
fidelity           thermal-phonon analytic gate fidelity
cost               robustness cost, variants, analytic gradient
optimizer          seeded multi-start constrained minimization
noise_sweep        drift/time noise grids and CSV/JSON emitters
dynamics_oracle    brute-force truncated-Fock-space propagation
config             JSON run configuration and builders
cli                `ionpulse` command-line entry point
"""

from .chain_model import (
    ChainModel,
    ChainModelError,
    EquilibriumConvergenceError,
    TrapConfig,
    ZigzagInstabilityError,
    build_chain,
    lamb_dicke_matrix,
    length_scale,
    solve_equilibrium,
    transverse_modes,
)
from .config import ConfigError, RunConfig, default_config_dict
from .cost import (
    CostFunction,
    CostResult,
    CostSpec,
    cost_gradient,
    evaluate_cost,
    finite_difference_gradient,
    smooth_abs,
)
from .coupling_integrals import (
    CouplingReport,
    DriveConfig,
    ResonanceError,
    TARGET_ANGLE,
    beta_quadrature,
    evaluate_couplings,
    theta_quadrature,
    theta_tilde_quadrature,
    theta_trajectory,
)
from .dynamics_oracle import (
    OracleError,
    OracleFidelity,
    OracleResult,
    OracleSpace,
    gate_fidelity_exact,
    oracle_space_from_chain,
    propagate,
    thermal_mode_weights,
)
from .fidelity import (
    FidelityResult,
    ThermalEnv,
    ms_fidelity,
    thermal_occupations,
)
from .noise_sweep import SweepGrid, SweepSpec, coupling_trajectory, sweep
from .optimizer import OptimizeResult, OptimizerConfig, optimize
from .pulse_schedule import (
    ParamLayout,
    PulseSchedule,
    ScheduleError,
    build_schedule,
    wrap_phase,
)

__version__ = "0.1.0"

__all__ = [
    "ChainModel",
    "ChainModelError",
    "ConfigError",
    "CostFunction",
    "CostResult",
    "CostSpec",
    "CouplingReport",
    "DriveConfig",
    "EquilibriumConvergenceError",
    "FidelityResult",
    "OptimizeResult",
    "OptimizerConfig",
    "OracleError",
    "OracleFidelity",
    "OracleResult",
    "OracleSpace",
    "ParamLayout",
    "PulseSchedule",
    "ResonanceError",
    "RunConfig",
    "ScheduleError",
    "SweepGrid",
    "SweepSpec",
    "TARGET_ANGLE",
    "ThermalEnv",
    "TrapConfig",
    "ZigzagInstabilityError",
    "beta_quadrature",
    "build_chain",
    "build_schedule",
    "cost_gradient",
    "coupling_trajectory",
    "default_config_dict",
    "evaluate_cost",
    "evaluate_couplings",
    "finite_difference_gradient",
    "gate_fidelity_exact",
    "lamb_dicke_matrix",
    "length_scale",
    "ms_fidelity",
    "optimize",
    "oracle_space_from_chain",
    "propagate",
    "smooth_abs",
    "solve_equilibrium",
    "sweep",
    "theta_quadrature",
    "theta_tilde_quadrature",
    "theta_trajectory",
    "thermal_mode_weights",
    "thermal_occupations",
    "transverse_modes",
    "wrap_phase",
]
