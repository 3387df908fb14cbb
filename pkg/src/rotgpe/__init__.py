"""Numerical laboratory for the 2D rotating Gross-Pitaevskii equation with a
logarithmic-cubic nonlinearity and three-body loss."""

from .grid import (
    ComplexField,
    GridSpec,
    RadialField,
    apply_grad_A,
    apply_Lz,
    gradient,
    integrate,
    read_field,
    rotate_frame,
    write_field,
)
from .functionals import (
    ObservableRecord,
    Params,
    PohozaevReport,
    Regime,
    Verdict,
    action_S,
    angular_momentum,
    check_nonexistence_window,
    dichotomy_constants,
    energy,
    energy_magnetic,
    inequality_suite,
    mass,
    nehari_K,
    observables,
    pohozaev_residuals,
    pseudo_energy,
    quadratic_form_B,
)
from .trials import (
    GaussianTrial,
    VortexTrial,
    cubic_ground_state,
    gaussian_moments,
    modulus_magnetic_counterexample,
    threshold_functions,
    vortex_energy_curve,
    vortex_field,
    vortex_moments,
)
from .evolve import EvolveConfig, Trajectory, evolve, extinction_experiment, nonlinear_substep, strang_step
from .minimize import (
    FlowConfig,
    GroundStateResult,
    NonexistenceRegime,
    Seed,
    constant_phase_check,
    extract_omega,
    ground_state,
    ground_state_magnetic,
    ground_state_radial,
    linear_bottom,
    orbit_distance,
    stability_probe,
)

__version__ = "0.1.0"
