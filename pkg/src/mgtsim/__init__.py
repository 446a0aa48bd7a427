"""Finite-element simulation of third-order-in-time acoustic wave equations.

Implements the linear MGT equation and its Westervelt/Kuznetsov-type
quadratic extensions on intervals and squares (P1 elements, homogeneous
Dirichlet), advanced by an implicit Newmark predictor-corrector, with a sweep
harness that measures how fast solutions approach the inviscid (zero sound
diffusivity) limit in the energy norm.
"""

from .analysis import (
    DegenerateReferenceError,
    EnergySample,
    IllConditionedRootsError,
    InsufficientDataError,
    RateFit,
    SweepRecord,
    Trajectory,
    characteristic_roots,
    energy_norm_error,
    energy_sample,
    fit_rate,
    interval_eigenpair,
    matrix_norm,
    modal_solution,
    square_eigenpair,
)
from .fem import FemOperators, assemble, kuznetsov_rhs, load_vector, weighted_mass, westervelt_rhs
from .harness import (
    RunResult,
    SweepConfig,
    SweepResult,
    parse_config,
    read_sweep_csv,
    run_problem,
    run_sweep,
    write_outputs,
    write_snapshot_csv,
    write_sweep_csv,
)
from .integrator import (
    AcousticState,
    FixedPointDivergenceError,
    NewmarkParams,
    NewmarkStepper,
    SolverFailureError,
    correct,
    integrate_scalar_mode,
    predict,
    stable_dt,
)
from .medium import (
    MediumParams,
    NonlinearityParams,
    potential_nonlinearity,
    pressure_nonlinearity,
    stability_class,
    stability_parameter,
    westervelt_potential_coefficients,
)
from .mesh import Mesh, interval_mesh, square_triangle_mesh
from .models import (
    DomainSpec,
    Equation,
    ProblemSpec,
    SCENARIOS,
    SeparableSource,
    channel_1d_scenario,
    gaussian_1d,
    gaussian_2d,
    kuznetsov_scenario,
    make_problem,
    nonlinear_load_builder,
    source_2d_scenario,
    standing_mode_scenario,
    water_medium,
    westervelt_potential_scenario,
)

__version__ = "0.1.0"
