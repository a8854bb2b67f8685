"""Energy-stable quadratized time steppers for gradient-flow PDEs.

The package couples a pseudo-spectral spatial discretization with linear,
unconditionally energy-stable CN/BDF2 steppers for quadratized gradient
flows, plus a per-step relaxation that pulls the auxiliary field back to
its pointwise definition without breaking the discrete energy law.
"""

from .spectral import (
    Grid,
    RealField,
    VectorField,
    make_grid,
    laplacian,
    biharmonic,
    gradient,
    divergence,
    inner,
    inner_vec,
    norm2,
    mean_value,
)
from .models import (
    ModelSpec,
    build_ac,
    build_ch,
    build_mbe,
    build_pfc,
    build_model,
    h_field,
    g_field,
    gvec_field,
    original_energy,
    modified_energy,
    chemical_potential,
)
from .stepper import (
    State,
    StepResult,
    init_state,
    extrapolate,
    apply_n0,
    apply_n0_adjoint,
    step_cn,
    step_bdf2,
)
from .relax import RelaxCoeffs, FeasibilityError, solve_xi, relax_cn, relax_bdf2
from .linsolve import LinearOperator, ConvergenceError, krylov_solve, dense_oracle_solve
from .driver import (
    RunConfig,
    RunSummary,
    TimeSeriesRow,
    preset_config,
    preset_seven_disks,
    preset_mbe,
    preset_pfc,
    run,
    convergence_study,
    write_timeseries,
    read_timeseries,
    write_snapshot,
    read_snapshot,
)

__version__ = "0.1.0"
