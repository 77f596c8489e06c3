"""gravlab: pseudospectral simulator and stability toolkit for a nonlocal
gravitational collapse model on the periodic torus."""

from .integrator import (
    DiagnosticsRow,
    RunResult,
    SimConfig,
    detect_blowup,
    highband_energy_fraction,
    run,
    step_rk4,
)
from .model import (
    ModelParams,
    PhysicalParams,
    initial_condition,
    nondimensionalize,
    renormalize_to_unit_mean,
    rhs,
    rhs_divergence_form,
)
from .spectral import (
    GridSpec,
    RealField,
    SpectralField,
    forward_transform,
    fractional_laplacian,
    gradient,
    inverse_transform,
    lattice_kernel_oracle,
    naive_dft_oracle,
    solve_potential,
)
from .theory import (
    build_stability_report,
    check_run_against_bounds,
    dispersion,
    global_1d_envelope,
    jeans_length,
    linear_mode_rate,
    min_blowup_time,
    peak_growth_envelope,
    small_perturbation_envelope,
    spectral_decay_rate,
    stability_constant,
)

__version__ = "0.1.0"
