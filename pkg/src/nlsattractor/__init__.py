"""Spectral Galerkin solver and attractor diagnostics for the weakly
damped, driven nonlinear Schroedinger equation on a Dirichlet rectangle.
"""
__version__ = "0.1.0"

from .attractor import (
    AbsorbingBall,
    EnsembleSnapshot,
    absorbing_entry_time,
    attraction_profile,
    continuous_dependence_check,
    galerkin_convergence_study,
    hausdorff_E,
    pullback_distances,
    pullback_ensemble,
    seed_set,
)
from .diagnostics import (
    DecayEnvelope,
    EnergySample,
    backward_fit,
    balance_residual,
    decay_envelope,
    energy_samples,
    envelope_check,
    hamiltonian,
    inner_real,
    phi_functional,
    phi_ode_residual,
    psi_functional,
)
from .integrator import BlowUpError, SolverParams, Trajectory, evolve, rhs, step_rk4, step_strang
from .nonlinearity import (
    ConditionConstants,
    QuarticPotential,
    apply_nonlinearity,
    condition_constants,
    f_jacobian,
    f_value,
    potential_energy,
    potential_value,
)
from .pumping import PumpMode, QuasiPeriodicPump, pump_eval, pump_sup_norm, pump_translate
from .spectral import (
    DomainSpec,
    GridField,
    SpectralField,
    apply_laplacian,
    build_domain,
    sobolev_norm,
    to_coeffs,
    to_grid,
)
