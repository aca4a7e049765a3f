//! Two-component spinor fields on a periodic lattice: kinetic-momentum
//! operators, probability currents and their magnetization part, the
//! corresponding Lagrangian bookkeeping, and norm-preserving time evolution.

pub mod currents;
pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod noether;
pub mod residual;
pub mod scalar;
pub mod solver;
pub mod spinor;

pub use currents::{
    antisymmetric_remainder, convective_current, convective_current_at, decompose, direct_current,
    direct_current_at, jm_divergence_relative, magnetization_current, magnetization_current_at,
    magnetization_density, magnetization_density_at, spin_density_gradient_at,
    CurrentDecomposition, REALNESS_TOL,
};
pub use dynamics::{
    apply_hamiltonian, apply_hamiltonian_at, continuity_residual, evolve, schrodinger_rhs, step,
    zeeman_residual, zeeman_residual_at, zeeman_splitting_ratio, ContinuityReport, EvolutionConfig,
    Integrator, StepStats, BOUNDARY_GUARD,
};
pub use error::{Error, Result};
pub use gauge::{CustomPotential, Gauge, UniformBz, UnitsConfig, VectorPotential, ZeroPotential};
pub use grid::{curl, divergence, gradient, levi_civita, Axis, Lattice, ScalarField, VectorField3};
pub use noether::{
    lagrangian_density, lagrangian_density_at, lm_total_divergence_residual,
    lm_total_divergence_residual_at, noether_current, noether_current_at, on_shell_psi_dot,
    on_shell_psi_dot_at, LagrangianPointSample, LagrangianSample, LmDivergenceReport,
    NoetherCurrentSample, NoetherPointSample,
};
pub use residual::ScaledResidual;
pub use scalar::{imag_unit, real, Real};
pub use solver::{bicgstab, SolverStats};
pub use spinor::analytic::{AnalyticState, GaussianPacket, PlaneWave, TexturedGaussian};
pub use spinor::{pauli, pauli_identity_residual, sigma_dot, Mat2, Spinor, SpinorField};

/// Concrete aliases for the common double-precision instantiation.
pub type C64 = num_complex::Complex<f64>;
pub type Lattice64 = Lattice<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField3<f64>;

/// Single-precision variants.
pub type C32 = num_complex::Complex<f32>;
pub type Lattice32 = Lattice<f32>;
pub type ScalarField32 = ScalarField<f32>;
pub type VectorField32 = VectorField3<f32>;
