//! Numerical laboratory for the quantum Fourier operator and the family of
//! alternative quarter-involutions `K` (`K^2 = parity`, `K^4 = 1`) obtained by
//! regrouping Hermite eigenfunctions.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision types the command-line tool uses.

pub mod cli;
pub mod error;
pub mod hermite;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod scalar;
pub mod state;
pub mod symmetry;

pub use error::{LabError, Result};
pub use hermite::{
    basis_matrix, coeffs_from_grid, grid_from_coeffs, hermite_psi, hermite_psi_all, quadrature, BasisSpec,
};
pub use operator::{
    conjugated_position, fourier_operator, fourier_projectors, fractional_operator, k_operator, kernel_matrix,
    make_regrouping_plan, momentum_operator, parity_operator, position_operator, PlanSource, RegroupingPlan, Tags,
};
pub use scalar::{Cx, Real};
pub use symmetry::{
    commutator_residual, pauli_report, translation_check, unbiasedness_scan, uncertainty_scan, verify_symmetry,
    ExplorationReport, PropertyReport,
};
pub use state::{existential_weight, moments, pauli_pair, state_from_weight_phase, transform_state, Perspective};

pub type Basis = hermite::Basis<f64>;
pub type QuadratureGrid = hermite::QuadratureGrid<f64>;
pub type BasisMatrix = hermite::BasisMatrix<f64>;
pub type OperatorMatrix = operator::OperatorMatrix<f64>;
pub type ProjectorSet = operator::ProjectorSet<f64>;
pub type StateVector = state::StateVector<f64>;
pub type GridState<'g> = state::GridState<'g, f64>;
