//! Penalized interaction estimation for sparse quadratic regression.
//!
//! The model is `E(Y | x) = alpha + (x - u)^T beta + (x - u)^T Omega (x - u)`
//! with a sparse symmetric interaction matrix `Omega`. Interactions are
//! estimated without any heredity assumption by minimizing
//! `tr(B^T S B S) - tr(B Lambda) + lambda ||B||_1`, where `S` is the sample
//! covariance and `Lambda` a response- or residual-weighted second moment.

pub mod admm;
pub mod error;
pub mod evaluation;
pub mod main_effects;
pub mod matrix;
pub mod moments;
pub mod simulation;
pub mod tuning;

pub use error::{PieError, Result};
pub use matrix::SymmetricMatrix;
pub use moments::{center, lambda_r, lambda_y, residuals, CenteredStats, Dataset};
pub use tuning::{fit_pier, fit_piey, PieFit, PieOptions, QuadraticModel};
