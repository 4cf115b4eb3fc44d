//! Principal eigenvalues of advection-diffusion operators
//! `L_A = −div(a∇) + A V·∇ + c` with incompressible flows.
//!
//! The crate assembles finite-difference discretizations on structured 1D
//! and 2D grids, computes the principal eigenpair of the operator and its
//! adjoint, and evaluates the variational functional `J(ω) = ∫ u v Lω/ω`
//! together with the identities, monotonicity statements and bounds that
//! surround it.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod eigen;
pub mod expr;
pub mod flows;
pub mod functional;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod report;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Flow(#[from] flows::FlowError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Operator(#[from] operator::OperatorError),
    #[error(transparent)]
    Eigen(#[from] eigen::EigenError),
    #[error(transparent)]
    Functional(#[from] functional::FunctionalError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}
