//! Amplitude sweeps and the checks built on them.

use std::sync::Arc;


use crate::eigen::{principal_eigenpair, principal_eigenvalue, EigenOptions, EigenPair, Eigenvector};
use crate::expr::Expr;
use crate::flows::{normal_flux_residual, divergence_residual, realize, sample, FlowSpec};
use crate::mesh::{build_grid, Grid, GridSpec, ScalarField, VectorField};
use crate::operator::{assemble, assemble_adjoint, BoundaryCondition, CoefficientSet, OperatorMatrix};
use crate::Error;

pub mod bound;
pub mod counterexample;
pub mod gradflow;
pub mod limit;
pub mod minmax;
pub mod presets;
pub mod scaling;
pub mod sweep;
pub mod verify;

pub use bound::{first_integral_bound, FirstIntegralFamily};
pub use counterexample::{counterexample_probe, CounterexampleReport};
pub use gradflow::{gradient_flow_sweep, GradientFlowReport};
pub use limit::{limit_probe, LimitReport};
pub use minmax::{minmax_verify, MinMaxReport};
pub use presets::preset;
pub use scaling::{scaling_identity, symmetry_check, ScalingReport, Symmetry};
pub use sweep::{classify, sweep, Classification, SweepReport, SweepRow};
pub use verify::{identity_suite, VerifyReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("first-integral mass matrix is singular; reduce the degree")]
    SingularMass,
    #[error("grid spacing {h} does not resolve the boundary layer at A = {amplitude} (need h ≤ 1/(4A))")]
    UnresolvedLayer { h: f64, amplitude: f64 },
}

/// Everything needed to build the operator at any amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: GridSpec,
    pub b: f64,
    pub a: Expr,
    pub c: Expr,
    pub flow: FlowSpec,
    pub amplitudes: Vec<f64>,
    pub eigen: EigenOptions,
}

/// Structural diagnostics of the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compliance {
    pub divergence: f64,
    pub normal_flux: f64,
    /// `div V = 0`, plus `V·n = 0` unless the boundary condition is Dirichlet.
    pub compliant: bool,
}

/// A problem sampled on its grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    grid: Arc<Grid>,
    bc: BoundaryCondition,
    a: ScalarField,
    c: ScalarField,
    v: VectorField,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub m: OperatorMatrix,
    pub m_adj: OperatorMatrix,
    pub pair: EigenPair,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self, Error> {
        let grid = build_grid(&spec.domain)?;
        let bc = BoundaryCondition::new(spec.b)?;
        let a = sample(&spec.a, &grid)?;
        let c = sample(&spec.c, &grid)?;
        let v = realize(&spec.flow, &grid)?;
        // validates ellipticity once
        CoefficientSet::new(a.clone(), c.clone(), v.clone(), 0.0)?;
        Ok(Self {
            spec,
            grid,
            bc,
            a,
            c,
            v,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn velocity(&self) -> &VectorField {
        &self.v
    }

    pub fn a(&self) -> &ScalarField {
        &self.a
    }

    pub fn c(&self) -> &ScalarField {
        &self.c
    }

    pub fn compliance(&self) -> Compliance {
        let divergence = divergence_residual(&self.v);
        let normal_flux = normal_flux_residual(&self.v);
        let tangential = self.bc.is_dirichlet() || normal_flux <= 1e-10;
        Compliance {
            divergence,
            normal_flux,
            compliant: divergence <= 1e-10 && tangential,
        }
    }

    /// Coefficients at a signed amplitude; negative values reverse the flow.
    pub fn coefficients(&self, amplitude: f64) -> Result<CoefficientSet, Error> {
        let v = if amplitude < 0.0 { self.v.negated() } else { self.v.clone() };
        Ok(CoefficientSet::new(self.a.clone(), self.c.clone(), v, amplitude.abs())?)
    }

    pub fn operators(&self, amplitude: f64) -> Result<(OperatorMatrix, OperatorMatrix), Error> {
        let co = self.coefficients(amplitude)?;
        Ok((assemble(&co, self.bc)?, assemble_adjoint(&co, self.bc)?))
    }

    /// Forward and adjoint eigenpair at a signed amplitude.
    pub fn solve(&self, amplitude: f64) -> Result<Solved, Error> {
        let (m, m_adj) = self.operators(amplitude)?;
        let pair = principal_eigenpair(&m, &m_adj, &self.spec.eigen)?;
        Ok(Solved { m, m_adj, pair })
    }

    /// Forward-only principal eigenvalue; used where `−V` is not the
    /// adjoint flow.
    pub fn eigenvalue(&self, amplitude: f64) -> Result<Eigenvector, Error> {
        let co = self.coefficients(amplitude)?;
        Ok(principal_eigenvalue(&assemble(&co, self.bc)?, &self.spec.eigen)?)
    }
}

/// Runs `f` over `items` in parallel, keeping order; `ADVEIG_THREADS` caps
/// the width.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    let threads = std::env::var("ADVEIG_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        None => items.par_iter().map(&f).collect(),
    }
}
