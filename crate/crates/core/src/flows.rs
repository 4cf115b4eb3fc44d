//! Velocity fields and the two structural diagnostics: discrete divergence
//! and normal flux through the boundary.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Var};
use crate::mesh::{diff, grad, Axis, Grid, MeshError, ScalarField, Stencil, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowSpec {
    /// `V = (∂ψ/∂y, −∂ψ/∂x)`, 2D only.
    StreamFunction(Expr),
    /// `V = α(cross variable) e_direction`; a stream-function flow whose ψ
    /// depends on one variable, sampled directly.
    Shear { profile: Expr, direction: Axis },
    Constant(Vec<f64>),
    /// `V = ∇m`; compressible unless `m` is harmonic.
    Gradient(Expr),
    Zero,
}

impl FlowSpec {
    pub fn stream(src: &str) -> Result<Self, ExprError> {
        Ok(FlowSpec::StreamFunction(Expr::new(src)?))
    }

    pub fn gradient(src: &str) -> Result<Self, ExprError> {
        Ok(FlowSpec::Gradient(Expr::new(src)?))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FlowSpec::StreamFunction(_) => "stream",
            FlowSpec::Shear { .. } => "shear",
            FlowSpec::Constant(_) => "constant",
            FlowSpec::Gradient(_) => "gradient",
            FlowSpec::Zero => "zero",
        }
    }

    /// Stream function sampled on the grid, for flows that have one.
    pub fn stream_function(&self, grid: &Arc<Grid>) -> Result<Option<ScalarField>, FlowError> {
        match self {
            FlowSpec::StreamFunction(psi) => Ok(Some(sample(psi, grid)?)),
            FlowSpec::Zero => Ok(Some(ScalarField::constant(grid.clone(), 0.0))),
            _ => Ok(None),
        }
    }
}

pub(crate) fn sample(e: &Expr, grid: &Arc<Grid>) -> Result<ScalarField, FlowError> {
    Ok(ScalarField::try_from_fn(grid.clone(), |x, y| e.eval(x, y))??)
}

/// Discrete curl of a sampled stream function, using the summation-by-parts
/// stencil so that its discrete divergence vanishes identically.
pub fn curl(psi: &ScalarField) -> Result<VectorField, FlowError> {
    let g = psi.grid();
    if g.dim() != 2 {
        return Err(FlowError::DimensionMismatch("stream functions need a 2D grid".into()));
    }
    let vx = diff(g, psi.values(), Axis::Y, Stencil::Sbp);
    let vy: Vec<f64> = diff(g, psi.values(), Axis::X, Stencil::Sbp)
        .into_iter()
        .map(|d| -d)
        .collect();
    Ok(VectorField::new(g.clone(), vec![vx, vy])?)
}

pub fn realize(spec: &FlowSpec, grid: &Arc<Grid>) -> Result<VectorField, FlowError> {
    let dim = grid.dim();
    match spec {
        FlowSpec::Zero => Ok(VectorField::zeros(grid.clone())),
        FlowSpec::StreamFunction(psi) => {
            if dim != 2 {
                return Err(FlowError::DimensionMismatch("stream functions need a 2D grid".into()));
            }
            curl(&sample(psi, grid)?)
        }
        FlowSpec::Shear { profile, direction } => {
            if dim != 2 {
                return Err(FlowError::DimensionMismatch("shear flows need a 2D grid".into()));
            }
            let alpha = sample(profile, grid)?;
            let depends_on_own_axis = match direction {
                Axis::X => profile.ast().uses(Var::X),
                Axis::Y => profile.ast().uses(Var::Y),
            };
            if depends_on_own_axis {
                return Err(FlowError::DimensionMismatch(
                    "shear profile must depend only on the cross variable".into(),
                ));
            }
            let zero = vec![0.0; grid.len()];
            let comps = match direction {
                Axis::X => vec![alpha.into_values(), zero],
                Axis::Y => vec![zero, alpha.into_values()],
            };
            Ok(VectorField::new(grid.clone(), comps)?)
        }
        FlowSpec::Constant(v) => {
            if v.len() != dim {
                return Err(FlowError::DimensionMismatch(format!(
                    "constant vector has {} components on a {dim}D grid",
                    v.len()
                )));
            }
            let comps = v.iter().map(|&c| vec![c; grid.len()]).collect();
            Ok(VectorField::new(grid.clone(), comps)?)
        }
        FlowSpec::Gradient(m) => Ok(grad(&sample(m, grid)?)),
    }
}

/// Central-difference divergence at every node (one-sided summation-by-parts
/// closure at the boundary).
pub fn divergence(v: &VectorField) -> Vec<f64> {
    let g = v.grid();
    let mut div = vec![0.0; g.len()];
    for &ax in g.axes() {
        for (d, x) in div.iter_mut().zip(diff(g, v.component(ax), ax, Stencil::Sbp)) {
            *d += x;
        }
    }
    div
}

/// Max over interior nodes of the central-difference divergence.
pub fn divergence_residual(v: &VectorField) -> f64 {
    let g = v.grid();
    let div = divergence(v);
    g.interior_nodes().map(|k| div[k].abs()).fold(0.0, f64::max)
}

/// Max over boundary nodes of `|V·n|`, taking every side a corner touches.
pub fn normal_flux_residual(v: &VectorField) -> f64 {
    let g = v.grid();
    g.boundary_nodes()
        .flat_map(|k| {
            let vk = v.at(k);
            g.tag(k).sides().map(move |s| {
                let n = s.normal();
                (vk[0] * n[0] + vk[1] * n[1]).abs()
            })
        })
        .fold(0.0, f64::max)
}

/// `V·∇f` with the second-order gradient; used for first-integral
/// indicators.
pub fn directional_derivative(v: &VectorField, f: &ScalarField) -> Result<ScalarField, FlowError> {
    Ok(v.dot(&grad(f))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};
    use std::f64::consts::PI;

    fn square(n: usize) -> Arc<Grid> {
        build_grid(&GridSpec::unit_square(n)).unwrap()
    }

    const CELL: &str = "sin(pi*x)*sin(pi*y)";

    #[test]
    fn constant_stream_function_is_still() {
        let v = realize(&FlowSpec::stream("3.5").unwrap(), &square(9)).unwrap();
        assert_eq!(v.max_abs(), 0.0);
    }

    #[test]
    fn cellular_velocity() {
        let g = square(129);
        let v = realize(&FlowSpec::stream(CELL).unwrap(), &g).unwrap();
        let k = g.index(64, 32);
        assert_eq!(g.coord(k), (0.5, Some(0.25)));
        let exact = PI * (PI / 2.0).sin() * (PI / 4.0).cos();
        assert!((exact - 2.2214).abs() < 1e-4);
        let [vx, vy] = v.at(k);
        assert!((vx - exact).abs() < 2e-4 * exact, "{vx}");
        assert!(vy.abs() < 1e-12);
    }

    #[test]
    fn constant_flow_1d() {
        let g = build_grid(&GridSpec::interval(0.0, 1.0, 6)).unwrap();
        let v = realize(&FlowSpec::Constant(vec![1.0]), &g).unwrap();
        assert!(v.component(Axis::X).iter().all(|&c| c == 1.0));
        assert_eq!(divergence_residual(&v), 0.0);
        assert_eq!(normal_flux_residual(&v), 1.0);
        assert!(matches!(
            realize(&FlowSpec::Constant(vec![1.0, 0.0]), &g),
            Err(FlowError::DimensionMismatch(_))
        ));
        assert!(realize(&FlowSpec::stream("x").unwrap(), &g).is_err());
    }

    #[test]
    fn stream_flows_are_discretely_solenoidal() {
        for src in [CELL, "x^2*y+cos(3*x*y)", "exp(x)*sin(2*y)"] {
            for n in [9, 33, 65] {
                let v = realize(&FlowSpec::stream(src).unwrap(), &square(n)).unwrap();
                // the SBP closure keeps even the boundary divergence at rounding level
                let div = divergence(&v);
                let worst = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                assert!(worst <= 1e-12 * (n * n) as f64, "{src} n={n}: {worst}");
                assert!(divergence_residual(&v) <= 1e-12 * (n * n) as f64);
            }
        }
    }

    #[test]
    fn cellular_flow_is_tangential() {
        let v = realize(&FlowSpec::stream(CELL).unwrap(), &square(65)).unwrap();
        assert!(normal_flux_residual(&v) <= 1e-10);
        assert_eq!(normal_flux_residual(&VectorField::zeros(square(5))), 0.0);
    }

    #[test]
    fn gradient_flow_divergence() {
        let g = square(33);
        let v = realize(&FlowSpec::gradient("x^2").unwrap(), &g).unwrap();
        assert!((divergence_residual(&v) - 2.0).abs() < 1e-10);
        // harmonic potential: residual shrinks with h (first order, from
        // the one-sided boundary gradient entering the central divergence)
        let r = |n| divergence_residual(&realize(&FlowSpec::gradient("exp(x)*cos(y)").unwrap(), &square(n)).unwrap());
        let (r1, r2, r3) = (r(17), r(33), r(65));
        assert!(r2 < 0.6 * r1 && r3 < 0.6 * r2, "{r1} {r2} {r3}");
    }

    #[test]
    fn shear_flow_sampled() {
        let g = square(9);
        let spec = FlowSpec::Shear {
            profile: Expr::new("sin(pi*y)").unwrap(),
            direction: Axis::X,
        };
        let v = realize(&spec, &g).unwrap();
        assert_eq!(divergence_residual(&v), 0.0);
        assert!(realize(
            &FlowSpec::Shear {
                profile: Expr::new("x").unwrap(),
                direction: Axis::X
            },
            &g
        )
        .is_err());
    }
}
