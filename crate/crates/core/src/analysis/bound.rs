//! Upper bound for `λ₁(A)` over a finite family of first integrals:
//! the smallest value of `[κ∮ω² + ∫a|∇ω|² + ∫cω²] / ∫ω²` on the span of
//! polynomials in the stream function.

use std::sync::Arc;

use faer::{Mat, Side};

use crate::mesh::{sbp_grad, weighted_dot, Grid, ScalarField, VectorField};
use crate::Error;

use super::{AnalysisError, Problem};

/// Basis fields `f_k(ψ)` with their gradients `f_k′(ψ)∇ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstIntegralFamily {
    pub basis: Vec<ScalarField>,
    pub gradients: Vec<VectorField>,
}

/// `(P_n(ξ), P_n′(ξ))` for `n = 0..=degree`.
fn legendre(xi: f64, degree: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(1.0, 0.0)];
    if degree >= 1 {
        out.push((xi, 1.0));
    }
    for n in 1..degree {
        let nf = n as f64;
        let p = ((2.0 * nf + 1.0) * xi * out[n].0 - nf * out[n - 1].0) / (nf + 1.0);
        let dp = out[n - 1].1 + (2.0 * nf + 1.0) * out[n].0;
        out.push((p, dp));
    }
    out
}

impl FirstIntegralFamily {
    pub fn constants(grid: &Arc<Grid>) -> Self {
        Self {
            basis: vec![ScalarField::constant(grid.clone(), 1.0)],
            gradients: vec![VectorField::zeros(grid.clone())],
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Legendre polynomials of degree `≤ degree` in the rescaled stream
    /// function; for Dirichlet, powers `(ψ − ψ|∂Ω)^{k+1}`, `k < degree`, which
    /// vanish on the boundary.
    pub fn polynomial(problem: &Problem, degree: usize) -> Result<Self, Error> {
        let g = problem.grid().clone();
        let psi = problem
            .spec
            .flow
            .stream_function(&g)?
            .ok_or_else(|| AnalysisError::Unsupported("first integrals need a stream-function flow".into()))?;
        let dpsi = sbp_grad(&psi);
        let (lo, hi) = (psi.min(), psi.max());
        let width = hi - lo;
        let scale = 1.0 + lo.abs().max(hi.abs());
        if problem.bc().is_dirichlet() {
            let boundary: Vec<f64> = g.boundary_nodes().map(|k| psi.values()[k]).collect();
            let pb = boundary[0];
            if boundary.iter().any(|x| (x - pb).abs() > 1e-12 * scale) {
                return Err(AnalysisError::Unsupported("ψ is not constant on the boundary".into()).into());
            }
            let span = psi.values().iter().fold(0.0f64, |m, x| m.max((x - pb).abs()));
            if span <= 1e-14 * scale || degree == 0 {
                return Err(AnalysisError::Unsupported("no nonzero first integral vanishes on the boundary".into()).into());
            }
            let s: Vec<f64> = psi.values().iter().map(|x| (x - pb) / span).collect();
            let mut fam = Self {
                basis: Vec::new(),
                gradients: Vec::new(),
            };
            for k in 0..degree {
                let f: Vec<f64> = s.iter().map(|x| x.powi(k as i32 + 1)).collect();
                let df: Vec<f64> = s.iter().map(|x| (k as f64 + 1.0) * x.powi(k as i32) / span).collect();
                fam.push(&g, f, &df, &dpsi)?;
            }
            return Ok(fam);
        }
        if width <= 1e-14 * scale {
            return Ok(Self::constants(&g));
        }
        let table: Vec<Vec<(f64, f64)>> = psi
            .values()
            .iter()
            .map(|x| legendre(2.0 * (x - lo) / width - 1.0, degree))
            .collect();
        let mut fam = Self {
            basis: Vec::new(),
            gradients: Vec::new(),
        };
        for n in 0..=degree {
            let f = table.iter().map(|t| t[n].0).collect();
            let df: Vec<f64> = table.iter().map(|t| t[n].1 * 2.0 / width).collect();
            fam.push(&g, f, &df, &dpsi)?;
        }
        Ok(fam)
    }

    fn push(&mut self, g: &Arc<Grid>, f: Vec<f64>, df: &[f64], dpsi: &VectorField) -> Result<(), Error> {
        let comps = dpsi
            .components()
            .iter()
            .map(|c| c.iter().zip(df).map(|(a, b)| a * b).collect())
            .collect();
        self.basis.push(ScalarField::new(g.clone(), f)?);
        self.gradients.push(VectorField::new(g.clone(), comps)?);
        Ok(())
    }

    /// `max_k ‖V·∇f_k‖∞ / ‖∇f_k‖∞` (zero for constant members).
    pub fn membership_residual(&self, v: &VectorField) -> Result<f64, Error> {
        let mut worst = 0.0f64;
        for grad in &self.gradients {
            let d = v.dot(grad)?;
            let scale = grad.max_abs();
            if scale > 0.0 {
                worst = worst.max(d.max_abs() / scale);
            }
        }
        Ok(worst)
    }
}

/// Smallest generalized eigenvalue of `G w = μ B w`, with `G` the quadratic
/// form of the `A = 0` operator (diffusion, reaction and Robin boundary
/// term) and `B` the mass Gram, both restricted to the family.
pub fn first_integral_bound(problem: &Problem, family: &FirstIntegralFamily) -> Result<f64, Error> {
    if family.is_empty() {
        return Err(AnalysisError::SingularMass.into());
    }
    let (m0, _) = problem.operators(0.0)?;
    let g = problem.grid();
    let k = family.len();
    let applied: Vec<Vec<f64>> = family
        .basis
        .iter()
        .map(|f| m0.base().matvec(f.values()))
        .collect::<Result<_, _>>()?;
    let gram = Mat::<f64>::from_fn(k, k, |i, j| {
        0.5 * (weighted_dot(g, family.basis[i].values(), &applied[j])
            + weighted_dot(g, family.basis[j].values(), &applied[i]))
    });
    let mass = Mat::<f64>::from_fn(k, k, |i, j| weighted_dot(g, family.basis[i].values(), family.basis[j].values()));
    let llt = mass.llt(Side::Lower).map_err(|_| AnalysisError::SingularMass)?;
    let l = llt.L();
    let mut linv = Mat::<f64>::identity(k, k);
    l.solve_lower_triangular_in_place(linv.as_mut());
    let reduced = &linv * &gram * linv.transpose();
    let sym = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    let mu = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| AnalysisError::SingularMass)?;
    Ok(mu[0])
}
