//! Principal eigenpairs by shifted inverse power iteration.
//!
//! The iteration factors `M − σI` once per shift. Dirichlet rows stay
//! identity rows and the start vector vanishes on them, so the iterates never
//! leave the subspace `u|∂Ω = 0` and the unit eigenvalues of those rows are
//! never seen. When the matrix has nonpositive off-diagonal entries the
//! Collatz–Wielandt bound `min_k (Mz)_k / z_k ≤ λ₁` of a positive iterate is
//! used to move the shift closer to `λ₁`.

use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError, SparseLu};
use crate::mesh::{inner, weighted_dot, MeshError, ScalarField};
use crate::operator::{OperatorKind, OperatorMatrix};
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("inverse iteration did not converge in {iterations} iterations (last change {delta:e}, residual {residual:e})")]
    NoConvergence { iterations: usize, delta: f64, residual: f64 },
    #[error("{kind:?} eigenvector changes sign at interior nodes (grid Péclet {peclet:.3})")]
    PositivityFailure { kind: OperatorKind, peclet: f64 },
    #[error("shifted matrix is singular at σ = {0}")]
    SingularShift(f64),
    #[error("forward eigenvalue {forward} and adjoint eigenvalue {adjoint} disagree")]
    AdjointMismatch { forward: f64, adjoint: f64 },
    #[error("∫uv = {0} is not positive")]
    DegeneratePair(f64),
    #[error("forward and adjoint operators do not match: {0}")]
    OperatorMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed shift; disables the automatic shift and its refinement.
    pub shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            shift: None,
        }
    }
}

/// One eigenvector of one operator, normalized to `∫z² = 1` and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvector {
    pub lambda: f64,
    pub vector: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub residual_u: f64,
    pub residual_v: f64,
    pub iterations: usize,
    pub positivity_ok: bool,
    pub peclet_warning: bool,
}

impl Report for EigenPair {
    fn to_json(&self) -> Value {
        let g = self.u.grid();
        json!({
            "lambda": self.lambda,
            "residual_u": self.residual_u,
            "residual_v": self.residual_v,
            "iterations": self.iterations,
            "positivity_ok": self.positivity_ok,
            "peclet_warning": self.peclet_warning,
            "norm_u2": inner(&self.u, &self.u),
            "norm_uv": inner(&self.u, &self.v),
            "nodes": g.len(),
        })
    }
}

/// Scaled residual `‖Mz − λz‖_W / ((‖M‖∞ + |λ|)‖z‖_W)`.
pub fn relative_residual(m: &OperatorMatrix, lambda: f64, z: &[f64]) -> Result<f64, EigenError> {
    let mz = m.matrix().matvec(z)?;
    let mask = m.dirichlet_mask();
    let r: Vec<f64> = mz
        .iter()
        .zip(z)
        .zip(mask)
        .map(|((a, b), &d)| if d { a - b } else { a - lambda * b })
        .collect();
    let g = m.grid();
    let num = weighted_dot(g, &r, &r).sqrt();
    let den = (m.matrix().norm_inf() + lambda.abs()) * weighted_dot(g, z, z).sqrt();
    Ok(if den > 0.0 { num / den } else { num })
}

fn is_z_matrix(m: &CsrMatrix, mask: &[bool]) -> bool {
    (0..m.n()).filter(|&k| !mask[k]).all(|k| m.row(k).all(|(l, x)| l == k || x <= 0.0))
}

/// Collatz–Wielandt lower bound, when every free entry of `z` is positive.
fn collatz_lower(mz: &[f64], z: &[f64], mask: &[bool]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    for k in 0..z.len() {
        if mask[k] {
            continue;
        }
        if z[k] <= 0.0 {
            return None;
        }
        lo = lo.min(mz[k] / z[k]);
    }
    lo.is_finite().then_some(lo)
}

fn factor(m: &CsrMatrix, sigma: f64, mask: &[bool]) -> Result<SparseLu, EigenError> {
    SparseLu::factor_shifted(m, sigma, mask).map_err(|_| EigenError::SingularShift(sigma))
}

fn solve(lu: &SparseLu, z: &[f64], sigma: f64) -> Result<Vec<f64>, EigenError> {
    lu.solve(z).map_err(|e| match e {
        LinalgError::Singular => EigenError::SingularShift(sigma),
        other => other.into(),
    })
}

/// One step of iterative refinement for `(M − σI) y = z`.
fn refine_solution(
    mat: &CsrMatrix,
    lu: &SparseLu,
    sigma: f64,
    mask: &[bool],
    z: &[f64],
    mut y: Vec<f64>,
) -> Result<Vec<f64>, EigenError> {
    let my = mat.matvec(&y)?;
    let r: Vec<f64> = (0..y.len())
        .map(|k| z[k] - if mask[k] { my[k] } else { my[k] - sigma * y[k] })
        .collect();
    let d = solve(lu, &r, sigma)?;
    y.iter_mut().zip(d).for_each(|(a, b)| *a += b);
    Ok(y)
}

/// Extra iterations after the stopping test passes; they cost one solve
/// each and sharpen the vector where it is small.
const POLISH_STEPS: usize = 2;

/// Principal eigenvalue and eigenvector of a single operator.
pub fn principal_eigenvalue(m: &OperatorMatrix, opts: &EigenOptions) -> Result<Eigenvector, EigenError> {
    let g = m.grid().clone();
    let mat = m.matrix();
    let mask = m.dirichlet_mask();
    let norm = |z: &[f64]| weighted_dot(&g, z, z).sqrt();
    let mut sigma = opts.shift.unwrap_or(mat.gershgorin_min() - 1.0);
    let refine = opts.shift.is_none() && is_z_matrix(mat, mask);
    let mut lu = match factor(mat, sigma, mask) {
        Ok(lu) => lu,
        Err(_) => {
            // a fixed shift may hit an eigenvalue; nudge it once
            sigma -= 1e-6 * (1.0 + sigma.abs());
            factor(mat, sigma, mask)?
        }
    };
    let mut z: Vec<f64> = mask.iter().map(|&d| if d { 0.0 } else { 1.0 }).collect();
    let nz = norm(&z);
    z.iter_mut().for_each(|x| *x /= nz);
    let mut lambda = f64::NAN;
    let mut delta = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut refinements = 0;
    let mut polish = None;
    for it in 1..=opts.max_iter {
        let mut y = solve(&lu, &z, sigma)?;
        if polish.is_some() {
            y = refine_solution(mat, &lu, sigma, mask, &z, y)?;
        }
        for (x, &d) in y.iter_mut().zip(mask) {
            if d {
                *x = 0.0;
            }
        }
        let ny = norm(&y);
        let s: f64 = y.iter().sum();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|x| *x *= sign / ny);
        z = y;
        let mz = mat.matvec(&z)?;
        let free: Vec<f64> = mz
            .iter()
            .zip(mask)
            .map(|(x, &d)| if d { 0.0 } else { *x })
            .collect();
        let next = weighted_dot(&g, &z, &free) / weighted_dot(&g, &z, &z);
        delta = (next - lambda).abs();
        lambda = next;
        residual = relative_residual(m, lambda, &z)?;
        if polish.is_some() || (delta <= opts.tol * (1.0 + lambda.abs()) && residual <= 100.0 * opts.tol) {
            let left = polish.unwrap_or(POLISH_STEPS);
            if left > 0 && it < opts.max_iter {
                polish = Some(left - 1);
                continue;
            }
            let positive = (0..z.len()).all(|k| mask[k] || z[k] > 0.0);
            return Ok(Eigenvector {
                lambda,
                vector: ScalarField::new(g.clone(), z)?,
                residual,
                iterations: it,
                positive,
            });
        }
        if refine && refinements < 6 {
            if let Some(lo) = collatz_lower(&mz, &z, mask) {
                let gap = lambda - sigma;
                let margin = (0.05 * (lambda - lo)).max(1e-7 * (1.0 + lambda.abs()));
                let candidate = lo.min(lambda) - margin;
                if candidate > sigma && lambda - candidate <= 0.25 * gap {
                    if let Ok(next_lu) = factor(mat, candidate, mask) {
                        sigma = candidate;
                        lu = next_lu;
                        refinements += 1;
                    }
                }
            }
        }
    }
    Err(EigenError::NoConvergence {
        iterations: opts.max_iter,
        delta,
        residual,
    })
}

/// Scales `u` to `∫u² = 1`, then `v` to `∫uv = 1`.
pub fn normalize_pair(u: &ScalarField, v: &ScalarField) -> Result<(ScalarField, ScalarField), EigenError> {
    u.same_grid(v)?;
    let nu = inner(u, u).sqrt();
    let u = u.scale(1.0 / nu)?;
    let uv = inner(&u, v);
    if !(uv > 0.0) {
        return Err(EigenError::DegeneratePair(uv));
    }
    let v = v.scale(1.0 / uv)?;
    Ok((u, v))
}

/// Forward and adjoint principal eigenvectors with `∫u² = ∫uv = 1`.
pub fn principal_eigenpair(
    m: &OperatorMatrix,
    m_adj: &OperatorMatrix,
    opts: &EigenOptions,
) -> Result<EigenPair, EigenError> {
    if m.kind() != OperatorKind::Forward || m_adj.kind() != OperatorKind::Adjoint {
        return Err(EigenError::OperatorMismatch("expected a forward and an adjoint operator".into()));
    }
    if m.coeffs() != m_adj.coeffs() || m.bc() != m_adj.bc() || m.amplitude() != m_adj.amplitude() {
        return Err(EigenError::OperatorMismatch("operators built from different coefficients".into()));
    }
    let (fwd, adj) = rayon::join(|| principal_eigenvalue(m, opts), || principal_eigenvalue(m_adj, opts));
    let (fwd, adj) = (fwd?, adj?);
    if (fwd.lambda - adj.lambda).abs() > 10.0 * opts.tol * (1.0 + fwd.lambda.abs()) {
        return Err(EigenError::AdjointMismatch {
            forward: fwd.lambda,
            adjoint: adj.lambda,
        });
    }
    for (e, op) in [(&fwd, m), (&adj, m_adj)] {
        if !e.positive {
            return Err(EigenError::PositivityFailure {
                kind: op.kind(),
                peclet: op.peclet(),
            });
        }
    }
    let (u, v) = normalize_pair(&fwd.vector, &adj.vector)?;
    Ok(EigenPair {
        lambda: fwd.lambda,
        residual_u: relative_residual(m, fwd.lambda, u.values())?,
        residual_v: relative_residual(m_adj, fwd.lambda, v.values())?,
        u,
        v,
        iterations: fwd.iterations.max(adj.iterations),
        positivity_ok: true,
        peclet_warning: m.peclet_warning(),
    })
}

/// Larger of the forward and adjoint scaled residuals.
pub fn eigen_residual(m: &OperatorMatrix, m_adj: &OperatorMatrix, pair: &EigenPair) -> Result<f64, EigenError> {
    let ru = relative_residual(m, pair.lambda, pair.u.values())?;
    let rv = relative_residual(m_adj, pair.lambda, pair.v.values())?;
    Ok(ru.max(rv))
}
