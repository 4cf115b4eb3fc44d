//! The functional `J(ω) = ∫ u v (Lω/ω)` on the positive cone and the
//! identities built on it: the decomposition `J(u) = J(ω) + ∫ u v a|∇log(ω/u)|²`,
//! criticality of `J` at `u`, the derivative `λ′(A) = ∫ v V·∇u`, the
//! sensitivity system for `u′`, and the second derivative at `A = 0`.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eigen::EigenPair;
use crate::linalg::{LinalgError, SparseLu};
use crate::mesh::{
    boundary_integrate, grad, integrate, weighted_dot, Axis, Grid, MeshError, ScalarField,
};
use crate::operator::{admissible_field, BoundaryCondition, CoefficientSet, OperatorError, OperatorMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("not in the cone: {0}")]
    ConeViolation(String),
    #[error("sensitivity solve failed: {0}")]
    SensitivitySolveFailure(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A positive function together with how well it meets the boundary
/// condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeElement {
    omega: ScalarField,
    bc: BoundaryCondition,
    bc_residual: f64,
}

impl ConeElement {
    /// Checks positivity (strict at every node not carrying a Dirichlet
    /// row, zero on the boundary for Dirichlet) and records the residual of
    /// `bω + (1−b)(a∇ω)·n` relative to `max ω`.
    pub fn new(omega: ScalarField, bc: BoundaryCondition, a: &ScalarField) -> Result<Self, FunctionalError> {
        let g = omega.grid().clone();
        omega.same_grid(a)?;
        let w = omega.values();
        let scale = omega.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..g.len() {
            let on_dirichlet = bc.is_dirichlet() && g.is_boundary(k);
            if on_dirichlet {
                if w[k].abs() > 1e-12 * scale {
                    return Err(FunctionalError::ConeViolation(format!("ω = {} on the boundary", w[k])));
                }
            } else if !(w[k] > 0.0) {
                return Err(FunctionalError::ConeViolation(format!("ω = {} at node {k}", w[k])));
            }
        }
        let gw = grad(&omega);
        let b = bc.b();
        let mut residual = 0.0f64;
        for k in g.boundary_nodes() {
            let gk = gw.at(k);
            for side in g.tag(k).sides() {
                let n = side.normal();
                let flux = a.values()[k] * (gk[0] * n[0] + gk[1] * n[1]);
                let r = if bc.is_dirichlet() {
                    // inward slope must be positive
                    if flux >= 0.0 && !is_corner(&g, k) {
                        return Err(FunctionalError::ConeViolation(format!("outward slope {flux} at node {k}")));
                    }
                    w[k].abs()
                } else {
                    (b * w[k] + (1.0 - b) * flux).abs()
                };
                residual = residual.max(r / scale);
            }
        }
        Ok(Self {
            omega,
            bc,
            bc_residual: residual,
        })
    }

    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn bc_residual(&self) -> f64 {
        self.bc_residual
    }
}

fn is_corner(g: &Grid, k: usize) -> bool {
    g.tag(k).sides().count() > 1
}

/// `ω = u·e^{tφ}`.
pub fn perturb(u: &ScalarField, phi: &ScalarField, t: f64) -> Result<ScalarField, MeshError> {
    u.zip_map(phi, |a, p| a * (t * p).exp())
}

/// Random smooth direction for multiplicative cone perturbations, scaled
/// to `max|φ| = 1`. A cosine series has zero normal derivative, so `u·e^{tφ}` keeps the
/// boundary condition of `u`; any smooth `φ` would do for Dirichlet.
pub fn random_direction(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> ScalarField {
    let f = admissible_field(grid, BoundaryCondition::neumann(), rng, 3);
    let m = f.max_abs();
    f.scale(if m > 0.0 { 1.0 / m } else { 1.0 }).expect("finite scaling")
}

/// `J(ω) = ∫ u v (Mω)/ω`; Dirichlet boundary nodes contribute zero.
pub fn eval_j(omega: &ConeElement, pair: &EigenPair, m: &OperatorMatrix) -> Result<f64, FunctionalError> {
    let w = omega.omega.values();
    let mw = m.apply_values(w)?;
    let g = m.grid();
    let mask = m.dirichlet_mask();
    let (u, v) = (pair.u.values(), pair.v.values());
    Ok((0..g.len())
        .filter(|&k| !mask[k])
        .map(|k| g.weight(k) * u[k] * v[k] * mw[k] / w[k])
        .sum())
}

/// `log(num/den)` at every node; on Dirichlet boundary nodes, where both
/// vanish, the value is extrapolated quadratically from the interior.
pub fn log_ratio(num: &ScalarField, den: &ScalarField, mask: &[bool]) -> Result<ScalarField, MeshError> {
    num.same_grid(den)?;
    let g = num.grid().clone();
    let (a, b) = (num.values(), den.values());
    let mut r: Vec<f64> = (0..g.len()).map(|k| if mask[k] { 0.0 } else { (a[k] / b[k]).ln() }).collect();
    if mask.iter().any(|&d| d) {
        // x sides first (their neighbours along x are interior away from
        // corners), then whole bottom/top rows along y
        let passes: &[Axis] = if g.dim() == 2 { &[Axis::X, Axis::Y] } else { &[Axis::X] };
        for &ax in passes {
            let n = g.count(ax);
            for k in 0..g.len() {
                if !mask[k] {
                    continue;
                }
                let p = g.pos(k, ax);
                let corner_wait = ax == Axis::X && g.dim() == 2 && {
                    let q = g.pos(k, Axis::Y);
                    q == 0 || q + 1 == g.ny()
                };
                if corner_wait {
                    continue;
                }
                let dir = if p == 0 {
                    1
                } else if p + 1 == n {
                    -1
                } else {
                    continue;
                };
                let at = |s: isize| r[g.shift(k, ax, s * dir)];
                r[k] = 3.0 * at(1) - 3.0 * at(2) + at(3);
            }
        }
    }
    ScalarField::new(g, r)
}

/// `∫ u v a |∇r|²` with the second-order gradient.
fn weighted_gradient_energy(pair: &EigenPair, a: &ScalarField, r: &ScalarField) -> Result<f64, MeshError> {
    let gr = grad(r);
    let g = r.grid();
    let (u, v, av) = (pair.u.values(), pair.v.values(), a.values());
    let vals = (0..g.len())
        .map(|k| {
            let d = gr.at(k);
            u[k] * v[k] * av[k] * (d[0] * d[0] + d[1] * d[1])
        })
        .collect();
    Ok(integrate(&ScalarField::new(g.clone(), vals)?))
}

/// `|J(u) − J(ω) − ∫ u v a|∇log(ω/u)|²| / (1 + |J(u)|)`.
pub fn lemma2_residual(omega: &ConeElement, pair: &EigenPair, m: &OperatorMatrix) -> Result<f64, FunctionalError> {
    let u_elem = ConeElement {
        omega: pair.u.clone(),
        bc: omega.bc,
        bc_residual: 0.0,
    };
    let ju = eval_j(&u_elem, pair, m)?;
    let jw = eval_j(omega, pair, m)?;
    let r = log_ratio(&omega.omega, &pair.u, m.dirichlet_mask())?;
    let energy = weighted_gradient_energy(pair, m.coeffs().a(), &r)?;
    Ok((ju - jw - energy).abs() / (1.0 + ju.abs()))
}

/// `|∫ v L u − ∫ u L v − ∫ u v a|∇log(v/u)|²| / (1 + |λ|)`, with `L` the
/// forward operator in both integrals.
pub fn corollary_residual(pair: &EigenPair, m: &OperatorMatrix) -> Result<f64, FunctionalError> {
    let g = m.grid();
    let (u, v) = (pair.u.values(), pair.v.values());
    let lu = m.apply_values(u)?;
    let lv = m.apply_values(v)?;
    let lhs = weighted_dot(g, v, &lu) - weighted_dot(g, u, &lv);
    let r = log_ratio(&pair.v, &pair.u, m.dirichlet_mask())?;
    let energy = weighted_gradient_energy(pair, m.coeffs().a(), &r)?;
    Ok((lhs - energy).abs() / (1.0 + pair.lambda.abs()))
}

/// `λ′(A) = ∫ v V·∇u`, with the operator's own discrete advection.
pub fn derivative_by_formula(pair: &EigenPair, m: &OperatorMatrix) -> Result<f64, FunctionalError> {
    let tu = m.advection().matvec(pair.u.values())?;
    Ok(weighted_dot(m.grid(), pair.v.values(), &tu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityField {
    pub u_prime: ScalarField,
    /// `∫ u′ u`.
    pub orthogonality: f64,
    /// Relative residual of `(M − λ)u′ = λ′u − V·∇u`.
    pub residual: f64,
    /// Component of the residual along `u`; zero when `λ′` meets the
    /// solvability condition.
    pub multiplier: f64,
}

/// Solves `(M − λ)u′ = λ′u − V·∇u`, `∫ u′u = 0`. The singular system is
/// made regular by pinning `u′` to zero at the node where `uv` peaks, which
/// drops that node's equation; the kernel component is then projected out.
pub fn solve_sensitivity(pair: &EigenPair, m: &OperatorMatrix, lambda_prime: f64) -> Result<SensitivityField, FunctionalError> {
    let g = m.grid().clone();
    let n = g.len();
    let (u, v) = (pair.u.values(), pair.v.values());
    let mask = m.dirichlet_mask();
    let tu = m.advection().matvec(u)?;
    let rhs: Vec<f64> = (0..n).map(|k| lambda_prime * u[k] - tu[k]).collect();
    let pin = (0..n)
        .filter(|&k| !mask[k])
        .max_by(|&i, &j| (u[i] * v[i]).total_cmp(&(u[j] * v[j])))
        .ok_or_else(|| FunctionalError::SensitivitySolveFailure("no free nodes".into()))?;
    let lu = SparseLu::factor_pinned(m.matrix(), pair.lambda, mask, pin)
        .map_err(|e| FunctionalError::SensitivitySolveFailure(e.to_string()))?;
    let mut pinned = rhs.clone();
    pinned[pin] = 0.0;
    let mut x = lu
        .solve(&pinned)
        .map_err(|e| FunctionalError::SensitivitySolveFailure(e.to_string()))?;
    let shift = weighted_dot(&g, &x, u) / weighted_dot(&g, u, u);
    for (xk, uk) in x.iter_mut().zip(u) {
        *xk -= shift * uk;
    }
    let mx = m.apply_values(&x)?;
    let res: Vec<f64> = (0..n)
        .map(|k| {
            let shifted = if mask[k] { mx[k] } else { mx[k] - pair.lambda * x[k] };
            rhs[k] - shifted
        })
        .collect();
    let multiplier = weighted_dot(&g, v, &res) / weighted_dot(&g, v, u);
    let res: Vec<f64> = (0..n).map(|k| res[k] - multiplier * u[k]).collect();
    let scale = (m.matrix().norm_inf() + pair.lambda.abs()) * weighted_dot(&g, &x, &x).sqrt()
        + weighted_dot(&g, &rhs, &rhs).sqrt();
    let residual = if scale > 0.0 { weighted_dot(&g, &res, &res).sqrt() / scale } else { 0.0 };
    let orthogonality = weighted_dot(&g, &x, u);
    Ok(SensitivityField {
        u_prime: ScalarField::new(g, x)?,
        orthogonality,
        residual,
        multiplier,
    })
}

/// `2[κ∮u′² + ∫a|∇u′|² + ∫c u′² − λ∫u′²]` at `A = 0`; the boundary term is
/// dropped for Dirichlet.
pub fn second_derivative_at_zero(
    pair0: &EigenPair,
    sens0: &SensitivityField,
    coeffs: &CoefficientSet,
    bc: BoundaryCondition,
) -> Result<f64, FunctionalError> {
    let up = &sens0.u_prime;
    let sq = up.map(|x| x * x)?;
    let boundary = match bc.kappa() {
        Some(k) => k * boundary_integrate(&sq),
        None => 0.0,
    };
    let gu = grad(up);
    let g = up.grid();
    let a = coeffs.a().values();
    let grad_sq = ScalarField::new(
        g.clone(),
        (0..g.len())
            .map(|k| {
                let d = gu.at(k);
                a[k] * (d[0] * d[0] + d[1] * d[1])
            })
            .collect(),
    )?;
    let csq = sq.zip_map(coeffs.c(), |s, c| s * c)?;
    Ok(2.0 * (boundary + integrate(&grad_sq) + integrate(&csq) - pair0.lambda * integrate(&sq)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{principal_eigenpair, EigenOptions};
    use crate::flows::{realize, FlowSpec};
    use crate::mesh::{build_grid, GridSpec, VectorField};
    use crate::operator::{assemble, assemble_adjoint};
    use rand::SeedableRng;

    struct Problem {
        m: OperatorMatrix,
        pair: EigenPair,
    }

    fn solve(co: &CoefficientSet, bc: BoundaryCondition) -> Problem {
        let m = assemble(co, bc).unwrap();
        let pair = principal_eigenpair(&m, &assemble_adjoint(co, bc).unwrap(), &EigenOptions::default()).unwrap();
        Problem { m, pair }
    }

    fn drift(n: usize, amp: f64) -> CoefficientSet {
        let g = build_grid(&GridSpec::interval(0.0, 1.0, n)).unwrap();
        CoefficientSet::new(
            ScalarField::constant(g.clone(), 1.0),
            ScalarField::constant(g.clone(), 0.0),
            VectorField::new(g.clone(), vec![vec![1.0; n]]).unwrap(),
            amp,
        )
        .unwrap()
    }

    fn cellular(n: usize, c: &str, amp: f64) -> CoefficientSet {
        let g = build_grid(&GridSpec::unit_square(n)).unwrap();
        let v = realize(&FlowSpec::stream("sin(pi*x)*sin(pi*y)").unwrap(), &g).unwrap();
        let c = crate::flows::sample(&c.parse().unwrap(), &g).unwrap();
        CoefficientSet::new(ScalarField::constant(g, 1.0), c, v, amp).unwrap()
    }

    fn cone(p: &Problem, w: ScalarField) -> ConeElement {
        ConeElement::new(w, p.m.bc(), p.m.coeffs().a()).unwrap()
    }

    #[test]
    fn j_at_eigenfunction_is_lambda() {
        let p = solve(&cellular(17, "cos(pi*x)", 2.0), BoundaryCondition::neumann());
        let ju = eval_j(&cone(&p, p.pair.u.clone()), &p.pair, &p.m).unwrap();
        assert!((ju - p.pair.lambda).abs() < 1e-7);
        let scaled = eval_j(&cone(&p, p.pair.u.scale(3.7).unwrap()), &p.pair, &p.m).unwrap();
        assert!((scaled - ju).abs() < 1e-12);
        assert!(lemma2_residual(&cone(&p, p.pair.u.scale(2.0).unwrap()), &p.pair, &p.m).unwrap() < 1e-12);
    }

    #[test]
    fn maximality() {
        let p = solve(&cellular(17, "cos(pi*x)", 3.0), BoundaryCondition::new(0.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ju = p.pair.lambda;
        for _ in 0..20 {
            let phi = random_direction(p.m.grid(), &mut rng);
            let w = perturb(&p.pair.u, &phi, 0.4).unwrap();
            let j = eval_j(&cone(&p, w), &p.pair, &p.m).unwrap();
            assert!(j <= ju + 1e-7, "{j} > {ju}");
        }
    }

    #[test]
    fn dirichlet_cone_and_log_ratio() {
        let p = solve(&drift(65, 2.0), BoundaryCondition::dirichlet());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_direction(p.m.grid(), &mut rng);
        let w = perturb(&p.pair.u, &phi, 0.2).unwrap();
        let r = log_ratio(&w, &p.pair.u, p.m.dirichlet_mask()).unwrap();
        // interior values equal tφ exactly; the boundary value is extrapolated
        assert!((r.values()[10] - 0.2 * phi.values()[10]).abs() < 1e-12);
        assert!((r.values()[0] - 0.2 * phi.values()[0]).abs() < 1e-3);
        let bad = p.pair.u.map(|x| x - 1e-3).unwrap();
        assert!(ConeElement::new(bad, p.m.bc(), p.m.coeffs().a()).is_err());
    }

    #[test]
    fn derivative_and_sensitivity_vanish_without_forcing() {
        let p = solve(&cellular(17, "0", 4.0), BoundaryCondition::neumann());
        let d = derivative_by_formula(&p.pair, &p.m).unwrap();
        assert!(d.abs() < 1e-9);
        let s = solve_sensitivity(&p.pair, &p.m, d).unwrap();
        assert!(s.u_prime.max_abs() < 1e-8);
        let co = cellular(17, "0", 0.0);
        let f = second_derivative_at_zero(&p.pair, &s, &co, BoundaryCondition::neumann()).unwrap();
        assert!(f.abs() < 1e-8);
    }

    #[test]
    fn sensitivity_matches_difference_quotient() {
        let amp = 2.0;
        let delta = 1e-3;
        let bc = BoundaryCondition::dirichlet();
        let p = solve(&drift(129, amp), bc);
        let d = derivative_by_formula(&p.pair, &p.m).unwrap();
        // λ = π² + A²/4 in the continuum
        assert!((d - amp / 2.0).abs() < 1e-3, "{d}");
        let s = solve_sensitivity(&p.pair, &p.m, d).unwrap();
        assert!(s.orthogonality.abs() < 1e-9);
        assert!(s.residual < 1e-8);
        assert!(s.multiplier.abs() < 1e-8);
        let up = solve(&drift(129, amp + delta), bc);
        let dn = solve(&drift(129, amp - delta), bc);
        for k in 0..129 {
            let fd = (up.pair.u.values()[k] - dn.pair.u.values()[k]) / (2.0 * delta);
            assert!((fd - s.u_prime.values()[k]).abs() < 1e-4, "{k}: {fd} {}", s.u_prime.values()[k]);
        }
    }

    #[test]
    fn corollary_holds_on_drift() {
        let p = solve(&drift(257, 2.0), BoundaryCondition::dirichlet());
        let r = corollary_residual(&p.pair, &p.m).unwrap();
        assert!(r < 1e-4, "{r}");
        let sym = solve(&drift(65, 0.0), BoundaryCondition::dirichlet());
        assert!(corollary_residual(&sym.pair, &sym.m).unwrap() < 1e-10);
    }
}
