//! Finite-difference assembly of `L_A = −div(a∇) + A V·∇ + c` and its
//! adjoint on a vertex-centred grid.
//!
//! The matrix is stored as `K + A·T` where `K` carries diffusion, reaction
//! and the boundary rows, and `T` is the discrete advection `V·∇` in split
//! (skew) form built on the summation-by-parts stencil:
//!
//! ```text
//! T f = ½ [ V·D f + D·(V f) − f D·V ]
//! ```
//!
//! `T` annihilates constants, and it is exactly skew in the quadrature inner
//! product whenever the discrete divergence of `V` vanishes and `V·n = 0` at
//! boundary nodes.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError};
use crate::mesh::{weighted_dot, Grid, MeshError, ScalarField, Stencil, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("diffusion coefficient must be positive, min a = {0}")]
    EllipticityViolated(f64),
    #[error("boundary parameter b = {0} is outside [0, 1]")]
    BadBoundary(f64),
    #[error("amplitude A = {0} must be finite and nonnegative")]
    BadAmplitude(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `b u + (1−b)(a∇u)·n = 0` on the whole boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    b: f64,
}

impl BoundaryCondition {
    pub fn new(b: f64) -> Result<Self, OperatorError> {
        if !(0.0..=1.0).contains(&b) {
            return Err(OperatorError::BadBoundary(b));
        }
        Ok(Self { b })
    }

    pub fn dirichlet() -> Self {
        Self { b: 1.0 }
    }

    pub fn neumann() -> Self {
        Self { b: 0.0 }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_dirichlet(&self) -> bool {
        self.b == 1.0
    }

    /// Robin coefficient `κ = b/(1−b)`; `None` for Dirichlet.
    pub fn kappa(&self) -> Option<f64> {
        (!self.is_dirichlet()).then(|| self.b / (1.0 - self.b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    a: ScalarField,
    c: ScalarField,
    v: VectorField,
    amplitude: f64,
}

impl CoefficientSet {
    pub fn new(a: ScalarField, c: ScalarField, v: VectorField, amplitude: f64) -> Result<Self, OperatorError> {
        a.same_grid(&c)?;
        if !Arc::ptr_eq(a.grid(), v.grid()) && **a.grid() != **v.grid() {
            return Err(MeshError::GridMismatch.into());
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(OperatorError::BadAmplitude(amplitude));
        }
        let amin = a.min();
        if amin <= 0.0 {
            return Err(OperatorError::EllipticityViolated(amin));
        }
        Ok(Self { a, c, v, amplitude })
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self, OperatorError> {
        Self::new(self.a.clone(), self.c.clone(), self.v.clone(), amplitude)
    }

    /// Same coefficients with the flow reversed.
    pub fn with_reversed_flow(&self) -> Self {
        Self {
            v: self.v.negated(),
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.a.grid()
    }

    pub fn a(&self) -> &ScalarField {
        &self.a
    }

    pub fn c(&self) -> &ScalarField {
        &self.c
    }

    pub fn v(&self) -> &VectorField {
        &self.v
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Grid Péclet number `max|A V| h / (2 min a)`.
    pub fn peclet(&self) -> f64 {
        self.amplitude * self.v.max_norm() * self.grid().h() / (2.0 * self.a.min())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Forward,
    Adjoint,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    kind: OperatorKind,
    coeffs: CoefficientSet,
    bc: BoundaryCondition,
    base: CsrMatrix,
    advection: CsrMatrix,
    matrix: CsrMatrix,
    amplitude: f64,
    dirichlet: Vec<bool>,
}

impl OperatorMatrix {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.coeffs.grid()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Diffusion, reaction and boundary rows (the `A = 0` operator).
    pub fn base(&self) -> &CsrMatrix {
        &self.base
    }

    /// Discrete `±V·∇` (sign follows the kind), zero on Dirichlet rows.
    pub fn advection(&self) -> &CsrMatrix {
        &self.advection
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn peclet(&self) -> f64 {
        self.amplitude * self.coeffs.v.max_norm() * self.grid().h() / (2.0 * self.coeffs.a.min())
    }

    pub fn peclet_warning(&self) -> bool {
        self.peclet() > 1.0
    }

    pub fn len(&self) -> usize {
        self.matrix.n()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n() == 0
    }

    pub fn apply_values(&self, f: &[f64]) -> Result<Vec<f64>, OperatorError> {
        Ok(self.matrix.matvec(f)?)
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField, OperatorError> {
        if **f.grid() != **self.grid() {
            return Err(OperatorError::DimensionMismatch("field lives on another grid".into()));
        }
        Ok(ScalarField::new(f.grid().clone(), self.apply_values(f.values())?)?)
    }

    /// `B·L_A + (1−B)·L_0`, which coincides with the operator at amplitude `A·B`.
    pub fn blend(&self, weight: f64) -> Result<OperatorMatrix, OperatorError> {
        let matrix = self.matrix.lin_comb(weight, &self.base, 1.0 - weight)?;
        Ok(OperatorMatrix {
            matrix,
            amplitude: self.amplitude * weight,
            ..self.clone()
        })
    }

    pub fn write_matrix_market(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.matrix.write_matrix_market(&mut out)?;
        out.flush()
    }
}

/// Diffusion, reaction and boundary rows.
fn assemble_base(coeffs: &CoefficientSet, bc: BoundaryCondition) -> CsrMatrix {
    let g = coeffs.grid();
    let a = coeffs.a.values();
    let c = coeffs.c.values();
    let kappa = bc.kappa();
    let rows = (0..g.len())
        .map(|k| {
            let mut row = vec![(k, 0.0)];
            let dirichlet_row = bc.is_dirichlet() && g.is_boundary(k);
            for &ax in g.axes() {
                let n = g.count(ax);
                let h = g.spacing(ax);
                let p = g.pos(k, ax);
                for step in [-1isize, 1] {
                    let q = p as isize + step;
                    if q < 0 || q as usize >= n {
                        continue;
                    }
                    let l = g.shift(k, ax, step);
                    if dirichlet_row {
                        row.push((l, 0.0));
                        continue;
                    }
                    // half-cell rows carry twice the interior weight
                    let s = if p == 0 || p + 1 == n { 2.0 } else { 1.0 };
                    let am = 0.5 * (a[k] + a[l]);
                    row.push((l, -s * am / (h * h)));
                    row.push((k, s * am / (h * h)));
                }
                if !dirichlet_row && (p == 0 || p + 1 == n) {
                    if let Some(kap) = kappa {
                        row.push((k, 2.0 * kap / h));
                    }
                }
            }
            if dirichlet_row {
                row.push((k, 1.0));
            } else {
                row.push((k, c[k]));
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Split-form advection `V·∇` with the given sign on `V`.
fn assemble_advection(coeffs: &CoefficientSet, bc: BoundaryCondition, sign: f64) -> CsrMatrix {
    let g = coeffs.grid();
    let rows = (0..g.len())
        .map(|k| {
            let mut row = vec![(k, 0.0)];
            let skip = bc.is_dirichlet() && g.is_boundary(k);
            for &ax in g.axes() {
                let v = coeffs.v.component(ax);
                let n = g.count(ax);
                let p = g.pos(k, ax);
                for step in [-1isize, 1] {
                    let q = p as isize + step;
                    if q >= 0 && (q as usize) < n {
                        row.push((g.shift(k, ax, step), 0.0));
                    }
                }
                if skip {
                    continue;
                }
                for (off, w) in Stencil::Sbp.coefficients(p, n, g.spacing(ax)) {
                    let l = g.shift(k, ax, off);
                    row.push((l, sign * 0.5 * w * (v[k] + v[l])));
                    row.push((k, -sign * 0.5 * w * v[l]));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

fn build(coeffs: &CoefficientSet, bc: BoundaryCondition, kind: OperatorKind) -> Result<OperatorMatrix, OperatorError> {
    let amin = coeffs.a.min();
    if amin <= 0.0 {
        return Err(OperatorError::EllipticityViolated(amin));
    }
    let sign = match kind {
        OperatorKind::Forward => 1.0,
        OperatorKind::Adjoint => -1.0,
    };
    let base = assemble_base(coeffs, bc);
    let advection = assemble_advection(coeffs, bc, sign);
    let matrix = base.lin_comb(1.0, &advection, coeffs.amplitude)?;
    let g = coeffs.grid();
    let dirichlet = (0..g.len()).map(|k| bc.is_dirichlet() && g.is_boundary(k)).collect();
    Ok(OperatorMatrix {
        kind,
        coeffs: coeffs.clone(),
        bc,
        base,
        advection,
        matrix,
        amplitude: coeffs.amplitude,
        dirichlet,
    })
}

pub fn assemble(coeffs: &CoefficientSet, bc: BoundaryCondition) -> Result<OperatorMatrix, OperatorError> {
    build(coeffs, bc, OperatorKind::Forward)
}

/// `L*_A`: the same assembly with `V` replaced by `−V`.
pub fn assemble_adjoint(coeffs: &CoefficientSet, bc: BoundaryCondition) -> Result<OperatorMatrix, OperatorError> {
    build(coeffs, bc, OperatorKind::Adjoint)
}

/// Smooth random field compatible with the boundary condition: a cosine
/// series (zero normal derivative) for `b < 1`, a sine series vanishing on
/// the boundary for Dirichlet. Coefficients decay like `1/(1+k+l)²`.
pub fn admissible_field(grid: &Arc<Grid>, bc: BoundaryCondition, rng: &mut ChaCha8Rng, modes: usize) -> ScalarField {
    let (x0, x1) = grid.x_extent();
    let (y0, y1) = grid.y_extent().unwrap_or((0.0, 1.0));
    let ly = if grid.dim() == 2 { modes } else { 1 };
    let mut coef = Vec::new();
    for kx in 0..modes {
        for ky in 0..ly {
            let decay = 1.0 / ((1 + kx + ky) as f64).powi(2);
            coef.push((kx, ky, rng.random_range(-1.0..1.0) * decay));
        }
    }
    let dirichlet = bc.is_dirichlet();
    let pi = std::f64::consts::PI;
    let values = (0..grid.len())
        .map(|k| {
            if dirichlet && grid.is_boundary(k) {
                return 0.0;
            }
            let (x, y) = grid.coord(k);
            let xi = (x - x0) / (x1 - x0);
            let eta = (y.unwrap_or(0.0) - y0) / (y1 - y0);
            coef.iter()
                .map(|&(kx, ky, c)| {
                    if dirichlet {
                        let fy = if grid.dim() == 2 { ((ky + 1) as f64 * pi * eta).sin() } else { 1.0 };
                        c * ((kx + 1) as f64 * pi * xi).sin() * fy
                    } else {
                        c * (kx as f64 * pi * xi).cos() * (ky as f64 * pi * eta).cos()
                    }
                })
                .sum()
        })
        .collect();
    ScalarField::new(grid.clone(), values).expect("finite trigonometric sums")
}

/// Max over ten random admissible pairs of
/// `|⟨L f, g⟩ − ⟨f, L* g⟩| / (‖f‖‖g‖(1 + A‖V‖∞))`, quadrature inner products.
pub fn adjoint_consistency_check(coeffs: &CoefficientSet, bc: BoundaryCondition) -> Result<f64, OperatorError> {
    let fwd = assemble(coeffs, bc)?;
    let adj = assemble_adjoint(coeffs, bc)?;
    let g = coeffs.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let scale_flow = 1.0 + coeffs.amplitude * coeffs.v.max_norm();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let f = admissible_field(g, bc, &mut rng, 4);
        let h = admissible_field(g, bc, &mut rng, 4);
        let lf = fwd.apply_values(f.values())?;
        let lh = adj.apply_values(h.values())?;
        let lhs = weighted_dot(g, &lf, h.values());
        let rhs = weighted_dot(g, f.values(), &lh);
        let norm = (weighted_dot(g, f.values(), f.values()) * weighted_dot(g, h.values(), h.values())).sqrt();
        worst = worst.max((lhs - rhs).abs() / (norm * scale_flow));
    }
    Ok(worst)
}

/// Coefficient set from expressions sampled on a grid.
pub fn sample_coefficients(
    grid: &Arc<Grid>,
    a: &crate::expr::Expr,
    c: &crate::expr::Expr,
    v: VectorField,
    amplitude: f64,
) -> Result<CoefficientSet, crate::Error> {
    let a = crate::flows::sample(a, grid)?;
    let c = crate::flows::sample(c, grid)?;
    Ok(CoefficientSet::new(a, c, v, amplitude)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{realize, FlowSpec};
    use crate::mesh::{build_grid, GridSpec};
    use std::f64::consts::PI;

    fn line(n: usize) -> Arc<Grid> {
        build_grid(&GridSpec::interval(0.0, 1.0, n)).unwrap()
    }

    fn coeffs_1d(g: &Arc<Grid>, c: impl Fn(f64) -> f64, v: f64, amp: f64) -> CoefficientSet {
        let a = ScalarField::constant(g.clone(), 1.0);
        let c = ScalarField::from_fn(g.clone(), |x, _| c(x)).unwrap();
        let v = VectorField::new(g.clone(), vec![vec![v; g.len()]]).unwrap();
        CoefficientSet::new(a, c, v, amp).unwrap()
    }

    fn cellular(n: usize, c: &str, amp: f64) -> CoefficientSet {
        let g = build_grid(&GridSpec::unit_square(n)).unwrap();
        let v = realize(&FlowSpec::stream("sin(pi*x)*sin(pi*y)").unwrap(), &g).unwrap();
        let c = crate::flows::sample(&c.parse().unwrap(), &g).unwrap();
        CoefficientSet::new(ScalarField::constant(g, 1.0), c, v, amp).unwrap()
    }

    #[test]
    fn laplacian_row() {
        let g = line(5);
        let m = assemble(&coeffs_1d(&g, |_| 0.0, 0.0, 0.0), BoundaryCondition::dirichlet()).unwrap();
        let mm = m.matrix();
        assert_eq!((mm.get(2, 1), mm.get(2, 2), mm.get(2, 3)), (-16.0, 32.0, -16.0));
        assert_eq!(mm.get(0, 0), 1.0);
        assert_eq!(mm.get(0, 1), 0.0);
    }

    #[test]
    fn robin_row() {
        let g = line(5);
        let m = assemble(&coeffs_1d(&g, |x| x + 3.0, 0.0, 0.0), BoundaryCondition::new(0.5).unwrap()).unwrap();
        let h = 0.25;
        let mm = m.matrix();
        assert!((mm.get(0, 1) + 2.0 / (h * h)).abs() < 1e-12);
        assert!((mm.get(0, 0) - (2.0 / (h * h) + 2.0 / h + 3.0)).abs() < 1e-12);
        assert!((mm.get(4, 4) - (2.0 / (h * h) + 2.0 / h + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn neumann_kernel_contains_constants() {
        let co = cellular(17, "0", 8.0);
        let m = assemble(&co, BoundaryCondition::neumann()).unwrap();
        let r = m.apply_values(&vec![1.0; m.len()]).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn adjoint_is_flipped_flow() {
        let co = cellular(9, "cos(pi*x)", 3.0);
        let bc = BoundaryCondition::new(0.3).unwrap();
        let adj = assemble_adjoint(&co, bc).unwrap();
        let flipped = assemble(&co.with_reversed_flow(), bc).unwrap();
        assert_eq!(adj.matrix(), flipped.matrix());
        let zero = co.with_amplitude(0.0).unwrap();
        assert_eq!(
            assemble(&zero, bc).unwrap().matrix(),
            assemble_adjoint(&zero, bc).unwrap().matrix()
        );
    }

    #[test]
    fn adjoint_is_weighted_transpose() {
        let co = cellular(17, "cos(pi*x)", 8.0);
        for bc in [BoundaryCondition::neumann(), BoundaryCondition::new(0.5).unwrap()] {
            let g = co.grid().clone();
            let w = g.weights();
            let f = assemble(&co, bc).unwrap();
            let a = assemble_adjoint(&co, bc).unwrap();
            let (fm, am) = (f.matrix(), a.matrix());
            for k in 0..g.len() {
                for (l, x) in fm.row(k) {
                    let t = am.get(l, k) * w[l] / w[k];
                    assert!((x - t).abs() < 1e-10 * (1.0 + x.abs()), "{k} {l}");
                }
            }
        }
    }

    #[test]
    fn consistency_residuals() {
        let g = line(65);
        let sym = coeffs_1d(&g, |x| x, 0.0, 0.0);
        assert!(adjoint_consistency_check(&sym, BoundaryCondition::neumann()).unwrap() <= 1e-12);
        let co = cellular(33, "cos(pi*x)", 8.0);
        assert!(adjoint_consistency_check(&co, BoundaryCondition::neumann()).unwrap() <= 1e-8);
        assert!(adjoint_consistency_check(&co, BoundaryCondition::dirichlet()).unwrap() <= 1e-8);
        let bad = coeffs_1d(&g, |x| x, 1.0, 1.0);
        let r = adjoint_consistency_check(&bad, BoundaryCondition::neumann()).unwrap();
        assert!(r > 1e-3, "{r}");
    }

    #[test]
    fn applies_to_eigenfunction() {
        let g = line(201);
        let m = assemble(&coeffs_1d(&g, |_| 0.0, 0.0, 0.0), BoundaryCondition::dirichlet()).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x, _| (PI * x).sin()).unwrap();
        let lu = m.apply(&u).unwrap();
        for k in 1..200 {
            assert!((lu.values()[k] - PI * PI * u.values()[k]).abs() < 1e-3);
        }
        let aff = ScalarField::from_fn(g.clone(), |x, _| 2.0 * x + 1.0).unwrap();
        let la = m.apply(&aff).unwrap();
        assert_eq!(la.values()[0], 1.0);
        assert!(la.values()[1..200].iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn blend_matches_scaled_amplitude() {
        let co = cellular(9, "cos(pi*x)", 4.0);
        let bc = BoundaryCondition::neumann();
        let b = assemble(&co, bc).unwrap().blend(0.25).unwrap();
        let direct = assemble(&co.with_amplitude(1.0).unwrap(), bc).unwrap();
        for k in 0..b.len() {
            for (l, x) in b.matrix().row(k) {
                assert!((x - direct.matrix().get(k, l)).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
        assert_eq!(b.amplitude(), 1.0);
    }

    #[test]
    fn guards() {
        let g = line(5);
        let a = ScalarField::from_fn(g.clone(), |x, _| x - 0.5).unwrap();
        let c = ScalarField::constant(g.clone(), 0.0);
        let v = VectorField::zeros(g.clone());
        assert!(matches!(
            CoefficientSet::new(a, c.clone(), v.clone(), 0.0),
            Err(OperatorError::EllipticityViolated(_))
        ));
        let one = ScalarField::constant(g.clone(), 1.0);
        assert!(CoefficientSet::new(one, c, v, -1.0).is_err());
        assert!(BoundaryCondition::new(1.5).is_err());
        let co = coeffs_1d(&line(5), |_| 0.0, 10.0, 1.0);
        let m = assemble(&co, BoundaryCondition::neumann()).unwrap();
        assert!(m.peclet_warning());
    }

    #[test]
    fn pattern_is_independent_of_amplitude() {
        let co = cellular(9, "0", 0.0);
        let bc = BoundaryCondition::new(0.2).unwrap();
        let m0 = assemble(&co, bc).unwrap();
        let m1 = assemble(&co.with_amplitude(5.0).unwrap(), bc).unwrap();
        assert_eq!(m0.matrix().nnz(), m1.matrix().nnz());
        assert!(m0.matrix().lin_comb(1.0, m1.matrix(), -1.0).is_ok());
    }
}
