//! The blended operator `B·L_A + (1 − B)·L_0` and the flow-reversal symmetry.

use serde_json::{json, Value};

use crate::eigen::principal_eigenvalue;
use crate::report::{Report, Table};
use crate::Error;

use super::{par_map, Problem};

pub const SCALING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub amplitude: f64,
    pub weight: f64,
    pub lambda_blend: f64,
    pub lambda_direct: f64,
    /// Largest entrywise difference between the two matrices.
    pub matrix_difference: f64,
}

impl ScalingRow {
    pub fn difference(&self) -> f64 {
        (self.lambda_blend - self.lambda_direct).abs()
    }

    pub fn pass(&self) -> bool {
        self.difference() <= SCALING_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symmetry {
    pub amplitude: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl Symmetry {
    pub fn pass(&self) -> bool {
        (self.lambda_plus - self.lambda_minus).abs() <= SCALING_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub problem: String,
    pub rows: Vec<ScalingRow>,
    pub symmetry: Option<Symmetry>,
}

impl ScalingReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(ScalingRow::pass) && self.symmetry.as_ref().is_none_or(Symmetry::pass)
    }
}

impl Report for ScalingReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "tolerance": SCALING_TOL,
            "rows": self.rows.iter().map(|r| json!({
                "A": r.amplitude,
                "B": r.weight,
                "lambda_blend": r.lambda_blend,
                "lambda_direct": r.lambda_direct,
                "difference": r.difference(),
                "matrix_difference": r.matrix_difference,
                "pass": r.pass(),
            })).collect::<Vec<_>>(),
            "symmetry": self.symmetry.as_ref().map(|s| json!({
                "A": s.amplitude,
                "lambda_plus": s.lambda_plus,
                "lambda_minus": s.lambda_minus,
                "difference": (s.lambda_plus - s.lambda_minus).abs(),
                "pass": s.pass(),
            })),
            "pass": self.pass(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(["A", "B", "lambda_blend", "lambda_direct", "difference"]);
        for r in &self.rows {
            t.push(vec![r.amplitude.into(), r.weight.into(), r.lambda_blend.into(), r.lambda_direct.into(), r.difference().into()]);
        }
        Some(t)
    }
}

/// Compares `λ(B·M_A + (1 − B)·M_0)` with `λ(M_{AB})` for each `(A, B)`.
pub fn scaling_identity(problem: &Problem, pairs: &[(f64, f64)]) -> Result<ScalingReport, Error> {
    let rows = par_map(pairs, |&(a, b)| -> Result<ScalingRow, Error> {
        let (m, _) = problem.operators(a)?;
        let blended = m.blend(b)?;
        let (direct, _) = problem.operators(a * b)?;
        let n = blended.len();
        let mut diff = 0.0f64;
        for i in 0..n {
            for (j, x) in blended.matrix().row(i) {
                diff = diff.max((x - direct.matrix().get(i, j)).abs());
            }
        }
        Ok(ScalingRow {
            amplitude: a,
            weight: b,
            lambda_blend: principal_eigenvalue(&blended, &problem.spec.eigen)?.lambda,
            lambda_direct: principal_eigenvalue(&direct, &problem.spec.eigen)?.lambda,
            matrix_difference: diff,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(ScalingReport {
        problem: problem.spec.name.clone(),
        rows,
        symmetry: None,
    })
}

/// `λ(A)` against `λ(−A)`.
pub fn symmetry_check(problem: &Problem, amplitude: f64) -> Result<Symmetry, Error> {
    let r = par_map(&[amplitude, -amplitude], |&a| problem.eigenvalue(a).map(|e| e.lambda));
    let mut it = r.into_iter();
    Ok(Symmetry {
        amplitude,
        lambda_plus: it.next().expect("two results")?,
        lambda_minus: it.next().expect("two results")?,
    })
}
