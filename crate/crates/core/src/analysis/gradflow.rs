//! Gradient flows `V = ∇m`, checked against the symmetrized potential.

use serde_json::{json, Value};

use crate::eigen::principal_eigenvalue;
use crate::flows::{sample, FlowSpec};
use crate::mesh::{diff, grad, ScalarField, Stencil, VectorField};
use crate::operator::{assemble, CoefficientSet};
use crate::report::{Report, Table};
use crate::Error;

use super::{par_map, AnalysisError, Problem};

pub const GRADFLOW_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientFlowRow {
    pub amplitude: f64,
    pub lambda_direct: f64,
    pub lambda_variational: f64,
}

impl GradientFlowRow {
    pub fn relative_difference(&self) -> f64 {
        let d = (self.lambda_direct - self.lambda_variational).abs();
        let s = self.lambda_direct.abs().max(self.lambda_variational.abs());
        if d == 0.0 {
            0.0
        } else {
            d / s
        }
    }

    pub fn pass(&self) -> bool {
        let d = (self.lambda_direct - self.lambda_variational).abs();
        d <= GRADFLOW_TOL * self.lambda_direct.abs().max(self.lambda_variational.abs()) || d <= 1e-14
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientFlowReport {
    pub problem: String,
    pub potential: String,
    pub rows: Vec<GradientFlowRow>,
}

impl GradientFlowReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(GradientFlowRow::pass)
    }
}

impl Report for GradientFlowReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "m": self.potential,
            "tolerance": GRADFLOW_TOL,
            "rows": self.rows.iter().map(|r| json!({
                "A": r.amplitude,
                "lambda_direct": r.lambda_direct,
                "lambda_variational": r.lambda_variational,
                "relative_difference": r.relative_difference(),
                "pass": r.pass(),
            })).collect::<Vec<_>>(),
            "pass": self.pass(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(["A", "lambda_direct", "lambda_variational", "relative_difference"]);
        for r in &self.rows {
            t.push(vec![r.amplitude.into(), r.lambda_direct.into(), r.lambda_variational.into(), r.relative_difference().into()]);
        }
        Some(t)
    }
}

/// `A²/4 |∇m|² − (A/2) Δm + c`.
fn potential(grad_m: &VectorField, lap_m: &[f64], c: &ScalarField, amplitude: f64) -> Result<ScalarField, Error> {
    let g = c.grid();
    let vals = (0..g.len())
        .map(|k| {
            let d = grad_m.at(k);
            0.25 * amplitude * amplitude * (d[0] * d[0] + d[1] * d[1]) - 0.5 * amplitude * lap_m[k] + c.values()[k]
        })
        .collect();
    Ok(ScalarField::new(g.clone(), vals)?)
}

/// Principal eigenvalue of `−Δ + A∇m·∇ + c` next to that of the symmetric
/// operator `−Δ + A²/4|∇m|² − (A/2)Δm + c`.
pub fn gradient_flow_sweep(problem: &Problem, amplitudes: &[f64]) -> Result<GradientFlowReport, Error> {
    let FlowSpec::Gradient(m_expr) = &problem.spec.flow else {
        return Err(AnalysisError::Unsupported("flow is not a gradient flow".into()).into());
    };
    if problem.a().values().iter().any(|&a| a != 1.0) {
        return Err(AnalysisError::Unsupported("the symmetrized potential needs a ≡ 1".into()).into());
    }
    let g = problem.grid();
    let m = sample(m_expr, g)?;
    let grad_m = grad(&m);
    if !problem.bc().is_dirichlet() {
        let scale = 1.0 + grad_m.max_abs();
        let flux = g
            .boundary_nodes()
            .flat_map(|k| {
                let d = grad_m.at(k);
                g.tag(k).sides().map(move |s| {
                    let n = s.normal();
                    (d[0] * n[0] + d[1] * n[1]).abs()
                })
            })
            .fold(0.0, f64::max);
        if flux > 1e-4 * scale {
            return Err(AnalysisError::Unsupported("the symmetrized potential needs ∂m/∂n = 0 unless b = 1".into()).into());
        }
    }
    let mut lap = vec![0.0; g.len()];
    for &ax in g.axes() {
        let d2 = diff(g, grad_m.component(ax), ax, Stencil::SecondOrder);
        for (l, d) in lap.iter_mut().zip(d2) {
            *l += d;
        }
    }
    let zero = VectorField::zeros(g.clone());
    let rows = par_map(amplitudes, |&amp| -> Result<GradientFlowRow, Error> {
        let direct = problem.eigenvalue(amp)?.lambda;
        let q = potential(&grad_m, &lap, problem.c(), amp)?;
        let co = CoefficientSet::new(problem.a().clone(), q, zero.clone(), 0.0)?;
        let sym = principal_eigenvalue(&assemble(&co, problem.bc())?, &problem.spec.eigen)?.lambda;
        Ok(GradientFlowRow {
            amplitude: amp,
            lambda_direct: direct,
            lambda_variational: sym,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(GradientFlowReport {
        problem: problem.spec.name.clone(),
        potential: m_expr.source().to_string(),
        rows,
    })
}
