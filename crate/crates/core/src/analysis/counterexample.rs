//! A one-dimensional flow crossing the boundary, where monotonicity fails.

use serde_json::{json, Value};

use crate::operator::adjoint_consistency_check;
use crate::report::{Report, Table};
use crate::Error;

use super::{par_map, AnalysisError, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub problem: String,
    pub amplitudes: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `c` at the endpoint the flow leaves from.
    pub limit: f64,
    pub delta: f64,
    pub normal_flux: f64,
    pub adjoint_residual: f64,
}

impl CounterexampleReport {
    pub fn lambda0(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambdas.last().expect("nonempty schedule")
    }

    pub fn decreased(&self) -> bool {
        self.lambda_max() < self.lambda0()
    }

    pub fn near_limit(&self) -> bool {
        (self.lambda_max() - self.limit).abs() <= self.delta
    }

    pub fn compliant(&self) -> bool {
        self.normal_flux <= 1e-10
    }

    pub fn pass(&self) -> bool {
        self.decreased() && self.near_limit() && !self.compliant()
    }
}

impl Report for CounterexampleReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "A": self.amplitudes,
            "lambda": self.lambdas,
            "limit_c": self.limit,
            "delta": self.delta,
            "decreased": self.decreased(),
            "near_limit": self.near_limit(),
            "normal_flux_residual": self.normal_flux,
            "compliant": self.compliant(),
            "label": "counterexample-regime",
            "adjoint_consistency_residual": self.adjoint_residual,
            "pass": self.pass(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(["A", "lambda"]);
        for (a, l) in self.amplitudes.iter().zip(&self.lambdas) {
            t.push(vec![(*a).into(), (*l).into()]);
        }
        Some(t)
    }
}

/// Forward-only eigenvalues along `amplitudes` for a 1D problem with a
/// constant flow through the endpoints.
pub fn counterexample_probe(problem: &Problem, amplitudes: &[f64], delta: f64) -> Result<CounterexampleReport, Error> {
    let g = problem.grid();
    if g.dim() != 1 || problem.bc().is_dirichlet() {
        return Err(AnalysisError::Unsupported("the counterexample probe is one-dimensional with b < 1".into()).into());
    }
    let a_max = amplitudes.iter().copied().fold(0.0, f64::max);
    if a_max > 0.0 && g.h() > 1.0 / (4.0 * a_max) {
        return Err(AnalysisError::UnresolvedLayer { h: g.h(), amplitude: a_max }.into());
    }
    let v = problem.velocity().component(crate::mesh::Axis::X);
    let mean_v = v.iter().sum::<f64>() / v.len() as f64;
    let c = problem.c().values();
    let limit = if mean_v >= 0.0 { c[0] } else { c[c.len() - 1] };
    let lambdas = par_map(amplitudes, |&a| problem.eigenvalue(a).map(|e| e.lambda))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let compliance = problem.compliance();
    let adjoint_residual = adjoint_consistency_check(&problem.coefficients(a_max.max(1.0))?, problem.bc())?;
    Ok(CounterexampleReport {
        problem: problem.spec.name.clone(),
        amplitudes: amplitudes.to_vec(),
        lambdas,
        limit,
        delta,
        normal_flux: compliance.normal_flux,
        adjoint_residual,
    })
}
