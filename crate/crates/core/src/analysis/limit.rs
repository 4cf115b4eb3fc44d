//! Large-amplitude behaviour for Robin and Neumann problems.

use serde_json::{json, Value};

use crate::report::{Report, Table};
use crate::Error;

use super::bound::{first_integral_bound, FirstIntegralFamily};
use super::sweep::{sweep, TOL_MONO};
use super::{AnalysisError, Problem};

/// Slack allowed when comparing `λ(A)` with the first-integral bound.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub problem: String,
    pub amplitudes: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub bound: f64,
    pub degree: usize,
    pub tol_limit: f64,
    pub errors: Vec<String>,
}

impl LimitReport {
    pub fn increments(&self) -> Vec<f64> {
        self.lambdas.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn limit_estimate(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(f64::NAN)
    }

    /// Last two increments both below `tol_limit`.
    pub fn cauchy(&self) -> bool {
        let inc = self.increments();
        inc.len() >= 2 && inc[inc.len() - 2..].iter().all(|d| d.abs() <= self.tol_limit)
    }

    pub fn monotone(&self) -> bool {
        self.increments().iter().all(|&d| d >= -TOL_MONO)
    }

    pub fn bounded(&self) -> bool {
        self.lambdas.iter().all(|&l| l <= self.bound + BOUND_SLACK)
    }

    /// Reported only: the distance from the last value to the bound.
    pub fn gap(&self) -> f64 {
        self.bound - self.limit_estimate()
    }

    pub fn pass(&self) -> bool {
        self.errors.is_empty() && self.monotone() && self.bounded()
    }
}

impl Report for LimitReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "A": self.amplitudes,
            "lambda": self.lambdas,
            "increments": self.increments(),
            "first_integral_bound": self.bound,
            "degree": self.degree,
            "limit_estimate": self.limit_estimate(),
            "gap": self.gap(),
            "cauchy": self.cauchy(),
            "tol_limit": self.tol_limit,
            "monotone": self.monotone(),
            "bounded": self.bounded(),
            "errors": self.errors,
            "pass": self.pass(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(["A", "lambda", "bound_minus_lambda"]);
        for (a, l) in self.amplitudes.iter().zip(&self.lambdas) {
            t.push(vec![(*a).into(), (*l).into(), (self.bound - l).into()]);
        }
        Some(t)
    }
}

/// Eigenvalues along `schedule`, checked for monotonicity and against the
/// first-integral bound of the given degree.
pub fn limit_probe(problem: &Problem, schedule: &[f64], degree: usize, tol_limit: f64) -> Result<LimitReport, Error> {
    if problem.bc().is_dirichlet() {
        return Err(AnalysisError::Unsupported("the limit probe needs b < 1".into()).into());
    }
    if !problem.compliance().compliant {
        return Err(AnalysisError::Unsupported("flow is not compliant; use the counterexample probe".into()).into());
    }
    let family = FirstIntegralFamily::polynomial(problem, degree)?;
    let bound = first_integral_bound(problem, &family)?;
    let report = sweep(problem, schedule, None)?;
    Ok(LimitReport {
        problem: problem.spec.name.clone(),
        amplitudes: schedule.to_vec(),
        lambdas: report.lambdas(),
        bound,
        degree,
        tol_limit,
        errors: report.rows.iter().filter_map(|r| r.error.clone()).collect(),
    })
}
