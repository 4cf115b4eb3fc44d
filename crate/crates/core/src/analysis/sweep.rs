//! Eigenvalue sweeps over the amplitude and their monotonicity class.

use serde_json::{json, Value};

use crate::eigen::EigenPair;
use crate::functional::derivative_by_formula;
use crate::operator::OperatorMatrix;
use crate::report::{Cell, Report, Table};
use crate::Error;

use super::{par_map, Compliance, Problem};

/// Flatness tolerance on `max_A |λ(A) − λ(0)|`.
pub const TOL_FLAT: f64 = 1e-7;
/// First-integral detection threshold on `‖V·∇u₀‖∞ / ‖u₀‖∞`.
pub const TOL_FI: f64 = 1e-8;
/// Allowed decrease between consecutive sweep points.
pub const TOL_MONO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub amplitude: f64,
    pub lambda: f64,
    pub derivative_formula: Option<f64>,
    pub derivative_difference: Option<f64>,
    pub residual: f64,
    pub positivity_ok: bool,
    pub peclet_warning: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(amplitude: f64, e: Error) -> Self {
        Self {
            amplitude,
            lambda: f64::NAN,
            derivative_formula: None,
            derivative_difference: None,
            residual: f64::NAN,
            positivity_ok: false,
            peclet_warning: false,
            error: Some(e.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    StrictlyIncreasing,
    Flat,
    NonMonotone,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::StrictlyIncreasing => "strictly-increasing",
            Classification::Flat => "flat",
            Classification::NonMonotone => "non-monotone",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutcome {
    pub observed: Classification,
    /// What the theory predicts; `None` when the flow is not compliant.
    pub expected: Option<Classification>,
    pub label: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub problem: String,
    pub nodes: usize,
    pub b: f64,
    pub rows: Vec<SweepRow>,
    pub indicator: f64,
    pub compliance: Compliance,
    pub outcome: ClassifyOutcome,
}

impl SweepReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn pass(&self) -> bool {
        self.outcome.pass && self.rows.iter().all(SweepRow::ok)
    }
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

impl Report for SweepReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "nodes": self.nodes,
            "b": self.b,
            "first_integral_indicator": self.indicator,
            "divergence_residual": self.compliance.divergence,
            "normal_flux_residual": self.compliance.normal_flux,
            "compliant": self.compliance.compliant,
            "classification": self.outcome.observed.as_str(),
            "expected": self.outcome.expected.map(Classification::as_str),
            "label": self.outcome.label,
            "pass": self.pass(),
            "rows": self.rows.iter().map(|r| json!({
                "A": r.amplitude,
                "lambda": r.lambda,
                "derivative_formula": opt(r.derivative_formula),
                "derivative_difference": opt(r.derivative_difference),
                "residual": r.residual,
                "positivity_ok": r.positivity_ok,
                "peclet_warning": r.peclet_warning,
                "error": r.error,
            })).collect::<Vec<_>>(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new([
            "A",
            "lambda",
            "derivative_formula",
            "derivative_difference",
            "residual",
            "positivity_ok",
            "peclet_warning",
        ]);
        let num = |x: Option<f64>| x.map_or(Cell::Text(String::new()), Cell::Num);
        for r in &self.rows {
            t.push(vec![
                r.amplitude.into(),
                r.lambda.into(),
                num(r.derivative_formula),
                num(r.derivative_difference),
                r.residual.into(),
                r.positivity_ok.into(),
                r.peclet_warning.into(),
            ]);
        }
        Some(t)
    }
}

/// `‖V·∇u₀‖∞ / ‖u₀‖∞` with the operator's discrete advection.
pub fn first_integral_indicator(pair0: &EigenPair, m0: &OperatorMatrix) -> Result<f64, Error> {
    let tu = m0.advection().matvec(pair0.u.values())?;
    let num = tu.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(num / pair0.u.max_abs())
}

/// Expected-shape classification of a computed curve.
pub fn classify(rows: &[SweepRow], indicator: f64, compliance: Compliance) -> ClassifyOutcome {
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let l0 = lambdas.first().copied().unwrap_or(f64::NAN);
    let spread = lambdas.iter().fold(0.0f64, |a, l| a.max((l - l0).abs()));
    let steps_ok = lambdas.windows(2).all(|w| w[1] - w[0] >= -TOL_MONO);
    let total = lambdas.last().copied().unwrap_or(l0) - l0;
    let observed = if spread <= TOL_FLAT {
        Classification::Flat
    } else if steps_ok && total > 0.0 {
        Classification::StrictlyIncreasing
    } else {
        Classification::NonMonotone
    };
    if !compliance.compliant {
        return ClassifyOutcome {
            observed,
            expected: None,
            label: if observed == Classification::NonMonotone {
                "counterexample-regime"
            } else {
                "non-compliant-flow"
            },
            pass: true,
        };
    }
    let expected = if indicator <= TOL_FI {
        Classification::Flat
    } else {
        Classification::StrictlyIncreasing
    };
    // a single amplitude has nothing to compare against
    let pass = observed == expected || (lambdas.len() < 2 && lambdas.iter().all(|l| l.is_finite()));
    ClassifyOutcome {
        observed,
        expected: Some(expected),
        label: if pass { "consistent" } else { "discretization-failure" },
        pass,
    }
}

fn row(problem: &Problem, amplitude: f64, fd_step: Option<f64>, compliant: bool) -> Result<SweepRow, Error> {
    if !compliant {
        let e = problem.eigenvalue(amplitude)?;
        let co = problem.coefficients(amplitude)?;
        return Ok(SweepRow {
            amplitude,
            lambda: e.lambda,
            derivative_formula: None,
            derivative_difference: None,
            residual: e.residual,
            positivity_ok: e.positive,
            peclet_warning: co.peclet() > 1.0,
            error: None,
        });
    }
    let s = problem.solve(amplitude)?;
    let formula = derivative_by_formula(&s.pair, &s.m)?;
    let difference = match fd_step {
        Some(d) => {
            let hi = problem.eigenvalue(amplitude + d)?.lambda;
            let lo = problem.eigenvalue(amplitude - d)?.lambda;
            Some((hi - lo) / (2.0 * d))
        }
        None => None,
    };
    Ok(SweepRow {
        amplitude,
        lambda: s.pair.lambda,
        derivative_formula: Some(formula),
        derivative_difference: difference,
        residual: s.pair.residual_u.max(s.pair.residual_v),
        positivity_ok: s.pair.positivity_ok,
        peclet_warning: s.pair.peclet_warning,
        error: None,
    })
}

/// One eigen solve per amplitude (in parallel), derivative columns, and the
/// classification. `fd_step` enables the central-difference column.
pub fn sweep(problem: &Problem, amplitudes: &[f64], fd_step: Option<f64>) -> Result<SweepReport, Error> {
    if amplitudes.windows(2).any(|w| w[1] <= w[0]) || amplitudes.iter().any(|&a| a < 0.0) {
        return Err(super::AnalysisError::Unsupported("amplitudes must be nonnegative and strictly increasing".into()).into());
    }
    let compliance = problem.compliance();
    let rows: Vec<SweepRow> = par_map(amplitudes, |&a| {
        row(problem, a, fd_step, compliance.compliant).unwrap_or_else(|e| SweepRow::failed(a, e))
    });
    let indicator = if compliance.compliant {
        let s0 = problem.solve(0.0)?;
        first_integral_indicator(&s0.pair, &s0.m)?
    } else {
        f64::NAN
    };
    let outcome = classify(&rows, indicator, compliance);
    Ok(SweepReport {
        problem: problem.spec.name.clone(),
        nodes: problem.grid().len(),
        b: problem.bc().b(),
        rows,
        indicator,
        compliance,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::presets;

    fn compliant() -> Compliance {
        Compliance {
            divergence: 0.0,
            normal_flux: 0.0,
            compliant: true,
        }
    }

    fn rows(ls: &[f64]) -> Vec<SweepRow> {
        ls.iter()
            .enumerate()
            .map(|(i, &l)| SweepRow {
                amplitude: i as f64,
                lambda: l,
                derivative_formula: None,
                derivative_difference: None,
                residual: 0.0,
                positivity_ok: true,
                peclet_warning: false,
                error: None,
            })
            .collect()
    }

    #[test]
    fn classification_rules() {
        let flat = classify(&rows(&[1.0, 1.0 + 1e-9, 1.0]), 0.0, compliant());
        assert_eq!(flat.observed, Classification::Flat);
        assert!(flat.pass);
        let inc = classify(&rows(&[1.0, 1.5, 2.0]), 0.3, compliant());
        assert_eq!(inc.observed, Classification::StrictlyIncreasing);
        assert!(inc.pass);
        let bad = classify(&rows(&[1.0, 0.5]), 0.3, compliant());
        assert!(!bad.pass);
        assert_eq!(bad.label, "discretization-failure");
        let ce = classify(
            &rows(&[1.0, 0.5]),
            f64::NAN,
            Compliance {
                compliant: false,
                ..compliant()
            },
        );
        assert!(ce.pass);
        assert_eq!(ce.label, "counterexample-regime");
    }

    #[test]
    fn small_flat_sweep() {
        let mut spec = presets::p2();
        spec.domain = crate::mesh::GridSpec::unit_square(17);
        let p = Problem::new(spec).unwrap();
        let r = sweep(&p, &[0.0, 2.0, 4.0, 8.0], None).unwrap();
        assert!(r.pass(), "{:?}", r.outcome);
        assert_eq!(r.outcome.observed, Classification::Flat);
        assert!(r.indicator <= 1e-10);
        let t = r.to_table().unwrap().to_csv();
        assert_eq!(t.lines().count(), 5);
        assert!(sweep(&p, &[1.0, 0.5], None).is_err());
    }

    #[test]
    fn drift_sweep_increases() {
        let mut spec = presets::p1();
        spec.domain = crate::mesh::GridSpec::interval(0.0, 1.0, 129);
        let p = Problem::new(spec).unwrap();
        let r = sweep(&p, &[0.0, 1.0, 2.0], Some(0.01)).unwrap();
        assert!(r.pass());
        let last = &r.rows[2];
        let (f, d) = (last.derivative_formula.unwrap(), last.derivative_difference.unwrap());
        assert!((f - d).abs() < 1e-5, "{f} {d}");
    }
}
