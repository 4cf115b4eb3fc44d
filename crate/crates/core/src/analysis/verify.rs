//! The integral identities, evaluated at one amplitude.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::functional::{
    corollary_residual, derivative_by_formula, eval_j, lemma2_residual, perturb, random_direction, solve_sensitivity,
    ConeElement,
};
use crate::operator::adjoint_consistency_check;
use crate::report::{Report, Table};
use crate::Error;

use super::{par_map, AnalysisError, Problem, Solved};

pub const LEMMA_TOL: f64 = 5e-6;
pub const COROLLARY_TOL: f64 = 1e-5;
pub const CRITICALITY_TOL: f64 = 1e-5;
pub const MAXIMALITY_TOL: f64 = 1e-7;
pub const DERIVATIVE_ZERO_TOL: f64 = 1e-7;
/// Perturbation size for the cone elements in the identity checks.
pub const CONE_T: f64 = 0.05;
pub const CRITICALITY_T: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Record {
    fn new(check: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            residual,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub problem: String,
    pub grid: String,
    pub amplitude: f64,
    pub lambda: f64,
    pub records: Vec<Record>,
}

impl VerifyReport {
    pub fn get(&self, check: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.check == check)
    }

    pub fn pass(&self) -> bool {
        self.records.iter().all(Record::pass)
    }
}

impl Report for VerifyReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "grid": self.grid,
            "A": self.amplitude,
            "lambda": self.lambda,
            "pass": self.pass(),
            "records": self.records.iter().map(|r| json!({
                "check": r.check,
                "problem": self.problem,
                "grid": self.grid,
                "residual": r.residual,
                "tolerance": r.tolerance,
                "pass": r.pass(),
            })).collect::<Vec<_>>(),
        })
    }

    fn to_table(&self) -> Option<Table> {
        let mut t = Table::new(["check", "residual", "tolerance", "pass"]);
        for r in &self.records {
            t.push(vec![r.check.as_str().into(), r.residual.into(), r.tolerance.into(), r.pass().into()]);
        }
        Some(t)
    }
}

fn grid_label(problem: &Problem) -> String {
    let g = problem.grid();
    if g.dim() == 1 {
        format!("{}", g.nx())
    } else {
        format!("{}x{}", g.nx(), g.ny())
    }
}

/// Largest identity residual over `count` cone elements `u·e^{CONE_T φ}`
/// with directions drawn from `seed`. Directions are smooth functions of
/// position, so the same seed gives the same perturbations on every grid.
pub fn lemma2_max(problem: &Problem, solved: &Solved, seed: u64, count: usize) -> Result<f64, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phis: Vec<_> = (0..count).map(|_| random_direction(problem.grid(), &mut rng)).collect();
    let r = par_map(&phis, |phi| -> Result<f64, Error> {
        let w = ConeElement::new(perturb(&solved.pair.u, phi, CONE_T)?, problem.bc(), problem.a())?;
        Ok(lemma2_residual(&w, &solved.pair, &solved.m)?)
    });
    r.into_iter().try_fold(0.0f64, |acc, x| Ok(acc.max(x?)))
}

/// Largest centered difference `|J(u e^{tφ}) − J(u e^{−tφ})| / 2t`,
/// relative to `1 + |λ|`.
pub fn criticality_max(problem: &Problem, solved: &Solved, seed: u64, count: usize) -> Result<f64, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pair, m) = (&solved.pair, &solved.m);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let phi = random_direction(problem.grid(), &mut rng);
        let j = |t: f64| -> Result<f64, Error> {
            let w = ConeElement::new(perturb(&pair.u, &phi, t)?, problem.bc(), problem.a())?;
            Ok(eval_j(&w, pair, m)?)
        };
        let d = (j(CRITICALITY_T)? - j(-CRITICALITY_T)?) / (2.0 * CRITICALITY_T);
        worst = worst.max(d.abs() / (1.0 + pair.lambda.abs()));
    }
    Ok(worst)
}

/// `max(J(ω) − J(u))` over `count` cone elements with `t ∈ [−1, 1]`.
pub fn maximality_excess(problem: &Problem, solved: &Solved, seed: u64, count: usize) -> Result<f64, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pair, m) = (&solved.pair, &solved.m);
    let ju = eval_j(&ConeElement::new(pair.u.clone(), problem.bc(), problem.a())?, pair, m)?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let phi = random_direction(problem.grid(), &mut rng);
        let t: f64 = rng.random_range(-1.0..1.0);
        let w = ConeElement::new(perturb(&pair.u, &phi, t)?, problem.bc(), problem.a())?;
        worst = worst.max(eval_j(&w, pair, m)? - ju);
    }
    Ok(worst)
}

/// Adjoint consistency, eigen residual, the perturbation identities, the
/// criticality and maximality of `J`, and the derivative checks.
pub fn identity_suite(problem: &Problem, amplitude: f64, seed: u64) -> Result<VerifyReport, Error> {
    if !problem.compliance().compliant {
        return Err(AnalysisError::Unsupported("identities assume a compliant flow".into()).into());
    }
    let solved = problem.solve(amplitude)?;
    let (pair, m) = (&solved.pair, &solved.m);
    let mut records = vec![
        Record::new(
            "adjoint_consistency",
            adjoint_consistency_check(m.coeffs(), problem.bc())?,
            1e-8,
        ),
        Record::new(
            "eigen_residual",
            pair.residual_u.max(pair.residual_v),
            100.0 * problem.spec.eigen.tol,
        ),
        Record::new("lemma2", lemma2_max(problem, &solved, seed, 20)?, LEMMA_TOL),
        Record::new("corollary", corollary_residual(pair, m)?, COROLLARY_TOL),
        Record::new("criticality", criticality_max(problem, &solved, seed ^ 1, 10)?, CRITICALITY_TOL),
        Record::new(
            "maximality",
            maximality_excess(problem, &solved, seed ^ 2, 50)?.max(0.0),
            MAXIMALITY_TOL,
        ),
    ];
    let w = ConeElement::new(pair.u.clone(), problem.bc(), problem.a())?;
    let w3 = ConeElement::new(pair.u.scale(3.0)?, problem.bc(), problem.a())?;
    records.push(Record::new(
        "scale_invariance",
        (eval_j(&w3, pair, m)? - eval_j(&w, pair, m)?).abs() / (1.0 + pair.lambda.abs()),
        1e-12,
    ));
    let lp = derivative_by_formula(pair, m)?;
    records.push(Record::new("derivative_sign", (-lp).max(0.0), 1e-8));
    let sens = solve_sensitivity(pair, m, lp)?;
    records.push(Record::new("sensitivity_residual", sens.residual, 1e-8));
    records.push(Record::new("sensitivity_orthogonality", sens.orthogonality.abs(), 1e-10));
    let s0 = if amplitude == 0.0 { solved.clone() } else { problem.solve(0.0)? };
    records.push(Record::new(
        "derivative_at_zero",
        derivative_by_formula(&s0.pair, &s0.m)?.abs(),
        DERIVATIVE_ZERO_TOL,
    ));
    Ok(VerifyReport {
        problem: problem.spec.name.clone(),
        grid: grid_label(problem),
        amplitude,
        lambda: pair.lambda,
        records,
    })
}
