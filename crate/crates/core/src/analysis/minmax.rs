//! Min-max characterizations at a computed eigenpair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::functional::{eval_j, perturb, random_direction, ConeElement};
use crate::mesh::weighted_dot;
use crate::operator::admissible_field;
use crate::report::Report;
use crate::Error;

use super::{Problem, Solved};

pub const SCAN_STEP: f64 = 0.05;
pub const PEAK_TOL: f64 = 1e-5;
pub const RATIO_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub argmax: f64,
    pub peak: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxReport {
    pub problem: String,
    pub lambda: f64,
    /// (a) `t ↦ J(u e^{tφ})` on `[−1, 1]`.
    pub scans: Vec<Scan>,
    /// (b) `∫ p² (Lu/u)` for random `p` with `∫p² = 1`.
    pub weighted_ratios: Vec<f64>,
    /// (c) extremes of `Lu/u` over nodes without Dirichlet rows.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub pass_scan: bool,
    pub pass_weighted: bool,
    pub pass_ratio: bool,
}

impl MinMaxReport {
    pub fn ratio_spread(&self) -> f64 {
        (self.ratio_max - self.lambda).abs().max((self.ratio_min - self.lambda).abs())
    }

    pub fn pass(&self) -> bool {
        self.pass_scan && self.pass_weighted && self.pass_ratio
    }
}

impl Report for MinMaxReport {
    fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "lambda": self.lambda,
            "scan_step": SCAN_STEP,
            "scans": self.scans.iter().map(|s| json!({"argmax_t": s.argmax, "peak": s.peak, "pass": s.pass})).collect::<Vec<_>>(),
            "weighted_ratios": self.weighted_ratios,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "ratio_spread": self.ratio_spread(),
            "pass_scan": self.pass_scan,
            "pass_weighted": self.pass_weighted,
            "pass_ratio": self.pass_ratio,
            "pass": self.pass(),
        })
    }
}

pub fn minmax_verify(problem: &Problem, solved: &Solved, seed: u64) -> Result<MinMaxReport, Error> {
    let (m, pair) = (&solved.m, &solved.pair);
    let g = problem.grid();
    let bc = problem.bc();
    let lambda = pair.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (1.0 / SCAN_STEP).round() as i32;
    let mut scans = Vec::new();
    for _ in 0..5 {
        let phi = random_direction(g, &mut rng);
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for i in -steps..=steps {
            let t = i as f64 * SCAN_STEP;
            let w = ConeElement::new(perturb(&pair.u, &phi, t)?, bc, problem.a())?;
            let j = eval_j(&w, pair, m)?;
            if j > best.1 {
                best = (t, j);
            }
        }
        scans.push(Scan {
            argmax: best.0,
            peak: best.1,
            pass: best.0.abs() <= SCAN_STEP + 1e-12 && (best.1 - lambda).abs() <= PEAK_TOL,
        });
    }
    let lu = m.apply_values(pair.u.values())?;
    let mask = m.dirichlet_mask();
    let u = pair.u.values();
    let ratio: Vec<f64> = (0..g.len()).map(|k| if mask[k] { 0.0 } else { lu[k] / u[k] }).collect();
    let mut weighted_ratios = Vec::new();
    for _ in 0..5 {
        let p = admissible_field(g, bc, &mut rng, 4);
        let p2: Vec<f64> = p.values().iter().map(|x| x * x).collect();
        let mass = weighted_dot(g, &p2, &vec![1.0; g.len()]);
        weighted_ratios.push(weighted_dot(g, &p2, &ratio) / mass);
    }
    let free: Vec<f64> = (0..g.len()).filter(|&k| !mask[k]).map(|k| ratio[k]).collect();
    let ratio_min = free.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = free.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = RATIO_TOL * (1.0 + lambda.abs());
    let pass_weighted = weighted_ratios.iter().all(|r| (r - lambda).abs() <= tol);
    let pass_ratio = (ratio_max - lambda).abs() <= tol && (ratio_min - lambda).abs() <= tol;
    Ok(MinMaxReport {
        problem: problem.spec.name.clone(),
        lambda,
        pass_scan: scans.iter().all(|s| s.pass),
        scans,
        weighted_ratios,
        ratio_min,
        ratio_max,
        pass_weighted,
        pass_ratio,
    })
}
