//! Named problems P1–P5.

use crate::eigen::EigenOptions;
use crate::expr::Expr;
use crate::flows::FlowSpec;
use crate::mesh::GridSpec;

use super::ProblemSpec;

pub const CELLULAR: &str = "sin(pi*x)*sin(pi*y)";

pub const NAMES: [&str; 5] = ["P1", "P2", "P3", "P4", "P5"];

fn expr(s: &str) -> Expr {
    Expr::new(s).expect("preset expressions parse")
}

/// 1D Dirichlet, `a = 1`, `c = 0`, `V = 1`; `λ = π² + A²/4`.
pub fn p1() -> ProblemSpec {
    ProblemSpec {
        name: "P1".into(),
        domain: GridSpec::interval(0.0, 1.0, 513),
        b: 1.0,
        a: expr("1"),
        c: expr("0"),
        flow: FlowSpec::Constant(vec![1.0]),
        amplitudes: vec![0.0, 1.0, 2.0, 4.0],
        eigen: EigenOptions::default(),
    }
}

/// 2D Neumann, `c = 0`, cellular flow; `λ ≡ 0`.
pub fn p2() -> ProblemSpec {
    ProblemSpec {
        name: "P2".into(),
        domain: GridSpec::unit_square(65),
        b: 0.0,
        a: expr("1"),
        c: expr("0"),
        flow: FlowSpec::StreamFunction(expr(CELLULAR)),
        amplitudes: vec![0.0, 2.0, 4.0, 8.0, 16.0],
        eigen: EigenOptions::default(),
    }
}

/// 2D Neumann, `c = cos(πx)`, cellular flow on 129².
pub fn p3() -> ProblemSpec {
    ProblemSpec {
        name: "P3".into(),
        domain: GridSpec::unit_square(129),
        b: 0.0,
        a: expr("1"),
        c: expr("cos(pi*x)"),
        flow: FlowSpec::StreamFunction(expr(CELLULAR)),
        amplitudes: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0],
        eigen: EigenOptions::default(),
    }
}

/// P3 with Robin `b = 1/2` and a doubling schedule up to 64.
pub fn p4() -> ProblemSpec {
    ProblemSpec {
        name: "P4".into(),
        b: 0.5,
        amplitudes: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        ..p3()
    }
}

/// 1D Neumann, `V = 1`, `c = x`: the flow crosses the boundary.
pub fn p5() -> ProblemSpec {
    ProblemSpec {
        name: "P5".into(),
        domain: GridSpec::interval(0.0, 1.0, 8193),
        b: 0.0,
        a: expr("1"),
        c: expr("x"),
        flow: FlowSpec::Constant(vec![1.0]),
        amplitudes: vec![0.0, 5.0, 20.0, 80.0, 100.0],
        eigen: EigenOptions::default(),
    }
}

pub fn preset(name: &str) -> Option<ProblemSpec> {
    match name.to_ascii_uppercase().as_str() {
        "P1" => Some(p1()),
        "P2" => Some(p2()),
        "P3" => Some(p3()),
        "P4" => Some(p4()),
        "P5" => Some(p5()),
        _ => None,
    }
}
