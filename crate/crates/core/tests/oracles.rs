use std::f64::consts::PI;

use adveig::analysis::presets::{p1, p2, p3, p4, p5};
use adveig::analysis::{
    counterexample_probe, first_integral_bound, gradient_flow_sweep, limit_probe, minmax_verify, sweep,
    Classification, FirstIntegralFamily, Problem, ProblemSpec,
};
use adveig::expr::Expr;
use adveig::flows::FlowSpec;
use adveig::functional::{derivative_by_formula, second_derivative_at_zero, solve_sensitivity};
use adveig::mesh::GridSpec;
use adveig::Error;

fn with_grid(mut spec: ProblemSpec, domain: GridSpec) -> Problem {
    spec.domain = domain;
    Problem::new(spec).unwrap()
}

#[test]
fn drift_crossing_the_boundary_is_reported_not_failed() {
    let p = with_grid(p5(), GridSpec::interval(0.0, 1.0, 2049));
    let r = sweep(&p, &[0.0, 5.0, 20.0, 80.0], None).unwrap();
    assert_eq!(r.outcome.observed, Classification::NonMonotone);
    assert_eq!(r.outcome.label, "counterexample-regime");
    assert!(r.pass());
    assert!(!p.compliance().compliant);
}

#[test]
fn counterexample_limits() {
    let mut quad = p5();
    quad.c = Expr::new("x^2").unwrap();
    let p = Problem::new(quad).unwrap();
    let r = counterexample_probe(&p, &[0.0, 100.0], 0.05).unwrap();
    assert!(r.lambda0() > 0.0 && r.lambda_max() < r.lambda0());
    assert!(r.lambda_max().abs() <= 0.05, "{}", r.lambda_max());

    let mut flat = p5();
    flat.c = Expr::new("0.7").unwrap();
    flat.domain = GridSpec::interval(0.0, 1.0, 1025);
    let p = Problem::new(flat).unwrap();
    let r = counterexample_probe(&p, &[0.0, 5.0, 50.0], 0.05).unwrap();
    for l in &r.lambdas {
        assert!((l - 0.7).abs() < 1e-8, "{l}");
    }

    let coarse = with_grid(p5(), GridSpec::interval(0.0, 1.0, 129));
    assert!(matches!(
        counterexample_probe(&coarse, &[0.0, 100.0], 0.05),
        Err(Error::Analysis(adveig::analysis::AnalysisError::UnresolvedLayer { .. }))
    ));
}

fn gradient(m: &str, b: f64, n: usize) -> Problem {
    Problem::new(ProblemSpec {
        name: "gradient".into(),
        domain: GridSpec::interval(0.0, 1.0, n),
        b,
        a: Expr::new("1").unwrap(),
        c: Expr::new("0").unwrap(),
        flow: FlowSpec::gradient(m).unwrap(),
        amplitudes: vec![],
        eigen: Default::default(),
    })
    .unwrap()
}

#[test]
fn gradient_flow_closed_forms() {
    let r = gradient_flow_sweep(&gradient("3", 1.0, 257), &[0.0, 2.0]).unwrap();
    for row in &r.rows {
        assert_eq!(row.lambda_direct, row.lambda_variational);
    }
    let r = gradient_flow_sweep(&gradient("x", 1.0, 2049), &[0.0, 1.0, 2.0]).unwrap();
    assert!(r.pass());
    for row in &r.rows {
        let exact = PI * PI + row.amplitude * row.amplitude / 4.0;
        assert!((row.lambda_direct - exact).abs() < 1e-4 * exact);
    }
    // V·n ≠ 0 with Neumann is outside the symmetrization
    assert!(gradient_flow_sweep(&gradient("x", 0.0, 257), &[1.0]).is_err());
}

#[test]
fn first_integral_bounds() {
    let p = with_grid(p3(), GridSpec::unit_square(33));
    let consts = FirstIntegralFamily::constants(p.grid());
    assert!(first_integral_bound(&p, &consts).unwrap().abs() < 1e-12);
    // Robin κ = 1 on the unit square: perimeter / area
    let p = with_grid(p4(), GridSpec::unit_square(33));
    assert!((first_integral_bound(&p, &consts).unwrap() - 4.0).abs() < 1e-12);
    let fam = FirstIntegralFamily::polynomial(&p, 6).unwrap();
    assert!(fam.membership_residual(p.velocity()).unwrap() <= 1e-8);
    assert!(first_integral_bound(&p, &fam).unwrap() < 4.0);
}

#[test]
fn flat_limit_is_immediate() {
    let p = with_grid(p2(), GridSpec::unit_square(17));
    let r = limit_probe(&p, &[0.0, 2.0, 4.0, 8.0], 4, 1e-6).unwrap();
    assert!(r.pass() && r.cauchy());
    assert!(r.limit_estimate().abs() < 1e-8);
    let ce = with_grid(p5(), GridSpec::interval(0.0, 1.0, 129));
    assert!(limit_probe(&ce, &[0.0, 1.0], 4, 1e-6).is_err());
}

#[test]
fn eigenfunction_ratio_is_constant() {
    let p = Problem::new(p1()).unwrap();
    let s = p.solve(2.0).unwrap();
    let r = minmax_verify(&p, &s, 3).unwrap();
    assert!(r.ratio_spread() <= 1e-6, "{}", r.ratio_spread());
    assert!((r.lambda - PI * PI - 1.0).abs() < 1e-4);
    for w in &r.weighted_ratios {
        assert!((w - r.lambda).abs() < 1e-6);
    }
}

#[test]
fn flat_second_derivative_vanishes() {
    let p = with_grid(p2(), GridSpec::unit_square(17));
    let s = p.solve(0.0).unwrap();
    let lp = derivative_by_formula(&s.pair, &s.m).unwrap();
    let sens = solve_sensitivity(&s.pair, &s.m, lp).unwrap();
    assert!(sens.u_prime.max_abs() < 1e-8);
    assert!(second_derivative_at_zero(&s.pair, &sens, s.m.coeffs(), p.bc()).unwrap().abs() < 1e-10);
}
