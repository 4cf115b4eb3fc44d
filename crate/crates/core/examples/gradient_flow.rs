//! For `V = ∇m` the operator is similar to a Schrödinger operator with
//! potential `A²/4|∇m|² − (A/2)Δm + c`.

use adveig::analysis::{gradient_flow_sweep, Problem, ProblemSpec};
use adveig::expr::Expr;
use adveig::flows::FlowSpec;
use adveig::mesh::GridSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = Problem::new(ProblemSpec {
        name: "cosine gradient".into(),
        domain: GridSpec::interval(0.0, 1.0, 4097),
        b: 0.0,
        a: Expr::new("1")?,
        c: Expr::new("x")?,
        flow: FlowSpec::gradient("cos(pi*x)")?,
        amplitudes: vec![0.0, 1.0, 2.0, 4.0],
        eigen: Default::default(),
    })?;
    let r = gradient_flow_sweep(&p, &p.spec.amplitudes)?;
    for row in &r.rows {
        println!(
            "A = {}  direct {:.12}  symmetric {:.12}  rel diff {:.2e}",
            row.amplitude,
            row.lambda_direct,
            row.lambda_variational,
            row.relative_difference()
        );
    }
    Ok(())
}
