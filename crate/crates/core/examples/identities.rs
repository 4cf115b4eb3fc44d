//! Residuals of the integral identities at one amplitude.

use adveig::analysis::presets::p1;
use adveig::analysis::{identity_suite, Problem};

fn main() -> Result<(), adveig::Error> {
    let p = Problem::new(p1())?;
    let r = identity_suite(&p, 2.0, 42)?;
    println!("lambda = {:.12}", r.lambda);
    for rec in &r.records {
        println!(
            "{:<26} {:>10.3e} <= {:<8.1e} {}",
            rec.check,
            rec.residual,
            rec.tolerance,
            if rec.pass() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
