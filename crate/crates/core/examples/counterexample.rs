//! A flow through the boundary can lower the eigenvalue: with `V = 1`,
//! Neumann ends and `c = x`, `λ(A)` tends to `c(0) = 0`.

use adveig::analysis::presets::p5;
use adveig::analysis::{counterexample_probe, Problem};

fn main() -> Result<(), adveig::Error> {
    let p = Problem::new(p5())?;
    let r = counterexample_probe(&p, &p.spec.amplitudes, 0.05)?;
    for (a, l) in r.amplitudes.iter().zip(&r.lambdas) {
        println!("A = {a:>5}  lambda = {l:.8}");
    }
    println!("normal flux residual {}, limit c(0) = {}", r.normal_flux, r.limit);
    Ok(())
}
