//! Principal eigenpair of `−u″ + A u′` on (0, 1) with Dirichlet ends,
//! where `λ = π² + A²/4`.

use std::f64::consts::PI;

use adveig::analysis::presets::p1;
use adveig::analysis::Problem;

fn main() -> Result<(), adveig::Error> {
    let p = Problem::new(p1())?;
    println!("{:>4} {:>18} {:>18} {:>10}", "A", "lambda", "pi^2 + A^2/4", "rel err");
    for a in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let s = p.solve(a)?;
        let exact = PI * PI + a * a / 4.0;
        println!(
            "{a:>4} {:>18.12} {exact:>18.12} {:>10.2e}",
            s.pair.lambda,
            (s.pair.lambda - exact).abs() / exact
        );
    }
    Ok(())
}
