//! With Neumann conditions and `c ≡ 0` the eigenfunction is constant, hence a
//! first integral of the flow, and the eigenvalue does not move with `A`.

use adveig::analysis::presets::p2;
use adveig::analysis::{sweep, Problem};

fn main() -> Result<(), adveig::Error> {
    let p = Problem::new(p2())?;
    let r = sweep(&p, &p.spec.amplitudes, None)?;
    for row in &r.rows {
        println!("A = {:>4}  lambda = {:+.3e}", row.amplitude, row.lambda);
    }
    println!("indicator {:.3e}, classification {}", r.indicator, r.outcome.observed.as_str());
    Ok(())
}
