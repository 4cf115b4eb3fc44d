//! Robin problem: eigenvalues along a doubling schedule stay below the bound
//! obtained from functions of the stream function.

use adveig::analysis::presets::p4;
use adveig::analysis::{limit_probe, Problem};
use adveig::mesh::GridSpec;

fn main() -> Result<(), adveig::Error> {
    let mut spec = p4();
    spec.domain = GridSpec::unit_square(65);
    let p = Problem::new(spec)?;
    let r = limit_probe(&p, &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0], 6, 1e-3)?;
    for (a, l) in r.amplitudes.iter().zip(&r.lambdas) {
        println!("A = {a:>4}  lambda = {l:.8}");
    }
    println!("bound {:.8}, gap {:.3e}, monotone {}, cauchy {}", r.bound, r.gap(), r.monotone(), r.cauchy());
    Ok(())
}
