//! Eigenvalue growth with a cellular flow when `c` is not a first integral,
//! with the derivative formula next to a central difference.

use adveig::analysis::presets::p3;
use adveig::analysis::{sweep, Problem};
use adveig::mesh::GridSpec;
use adveig::report::Report;

fn main() -> Result<(), adveig::Error> {
    let mut spec = p3();
    spec.domain = GridSpec::unit_square(65);
    let p = Problem::new(spec)?;
    let r = sweep(&p, &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0], Some(0.01))?;
    print!("{}", r.to_table().expect("sweeps are tabular").to_csv());
    println!("# {}: {}", r.outcome.observed.as_str(), r.outcome.label);
    Ok(())
}
