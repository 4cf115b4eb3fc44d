//! `J(u e^{tφ})` peaks at `t = 0`, and `Lu/u` is constant.

use adveig::analysis::presets::p3;
use adveig::analysis::{minmax_verify, Problem};
use adveig::mesh::GridSpec;

fn main() -> Result<(), adveig::Error> {
    let mut spec = p3();
    spec.domain = GridSpec::unit_square(65);
    let p = Problem::new(spec)?;
    let s = p.solve(4.0)?;
    let r = minmax_verify(&p, &s, 5)?;
    println!("lambda = {:.10}", r.lambda);
    for scan in &r.scans {
        println!("scan peak {:.10} at t = {:+.2}", scan.peak, scan.argmax);
    }
    println!("Lu/u in [{:.10}, {:.10}]", r.ratio_min, r.ratio_max);
    Ok(())
}
