//! Velocity fields and their structural diagnostics.

use adveig::flows::{divergence_residual, normal_flux_residual, realize, FlowSpec};
use adveig::mesh::{build_grid, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = build_grid(&GridSpec::unit_square(65))?;
    let flows = [
        ("cellular", FlowSpec::stream("sin(pi*x)*sin(pi*y)")?),
        ("double gyre", FlowSpec::stream("sin(2*pi*x)*sin(pi*y)")?),
        ("uniform", FlowSpec::Constant(vec![1.0, 0.0])),
        ("gradient of x^2", FlowSpec::gradient("x^2")?),
    ];
    println!("{:<18} {:>14} {:>14}", "flow", "div residual", "V.n residual");
    for (name, spec) in flows {
        let v = realize(&spec, &g)?;
        println!(
            "{name:<18} {:>14.3e} {:>14.3e}",
            divergence_residual(&v),
            normal_flux_residual(&v)
        );
    }
    Ok(())
}
