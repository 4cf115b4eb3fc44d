//! Parse coefficient expressions and sample them on a grid.

use adveig::expr::Expr;
use adveig::mesh::{build_grid, integrate, GridSpec, ScalarField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Expr::new("cos(pi*x) + 0.5*y^2")?;
    println!("c(0.25, 0.5) = {}", c.eval(0.25, Some(0.5))?);

    let g = build_grid(&GridSpec::unit_square(65))?;
    let f = ScalarField::try_from_fn(g, |x, y| c.eval(x, y))??;
    println!("integral over the unit square = {:.10} (exact 1/6)", integrate(&f));

    match Expr::new("sin(x") {
        Ok(_) => unreachable!(),
        Err(e) => println!("parse error: {e}"),
    }
    Ok(())
}
