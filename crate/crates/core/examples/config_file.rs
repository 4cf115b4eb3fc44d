//! Build a problem from configuration text and echo the effective config.

use adveig::analysis::{sweep, Problem};
use adveig::config::Config;

const TEXT: &str = r#"
name = "shear"
[domain]
nx = 33
ny = 33
[bc]
b = 0.5
[coefficients]
c = "sin(pi*y)"
[flow]
kind = shear
profile = "sin(pi*y)"
direction = x
[run]
amplitudes = 0, 1, 2, 4
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::parse(TEXT)?;
    print!("{}", cfg.to_text());
    let p = Problem::new(cfg.problem.clone())?;
    let r = sweep(&p, &cfg.problem.amplitudes, None)?;
    println!("# lambdas {:?}", r.lambdas());
    println!("# {}", r.outcome.observed.as_str());
    Ok(())
}
