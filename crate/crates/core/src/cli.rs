//! Command-line front end.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{
    counterexample_probe, first_integral_bound, gradient_flow_sweep, identity_suite, limit_probe, minmax_verify,
    scaling_identity, sweep, symmetry_check, FirstIntegralFamily, Problem,
};
use crate::config::{Config, ConfigError};
use crate::report::{fmt_num, json_string, Report, Table};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "adveig", version, about = "Principal eigenvalues of advection-diffusion operators")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Principal eigenpair at one amplitude.
    Solve(Opts),
    /// Eigenvalues over the amplitude list, with derivatives and classification.
    Sweep(Opts),
    /// Integral identities, scaling and symmetry checks.
    Verify(Opts),
    /// Min-max characterizations at one amplitude.
    Minmax(Opts),
    /// First-integral upper bound, compared with the amplitude list.
    Bound(Opts),
    /// Large-amplitude behaviour along the amplitude list.
    Limit(Opts),
    /// Flows that cross the boundary.
    Counterexample(Opts),
    /// Gradient flows against the symmetrized potential.
    Gradflow(Opts),
}

#[derive(Debug, Clone, clap::Args)]
struct Opts {
    /// Configuration file.
    #[arg(short = 'c', long = "config")]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Amplitudes, comma separated; the first is used by single-point commands.
    #[arg(long = "A", value_delimiter = ',', allow_negative_numbers = true)]
    amplitudes: Option<Vec<f64>>,
    /// Also write the assembled matrices in MatrixMarket format.
    #[arg(long)]
    dump_matrix: bool,
}

impl Cmd {
    fn opts(&self) -> &Opts {
        match self {
            Cmd::Solve(o)
            | Cmd::Sweep(o)
            | Cmd::Verify(o)
            | Cmd::Minmax(o)
            | Cmd::Bound(o)
            | Cmd::Limit(o)
            | Cmd::Counterexample(o)
            | Cmd::Gradflow(o) => o,
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] Error),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

struct Out {
    dir: PathBuf,
    config: Value,
}

impl Out {
    /// JSON with the effective config alongside the report.
    fn json(&self, name: &str, report: &dyn Report) -> io::Result<()> {
        let v = json!({"config": self.config, "report": report.to_json()});
        self.text(name, &json_string(&v))
    }

    fn csv(&self, name: &str, table: Option<Table>) -> io::Result<()> {
        match table {
            Some(t) => self.text(name, &t.to_csv()),
            None => Ok(()),
        }
    }

    fn text(&self, name: &str, body: &str) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(name), body)
    }
}

struct Json(Value);

impl Report for Json {
    fn to_json(&self) -> Value {
        self.0.clone()
    }
}

fn load(opts: &Opts) -> Result<Config, ConfigError> {
    let mut cfg = Config::load(&opts.config)?;
    cfg.override_with(opts.nx, opts.ny, opts.amplitudes.as_deref());
    if let Some(o) = &opts.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Runs one command from parsed arguments.
pub fn run(args: &[String]) -> Result<Status, CliError> {
    let parsed = Args::try_parse_from(args)?;
    let cmd = &parsed.command;
    let opts = cmd.opts();
    let cfg = load(opts)?;
    let out = Out {
        dir: cfg.out.clone(),
        config: cfg.to_json(),
    };
    let problem = Problem::new(cfg.problem.clone())?;
    execute(cmd, &cfg, &problem, &out, opts.dump_matrix)
}

fn execute(cmd: &Cmd, cfg: &Config, problem: &Problem, out: &Out, dump: bool) -> Result<Status, CliError> {
    let amps = &cfg.problem.amplitudes;
    match cmd {
        Cmd::Solve(_) => {
            let s = problem.solve(cfg.amplitude)?;
            out.json("eig.json", &s.pair)?;
            write_field(&out.dir.join("u.csv"), |w| s.pair.u.write_csv(w))?;
            write_field(&out.dir.join("v.csv"), |w| s.pair.v.write_csv(w))?;
            if dump {
                s.m.write_matrix_market(&out.dir.join("matrix.mtx"))?;
                s.m_adj.write_matrix_market(&out.dir.join("adjoint.mtx"))?;
            }
            println!("lambda = {}", fmt_num(s.pair.lambda));
            Ok(status(s.pair.positivity_ok))
        }
        Cmd::Sweep(_) => {
            let r = sweep(problem, amps, cfg.fd_step)?;
            out.json("sweep.json", &r)?;
            out.csv("sweep.csv", r.to_table())?;
            println!("{}: {}", r.outcome.observed.as_str(), r.outcome.label);
            Ok(status(r.pass()))
        }
        Cmd::Verify(_) => {
            let r = identity_suite(problem, cfg.amplitude, cfg.seed)?;
            let pairs: Vec<(f64, f64)> = [(2.0, 0.5), (4.0, 0.25), (8.0, 1.0)].into();
            let mut scaling = scaling_identity(problem, &pairs)?;
            scaling.symmetry = Some(symmetry_check(problem, cfg.amplitude)?);
            out.json("verify.json", &r)?;
            out.csv("verify.csv", r.to_table())?;
            out.json("scaling.json", &scaling)?;
            for rec in &r.records {
                println!("{:<26} {} {}", rec.check, fmt_num(rec.residual), if rec.pass() { "pass" } else { "FAIL" });
            }
            Ok(status(r.pass() && scaling.pass()))
        }
        Cmd::Minmax(_) => {
            let s = problem.solve(cfg.amplitude)?;
            let r = minmax_verify(problem, &s, cfg.seed)?;
            out.json("minmax.json", &r)?;
            Ok(status(r.pass()))
        }
        Cmd::Bound(_) => {
            let family = FirstIntegralFamily::polynomial(problem, cfg.degree)?;
            let bound = first_integral_bound(problem, &family)?;
            let r = sweep(problem, amps, None)?;
            let lambdas = r.lambdas();
            let pass = lambdas.iter().all(|&l| l <= bound + 1e-6);
            let report = Json(json!({
                "first_integral_bound": bound,
                "degree": cfg.degree,
                "family_size": family.len(),
                "membership_residual": family.membership_residual(problem.velocity())?,
                "A": amps,
                "lambda": lambdas,
                "pass": pass,
            }));
            out.json("bound.json", &report)?;
            println!("bound = {}", fmt_num(bound));
            Ok(status(pass))
        }
        Cmd::Limit(_) => {
            let r = limit_probe(problem, amps, cfg.degree, cfg.tol_limit)?;
            out.json("limit.json", &r)?;
            out.csv("limit.csv", r.to_table())?;
            Ok(status(r.pass()))
        }
        Cmd::Counterexample(_) => {
            let r = counterexample_probe(problem, amps, cfg.delta)?;
            out.json("counterexample.json", &r)?;
            out.csv("counterexample.csv", r.to_table())?;
            Ok(status(r.pass()))
        }
        Cmd::Gradflow(_) => {
            let r = gradient_flow_sweep(problem, amps)?;
            out.json("gradflow.json", &r)?;
            out.csv("gradflow.csv", r.to_table())?;
            Ok(status(r.pass()))
        }
    }
}

fn write_field(path: &Path, f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    io::Write::flush(&mut w)
}

/// Process entry point: 0 when every check passes, 2 on a failed check,
/// 1 on usage, configuration or solver errors.
pub fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    match run(&args) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(CliError::Usage(e)) => {
            // help and version requests also arrive here
            let _ = e.print();
            if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
