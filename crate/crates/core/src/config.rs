//! Problem configuration files.
//!
//! ```text
//! # comment
//! preset = P3
//! out = "runs/p3"
//!
//! [domain]
//! nx = 65
//! ny = 65
//!
//! [coefficients]
//! c = "cos(pi*x)"
//!
//! [run]
//! amplitudes = 0, 1, 2, 4
//! ```
//!
//! Keys are `key = value`, one per line, grouped in bracketed sections.
//! Expressions and paths are double-quoted. A `preset` line, if present,
//! must come first; later keys override it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{preset, ProblemSpec};
use crate::eigen::EigenOptions;
use crate::expr::Expr;
use crate::flows::FlowSpec;
use crate::mesh::{Axis, GridSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config not found: {0}")]
    NotFound(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// A problem plus the parameters of every command.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: ProblemSpec,
    pub out: PathBuf,
    /// Amplitude for single-point commands.
    pub amplitude: f64,
    /// Central-difference step for the sweep's derivative column.
    pub fd_step: Option<f64>,
    /// Polynomial degree of the first-integral family.
    pub degree: usize,
    pub tol_limit: f64,
    /// Allowed distance from the counterexample limit.
    pub delta: f64,
    pub seed: u64,
}

impl Config {
    pub fn from_spec(problem: ProblemSpec) -> Self {
        Self {
            problem,
            out: PathBuf::from("adveig-out"),
            amplitude: 1.0,
            fd_step: Some(0.01),
            degree: 6,
            tol_limit: 1e-3,
            delta: 0.05,
            seed: 1,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|_| ConfigError::NotFound(path.display().to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Option<Config> = None;
        let mut section = String::new();
        let mut domain = Domain::default();
        let mut flow = FlowFields::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::UnknownSection {
                        line,
                        section: name.into(),
                    });
                }
                section = name.into();
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| syntax(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() && key == "preset" {
                if cfg.is_some() {
                    return Err(syntax(line, "`preset` must be the first key"));
                }
                let name = unquote(value);
                let spec = preset(name).ok_or_else(|| bad(line, key, format!("no preset named {name}")))?;
                cfg = Some(Config::from_spec(spec));
                continue;
            }
            let c = cfg.get_or_insert_with(|| Config::from_spec(blank()));
            let v = Value_ { line, key, raw: value };
            match (section.as_str(), key) {
                ("", "name") => c.problem.name = v.string()?,
                ("", "out") => c.out = PathBuf::from(v.string()?),
                ("domain", "x0") => domain.x0 = Some(v.num()?),
                ("domain", "x1") => domain.x1 = Some(v.num()?),
                ("domain", "nx") => domain.nx = Some(v.count()?),
                ("domain", "y0") => domain.y0 = Some(v.num()?),
                ("domain", "y1") => domain.y1 = Some(v.num()?),
                ("domain", "ny") => domain.ny = Some(v.count()?),
                ("domain", "dim") => domain.one_d = Some(v.count()? == 1),
                ("bc", "b") => c.problem.b = v.num()?,
                ("coefficients", "a") => c.problem.a = v.expr()?,
                ("coefficients", "c") => c.problem.c = v.expr()?,
                ("flow", "kind") => flow.kind = Some((line, v.string()?)),
                ("flow", "psi") | ("flow", "profile") | ("flow", "m") => flow.expr = Some(v.expr()?),
                ("flow", "direction") => {
                    flow.direction = Some(match v.string()?.as_str() {
                        "x" => Axis::X,
                        "y" => Axis::Y,
                        other => return Err(bad(line, key, format!("expected x or y, got {other}"))),
                    })
                }
                ("flow", "vector") => flow.vector = Some(v.list()?),
                ("run", "amplitudes") => c.problem.amplitudes = v.list()?,
                ("run", "A") => c.amplitude = v.num()?,
                ("run", "fd_step") => c.fd_step = Some(v.num()?).filter(|&h| h > 0.0),
                ("run", "degree") => c.degree = v.count()?,
                ("run", "tol_limit") => c.tol_limit = v.num()?,
                ("run", "delta") => c.delta = v.num()?,
                ("run", "seed") => c.seed = v.count()? as u64,
                ("solver", "tol") => c.problem.eigen.tol = v.num()?,
                ("solver", "max_iter") => c.problem.eigen.max_iter = v.count()?,
                ("solver", "shift") => c.problem.eigen.shift = Some(v.num()?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        section: section.clone(),
                        key: key.into(),
                    })
                }
            }
        }
        let mut c = cfg.unwrap_or_else(|| Config::from_spec(blank()));
        domain.apply(&mut c.problem.domain);
        flow.apply(&mut c.problem.flow)?;
        Ok(c)
    }

    /// `--nx`, `--ny` and `--A` overrides; a list for `--A` sets both the
    /// amplitude list and, from its first entry, the single amplitude.
    pub fn override_with(&mut self, nx: Option<usize>, ny: Option<usize>, amplitudes: Option<&[f64]>) {
        if let Some(n) = nx {
            self.problem.domain.nx = n;
        }
        if let (Some(n), Some(y)) = (ny, self.problem.domain.y.as_mut()) {
            y.1 = n;
        }
        if let Some(a) = amplitudes.filter(|a| !a.is_empty()) {
            self.amplitude = a[0];
            self.problem.amplitudes = a.to_vec();
        }
    }

    /// The effective configuration in the file format; parsing it gives
    /// back an equal `Config`.
    pub fn to_text(&self) -> String {
        let p = &self.problem;
        let d = &p.domain;
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "name = {}", quote(&p.name));
        let _ = writeln!(s, "out = {}", quote(&self.out.display().to_string()));
        let _ = writeln!(s, "\n[domain]");
        let _ = writeln!(s, "x0 = {:?}\nx1 = {:?}\nnx = {}", d.x.0, d.x.1, d.nx);
        match d.y {
            Some(((y0, y1), ny)) => {
                let _ = writeln!(s, "y0 = {y0:?}\ny1 = {y1:?}\nny = {ny}");
            }
            None => {
                let _ = writeln!(s, "dim = 1");
            }
        }
        let _ = writeln!(s, "\n[bc]\nb = {:?}", p.b);
        let _ = writeln!(
            s,
            "\n[coefficients]\na = {}\nc = {}",
            quote(p.a.source()),
            quote(p.c.source())
        );
        let _ = writeln!(s, "\n[flow]\nkind = {}", quote(p.flow.kind()));
        match &p.flow {
            FlowSpec::StreamFunction(e) => {
                let _ = writeln!(s, "psi = {}", quote(e.source()));
            }
            FlowSpec::Gradient(e) => {
                let _ = writeln!(s, "m = {}", quote(e.source()));
            }
            FlowSpec::Shear { profile, direction } => {
                let dir = if *direction == Axis::X { "x" } else { "y" };
                let _ = writeln!(s, "profile = {}\ndirection = {}", quote(profile.source()), quote(dir));
            }
            FlowSpec::Constant(v) => {
                let _ = writeln!(s, "vector = {}", list(v));
            }
            FlowSpec::Zero => {}
        }
        let _ = writeln!(s, "\n[run]\namplitudes = {}\nA = {:?}", list(&p.amplitudes), self.amplitude);
        let _ = writeln!(s, "fd_step = {:?}", self.fd_step.unwrap_or(0.0));
        let _ = writeln!(
            s,
            "degree = {}\ntol_limit = {:?}\ndelta = {:?}\nseed = {}",
            self.degree, self.tol_limit, self.delta, self.seed
        );
        let _ = writeln!(s, "\n[solver]\ntol = {:?}\nmax_iter = {}", p.eigen.tol, p.eigen.max_iter);
        if let Some(sh) = p.eigen.shift {
            let _ = writeln!(s, "shift = {sh:?}");
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let p = &self.problem;
        let d = &p.domain;
        let flow_expr = match &p.flow {
            FlowSpec::StreamFunction(e) | FlowSpec::Gradient(e) => json!(e.source()),
            FlowSpec::Shear { profile, .. } => json!(profile.source()),
            FlowSpec::Constant(v) => json!(v),
            FlowSpec::Zero => Value::Null,
        };
        json!({
            "name": p.name,
            "domain": {
                "x": [d.x.0, d.x.1],
                "nx": d.nx,
                "y": d.y.map(|(y, _)| [y.0, y.1]),
                "ny": d.y.map(|(_, n)| n),
            },
            "b": p.b,
            "a": p.a.source(),
            "c": p.c.source(),
            "flow": {"kind": p.flow.kind(), "expr": flow_expr},
            "amplitudes": p.amplitudes,
            "A": self.amplitude,
            "fd_step": self.fd_step,
            "degree": self.degree,
            "tol_limit": self.tol_limit,
            "delta": self.delta,
            "seed": self.seed,
            "solver": {"tol": p.eigen.tol, "max_iter": p.eigen.max_iter, "shift": p.eigen.shift},
        })
    }
}

const SECTIONS: [&str; 6] = ["domain", "bc", "coefficients", "flow", "run", "solver"];

fn blank() -> ProblemSpec {
    ProblemSpec {
        name: "custom".into(),
        domain: GridSpec::unit_square(33),
        b: 0.0,
        a: Expr::constant(1.0),
        c: Expr::constant(0.0),
        flow: FlowSpec::Zero,
        amplitudes: vec![0.0],
        eigen: EigenOptions::default(),
    }
}

#[derive(Default)]
struct Domain {
    x0: Option<f64>,
    x1: Option<f64>,
    nx: Option<usize>,
    y0: Option<f64>,
    y1: Option<f64>,
    ny: Option<usize>,
    one_d: Option<bool>,
}

impl Domain {
    fn apply(&self, d: &mut GridSpec) {
        if let Some(v) = self.x0 {
            d.x.0 = v;
        }
        if let Some(v) = self.x1 {
            d.x.1 = v;
        }
        if let Some(v) = self.nx {
            d.nx = v;
        }
        if self.one_d == Some(true) {
            d.y = None;
            return;
        }
        if self.y0.is_some() || self.y1.is_some() || self.ny.is_some() {
            let ((y0, y1), ny) = d.y.unwrap_or(((0.0, 1.0), d.nx));
            d.y = Some(((self.y0.unwrap_or(y0), self.y1.unwrap_or(y1)), self.ny.unwrap_or(ny)));
        }
    }
}

#[derive(Default)]
struct FlowFields {
    kind: Option<(usize, String)>,
    expr: Option<Expr>,
    direction: Option<Axis>,
    vector: Option<Vec<f64>>,
}

impl FlowFields {
    fn apply(self, flow: &mut FlowSpec) -> Result<(), ConfigError> {
        let Some((line, kind)) = self.kind else {
            if self.expr.is_some() || self.vector.is_some() || self.direction.is_some() {
                return Err(ConfigError::Invalid("flow parameters given without `kind`".into()));
            }
            return Ok(());
        };
        let need_expr = |e: Option<Expr>| e.ok_or_else(|| bad(line, "kind", format!("{kind} flow needs an expression")));
        *flow = match kind.as_str() {
            "stream" => FlowSpec::StreamFunction(need_expr(self.expr)?),
            "gradient" => FlowSpec::Gradient(need_expr(self.expr)?),
            "shear" => FlowSpec::Shear {
                profile: need_expr(self.expr)?,
                direction: self.direction.unwrap_or(Axis::X),
            },
            "constant" => FlowSpec::Constant(
                self.vector
                    .ok_or_else(|| bad(line, "kind", "constant flow needs `vector`".into()))?,
            ),
            "zero" => FlowSpec::Zero,
            other => return Err(bad(line, "kind", format!("unknown flow kind {other}"))),
        };
        Ok(())
    }
}

struct Value_<'a> {
    line: usize,
    key: &'a str,
    raw: &'a str,
}

impl Value_<'_> {
    fn num(&self) -> Result<f64, ConfigError> {
        parse_num(self.raw).ok_or_else(|| bad(self.line, self.key, format!("not a number: {}", self.raw)))
    }

    fn count(&self) -> Result<usize, ConfigError> {
        self.raw
            .parse()
            .map_err(|_| bad(self.line, self.key, format!("not a nonnegative integer: {}", self.raw)))
    }

    fn list(&self) -> Result<Vec<f64>, ConfigError> {
        if self.raw.is_empty() {
            return Ok(Vec::new());
        }
        self.raw
            .split(',')
            .map(|t| parse_num(t.trim()).ok_or_else(|| bad(self.line, self.key, format!("not a number: {}", t.trim()))))
            .collect()
    }

    fn string(&self) -> Result<String, ConfigError> {
        let r = self.raw;
        if r.len() >= 2 && r.starts_with('"') && r.ends_with('"') {
            Ok(r[1..r.len() - 1].to_string())
        } else if r.starts_with('"') {
            Err(bad(self.line, self.key, "unterminated string".into()))
        } else {
            Ok(r.to_string())
        }
    }

    fn expr(&self) -> Result<Expr, ConfigError> {
        let s = self.string()?;
        Expr::new(&s).map_err(|e| bad(self.line, self.key, e.to_string()))
    }
}

fn parse_num(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(s)
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn syntax(line: usize, message: &str) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.into(),
    }
}

fn bad(line: usize, key: &str, message: String) -> ConfigError {
    ConfigError::BadValue {
        line,
        key: key.into(),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_and_overrides() {
        let c = Config::parse("preset = P3\n[domain]\nnx = 33\nny = 33 # coarse\n[run]\namplitudes = 0, 2\n").unwrap();
        assert_eq!(c.problem.name, "P3");
        assert_eq!(c.problem.domain.nx, 33);
        assert_eq!(c.problem.domain.y.unwrap().1, 33);
        assert_eq!(c.problem.amplitudes, vec![0.0, 2.0]);
        assert_eq!(c.problem.c.source(), "cos(pi*x)");
    }

    #[test]
    fn custom_problem() {
        let text = r#"
name = "drift"
[domain]
dim = 1
nx = 101
[bc]
b = 1
[flow]
kind = constant
vector = 1
[coefficients]
c = "x*x"
"#;
        let c = Config::parse(text).unwrap();
        assert!(c.problem.domain.y.is_none());
        assert_eq!(c.problem.flow, FlowSpec::Constant(vec![1.0]));
        assert_eq!(c.problem.c.source(), "x*x");
        assert_eq!(c.problem.b, 1.0);
    }

    #[test]
    fn errors_carry_lines() {
        let e = Config::parse("preset = P1\n\n[run]\nspeed = 3\n").unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                line: 4,
                section: "run".into(),
                key: "speed".into()
            }
        );
        assert!(matches!(Config::parse("[mesh]\n"), Err(ConfigError::UnknownSection { line: 1, .. })));
        assert!(matches!(
            Config::parse("[coefficients]\nc = \"sin(\"\n"),
            Err(ConfigError::BadValue { line: 2, .. })
        ));
        assert!(matches!(Config::parse("name = x\npreset = P1\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(Config::parse("[flow]\nkind = vortex\n"), Err(ConfigError::BadValue { .. })));
        let missing = Config::load(Path::new("/nonexistent/p.cfg")).unwrap_err();
        assert!(missing.to_string().starts_with("config not found"));
    }

    #[test]
    fn text_round_trip() {
        for name in crate::analysis::presets::NAMES {
            let mut c = Config::from_spec(preset(name).unwrap());
            c.out = PathBuf::from("some dir/out");
            assert_eq!(Config::parse(&c.to_text()).unwrap(), c, "{name}");
        }
    }
}
