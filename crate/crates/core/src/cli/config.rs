use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kernels::{KernelKind, SpatialDerivative};

/// A configuration value outside its window.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Ml,
    Kernel,
    Solve,
    Verify,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ml => "ml",
            Command::Kernel => "kernel",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Bench => "bench",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spectral,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Forcing {
    /// f = sin(k x1), exact solution (1 - E(-t^alpha k^2)) sin(k x1) / k^2
    SingleMode,
    /// u = t^2 sin(k x1)
    Manufactured,
    /// seeded band-limited forcing, no exact solution
    BandLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Envelopes,
    KernelL1,
    /// envelopes and kernel L1 bounds
    KernelBounds,
    Operators,
    Im,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BenchOp {
    #[value(name = "kernel_eval")]
    KernelEval,
    #[value(name = "mittag_leffler")]
    MittagLeffler,
}

/// Sample points: `start:end:count` (inclusive, evenly spaced) or a comma list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Points {
    Range { start: f64, end: f64, count: usize },
    List(Vec<f64>),
}

impl Points {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Points::Range { start, end, count } => match count {
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            },
            Points::List(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Points::Range { count, .. } => *count,
            Points::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for Points {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            3 => {
                let count = parts[2]
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("`{}` is not a point count", parts[2]))?;
                Ok(Points::Range {
                    start: num(parts[0])?,
                    end: num(parts[1])?,
                    count,
                })
            }
            1 => Ok(Points::List(s.split(',').map(num).collect::<Result<_, _>>()?)),
            _ => Err(format!("`{s}` is neither start:end:count nor a comma list")),
        }
    }
}

impl TryFrom<String> for Points {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Points> for String {
    fn from(p: Points) -> String {
        match p {
            Points::Range { start, end, count } => format!("{start}:{end}:{count}"),
            Points::List(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        }
    }
}

/// Spatial derivative written as `none`, `grad:i`, `hess:i:j` or `laplacian`
/// with 1-based axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Spatial(pub SpatialDerivative);

impl FromStr for Spatial {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let axis = |v: &str| match v.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(format!("`{v}` is not an axis (1-based)")),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let d = match parts.as_slice() {
            ["none"] => SpatialDerivative::None,
            ["laplacian"] => SpatialDerivative::Laplacian,
            ["grad", i] => SpatialDerivative::Gradient(axis(i)?),
            ["hess", i, j] => SpatialDerivative::Hessian(axis(i)?, axis(j)?),
            _ => return Err(format!("`{s}` is not one of none, grad:i, hess:i:j, laplacian")),
        };
        Ok(Spatial(d))
    }
}

impl TryFrom<String> for Spatial {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Spatial> for String {
    fn from(s: Spatial) -> String {
        match s.0 {
            SpatialDerivative::None => "none".into(),
            SpatialDerivative::Laplacian => "laplacian".into(),
            SpatialDerivative::Gradient(i) => format!("grad:{}", i + 1),
            SpatialDerivative::Hessian(i, j) => format!("hess:{}:{}", i + 1, j + 1),
        }
    }
}

/// Everything a run depends on. Two equal configs produce byte-identical
/// artifacts; the output directory is deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    /// second Mittag-Leffler parameter
    pub beta: f64,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    /// time horizon T
    pub horizon: f64,
    /// side of the periodic box
    pub length: f64,
    pub nx: usize,
    pub nt: usize,
    pub kind: KernelKind,
    /// time derivative order of the kernel
    pub n: usize,
    pub spatial: Spatial,
    /// kernel evaluation time
    pub t: f64,
    /// distances along the first axis
    pub xs: Points,
    /// Mittag-Leffler arguments
    pub zs: Points,
    pub scheme: Scheme,
    pub forcing: Forcing,
    pub suite: Suite,
    pub samples: usize,
    /// envelope grid points per side
    pub points: usize,
    pub op: BenchOp,
    pub repeats: usize,
    pub ml_tol: f64,
    pub series_tol: f64,
    pub series_terms: usize,
    pub contour_tol: f64,
    pub contour_nodes: usize,
    pub seed: u64,
    pub format: Format,
    /// main artifact name inside the output directory
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Kernel,
            alpha: 0.5,
            beta: 1.0,
            d: 1,
            p: 2.0,
            q: 2.0,
            horizon: 1.0,
            length: 2.0 * PI,
            nx: 64,
            nt: 64,
            kind: KernelKind::P,
            n: 0,
            spatial: Spatial(SpatialDerivative::None),
            t: 1.0,
            xs: Points::Range {
                start: 0.1,
                end: 4.0,
                count: 64,
            },
            zs: Points::Range {
                start: -20.0,
                end: 5.0,
                count: 26,
            },
            scheme: Scheme::Spectral,
            forcing: Forcing::SingleMode,
            suite: Suite::KernelBounds,
            samples: 50,
            points: 200,
            op: BenchOp::KernelEval,
            repeats: 5,
            ml_tol: 1e-13,
            series_tol: 1e-14,
            series_terms: 400,
            contour_tol: 1e-12,
            contour_nodes: 400_000,
            seed: 7,
            format: Format::Csv,
            output: None,
        }
    }
}

fn open_window(field: &str, v: f64, lo: f64, hi: f64, shown: &str) -> Result<(), ConfigError> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{v} lies outside {field} ∈ {shown}")))
    }
}

fn at_least(field: &str, v: usize, lo: usize) -> Result<(), ConfigError> {
    if v >= lo {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{v} lies outside {field} >= {lo}")))
    }
}

impl RunConfig {
    pub fn for_command(command: Command) -> Self {
        RunConfig {
            command,
            ..RunConfig::default()
        }
    }

    /// Parses a JSON document; the `command` key is required.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
        if value.get("command").is_none() {
            return Err(ConfigError::new("command", "required, one of ml, kernel, solve, verify, bench"));
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError::new("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field against the window of the module it feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        open_window("alpha", self.alpha, 0.0, 2.0, "(0, 2)")?;
        open_window("beta", self.beta, 0.0, f64::INFINITY, "(0, inf)")?;
        if !(1..=3).contains(&self.d) {
            return Err(ConfigError::new("d", format!("{} lies outside d ∈ {{1, 2, 3}}", self.d)));
        }
        open_window("p", self.p, 1.0, f64::INFINITY, "(1, inf)")?;
        open_window("q", self.q, 1.0, f64::INFINITY, "(1, inf)")?;
        open_window("horizon", self.horizon, 0.0, f64::INFINITY, "(0, inf)")?;
        open_window("length", self.length, 0.0, f64::INFINITY, "(0, inf)")?;
        open_window("t", self.t, 0.0, f64::INFINITY, "(0, inf)")?;
        at_least("nx", self.nx, 4)?;
        at_least("nt", self.nt, 1)?;
        if self.command == Command::Verify && (self.nt < 4 || self.nt % 2 != 0) {
            return Err(ConfigError::new("nt", format!("{} must be even and >= 4 for verify", self.nt)));
        }
        let m = match self.spatial.0 {
            SpatialDerivative::Gradient(i) => i + 1,
            SpatialDerivative::Hessian(i, j) => i.max(j) + 1,
            _ => 0,
        };
        if m > self.d {
            return Err(ConfigError::new("spatial", format!("axis {m} lies outside 1..={}", self.d)));
        }
        if self.n > 2 {
            return Err(ConfigError::new("n", format!("{} lies outside n ∈ {{0, 1, 2}}", self.n)));
        }
        if self.xs.is_empty() {
            return Err(ConfigError::new("xs", "needs at least one point"));
        }
        if let Some(x) = self.xs.values().into_iter().find(|x| !(x.is_finite() && *x != 0.0)) {
            return Err(ConfigError::new("xs", format!("{x} lies outside x ∈ R \\ {{0}}")));
        }
        if self.zs.is_empty() {
            return Err(ConfigError::new("zs", "needs at least one point"));
        }
        if let Some(z) = self.zs.values().into_iter().find(|z| !z.is_finite()) {
            return Err(ConfigError::new("zs", format!("{z} is not finite")));
        }
        at_least("samples", self.samples, 1)?;
        at_least("points", self.points, 2)?;
        at_least("repeats", self.repeats, 1)?;
        open_window("ml_tol", self.ml_tol, 0.0, 1e-2, "(0, 1e-2)")?;
        open_window("series_tol", self.series_tol, 0.0, 1e-2, "(0, 1e-2)")?;
        open_window("contour_tol", self.contour_tol, 0.0, 1e-2, "(0, 1e-2)")?;
        at_least("series_terms", self.series_terms, 1)?;
        at_least("contour_nodes", self.contour_nodes, 16)?;
        if let Some(name) = &self.output {
            if name.is_empty() || name.contains('/') || name.contains('\\') || name == "." || name == ".." {
                return Err(ConfigError::new("output", format!("`{name}` must be a plain file name")));
            }
        }
        Ok(())
    }

    /// Main artifact name: `output` or a per-command default.
    pub fn artifact_name(&self) -> String {
        if let Some(name) = &self.output {
            return name.clone();
        }
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "jsonl",
        };
        match self.command {
            Command::Verify => "reports.jsonl".into(),
            c => format!("{}.{ext}", c.name()),
        }
    }
}
