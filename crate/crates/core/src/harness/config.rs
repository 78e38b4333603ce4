//! Flat `key = value` experiment configuration with `#` comments.
//!
//! ```text
//! objective  = logreg-scalar      # logreg-scalar | logreg-diag | quad
//! data       = banknote.csv       # or `surrogate`, `surrogate:<seed>`
//! u          = 2                  # scalar, comma list, or uniform(lo,hi)
//! seed       = 7                  # required for uniform u
//! algorithms = GD, HB, GD-F, GD-FI, HB-F, HB-FI
//! K          = 6000
//! params     = optimal            # optimal | suboptimal | manual
//! out        = results/
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deriv::Variant;
use crate::error::{Error, Result};
use crate::harness::data::DataSource;
use crate::objective::Coupling;
use crate::solver::{Algorithm, ParamMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Quadratic,
    /// `f_1`: one shared regularisation weight.
    LogRegScalar,
    /// `f_N`: one weight per feature.
    LogRegDiag,
}

impl ObjectiveKind {
    pub fn label(self) -> &'static str {
        match self {
            ObjectiveKind::Quadratic => "quad",
            ObjectiveKind::LogRegScalar => "logreg-scalar",
            ObjectiveKind::LogRegDiag => "logreg-diag",
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(ObjectiveKind::Quadratic),
            "logreg-scalar" => Ok(ObjectiveKind::LogRegScalar),
            "logreg-diag" => Ok(ObjectiveKind::LogRegDiag),
            _ => Err(Error::Config(format!("unknown objective {s:?}"))),
        }
    }
}

/// How the parameter vector `u` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum USpec {
    /// Broadcast to every coordinate.
    Scalar(f64),
    Vector(Vec<f64>),
    /// Independent uniform draws on `[lo, hi)`; needs a seed.
    Uniform { lo: f64, hi: f64 },
}

impl USpec {
    pub fn resolve(&self, dim: usize, seed: Option<u64>) -> Result<DVector<f64>> {
        match self {
            USpec::Scalar(v) => Ok(DVector::from_element(dim, *v)),
            USpec::Vector(v) if v.len() == dim => Ok(DVector::from_column_slice(v)),
            USpec::Vector(v) => Err(Error::Config(format!(
                "u has {} entries, the objective takes {dim}",
                v.len()
            ))),
            USpec::Uniform { lo, hi } => {
                let seed = seed.ok_or_else(|| Error::Config("random u needs a seed".into()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(DVector::from_fn(dim, |_, _| rng.random_range(*lo..*hi)))
            }
        }
    }
}

impl fmt::Display for USpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            USpec::Scalar(v) => write!(f, "{v}"),
            USpec::Vector(v) => write!(f, "{}", join(v)),
            USpec::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
        }
    }
}

impl FromStr for USpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("uniform(").and_then(|r| r.strip_suffix(')')) {
            let b = parse_list(inner, "uniform bounds")?;
            return match b[..] {
                [lo, hi] if lo < hi => Ok(USpec::Uniform { lo, hi }),
                _ => Err(Error::Config(format!("bad uniform bounds {inner:?}"))),
            };
        }
        let v = parse_list(s, "u")?;
        Ok(if v.len() == 1 {
            USpec::Scalar(v[0])
        } else {
            USpec::Vector(v)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamsSpec {
    Optimal,
    /// Optimal step size and momentum, each divided by three.
    Suboptimal,
    Manual { alpha: f64, beta: f64 },
}

impl ParamsSpec {
    pub fn mode(self) -> ParamMode {
        match self {
            ParamsSpec::Optimal => ParamMode::Optimal,
            ParamsSpec::Suboptimal => ParamMode::OptimalOverThree,
            ParamsSpec::Manual { alpha, beta } => ParamMode::Manual { alpha, beta },
        }
    }
}

/// One row of the report: an original solver or a derivative variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Original(Algorithm),
    Derivative(Variant),
}

impl Entry {
    pub fn algorithm(self) -> Algorithm {
        match self {
            Entry::Original(a) => a,
            Entry::Derivative(v) => v.algorithm(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Entry::Original(a) => a.label(),
            Entry::Derivative(v) => v.label(),
        }
    }

    /// The standard accuracy-table rows: both solvers and every GD/HB variant.
    pub fn table_rows() -> Vec<Entry> {
        let mut rows = vec![
            Entry::Original(Algorithm::GradientDescent),
            Entry::Original(Algorithm::HeavyBall),
        ];
        rows.extend(Variant::ALL_GD_HB.iter().map(|&v| Entry::Derivative(v)));
        rows
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Entry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "GD" => Ok(Entry::Original(Algorithm::GradientDescent)),
            "HB" => Ok(Entry::Original(Algorithm::HeavyBall)),
            other => other
                .parse::<Variant>()
                .map(Entry::Derivative)
                .map_err(|_| Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub objective: ObjectiveKind,
    pub data: Option<DataSource>,
    pub quad: Option<QuadSpec>,
    pub u: USpec,
    pub seed: Option<u64>,
    pub entries: Vec<Entry>,
    /// Solver iterations `K`.
    pub iterations: usize,
    /// Inexact-variant iterations; `K` when unset.
    pub inexact_iterations: Option<usize>,
    pub params: ParamsSpec,
    pub out: Option<PathBuf>,
    /// Record per-iteration derivative errors, not just final ones.
    pub record_history: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            objective: ObjectiveKind::LogRegScalar,
            data: None,
            quad: None,
            u: USpec::Scalar(2.0),
            seed: None,
            entries: Entry::table_rows(),
            iterations: 6000,
            inexact_iterations: None,
            params: ParamsSpec::Optimal,
            out: None,
            record_history: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: PathBuf::from("<config>"),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, found {line:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Applies one setting; shared by the file parser and flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad {what} {value:?}"));
        match key {
            "objective" => self.objective = value.parse()?,
            "data" => self.data = Some(DataSource::parse(value)?),
            "u" => self.u = value.parse()?,
            "seed" => self.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "algorithms" | "algo" => {
                self.entries = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "K" => self.iterations = value.parse().map_err(|_| bad("K"))?,
            "inexact_K" => self.inexact_iterations = Some(value.parse().map_err(|_| bad("inexact_K"))?),
            "params" => {
                self.params = match value {
                    "optimal" => ParamsSpec::Optimal,
                    "suboptimal" => ParamsSpec::Suboptimal,
                    "manual" => match self.params {
                        m @ ParamsSpec::Manual { .. } => m,
                        _ => ParamsSpec::Manual {
                            alpha: f64::NAN,
                            beta: 0.0,
                        },
                    },
                    _ => return Err(bad("params")),
                }
            }
            "alpha" | "beta" => {
                let v: f64 = value.parse().map_err(|_| bad(key))?;
                let (mut alpha, mut beta) = match self.params {
                    ParamsSpec::Manual { alpha, beta } => (alpha, beta),
                    _ => (f64::NAN, 0.0),
                };
                if key == "alpha" {
                    alpha = v;
                } else {
                    beta = v;
                }
                self.params = ParamsSpec::Manual { alpha, beta };
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "history" => {
                self.record_history = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("history flag")),
                }
            }
            "quad_h" | "quad_c" | "quad_coupling" => {
                let q = self.quad.get_or_insert(QuadSpec {
                    h: Vec::new(),
                    c: Vec::new(),
                    coupling: Coupling::RegularizerPerCoordinate,
                });
                match key {
                    "quad_h" => q.h = parse_list(value, key)?,
                    "quad_c" => q.c = parse_list(value, key)?,
                    _ => {
                        q.coupling = match value {
                            "regularizer" => Coupling::RegularizerPerCoordinate,
                            "shift" => Coupling::ShiftTarget,
                            _ => return Err(bad("coupling")),
                        }
                    }
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.entries.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if matches!(self.u, USpec::Uniform { .. }) && self.seed.is_none() {
            return Err(Error::Config("random u needs a seed".into()));
        }
        if let ParamsSpec::Manual { alpha, .. } = self.params {
            if alpha.is_nan() {
                return Err(Error::Config("manual params need alpha".into()));
            }
        }
        match self.objective {
            ObjectiveKind::Quadratic => {
                let q = self
                    .quad
                    .as_ref()
                    .ok_or_else(|| Error::Config("quad objective needs quad_h and quad_c".into()))?;
                if q.h.is_empty() || q.h.len() != q.c.len() {
                    return Err(Error::Config("quad_h and quad_c must have equal, nonzero length".into()));
                }
            }
            ObjectiveKind::LogRegScalar | ObjectiveKind::LogRegDiag => {
                if self.data.is_none() {
                    return Err(Error::Config("logistic regression needs a dataset".into()));
                }
            }
        }
        Ok(())
    }

    pub fn inexact_iterations(&self) -> usize {
        self.inexact_iterations.unwrap_or(self.iterations)
    }

    /// The configuration in file syntax; parses back to an equal value.
    pub fn to_config_string(&self) -> String {
        let mut lines = vec![format!("objective = {}", self.objective.label())];
        if let Some(d) = &self.data {
            lines.push(format!("data = {d}"));
        }
        if let Some(q) = &self.quad {
            lines.push(format!("quad_h = {}", join(&q.h)));
            lines.push(format!("quad_c = {}", join(&q.c)));
            let coupling = match q.coupling {
                Coupling::RegularizerPerCoordinate => "regularizer",
                Coupling::ShiftTarget => "shift",
            };
            lines.push(format!("quad_coupling = {coupling}"));
        }
        lines.push(format!("u = {}", self.u));
        if let Some(s) = self.seed {
            lines.push(format!("seed = {s}"));
        }
        let names: Vec<&str> = self.entries.iter().map(|e| e.label()).collect();
        lines.push(format!("algorithms = {}", names.join(", ")));
        lines.push(format!("K = {}", self.iterations));
        if let Some(k) = self.inexact_iterations {
            lines.push(format!("inexact_K = {k}"));
        }
        match self.params {
            ParamsSpec::Optimal => lines.push("params = optimal".into()),
            ParamsSpec::Suboptimal => lines.push("params = suboptimal".into()),
            ParamsSpec::Manual { alpha, beta } => {
                lines.push(format!("alpha = {alpha:e}"));
                lines.push(format!("beta = {beta:e}"));
            }
        }
        if let Some(o) = &self.out {
            lines.push(format!("out = {}", o.display()));
        }
        lines.push(format!("history = {}", self.record_history));
        lines.join("\n") + "\n"
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}
