//! Run configuration: the JSON document accepted by `--config`, command-line
//! overrides, and validation into a [`RunConfig`].

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use wronski::exprlang::{Interval, VectorFunctionSpec};
use wronski::ncbell::DEFAULT_MAX_ORDER;
use wronski::verify::{EquivalenceOptions, DEFAULT_ABS_FLOOR, DEFAULT_TOL, MAX_CONDITION};
use wronski::wronskian::{CoefficientVector, Frame, MultiIndex, DEFAULT_SAMPLE_COUNT};

/// Highest derivative order checked by the derivative identities by default.
pub const DEFAULT_JET_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    BellExpand,
    Wronskian,
    Reconstruct,
    Verify,
    Equiv,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::BellExpand => "bell-expand",
            Task::Wronskian => "wronskian",
            Task::Reconstruct => "reconstruct",
            Task::Verify => "verify",
            Task::Equiv => "equiv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    BellRecursion,
    FrameDerivatives,
    BellWronskian,
    BellWronskianReconstructed,
    ReplacedColumn,
    AbelLiouville,
    ReconstructedOde,
}

impl Identity {
    pub fn name(self) -> &'static str {
        match self {
            Identity::BellRecursion => "bell-recursion",
            Identity::FrameDerivatives => "frame-derivatives",
            Identity::BellWronskian => "bell-wronskian",
            Identity::BellWronskianReconstructed => "bell-wronskian-reconstructed",
            Identity::ReplacedColumn => "replaced-column",
            Identity::AbelLiouville => "abel-liouville",
            Identity::ReconstructedOde => "reconstructed-ode",
        }
    }

    fn needs_coefficients(self) -> bool {
        matches!(
            self,
            Identity::FrameDerivatives | Identity::BellWronskian | Identity::ReplacedColumn
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Either a point count for the automatic grid or an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Points {
    Count(usize),
    List(Vec<f64>),
}

impl Points {
    /// Parses `N` as a count and a comma-separated list of reals as points;
    /// a single integer point needs a trailing comma (`0,`).
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if let Ok(n) = s.trim().parse::<usize>() {
            return Ok(Points::Count(n));
        }
        let s = s.trim().strip_suffix(',').unwrap_or(s);
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Points::List)
    }
}

/// Interval end: a number or one of `"inf"`, `"+inf"`, `"-inf"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Named(String),
}

impl Bound {
    fn value(&self) -> Option<f64> {
        match self {
            Bound::Number(x) => Some(*x),
            Bound::Named(s) => match s.trim() {
                "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
                "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
                other => other.parse().ok(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub rel: Option<f64>,
    pub abs_floor: Option<f64>,
    pub max_condition: Option<f64>,
}

/// The document as written, before validation. Every field is optional
/// here; which ones are required depends on the task.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub task: Option<Task>,
    pub n: Option<usize>,
    pub functions: Option<Vec<String>>,
    pub g: Option<Vec<String>>,
    pub coefficients: Option<Vec<String>>,
    pub smoothness: Option<usize>,
    pub matrix: Option<Vec<String>>,
    pub multi_indices: Option<Vec<Vec<usize>>>,
    pub domain: Option<[Bound; 2]>,
    pub points: Option<Points>,
    pub jet_order: Option<usize>,
    pub tolerance: Option<Tolerance>,
    pub identities: Option<Vec<Identity>>,
    pub m: Option<usize>,
    pub format: Option<Format>,
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." {
                missing_or_unknown_field(&inner.to_string()).unwrap_or_default()
            } else {
                path
            };
            ConfigError::new(field, inner.to_string())
        })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: RawConfig) -> RawConfig {
        let tolerance = match (self.tolerance, over.tolerance) {
            (Some(a), Some(b)) => Some(Tolerance {
                rel: b.rel.or(a.rel),
                abs_floor: b.abs_floor.or(a.abs_floor),
                max_condition: b.max_condition.or(a.max_condition),
            }),
            (a, b) => b.or(a),
        };
        RawConfig {
            task: over.task.or(self.task),
            n: over.n.or(self.n),
            functions: over.functions.or(self.functions),
            g: over.g.or(self.g),
            coefficients: over.coefficients.or(self.coefficients),
            smoothness: over.smoothness.or(self.smoothness),
            matrix: over.matrix.or(self.matrix),
            multi_indices: over.multi_indices.or(self.multi_indices),
            domain: over.domain.or(self.domain),
            points: over.points.or(self.points),
            jet_order: over.jet_order.or(self.jet_order),
            tolerance,
            identities: over.identities.or(self.identities),
            m: over.m.or(self.m),
            format: over.format.or(self.format),
        }
    }
}

// Top-level serde messages carry the key in backticks.
fn missing_or_unknown_field(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// A configuration problem, tagged with the offending key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error in `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub n: usize,
    pub f: Option<Frame>,
    pub g: Option<Frame>,
    pub a: Option<CoefficientVector>,
    pub matrix: Option<VectorFunctionSpec>,
    pub multi_indices: Option<Vec<MultiIndex>>,
    pub domain: Interval,
    pub points: Vec<f64>,
    pub jet_order: usize,
    pub tolerance: EquivalenceOptions,
    pub identities: Vec<Identity>,
    pub m: usize,
    pub format: Format,
}

/// Reads and validates a config file; the task comes from the file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    read_raw(path)?.validate()
}

pub fn read_raw(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    RawConfig::from_json(&text)
}

fn require<T>(value: Option<T>, field: &str, task: Task) -> Result<T, ConfigError> {
    value.ok_or_else(|| {
        ConfigError::new(
            field,
            format!("missing field required by task {}", task.name()),
        )
    })
}

fn positive(x: f64, field: &str) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(
            field,
            format!("must be a positive number, got {x}"),
        ))
    }
}

fn parse_vector(
    sources: &[String],
    domain: Interval,
    field: &str,
) -> Result<VectorFunctionSpec, ConfigError> {
    for (i, s) in sources.iter().enumerate() {
        wronski::exprlang::parse(s)
            .map_err(|e| ConfigError::new(format!("{field}[{i}]"), e.to_string()))?;
    }
    VectorFunctionSpec::parse(sources, domain).map_err(|e| ConfigError::new(field, e.to_string()))
}

fn check_len(sources: &[String], n: usize, field: &str) -> Result<(), ConfigError> {
    if sources.len() != n {
        return Err(ConfigError::new(
            field,
            format!("expected n = {n} expressions, found {}", sources.len()),
        ));
    }
    Ok(())
}

impl RawConfig {
    pub fn validate(self) -> Result<RunConfig, ConfigError> {
        let task = self
            .task
            .ok_or_else(|| ConfigError::new("task", "missing field `task`"))?;
        let domain = match &self.domain {
            None => Interval::REAL_LINE,
            Some([lo, hi]) => {
                let lo_v = lo
                    .value()
                    .ok_or_else(|| ConfigError::new("domain[0]", "not a number or infinity"))?;
                let hi_v = hi
                    .value()
                    .ok_or_else(|| ConfigError::new("domain[1]", "not a number or infinity"))?;
                Interval::new(lo_v, hi_v).map_err(|e| ConfigError::new("domain", e.to_string()))?
            }
        };
        let tol = self.tolerance.clone().unwrap_or_default();
        let tolerance = EquivalenceOptions {
            tol: positive(tol.rel.unwrap_or(DEFAULT_TOL), "tolerance.rel")?,
            abs_floor: positive(
                tol.abs_floor.unwrap_or(DEFAULT_ABS_FLOOR),
                "tolerance.abs_floor",
            )?,
            max_condition: positive(
                tol.max_condition.unwrap_or(MAX_CONDITION),
                "tolerance.max_condition",
            )?,
        };
        let points = match &self.points {
            None => domain.sample_grid(DEFAULT_SAMPLE_COUNT),
            Some(Points::Count(0)) => {
                return Err(ConfigError::new("points", "point count must be at least 1"))
            }
            Some(Points::Count(c)) => domain.sample_grid(*c),
            Some(Points::List(list)) => {
                if list.is_empty() {
                    return Err(ConfigError::new("points", "point list is empty"));
                }
                for (i, &t) in list.iter().enumerate() {
                    if !domain.contains(t) {
                        return Err(ConfigError::new(
                            format!("points[{i}]"),
                            format!("{t} is outside the domain"),
                        ));
                    }
                }
                list.clone()
            }
        };
        let jet_order = self.jet_order.unwrap_or(DEFAULT_JET_ORDER);
        let format = self.format.unwrap_or_default();

        if task == Task::BellExpand {
            let m = require(self.m, "m", task)?;
            if m > DEFAULT_MAX_ORDER {
                return Err(ConfigError::new(
                    "m",
                    format!("order {m} exceeds the maximum {DEFAULT_MAX_ORDER}"),
                ));
            }
            return Ok(RunConfig {
                task,
                n: 0,
                f: None,
                g: None,
                a: None,
                matrix: None,
                multi_indices: None,
                domain,
                points,
                jet_order,
                tolerance,
                identities: Vec::new(),
                m,
                format,
            });
        }

        let matrix = match &self.matrix {
            None => None,
            Some(entries) => {
                let side = (entries.len() as f64).sqrt().round() as usize;
                if side == 0 || side * side != entries.len() {
                    return Err(ConfigError::new(
                        "matrix",
                        format!(
                            "expected a square number of entries, found {}",
                            entries.len()
                        ),
                    ));
                }
                Some(parse_vector(entries, domain, "matrix")?)
            }
        };
        let matrix_only = task == Task::Verify
            && self.functions.is_none()
            && matrix.is_some()
            && self
                .identities
                .as_ref()
                .is_some_and(|ids| ids.iter().all(|&i| i == Identity::BellRecursion));

        let (n, f) = if matrix_only {
            let side = matrix
                .as_ref()
                .map_or(0, |x| (x.dim() as f64).sqrt().round() as usize);
            (side, None)
        } else {
            let sources = require(self.functions.as_ref(), "functions", task)?;
            let n = self.n.unwrap_or(sources.len());
            if n == 0 {
                return Err(ConfigError::new("n", "must be at least 1"));
            }
            check_len(sources, n, "functions")?;
            (
                n,
                Some(Frame::new(parse_vector(sources, domain, "functions")?)),
            )
        };

        let g = match (task, &self.g) {
            (Task::Equiv, None) => return Err(require::<()>(None, "g", task).unwrap_err()),
            (_, Some(sources)) => {
                check_len(sources, n, "g")?;
                Some(Frame::new(parse_vector(sources, domain, "g")?))
            }
            (_, None) => None,
        };

        let a = match &self.coefficients {
            Some(sources) => {
                check_len(sources, n, "coefficients")?;
                let a = CoefficientVector::new(parse_vector(sources, domain, "coefficients")?);
                Some(match self.smoothness {
                    Some(0) => return Err(ConfigError::new("smoothness", "must be at least 1")),
                    Some(m) => a.with_smoothness(m),
                    None => a,
                })
            }
            None if self.smoothness.is_some() => {
                return Err(ConfigError::new(
                    "smoothness",
                    "only meaningful together with `coefficients`",
                ))
            }
            None => None,
        };

        let multi_indices = match &self.multi_indices {
            None => None,
            Some(list) => {
                let mut out = Vec::with_capacity(list.len());
                for (i, k) in list.iter().enumerate() {
                    if k.len() != n {
                        return Err(ConfigError::new(
                            format!("multi_indices[{i}]"),
                            format!("expected {n} entries, found {}", k.len()),
                        ));
                    }
                    out.push(MultiIndex::new(k.clone()));
                }
                Some(out)
            }
        };

        let identities = match (&self.identities, task) {
            (Some(ids), _) => {
                for (i, id) in ids.iter().enumerate() {
                    if id.needs_coefficients() && a.is_none() {
                        return Err(ConfigError::new(
                            "coefficients",
                            format!("required by identities[{i}] = {}", id.name()),
                        ));
                    }
                    if *id == Identity::BellRecursion && matrix.is_none() {
                        return Err(ConfigError::new(
                            "matrix",
                            format!("required by identities[{i}] = {}", id.name()),
                        ));
                    }
                }
                ids.clone()
            }
            (None, Task::Verify) => default_identities(a.is_some(), matrix.is_some()),
            (None, _) => Vec::new(),
        };

        Ok(RunConfig {
            task,
            n,
            f,
            g,
            a,
            matrix,
            multi_indices,
            domain,
            points,
            jet_order,
            tolerance,
            identities,
            m: self.m.unwrap_or(0),
            format,
        })
    }
}

fn default_identities(with_coefficients: bool, with_matrix: bool) -> Vec<Identity> {
    let mut ids = Vec::new();
    if with_matrix {
        ids.push(Identity::BellRecursion);
    }
    if with_coefficients {
        ids.extend([
            Identity::FrameDerivatives,
            Identity::BellWronskian,
            Identity::ReplacedColumn,
        ]);
    }
    ids.extend([
        Identity::AbelLiouville,
        Identity::BellWronskianReconstructed,
        Identity::ReconstructedOde,
    ]);
    ids
}
