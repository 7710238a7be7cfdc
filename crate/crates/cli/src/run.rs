//! Task dispatch and the exit-code contract.

use std::fmt;

use wronski::ncbell::bell_expand;
use wronski::par;
use wronski::verify::{
    range_equivalent, verify_abel_liouville, verify_bell_recursion, verify_bell_wronskian,
    verify_frame_derivatives, verify_reconstructed_ode, verify_replaced_column, SkippedPoint,
};
use wronski::wronskian::{
    reconstruct_coefficients, wronskian_direct, wronskian_via_bell, CoefficientSource, Frame,
    MultiIndex, Reconstructed,
};
use wronski::Error;

use crate::config::{ConfigError, Format, Identity, RunConfig, Task};
use crate::output::{self, *};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Failure = 1,
    Config = 2,
    Degenerate = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// What a run produced: the text for standard output, an optional message
/// for standard error, and the exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: Option<String>,
    pub exit: Exit,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Library(Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Library(e) => e.fmt(f),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Library(e)
    }
}

impl RunError {
    pub fn exit(&self) -> Exit {
        match self {
            RunError::Config(_) => Exit::Config,
            RunError::Library(e) => match e {
                Error::VanishingWronskian { .. }
                | Error::NoUsablePoints { .. }
                | Error::IllConditionedSample { .. } => Exit::Degenerate,
                Error::ValidationFailure { .. } => Exit::Failure,
                _ => Exit::Config,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit() {
            Exit::Degenerate => "degenerate",
            Exit::Failure => "verification-failure",
            _ => "config",
        }
    }
}

fn emit<T: serde::Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Text => text(value),
        Format::Json => format!("{}\n", output::to_json(value)),
    }
}

/// Runs a validated configuration.
pub fn run(cfg: &RunConfig) -> Outcome {
    match dispatch(cfg) {
        Ok(outcome) => outcome,
        Err(e) => error_outcome(cfg.task, cfg.format, &e),
    }
}

/// Renders an error into an outcome with the matching exit status.
pub fn error_outcome(task: Task, format: Format, e: &RunError) -> Outcome {
    let stdout = match format {
        Format::Text => String::new(),
        Format::Json => format!(
            "{}\n",
            output::to_json(&ErrorOutput {
                task: task.name(),
                error: ErrorBody {
                    kind: e.kind(),
                    message: e.to_string(),
                },
            })
        ),
    };
    Outcome {
        stdout,
        stderr: Some(format!("error: {e}")),
        exit: e.exit(),
    }
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome, RunError> {
    match cfg.task {
        Task::BellExpand => bell(cfg),
        Task::Wronskian => wronskian(cfg),
        Task::Reconstruct => reconstruct(cfg),
        Task::Verify => verify(cfg),
        Task::Equiv => equiv(cfg),
    }
}

fn frame(cfg: &RunConfig) -> &Frame {
    cfg.f.as_ref().expect("validated config has functions")
}

fn is_pointwise(e: &Error) -> bool {
    matches!(
        e,
        Error::DomainViolation(_) | Error::VanishingWronskian { .. }
    )
}

fn bell(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let poly = bell_expand(cfg.m)?;
    let out = BellOutput {
        task: Task::BellExpand.name(),
        m: cfg.m,
        expansion: format!("B_{} = {poly}", cfg.m),
        word_count: poly.len(),
        coefficient_sum: poly.coefficient_sum(),
        terms: poly
            .terms()
            .map(|(w, c)| BellTerm {
                word: w.to_string(),
                indices: w.indices().to_vec(),
                coefficient: c,
            })
            .collect(),
    };
    Ok(Outcome {
        stdout: emit(cfg.format, &out, bell_text),
        stderr: None,
        exit: Exit::Success,
    })
}

fn wronskian(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let f = frame(cfg);
    let ks = cfg
        .multi_indices
        .clone()
        .unwrap_or_else(|| vec![MultiIndex::standard(cfg.n)]);
    let mut skipped: Vec<SkippedPoint> = Vec::new();
    let mut values = Vec::with_capacity(ks.len());
    let mut evaluated = vec![false; cfg.points.len()];
    for k in &ks {
        let direct = par::map(&cfg.points, |&t| wronskian_direct(f, k, t));
        let bell = cfg
            .a
            .as_ref()
            .map(|a| par::map(&cfg.points, |&t| wronskian_via_bell(f, a, k, t)));
        let mut keep = |i: usize, r: Result<f64, Error>| -> Result<Option<f64>, RunError> {
            match r {
                Ok(v) => {
                    evaluated[i] = true;
                    Ok(Some(v))
                }
                Err(e) if is_pointwise(&e) => {
                    let t = cfg.points[i];
                    if !skipped.iter().any(|s| s.t == t) {
                        skipped.push(SkippedPoint {
                            t,
                            reason: e.to_string(),
                        });
                    }
                    Ok(None)
                }
                Err(e) => Err(e.into()),
            }
        };
        let direct = direct
            .into_iter()
            .enumerate()
            .map(|(i, r)| keep(i, r))
            .collect::<Result<Vec<_>, _>>()?;
        let bell = match bell {
            Some(b) => Some(
                b.into_iter()
                    .enumerate()
                    .map(|(i, r)| keep(i, r))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        values.push(WronskianRow {
            k: k.to_string(),
            direct,
            bell,
        });
    }
    skipped.sort_by(|a, b| a.t.total_cmp(&b.t));
    if !evaluated.iter().any(|&e| e) {
        return Err(Error::NoUsablePoints {
            skipped: cfg.points.len(),
        }
        .into());
    }
    let out = WronskianOutput {
        task: Task::Wronskian.name(),
        n: cfg.n,
        points: cfg.points.clone(),
        values,
        skipped,
    };
    Ok(Outcome {
        stdout: emit(cfg.format, &out, wronskian_text),
        stderr: None,
        exit: Exit::Success,
    })
}

fn reconstruct(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let f = frame(cfg);
    let results = par::map(&cfg.points, |&t| reconstruct_coefficients(f, t));
    let mut coefficients = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (&t, r) in cfg.points.iter().zip(results) {
        match r {
            Ok(a) => coefficients.push(Some(a)),
            Err(e) if is_pointwise(&e) => {
                skipped.push(SkippedPoint {
                    t,
                    reason: e.to_string(),
                });
                coefficients.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if skipped.len() == cfg.points.len() {
        return Err(Error::NoUsablePoints {
            skipped: skipped.len(),
        }
        .into());
    }
    let out = ReconstructOutput {
        task: Task::Reconstruct.name(),
        n: cfg.n,
        points: cfg.points.clone(),
        coefficients,
        skipped,
    };
    Ok(Outcome {
        stdout: emit(cfg.format, &out, reconstruct_text),
        stderr: None,
        exit: Exit::Success,
    })
}

/// Multi-indices checked by default: every tuple of distinct entries up to
/// `n + 3`, limited to what the declared smoothness admits.
fn default_multi_indices(n: usize, smoothness: Option<usize>) -> Vec<MultiIndex> {
    let mut ks = MultiIndex::all_distinct(n, n + 3);
    if let Some(m) = smoothness {
        ks.retain(|k| k.max() < m + n);
    }
    ks
}

fn verify(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let tol = cfg.tolerance.tol;
    let points = &cfg.points;
    let mut reports = Vec::new();
    for &id in &cfg.identities {
        match id {
            Identity::BellRecursion => {
                let x = cfg.matrix.as_ref().expect("validated config has a matrix");
                reports.push(verify_bell_recursion(x, cfg.jet_order, points, tol)?);
            }
            Identity::FrameDerivatives => {
                let a = cfg.a.as_ref().expect("validated");
                let j_max = a
                    .smoothness()
                    .map_or(cfg.jet_order, |m| cfg.jet_order.min(m));
                reports.push(verify_frame_derivatives(frame(cfg), a, j_max, points, tol)?);
            }
            Identity::BellWronskian => {
                let a = cfg.a.as_ref().expect("validated");
                let ks = cfg
                    .multi_indices
                    .clone()
                    .unwrap_or_else(|| default_multi_indices(cfg.n, a.smoothness()));
                reports.push(verify_bell_wronskian(
                    frame(cfg),
                    Some(a),
                    &ks,
                    points,
                    tol,
                )?);
            }
            Identity::BellWronskianReconstructed => {
                let ks = cfg
                    .multi_indices
                    .clone()
                    .unwrap_or_else(|| default_multi_indices(cfg.n, None));
                reports.push(verify_bell_wronskian(frame(cfg), None, &ks, points, tol)?);
            }
            Identity::ReplacedColumn => {
                let a = cfg.a.as_ref().expect("validated");
                let d_max = a.smoothness().map_or(2, |m| 2.min(m - 1));
                for d in 0..=d_max {
                    reports.push(verify_replaced_column(frame(cfg), a, d, points, tol)?);
                }
            }
            Identity::AbelLiouville => {
                let f = frame(cfg);
                let reconstructed = Reconstructed(f);
                let source: &dyn CoefficientSource = match &cfg.a {
                    Some(a) => a,
                    None => &reconstructed,
                };
                reports.push(verify_abel_liouville(f, source, points, tol)?);
            }
            Identity::ReconstructedOde => {
                reports.push(verify_reconstructed_ode(frame(cfg), points, tol)?);
            }
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let degenerate = reports.iter().any(|r| r.evaluated_points == 0);
    let out = VerifyOutput {
        task: Task::Verify.name(),
        n: cfg.n,
        passed,
        reports,
    };
    let exit = if degenerate {
        Exit::Degenerate
    } else if passed {
        Exit::Success
    } else {
        Exit::Failure
    };
    Ok(Outcome {
        stdout: emit(cfg.format, &out, verify_text),
        stderr: degenerate.then(|| "error: no usable sample points for some identity".into()),
        exit,
    })
}

fn equiv(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let f = frame(cfg);
    let g = cfg.g.as_ref().expect("validated config has g");
    let result = range_equivalent(f, g, &cfg.points, &cfg.tolerance)?;
    let exit = if result.equivalent {
        Exit::Success
    } else {
        Exit::Failure
    };
    let out = EquivOutput {
        task: Task::Equiv.name(),
        n: cfg.n,
        tolerance: cfg.tolerance.tol,
        result,
    };
    Ok(Outcome {
        stdout: emit(cfg.format, &out, equiv_text),
        stderr: None,
        exit,
    })
}
