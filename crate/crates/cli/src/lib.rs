//! Command-line front end for the `wronski` library.
//!
//! [`execute`] turns parsed arguments into an [`run::Outcome`]; the binary
//! only prints it and exits with its status.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod output;
pub mod run;

use config::{read_raw, Bound, Format, Identity, Points, RawConfig, Task, Tolerance};
use run::{error_outcome, Outcome, RunError};

#[derive(Debug, Parser)]
#[command(
    name = "wronski",
    version,
    about = "Noncommutative Bell polynomials, generalized Wronskians and range equivalence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand the Bell polynomial B_m
    #[command(name = "bell-expand", alias = "bell")]
    BellExpand(Options),
    /// Evaluate generalized Wronskians at sample points
    Wronskian(Options),
    /// Reconstruct the ODE coefficients a_1..a_n from a frame
    Reconstruct(Options),
    /// Check the identities and report residuals
    Verify(Options),
    /// Decide whether f = A g for a constant nonsingular A
    Equiv(Options),
    /// Run the task named in the config file
    Run(Options),
}

impl Command {
    fn parts(&self) -> (Option<Task>, &Options) {
        match self {
            Command::BellExpand(o) => (Some(Task::BellExpand), o),
            Command::Wronskian(o) => (Some(Task::Wronskian), o),
            Command::Reconstruct(o) => (Some(Task::Reconstruct), o),
            Command::Verify(o) => (Some(Task::Verify), o),
            Command::Equiv(o) => (Some(Task::Equiv), o),
            Command::Run(o) => (None, o),
        }
    }
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Args)]
pub struct Options {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Bell order for bell-expand
    #[arg(long)]
    pub m: Option<usize>,
    /// Relative tolerance
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
    /// Absolute floor for comparing values near zero
    #[arg(long, value_name = "X")]
    pub abs_floor: Option<f64>,
    /// Point count for the automatic grid, or a comma-separated point list
    #[arg(long, value_name = "N|LIST", allow_hyphen_values = true, value_parser = Points::parse_flag)]
    pub points: Option<Points>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Highest derivative order checked by the derivative identities
    #[arg(long, value_name = "N")]
    pub jet_order: Option<usize>,
    /// Component of f (repeat once per component)
    #[arg(long = "f", value_name = "EXPR", allow_hyphen_values = true)]
    pub f: Vec<String>,
    /// Component of g (repeat once per component)
    #[arg(long = "g", value_name = "EXPR", allow_hyphen_values = true)]
    pub g: Vec<String>,
    /// Coefficient a_j (repeat once per coefficient)
    #[arg(long = "a", value_name = "EXPR", allow_hyphen_values = true)]
    pub a: Vec<String>,
    /// Declared smoothness m of the coefficients
    #[arg(long)]
    pub smoothness: Option<usize>,
    /// Entry of the matrix function X, row by row (repeat per entry)
    #[arg(long = "x", value_name = "EXPR", allow_hyphen_values = true)]
    pub x: Vec<String>,
    /// Multi-index such as 2,0 (repeatable)
    #[arg(long = "k", value_name = "K1,..,Kn", value_parser = parse_multi_index)]
    pub k: Vec<Vec<usize>>,
    /// Domain as LO,HI; ends may be inf or -inf
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true, value_parser = parse_domain)]
    pub domain: Option<(String, String)>,
    /// Identity to check (repeatable); defaults to every applicable one
    #[arg(long = "identity", value_enum)]
    pub identities: Vec<Identity>,
}

fn parse_multi_index(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_domain(s: &str) -> Result<(String, String), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| "expected LO,HI".to_string())?;
    Ok((lo.trim().to_string(), hi.trim().to_string()))
}

fn non_empty(v: &[String]) -> Option<Vec<String>> {
    (!v.is_empty()).then(|| v.to_vec())
}

impl Options {
    fn overrides(&self, task: Option<Task>) -> RawConfig {
        let tolerance = (self.tol.is_some() || self.abs_floor.is_some()).then_some(Tolerance {
            rel: self.tol,
            abs_floor: self.abs_floor,
            max_condition: None,
        });
        RawConfig {
            task,
            n: None,
            functions: non_empty(&self.f),
            g: non_empty(&self.g),
            coefficients: non_empty(&self.a),
            smoothness: self.smoothness,
            matrix: non_empty(&self.x),
            multi_indices: (!self.k.is_empty()).then(|| self.k.clone()),
            domain: self
                .domain
                .clone()
                .map(|(lo, hi)| [Bound::Named(lo), Bound::Named(hi)]),
            points: self.points.clone(),
            jet_order: self.jet_order,
            tolerance,
            identities: (!self.identities.is_empty()).then(|| self.identities.clone()),
            m: self.m,
            format: self.format,
        }
    }
}

/// Loads, merges and validates the configuration, then runs it.
pub fn execute(cli: &Cli) -> Outcome {
    let (task, opts) = cli.command.parts();
    let fallback_format = opts.format.unwrap_or_default();
    let fail = |task: Option<Task>, format: Format, e: RunError| {
        error_outcome(task.unwrap_or(Task::Verify), format, &e)
    };
    let base = match &opts.config {
        Some(path) => match read_raw(path) {
            Ok(raw) => raw,
            Err(e) => return fail(task, fallback_format, e.into()),
        },
        None => RawConfig::default(),
    };
    let format = opts.format.or(base.format).unwrap_or_default();
    if let (Some(sub), Some(file)) = (task, base.task) {
        if sub != file {
            let e = config::ConfigError::new(
                "task",
                format!(
                    "config declares task {} but the subcommand is {}",
                    file.name(),
                    sub.name()
                ),
            );
            return fail(task, format, e.into());
        }
    }
    let task = task.or(base.task);
    let merged = base.merged(opts.overrides(task));
    match merged.validate() {
        Ok(cfg) => run::run(&cfg),
        Err(e) => fail(task, format, e.into()),
    }
}
