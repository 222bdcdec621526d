//! Command-line front end.
//!
//! Exit codes: 0 affirmative (in, equivalent, fully compressed, success),
//! 1 negative (out, not equivalent, not fully compressed), 2 marginal or
//! indeterminate, 3 error. Every flag can also be set through an
//! environment variable with the `MATRANGE_` prefix; flags win.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::convexity::{self, MembershipVerdict, Status};
use crate::decomp::irreducible_decomposition;
use crate::error::{Error, Result};
use crate::extreme::{self, MinimalReport};
use crate::io;
use crate::matcore::MatrixTuple;
use crate::Tolerances;

pub const EXIT_AFFIRMATIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_MARGINAL: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryPolicy {
    In,
    Marginal,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Feasibility tolerance of the semidefinite programs.
    #[arg(long = "tol", global = true, env = "MATRANGE_TOL", default_value_t = 1e-7)]
    pub feas_tol: f64,
    #[arg(long, global = true, env = "MATRANGE_DECOMP_TOL", default_value_t = 1e-8)]
    pub decomp_tol: f64,
    #[arg(long, global = true, env = "MATRANGE_EQUIV_TOL", default_value_t = 1e-6)]
    pub equiv_tol: f64,
    #[arg(long, global = true, env = "MATRANGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "format", global = true, env = "MATRANGE_FORMAT", value_enum, default_value_t = OutputFormat::Json)]
    pub output_format: OutputFormat,
    /// How points on the boundary of a range are reported.
    #[arg(long = "boundary", global = true, env = "MATRANGE_BOUNDARY", value_enum, default_value_t = BoundaryPolicy::In)]
    pub boundary_policy: BoundaryPolicy,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            decomp_tol: 1e-8,
            equiv_tol: 1e-6,
            seed: 0,
            output_format: OutputFormat::Json,
            boundary_policy: BoundaryPolicy::In,
        }
    }
}

impl RunConfig {
    pub fn tolerances(&self) -> Result<Tolerances> {
        for (name, v) in [("tol", self.feas_tol), ("decomp-tol", self.decomp_tol), ("equiv-tol", self.equiv_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parse(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(Tolerances {
            feas_tol: self.feas_tol,
            decomp_tol: self.decomp_tol,
            equiv_tol: self.equiv_tol,
            boundary_in: self.boundary_policy == BoundaryPolicy::In,
            ..Tolerances::default()
        })
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Irreducible block decomposition with multiplicities.
    Decompose {
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Minimal presentation with classification of every summand.
    Minimize {
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Is the point in the matrix range?
    Member {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        range: PathBuf,
    },
    /// Is W(inner) contained in W(outer)?
    Include {
        #[arg(long)]
        inner: PathBuf,
        #[arg(long)]
        outer: PathBuf,
    },
    /// Separating pencil for a point outside the range.
    Separate {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        range: PathBuf,
    },
    /// Unitary carrying one minimal tuple onto another.
    Equiv {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
    },
    /// Membership in Wmin of a polytope given by vertices.
    Wmin {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        polytope: PathBuf,
    },
    /// Membership in Wmax of a polytope given by halfspaces.
    Wmax {
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        halfspaces: PathBuf,
    },
    /// Whether the tuple equals its minimal presentation.
    FullyCompressed {
        #[arg(long)]
        tuple: PathBuf,
    },
}

#[derive(Debug, Clone, Parser)]
#[command(name = "matrange", version, about = "Matrix ranges, minimal presentations and unitary recovery")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

pub fn load_tuple(path: &Path) -> Result<MatrixTuple> {
    let text = std::fs::read_to_string(path)?;
    io::parse_tuple(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::DimensionMismatch(msg) => Error::DimensionMismatch(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Exit code and rendered report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub code: i32,
    pub report: String,
}

fn render<T: Serialize>(config: &RunConfig, json: &T, text: impl FnOnce() -> String) -> String {
    match config.output_format {
        OutputFormat::Json => io::to_pretty(json),
        OutputFormat::Text => text(),
    }
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::In => EXIT_AFFIRMATIVE,
        Status::Out => EXIT_NEGATIVE,
        Status::Marginal => EXIT_MARGINAL,
    }
}

fn verdict_output(config: &RunConfig, v: &MembershipVerdict) -> RunOutput {
    let report = render(config, &io::verdict_json(v), || {
        let mut s = format!("status: {:?}\nmargin: {:.6e}\n", v.status, v.margin).to_lowercase();
        if let Some(p) = &v.separator {
            let _ = writeln!(s, "separator: level {} pencil with {} coefficients", p.level, p.d());
        }
        if let Some(w) = &v.witness {
            let _ = writeln!(s, "witness: Choi matrix of side {}", w.choi.nrows());
        }
        s
    });
    RunOutput { code: status_code(v.status), report }
}

fn report_output(config: &RunConfig, r: &MinimalReport, code: i32) -> RunOutput {
    let samples = convexity::first_level_samples(&r.minimal, 64, config.seed);
    let report = render(config, &io::report_json(r, &samples), || r.render_text());
    RunOutput { code, report }
}

#[derive(Serialize)]
struct ErrorJson {
    status: &'static str,
    error: String,
}

#[derive(Serialize)]
struct FlagJson<T: Serialize> {
    status: &'static str,
    #[serde(flatten)]
    body: T,
}

fn error_output(config: &RunConfig, e: &Error) -> RunOutput {
    let code = match e {
        Error::Indeterminate(_) => EXIT_MARGINAL,
        _ => EXIT_ERROR,
    };
    let status = if code == EXIT_MARGINAL { "indeterminate" } else { "error" };
    let report = render(config, &ErrorJson { status, error: e.to_string() }, || format!("{status}: {e}\n"));
    RunOutput { code, report }
}

pub fn run(command: &Command, config: &RunConfig) -> RunOutput {
    match run_inner(command, config) {
        Ok(out) => out,
        Err(e) => error_output(config, &e),
    }
}

fn run_inner(command: &Command, config: &RunConfig) -> Result<RunOutput> {
    let tol = config.tolerances()?;
    Ok(match command {
        Command::Decompose { tuple } => {
            let t = load_tuple(tuple)?;
            let d = irreducible_decomposition(&t, config.seed, &tol)?;
            let code = if d.blocks.iter().any(|b| b.marginal) { EXIT_MARGINAL } else { EXIT_AFFIRMATIVE };
            let report = render(config, &io::decomposition_json(&d), || {
                let mut s = format!("blocks: {}\nresidual: {:.3e}\n", d.blocks.len(), d.residual());
                for (i, b) in d.blocks.iter().enumerate() {
                    let flag = if b.marginal { " (marginal)" } else { "" };
                    let _ = writeln!(s, "  [{i}] size {} multiplicity {}{flag}", b.tuple.n(), b.multiplicity);
                }
                s
            });
            RunOutput { code, report }
        }
        Command::Minimize { tuple } => {
            let t = load_tuple(tuple)?;
            let r = extreme::minimal_presentation(&t, config.seed, &tol)?;
            report_output(config, &r, EXIT_AFFIRMATIVE)
        }
        Command::FullyCompressed { tuple } => {
            let t = load_tuple(tuple)?;
            let (full, r) = extreme::is_fully_compressed(&t, config.seed, &tol)?;
            report_output(config, &r, if full { EXIT_AFFIRMATIVE } else { EXIT_NEGATIVE })
        }
        Command::Member { point, range } => {
            let v = convexity::membership(&load_tuple(point)?, &load_tuple(range)?, &tol)?;
            verdict_output(config, &v)
        }
        Command::Include { inner, outer } => {
            let v = convexity::inclusion(&load_tuple(inner)?, &load_tuple(outer)?, &tol)?;
            verdict_output(config, &v)
        }
        Command::Separate { point, range } => {
            let v = convexity::membership(&load_tuple(point)?, &load_tuple(range)?, &tol)?;
            let mut out = verdict_output(config, &v);
            // A pencil is the affirmative answer here.
            out.code = match v.status {
                Status::Out => EXIT_AFFIRMATIVE,
                Status::In => EXIT_NEGATIVE,
                Status::Marginal => EXIT_MARGINAL,
            };
            out
        }
        Command::Equiv { first, second } => {
            let (s, t) = (load_tuple(first)?, load_tuple(second)?);
            match extreme::recover_unitary(&s, &t, config.seed, &tol) {
                Ok(w) => {
                    let body = FlagJson { status: "equivalent", body: io::equivalence_json(&w) };
                    let report = render(config, &body, || {
                        format!("equivalent\nresidual: {:.3e}\nblock permutation: {:?}\n", w.residual, w.block_permutation)
                    });
                    RunOutput { code: EXIT_AFFIRMATIVE, report }
                }
                Err(Error::NotEquivalent { separator }) => {
                    #[derive(Serialize)]
                    struct NotEq {
                        separator: Option<io::PencilJson>,
                    }
                    let body = FlagJson { status: "not_equivalent", body: NotEq { separator: separator.as_deref().map(io::pencil_json) } };
                    let report = render(config, &body, || "not equivalent\n".to_string());
                    RunOutput { code: EXIT_NEGATIVE, report }
                }
                Err(e) => return Err(e),
            }
        }
        Command::Wmin { point, polytope } => {
            let body = io::parse_polytope(&std::fs::read_to_string(polytope)?)?;
            let v = convexity::wmin_membership(&load_tuple(point)?, &body, &tol)?;
            verdict_output(config, &v)
        }
        Command::Wmax { point, halfspaces } => {
            let body = io::parse_halfspaces(&std::fs::read_to_string(halfspaces)?)?;
            let v = convexity::wmax_membership(&load_tuple(point)?, &body, &tol)?;
            verdict_output(config, &v)
        }
    })
}

/// Parses arguments, runs the command and returns `(exit code, stdout, stderr)`.
pub fn run_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let out = run(&cli.command, &cli.config);
            (out.code, out.report, String::new())
        }
        Err(e) => {
            let text = e.render().to_string();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    (EXIT_AFFIRMATIVE, text, String::new())
                }
                _ => (EXIT_ERROR, String::new(), text),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library() {
        let tol = RunConfig::default().tolerances().unwrap();
        assert_eq!(tol, Tolerances::default());
    }

    #[test]
    fn rejects_bad_tolerance() {
        let cfg = RunConfig { feas_tol: -1.0, ..RunConfig::default() };
        assert!(cfg.tolerances().is_err());
    }

    #[test]
    fn unknown_command_is_error() {
        let (code, _, err) = run_args(["matrange", "frobnicate"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn missing_file_is_error() {
        let (code, out, _) = run_args(["matrange", "decompose", "--tuple", "/nonexistent/t.json"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(out.contains("\"status\": \"error\""));
    }
}
