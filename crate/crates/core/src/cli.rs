//! Command-line front end.
//!
//! Every command reads a model file and writes CSV or JSON to `--out` (or
//! standard output). Exit status is 0 on success, 2 on invalid input and 3
//! when a solver did not converge or ran out of budget; partial results
//! are still written in that case.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::distribution::SparseDistribution;
use crate::error::{Error, Result};
use crate::exit::{exit_density_ct, exit_joint_dt, exit_marginals_minimal, DomainSpec, ExitOptions, ExitStatistics};
use crate::lyapunov::{check_certificate, CertificateSpec};
use crate::model::ChainModel;
use crate::model_file::ModelSpec;
use crate::simulate::{sample_ensemble_ct, sample_ensemble_dt};
use crate::state::StateKey;
use crate::stationary::{ergodic_distributions, stationary_residual};
use crate::structure::classify;
use crate::transient::{fsp_adaptive_with, fsp_ct_with, fsp_dt, skeleton_matrix, AdaptiveOptions, CtOptions, Horizon};
use crate::truncation::Truncation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "CHAINKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chainkit", version, about = "Certified analysis of countable-state Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trajectories.
    Simulate(SimulateArgs),
    /// Time-varying law by finite state projection.
    Law(LawArgs),
    /// Exit distribution and occupation measure of a domain.
    Exit(ExitArgs),
    /// Ergodic distributions of the closed classes in a truncation.
    Stationary(CommonArgs),
    /// Communicating classes, closedness and periods.
    Classify(CommonArgs),
    /// Check a drift certificate on a truncation.
    Lyapunov(LyapunovArgs),
    /// Transition matrix of the δ-skeleton.
    Skeleton(SkeletonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Box truncation `lo:hi[,lo:hi...]`, one interval per coordinate.
    #[arg(long)]
    pub trunc: Option<String>,
    /// Explicit truncation: JSON list of states. Overrides `--trunc`.
    #[arg(long)]
    pub trunc_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// Steps per path (discrete models).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time horizon (continuous models).
    #[arg(long, alias = "tmax")]
    pub time: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_jumps: usize,
}

#[derive(Debug, Args)]
pub struct LawArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub time: Option<f64>,
    /// Grow the truncation until the error bound is at most this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub series_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_states: usize,
}

#[derive(Debug, Args)]
pub struct ExitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Domain file: `{"states": [...]}` or `{"range": [lo, hi]}`.
    #[arg(long)]
    pub domain_file: PathBuf,
    /// Joint law over this many steps (discrete models).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Exit-time histogram up to this time (continuous models).
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub series_tol: f64,
    /// Sup-norm tolerance of the minimal solver (marginals only).
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Certificate file (JSON).
    #[arg(long)]
    pub cert: PathBuf,
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Skeleton step δ.
    #[arg(long)]
    pub time: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub series_tol: f64,
}

/// Output of one command: text to write and the exit status.
pub struct Outcome {
    pub text: String,
    pub status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, status: EXIT_OK }
    }
}

/// Parses `args` (including the program name), runs the command, writes
/// its output and returns the exit status. Diagnostics go to stderr.
pub fn main_with_args(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(&cli.command) {
        Ok(outcome) => {
            if let Err(e) = emit(output_path(&cli.command), &outcome.text) {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
            outcome.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            status_of(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Exit status for a failed command.
pub fn status_of(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::SolverLimit(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_INVALID,
    }
}

fn output_path(cmd: &Command) -> Option<&Path> {
    let common = match cmd {
        Command::Simulate(a) => &a.common,
        Command::Law(a) => &a.common,
        Command::Exit(a) => &a.common,
        Command::Stationary(a) | Command::Classify(a) => a,
        Command::Lyapunov(a) => &a.common,
        Command::Skeleton(a) => &a.common,
    };
    common.out.as_deref()
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs a parsed command and renders its output.
pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Law(a) => law(a),
        Command::Exit(a) => exit(a),
        Command::Stationary(a) => stationary(a),
        Command::Classify(a) => {
            let model = model(&a.model)?;
            let trunc = required_truncation(a)?;
            json(&classify(&model, &trunc)?)
        }
        Command::Lyapunov(a) => {
            let model = model(&a.common.model)?;
            let trunc = required_truncation(&a.common)?;
            let cert = CertificateSpec::from_json(&read_text(&a.cert)?)?.build();
            json(&check_certificate(&model, &cert, &trunc)?)
        }
        Command::Skeleton(a) => skeleton(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn model(path: &Path) -> Result<ChainModel> {
    ModelSpec::from_json(&read_text(path)?)?.build()
}

fn json<T: Serialize>(value: &T) -> Result<Outcome> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(Outcome::ok(text))
}

/// Parses `lo:hi[,lo:hi...]`.
pub fn parse_box(spec: &str) -> Result<Truncation> {
    let bad = || Error::Precondition(format!("truncation box {spec:?} is not of the form lo:hi[,lo:hi...]"));
    let bounds = spec
        .split(',')
        .map(|part| {
            let (lo, hi) = part.trim().split_once(':').ok_or_else(bad)?;
            Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<(i64, i64)>>>()?;
    Truncation::boxed(&bounds)
}

fn truncation(a: &CommonArgs) -> Result<Option<Truncation>> {
    if let Some(path) = &a.trunc_file {
        let states: Vec<StateKey> = serde_json::from_str(&read_text(path)?)?;
        return Truncation::new(states).map(Some);
    }
    a.trunc.as_deref().map(parse_box).transpose()
}

fn required_truncation(a: &CommonArgs) -> Result<Truncation> {
    truncation(a)?.ok_or_else(|| Error::Precondition("this command needs --trunc or --trunc-file".into()))
}

/// Full-precision float: the shortest decimal that parses back exactly.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// State as a CSV field; tuples are quoted.
fn state_field(x: &StateKey) -> String {
    if x.dim() == 1 {
        x.to_string()
    } else {
        format!("\"{x}\"")
    }
}

fn horizon(steps: Option<usize>, time: Option<f64>, model: &ChainModel) -> Result<Horizon> {
    match (steps, time, model.is_discrete()) {
        (Some(n), None, true) => Ok(Horizon::Steps(n)),
        (None, Some(t), false) => Ok(Horizon::Time(t)),
        (_, _, true) => Err(Error::Precondition("discrete models take --steps".into())),
        (_, _, false) => Err(Error::Precondition("continuous models take --time".into())),
    }
}

fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let model = model(&a.common.model)?;
    let mut out = String::new();
    match horizon(a.steps, a.time, &model)? {
        Horizon::Steps(n) => {
            let dim = model.gamma().support().next().map_or(1, |x| x.dim());
            out.push_str("trajectory_id,k");
            (0..dim).for_each(|i| write!(out, ",x{i}").unwrap());
            out.push('\n');
            for (id, path) in sample_ensemble_dt(&model, n, a.paths, a.seed)?.iter().enumerate() {
                for (k, x) in path.states.iter().enumerate() {
                    write!(out, "{id},{k}").unwrap();
                    x.coords().iter().for_each(|c| write!(out, ",{c}").unwrap());
                    out.push('\n');
                }
            }
        }
        Horizon::Time(t) => {
            let dim = model.gamma().support().next().map_or(1, |x| x.dim());
            out.push_str("trajectory_id,k,t");
            (0..dim).for_each(|i| write!(out, ",x{i}").unwrap());
            out.push('\n');
            for (id, path) in sample_ensemble_ct(&model, t, a.max_jumps, a.paths, a.seed)?.iter().enumerate() {
                for (k, (x, s)) in path.states.iter().zip(&path.times).enumerate() {
                    write!(out, "{id},{k},{}", num(*s)).unwrap();
                    x.coords().iter().for_each(|c| write!(out, ",{c}").unwrap());
                    out.push('\n');
                }
            }
        }
    }
    Ok(Outcome::ok(out))
}

fn write_distribution(out: &mut String, d: &SparseDistribution) {
    for (x, w) in d.iter() {
        writeln!(out, "{},{}", state_field(x), num(w)).unwrap();
    }
}

fn law(a: &LawArgs) -> Result<Outcome> {
    let model = model(&a.common.model)?;
    let h = horizon(a.steps, a.time, &model)?;
    let ct = CtOptions {
        series_tol: a.series_tol,
        ..Default::default()
    };
    let (result, status_line, status) = match a.tol {
        Some(tol) => {
            let initial = match truncation(&a.common)? {
                Some(t) => t,
                None => Truncation::initial_support(&model)?,
            };
            let opts = AdaptiveOptions {
                ct,
                ..Default::default()
            };
            let r = fsp_adaptive_with(&model, h, tol, &initial, a.max_states, &opts)?;
            let line = if r.converged {
                "converged".to_string()
            } else {
                format!("non-converged ({:?})", r.termination)
            };
            let status = if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
            (r.result, line, status)
        }
        None => {
            let trunc = required_truncation(&a.common)?;
            let r = match h {
                Horizon::Steps(n) => fsp_dt(&model, n, &trunc)?,
                Horizon::Time(t) => fsp_ct_with(&model, t, &trunc, &ct)?,
            };
            (r, "fixed-truncation".to_string(), EXIT_OK)
        }
    };
    let mut out = String::from("state,mass\n");
    write_distribution(&mut out, &result.approx);
    writeln!(out, "retained,{}", num(result.retained)).unwrap();
    writeln!(out, "epsilon,{}", num(result.epsilon)).unwrap();
    writeln!(out, "states,{}", result.truncation.len()).unwrap();
    writeln!(out, "status,{status_line}").unwrap();
    Ok(Outcome { text: out, status })
}

fn write_exit(out: &mut String, s: &ExitStatistics) {
    for (name, table) in [("mu_joint", &s.mu_joint), ("nu_joint", &s.nu_joint)] {
        if table.is_empty() {
            continue;
        }
        writeln!(out, "# {name}\ntime,state,mass").unwrap();
        for (t, d) in s.times.iter().zip(table) {
            for (x, w) in d.iter() {
                writeln!(out, "{},{},{}", num(*t), state_field(x), num(w)).unwrap();
            }
        }
    }
    for (name, d) in [("mu", &s.mu), ("nu", &s.nu)] {
        writeln!(out, "# {name}\nstate,mass").unwrap();
        write_distribution(out, d);
    }
    writeln!(
        out,
        "# summary\nexit_probability,{}\nmean_exit_time,{}\nerror_bound,{}\nassumed_finite_exit,{}",
        num(s.exit_probability),
        num(s.mean_exit_time),
        num(s.error_bound),
        s.assumed_finite_exit
    )
    .unwrap();
}

fn exit(a: &ExitArgs) -> Result<Outcome> {
    let model = model(&a.common.model)?;
    let trunc = required_truncation(&a.common)?;
    let domain = DomainSpec::from_json(&read_text(&a.domain_file)?)?.build();
    let stats = match (a.steps, a.time) {
        (Some(n), None) => exit_joint_dt(&model, &domain, n, &trunc)?,
        (None, Some(t)) => exit_density_ct(&model, &domain, t, a.bins, &trunc, a.series_tol)?,
        (None, None) => {
            let mut opts = ExitOptions::default();
            opts.solve.tol = a.tol;
            match exit_marginals_minimal(&model, &domain, model.gamma(), &trunc, &opts) {
                Ok(s) => s,
                Err(e @ Error::NonConvergence { .. }) => {
                    return Ok(Outcome {
                        text: format!("# summary\nstatus,non-converged\nreason,{e}\n"),
                        status: EXIT_NOT_CONVERGED,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        (Some(_), Some(_)) => return Err(Error::Precondition("give at most one of --steps and --time".into())),
    };
    let mut out = String::new();
    write_exit(&mut out, &stats);
    Ok(Outcome::ok(out))
}

#[derive(Serialize)]
struct ClassSummary {
    states: Vec<StateKey>,
    residual: f64,
    method: crate::stationary::StationaryMethod,
    attempts: Vec<String>,
    requires_non_explosivity: bool,
}

#[derive(Serialize)]
struct StationarySummary {
    classes: Vec<ClassSummary>,
    uncertified_states: Vec<StateKey>,
    note: Option<String>,
}

fn stationary(a: &CommonArgs) -> Result<Outcome> {
    let model = model(&a.model)?;
    let trunc = required_truncation(a)?;
    let report = ergodic_distributions(&model, &classify(&model, &trunc)?)?;
    let mut out = String::from("class,state,mass\n");
    let mut classes = Vec::new();
    for (i, c) in report.classes.iter().enumerate() {
        for (x, w) in c.distribution.iter() {
            writeln!(out, "{i},{},{}", state_field(x), num(w)).unwrap();
        }
        let class_trunc = Truncation::new(c.states.iter().cloned())?;
        let residual = stationary_residual(&model, &c.distribution, &class_trunc)?;
        classes.push(ClassSummary {
            states: c.states.clone(),
            residual: c.residual,
            method: c.method,
            attempts: c.attempts.clone(),
            requires_non_explosivity: residual.requires_non_explosivity,
        });
    }
    let summary = StationarySummary {
        classes,
        uncertified_states: report.uncertified_states.clone(),
        note: report.note.clone(),
    };
    writeln!(out, "# summary {}", serde_json::to_string(&summary)?).unwrap();
    Ok(Outcome::ok(out))
}

fn skeleton(a: &SkeletonArgs) -> Result<Outcome> {
    let model = model(&a.common.model)?;
    let trunc = required_truncation(&a.common)?;
    let s = skeleton_matrix(&model, a.time, &trunc, a.series_tol)?;
    let mut out = String::from("state");
    for x in trunc.iter() {
        write!(out, ",{}", state_field(x)).unwrap();
    }
    out.push_str(",dead\n");
    for ((x, row), dead) in trunc.iter().zip(&s.rows).zip(&s.dead_mass) {
        out.push_str(&state_field(x));
        for v in row {
            write!(out, ",{}", num(*v)).unwrap();
        }
        writeln!(out, ",{}", num(*dead)).unwrap();
    }
    Ok(Outcome::ok(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_parsing() {
        let t = parse_box("0:2, 5:6").unwrap();
        assert_eq!(t.len(), 6);
        assert!(parse_box("0-2").is_err());
        assert!(parse_box("a:3").is_err());
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 1.0 / 3.0, 1e-300, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.0), "0.0");
    }

    #[test]
    fn status_codes() {
        assert_eq!(status_of(&Error::SolverLimit("x".into())), EXIT_NOT_CONVERGED);
        assert_eq!(status_of(&Error::InvalidModel("x".into())), EXIT_INVALID);
    }

    #[test]
    fn usage_error_is_invalid() {
        assert_eq!(main_with_args(["chainkit", "law", "--bogus"]), EXIT_INVALID);
    }
}
