//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | invalid configuration or arguments |
//! | 2 | the solver did not converge |
//! | 3 | I/O failure |
//! | 4 | weight table failed validation |
//! | 5 | `check` found a failing invariant |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, warn};

use crate::check::{run_checks, Fault, Level};
use crate::config::{parse_kappa, RunConfig};
use crate::error::{Error, Result};
use crate::field_io::write_field_file;
use crate::operator::Model;
use crate::study::{fmt17, rows_to_csv, run_convergence_study, run_model, StudyConfig};
use crate::weights::{
    build_weights, ensure_symmetric, validate_weights, WeightScheme, WeightTable,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INVALID_WEIGHTS: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "PERISTATIC_THREADS";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Io { .. } => EXIT_IO,
        Error::InvalidWeights { .. } => EXIT_INVALID_WEIGHTS,
        _ => EXIT_CONFIG,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "peristatic",
    version,
    about = "Static state-based peridynamics on uniform 2-D lattices"
)]
pub struct Cli {
    /// Worker threads (default: PERISTATIC_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug)]
pub struct ProblemArgs {
    /// JSON run configuration.
    #[arg(conflicts_with = "problem")]
    pub config: Option<PathBuf>,
    /// Built-in problem instead of a config file.
    #[arg(long, value_parser = ["bar", "inclusion"])]
    pub problem: Option<String>,
}

impl ProblemArgs {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.problem) {
            (Some(path), _) => RunConfig::load(path),
            (None, Some(name)) => RunConfig::builtin(name),
            (None, None) => Err(Error::Config("give a config file or --problem".into())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Kappas and reference from the configuration.
    Config,
    /// `kappa_n = 1/(40 + 20 n)`, `n = 0..7`, reference 1/360.
    #[value(name = "paper", alias = "full")]
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckLevel {
    Quick,
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Inject {
    WeightAsymmetry,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve once and report statistics; optionally dump the field.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_parser = parse_kappa)]
        kappa: f64,
        #[arg(long, default_value = "PAAC", value_parser = parse_scheme)]
        scheme: WeightScheme,
        /// Binary field dump (PDF1).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `i,j,w` weight CSV for `--scheme custom`.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Solve with a custom table that breaks the range or inside/outside
        /// rules (asymmetric tables are always refused).
        #[arg(long)]
        allow_invalid_weights: bool,
    },
    /// Convergence study against a fine reference solution.
    Study {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "config")]
        profile: Profile,
        /// CSV destination (default: config output.csv, else stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for binary field dumps.
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Write wall_time as 0 for byte-reproducible CSVs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Validate and dump a weight table as CSV.
    Weights {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_parser = parse_kappa)]
        kappa: f64,
        #[arg(long, default_value = "PAAC", value_parser = parse_scheme)]
        scheme: WeightScheme,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `i,j,w` weight CSV for `--scheme custom`.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Run the built-in invariant suite; one JSON object per line.
    Check {
        #[arg(long, value_enum, default_value = "quick")]
        level: CheckLevel,
        #[arg(long, value_enum)]
        inject: Option<Inject>,
    },
    /// Print the JSON configuration of a built-in problem.
    Template {
        #[arg(value_parser = ["bar", "inclusion"])]
        problem: String,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<WeightScheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Thread count from the flag, else the environment.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match resolve_threads(cli.threads) {
        Ok(t) => t,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match crate::par::with_threads(threads, || dispatch(cli.command)) {
        Ok((code, text)) => {
            if stdout
                .write_all(&text)
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return EXIT_IO;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a command, collecting its standard output.
fn dispatch(command: Command) -> Result<(i32, Vec<u8>)> {
    let mut out = Vec::new();
    let code = match command {
        Command::Solve {
            problem,
            kappa,
            scheme,
            out: dump,
            weights,
            allow_invalid_weights,
        } => {
            let mut cfg = problem.load()?;
            cfg.allow_invalid_weights |= allow_invalid_weights;
            cmd_solve(
                &cfg,
                kappa,
                scheme,
                dump.as_deref(),
                weights.as_deref(),
                &mut out,
            )?
        }
        Command::Study {
            problem,
            profile,
            out: csv,
            fields,
            no_timing,
        } => {
            let cfg = problem.load()?;
            let mut study = cfg.study()?;
            if profile == Profile::Full {
                study = StudyConfig {
                    record_timing: study.record_timing,
                    field_dir: study.field_dir.clone(),
                    solver: study.solver,
                    ..StudyConfig::full(study.problem.clone())
                };
                eprintln!("estimated cost: {}", study.estimated_cost());
            }
            if no_timing {
                study.record_timing = false;
            }
            if fields.is_some() {
                study.field_dir = fields;
            }
            cmd_study(&study, csv.or(cfg.output.csv).as_deref(), &mut out)?
        }
        Command::Weights {
            problem,
            kappa,
            scheme,
            out: dest,
            weights,
        } => cmd_weights(
            &problem.load()?,
            kappa,
            scheme,
            weights.as_deref(),
            dest.as_deref(),
            &mut out,
        )?,
        Command::Check { level, inject } => {
            let level = match level {
                CheckLevel::Quick => Level::Quick,
                CheckLevel::Full => Level::Full,
            };
            cmd_check(level, inject.map(|_| Fault::WeightAsymmetry), &mut out)
        }
        Command::Template { problem } => {
            writeln!(out, "{}", RunConfig::builtin(&problem)?.to_json()).expect("write to buffer");
            EXIT_OK
        }
    };
    Ok((code, out))
}

fn load_weights(
    cfg: &RunConfig,
    lattice: &crate::lattice::Lattice,
    scheme: WeightScheme,
    custom: Option<&Path>,
) -> Result<WeightTable> {
    let problem = cfg.problem()?;
    match scheme {
        WeightScheme::Custom => {
            let path = custom.or(cfg.custom_weights.as_deref()).ok_or_else(|| {
                Error::Config("scheme custom needs --weights or custom_weights".into())
            })?;
            WeightTable::read_csv(lattice, problem.delta, path)
        }
        s => build_weights(lattice, &problem.kernel, s),
    }
}

pub fn cmd_solve(
    cfg: &RunConfig,
    kappa: f64,
    scheme: WeightScheme,
    dump: Option<&Path>,
    custom: Option<&Path>,
    out: &mut Vec<u8>,
) -> Result<i32> {
    let problem = cfg.problem()?;
    if let Some(path) = dump {
        // fail before the solve rather than after it
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    }
    let lattice = problem.lattice(kappa)?;
    let weights = load_weights(cfg, &lattice, scheme, custom)?;
    let model = if cfg.allow_invalid_weights && scheme == WeightScheme::Custom {
        ensure_symmetric(&weights, &lattice)?;
        Model::new_unchecked(
            lattice,
            problem.kernel.clone(),
            weights,
            &problem.k_field,
            &problem.l_field,
        )?
    } else {
        Model::new(
            lattice,
            problem.kernel.clone(),
            weights,
            &problem.k_field,
            &problem.l_field,
        )?
    };
    let run = run_model(model, &problem.load, &cfg.solver, true)?;
    if let Some(path) = dump {
        write_field_file(path, &run.field)?;
    }
    writeln!(
        out,
        "kappa={} scheme={} dof_count={} cg_iterations={} residual={} wall_time={}",
        fmt17(kappa),
        scheme,
        run.dof_count,
        run.stats.iterations,
        fmt17(run.stats.final_relative_residual),
        fmt17(run.stats.wall_time)
    )
    .expect("write to buffer");
    Ok(EXIT_OK)
}

pub fn cmd_study(study: &StudyConfig, csv: Option<&Path>, out: &mut Vec<u8>) -> Result<i32> {
    eprintln!(
        "solver: relative residual tolerance {:e} (a chosen default, not derived from the discretization)",
        study.solver.tol
    );
    let rows = run_convergence_study(study, csv)?;
    if csv.is_none() {
        out.extend_from_slice(rows_to_csv(&rows).as_bytes());
    }
    Ok(EXIT_OK)
}

pub fn cmd_weights(
    cfg: &RunConfig,
    kappa: f64,
    scheme: WeightScheme,
    custom: Option<&Path>,
    dest: Option<&Path>,
    out: &mut Vec<u8>,
) -> Result<i32> {
    let problem = cfg.problem()?;
    let lattice = problem.lattice(kappa)?;
    let table = load_weights(cfg, &lattice, scheme, custom)?;
    let violations = validate_weights(&table, &lattice);
    if !violations.is_empty() {
        for v in violations.iter().take(20) {
            eprintln!("{v}");
        }
        if violations.len() > 20 {
            warn!("{} further violations not shown", violations.len() - 20);
        }
        return Ok(EXIT_INVALID_WEIGHTS);
    }
    match dest {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = std::io::BufWriter::new(file);
            table
                .write_csv(&lattice, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path, e))?;
        }
        None => table.write_csv(&lattice, out).expect("write to buffer"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_check(level: Level, fault: Option<Fault>, out: &mut Vec<u8>) -> i32 {
    let results = run_checks(level, fault);
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        writeln!(out, "{}", serde_json::to_string(r).expect("serializable"))
            .expect("write to buffer");
    }
    let summary =
        serde_json::json!({"summary": {"passed": results.len() - failed, "failed": failed}});
    writeln!(out, "{summary}").expect("write to buffer");
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
