//! Run orchestration behind the `lqed` binary: config layering, output files
//! and exit codes.

pub mod manifest;
pub mod plot;
pub mod validate;

use std::fmt;
use std::path::{Path, PathBuf};

use lqed::integrator::{evolve, run_steady_state};
use lqed::output::{write_elements_csv, write_json, write_summary_json, write_sweep_csv, write_trace_csv};
use lqed::sweep::run_sweep;
use lqed::Error;
use serde::Serialize;

pub use manifest::{Command, RunConfig, RunManifest};

pub const TRACE_CSV: &str = "trace.csv";
pub const ELEMENTS_CSV: &str = "elements.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// A failed run with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const DIVERGENCE: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::Stability { .. }
            | Error::Domain(_)
            | Error::TruncationInsufficient { .. } => exit::CONFIG,
            Error::Divergence { .. } | Error::Integrity(_) | Error::Quadrature { .. } => {
                exit::DIVERGENCE
            }
            Error::NotConverged { .. } => exit::NOT_CONVERGED,
            _ => exit::FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// What a finished run reports back to `main`.
#[derive(Debug)]
pub struct Report {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
    pub lines: Vec<String>,
    /// Set when the run finished but its goal was not met.
    pub failure: Option<Failure>,
}

/// Layers flags over the optional config file over the command's defaults.
pub fn layered_config(command: Command, flags: RunConfig, file: Option<&Path>) -> CliResult<RunConfig> {
    let from_file = match file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let defaults = match command {
        Command::Sweep => RunConfig::sweep_defaults(),
        _ => RunConfig::defaults(),
    };
    Ok(flags.over(from_file).over(defaults))
}

/// Resolves the configuration to the explicit form recorded in the manifest.
pub fn resolve(command: Command, config: RunConfig) -> CliResult<RunManifest> {
    let explicit = match command {
        Command::Evolve | Command::Steady => {
            let sim = config.simulation()?;
            if command == Command::Steady && !(sim.kappa > 0.0) {
                return Err(Error::Domain(
                    "steady needs kappa > 0: without cavity losses no steady state exists".into(),
                )
                .into());
            }
            config.with_simulation(&sim)
        }
        Command::Sweep => {
            config.sweep()?;
            config
        }
        Command::Validate => config,
    };
    Ok(RunManifest::new(command, explicit))
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }
}

#[derive(Serialize)]
struct EvolveSummary {
    final_sample: lqed::Sample,
    diagnostics: lqed::Diagnostics,
}

#[derive(Serialize)]
struct SteadySummary {
    steady_state: lqed::SteadyStateResult,
    diagnostics: lqed::Diagnostics,
}

#[derive(Serialize)]
struct SweepSummary {
    points: usize,
    converged: usize,
}

#[derive(Serialize)]
struct ValidateSummary {
    checks: Vec<validate::Check>,
}

/// Runs a resolved manifest, writing outputs into `out_dir`.
pub fn execute(mut manifest: RunManifest, out_dir: &Path) -> CliResult<Report> {
    let mut out = Outputs::new(out_dir)?;
    let mut lines = Vec::new();
    let mut failure = None;
    let hash = manifest.hash.clone();
    match manifest.command {
        Command::Evolve => {
            let sim = manifest.config.simulation()?;
            let ev = evolve(&sim)?;
            write_trace_csv(&ev.trace, out.path(TRACE_CSV))?;
            if !ev.watched.is_empty() {
                write_elements_csv(&ev.watched, out.path(ELEMENTS_CSV))?;
            }
            let last = *ev.trace.last().expect("at least one sample");
            lines.push(format!(
                "t = {}: O1 = {:.6}, O2 = {:.6}, O3 = {:.6}, trace = {:.9}",
                last.t, last.o1, last.o2, last.o3, last.trace
            ));
            write_summary_json(
                &EvolveSummary {
                    final_sample: last,
                    diagnostics: ev.diagnostics,
                },
                &hash,
                out.path(SUMMARY_JSON),
            )?;
            plot::emit_trace_script(out_dir, TRACE_CSV)?;
            out.written.push(plot::TRACE_SCRIPT.into());
        }
        Command::Steady => {
            let sim = manifest.config.simulation()?;
            let run = run_steady_state(&sim)?;
            let r = run.result;
            write_trace_csv(&run.evolution.trace, out.path(TRACE_CSV))?;
            if !run.evolution.watched.is_empty() {
                write_elements_csv(&run.evolution.watched, out.path(ELEMENTS_CSV))?;
            }
            write_summary_json(
                &SteadySummary {
                    steady_state: r,
                    diagnostics: run.evolution.diagnostics,
                },
                &hash,
                out.path(SUMMARY_JSON),
            )?;
            plot::emit_trace_script(out_dir, TRACE_CSV)?;
            out.written.push(plot::TRACE_SCRIPT.into());
            lines.push(format!(
                "O1_st = {:.6}, O2_st = {:.6}, converged = {} at t = {}",
                r.o1_st, r.o2_st, r.converged, r.t_converged
            ));
            if !r.converged {
                failure = Some(Failure {
                    code: exit::NOT_CONVERGED,
                    message: format!("no steady state reached by t = {}", r.t_converged),
                });
            }
        }
        Command::Sweep => {
            let spec = manifest.config.sweep()?;
            let table = run_sweep(&spec)?;
            write_sweep_csv(&table, out.path(SWEEP_CSV))?;
            let converged = table.rows.iter().filter(|r| r.converged).count();
            write_summary_json(
                &SweepSummary {
                    points: table.rows.len(),
                    converged,
                },
                &hash,
                out.path(SUMMARY_JSON),
            )?;
            plot::emit_sweep_script(out_dir, SWEEP_CSV)?;
            out.written.push(plot::SWEEP_SCRIPT.into());
            lines.push(format!("{converged} of {} points converged", table.rows.len()));
            if converged < table.rows.len() {
                failure = Some(Failure {
                    code: exit::NOT_CONVERGED,
                    message: format!("{} sweep points did not converge", table.rows.len() - converged),
                });
            }
        }
        Command::Validate => {
            let checks = validate::run_all();
            for c in &checks {
                lines.push(format!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            write_summary_json(&ValidateSummary { checks }, &hash, out.path(SUMMARY_JSON))?;
            if failed > 0 {
                failure = Some(Failure {
                    code: exit::FAILURE,
                    message: format!("{failed} validation checks failed"),
                });
            }
        }
    }
    out.written.push(MANIFEST_JSON.into());
    manifest.outputs = out.written;
    write_json(&manifest, out_dir.join(MANIFEST_JSON))?;
    Ok(Report {
        manifest,
        out_dir: out_dir.to_path_buf(),
        lines,
        failure,
    })
}
