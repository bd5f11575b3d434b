use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lqed::density::ElementIndex;
use lqed::FieldSpec;
use lqed_cli::manifest::parse_watch_list;
use lqed_cli::{execute, layered_config, resolve, Command, RunConfig};

/// Lindblad simulations of a three-level Λ system in a lossy two-mode cavity.
///
/// Field grammar: `coherent:alpha=<re>[+<im>i]`, `squeezed:r=<r>,theta=<theta>`,
/// `fock:n=<n>`, `custom:file=<path>`, each optionally followed by `,kmax=<n>`.
#[derive(Parser)]
#[command(name = "lqed", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate to t_max and write the population trace.
    Evolve(RunArgs),
    /// Integrate until the fields have decayed and report the steady populations.
    Steady(RunArgs),
    /// Steady states over a grid of loss rates for several mode-1 inputs.
    Sweep(SweepArgs),
    /// Cross-check the simulator against closed forms and invariants.
    Validate(OutArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Initial state of mode 1 (drives 1 <-> 3).
    #[arg(long)]
    field1: Option<FieldSpec>,
    /// Initial state of mode 2 (drives 2 <-> 3).
    #[arg(long)]
    field2: Option<FieldSpec>,
    /// Cavity loss rate in units of g/hbar.
    #[arg(long)]
    kappa: Option<f64>,
    /// Integration step in units of hbar/g.
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon in units of hbar/g.
    #[arg(long)]
    tmax: Option<f64>,
    /// Fock cutoff of mode 1.
    #[arg(long)]
    kmax: Option<usize>,
    /// Fock cutoff of mode 2.
    #[arg(long)]
    mmax: Option<usize>,
    /// Record populations every N steps.
    #[arg(long)]
    record_every: Option<usize>,
    /// Elements recorded at every step, e.g. "2,1,0;2,1,0 1,1,0;1,1,0".
    #[arg(long)]
    watch_elements: Option<WatchList>,
    /// JSON config file or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Loss rates, comma separated.
    #[arg(long, value_delimiter = ',')]
    kappa_grid: Option<Vec<f64>>,
    /// A mode-1 input to sweep; repeat for several.
    #[arg(long = "variant")]
    variants: Vec<FieldSpec>,
}

#[derive(Clone)]
struct WatchList(Vec<ElementIndex>);

impl std::str::FromStr for WatchList {
    type Err = lqed::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_watch_list(s).map(WatchList)
    }
}

impl RunArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            field1: self.field1.clone(),
            field2: self.field2.clone(),
            kappa: self.kappa,
            dt: self.dt,
            tmax: self.tmax,
            kmax: self.kmax,
            mmax: self.mmax,
            record_every: self.record_every,
            watch_elements: self.watch_elements.clone().map(|w| w.0),
            ..RunConfig::default()
        }
    }
}

fn run(command: Command, flags: RunConfig, config: Option<PathBuf>, out: PathBuf) -> ExitCode {
    let result = layered_config(command, flags, config.as_deref())
        .and_then(|cfg| resolve(command, cfg))
        .and_then(|manifest| execute(manifest, &out));
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("outputs in {} (manifest {})", report.out_dir.display(), report.manifest.hash);
            match report.failure {
                Some(f) => {
                    eprintln!("error: {f}");
                    ExitCode::from(f.code)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        None => {
            match resolve(Command::Evolve, RunConfig::defaults()) {
                Ok(manifest) => {
                    println!("{}", serde_json::to_string_pretty(&manifest).expect("serializable"));
                    ExitCode::SUCCESS
                }
                Err(f) => {
                    eprintln!("error: {f}");
                    ExitCode::from(f.code)
                }
            }
        }
        Some(Sub::Evolve(a)) => run(Command::Evolve, a.flags(), a.config.clone(), a.out.out),
        Some(Sub::Steady(a)) => run(Command::Steady, a.flags(), a.config.clone(), a.out.out),
        Some(Sub::Sweep(a)) => {
            let flags = RunConfig {
                kappa_grid: a.kappa_grid,
                variants: (!a.variants.is_empty()).then_some(a.variants),
                ..a.run.flags()
            };
            run(Command::Sweep, flags, a.run.config, a.run.out.out)
        }
        Some(Sub::Validate(a)) => run(Command::Validate, RunConfig::default(), None, a.out),
    }
}
