//! Command-line driver: argument parsing, configuration merging and the
//! experiment commands. The `lattice-bell` binary is a thin wrapper around
//! [`run`].

mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bell::PhaseMode;
use crate::error::{Error, Result};
use crate::protocol::PostSelection;
pub use config::{RunConfig, ScalingEvaluator, Tolerances};
pub use output::{format_float, ResultRecord};

/// Exact simulation and Bell-test analysis of the lattice parity protocol.
///
/// Settings are resolved in order: command-line flag, then the --config
/// file, then the built-in default shown in brackets.
#[derive(Debug, Parser)]
#[command(name = "lattice-bell", version)]
pub struct Cli {
    /// Configuration file: `key = value` lines with one [section] per command
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing [default: .]
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Seed of the genetic algorithm [default: 0]
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Exit with status 4 if any tolerance check fails
    #[arg(long, global = true)]
    pub strict: bool,

    /// Largest Fock basis accepted for exact simulation [default: 20000]
    #[arg(long, global = true, value_name = "INT")]
    pub dimension_cap: Option<usize>,

    /// Store wall-clock time in the JSON records (outputs then differ between runs)
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CHSH value along the two-well omega family; writes chsh.csv
    Chsh(ChshArgs),
    /// Optimized relative violation for a range of N; writes scaling.csv and scaling_fit.json
    Scaling(ScalingArgs),
    /// Bell value over the global (theta, phi) plane; writes map.csv and map_summary.json
    Map(MapArgs),
    /// Post-selected Bell value versus interaction strength; writes chi.csv
    Interaction(InteractionArgs),
    /// Run the protocol once and dump the final state; writes simulate.json
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    /// Keep only outcomes with one atom per well [default: true]
    #[arg(long, value_name = "BOOL")]
    pub postselect: Option<bool>,

    /// Number of omega values on [0, pi] [default: 181]
    #[arg(long, value_name = "INT")]
    pub omega_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    #[value(name = "free_phases")]
    FreePhases,
    #[value(name = "global_phases")]
    GlobalPhases,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NormalizationArg {
    /// Conditional expectation on the selected outcomes
    Conditional,
    /// Selected outcomes rescaled by 2^(N-1)
    Nominal,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Smallest number of wells [default: 2]
    #[arg(long, value_name = "INT")]
    pub n_min: Option<usize>,

    /// Largest number of wells [default: 30]
    #[arg(long, value_name = "INT")]
    pub n_max: Option<usize>,

    /// Per-well phases or one (theta, phi) pair for all wells [default: free_phases]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,

    /// Correlator source; full_simulation is limited by --dimension-cap [default: closed_form]
    #[arg(long, value_enum)]
    pub evaluator: Option<ScalingEvaluator>,

    /// Smallest N included in the power-law fit [default: 4]
    #[arg(long, value_name = "INT")]
    pub fit_from: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Number of wells [default: 2]
    #[arg(long, value_name = "INT")]
    pub n: Option<usize>,

    /// Grid points per axis on [-pi, pi] [default: 256]
    #[arg(long, value_name = "INT")]
    pub grid_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InteractionArgs {
    /// Number of wells, 2 or 3 [default: 2]
    #[arg(long, value_name = "INT")]
    pub n: Option<usize>,

    /// Largest interaction strength [default: 0.2]
    #[arg(long, value_name = "REAL")]
    pub chi_max: Option<f64>,

    /// Number of chi values on [0, chi_max] [default: 21]
    #[arg(long, value_name = "INT")]
    pub steps: Option<usize>,

    /// Re-optimize the phases at every chi [default: false]
    #[arg(long, value_name = "BOOL")]
    pub optimize: Option<bool>,

    /// Weighting of the selected outcomes [default: nominal]
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,

    /// Step of the finite-difference slope at chi = 0 [default: 0.001]
    #[arg(long, value_name = "REAL")]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of wells [default: 2]
    #[arg(long, value_name = "INT")]
    pub n: Option<usize>,

    /// Comma-separated setting-0 phases, one per well [default: all zero]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "LIST")]
    pub theta: Option<Vec<f64>>,

    /// Comma-separated setting-1 phases, one per well [default: all zero]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "LIST")]
    pub phi: Option<Vec<f64>>,

    /// Interaction strength of the first splitter [default: 0]
    #[arg(long, value_name = "REAL", allow_hyphen_values = true)]
    pub chi: Option<f64>,

    /// Keep only outcomes with one atom per well [default: false]
    #[arg(long, value_name = "BOOL")]
    pub postselect: Option<bool>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    /// Folds the command-line values into `config`.
    pub fn apply(&self, config: &mut RunConfig) {
        set(&mut config.output_path, self.out.clone());
        set(&mut config.seed, self.seed);
        set(&mut config.dimension_cap, self.dimension_cap);
        config.strict |= self.strict;
        match &self.command {
            Command::Chsh(a) => {
                set(&mut config.chsh.postselect, a.postselect);
                set(&mut config.chsh.omega_steps, a.omega_steps);
            }
            Command::Scaling(a) => {
                let c = &mut config.scaling;
                set(&mut c.n_min, a.n_min);
                set(&mut c.n_max, a.n_max);
                set(
                    &mut c.mode,
                    a.mode.map(|m| match m {
                        ModeArg::FreePhases => PhaseMode::FreePhases,
                        ModeArg::GlobalPhases => PhaseMode::GlobalPhases,
                    }),
                );
                set(&mut c.evaluator, a.evaluator);
                set(&mut c.fit_from, a.fit_from);
            }
            Command::Map(a) => {
                set(&mut config.map.n, a.n);
                set(&mut config.map.grid_steps, a.grid_steps);
            }
            Command::Interaction(a) => {
                let c = &mut config.interaction;
                set(&mut c.n, a.n);
                set(&mut c.chi_max, a.chi_max);
                set(&mut c.steps, a.steps);
                set(&mut c.optimize, a.optimize);
                set(
                    &mut c.normalization,
                    a.normalization.map(|n| match n {
                        NormalizationArg::Conditional => PostSelection::Conditional,
                        NormalizationArg::Nominal => PostSelection::Nominal,
                    }),
                );
                set(&mut c.fd_step, a.fd_step);
            }
            Command::Simulate(a) => {
                let c = &mut config.simulate;
                set(&mut c.n, a.n);
                set(&mut c.theta, a.theta.clone());
                set(&mut c.phi, a.phi.clone());
                set(&mut c.chi, a.chi);
                set(&mut c.postselect, a.postselect);
            }
        }
    }
}

/// Runs one command, writing files into the configured directory and
/// progress lines to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.apply(&mut config);
    config.ga.validate()?;
    let out_dir = config.output_path.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut ctx = commands::Context {
        config,
        out_dir,
        started: cli.timing.then(Instant::now),
        lines: Vec::new(),
        failed_checks: Vec::new(),
    };
    match cli.command {
        Command::Chsh(_) => commands::chsh(&mut ctx)?,
        Command::Scaling(_) => commands::scaling(&mut ctx)?,
        Command::Map(_) => commands::map(&mut ctx)?,
        Command::Interaction(_) => commands::interaction(&mut ctx)?,
        Command::Simulate(_) => commands::simulate(&mut ctx)?,
    }
    let stdout_err = |e| Error::io("<stdout>", e);
    for line in &ctx.lines {
        writeln!(stdout, "{line}").map_err(stdout_err)?;
    }
    for check in &ctx.failed_checks {
        writeln!(stdout, "check failed: {check}").map_err(stdout_err)?;
    }
    if ctx.config.strict && !ctx.failed_checks.is_empty() {
        return Err(Error::StrictCheck(ctx.failed_checks.join("; ")));
    }
    Ok(())
}
