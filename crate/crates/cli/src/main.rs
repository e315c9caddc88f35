//! `belllab`: audit candidate theories of the spin-singlet experiment for
//! locality conditions, evaluate CHSH, and simulate seeded trial logs.
//!
//! Exit status is 0 whenever a command ran (verdicts live in the report),
//! 2 for configuration errors and 3 for runtime audit errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use commands::{config_err, AuditConfig, ChshConfig, Failure, SimulateConfig};
use config::{parse_dir, setting_lists, GridConfig, StrategyFile, TheoryConfig};

#[derive(Parser)]
#[command(name = "belllab", version, about = "Locality audits, CHSH and Monte Carlo for two-wing spin experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a theory against the locality conditions.
    Audit(AuditArgs),
    /// Evaluate the CHSH combination at four settings, or search for its maximum.
    Chsh(ChshArgs),
    /// Simulate a seeded trial log and compare it with the analytic predictions.
    Simulate(SimulateArgs),
    /// List registered theories, partitions and setting laws.
    List,
}

#[derive(Args)]
struct TheoryArgs {
    /// Registered theory, `name[:arg]` (see `belllab list`).
    #[arg(long)]
    theory: Option<String>,
    /// Transform applied left to right: `coarse-grain:<partition>` or `inject:<law>`.
    #[arg(long = "transform", value_name = "KIND:ARG")]
    transforms: Vec<String>,
    /// JSON strategy table for `lhv-deterministic`.
    #[arg(long)]
    strategy_file: Option<PathBuf>,
}

impl TheoryArgs {
    fn config(&self) -> Result<TheoryConfig, Failure> {
        let theory = self.theory.clone().ok_or_else(|| config_err(anyhow!("--theory is required")))?;
        let strategies = self.strategy_file.as_deref().map(StrategyFile::load).transpose().map_err(config_err)?;
        Ok(TheoryConfig { theory, transforms: self.transforms.clone(), strategies })
    }
}

#[derive(Args)]
struct SettingArgs {
    /// Comma-separated angles in degrees within the x–z plane.
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    /// Angles for Bob's wing when they differ from `--angles`.
    #[arg(long, allow_hyphen_values = true)]
    angles_b: Option<String>,
    /// Extra setting as a 3-vector `x,y,z` (repeatable).
    #[arg(long = "dir", value_name = "X,Y,Z", allow_hyphen_values = true)]
    dirs: Vec<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    theory: TheoryArgs,
    #[command(flatten)]
    settings: SettingArgs,
    /// Coplanar settings per wing on the default grid.
    #[arg(long, default_value_t = belllab::conditions::DEFAULT_COPLANAR_SETTINGS)]
    grid_n: usize,
    /// λ samples drawn for sampled ensembles.
    #[arg(long, default_value_t = belllab::conditions::DEFAULT_LAMBDA_SAMPLES)]
    lambda_samples: usize,
    /// Audit tolerance.
    #[arg(long, default_value_t = config::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, env = "BELLLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay every witness in an existing audit report instead of auditing.
    #[arg(long, value_name = "REPORT")]
    replay_witness: Option<PathBuf>,
}

#[derive(Args)]
struct ChshArgs {
    #[command(flatten)]
    theory: TheoryArgs,
    /// `a,a′,b,b′` in degrees within the x–z plane.
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    /// Setting as `x,y,z`; give four, in the order a, a′, b, b′.
    #[arg(long = "dir", value_name = "X,Y,Z", allow_hyphen_values = true)]
    dirs: Vec<String>,
    /// Search coplanar settings for the largest |S|.
    #[arg(long)]
    search: bool,
    /// Angular steps per full turn for `--search`.
    #[arg(long, default_value_t = commands::default_search_steps())]
    search_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    theory: TheoryArgs,
    #[command(flatten)]
    settings: SettingArgs,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, env = "BELLLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores); the log does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// z-score threshold for the empirical flags.
    #[arg(long, default_value_t = commands::default_tol_sigma())]
    tol_sigma: f64,
    /// Trial log destination.
    #[arg(long, default_value = "trials.csv")]
    csv: PathBuf,
    /// JSON summary path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Audit(args) => {
            if let Some(report) = &args.replay_witness {
                return commands::replay(report, args.out.as_deref());
            }
            let s = &args.settings;
            let lists = setting_lists(s.angles.as_deref(), s.angles_b.as_deref(), &s.dirs).map_err(config_err)?;
            let (settings_a, settings_b) = lists.unzip();
            let cfg = AuditConfig {
                theory: args.theory.config()?,
                grid: GridConfig {
                    grid_n: args.grid_n,
                    lambda_samples: args.lambda_samples,
                    seed: args.seed,
                    settings_a,
                    settings_b,
                },
                tol: args.tol,
            };
            commands::audit(cfg, args.out.as_deref())
        }
        Command::Chsh(args) => {
            let mut settings = match &args.angles {
                Some(a) => config::parse_angles(a).map_err(config_err)?,
                None => Vec::new(),
            };
            for d in &args.dirs {
                settings.push(parse_dir(d).map_err(config_err)?);
            }
            let settings = match (settings.len(), args.search) {
                (0, _) => None,
                (4, false) => Some([settings[0], settings[1], settings[2], settings[3]]),
                (_, true) => return Err(config_err(anyhow!("--search does not take settings"))),
                (n, false) => return Err(config_err(anyhow!("chsh needs exactly four settings, got {n}"))),
            };
            let cfg = ChshConfig {
                theory: args.theory.config()?,
                settings,
                search: args.search,
                search_steps: args.search_steps,
            };
            commands::chsh(cfg, args.out.as_deref())
        }
        Command::Simulate(args) => {
            let seed = args.seed.ok_or_else(|| config_err(anyhow!("simulate needs --seed or BELLLAB_SEED")))?;
            let s = &args.settings;
            let theory = args.theory.config()?;
            let explicit = setting_lists(s.angles.as_deref(), s.angles_b.as_deref(), &s.dirs).map_err(config_err)?;
            let (settings_a, settings_b) = explicit.unwrap_or_default();
            let cfg = SimulateConfig {
                theory,
                settings_a,
                settings_b,
                trials: args.trials,
                seed,
                workers: args.workers,
                tol_sigma: args.tol_sigma,
                csv: args.csv,
            };
            commands::simulate(cfg, args.out.as_deref())
        }
        Command::List => {
            commands::list();
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
