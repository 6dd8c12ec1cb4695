//! The `jsgap` command-line front end.
//!
//! Every subcommand reads a [`Settings`] map built from an optional
//! `--config` file and then overridden by explicit flags.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::Settings;
pub use output::Format;

/// Failure categories, mapped to process exit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, config, input data or I/O: exit code 2.
    Usage(String),
    /// A validation run found a failing check: exit code 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Failed(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "jsgap", version, about = "Jensen-Shannon transfer-learning bounds on finite alphabets")]
pub struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Flat `key = value` file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct ProblemArgs {
    /// Source probability of the first source atom.
    #[arg(long)]
    p_s: Option<String>,
    /// Target probability of the first target atom.
    #[arg(long)]
    p_t: Option<String>,
    /// Total number of samples M.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Two source atoms, default `0,1`.
    #[arg(long)]
    source_atoms: Option<String>,
    /// Two target atoms, default `1,2`.
    #[arg(long)]
    target_atoms: Option<String>,
}

#[derive(Debug, Args, Default)]
struct BoundArgs {
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    alpha2: Option<String>,
    #[arg(long)]
    sigma2: Option<String>,
    /// sub-gaussian or sub-gamma.
    #[arg(long)]
    envelope: Option<String>,
    /// Sub-gamma scale.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    sup_loss: Option<String>,
}

#[derive(Debug, Args, Default)]
struct AlphaGridArgs {
    /// Comma list; items may be `start:end:step`.
    #[arg(long)]
    alpha1_grid: Option<String>,
    #[arg(long)]
    alpha2_grid: Option<String>,
    #[arg(long)]
    sigma2: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// KL in both directions, total variation and the (alpha1, alpha2)-JS value.
    Divergence {
        /// Source law as `atoms=[..]; probs=[..]`.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        p_s: Option<String>,
        #[arg(long)]
        p_t: Option<String>,
        #[arg(long)]
        source_atoms: Option<String>,
        #[arg(long)]
        target_atoms: Option<String>,
        #[arg(long)]
        alpha1: Option<String>,
        #[arg(long)]
        alpha2: Option<String>,
    },
    /// Bounds, exact gap and excess risk for one problem.
    Bound {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Evaluate the gap bound over an (alpha1, alpha2) grid.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: AlphaGridArgs,
    },
    /// Gap, JS bound and f-divergence baseline against M at beta = 1.
    ReproduceFig1 {
        #[arg(long)]
        p_s: Option<String>,
        #[arg(long)]
        p_t_grid: Option<String>,
        #[arg(long)]
        m_grid: Option<String>,
        #[arg(long)]
        sigma2: Option<String>,
        #[arg(long)]
        sup_loss: Option<String>,
        #[arg(long)]
        source_atoms: Option<String>,
        #[arg(long)]
        target_atoms: Option<String>,
    },
    /// Bound against alpha2 for several alpha1.
    ReproduceFig2 {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: AlphaGridArgs,
    },
    /// Check exact computations against exhaustive or Monte-Carlo oracles.
    Validate {
        /// enumerate or mc.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        n_samples: Option<String>,
        #[arg(long)]
        p_s_grid: Option<String>,
        #[arg(long)]
        p_t_grid: Option<String>,
        #[arg(long)]
        m_grid: Option<String>,
        #[arg(long)]
        beta_grid: Option<String>,
        #[arg(long)]
        gamma_grid: Option<String>,
        #[arg(long)]
        source_atoms: Option<String>,
        #[arg(long)]
        target_atoms: Option<String>,
        #[command(flatten)]
        grid: AlphaGridArgs,
    },
}

macro_rules! push {
    ($settings:expr, $from:expr; $($field:ident),+ $(,)?) => {
        $( $settings.set_opt(stringify!($field), &$from.$field)?; )+
    };
}

impl ProblemArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        push!(s, self; p_s, p_t, m, beta, gamma, source_atoms, target_atoms);
        Ok(())
    }
}

impl BoundArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        push!(s, self; alpha1, alpha2, sigma2, envelope, c, sup_loss);
        Ok(())
    }
}

impl AlphaGridArgs {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        push!(s, self; alpha1_grid, alpha2_grid, sigma2);
        Ok(())
    }
}

/// Which subcommand to run once settings are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Divergence,
    Bound,
    Sweep,
    Fig1,
    Fig2,
    Validate,
}

fn settings_for(cli: &Cli) -> Result<(Action, Settings), CliError> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if let Some(out) = &cli.output {
        s.set("output", &out.to_string_lossy())?;
    }
    push!(s, cli; format, seed, workers);
    let action = match &cli.command {
        Command::Divergence { source, target, p_s, p_t, source_atoms, target_atoms, alpha1, alpha2 } => {
            for (k, v) in [
                ("source", source),
                ("target", target),
                ("p_s", p_s),
                ("p_t", p_t),
                ("source_atoms", source_atoms),
                ("target_atoms", target_atoms),
                ("alpha1", alpha1),
                ("alpha2", alpha2),
            ] {
                s.set_opt(k, v)?;
            }
            Action::Divergence
        }
        Command::Bound { problem, bound } => {
            problem.apply(&mut s)?;
            bound.apply(&mut s)?;
            Action::Bound
        }
        Command::Sweep { problem, grid } => {
            problem.apply(&mut s)?;
            grid.apply(&mut s)?;
            Action::Sweep
        }
        Command::ReproduceFig1 { p_s, p_t_grid, m_grid, sigma2, sup_loss, source_atoms, target_atoms } => {
            for (k, v) in [
                ("p_s", p_s),
                ("p_t_grid", p_t_grid),
                ("m_grid", m_grid),
                ("sigma2", sigma2),
                ("sup_loss", sup_loss),
                ("source_atoms", source_atoms),
                ("target_atoms", target_atoms),
            ] {
                s.set_opt(k, v)?;
            }
            Action::Fig1
        }
        Command::ReproduceFig2 { problem, grid } => {
            problem.apply(&mut s)?;
            grid.apply(&mut s)?;
            Action::Fig2
        }
        Command::Validate {
            mode,
            n_samples,
            p_s_grid,
            p_t_grid,
            m_grid,
            beta_grid,
            gamma_grid,
            source_atoms,
            target_atoms,
            grid,
        } => {
            for (k, v) in [
                ("mode", mode),
                ("n_samples", n_samples),
                ("p_s_grid", p_s_grid),
                ("p_t_grid", p_t_grid),
                ("m_grid", m_grid),
                ("beta_grid", beta_grid),
                ("gamma_grid", gamma_grid),
                ("source_atoms", source_atoms),
                ("target_atoms", target_atoms),
            ] {
                s.set_opt(k, v)?;
            }
            grid.apply(&mut s)?;
            Action::Validate
        }
    };
    Ok((action, s))
}

fn dispatch(action: Action, s: &Settings) -> Result<(), CliError> {
    match action {
        Action::Divergence => commands::divergence(s),
        Action::Bound => commands::bound(s),
        Action::Sweep => commands::sweep(s, false),
        Action::Fig1 => commands::reproduce_fig1(s),
        Action::Fig2 => commands::sweep(s, true),
        Action::Validate => commands::validate(s),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (action, settings) = settings_for(cli)?;
    let workers = settings.u64_or("workers", 0)?;
    if workers == 0 {
        return dispatch(action, &settings);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers as usize)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| dispatch(action, &settings))
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, parse errors exit 2
        Err(e) => e.exit(),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
