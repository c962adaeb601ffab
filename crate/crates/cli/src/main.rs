//! `minorant`: seeded experiment runner for the convex minorant samplers.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use minorant_core::Error;

use config::{Experiment, ExperimentConfig, Format, Target};

#[derive(Parser, Debug)]
#[command(name = "minorant", version, about = "Epsilon-strong simulation of stable convex minorants")]
struct Cli {
    /// Experiment to run; may instead be given in the config file.
    #[arg(value_enum)]
    experiment: Option<Experiment>,
    /// JSON file mirroring the experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Linear drift of the process.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Parameter grid as `alpha:rho` pairs, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Replications per grid point.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the dominator trace of replication 0 to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Exponent of the randomisation density used by first passage estimates.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// First passage barrier.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Excursion time.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Sampling times for sample-fdd, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    target: Option<Target>,
    /// Bootstrap resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io { path: PathBuf, message: String },
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Output(_) => "output",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NumericEvaluation(_) | Error::DominationViolation(_) | Error::Range(_)) => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Output(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Output(m) => m.clone(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn parse_grid(items: &[String]) -> Result<Vec<(f64, f64)>, CliError> {
    items
        .iter()
        .map(|s| {
            let (a, r) = s.split_once(':').ok_or_else(|| CliError::Usage(format!("grid point `{s}` is not alpha:rho")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number in grid point `{s}`")));
            Ok((num(a)?, num(r)?))
        })
        .collect()
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let e = cli.experiment.ok_or_else(|| CliError::Usage("no experiment given".into()))?;
            ExperimentConfig::new(e)
        }
    };
    if let Some(e) = cli.experiment {
        cfg.experiment = e;
    }
    if let Some(g) = &cli.grid {
        cfg.grid = Some(parse_grid(g)?);
    }
    macro_rules! overlay {
        ($($f:ident),*) => { $(if let Some(v) = cli.$f { cfg.$f = Some(v); })* };
    }
    overlay!(alpha, rho, mu, n, out, trace, times);
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = cli.$f { cfg.$f = v; })* };
    }
    set!(eps, seed, jobs, format, delta, x, t, target, bootstrap);
    Ok(cfg)
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Usage(e.render().to_string().trim().to_string())),
    };
    let print = cli.print_config;
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if print {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serialises"));
        return ExitCode::SUCCESS;
    }
    match run::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
