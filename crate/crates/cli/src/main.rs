use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use besselwalk_cli::{run, ConfigError, Experiment, HarnessError, RunConfig};

#[derive(Subcommand)]
enum Command {
    /// Check the exact identities and inequalities.
    Audit(Flags),
    /// Tail and point convergence of the return time.
    Converge(Flags),
    /// First-passage probabilities across height regimes.
    HitRegimes(Flags),
    /// Local limit theorems for occupancy and location.
    Llt(Flags),
    /// Monte Carlo estimates and the coupling study.
    Couple(Flags),
    /// Exit-time moments of the Bessel process.
    BesselCheck(Flags),
    /// Estimate the return-time constant.
    EstimateK0(Flags),
}

#[derive(clap::Args, Clone)]
struct Flags {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Audit(_) => "audit",
            Command::Converge(_) => "converge",
            Command::HitRegimes(_) => "hit-regimes",
            Command::Llt(_) => "llt",
            Command::Couple(_) => "couple",
            Command::BesselCheck(_) => "bessel-check",
            Command::EstimateK0(_) => "estimate-k0",
        }
    }

    /// Experiments run when the config does not pick one.
    fn experiments(&self) -> &'static [Experiment] {
        match self {
            Command::Audit(_) => &[Experiment::Audit],
            Command::Converge(_) => &[Experiment::ConvergeTail, Experiment::ConvergePoint],
            Command::HitRegimes(_) => &[Experiment::HitRegimes],
            Command::Llt(_) => &[Experiment::OccupancyLlt, Experiment::LocationLlt],
            Command::Couple(_) => &[Experiment::CouplingStudy],
            Command::BesselCheck(_) => &[Experiment::BesselCheck],
            Command::EstimateK0(_) => &[Experiment::EstimateK0],
        }
    }
}

#[derive(Parser)]
#[command(
    name = "besselwalk",
    version,
    about = "Exact, asymptotic and Monte Carlo experiments on Bessel-like random walks"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

fn plan(command: &Command, cfg: &RunConfig) -> Result<Vec<Experiment>, HarnessError> {
    let allowed = command.experiments();
    match cfg.experiment {
        None => Ok(allowed.to_vec()),
        Some(e) if allowed.contains(&e) => Ok(vec![e]),
        Some(e) => Err(HarnessError::Config(ConfigError {
            line: None,
            key: Some("experiment".into()),
            message: format!("`{e}` cannot run under `{}`", command.name()),
        })),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: Args) -> Result<bool, HarnessError> {
    let command = args.command;
    let Flags {
        config,
        out,
        seed,
        threads,
    } = match &command {
        Command::Audit(f)
        | Command::Converge(f)
        | Command::HitRegimes(f)
        | Command::Llt(f)
        | Command::Couple(f)
        | Command::BesselCheck(f)
        | Command::EstimateK0(f) => f.clone(),
    };
    let mut cfg = RunConfig::from_file(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Run(e.to_string()))?;
    }
    let out_dir = out
        .or_else(|| cfg.out_path.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let mut all_pass = true;
    for experiment in plan(&command, &cfg)? {
        let (report, files) = run(&cfg, experiment, &out_dir)?;
        for f in report.failures() {
            eprintln!("FAIL {}: {}", f.name, f.detail);
        }
        let verdict = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {experiment}: {} checks, {} rows",
            report.checks.len(),
            report.rows.len()
        );
        for f in files {
            println!("  wrote {}", f.display());
        }
        all_pass &= report.passed();
    }
    Ok(all_pass)
}
