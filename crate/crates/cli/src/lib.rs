//! Batch harness: runs experiments from a [`RunConfig`] and writes CSV
//! tables, diagnostics and a PASS/FAIL summary into an output directory.
//!
//! Output for an experiment `e`:
//!
//! * `e.csv`: result rows, sorted by `(spec_id, formula_id, n, k)`;
//! * `e_diagnostics.csv`: one line per series with the last three
//!   `|ratio - 1|` values and a `contracting` flag;
//! * `e_summary.txt`: seed, resource estimate, details and one PASS/FAIL
//!   line per check;
//! * `traces/*.csv` for the coupling study.
//!
//! Nothing in these files depends on wall-clock time or thread count.

pub mod analysis;
pub mod config;
pub mod experiments;
pub mod resources;
pub mod row;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub use config::{ConfigError, Experiment, KSpec, RunConfig};
pub use resources::{resource_estimate, ResourceEstimate};
pub use row::ResultRow;

use besselwalk_core::CouplingTrace;

use analysis::Diagnostic;

/// Final-deviation tolerance for ratio series, by experiment.
pub fn default_tolerance(experiment: Experiment) -> f64 {
    match experiment {
        Experiment::OccupancyLlt | Experiment::LocationLlt => 0.15,
        _ => 0.10,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    /// The resource estimate exceeds the engine's limits.
    Refused(String),
    Run(String),
    Io(std::io::Error),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Refused(_) => 2,
            HarnessError::Run(_) | HarnessError::Io(_) => 1,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Refused(m) => write!(f, "refused: {m}"),
            HarnessError::Run(m) => write!(f, "run failed: {m}"),
            HarnessError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

#[derive(Debug)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub checks: Vec<Check>,
    pub summary: Vec<String>,
    pub estimate: ResourceEstimate,
    /// Coupling traces, by file stem.
    pub traces: Vec<(String, CouplingTrace)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Computes one experiment without touching the file system.
pub fn evaluate(cfg: &RunConfig, experiment: Experiment) -> Result<Report, HarnessError> {
    let grid = cfg.grid_for(experiment)?;
    if let Some(why) = resources::refusal(cfg, experiment, &grid) {
        return Err(HarnessError::Refused(why));
    }
    let estimate = resource_estimate(cfg, experiment, &grid);
    let raw = match experiment {
        Experiment::Audit => experiments::audit(cfg, &grid)?,
        Experiment::ConvergeTail => experiments::converge_tail(cfg, &grid)?,
        Experiment::ConvergePoint => experiments::converge_point(cfg, &grid)?,
        Experiment::HitRegimes => experiments::hit_regimes(cfg, &grid)?,
        Experiment::OccupancyLlt => experiments::occupancy_llt(cfg, &grid)?,
        Experiment::LocationLlt => experiments::location_llt(cfg, &grid)?,
        Experiment::CouplingStudy => experiments::coupling_study(cfg, &grid)?,
        Experiment::BesselCheck => experiments::bessel_check(cfg, &grid)?,
        Experiment::EstimateK0 => experiments::estimate_k0(cfg, &grid)?,
    };
    let tolerance = cfg.tolerance.unwrap_or_else(|| default_tolerance(experiment));
    let diagnostics = analysis::analyse(&raw.rows, tolerance);
    let mut checks = raw.checks;
    checks.extend(analysis::checks(&diagnostics));
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let mut rows: Vec<ResultRow> = raw.rows.into_iter().map(|t| t.row).collect();
    row::sort_rows(&mut rows);
    Ok(Report {
        experiment,
        seed: cfg.seed,
        rows,
        diagnostics,
        checks,
        summary: raw.summary,
        estimate,
        traces: raw.traces,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_trace(path: &Path, trace: &CouplingTrace) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    writeln!(out, "i,x,x_prime,alarm,discrepancy")?;
    for i in 0..trace.x.len() {
        let alarm = trace.alarms.binary_search(&i).is_ok() as u8;
        let disc = trace.discrepancies.binary_search(&i).is_ok() as u8;
        writeln!(out, "{i},{},{},{alarm},{disc}", trace.x[i], trace.x_prime[i])?;
    }
    out.flush()?;
    Ok(())
}

impl Report {
    /// Writes the report into `dir` and returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        fs::create_dir_all(dir)?;
        let stem = self.experiment.as_str();
        let mut files = Vec::new();

        let path = dir.join(format!("{stem}.csv"));
        let mut out = create(&path)?;
        row::write_rows(&mut out, &self.rows)?;
        out.flush()?;
        files.push(path);

        if !self.diagnostics.is_empty() {
            let path = dir.join(format!("{stem}_diagnostics.csv"));
            let mut out = create(&path)?;
            analysis::write_diagnostics(&mut out, &self.diagnostics)?;
            out.flush()?;
            files.push(path);
        }

        if !self.traces.is_empty() {
            let tdir = dir.join("traces");
            fs::create_dir_all(&tdir)?;
            for (name, trace) in &self.traces {
                let path = tdir.join(format!("{name}.csv"));
                write_trace(&path, trace)?;
                files.push(path);
            }
        }

        let path = dir.join(format!("{stem}_summary.txt"));
        let mut out = create(&path)?;
        writeln!(out, "experiment {stem}")?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(
            out,
            "estimated work {} cells, peak {} bytes, about {:.1} s",
            self.estimate.cells, self.estimate.bytes, self.estimate.est_seconds
        )?;
        for line in &self.summary {
            writeln!(out, "{line}")?;
        }
        for c in &self.checks {
            writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.failures().count();
        writeln!(
            out,
            "{} {} checks, {} failed",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed
        )?;
        out.flush()?;
        files.push(path);
        Ok(files)
    }
}

/// Evaluates and writes one experiment.
pub fn run(cfg: &RunConfig, experiment: Experiment, out_dir: &Path) -> Result<(Report, Vec<PathBuf>), HarnessError> {
    let report = evaluate(cfg, experiment)?;
    let files = report.write(out_dir)?;
    Ok((report, files))
}
