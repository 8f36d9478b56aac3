//! Up-front cost estimates. Pure arithmetic over the grid sizes.

use besselwalk_core::exact::{occupancy_cells, MAX_ROLLING_CELLS};
use besselwalk_core::montecarlo::coupling::MAX_COUPLING_HEIGHT;

use crate::config::{Experiment, KSpec, RunConfig};
use crate::experiments::{MAX_COUPLING_TRACES, SCALE_HORIZON};

/// Throughput assumed for `est_seconds`.
const CELLS_PER_SECOND: f64 = 1e9;
const STEPS_PER_SECOND: f64 = 1e8;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResourceEstimate {
    /// DP cell updates plus simulated steps.
    pub cells: u64,
    /// Peak working memory of the largest single job.
    pub bytes: u64,
    pub est_seconds: f64,
    /// The most expensive `(n, k)` job and its cell count.
    pub largest: Option<(u64, u64, u64)>,
}

impl ResourceEstimate {
    fn dp(&mut self, n: u64, k: u64, cells: u64, width: u64) {
        self.cells += cells;
        self.est_seconds += cells as f64 / CELLS_PER_SECOND;
        self.bytes = self.bytes.max(16 * width);
        if self.largest.is_none_or(|(_, _, c)| cells > c) {
            self.largest = Some((n, k, cells));
        }
    }

    fn sim(&mut self, n: u64, k: u64, steps: u64, width: u64) {
        self.cells += steps;
        self.est_seconds += steps as f64 / STEPS_PER_SECOND;
        self.bytes = self.bytes.max(8 * width);
        if self.largest.is_none_or(|(_, _, c)| steps > c) {
            self.largest = Some((n, k, steps));
        }
    }
}

/// Cells of one first-passage table to horizon `n`.
pub fn passage_cells(n: u64) -> u64 {
    n * (n + 2)
}

fn ks(cfg: &RunConfig, defaults: &[KSpec]) -> Vec<KSpec> {
    if cfg.k_list.is_empty() {
        defaults.to_vec()
    } else {
        cfg.k_list.clone()
    }
}

pub fn resource_estimate(cfg: &RunConfig, experiment: Experiment, grid: &[u64]) -> ResourceEstimate {
    let mut est = ResourceEstimate::default();
    let chi = cfg.chi_values();
    let n_max = grid.last().copied().unwrap_or(0);
    let specs = cfg.specs.len() as u64;
    for _ in 0..specs {
        match experiment {
            Experiment::Audit => {
                let defaults = [1, 2, 7, 64].map(KSpec::Fixed);
                for &n in grid {
                    let heights = ks(cfg, &defaults);
                    for k in &heights {
                        let k = k.resolve(n, cfg.chi_or_default());
                        // forward from k and 0, the dual walk, and a passage table
                        est.dp(
                            n,
                            k,
                            2 * occupancy_cells(k as usize, n as usize) + 2 * passage_cells(n),
                            n + k + 2,
                        );
                    }
                    est.dp(n, 0, (heights.len() as u64 + 1) * passage_cells(n), n + 2);
                }
            }
            Experiment::ConvergeTail | Experiment::ConvergePoint => {
                est.dp(n_max, 0, passage_cells(n_max), n_max + 2);
                est.dp(0, 0, SCALE_HORIZON.max(4 * n_max as usize) as u64, SCALE_HORIZON as u64);
            }
            Experiment::HitRegimes | Experiment::OccupancyLlt => {
                let defaults = [KSpec::Fixed(1), KSpec::Fixed(4), KSpec::Mid, KSpec::High];
                for &c in &chi {
                    for k in ks(cfg, &defaults) {
                        for &n in grid {
                            let k = k.resolve(n, c);
                            let cells = if experiment == Experiment::HitRegimes {
                                passage_cells(n + 1)
                            } else {
                                occupancy_cells(k as usize, n as usize + 1)
                            };
                            est.dp(n, k, cells, n + k + 2);
                        }
                    }
                }
            }
            Experiment::LocationLlt => {
                est.dp(
                    n_max,
                    0,
                    occupancy_cells(0, n_max as usize + 1) + passage_cells(n_max + 1),
                    n_max + 2,
                );
            }
            Experiment::CouplingStudy => {
                let reps = cfg.reps;
                let mut n_mc: Vec<u64> = grid.iter().copied().filter(|&n| (2..=4096).contains(&n)).collect();
                if n_mc.is_empty() {
                    n_mc.push(64);
                }
                for &n in &n_mc {
                    est.sim(n, 0, 3 * reps * n, n + 2);
                }
                est.sim(3, 0, 2 * reps * 8, 8);
                for k in ks(cfg, &[KSpec::Sqrt]) {
                    for &m in grid {
                        let k = k.resolve(m, cfg.chi_or_default());
                        let cap = 64 * m;
                        est.sim(
                            m,
                            k,
                            reps.min(MAX_COUPLING_TRACES) * cap,
                            (k + cap + 1).min(MAX_COUPLING_HEIGHT),
                        );
                    }
                }
            }
            Experiment::BesselCheck => {}
            Experiment::EstimateK0 => {
                for &n in grid {
                    est.dp(n, 0, n, n);
                }
            }
        }
    }
    est
}

/// The first job that exceeds the engine's limits, as a message naming it.
pub fn refusal(cfg: &RunConfig, experiment: Experiment, grid: &[u64]) -> Option<String> {
    let est = resource_estimate(cfg, experiment, grid);
    let (n, k, cells) = est.largest?;
    if cells > MAX_ROLLING_CELLS {
        return Some(format!(
            "{experiment} job at n = {n}, k = {k} needs {cells} cells, above the limit of {MAX_ROLLING_CELLS}"
        ));
    }
    None
}
