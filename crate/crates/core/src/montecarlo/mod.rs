//! Path simulation and Monte-Carlo estimates.
//!
//! Replication `r` of a run with seed `s` draws from `ChaCha8Rng` seeded with
//! `s` on stream `r`, so results do not depend on how replications are
//! scheduled across threads.

pub mod coupling;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spec::WalkSpec;

pub use coupling::{coupled_bessel_imbedded_run, coupled_sym_run, CouplingSetup, CouplingTrace, StopReason};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const MIN_REPS: u64 = 100;

/// Generator for replication `stream` of a run seeded with `seed`.
pub fn rep_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Up-probabilities `p_0, ..., p_max`.
#[derive(Debug, Clone)]
pub struct StepTable {
    p: Vec<f64>,
}

impl StepTable {
    pub fn new(spec: &WalkSpec, max_height: u64) -> Result<StepTable> {
        let p = (0..=max_height)
            .map(|x| spec.transition_prob(x).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        Ok(StepTable { p })
    }

    /// One step from `x`, which must be inside the table.
    #[inline]
    pub fn step<R: Rng>(&self, x: u64, rng: &mut R) -> u64 {
        if x == 0 || rng.random::<f64>() < self.p[x as usize] {
            x + 1
        } else {
            x - 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassageSample {
    /// `None` when 0 was not reached within the cap.
    pub tau: Option<u64>,
    /// Running maximum up to `tau` (or the cap).
    pub h_max: u64,
}

fn passage_with<R: Rng>(table: &StepTable, k: u64, cap: u64, rng: &mut R) -> PassageSample {
    let mut x = k;
    let mut h_max = k;
    for t in 1..=cap {
        x = table.step(x, rng);
        h_max = h_max.max(x);
        if x == 0 {
            return PassageSample { tau: Some(t), h_max };
        }
    }
    PassageSample { tau: None, h_max }
}

/// Simulates from `k` until 0 is reached (returned to, for `k = 0`) or `cap`
/// steps have been taken.
pub fn sample_first_passage(spec: &WalkSpec, k: u64, cap: u64, seed: u64) -> Result<PassageSample> {
    if cap < 1 {
        return Err(Error::Domain("sample_first_passage needs cap >= 1".into()));
    }
    let table = StepTable::new(spec, k + cap + 1)?;
    Ok(passage_with(&table, k, cap, &mut rep_rng(seed, 0)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// `tau_0 = m` from `k`.
    TauEq { k: u64, m: u64 },
    /// `tau_0 >= n` from `k`.
    TauGe { k: u64, n: u64 },
    /// `X_n = j` from `k`.
    XEq { k: u64, n: u64, j: u64 },
    /// Excursion height `H >= h`.
    HGe { h: u64 },
    /// At least `t` missteps in the imbedded coupling from `k` before `X`
    /// reaches `target` or `cap` steps pass.
    MisstepsGe { k: u64, target: u64, cap: u64, t: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub p_hat: f64,
    /// Half-width of the Wilson score interval.
    pub ci_halfwidth: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: u64,
    pub reps: u64,
    /// Replications that hit the step cap.
    pub censored: u64,
}

/// Wilson score interval `(low, high)` at normal quantile `z`.
pub fn wilson_interval(successes: u64, reps: u64, z: f64) -> (f64, f64) {
    let n = reps as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == reps {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low, high)
}

enum Sampler {
    Walk(StepTable),
    Coupling(CouplingSetup, u64),
}

/// Monte-Carlo probability of `event` with a 95% Wilson interval.
pub fn estimate(event: &Event, spec: &WalkSpec, reps: u64, seed: u64) -> Result<Estimate> {
    if reps < MIN_REPS {
        return Err(Error::Domain(format!("estimate needs reps >= {MIN_REPS}, got {reps}")));
    }
    let sampler = match *event {
        Event::TauEq { k, m } => Sampler::Walk(StepTable::new(spec, k + m + 1)?),
        Event::TauGe { k, n } => Sampler::Walk(StepTable::new(spec, k + n + 1)?),
        Event::XEq { k, n, .. } => Sampler::Walk(StepTable::new(spec, k + n + 1)?),
        Event::HGe { h } => Sampler::Walk(StepTable::new(spec, h + 1)?),
        Event::MisstepsGe { k, target, cap, t } => Sampler::Coupling(
            CouplingSetup::imbedded(spec, k, cap, coupling::DEFAULT_H_FLOOR)?.with_target(target),
            t,
        ),
    };

    let one = |r: u64| -> Result<(u64, u64)> {
        let mut rng = rep_rng(seed, r);
        let hit = match (&sampler, event) {
            (Sampler::Walk(table), Event::TauEq { k, m }) => {
                let s = passage_with(table, *k, *m, &mut rng);
                (s.tau == Some(*m), s.tau.is_none())
            }
            (Sampler::Walk(table), Event::TauGe { k, n }) => {
                if *n <= 1 {
                    (true, false)
                } else {
                    let s = passage_with(table, *k, n - 1, &mut rng);
                    (s.tau.is_none(), s.tau.is_none())
                }
            }
            (Sampler::Walk(table), Event::XEq { k, n, j }) => {
                let mut x = *k;
                for _ in 0..*n {
                    x = table.step(x, &mut rng);
                }
                (x == *j, false)
            }
            (Sampler::Walk(table), Event::HGe { h }) => {
                let mut x = table.step(0, &mut rng);
                while x != 0 && x < *h {
                    x = table.step(x, &mut rng);
                }
                (x >= *h, false)
            }
            (Sampler::Coupling(setup, t), Event::MisstepsGe { .. }) => {
                let trace = setup.run_with(&mut rng)?;
                (trace.missteps() as u64 >= *t, trace.stop == StopReason::CapReached)
            }
            _ => unreachable!("sampler is built from the event"),
        };
        Ok((hit.0 as u64, hit.1 as u64))
    };

    let (successes, censored) = (0..reps)
        .into_par_iter()
        .map(one)
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let (ci_low, ci_high) = wilson_interval(successes, reps, Z95);
    Ok(Estimate {
        p_hat: successes as f64 / reps as f64,
        ci_halfwidth: 0.5 * (ci_high - ci_low),
        ci_low,
        ci_high,
        successes,
        reps,
        censored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_time_is_even() {
        let spec = WalkSpec::rational(0.5).unwrap();
        let table = StepTable::new(&spec, 1002).unwrap();
        let mut rng = rep_rng(3, 0);
        for _ in 0..2000 {
            let s = passage_with(&table, 0, 1000, &mut rng);
            if let Some(t) = s.tau {
                assert!(t >= 2 && t % 2 == 0);
            }
            assert!(s.h_max >= 1);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = WalkSpec::ssrw();
        assert_eq!(
            sample_first_passage(&spec, 5, 500, 11).unwrap(),
            sample_first_passage(&spec, 5, 500, 11).unwrap()
        );
        let e1 = estimate(&Event::TauEq { k: 0, m: 2 }, &spec, 1000, 9).unwrap();
        let e2 = estimate(&Event::TauEq { k: 0, m: 2 }, &spec, 1000, 9).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn parity_zero_event() {
        let e = estimate(&Event::TauEq { k: 0, m: 3 }, &WalkSpec::ssrw(), 500, 1).unwrap();
        assert_eq!(e.p_hat, 0.0);
        assert_eq!(e.ci_low, 0.0);
    }

    #[test]
    fn wilson_contains_truth_on_symmetric_case() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_few_reps() {
        assert!(estimate(&Event::HGe { h: 2 }, &WalkSpec::ssrw(), 10, 0).is_err());
    }
}
