//! Paired constructions of the walk with a reference walk driven by the
//! same uniforms.
//!
//! *Symmetric coupling.* When `p_x <= q_x` everywhere, an alarm sounds at `x`
//! with probability `q_x - p_x` and forces `X` down; otherwise both walks
//! step up iff `xi > 1/2`. The case `p_x >= q_x` is the mirror image.
//!
//! *Imbedded coupling.* The reference walk is the one read off a Bessel
//! process at integer crossings, with down-probability `q^BI`. At height
//! `x` an alarm sounds with probability
//!
//! ```text
//! a(x) = (p_x - p^BI_x) / q^BI_x   if p_x >= p^BI_x   (alarm forces X up)
//! a(x) = (q_x - q^BI_x) / p^BI_x   otherwise          (alarm forces X down)
//! ```
//!
//! and without an alarm each walk steps up iff `xi` exceeds its own `q^BI`.
//! A discrepancy is a step without alarm where the two thresholds straddle
//! `xi`. Below `h_floor` the alarm formula is not used: `X` steps up iff
//! `xi > q_x`, and any disagreement is logged as a discrepancy.
//!
//! In both constructions a step where one walk sits at 0 (and so reflects)
//! while the other does not is recorded as an alarm. Missteps are alarms
//! plus discrepancies; the gap `|X - X'|` can only move, by 2, at those.

use std::io::Write;

use rand::Rng;

use super::rep_rng;
use crate::bessel::imbedded_down_prob;
use crate::error::{Error, Result};
use crate::spec::WalkSpec;

pub const DEFAULT_H_FLOOR: u64 = 8;

/// Largest `k + cap` for which kernels are tabulated.
pub const MAX_COUPLING_HEIGHT: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    HitTarget,
    CapReached,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::HitTarget => "hit-target",
            StopReason::CapReached => "cap-reached",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    None,
    Alarm,
    Discrepancy,
}

impl StepEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            StepEvent::None => "-",
            StepEvent::Alarm => "alarm",
            StepEvent::Discrepancy => "discrepancy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrace {
    /// Heights of the walk under study, `x[i] = X_i`.
    pub x: Vec<u64>,
    /// Heights of the reference walk.
    pub x_prime: Vec<u64>,
    /// Steps `i` (transition `i -> i + 1`) at which an alarm sounded.
    pub alarms: Vec<usize>,
    /// Steps at which a discrepancy occurred.
    pub discrepancies: Vec<usize>,
    pub stop: StopReason,
}

impl CouplingTrace {
    pub fn len(&self) -> usize {
        self.x.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `N`, the total number of missteps.
    pub fn missteps(&self) -> usize {
        self.alarms.len() + self.discrepancies.len()
    }

    /// Missteps among the first `steps` transitions.
    pub fn missteps_before(&self, steps: usize) -> usize {
        self.alarms.partition_point(|&i| i < steps) + self.discrepancies.partition_point(|&i| i < steps)
    }

    fn event_at(&self, i: usize) -> StepEvent {
        if self.alarms.binary_search(&i).is_ok() {
            StepEvent::Alarm
        } else if self.discrepancies.binary_search(&i).is_ok() {
            StepEvent::Discrepancy
        } else {
            StepEvent::None
        }
    }

    /// Checks the step rule, reflection, and that the gap moves only at
    /// missteps and then by exactly 2.
    pub fn verify_gap_rule(&self) -> Result<()> {
        for i in 0..self.len() {
            let (a, b) = (self.x[i], self.x[i + 1]);
            let (c, d) = (self.x_prime[i], self.x_prime[i + 1]);
            if a.abs_diff(b) != 1 || c.abs_diff(d) != 1 {
                return Err(Error::Coupling(format!("non-unit step at {i}")));
            }
            if (a == 0 && b != 1) || (c == 0 && d != 1) {
                return Err(Error::Coupling(format!("reflection violated at {i}")));
            }
            let before = a.abs_diff(c);
            let after = b.abs_diff(d);
            let change = before.abs_diff(after);
            let misstep = self.event_at(i) != StepEvent::None;
            if change != 0 && !(misstep && change == 2) {
                return Err(Error::Coupling(format!(
                    "gap moved {before} -> {after} at step {i} without a misstep"
                )));
            }
        }
        Ok(())
    }

    /// `step, X, X_prime, event` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,X,X_prime,event")?;
        for i in 0..self.x.len() {
            let ev = if i < self.len() {
                self.event_at(i)
            } else {
                StepEvent::None
            };
            writeln!(out, "{},{},{},{}", i, self.x[i], self.x_prime[i], ev.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `down`: alarms push `X` down (`p <= q`); otherwise the mirror case.
    Symmetric { alarm: Vec<f64>, down: bool },
    Imbedded {
        q_bi: Vec<f64>,
        alarm: Vec<f64>,
        alarm_up: Vec<bool>,
        h_floor: u64,
    },
}

/// Precomputed kernel for repeated coupled runs.
#[derive(Debug, Clone)]
pub struct CouplingSetup {
    p: Vec<f64>,
    kind: Kind,
    k: u64,
    cap: u64,
    target: u64,
}

fn heights(k: u64, cap: u64) -> Result<u64> {
    let top = k + cap + 1;
    if top > MAX_COUPLING_HEIGHT {
        return Err(Error::ResourceLimit {
            what: "coupling kernel".into(),
            cells: top,
            limit: MAX_COUPLING_HEIGHT,
        });
    }
    Ok(top)
}

impl CouplingSetup {
    /// Coupling with the symmetric walk; needs `p_x <= q_x` for every
    /// `x >= 1` or `p_x >= q_x` for every `x >= 1` up to `k + cap`.
    pub fn symmetric(spec: &WalkSpec, k: u64, cap: u64) -> Result<CouplingSetup> {
        let top = heights(k, cap)?;
        let p: Vec<f64> = (0..=top)
            .map(|x| spec.transition_prob(x).map(|t| t.0))
            .collect::<Result<_>>()?;
        let down = p[1..].iter().all(|&px| px <= 0.5);
        let up = p[1..].iter().all(|&px| px >= 0.5);
        if !down && !up {
            let x = p[1..].iter().position(|&px| px > 0.5).unwrap() + 1;
            let y = p[1..].iter().position(|&px| px < 0.5).unwrap() + 1;
            return Err(Error::DriftSign(format!(
                "p_x - q_x changes sign (positive at x = {x}, negative at x = {y})"
            )));
        }
        let alarm = p
            .iter()
            .enumerate()
            .map(|(x, &px)| if x == 0 { 0.0 } else { (1.0 - 2.0 * px).abs() })
            .collect();
        Ok(CouplingSetup {
            p,
            kind: Kind::Symmetric { alarm, down },
            k,
            cap,
            target: 0,
        })
    }

    /// Coupling with the imbedded Bessel walk. Fails if `a(x)` leaves
    /// `[0, 1]` at some `x >= h_floor` within reach.
    pub fn imbedded(spec: &WalkSpec, k: u64, cap: u64, h_floor: u64) -> Result<CouplingSetup> {
        if h_floor < 1 {
            return Err(Error::Coupling("h_floor must be at least 1".into()));
        }
        let top = heights(k, cap)?;
        let delta = spec.delta();
        let p: Vec<f64> = (0..=top)
            .map(|x| spec.transition_prob(x).map(|t| t.0))
            .collect::<Result<_>>()?;
        let mut q_bi = vec![0.0; top as usize + 1];
        let mut alarm = vec![0.0; top as usize + 1];
        let mut alarm_up = vec![false; top as usize + 1];
        for x in 1..=top as usize {
            q_bi[x] = imbedded_down_prob(x as f64, delta)?;
            if (x as u64) < h_floor {
                continue;
            }
            let p_bi = 1.0 - q_bi[x];
            let (a, up) = if p[x] >= p_bi {
                ((p[x] - p_bi) / q_bi[x], true)
            } else {
                ((1.0 - p[x] - q_bi[x]) / p_bi, false)
            };
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Coupling(format!(
                    "a({x}) = {a} is outside [0, 1]; raise h_floor above {x}"
                )));
            }
            alarm[x] = a;
            alarm_up[x] = up;
        }
        Ok(CouplingSetup {
            p,
            kind: Kind::Imbedded {
                q_bi,
                alarm,
                alarm_up,
                h_floor,
            },
            k,
            cap,
            target: 0,
        })
    }

    /// Stop once `X` reaches `target` (default 0).
    pub fn with_target(mut self, target: u64) -> Self {
        self.target = target;
        self
    }

    pub fn run(&self, seed: u64, stream: u64) -> Result<CouplingTrace> {
        self.run_with(&mut rep_rng(seed, stream))
    }

    pub fn run_with<R: Rng>(&self, rng: &mut R) -> Result<CouplingTrace> {
        let mut x = self.k;
        let mut y = self.k;
        let mut trace = CouplingTrace {
            x: vec![x],
            x_prime: vec![y],
            alarms: Vec::new(),
            discrepancies: Vec::new(),
            stop: StopReason::CapReached,
        };
        for i in 0..self.cap as usize {
            let (nx, ny, ev) = self.step(x, y, rng);
            match ev {
                StepEvent::Alarm => trace.alarms.push(i),
                StepEvent::Discrepancy => trace.discrepancies.push(i),
                StepEvent::None => {}
            }
            x = nx;
            y = ny;
            trace.x.push(x);
            trace.x_prime.push(y);
            if x == self.target {
                trace.stop = StopReason::HitTarget;
                break;
            }
        }
        trace.verify_gap_rule()?;
        Ok(trace)
    }

    fn step<R: Rng>(&self, x: u64, y: u64, rng: &mut R) -> (u64, u64, StepEvent) {
        let up = |h: u64, go_up: bool| if h == 0 || go_up { h + 1 } else { h - 1 };
        let reflecting = (x == 0) != (y == 0);
        match &self.kind {
            Kind::Symmetric { alarm, down } => {
                let u: f64 = rng.random();
                let xi: f64 = rng.random();
                let sounded = u < alarm[x as usize];
                let shared = xi > 0.5;
                let nx = if sounded { up(x, !*down) } else { up(x, shared) };
                let ny = up(y, shared);
                let ev = if sounded || reflecting {
                    StepEvent::Alarm
                } else {
                    StepEvent::None
                };
                (nx, ny, ev)
            }
            Kind::Imbedded {
                q_bi,
                alarm,
                alarm_up,
                h_floor,
            } => {
                let u: f64 = rng.random();
                let xi: f64 = rng.random();
                let ny = up(y, xi > q_bi[y as usize]);
                if x >= *h_floor && y >= *h_floor {
                    let xs = x as usize;
                    if u < alarm[xs] {
                        return (up(x, alarm_up[xs]), ny, StepEvent::Alarm);
                    }
                    let nx = up(x, xi > q_bi[xs]);
                    let ev = if (nx > x) != (ny > y) {
                        StepEvent::Discrepancy
                    } else {
                        StepEvent::None
                    };
                    return (nx, ny, ev);
                }
                let nx = up(x, xi > 1.0 - self.p[x as usize]);
                let ev = if reflecting {
                    StepEvent::Alarm
                } else if (nx > x) != (ny > y) {
                    StepEvent::Discrepancy
                } else {
                    StepEvent::None
                };
                (nx, ny, ev)
            }
        }
    }
}

/// One symmetric-coupling run from `k`, stopped when `X` hits 0.
pub fn coupled_sym_run(spec: &WalkSpec, k: u64, cap: u64, seed: u64) -> Result<CouplingTrace> {
    CouplingSetup::symmetric(spec, k, cap)?.run(seed, 0)
}

/// One imbedded-coupling run from `k` with the default floor, stopped when
/// `X` hits 0.
pub fn coupled_bessel_imbedded_run(spec: &WalkSpec, k: u64, cap: u64, seed: u64) -> Result<CouplingTrace> {
    CouplingSetup::imbedded(spec, k, cap, DEFAULT_H_FLOOR)?.run(seed, 0)
}
