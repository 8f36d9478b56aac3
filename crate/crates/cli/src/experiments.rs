//! Experiment runners. Each returns rows tagged with the series they belong
//! to; [`crate::analysis`] turns the series into diagnostics and verdicts.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use besselwalk_core::asymptotics::{AsymptoticEval, Evaluator, HeightRegime};
use besselwalk_core::bessel::bessel_exit_moments;
use besselwalk_core::exact::audit::{audit_identities, audit_inequalities};
use besselwalk_core::exact::{first_passage, FirstPassageTable, ForwardEvolution};
use besselwalk_core::montecarlo::coupling::{CouplingSetup, DEFAULT_H_FLOOR};
use besselwalk_core::montecarlo::{estimate, Event, StopReason, Z95};
use besselwalk_core::{CouplingTrace, Error, FormulaId, ScaleTable};

use crate::config::{KSpec, RunConfig, SpecEntry};
use crate::row::ResultRow;
use crate::{Check, HarnessError};

/// Identity residual accepted by the audit.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Smallest horizon for the scale tables behind the asymptotic evaluators.
pub const SCALE_HORIZON: usize = 1 << 20;

/// Traces per `(spec, n, k)` in the coupling study.
pub const MAX_COUPLING_TRACES: u64 = 10_000;

/// A row plus the label of the series it extends across `n`.
#[derive(Debug, Clone)]
pub struct Tagged {
    pub series: String,
    pub row: ResultRow,
}

#[derive(Debug, Default)]
pub struct Raw {
    pub rows: Vec<Tagged>,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
    /// Coupling traces to export, by file stem.
    pub traces: Vec<(String, CouplingTrace)>,
}

fn regime_label(entry: &SpecEntry) -> &'static str {
    entry.spec.kappa_and_regime().1.as_str()
}

fn height_label(h: HeightRegime) -> &'static str {
    match h {
        HeightRegime::Low => "low",
        HeightRegime::Mid => "mid",
        HeightRegime::High => "high",
    }
}

fn series_label(k: KSpec, chi: Option<f64>) -> String {
    match chi {
        Some(c) => format!("k={};chi={c}", k.label()),
        None => format!("k={}", k.label()),
    }
}

/// `None` when the formula does not apply to the spec's regime.
fn applicable(r: Result<AsymptoticEval, Error>) -> Result<Option<AsymptoticEval>, Error> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Regime { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `n` moved up by one when `n + k` is odd.
fn parity_pair(n: u64, k: u64) -> (u64, Option<(u64, u64)>) {
    if (n + k) % 2 == 1 {
        (n + 1, Some((n, k)))
    } else {
        (n, None)
    }
}

fn scale_table(entry: &SpecEntry, n_max: u64) -> Result<ScaleTable, Error> {
    ScaleTable::build(&entry.spec, SCALE_HORIZON.max(4 * n_max as usize))
}

fn row(entry: &SpecEntry, eval: &AsymptoticEval, exact: f64, regime: String) -> ResultRow {
    let mut r = ResultRow::new(&entry.id, entry.spec.delta(), eval.formula, eval.n, eval.k);
    r.exact = Some(exact);
    r.asymptotic = Some(eval.value);
    r.regime = regime;
    r
}

fn with_spec<T>(entry: &SpecEntry, r: Result<T, Error>) -> Result<T, HarnessError> {
    r.map_err(|e| HarnessError::Run(format!("spec `{}`: {e}", entry.id)))
}

pub fn audit(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let ks: Vec<KSpec> = if cfg.k_list.is_empty() {
        [1, 2, 7, 64].map(KSpec::Fixed).to_vec()
    } else {
        cfg.k_list.clone()
    };
    let chi = cfg.chi_or_default();
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        for &n in grid {
            let heights: BTreeSet<u64> = ks.iter().map(|k| k.resolve(n, chi)).filter(|&k| k <= n).collect();
            let reports = with_spec(
                entry,
                heights
                    .par_iter()
                    .map(|&k| audit_identities(&entry.spec, n as usize, k as usize))
                    .collect::<Result<Vec<_>, _>>(),
            )?;
            for rep in &reports {
                let mut r = ResultRow::new(&entry.id, entry.spec.delta(), FormulaId::Audit, n, rep.k as u64);
                r.exact = Some(rep.max_residual());
                r.regime = regime_label(entry).to_string();
                raw.rows.push(Tagged {
                    series: format!("k={}", rep.k),
                    row: r,
                });
                let reversal = rep.reversal.map_or("n/a".to_string(), |r| format!("{:.3e}", r.max_abs));
                let pass = rep.passes(IDENTITY_TOLERANCE);
                raw.summary.push(format!(
                    "{} identities {} n={} k={}: reversal {} renewal {:.3e} duality {:.3e}",
                    if pass { "PASS" } else { "FAIL" },
                    entry.id,
                    n,
                    rep.k,
                    reversal,
                    rep.renewal.max_abs,
                    rep.duality.max_abs
                ));
                raw.checks.push(Check {
                    name: format!("{}/identities/n={n}/k={}", entry.id, rep.k),
                    pass,
                    detail: format!("max residual {:.3e}", rep.max_residual()),
                });
            }

            let hs: Vec<usize> = heights.iter().map(|&k| k as usize).collect();
            let ineq = with_spec(entry, audit_inequalities(&entry.spec, n as usize, &hs, cfg.seed))?;
            let pass = ineq.is_clean();
            raw.summary.push(format!(
                "{} inequalities {} n={} heights={:?} {}",
                if pass { "PASS" } else { "FAIL" },
                entry.id,
                n,
                ineq.heights,
                if ineq.exhaustive { "exhaustive" } else { "sampled" }
            ));
            for (name, t) in &ineq.tallies {
                raw.summary.push(format!(
                    "    {name}: checked {} violations {} min slack {:.3e} min relative slack {:.3e}",
                    t.checked, t.violations, t.min_slack, t.min_rel_slack
                ));
            }
            for v in &ineq.violations {
                raw.summary.push(format!(
                    "    violation {} {}: lhs {:e} rhs {:e} slack {:e}",
                    v.check, v.context, v.lhs, v.rhs, v.slack
                ));
            }
            raw.checks.push(Check {
                name: format!("{}/inequalities/n={n}", entry.id),
                pass,
                detail: format!("{} violations", ineq.total_violations()),
            });
        }
    }
    Ok(raw)
}

pub fn converge_tail(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let n_max = *grid.last().unwrap();
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        let table = with_spec(entry, scale_table(entry, n_max))?;
        let fp0 = with_spec(entry, first_passage(&entry.spec, 0, n_max as usize))?;
        let ev = with_spec(entry, Evaluator::new(&table))?.with_first_passage(&fp0);
        let regime = regime_label(entry).to_string();
        for &n in grid {
            let Some(tail) = with_spec(entry, applicable(ev.exc_tail(n)))? else {
                raw.summary
                    .push(format!("{}: tail law does not apply in regime {regime}", entry.id));
                break;
            };
            raw.rows.push(Tagged {
                series: "k=0".into(),
                row: row(entry, &tail, fp0.tail()[n as usize], regime.clone()),
            });
            if let Some(same) = with_spec(entry, applicable(ev.sametail(n)))? {
                let h = (n as f64).sqrt().ceil() as usize;
                let exact = with_spec(entry, table.height_tail(h))?;
                raw.rows.push(Tagged {
                    series: "k=0".into(),
                    row: row(entry, &same, exact, regime.clone()),
                });
            }
        }
    }
    Ok(raw)
}

pub fn converge_point(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let n_max = *grid.last().unwrap();
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        let table = with_spec(entry, scale_table(entry, n_max))?;
        let fp0 = with_spec(entry, first_passage(&entry.spec, 0, n_max as usize))?;
        let ev = with_spec(entry, Evaluator::new(&table))?;
        let regime = regime_label(entry).to_string();
        for &n in grid {
            let Some(point) = with_spec(entry, applicable(ev.exc_point(n)))? else {
                raw.summary
                    .push(format!("{}: point law does not apply in regime {regime}", entry.id));
                break;
            };
            raw.rows.push(Tagged {
                series: "k=0".into(),
                row: row(entry, &point, fp0.point(n as usize), regime.clone()),
            });
        }
    }
    Ok(raw)
}

/// One `(k, n)` point of a regime sweep after parity adjustment.
#[derive(Debug, Clone, Copy)]
struct Point {
    kspec: KSpec,
    chi: f64,
    k: u64,
    n: u64,
    adjusted: Option<(u64, u64)>,
}

fn sweep(cfg: &RunConfig, grid: &[u64], default_ks: &[KSpec], skip_zero: bool) -> Vec<Point> {
    let ks = if cfg.k_list.is_empty() {
        default_ks.to_vec()
    } else {
        cfg.k_list.clone()
    };
    let mut points = Vec::new();
    for chi in cfg.chi_values() {
        for &kspec in &ks {
            for &n in grid {
                let k = kspec.resolve(n, chi);
                if skip_zero && k == 0 {
                    continue;
                }
                let (n, adjusted) = parity_pair(n, k);
                points.push(Point {
                    kspec,
                    chi,
                    k,
                    n,
                    adjusted,
                });
            }
        }
    }
    points
}

fn sweep_series(cfg: &RunConfig, p: &Point) -> String {
    series_label(p.kspec, cfg.chi.is_none().then_some(p.chi))
}

pub fn hit_regimes(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let defaults = [KSpec::Fixed(1), KSpec::Fixed(4), KSpec::Mid, KSpec::High];
    let points = sweep(cfg, grid, &defaults, true);
    let mut raw = Raw::default();
    if cfg.k_list.contains(&KSpec::Fixed(0)) {
        raw.summary
            .push("k = 0 skipped; the return-time law is covered by converge-point".into());
    }
    let n_max = points.iter().map(|p| p.n).max().unwrap_or(2);
    for entry in &cfg.specs {
        let table = with_spec(entry, scale_table(entry, n_max))?;
        let ev = with_spec(entry, Evaluator::new(&table))?;
        // one table per (k, n); different chi values often share them
        let needed: BTreeSet<(u64, u64)> = points.iter().map(|p| (p.k, p.n)).collect();
        let exact: BTreeMap<(u64, u64), f64> = with_spec(
            entry,
            needed
                .par_iter()
                .map(|&(k, n)| {
                    first_passage(&entry.spec, k as usize, n as usize).map(|fp| ((k, n), fp.point(n as usize)))
                })
                .collect::<Result<_, _>>(),
        )?;
        for p in &points {
            let Some(eval) = with_spec(entry, applicable(ev.hit_time(p.k, p.n, p.chi)))? else {
                raw.summary
                    .push(format!("{}: hitting-time laws do not apply", entry.id));
                break;
            };
            let h = with_spec(entry, HeightRegime::classify(p.k, p.n, p.chi))?;
            let mut r = row(
                entry,
                &eval,
                exact[&(p.k, p.n)],
                format!("{}/{}", regime_label(entry), height_label(h)),
            );
            if cfg.chi.is_none() {
                r.regime.push_str(&format!("@chi={}", p.chi));
            }
            r.parity_adjusted = p.adjusted;
            raw.rows.push(Tagged {
                series: sweep_series(cfg, p),
                row: r,
            });
        }
    }
    Ok(raw)
}

pub fn occupancy_llt(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let defaults = [KSpec::Fixed(0), KSpec::Fixed(2), KSpec::Mid, KSpec::High];
    let points = sweep(cfg, grid, &defaults, false);
    let n_max = points.iter().map(|p| p.n).max().unwrap_or(2);
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        let table = with_spec(entry, scale_table(entry, n_max))?;
        let fp0 = with_spec(entry, first_passage(&entry.spec, 0, n_max as usize))?;
        let ev = with_spec(entry, Evaluator::new(&table))?.with_first_passage(&fp0);
        let needed: BTreeSet<(u64, u64)> = points.iter().map(|p| (p.k, p.n)).collect();
        let exact: BTreeMap<(u64, u64), f64> = with_spec(
            entry,
            needed
                .par_iter()
                .map(|&(k, n)| {
                    let mut evo = ForwardEvolution::new(&entry.spec, k as usize, n as usize)?;
                    while evo.advance() {}
                    Ok(((k, n), evo.row()[0]))
                })
                .collect::<Result<_, Error>>(),
        )?;
        for p in &points {
            let eval = if p.k == 0 {
                applicable(ev.return_zero(p.n))
            } else {
                applicable(ev.occupancy_zero(p.k, p.n, p.chi))
            };
            let Some(eval) = with_spec(entry, eval)? else {
                raw.summary.push(format!("{}: occupancy laws do not apply", entry.id));
                break;
            };
            let h = with_spec(entry, HeightRegime::classify(p.k, p.n, p.chi))?;
            let mut r = row(
                entry,
                &eval,
                exact[&(p.k, p.n)],
                format!("{}/{}", regime_label(entry), height_label(h)),
            );
            if cfg.chi.is_none() {
                r.regime.push_str(&format!("@chi={}", p.chi));
            }
            r.parity_adjusted = p.adjusted;
            raw.rows.push(Tagged {
                series: sweep_series(cfg, p),
                row: r,
            });
        }
    }
    Ok(raw)
}

pub fn location_llt(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let defaults = [KSpec::Fixed(0), KSpec::Fixed(2), KSpec::Mid, KSpec::High];
    let points = sweep(cfg, grid, &defaults, false);
    let n_max = points.iter().map(|p| p.n).max().unwrap_or(2);
    let times: BTreeSet<u64> = points.iter().map(|p| p.n).collect();
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        let table = with_spec(entry, scale_table(entry, n_max))?;
        let fp0 = with_spec(entry, first_passage(&entry.spec, 0, n_max as usize))?;
        let ev = with_spec(entry, Evaluator::new(&table))?.with_first_passage(&fp0);
        // a single evolution from 0 serves every (n, k)
        let mut rows_at: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut evo = with_spec(entry, ForwardEvolution::new(&entry.spec, 0, n_max as usize))?;
        loop {
            if times.contains(&(evo.time() as u64)) {
                rows_at.insert(evo.time() as u64, evo.row().to_vec());
            }
            if !evo.advance() {
                break;
            }
        }
        let mut lambda_done = BTreeSet::new();
        for p in &points {
            let Some(eval) = with_spec(entry, applicable(ev.location(p.k, p.n, p.chi)))? else {
                raw.summary.push(format!("{}: location laws do not apply", entry.id));
                break;
            };
            let exact = rows_at[&p.n].get(p.k as usize).copied().unwrap_or(0.0);
            let h = with_spec(entry, HeightRegime::classify(p.k, p.n, p.chi))?;
            let walk = regime_label(entry);
            let mut r = row(entry, &eval, exact, format!("{walk}/{}", height_label(h)));
            if cfg.chi.is_none() {
                r.regime.push_str(&format!("@chi={}", p.chi));
            }
            r.parity_adjusted = p.adjusted;
            raw.rows.push(Tagged {
                series: sweep_series(cfg, p),
                row: r,
            });

            // power-law form of the low-height law, once per (k, n)
            if h == HeightRegime::Low && p.k > 0 && lambda_done.insert((p.k, p.n)) {
                if let Some(e) = with_spec(entry, applicable(ev.location_lambda(p.k, p.n)))? {
                    let mut r = row(entry, &e, exact, format!("{walk}/low"));
                    r.parity_adjusted = p.adjusted;
                    raw.rows.push(Tagged {
                        series: format!("k={}", p.kspec.label()),
                        row: r,
                    });
                }
            }
        }
    }
    Ok(raw)
}

pub fn bessel_check(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let mut raw = Raw::default();
    let x_last = *grid.last().unwrap() as f64;
    for entry in &cfg.specs {
        let delta = entry.spec.delta();
        if delta <= -1.0 {
            raw.summary
                .push(format!("{}: no Bessel scale function at delta = {delta}", entry.id));
            continue;
        }
        for &x in grid {
            let e = with_spec(entry, bessel_exit_moments(x as f64, delta))?;
            for (formula, value, limit) in [
                (FormulaId::BesselF, e.f, 0.5),
                (FormulaId::BesselG, e.g, 1.0),
                (FormulaId::BesselHPlus, e.h_plus_norm, 0.5),
                (FormulaId::BesselHMinus, e.h_minus_norm, 0.5),
            ] {
                let mut r = ResultRow::new(&entry.id, delta, formula, x, 0);
                r.exact = Some(value);
                r.asymptotic = Some(limit);
                r.regime = regime_label(entry).to_string();
                raw.rows.push(Tagged {
                    series: "x".into(),
                    row: r,
                });
            }
        }
        let e = with_spec(entry, bessel_exit_moments(x_last, delta))?;
        for (what, dev, tol) in [
            ("f", (e.f - 0.5).abs(), 1e-3),
            ("g", (e.g - 1.0).abs(), 1e-2),
            ("h+", (e.h_plus_norm - 0.5).abs(), 1e-2),
            ("h-", (e.h_minus_norm - 0.5).abs(), 1e-2),
        ] {
            raw.checks.push(Check {
                name: format!("{}/{what}/x={x_last}", entry.id),
                pass: dev <= tol,
                detail: format!("deviation {dev:.3e} (tolerance {tol:e})"),
            });
        }
    }
    Ok(raw)
}

pub fn estimate_k0(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let mut raw = Raw::default();
    for entry in &cfg.specs {
        let tables = with_spec(
            entry,
            grid.par_iter()
                .map(|&n| ScaleTable::build(&entry.spec, n as usize))
                .collect::<Result<Vec<_>, _>>(),
        )?;
        let mut values = Vec::new();
        for (table, &n) in tables.iter().zip(grid) {
            let est = with_spec(entry, table.estimate_k0())?;
            let proxy = table.recurrence_proxy();
            let mut r = ResultRow::new(&entry.id, entry.spec.delta(), FormulaId::K0, n, 0);
            r.asymptotic = Some(est.value);
            r.regime = regime_label(entry).to_string();
            raw.rows.push(Tagged {
                series: "x_max".into(),
                row: r,
            });
            raw.summary.push(format!(
                "{} x_max={n}: K0 {:.12e} spread {:.3e} reads {:?} contracting {} recurrence increment ratio {:.4}",
                entry.id, est.value, est.width, est.raw, est.contracting, proxy.increment_ratio
            ));
            values.push(est.value);

            // P_0(H >= h) = 1 / M_h against 2 kappa L(h) / (K0 h^{2 kappa})
            let h = (n / 4) as usize;
            let kappa = table.kappa();
            let exact = with_spec(entry, table.height_tail(h))?;
            let l = with_spec(entry, table.l(h))?;
            let mut r = ResultRow::new(&entry.id, entry.spec.delta(), FormulaId::HeightTail, h as u64, 0);
            r.exact = Some(exact);
            r.asymptotic = Some(2.0 * kappa * l / (est.value * (h as f64).powf(2.0 * kappa)));
            r.regime = regime_label(entry).to_string();
            if kappa > 0.0 {
                raw.rows.push(Tagged {
                    series: "h".into(),
                    row: r,
                });
            }
        }
        let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let settled = steps.windows(2).all(|w| w[1] <= w[0]);
        raw.checks.push(Check {
            name: format!("{}/K0", entry.id),
            pass: settled && values.iter().all(|v| v.is_finite() && *v > 0.0),
            detail: format!("estimates {values:?}"),
        });
    }
    Ok(raw)
}

/// `|p_hat - p| <= 4 sigma`, with `sigma` floored at one count.
pub fn within_four_sigma(p_hat: f64, exact: f64, reps: u64) -> bool {
    let sigma = (exact * (1.0 - exact) / reps as f64).sqrt().max(1.0 / reps as f64);
    (p_hat - exact).abs() <= 4.0 * sigma
}

fn median(v: &mut [usize]) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

pub fn coupling_study(cfg: &RunConfig, grid: &[u64]) -> Result<Raw, HarnessError> {
    let reps = cfg.reps;
    let traces = reps.min(MAX_COUPLING_TRACES);
    let ks = if cfg.k_list.is_empty() {
        vec![KSpec::Sqrt]
    } else {
        cfg.k_list.clone()
    };
    let mut raw = Raw::default();
    for (si, entry) in cfg.specs.iter().enumerate() {
        let spec = &entry.spec;
        let delta = spec.delta();
        let walk = regime_label(entry);
        // distinct seeds per spec keep specs independent
        let seed = cfg.seed.wrapping_add(1_000_003 * si as u64);
        // {X_n = j} at every grid n small enough to sample directly
        let mut n_mc: Vec<u64> = grid.iter().copied().filter(|&n| (2..=4096).contains(&n)).collect();
        if n_mc.is_empty() {
            n_mc.push(64);
        }
        let fp0: FirstPassageTable = with_spec(entry, first_passage(spec, 0, 2))?;
        let table = with_spec(entry, ScaleTable::build(spec, 16))?;

        let mut mc =
            |formula: FormulaId, event: Event, n: u64, k: u64, exact: f64, stream: u64| -> Result<(), HarnessError> {
                let est = with_spec(entry, estimate(&event, spec, reps, seed.wrapping_add(stream)))?;
                let mut r = ResultRow::new(&entry.id, delta, formula, n, k);
                r.exact = Some(exact);
                r.asymptotic = Some(est.p_hat);
                r.ci_halfwidth = Some(est.ci_halfwidth);
                r.regime = "direct".into();
                let pass = within_four_sigma(est.p_hat, exact, reps);
                raw.checks.push(Check {
                    name: match event {
                        Event::XEq { j, .. } => format!("{}/{formula}/n={n}/j={j}", entry.id),
                        _ => format!("{}/{formula}/n={n}", entry.id),
                    },
                    pass,
                    detail: format!("estimate {:.6} exact {:.6} ({} reps)", est.p_hat, exact, reps),
                });
                raw.rows.push(Tagged {
                    series: format!("{formula}"),
                    row: r,
                });
                Ok(())
            };
        mc(FormulaId::McTauEq, Event::TauEq { k: 0, m: 2 }, 2, 0, fp0.point(2), 1)?;
        mc(
            FormulaId::McHGe,
            Event::HGe { h: 3 },
            3,
            0,
            with_spec(entry, table.height_tail(3))?,
            2,
        )?;
        let last = *n_mc.last().unwrap();
        let mut evo = with_spec(entry, ForwardEvolution::new(spec, 0, last as usize))?;
        for (ni, &n) in n_mc.iter().enumerate() {
            while (evo.time() as u64) < n {
                evo.advance();
            }
            let spread = (n as f64).sqrt().round() as u64;
            for (i, j) in [0, spread, 2 * spread].into_iter().enumerate() {
                let j = j + (n + j) % 2;
                let exact = evo.row().get(j as usize).copied().unwrap_or(0.0);
                mc(
                    FormulaId::McXEq,
                    Event::XEq { k: 0, n, j },
                    n,
                    j,
                    exact,
                    3 + (3 * ni + i) as u64,
                )?;
            }
        }

        if delta <= -1.0 {
            raw.summary
                .push(format!("{}: no imbedded Bessel walk at delta = {delta}", entry.id));
            continue;
        }
        let mut medians = Vec::new();
        for &kspec in &ks {
            for &m in grid {
                let k = kspec.resolve(m, cfg.chi_or_default()).max(2);
                let target = k / 2;
                let setup =
                    with_spec(entry, CouplingSetup::imbedded(spec, k, 64 * m, DEFAULT_H_FLOOR))?.with_target(target);
                let run_seed = seed ^ (m << 24) ^ k;
                let runs: Vec<Result<CouplingTrace, Error>> =
                    (0..traces).into_par_iter().map(|r| setup.run(run_seed, r)).collect();
                let mut counts = Vec::with_capacity(runs.len());
                let (mut alarms, mut discrepancies, mut censored, mut gap_failures) = (0usize, 0usize, 0u64, 0u64);
                for (r, run) in runs.into_iter().enumerate() {
                    match run {
                        Ok(t) => {
                            alarms += t.alarms.len();
                            discrepancies += t.discrepancies.len();
                            censored += (t.stop == StopReason::CapReached) as u64;
                            counts.push(t.missteps());
                            if r == 0 {
                                raw.traces.push((format!("{}_m{m}_k{k}", entry.id), t));
                            }
                        }
                        Err(Error::Coupling(_)) => gap_failures += 1,
                        Err(e) => return Err(HarnessError::Run(format!("spec `{}`: {e}", entry.id))),
                    }
                }
                let mean = counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64;
                let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / counts.len().max(2) as f64;
                let med = if counts.is_empty() { 0 } else { median(&mut counts) };
                let mut r = ResultRow::new(&entry.id, delta, FormulaId::McMissteps, m, k);
                r.asymptotic = Some(mean);
                r.ci_halfwidth = Some(Z95 * (var / traces as f64).sqrt());
                r.regime = format!("{walk}/imbedded");
                raw.rows.push(Tagged {
                    series: format!("k={}", kspec.label()),
                    row: r,
                });
                raw.summary.push(format!(
                    "{} m={m} k={k} target={target}: traces {traces} median missteps {med} mean {mean:.4} alarms {alarms} discrepancies {discrepancies} censored {censored} gap-rule failures {gap_failures}",
                    entry.id
                ));
                raw.checks.push(Check {
                    name: format!("{}/gap-rule/m={m}/k={k}", entry.id),
                    pass: gap_failures == 0,
                    detail: format!("{gap_failures} of {traces} traces broke the gap rule"),
                });
                if delta == 0.0 {
                    raw.checks.push(Check {
                        name: format!("{}/no-missteps/m={m}/k={k}", entry.id),
                        pass: alarms + discrepancies == 0,
                        detail: format!("{} missteps at zero drift", alarms + discrepancies),
                    });
                }
                medians.push((kspec, m, med));
            }
        }
        // median misstep count should not triple per step of the grid
        for w in medians.windows(2) {
            let ((ka, ma, a), (kb, mb, b)) = (w[0], w[1]);
            if ka == kb && mb > ma {
                raw.checks.push(Check {
                    name: format!("{}/misstep-growth/k={}/m={ma}->{mb}", entry.id, ka.label()),
                    pass: b <= 3 * a.max(1),
                    detail: format!("median {a} -> {b}"),
                });
            }
        }
    }
    Ok(raw)
}
