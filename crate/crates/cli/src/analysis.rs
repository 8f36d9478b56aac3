//! Per-series diagnostics: contraction of `|ratio - 1|`, bound slack, shape.

use std::collections::BTreeMap;
use std::io::{self, Write};

use besselwalk_core::FormulaId;

use crate::experiments::Tagged;
use crate::row::num;
use crate::Check;

/// Deviations below this count as converged when judging contraction; the
/// asymptotic formulas carry no rate, and rounding in the exact side can
/// reorder differences this small.
pub const CONTRACTION_FLOOR: f64 = 1e-3;

/// A shape-only series passes when its ratio grows by at most this factor
/// across the grid, i.e. some constant bounds it.
pub const SHAPE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `exact / asymptotic -> 1`.
    Ratio,
    /// `exact <= asymptotic` at every point.
    Bound,
    /// `exact / asymptotic` bounded; the constant is unknown.
    Shape,
    /// Recorded, not judged here.
    Info,
}

impl Kind {
    pub fn of(formula: FormulaId) -> Kind {
        use FormulaId::*;
        if formula.is_shape_only() {
            Kind::Shape
        } else if formula.is_upper_bound() {
            Kind::Bound
        } else if matches!(formula, Audit | K0 | McTauEq | McTauGe | McXEq | McHGe | McMissteps) {
            Kind::Info
        } else {
            Kind::Ratio
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Kind::Ratio => "ratio",
            Kind::Bound => "bound",
            Kind::Shape => "shape",
            Kind::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub spec_id: String,
    pub formula: FormulaId,
    pub series: String,
    pub kind: Kind,
    pub points: usize,
    /// `|ratio - 1|` at the last (up to) three `n`.
    pub last_devs: Vec<f64>,
    pub contracting: bool,
    pub min_slack: Option<f64>,
    /// Largest over smallest ratio seen, for shape series.
    pub ratio_spread: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub const DIAGNOSTIC_HEADER: &str =
    "spec_id,formula_id,series,kind,points,dev_1,dev_2,dev_3,contracting,final_dev,min_slack,ratio_spread,tolerance,pass";

/// `d_{i+1} <= d_i` at every step, or already below the floor.
pub fn contracting(devs: &[f64]) -> bool {
    devs.windows(2).all(|w| w[1] <= w[0] || w[1] <= CONTRACTION_FLOOR)
}

/// Groups rows into series ordered by `n` and judges each.
pub fn analyse(rows: &[Tagged], tolerance: f64) -> Vec<Diagnostic> {
    let mut groups: BTreeMap<(String, FormulaId, String), Vec<&Tagged>> = BTreeMap::new();
    for t in rows {
        groups
            .entry((t.row.spec_id.clone(), t.row.formula, t.series.clone()))
            .or_default()
            .push(t);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((spec_id, formula, series), mut members) in groups {
        members.sort_by_key(|t| (t.row.n, t.row.k));
        let kind = Kind::of(formula);
        let ratios: Vec<f64> = members.iter().filter_map(|t| t.row.ratio()).collect();
        let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        let last_devs = devs[devs.len().saturating_sub(3)..].to_vec();
        let is_contracting = contracting(&last_devs);
        let slacks: Vec<f64> = members.iter().filter_map(|t| t.row.slack()).collect();
        let min_slack = slacks.iter().copied().reduce(f64::min);
        let ratio_spread = (kind == Kind::Shape && !ratios.is_empty()).then(|| {
            let first = ratios[0];
            ratios.iter().fold(0.0f64, |m, r| m.max(r / first))
        });
        let pass = match kind {
            Kind::Ratio => !last_devs.is_empty() && is_contracting && last_devs[last_devs.len() - 1] <= tolerance,
            Kind::Bound => min_slack.is_some_and(|s| s >= 0.0),
            Kind::Shape => {
                ratios.iter().all(|r| r.is_finite() && *r > 0.0) && ratio_spread.is_some_and(|s| s <= SHAPE_FACTOR)
            }
            Kind::Info => true,
        };
        out.push(Diagnostic {
            spec_id,
            formula,
            series,
            kind,
            points: members.len(),
            last_devs,
            contracting: is_contracting,
            min_slack,
            ratio_spread,
            tolerance,
            pass,
        });
    }
    out
}

pub fn checks(diags: &[Diagnostic]) -> Vec<Check> {
    diags
        .iter()
        .filter(|d| d.kind != Kind::Info)
        .map(|d| Check {
            name: format!("{}/{}/{}", d.spec_id, d.formula, d.series),
            pass: d.pass,
            detail: match d.kind {
                Kind::Ratio => format!(
                    "|ratio-1| over last n: {:?} contracting {} tolerance {}",
                    d.last_devs.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
                    d.contracting,
                    d.tolerance
                ),
                Kind::Bound => format!("min slack {:e}", d.min_slack.unwrap_or(f64::NAN)),
                _ => format!("ratio spread {:.4}", d.ratio_spread.unwrap_or(f64::NAN)),
            },
        })
        .collect()
}

pub fn write_diagnostics<W: Write>(mut out: W, diags: &[Diagnostic]) -> io::Result<()> {
    writeln!(out, "{DIAGNOSTIC_HEADER}")?;
    for d in diags {
        let dev = |i: usize| d.last_devs.get(i).map(|&v| num(v)).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            d.spec_id,
            d.formula,
            d.series,
            d.kind.as_str(),
            d.points,
            dev(0),
            dev(1),
            dev(2),
            d.contracting,
            d.last_devs.last().map(|&v| num(v)).unwrap_or_default(),
            d.min_slack.map(num).unwrap_or_default(),
            d.ratio_spread.map(num).unwrap_or_default(),
            num(d.tolerance),
            d.pass
        )?;
    }
    Ok(())
}
