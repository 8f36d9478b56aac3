//! Result rows and their CSV rendering.

use std::io::{self, Write};

use besselwalk_core::FormulaId;

pub const HEADER: &str =
    "spec_id,delta,formula_id,n,k,exact,asymptotic,ratio,regime,is_upper_bound,ci_halfwidth,slack,parity_adjusted";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub spec_id: String,
    pub delta: f64,
    pub formula: FormulaId,
    pub n: u64,
    pub k: u64,
    pub exact: Option<f64>,
    /// The asymptotic value, or the Monte-Carlo estimate for `MC_*` rows.
    pub asymptotic: Option<f64>,
    pub regime: String,
    pub ci_halfwidth: Option<f64>,
    /// Requested `(n, k)` before parity adjustment, if it changed.
    pub parity_adjusted: Option<(u64, u64)>,
}

impl ResultRow {
    pub fn new(spec_id: &str, delta: f64, formula: FormulaId, n: u64, k: u64) -> ResultRow {
        ResultRow {
            spec_id: spec_id.to_string(),
            delta,
            formula,
            n,
            k,
            exact: None,
            asymptotic: None,
            regime: String::new(),
            ci_halfwidth: None,
            parity_adjusted: None,
        }
    }

    pub fn is_upper_bound(&self) -> bool {
        self.formula.is_upper_bound()
    }

    /// `exact / asymptotic` when both are present and the denominator is positive.
    pub fn ratio(&self) -> Option<f64> {
        match (self.exact, self.asymptotic) {
            (Some(e), Some(a)) if a > 0.0 => Some(e / a),
            _ => None,
        }
    }

    /// `asymptotic - exact` on bound rows.
    pub fn slack(&self) -> Option<f64> {
        match (self.is_upper_bound(), self.exact, self.asymptotic) {
            (true, Some(e), Some(a)) => Some(a - e),
            _ => None,
        }
    }

    fn sort_key(&self) -> (&str, &str, u64, u64, &str) {
        (&self.spec_id, self.formula.as_str(), self.n, self.k, &self.regime)
    }
}

/// 17 significant digits, `.` decimal point.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_rows<W: Write>(mut out: W, rows: &[ResultRow]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.spec_id,
            num(r.delta),
            r.formula,
            r.n,
            r.k,
            opt(r.exact),
            opt(r.asymptotic),
            opt(r.ratio()),
            r.regime,
            r.is_upper_bound(),
            opt(r.ci_halfwidth),
            opt(r.slack()),
            r.parity_adjusted
                .map(|(n, k)| format!("n={n};k={k}"))
                .unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, 5e-324, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn bound_rows_report_slack() {
        let mut r = ResultRow::new("a", 0.0, FormulaId::HitHighBound, 64, 30);
        r.exact = Some(0.25);
        r.asymptotic = Some(1.0);
        assert_eq!(r.slack(), Some(0.75));
        let mut buf = Vec::new();
        write_rows(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(HEADER));
        assert_eq!(
            text.lines().nth(1).unwrap().split(',').count(),
            HEADER.split(',').count()
        );
    }

    #[test]
    fn rows_sort_by_key() {
        let mut rows = vec![
            ResultRow::new("b", 0.0, FormulaId::ExcTail, 4, 0),
            ResultRow::new("a", 0.0, FormulaId::ExcTail, 8, 0),
            ResultRow::new("a", 0.0, FormulaId::ExcTail, 4, 0),
            ResultRow::new("a", 0.0, FormulaId::ExcPoint, 16, 0),
        ];
        sort_rows(&mut rows);
        let keys: Vec<(String, &str, u64)> = rows
            .iter()
            .map(|r| (r.spec_id.clone(), r.formula.as_str(), r.n))
            .collect();
        assert_eq!(keys[0], ("a".into(), "EXCPOINT", 16));
        assert_eq!(keys[1], ("a".into(), "EXCTAIL", 4));
        assert_eq!(keys[3].0, "b");
    }
}
