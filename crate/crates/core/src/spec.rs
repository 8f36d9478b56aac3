//! Walk definitions.
//!
//! A [`WalkSpec`] describes a nearest-neighbour walk on `{0, 1, 2, ...}` that
//! always steps up from 0 and, at height `x >= 1`, steps up with probability
//!
//! ```text
//! p_x = (1/2) (1 - delta / 2x + R_x / 2)
//! ```
//!
//! where the perturbation `R_x = o(1/x)` is chosen from a small family.
//! Specs are validated at construction: every `p_x` for `x >= 1` must lie in
//! `[epsilon, 1 - epsilon]`, checked explicitly over the range where the
//! formula could leave that band and by a monotone bound beyond it.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Heights above this are rejected; binary64 represents every integer below it.
pub const MAX_HEIGHT: u64 = 1 << 53;

/// Largest height scanned explicitly during validation.
const MAX_VALIDATION_SCAN: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `R_x = 0`.
    None,
    /// `p_x = x / (2x + delta)`, giving `R_x = delta^2 / (x (2x + delta))`.
    Rational,
    /// `R_x = c / x^2`.
    InverseSquare { c: f64 },
    /// `R_x = c / (x ln(x + 1))`; the resulting `L` is not asymptotically constant.
    LogDrift { c: f64 },
    /// Explicit `p_1, ..., p_N`; the unperturbed form is used beyond `N`.
    Table { p: Vec<f64> },
}

impl Perturbation {
    pub fn kind(&self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Rational => "rational",
            Perturbation::InverseSquare { .. } => "inverse_square",
            Perturbation::LogDrift { .. } => "log_drift",
            Perturbation::Table { .. } => "table",
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Perturbation::InverseSquare { c } | Perturbation::LogDrift { c } => Some(*c),
            _ => None,
        }
    }
}

/// Recurrence classification by drift parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// `delta < -1`; no return-time asymptotics are available.
    TransientWarning,
    /// `delta = -1`; recurrence depends on the perturbation.
    DeltaMinusOne,
    /// `-1 < delta < 1`.
    NullRecurrent,
    /// `delta = 1`.
    Boundary,
    /// `delta > 1`.
    PositiveRecurrent,
}

impl Regime {
    pub fn from_delta(delta: f64) -> Regime {
        if delta < -1.0 {
            Regime::TransientWarning
        } else if delta == -1.0 {
            Regime::DeltaMinusOne
        } else if delta < 1.0 {
            Regime::NullRecurrent
        } else if delta == 1.0 {
            Regime::Boundary
        } else {
            Regime::PositiveRecurrent
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::TransientWarning => "TRANSIENT_WARNING",
            Regime::DeltaMinusOne => "DELTA_MINUS_ONE",
            Regime::NullRecurrent => "NULL_RECURRENT",
            Regime::Boundary => "BOUNDARY",
            Regime::PositiveRecurrent => "POSITIVE_RECURRENT",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    delta: f64,
    perturbation: Perturbation,
    epsilon: f64,
    x_override: Vec<f64>,
    /// When set, `p_x` is `1 - p'_x` where `p'` is the walk with drift `-delta`.
    dual: bool,
}

#[derive(Debug, Clone)]
pub struct WalkSpecBuilder {
    spec: WalkSpec,
}

impl WalkSpecBuilder {
    pub fn perturbation(mut self, perturbation: Perturbation) -> Self {
        self.spec.perturbation = perturbation;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.spec.epsilon = epsilon;
        self
    }

    /// Explicit `p_1, ..., p_N`, taking precedence over the perturbation.
    pub fn x_override(mut self, p: Vec<f64>) -> Self {
        self.spec.x_override = p;
        self
    }

    pub fn dual(mut self, dual: bool) -> Self {
        self.spec.dual = dual;
        self
    }

    pub fn build(self) -> Result<WalkSpec> {
        self.spec.validate()?;
        Ok(self.spec)
    }
}

impl WalkSpec {
    pub fn builder(delta: f64) -> WalkSpecBuilder {
        WalkSpecBuilder {
            spec: WalkSpec {
                delta,
                perturbation: Perturbation::None,
                epsilon: DEFAULT_EPSILON,
                x_override: Vec::new(),
                dual: false,
            },
        }
    }

    pub fn new(delta: f64, perturbation: Perturbation) -> Result<WalkSpec> {
        WalkSpec::builder(delta).perturbation(perturbation).build()
    }

    /// Reflecting simple symmetric random walk.
    pub fn ssrw() -> WalkSpec {
        WalkSpec::new(0.0, Perturbation::None).expect("SSRW is always valid")
    }

    pub fn rational(delta: f64) -> Result<WalkSpec> {
        WalkSpec::new(delta, Perturbation::Rational)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x_override(&self) -> &[f64] {
        &self.x_override
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn kappa(&self) -> f64 {
        (1.0 + self.delta) / 2.0
    }

    pub fn kappa_and_regime(&self) -> (f64, Regime) {
        (self.kappa(), Regime::from_delta(self.delta))
    }

    /// The walk with up and down probabilities swapped at every `x >= 1`.
    pub fn dual_spec(&self) -> Result<WalkSpec> {
        let dual = WalkSpec {
            delta: -self.delta,
            dual: !self.dual,
            ..self.clone()
        };
        dual.validate()?;
        Ok(dual)
    }

    /// `(p_x, q_x)` with `p_0 = 1`.
    pub fn transition_prob(&self, x: u64) -> Result<(f64, f64)> {
        if x > MAX_HEIGHT {
            return Err(Error::HeightLimit { x, limit: MAX_HEIGHT });
        }
        if x == 0 {
            return Ok((1.0, 0.0));
        }
        let p = self.p_up(x);
        if !(p >= self.epsilon && p <= 1.0 - self.epsilon) {
            return Err(Error::Ellipticity {
                x,
                p,
                eps: self.epsilon,
            });
        }
        Ok((p, 1.0 - p))
    }

    /// Up-probability without range checks; `p_up(0) = 1`.
    pub fn p_up(&self, x: u64) -> f64 {
        if x == 0 {
            return 1.0;
        }
        if self.dual {
            1.0 - self.base_p(x, -self.delta)
        } else {
            self.base_p(x, self.delta)
        }
    }

    /// `p_0, ..., p_max` as a dense table.
    pub fn up_probs(&self, max_x: usize) -> Vec<f64> {
        (0..=max_x as u64).map(|x| self.p_up(x)).collect()
    }

    /// The perturbation `R_x` defined by `p_x = (1/2)(1 - delta/2x + R_x/2)`.
    pub fn perturbation_term(&self, x: u64) -> f64 {
        if x == 0 {
            return 0.0;
        }
        if self.dual {
            -self.base_r(x, -self.delta)
        } else {
            self.base_r(x, self.delta)
        }
    }

    fn explicit_p(&self, x: u64) -> Option<f64> {
        let i = (x - 1) as usize;
        if let Some(&p) = self.x_override.get(i) {
            return Some(p);
        }
        if let Perturbation::Table { p } = &self.perturbation {
            return p.get(i).copied();
        }
        None
    }

    fn base_p(&self, x: u64, d: f64) -> f64 {
        if let Some(p) = self.explicit_p(x) {
            return p;
        }
        let xf = x as f64;
        match &self.perturbation {
            Perturbation::Rational => xf / (2.0 * xf + d),
            Perturbation::None | Perturbation::Table { .. } => 0.5 * (1.0 - d / (2.0 * xf)),
            Perturbation::InverseSquare { c } => 0.5 * (1.0 - d / (2.0 * xf) + c / (2.0 * xf * xf)),
            Perturbation::LogDrift { c } => 0.5 * (1.0 - d / (2.0 * xf) + c / (2.0 * xf * (xf + 1.0).ln())),
        }
    }

    fn base_r(&self, x: u64, d: f64) -> f64 {
        let xf = x as f64;
        if let Some(p) = self.explicit_p(x) {
            return 4.0 * p - 2.0 + d / xf;
        }
        match &self.perturbation {
            Perturbation::Rational => d * d / (xf * (2.0 * xf + d)),
            Perturbation::None | Perturbation::Table { .. } => 0.0,
            Perturbation::InverseSquare { c } => c / (xf * xf),
            Perturbation::LogDrift { c } => c / (xf * (xf + 1.0).ln()),
        }
    }

    /// Upper bound on `|p_x - 1/2|` for the formula part, decreasing in `x`
    /// once `x` exceeds the explicit range (and `2x + delta > 0` for the
    /// rational form).
    fn deviation_bound(&self, x: u64, d: f64) -> f64 {
        let xf = x as f64;
        let drift = d.abs() / (4.0 * xf);
        match &self.perturbation {
            Perturbation::Rational => d.abs() / (2.0 * (2.0 * xf + d)),
            Perturbation::None | Perturbation::Table { .. } => drift,
            Perturbation::InverseSquare { c } => drift + c.abs() / (4.0 * xf * xf),
            Perturbation::LogDrift { c } => drift + c.abs() / (4.0 * xf * (xf + 1.0).ln()),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::InvalidSpec(format!("delta must be finite, got {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must lie in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        if let Some(c) = self.perturbation.constant() {
            if !c.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "perturbation constant must be finite, got {c}"
                )));
            }
        }
        let table_len = match &self.perturbation {
            Perturbation::Table { p } => p.len(),
            _ => 0,
        };
        let d = if self.dual { -self.delta } else { self.delta };
        let mut start = self.x_override.len().max(table_len) as u64 + 1;
        if matches!(self.perturbation, Perturbation::Rational) && d < 0.0 {
            start = start.max((-d / 2.0).ceil() as u64 + 1);
        }
        let half_band = 0.5 - self.epsilon;
        let mut certified = start.max(1);
        while self.deviation_bound(certified, d) > half_band {
            certified = certified.saturating_mul(2);
            if certified > MAX_VALIDATION_SCAN {
                return Err(Error::InvalidSpec(format!(
                    "cannot certify ellipticity epsilon = {} below height {}",
                    self.epsilon, MAX_VALIDATION_SCAN
                )));
            }
        }
        let mut offending = Vec::new();
        for x in 1..=certified {
            let p = self.base_p(x, d);
            if !(p >= self.epsilon && p <= 1.0 - self.epsilon) {
                offending.push(x);
            }
        }
        if !offending.is_empty() {
            let shown: Vec<String> = offending.iter().take(8).map(|x| x.to_string()).collect();
            return Err(Error::InvalidSpec(format!(
                "p_x leaves [{}, {}] at x = {}{}; supply x_override values for these heights",
                self.epsilon,
                1.0 - self.epsilon,
                shown.join(", "),
                if offending.len() > 8 { ", ..." } else { "" }
            )));
        }
        Ok(())
    }

    /// Flat `key = value` rendering, parseable by [`WalkSpec::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("delta = {:?}\n", self.delta));
        out.push_str(&format!("perturbation.kind = \"{}\"\n", self.perturbation.kind()));
        if let Some(c) = self.perturbation.constant() {
            out.push_str(&format!("perturbation.c = {c:?}\n"));
        }
        if let Perturbation::Table { p } = &self.perturbation {
            out.push_str(&format!("perturbation.table = {}\n", float_list(p)));
        }
        out.push_str(&format!("epsilon = {:?}\n", self.epsilon));
        if !self.x_override.is_empty() {
            out.push_str(&format!("x_override = {}\n", float_list(&self.x_override)));
        }
        if self.dual {
            out.push_str("dual = true\n");
        }
        out
    }

    pub fn from_config_str(text: &str) -> Result<WalkSpec> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        WalkSpec::from_config_table(&table)
    }

    /// Builds a spec from a parsed config section. Unknown keys are rejected.
    pub fn from_config_table(table: &toml::Table) -> Result<WalkSpec> {
        for key in table.keys() {
            if !matches!(
                key.as_str(),
                "delta" | "perturbation" | "epsilon" | "x_override" | "dual"
            ) {
                return Err(Error::Config(format!("unknown spec key `{key}`")));
            }
        }
        let delta = match table.get("delta") {
            Some(v) => number(v, "delta")?,
            None => return Err(Error::Config("missing key `delta`".into())),
        };
        let perturbation = match table.get("perturbation") {
            None => Perturbation::None,
            Some(toml::Value::Table(pt)) => {
                for key in pt.keys() {
                    if !matches!(key.as_str(), "kind" | "c" | "table") {
                        return Err(Error::Config(format!("unknown spec key `perturbation.{key}`")));
                    }
                }
                let kind = match pt.get("kind") {
                    Some(toml::Value::String(s)) => s.as_str(),
                    Some(_) => return Err(Error::Config("`perturbation.kind` must be a string".into())),
                    None => return Err(Error::Config("missing key `perturbation.kind`".into())),
                };
                let c = || -> Result<f64> {
                    pt.get("c")
                        .ok_or_else(|| Error::Config(format!("`perturbation.c` is required for kind `{kind}`")))
                        .and_then(|v| number(v, "perturbation.c"))
                };
                match kind {
                    "none" => Perturbation::None,
                    "rational" => Perturbation::Rational,
                    "inverse_square" => Perturbation::InverseSquare { c: c()? },
                    "log_drift" => Perturbation::LogDrift { c: c()? },
                    "table" => Perturbation::Table {
                        p: number_list(
                            pt.get("table").ok_or_else(|| {
                                Error::Config("`perturbation.table` is required for kind `table`".into())
                            })?,
                            "perturbation.table",
                        )?,
                    },
                    other => {
                        return Err(Error::Config(format!(
                            "unknown `perturbation.kind` `{other}` (expected none, rational, inverse_square, log_drift or table)"
                        )))
                    }
                }
            }
            Some(_) => return Err(Error::Config("`perturbation` must be a table of keys".into())),
        };
        let epsilon = match table.get("epsilon") {
            Some(v) => number(v, "epsilon")?,
            None => DEFAULT_EPSILON,
        };
        let x_override = match table.get("x_override") {
            Some(v) => number_list(v, "x_override")?,
            None => Vec::new(),
        };
        let dual = match table.get("dual") {
            Some(toml::Value::Boolean(b)) => *b,
            Some(_) => return Err(Error::Config("`dual` must be a boolean".into())),
            None => false,
        };
        WalkSpec::builder(delta)
            .perturbation(perturbation)
            .epsilon(epsilon)
            .x_override(x_override)
            .dual(dual)
            .build()
    }

    /// Short stable fingerprint of the config rendering.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_config_string().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn float_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn number(v: &toml::Value, key: &str) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}` must be a number"))),
    }
}

fn number_list(v: &toml::Value, key: &str) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|x| number(x, key)).collect(),
        _ => Err(Error::Config(format!("`{key}` must be a list of numbers"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_is_symmetric() {
        let spec = WalkSpec::ssrw();
        assert_eq!(spec.transition_prob(5).unwrap(), (0.5, 0.5));
        assert_eq!(spec.transition_prob(0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn rational_form_values() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let (p, q) = spec.transition_prob(1).unwrap();
        assert_eq!(p, 1.0 / 3.0);
        assert!((q - 2.0 / 3.0).abs() < 1e-15);
        assert!((spec.perturbation_term(1) - 1.0 / 3.0).abs() < 1e-15);
        // R_x = delta^2/2x^2 + O(1/x^3)
        let x = 1000.0;
        assert!((spec.perturbation_term(1000) - 1.0 / (2.0 * x * x)).abs() < 1.0 / (x * x * x));
    }

    #[test]
    fn derived_perturbation_reproduces_p() {
        let specs = [
            WalkSpec::rational(0.7).unwrap(),
            WalkSpec::new(-0.4, Perturbation::InverseSquare { c: 0.3 }).unwrap(),
            WalkSpec::new(0.5, Perturbation::LogDrift { c: -0.2 }).unwrap(),
            WalkSpec::rational(2.0).unwrap().dual_spec().unwrap(),
        ];
        for spec in &specs {
            let d = spec.delta();
            for x in 1..200u64 {
                let xf = x as f64;
                let rebuilt = 0.5 * (1.0 - d / (2.0 * xf) + spec.perturbation_term(x) / 2.0);
                assert!((rebuilt - spec.p_up(x)).abs() < 1e-15, "{spec:?} x={x}");
            }
        }
    }

    #[test]
    fn regimes() {
        assert_eq!(WalkSpec::ssrw().kappa_and_regime(), (0.5, Regime::NullRecurrent));
        assert_eq!(
            WalkSpec::rational(1.0).unwrap().kappa_and_regime(),
            (1.0, Regime::Boundary)
        );
        let m1 = WalkSpec::new(-1.0, Perturbation::None).unwrap();
        assert_eq!(m1.kappa_and_regime(), (0.0, Regime::DeltaMinusOne));
        assert_eq!(Regime::from_delta(-1.5), Regime::TransientWarning);
        assert_eq!(Regime::from_delta(3.0), Regime::PositiveRecurrent);
    }

    #[test]
    fn low_x_violation_requires_override() {
        // p_1 = 1/2 (1 - 3/2) < 0 for the unperturbed form with delta = 3
        let err = WalkSpec::new(3.0, Perturbation::None).unwrap_err();
        assert!(err.to_string().contains("x = 1"), "{err}");
        let fixed = WalkSpec::builder(3.0).x_override(vec![0.2]).build().unwrap();
        assert_eq!(fixed.p_up(1), 0.2);
        assert_eq!(fixed.p_up(2), 0.5 * (1.0 - 3.0 / 4.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WalkSpec::builder(0.0).epsilon(0.5).build().is_err());
        assert!(WalkSpec::builder(0.0).epsilon(0.0).build().is_err());
        assert!(WalkSpec::new(f64::NAN, Perturbation::None).is_err());
        assert!(WalkSpec::builder(0.0).x_override(vec![0.01]).build().is_err());
        assert!(WalkSpec::ssrw().transition_prob(MAX_HEIGHT + 1).is_err());
    }

    #[test]
    fn dual_swaps_probabilities() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let dual = spec.dual_spec().unwrap();
        assert_eq!(dual.delta(), -1.0);
        assert_eq!(dual.p_up(0), 1.0);
        assert!((dual.p_up(1) - 2.0 / 3.0).abs() < 1e-15);
        let back = dual.dual_spec().unwrap();
        assert_eq!(back, spec);
        for x in 0..=100 {
            assert_eq!(back.p_up(x), spec.p_up(x));
            assert_eq!(dual.p_up(x) + spec.p_up(x), if x == 0 { 2.0 } else { 1.0 });
        }
        let ssrw = WalkSpec::ssrw();
        let sd = ssrw.dual_spec().unwrap();
        for x in 0..=100 {
            assert_eq!(sd.p_up(x), ssrw.p_up(x));
        }
    }

    #[test]
    fn config_round_trip() {
        let specs = [
            WalkSpec::rational(0.1).unwrap(),
            WalkSpec::builder(-0.5)
                .perturbation(Perturbation::InverseSquare { c: 1e-7 })
                .epsilon(0.01)
                .x_override(vec![0.3, 0.45])
                .build()
                .unwrap(),
            WalkSpec::new(
                0.5,
                Perturbation::Table {
                    p: vec![0.4, 0.41, 0.1 + 0.2],
                },
            )
            .unwrap(),
            WalkSpec::new(0.3, Perturbation::LogDrift { c: -0.25 })
                .unwrap()
                .dual_spec()
                .unwrap(),
        ];
        for spec in specs {
            let text = spec.to_config_string();
            let back = WalkSpec::from_config_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
            assert_eq!(back.to_config_string(), text);
            assert_eq!(back.digest(), spec.digest());
        }
    }

    #[test]
    fn config_diagnostics() {
        let err = WalkSpec::from_config_str("delta = 0\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = WalkSpec::from_config_str("delta = 0\nperturbation.kind = \"inverse_square\"\n").unwrap_err();
        assert!(err.to_string().contains("perturbation.c"));
        let err = WalkSpec::from_config_str("delta = \n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let ok = WalkSpec::from_config_str("delta = 1\nperturbation.kind = \"rational\"\n").unwrap();
        assert_eq!(ok, WalkSpec::rational(1.0).unwrap());
    }
}
