//! Large-time approximations for hitting times, return probabilities and
//! positions.
//!
//! Every evaluator returns an [`AsymptoticEval`] tagged with a [`FormulaId`]
//! whose string form is used verbatim in CSV output. Starting (or ending)
//! heights are split by a user parameter `chi` into
//!
//! ```text
//! low:  k < sqrt(chi n)
//! mid:  sqrt(chi n) <= k <= sqrt(n / chi)
//! high: k > sqrt(n / chi)
//! ```
//!
//! and high heights only ever get upper bounds.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::FirstPassageTable;
use crate::scale::ScaleTable;
use crate::spec::{Regime, WalkSpec};
use crate::special::{gamma, regularized_upper_gamma};

pub const DEFAULT_CHI: f64 = 0.1;

/// Value used for the existential constant in the null-recurrent high-height
/// bounds; those evaluations describe shape only.
pub const K1_PLACEHOLDER: f64 = 1.0;

macro_rules! formula_ids {
    ($($variant:ident => $tag:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum FormulaId {
            $($variant),*
        }

        impl FormulaId {
            pub const ALL: &'static [FormulaId] = &[$(FormulaId::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(FormulaId::$variant => $tag),*
                }
            }
        }

        impl FromStr for FormulaId {
            type Err = Error;

            fn from_str(s: &str) -> Result<FormulaId> {
                match s {
                    $($tag => Ok(FormulaId::$variant),)*
                    other => Err(Error::Domain(format!("unknown formula id `{other}`"))),
                }
            }
        }
    };
}

formula_ids! {
    ExcTail => "EXCTAIL",
    ExcPoint => "EXCPOINT",
    ExcTailSv => "EXCTAILSV",
    SameTail => "SAMETAIL",
    HitLow => "HIT_LOW",
    HitMid => "HIT_MID",
    HitHighBound => "HIT_HIGH_BOUND",
    Ret0PosRec => "RET0_POSREC",
    Ret0NullRec => "RET0_NULLREC",
    Ret0Boundary => "RET0_BOUNDARY",
    Occ0Low => "OCC0_LOW",
    Occ0MidFinite => "OCC0_MID_FINITE",
    Occ0MidNull => "OCC0_MID_NULL",
    Occ0MidBoundary => "OCC0_MID_BOUNDARY",
    Occ0HighFinite => "OCC0_HIGH_FINITE",
    Occ0HighNull => "OCC0_HIGH_NULL",
    Occ0HighBoundary => "OCC0_HIGH_BOUNDARY",
    LocLow => "LOC_LOW",
    LocLambda => "LOC_LAMBDA",
    LocMidFinite => "LOC_MID_FINITE",
    LocMidNull => "LOC_MID_NULL",
    LocMidBoundary => "LOC_MID_BOUNDARY",
    LocHighFinite => "LOC_HIGH_FINITE",
    LocHighNull => "LOC_HIGH_NULL",
    LocHighBoundary => "LOC_HIGH_BOUNDARY",
    K0 => "K0",
    HeightTail => "HEIGHT_TAIL",
    Audit => "AUDIT",
    BesselF => "BESSEL_F",
    BesselG => "BESSEL_G",
    BesselHPlus => "BESSEL_HPLUS",
    BesselHMinus => "BESSEL_HMINUS",
    McTauEq => "MC_TAU_EQ",
    McTauGe => "MC_TAU_GE",
    McXEq => "MC_X_EQ",
    McHGe => "MC_H_GE",
    McMissteps => "MC_MISSTEPS",
}

impl FormulaId {
    pub fn is_upper_bound(self) -> bool {
        matches!(
            self,
            FormulaId::HitHighBound
                | FormulaId::Occ0HighFinite
                | FormulaId::Occ0HighNull
                | FormulaId::Occ0HighBoundary
                | FormulaId::LocHighFinite
                | FormulaId::LocHighNull
                | FormulaId::LocHighBoundary
        )
    }

    /// Carries an unknown multiplicative constant.
    pub fn is_shape_only(self) -> bool {
        matches!(self, FormulaId::Occ0HighNull | FormulaId::LocHighNull)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticEval {
    pub value: f64,
    pub formula: FormulaId,
    pub regime: Regime,
    pub n: u64,
    pub k: u64,
    pub digest: String,
    pub is_upper_bound: bool,
    pub shape_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightRegime {
    Low,
    Mid,
    High,
}

impl HeightRegime {
    pub fn classify(k: u64, n: u64, chi: f64) -> Result<HeightRegime> {
        if !(chi > 0.0 && chi < 1.0) {
            return Err(Error::Domain(format!("chi must lie in (0, 1), got {chi}")));
        }
        let k2 = (k as f64) * (k as f64);
        let n = n as f64;
        Ok(if k2 < chi * n {
            HeightRegime::Low
        } else if k2 <= n / chi {
            HeightRegime::Mid
        } else {
            HeightRegime::High
        })
    }
}

/// `E_0(tau_0)` from the reversible measure, with a tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnTimeEstimate {
    pub value: f64,
    /// Estimated contribution of heights beyond the truncation point.
    pub remainder: f64,
    /// Local decay exponent of the reversible measure at the truncation point.
    pub alpha: f64,
}

/// Sums `m_x` with `m_0 = 1`, `m_{x+1} = m_x p_x / q_{x+1}`, over `x <= x_max`.
/// The tail is extrapolated from the local power-law exponent of `m`; the
/// series is declared divergent when that exponent is at most 1.05.
pub fn expected_return_time(spec: &WalkSpec, x_max: usize) -> Result<ReturnTimeEstimate> {
    if x_max < 16 {
        return Err(Error::Domain("expected_return_time needs x_max >= 16".into()));
    }
    let mut log_m = 0.0f64;
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    let mut log_m_half = 0.0;
    for x in 0..x_max {
        let (p, _) = spec.transition_prob(x as u64)?;
        let (_, q_next) = spec.transition_prob(x as u64 + 1)?;
        log_m += (p / q_next).ln();
        // Kahan summation; the partial sums run over millions of terms
        let y = log_m.exp() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if x + 1 == x_max / 2 {
            log_m_half = log_m;
        }
    }
    let alpha = (log_m_half - log_m) / LN_2;
    if !(alpha > 1.05) {
        return Err(Error::Divergent(format!(
            "reversible measure decays like x^-{alpha:.3} at x = {x_max}; E_0(tau_0) is infinite or unresolved"
        )));
    }
    let remainder = log_m.exp() * x_max as f64 / (alpha - 1.0);
    Ok(ReturnTimeEstimate {
        value: sum + remainder,
        remainder,
        alpha,
    })
}

/// How `P_0(X_n = 0)` is normalised in the recurrent regimes.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnMean {
    /// `E_0(tau_0) < infinity`.
    Finite(f64),
    /// Truncated mean `mu_0(n) = sum_{l <= n} l P_0(tau_0 = l)`; exact
    /// values up to `mu.len() - 1`, the slowly varying series beyond.
    Truncated {
        mu: Vec<f64>,
    },
    NotApplicable,
}

/// Evaluators bound to one scale table and one value of `K0`.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    table: &'a ScaleTable,
    k0: f64,
    regime: Regime,
    mean: ReturnMean,
}

impl<'a> Evaluator<'a> {
    /// Uses the table's own `K0` estimate; positive recurrent walks get
    /// `E_0(tau_0)` over the table horizon, boundary walks the truncated-mean
    /// series until [`Evaluator::with_first_passage`] supplies exact values.
    pub fn new(table: &'a ScaleTable) -> Result<Evaluator<'a>> {
        let k0 = table.estimate_k0()?.value;
        Evaluator::with_k0(table, k0)
    }

    pub fn with_k0(table: &'a ScaleTable, k0: f64) -> Result<Evaluator<'a>> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::Domain(format!("K0 must be positive, got {k0}")));
        }
        let (_, regime) = table.spec().kappa_and_regime();
        let mean = match regime {
            Regime::PositiveRecurrent => ReturnMean::Finite(expected_return_time(table.spec(), table.x_max())?.value),
            Regime::Boundary => ReturnMean::Truncated { mu: Vec::new() },
            _ => ReturnMean::NotApplicable,
        };
        Ok(Evaluator {
            table,
            k0,
            regime,
            mean,
        })
    }

    /// Treats a boundary walk as having finite mean return time.
    pub fn with_finite_mean(mut self, mean_return_time: f64) -> Self {
        self.mean = ReturnMean::Finite(mean_return_time);
        self
    }

    /// Exact truncated means from a return-time table.
    pub fn with_first_passage(mut self, table: &FirstPassageTable) -> Self {
        if table.k() == 0 && matches!(self.mean, ReturnMean::Truncated { .. }) {
            let mut mu = Vec::with_capacity(table.n_max() + 1);
            let mut acc = 0.0;
            for (l, f) in table.f().iter().enumerate() {
                acc += l as f64 * f;
                mu.push(acc);
            }
            self.mean = ReturnMean::Truncated { mu };
        }
        self
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn kappa(&self) -> f64 {
        self.table.kappa()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn return_mean(&self) -> &ReturnMean {
        &self.mean
    }

    fn eval(&self, formula: FormulaId, value: f64, n: u64, k: u64) -> AsymptoticEval {
        AsymptoticEval {
            value,
            formula,
            regime: self.regime,
            n,
            k,
            digest: self.table.digest(),
            is_upper_bound: formula.is_upper_bound(),
            shape_only: formula.is_shape_only(),
        }
    }

    fn l_sqrt(&self, n: u64) -> Result<f64> {
        self.table.l_at((n as f64).sqrt())
    }

    fn require_tau_regime(&self, formula: &'static str) -> Result<()> {
        if self.table.delta() > -1.0 {
            Ok(())
        } else {
            Err(Error::Regime {
                formula,
                regime: self.regime,
            })
        }
    }

    fn require_even(n: u64, what: &str) -> Result<()> {
        if n % 2 == 1 {
            return Err(Error::Parity(format!("{what} is only defined for even n, got {n}")));
        }
        Ok(())
    }

    fn require_pair(n: u64, k: u64) -> Result<()> {
        if (n + k) % 2 == 1 {
            return Err(Error::Parity(format!("n - k must be even, got n = {n}, k = {k}")));
        }
        Ok(())
    }

    /// `P_0(tau_0 >= n)`. At `delta = -1` this is the slowly varying form.
    pub fn exc_tail(&self, n: u64) -> Result<AsymptoticEval> {
        if self.table.delta() == -1.0 {
            return self.exc_tail_sv(n);
        }
        self.require_tau_regime("EXCTAIL")?;
        if n < 2 {
            return Err(Error::Domain("EXCTAIL needs n >= 2".into()));
        }
        let kappa = self.kappa();
        let c = 2f64.powf(1.0 - kappa) / (self.k0 * gamma(kappa));
        let value = c * (n as f64).powf(-kappa) * self.l_sqrt(n)?;
        Ok(self.eval(FormulaId::ExcTail, value, n, 0))
    }

    /// `P_0(tau_0 = n)` for even `n`.
    pub fn exc_point(&self, n: u64) -> Result<AsymptoticEval> {
        self.require_tau_regime("EXCPOINT")?;
        Self::require_even(n, "EXCPOINT")?;
        if n < 2 {
            return Err(Error::Domain("EXCPOINT needs n >= 2".into()));
        }
        let kappa = self.kappa();
        let c = 2f64.powf(2.0 - kappa) * kappa / (self.k0 * gamma(kappa));
        let value = c * (n as f64).powf(-(kappa + 1.0)) * self.l_sqrt(n)?;
        Ok(self.eval(FormulaId::ExcPoint, value, n, 0))
    }

    /// `sum_{l <= n, l even} 1 / (l L(sqrt l))`.
    pub fn nu(&self, n: u64) -> Result<f64> {
        let mut acc = 0.0;
        for l in (2..=n).step_by(2) {
            acc += 1.0 / (l as f64 * self.l_sqrt(l)?);
        }
        Ok(acc)
    }

    /// `P_0(tau_0 >= n) ~ 1 / (K0 nu(n))` at `delta = -1`.
    pub fn exc_tail_sv(&self, n: u64) -> Result<AsymptoticEval> {
        if self.table.delta() != -1.0 {
            return Err(Error::Regime {
                formula: "EXCTAILSV",
                regime: self.regime,
            });
        }
        if !self.table.recurrence_proxy().passed {
            return Err(Error::Divergent("recurrence proxy failed; M_x appears bounded".into()));
        }
        if n < 2 {
            return Err(Error::Domain("EXCTAILSV needs n >= 2".into()));
        }
        let value = 1.0 / (self.k0 * self.nu(n)?);
        Ok(self.eval(FormulaId::ExcTailSv, value, n, 0))
    }

    /// Predicted `P_0(H >= ceil(sqrt n))`, i.e. `2^kappa kappa Gamma(kappa)` times
    /// the excursion-length tail.
    pub fn sametail(&self, n: u64) -> Result<AsymptoticEval> {
        let tail = self.exc_tail(n)?;
        let kappa = self.kappa();
        let value = 2f64.powf(kappa) * kappa * gamma(kappa) * tail.value;
        Ok(self.eval(FormulaId::SameTail, value, n, 0))
    }

    /// `P_k(tau_0 = m)` in the three height regimes.
    pub fn hit_time(&self, k: u64, m: u64, chi: f64) -> Result<AsymptoticEval> {
        self.require_tau_regime("HIT_*")?;
        Self::require_pair(m, k)?;
        if k == 0 {
            return Err(Error::Domain("hit_time needs k >= 1; use exc_point for k = 0".into()));
        }
        let kappa = self.kappa();
        let (mf, kf) = (m as f64, k as f64);
        let a = kf * kf / (2.0 * mf);
        match HeightRegime::classify(k, m, chi)? {
            HeightRegime::Low => {
                let m_k = self.table.scale(k as usize)?;
                let point = self.point_form(m)?;
                Ok(self.eval(FormulaId::HitLow, point * m_k, m, k))
            }
            HeightRegime::Mid => {
                let value = 2.0 / (gamma(kappa) * mf) * a.powf(kappa) * (-a).exp();
                Ok(self.eval(FormulaId::HitMid, value, m, k))
            }
            HeightRegime::High => {
                let value = (-kf * kf / (8.0 * mf)).exp() / mf;
                Ok(self.eval(FormulaId::HitHighBound, value, m, k))
            }
        }
    }

    /// The point-law expression without the even-`n` restriction.
    fn point_form(&self, m: u64) -> Result<f64> {
        let kappa = self.kappa();
        let c = 2f64.powf(2.0 - kappa) * kappa / (self.k0 * gamma(kappa));
        Ok(c * (m as f64).powf(-(kappa + 1.0)) * self.l_sqrt(m)?)
    }

    /// `mu_0(n)`, exact up to the supplied table and by the series beyond.
    pub fn mu0(&self, n: u64) -> Result<f64> {
        let mu: &[f64] = match &self.mean {
            ReturnMean::Truncated { mu } => mu,
            _ => &[],
        };
        if (n as usize) < mu.len() {
            return Ok(mu[n as usize]);
        }
        let (start, base) = match mu.last() {
            Some(&v) => (mu.len() as u64, v),
            None => (1, 0.0),
        };
        let mut acc = 0.0;
        for l in start..=n {
            if l % 2 == 0 {
                acc += self.l_sqrt(l)? / l as f64;
            }
        }
        Ok(base + 2.0 / self.k0 * acc)
    }

    /// `2 / E_0(tau_0)` or `2 / mu_0(n)` where applicable.
    fn renewal_density(&self, n: u64) -> Result<Option<(f64, bool)>> {
        match &self.mean {
            ReturnMean::Finite(e) => Ok(Some((2.0 / e, true))),
            ReturnMean::Truncated { .. } => Ok(Some((2.0 / self.mu0(n)?, false))),
            ReturnMean::NotApplicable => Ok(None),
        }
    }

    /// `P_0(X_n = 0)` for even `n`.
    pub fn return_zero(&self, n: u64) -> Result<AsymptoticEval> {
        Self::require_even(n, "RET0")?;
        if self.table.delta() <= -1.0 {
            return Err(Error::Regime {
                formula: "RET0",
                regime: self.regime,
            });
        }
        if n < 2 {
            return Err(Error::Domain("RET0 needs n >= 2".into()));
        }
        if let Some((density, finite)) = self.renewal_density(n)? {
            let id = if finite {
                FormulaId::Ret0PosRec
            } else {
                FormulaId::Ret0Boundary
            };
            return Ok(self.eval(id, density, n, 0));
        }
        let kappa = self.kappa();
        let value =
            2f64.powf(kappa) * self.k0 / gamma(1.0 - kappa) * (n as f64).powf(-(1.0 - kappa)) / self.l_sqrt(n)?;
        Ok(self.eval(FormulaId::Ret0NullRec, value, n, 0))
    }

    fn n_tilde(n: u64) -> u64 {
        n + n % 2
    }

    /// `P_k(X_n = 0)`.
    pub fn occupancy_zero(&self, k: u64, n: u64, chi: f64) -> Result<AsymptoticEval> {
        Self::require_pair(n, k)?;
        if self.table.delta() <= -1.0 {
            return Err(Error::Regime {
                formula: "OCC0",
                regime: self.regime,
            });
        }
        let kappa = self.kappa();
        let (nf, kf) = (n as f64, k as f64);
        let a = kf * kf / (2.0 * nf);
        match HeightRegime::classify(k, n, chi)? {
            HeightRegime::Low => {
                let r = self.return_zero(Self::n_tilde(n))?;
                Ok(self.eval(FormulaId::Occ0Low, r.value, n, k))
            }
            HeightRegime::Mid => match self.renewal_density(n)? {
                Some((density, finite)) => {
                    let id = if finite {
                        FormulaId::Occ0MidFinite
                    } else {
                        FormulaId::Occ0MidBoundary
                    };
                    Ok(self.eval(id, density * regularized_upper_gamma(a, kappa), n, k))
                }
                None => {
                    let value = 2f64.powf(kappa) * self.k0 / gamma(1.0 - kappa) * nf.powf(-(1.0 - kappa))
                        / self.l_sqrt(n)?
                        * (-a).exp();
                    Ok(self.eval(FormulaId::Occ0MidNull, value, n, k))
                }
            },
            HeightRegime::High => {
                let decay = (-kf * kf / (8.0 * nf)).exp();
                match self.renewal_density(n)? {
                    Some((density, finite)) => {
                        let id = if finite {
                            FormulaId::Occ0HighFinite
                        } else {
                            FormulaId::Occ0HighBoundary
                        };
                        Ok(self.eval(id, 4.0 * density * decay, n, k))
                    }
                    None => {
                        let value = K1_PLACEHOLDER * decay * nf.powf(-(1.0 - kappa)) / self.l_sqrt(n)?;
                        Ok(self.eval(FormulaId::Occ0HighNull, value, n, k))
                    }
                }
            }
        }
    }

    /// `P_0(X_n = k)`.
    pub fn location(&self, k: u64, n: u64, chi: f64) -> Result<AsymptoticEval> {
        Self::require_pair(n, k)?;
        if self.table.delta() <= -1.0 {
            return Err(Error::Regime {
                formula: "LOC",
                regime: self.regime,
            });
        }
        if k == 0 {
            let r = self.return_zero(n)?;
            return Ok(self.eval(FormulaId::LocLow, r.value, n, 0));
        }
        let kappa = self.kappa();
        let (nf, kf) = (n as f64, k as f64);
        let a = kf * kf / (2.0 * nf);
        let ku = k as usize;
        match HeightRegime::classify(k, n, chi)? {
            HeightRegime::Low => {
                let r = self.return_zero(Self::n_tilde(n))?;
                let weight = self.table.lambda(ku)? * self.table.p(ku)?;
                Ok(self.eval(FormulaId::LocLow, r.value / weight, n, k))
            }
            HeightRegime::Mid => {
                let value = match (&self.mean, self.renewal_density(n)?) {
                    (ReturnMean::Finite(e), _) => {
                        4.0 / (self.k0 * e)
                            * kf.powf(1.0 - 2.0 * kappa)
                            * self.table.l(ku)?
                            * regularized_upper_gamma(a, kappa)
                    }
                    (_, Some((density, _))) => {
                        2.0 * density / self.k0 * self.table.l(ku)? / kf * regularized_upper_gamma(a, kappa)
                    }
                    (_, None) => {
                        2f64.powf(kappa + 1.0) / gamma(1.0 - kappa)
                            * (kf / nf.sqrt()).powf(1.0 - 2.0 * kappa)
                            * (-a).exp()
                            / nf.sqrt()
                    }
                };
                let id = match &self.mean {
                    ReturnMean::Finite(_) => FormulaId::LocMidFinite,
                    ReturnMean::Truncated { .. } => FormulaId::LocMidBoundary,
                    ReturnMean::NotApplicable => FormulaId::LocMidNull,
                };
                Ok(self.eval(id, value, n, k))
            }
            HeightRegime::High => {
                let decay = (-kf * kf / (8.0 * nf)).exp();
                let (id, value) = match &self.mean {
                    ReturnMean::Finite(e) => (
                        FormulaId::LocHighFinite,
                        32.0 / (self.k0 * e) * kf.powf(1.0 - 2.0 * kappa) * self.table.l(ku)? * decay,
                    ),
                    ReturnMean::Truncated { .. } => (
                        FormulaId::LocHighBoundary,
                        44.0 / (self.k0 * self.mu0(n)?) * self.table.l(ku)? / kf * decay,
                    ),
                    ReturnMean::NotApplicable => (
                        FormulaId::LocHighNull,
                        4.0 * K1_PLACEHOLDER / self.k0 * decay / nf.sqrt(),
                    ),
                };
                Ok(self.eval(id, value, n, k))
            }
        }
    }

    /// Low-height location law with `lambda_k` replaced by its power-law form:
    /// `2^{kappa+1} / Gamma(1 - kappa) n^{-(1-kappa)} k^{-delta} L(k) / L(sqrt n)`.
    pub fn location_lambda(&self, k: u64, n: u64) -> Result<AsymptoticEval> {
        Self::require_pair(n, k)?;
        if self.regime != Regime::NullRecurrent {
            return Err(Error::Regime {
                formula: "LOC_LAMBDA",
                regime: self.regime,
            });
        }
        let kappa = self.kappa();
        let (nf, kf) = (n as f64, k as f64);
        let value = 2f64.powf(kappa + 1.0) / gamma(1.0 - kappa)
            * nf.powf(-(1.0 - kappa))
            * kf.powf(-self.table.delta())
            * self.table.l(k as usize)?
            / self.l_sqrt(n)?;
        Ok(self.eval(FormulaId::LocLambda, value, n, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ssrw_table() -> ScaleTable {
        ScaleTable::build(&WalkSpec::ssrw(), 1 << 12).unwrap()
    }

    #[test]
    fn tags_round_trip() {
        for id in FormulaId::ALL {
            assert_eq!(id.as_str().parse::<FormulaId>().unwrap(), *id);
        }
        assert!(FormulaId::HitHighBound.is_upper_bound());
        assert!(!FormulaId::HitMid.is_upper_bound());
    }

    #[test]
    fn ssrw_tail_constant() {
        let t = ssrw_table();
        let ev = Evaluator::new(&t).unwrap();
        let v = ev.exc_tail(100).unwrap().value;
        assert!((v - (2.0 / PI).sqrt() / 10.0).abs() < 1e-14);
        let r = ev.exc_tail(400).unwrap().value / ev.exc_tail(100).unwrap().value;
        assert!((r - 0.5).abs() < 1e-14);
    }

    #[test]
    fn point_over_tail_is_two_kappa_over_n() {
        let spec = WalkSpec::rational(0.5).unwrap();
        let t = ScaleTable::build(&spec, 1 << 12).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        for n in [16u64, 256, 1000] {
            let r = ev.exc_point(n).unwrap().value / ev.exc_tail(n).unwrap().value;
            assert!((r - 2.0 * ev.kappa() / n as f64).abs() < 1e-15);
        }
        assert!(matches!(ev.exc_point(7), Err(Error::Parity(_))));
    }

    #[test]
    fn low_hit_is_scale_times_point() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let t = ScaleTable::build(&spec, 1 << 12).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        let h = ev.hit_time(4, 1000, 0.1).unwrap();
        assert_eq!(h.formula, FormulaId::HitLow);
        let expect = t.scale(4).unwrap() * ev.exc_point(1000).unwrap().value;
        assert!((h.value - expect).abs() < 1e-15 * expect);
    }

    #[test]
    fn mid_hit_at_root() {
        let t = ssrw_table();
        let ev = Evaluator::new(&t).unwrap();
        let h = ev.hit_time(32, 1024, 0.1).unwrap();
        assert_eq!(h.formula, FormulaId::HitMid);
        let expect = 2.0 / (PI.sqrt() * 1024.0) * 0.5f64.sqrt() * (-0.5f64).exp();
        assert!((h.value - expect).abs() < 1e-15);
        let high = ev.hit_time(200, 1024, 0.1).unwrap();
        assert!(high.is_upper_bound);
        assert!(matches!(ev.hit_time(3, 1024, 0.1), Err(Error::Parity(_))));
    }

    #[test]
    fn regime_gates() {
        let t = ssrw_table();
        let ev = Evaluator::new(&t).unwrap();
        assert!(matches!(ev.exc_tail_sv(10), Err(Error::Regime { .. })));
        let spec = WalkSpec::new(-1.0, crate::spec::Perturbation::None).unwrap();
        let t = ScaleTable::build(&spec, 1 << 14).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        assert_eq!(ev.exc_tail(100).unwrap().formula, FormulaId::ExcTailSv);
        assert!(matches!(ev.return_zero(100), Err(Error::Regime { .. })));
        assert!(matches!(ev.hit_time(2, 100, 0.1), Err(Error::Regime { .. })));
    }

    #[test]
    fn nu_values() {
        let spec = WalkSpec::new(-1.0, crate::spec::Perturbation::None).unwrap();
        let t = ScaleTable::build(&spec, 1 << 10).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        assert_eq!(ev.nu(2).unwrap(), 0.5);
        let mut prev = 0.0;
        for n in (2..2000).step_by(2) {
            let v = ev.nu(n).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        // sum over even l of 1/l = (1/2) H_{n/2}
        let n = 10_000u64;
        let h: f64 = (1..=n / 2).map(|i| 1.0 / i as f64).sum();
        assert!((ev.nu(n).unwrap() - 0.5 * h).abs() < 1e-12);
    }

    #[test]
    fn positive_recurrent_mean() {
        let spec = WalkSpec::rational(2.0).unwrap();
        let e = expected_return_time(&spec, 1 << 16).unwrap();
        assert!((e.value - 4.0).abs() < 1e-6, "{e:?}");
        assert!(matches!(
            expected_return_time(&WalkSpec::ssrw(), 1 << 12),
            Err(Error::Divergent(_))
        ));
        let t = ScaleTable::build(&spec, 1 << 12).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        let a = ev.return_zero(100).unwrap();
        let b = ev.return_zero(10_000).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.formula, FormulaId::Ret0PosRec);
    }

    #[test]
    fn kappa_one_gamma_is_exponential() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let t = ScaleTable::build(&spec, 1 << 12).unwrap();
        let ev = Evaluator::new(&t).unwrap();
        let r = ev.occupancy_zero(40, 1600, 0.1).unwrap();
        assert_eq!(r.formula, FormulaId::Occ0MidBoundary);
        let expect = 2.0 / ev.mu0(1600).unwrap() * (-0.5f64).exp();
        assert!((r.value - expect).abs() < 1e-14 * expect);
    }
}
