//! Scale function and the derived constants.
//!
//! For a walk with up-probabilities `p_x`,
//!
//! ```text
//! lambda_x = prod_{k=1}^x q_k / p_k,   M_x = sum_{k<x} lambda_k,   L(x) = exp(R_1 + ... + R_x)
//! ```
//!
//! `M` is the scale function (`M_{X ∧ tau_0}` is a martingale), and
//! `lambda_x ~ K0 x^{2 kappa - 1} / L(x)` for a positive constant `K0`.
//! Every quantity is kept in log space as well; the linear-space accessors
//! refuse heights past the point where binary64 overflows.

use crate::error::{Error, Result};
use crate::spec::WalkSpec;

/// Smallest horizon accepted by [`ScaleTable::estimate_k0`].
pub const K0_MIN_HORIZON: usize = 1 << 10;

/// Largest tabulation horizon; about 40 bytes per height.
pub const MAX_SCALE_HORIZON: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K0Estimate {
    /// Extrapolated limit.
    pub value: f64,
    /// Spread of the three raw evaluations.
    pub width: f64,
    /// `lambda_x L(x) / x^{2 kappa - 1}` at `x_max/4, x_max/2, x_max`.
    pub raw: [f64; 3],
    /// Successive raw differences shrink without changing sign.
    pub contracting: bool,
}

/// Finite check that `M_x` keeps growing along dyadic scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceProxy {
    /// `M_{x_max} / M_{x_max/2}`.
    pub ratio: f64,
    /// `(M_{x_max} - M_{x_max/2}) / (M_{x_max/2} - M_{x_max/4})`.
    pub increment_ratio: f64,
    /// Dyadic increments are not shrinking geometrically.
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct ScaleTable {
    spec: WalkSpec,
    x_max: usize,
    kappa: f64,
    lambda: Vec<f64>,
    log_lambda: Vec<f64>,
    m: Vec<f64>,
    log_m: Vec<f64>,
    log_l: Vec<f64>,
    overflow_at: Option<usize>,
}

impl ScaleTable {
    /// Tabulates `lambda_x`, `L(x)` for `x <= x_max` and `M_x` for `x <= x_max + 1`.
    pub fn build(spec: &WalkSpec, x_max: usize) -> Result<ScaleTable> {
        if x_max < 1 {
            return Err(Error::Domain("scale table needs x_max >= 1".into()));
        }
        if x_max > MAX_SCALE_HORIZON {
            return Err(Error::ResourceLimit {
                what: "scale table".into(),
                cells: x_max as u64,
                limit: MAX_SCALE_HORIZON as u64,
            });
        }
        let mut lambda = Vec::with_capacity(x_max + 1);
        let mut log_lambda = Vec::with_capacity(x_max + 1);
        let mut log_l = Vec::with_capacity(x_max + 1);
        lambda.push(1.0);
        log_lambda.push(0.0);
        log_l.push(0.0);
        let mut lam = 1.0f64;
        let mut log_lam = 0.0f64;
        let mut log_lx = 0.0f64;
        for x in 1..=x_max as u64 {
            let (p, q) = spec.transition_prob(x)?;
            lam *= q / p;
            log_lam += (q / p).ln();
            log_lx += spec.perturbation_term(x);
            lambda.push(lam);
            log_lambda.push(log_lam);
            log_l.push(log_lx);
        }

        let mut m = Vec::with_capacity(x_max + 2);
        let mut log_m = Vec::with_capacity(x_max + 2);
        m.push(0.0);
        log_m.push(f64::NEG_INFINITY);
        let mut acc = 0.0f64;
        let mut log_acc = f64::NEG_INFINITY;
        for x in 0..=x_max {
            acc += lambda[x];
            log_acc = log_add_exp(log_acc, log_lambda[x]);
            m.push(acc);
            log_m.push(log_acc);
        }

        let overflow_at =
            (0..=x_max + 1).find(|&x| (x <= x_max && !(lambda[x].is_finite() && lambda[x] > 0.0)) || !m[x].is_finite());

        Ok(ScaleTable {
            spec: spec.clone(),
            x_max,
            kappa: spec.kappa(),
            lambda,
            log_lambda,
            m,
            log_m,
            log_l,
            overflow_at,
        })
    }

    pub fn spec(&self) -> &WalkSpec {
        &self.spec
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn delta(&self) -> f64 {
        self.spec.delta()
    }

    pub fn digest(&self) -> String {
        self.spec.digest()
    }

    /// First height where `lambda_x` or `M_x` is not representable, if any.
    pub fn overflow_frontier(&self) -> Option<usize> {
        self.overflow_at
    }

    fn check(&self, x: usize, max: usize) -> Result<()> {
        if x > max {
            return Err(Error::OutOfRange {
                index: x as u64,
                max: max as u64,
            });
        }
        Ok(())
    }

    fn check_linear(&self, quantity: &'static str, x: usize, max: usize) -> Result<()> {
        self.check(x, max)?;
        match self.overflow_at {
            Some(frontier) if x >= frontier => Err(Error::Overflow { quantity, x }),
            _ => Ok(()),
        }
    }

    pub fn lambda(&self, x: usize) -> Result<f64> {
        self.check_linear("lambda", x, self.x_max)?;
        Ok(self.lambda[x])
    }

    pub fn log_lambda(&self, x: usize) -> Result<f64> {
        self.check(x, self.x_max)?;
        Ok(self.log_lambda[x])
    }

    /// `M_x` for `x <= x_max + 1`.
    pub fn scale(&self, x: usize) -> Result<f64> {
        self.check_linear("M", x, self.x_max + 1)?;
        Ok(self.m[x])
    }

    pub fn log_scale(&self, x: usize) -> Result<f64> {
        self.check(x, self.x_max + 1)?;
        Ok(self.log_m[x])
    }

    /// Up-probability at an integer height inside the table.
    pub fn p(&self, x: usize) -> Result<f64> {
        self.check(x, self.x_max)?;
        Ok(self.spec.p_up(x as u64))
    }

    /// `L(x)` at an integer height.
    pub fn l(&self, x: usize) -> Result<f64> {
        self.check(x, self.x_max)?;
        Ok(self.log_l[x].exp())
    }

    pub fn log_l(&self, x: usize) -> Result<f64> {
        self.check(x, self.x_max)?;
        Ok(self.log_l[x])
    }

    /// `L` at a real argument, linear between integers.
    pub fn l_at(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("L is defined on [0, inf), got {y}")));
        }
        if y > self.x_max as f64 {
            return Err(Error::OutOfRange {
                index: y.ceil() as u64,
                max: self.x_max as u64,
            });
        }
        let lo = y.floor() as usize;
        let frac = y - lo as f64;
        let l_lo = self.log_l[lo].exp();
        if frac == 0.0 {
            return Ok(l_lo);
        }
        let l_hi = self.log_l[lo + 1].exp();
        Ok(l_lo + frac * (l_hi - l_lo))
    }

    /// `P_0(H >= h) = M_1 / M_h = 1 / M_h`.
    pub fn height_tail(&self, h: usize) -> Result<f64> {
        if h == 0 {
            return Err(Error::Domain("height_tail needs h >= 1".into()));
        }
        self.check(h, self.x_max)?;
        Ok((-self.log_m[h]).exp())
    }

    fn k0_raw(&self, x: usize) -> f64 {
        let xf = x as f64;
        (self.log_lambda[x] + self.log_l[x] - (2.0 * self.kappa - 1.0) * xf.ln()).exp()
    }

    /// Limit of `lambda_x L(x) / x^{2 kappa - 1}` from three dyadic reads and
    /// one Richardson step against a `1/x` correction.
    pub fn estimate_k0(&self) -> Result<K0Estimate> {
        if self.x_max < K0_MIN_HORIZON {
            return Err(Error::Domain(format!(
                "K0 estimation needs x_max >= {K0_MIN_HORIZON}, table has {}",
                self.x_max
            )));
        }
        let raw = [
            self.k0_raw(self.x_max / 4),
            self.k0_raw(self.x_max / 2),
            self.k0_raw(self.x_max),
        ];
        let value = 2.0 * raw[2] - raw[1];
        let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let d1 = raw[1] - raw[0];
        let d2 = raw[2] - raw[1];
        let contracting = d2.abs() <= d1.abs() && d1 * d2 >= 0.0;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Divergent(format!("K0 extrapolation gave {value} from {raw:?}")));
        }
        Ok(K0Estimate {
            value,
            width: hi - lo,
            raw,
            contracting,
        })
    }

    pub fn recurrence_proxy(&self) -> RecurrenceProxy {
        let x = self.x_max;
        let m = |i: usize| self.log_m[i];
        let ratio = (m(x) - m(x / 2)).exp();
        let upper = ln_sub_exp(m(x), m(x / 2));
        let lower = ln_sub_exp(m(x / 2), m(x / 4));
        let increment_ratio = (upper - lower).exp();
        RecurrenceProxy {
            ratio,
            increment_ratio,
            passed: increment_ratio >= 0.9,
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
fn ln_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Perturbation;

    #[test]
    fn ssrw_table() {
        let t = ScaleTable::build(&WalkSpec::ssrw(), 10).unwrap();
        for x in 0..=10 {
            assert_eq!(t.lambda(x).unwrap(), 1.0);
            assert_eq!(t.scale(x).unwrap(), x as f64);
            assert_eq!(t.l(x).unwrap(), 1.0);
        }
        assert!((t.height_tail(4).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rational_delta_one_telescopes() {
        let t = ScaleTable::build(&WalkSpec::rational(1.0).unwrap(), 4).unwrap();
        for x in 0..=4 {
            assert!((t.lambda(x).unwrap() - (x as f64 + 1.0)).abs() < 1e-14);
        }
        assert!((t.scale(4).unwrap() - 10.0).abs() < 1e-13);
        assert!((t.height_tail(3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(t.height_tail(1).unwrap(), 1.0);
    }

    #[test]
    fn interpolation_between_integers() {
        let spec = WalkSpec::new(0.0, Perturbation::InverseSquare { c: 0.5 }).unwrap();
        let t = ScaleTable::build(&spec, 8).unwrap();
        let a = t.l(2).unwrap();
        let b = t.l(3).unwrap();
        assert!((t.l_at(2.25).unwrap() - (0.75 * a + 0.25 * b)).abs() < 1e-15);
        assert!(t.l_at(8.5).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        // lambda gains a factor 9 per overridden height
        let spec = WalkSpec::builder(0.0).x_override(vec![0.1; 400]).build().unwrap();
        let t = ScaleTable::build(&spec, 1000).unwrap();
        let frontier = t.overflow_frontier().unwrap();
        assert!(frontier > 300 && frontier < 340, "{frontier}");
        assert!(matches!(t.lambda(frontier), Err(Error::Overflow { .. })));
        assert!(t.lambda(frontier - 1).is_ok());
        assert!(t.log_lambda(1000).unwrap().is_finite());
        assert!(t.log_scale(1001).unwrap().is_finite());
        assert!(t.height_tail(300).unwrap() > 0.0);
        assert!(t.height_tail(1000).unwrap() >= 0.0);
    }

    #[test]
    fn k0_needs_horizon() {
        let t = ScaleTable::build(&WalkSpec::ssrw(), 512).unwrap();
        assert!(t.estimate_k0().is_err());
        let t = ScaleTable::build(&WalkSpec::ssrw(), 1024).unwrap();
        let k = t.estimate_k0().unwrap();
        assert_eq!(k.value, 1.0);
        assert_eq!(k.width, 0.0);
        assert!(k.contracting);
    }
}
