//! Exit moments of the Bessel process from a unit interval.
//!
//! `Y` solves `dY = -delta / (2Y) dt + dB` and has scale function
//! `s(x) = x^{1 + delta}`. Started at `x`, it leaves `(x - 1, x + 1)` at time
//! `sigma`. This module evaluates
//!
//! * `f(x) = P_x(Y_sigma = x - 1)`, which is also the down-probability of the
//!   imbedded walk,
//! * `g(x) = E_x sigma`,
//! * `h+(x) = E_x ∫_0^sigma (s(Y_t) - s(x - 1)) dt` and
//!   `h-(x) = E_x ∫_0^sigma (s(x + 1) - s(Y_t)) dt`, both divided by
//!   `s(x + 1) - s(x - 1)`.
//!
//! All differences of `s` are formed with `ln_1p`/`expm1` so the large-`x`
//! limits are not lost to cancellation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitMoments {
    pub f: f64,
    pub g: f64,
    pub h_plus_norm: f64,
    pub h_minus_norm: f64,
    pub q_bi: f64,
}

/// `((1 + 1/x)^b - 1, (1 - 1/x)^b - 1)`.
fn rel_steps(x: f64, b: f64) -> (f64, f64) {
    let u = 1.0 / x;
    ((b * u.ln_1p()).exp_m1(), (b * (-u).ln_1p()).exp_m1())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > -1.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("Bessel scale needs delta > -1, got {delta}")));
    }
    Ok(())
}

/// `P_x(tau_{x-1} < tau_{x+1})` for the Bessel process, `x >= 1`.
pub fn imbedded_down_prob(x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("imbedded walk lives on x >= 1, got {x}")));
    }
    let (up, down) = rel_steps(x, 1.0 + delta);
    Ok(up / (up - down))
}

pub fn bessel_exit_moments(x: f64, delta: f64) -> Result<ExitMoments> {
    check_delta(delta)?;
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("exit moments need x > 1, got {x}")));
    }
    let a = 1.0 + delta;
    let (up, down) = rel_steps(x, a);
    let f = up / (up - down);

    let g = if delta == 1.0 {
        // Dynkin with phi(z) = -z^2 ln z; the ln x terms cancel because s is a martingale
        f * (x - 1.0).powi(2) * (-1.0 / x).ln_1p() + (1.0 - f) * (x + 1.0).powi(2) * (1.0 / x).ln_1p()
    } else {
        (1.0 + 2.0 * x * (1.0 - 2.0 * f)) / (1.0 - delta)
    };

    // E_x ∫ s(Y) dt via psi(z) = z^{3 + delta} / (3 + delta), scaled by x^{-a}
    let b = 3.0 + delta;
    let (up3, down3) = rel_steps(x, b);
    let t_scaled = x * x / b * (f * down3 + (1.0 - f) * up3);
    let s_minus = 1.0 + down;
    let s_plus = 1.0 + up;
    let ds = up - down;
    let h_plus_norm = (t_scaled - s_minus * g) / ds;
    let h_minus_norm = (s_plus * g - t_scaled) / ds;

    Ok(ExitMoments {
        f,
        g,
        h_plus_norm,
        h_minus_norm,
        q_bi: f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_is_brownian() {
        for &x in &[1.5, 3.0, 50.0, 1e4] {
            let e = bessel_exit_moments(x, 0.0).unwrap();
            assert!((e.f - 0.5).abs() < 1e-15);
            // exit time of Brownian motion from (-1, 1) has mean 1
            assert!((e.g - 1.0).abs() < 1e-9, "{e:?}");
            assert!((e.h_plus_norm - 0.5).abs() < 1e-8, "{e:?}");
        }
    }

    #[test]
    fn delta_one_at_two() {
        let q = imbedded_down_prob(2.0, 1.0).unwrap();
        assert!((q - 5.0 / 8.0).abs() < 1e-15);
        assert_eq!(bessel_exit_moments(2.0, 1.0).unwrap().q_bi, q);
    }

    #[test]
    fn h_parts_add_to_g() {
        for &delta in &[-0.5, 0.5, 1.0, 2.0] {
            for &x in &[1.5, 4.0, 100.0] {
                let e = bessel_exit_moments(x, delta).unwrap();
                assert!((e.h_plus_norm + e.h_minus_norm - e.g).abs() < 1e-10 * e.g.max(1.0));
                assert!(e.h_plus_norm > 0.0 && e.h_minus_norm > 0.0);
            }
        }
    }

    #[test]
    fn log_branch_is_continuous() {
        for &x in &[2.0, 10.0, 300.0] {
            let at = bessel_exit_moments(x, 1.0).unwrap();
            let near = bessel_exit_moments(x, 1.0 + 1e-6).unwrap();
            assert!((at.g - near.g).abs() < 1e-4 * at.g, "{at:?} {near:?}");
        }
    }

    #[test]
    fn rejects_domain() {
        assert!(bessel_exit_moments(1.0, 0.5).is_err());
        assert!(bessel_exit_moments(2.0, -1.0).is_err());
        assert!(imbedded_down_prob(0.5, 0.0).is_err());
        assert!((imbedded_down_prob(1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
    }
}
