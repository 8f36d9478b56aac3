//! `K0` and scale-function values against independent series.

use besselwalk_core::asymptotics::{expected_return_time, Evaluator};
use besselwalk_core::{Perturbation, ScaleTable, WalkSpec};

/// For the rational form `lambda_x = Gamma(x+1+delta) / (Gamma(1+delta) Gamma(x+1))`,
/// so `K0 = L(inf) / Gamma(1 + delta)` with `L(inf) = exp(sum delta^2 / (x (2x + delta)))`.
fn rational_k0(delta: f64, gamma_one_plus_delta: f64) -> f64 {
    let terms = 10_000_000u64;
    let mut s = 0.0;
    // smallest terms first
    for x in (1..=terms).rev() {
        let x = x as f64;
        s += delta * delta / (x * (2.0 * x + delta));
    }
    // tail beyond the last term, by the integral of delta^2 / 2x^2
    s += delta * delta / (2.0 * terms as f64);
    s.exp() / gamma_one_plus_delta
}

#[test]
fn rational_k0_matches_series() {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for (delta, g) in [(-0.5, sqrt_pi), (0.5, 0.5 * sqrt_pi), (1.0, 1.0), (2.0, 2.0)] {
        let want = rational_k0(delta, g);
        let table = ScaleTable::build(&WalkSpec::rational(delta).unwrap(), 1 << 20).unwrap();
        let est = table.estimate_k0().unwrap();
        assert!(
            (est.value / want - 1.0).abs() < 1e-6,
            "delta {delta}: {} vs {want}",
            est.value
        );
        assert!(est.contracting);
    }
}

#[test]
fn lambda_is_the_product_of_odds() {
    let spec = WalkSpec::new(0.7, Perturbation::InverseSquare { c: -0.4 }).unwrap();
    let table = ScaleTable::build(&spec, 500).unwrap();
    let mut lambda = 1.0;
    let mut m = 0.0;
    for x in 0..=500usize {
        if x >= 1 {
            let p = spec.p_up(x as u64);
            lambda *= (1.0 - p) / p;
        }
        assert!((table.lambda(x).unwrap() / lambda - 1.0).abs() < 1e-12, "x = {x}");
        assert!((table.scale(x).unwrap() - m).abs() <= 1e-12 * m.max(1.0));
        m += lambda;
    }
}

#[test]
fn mean_return_time_for_delta_two() {
    // rational delta = 2 has E_0 tau_0 = 4
    let est = expected_return_time(&WalkSpec::rational(2.0).unwrap(), 1 << 20).unwrap();
    assert!((est.value - 4.0).abs() < 1e-6, "{est:?}");
    let table = ScaleTable::build(&WalkSpec::rational(2.0).unwrap(), 1 << 20).unwrap();
    let ev = Evaluator::new(&table).unwrap();
    let r = ev.return_zero(1000).unwrap();
    assert!((r.value - 0.5).abs() < 1e-6);
}
