//! Simple symmetric walk: `P_0(tau_0 = n) = C(n, n/2) 2^{-n} / (n - 1)`.

use besselwalk_core::exact::first_passage;
use besselwalk_core::WalkSpec;

mod oracles;
use oracles::ssrw_return_law;

#[test]
fn return_law_matches_closed_form() {
    let n_max = 2000;
    let fp = first_passage(&WalkSpec::ssrw(), 0, n_max).unwrap();
    let want = ssrw_return_law(n_max);
    let mut worst: f64 = 0.0;
    for n in (2..=n_max).step_by(2) {
        worst = worst.max((fp.point(n) / want[n] - 1.0).abs());
        assert_eq!(fp.point(n - 1), 0.0);
    }
    assert!(worst <= 1e-12, "max relative error {worst:e}");
}

#[test]
fn return_tail_is_central_term() {
    // P_0(tau_0 > 2m) = C(2m, m) 2^{-2m}
    let fp = first_passage(&WalkSpec::ssrw(), 0, 512).unwrap();
    let mut c = 1.0;
    for m in 1..=256usize {
        c *= (2 * m - 1) as f64 / (2 * m) as f64;
        assert!((fp.tail()[2 * m + 1] / c - 1.0).abs() < 1e-12);
    }
}
