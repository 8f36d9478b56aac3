//! Structural properties over randomly drawn specs.

use besselwalk_core::exact::{confinement_prob, first_passage, ForwardEvolution};
use besselwalk_core::{Perturbation, ScaleTable, WalkSpec};
use proptest::prelude::*;

fn any_spec() -> impl Strategy<Value = WalkSpec> {
    let delta = -0.9f64..3.0;
    let pert = prop_oneof![
        Just(Perturbation::None),
        Just(Perturbation::Rational),
        (-0.5f64..0.5).prop_map(|c| Perturbation::InverseSquare { c }),
        (-0.5f64..0.5).prop_map(|c| Perturbation::LogDrift { c }),
    ];
    (delta, pert).prop_filter_map("spec must validate", |(d, p)| WalkSpec::new(d, p).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_are_complementary(spec in any_spec(), x in 1u64..100_000) {
        let (p, q) = spec.transition_prob(x).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-15);
        prop_assert!(p >= spec.epsilon() && q >= spec.epsilon());
        prop_assert_eq!(spec.transition_prob(0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn scale_increments_are_lambda(spec in any_spec(), x in 0usize..2000) {
        let t = ScaleTable::build(&spec, 2048).unwrap();
        let diff = t.scale(x + 1).unwrap() - t.scale(x).unwrap();
        let lambda = t.lambda(x).unwrap();
        prop_assert!((diff - lambda).abs() <= 1e-12 * t.scale(x + 1).unwrap());
    }

    #[test]
    fn duality_is_an_involution(spec in any_spec(), x in 1u64..10_000) {
        let dual = spec.dual_spec().unwrap();
        prop_assert!((dual.p_up(x) - (1.0 - spec.p_up(x))).abs() <= 1e-15);
        let back = dual.dual_spec().unwrap();
        prop_assert_eq!(back.digest(), spec.digest());
        prop_assert_eq!(back.p_up(x), spec.p_up(x));
    }

    #[test]
    fn occupancy_rows_sum_to_one(spec in any_spec(), k in 0usize..20, n in 1usize..300) {
        let mut evo = ForwardEvolution::new(&spec, k, n).unwrap();
        while evo.advance() {
            let total: f64 = evo.row().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(evo.row().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn passage_law_is_a_distribution(spec in any_spec(), k in 0usize..20, n in 2usize..400) {
        let fp = first_passage(&spec, k, n).unwrap();
        let hit: f64 = fp.f().iter().sum();
        prop_assert!((hit + fp.tail()[n + 1] - 1.0).abs() <= 1e-12);
        prop_assert!(fp.tail().windows(2).all(|w| w[1] <= w[0] + 1e-14));
        for m in 0..=n {
            if (m + k) % 2 == 1 {
                prop_assert_eq!(fp.point(m), 0.0);
            }
        }
    }

    #[test]
    fn confinement_decays_geometrically(spec in any_spec(), h in 3usize..16, frac in 0.0f64..1.0) {
        let q = 1 + ((h - 2) as f64 * frac) as usize;
        let m = 4 * h * h;
        let a = confinement_prob(&spec, q, h, m).unwrap();
        let b = confinement_prob(&spec, q, h, 2 * m).unwrap();
        prop_assert!(b <= 0.9 * a, "h {} q {} ratio {}", h, q, b / a);
    }
}

#[test]
fn l_is_slowly_varying() {
    // |L(2x)/L(x) - 1| should shrink as x doubles through 2^8 .. 2^14
    for pert in [
        Perturbation::Rational,
        Perturbation::InverseSquare { c: 0.8 },
        Perturbation::LogDrift { c: 0.5 },
        Perturbation::LogDrift { c: -0.5 },
    ] {
        let spec = WalkSpec::new(0.5, pert.clone()).unwrap();
        let t = ScaleTable::build(&spec, 1 << 15).unwrap();
        let dev: Vec<f64> = (8..=14)
            .map(|e| (t.l(2 << e).unwrap() / t.l(1 << e).unwrap() - 1.0).abs())
            .collect();
        assert!(dev.windows(2).all(|w| w[1] <= w[0]), "{pert:?}: {dev:?}");
        assert!(dev[dev.len() - 1] < 0.1, "{pert:?}: {dev:?}");
    }
}
