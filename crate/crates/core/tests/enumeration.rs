//! Exact engine against brute-force enumeration of every path.

use besselwalk_core::exact::{first_passage, ForwardEvolution};
use besselwalk_core::{Perturbation, WalkSpec};

mod oracles;
use oracles::enumerate;

const HORIZON: usize = 14;

fn specs() -> Vec<WalkSpec> {
    vec![
        WalkSpec::rational(0.5).unwrap(),
        WalkSpec::new(-0.5, Perturbation::InverseSquare { c: 0.3 }).unwrap(),
        WalkSpec::builder(2.0).x_override(vec![0.2, 0.35]).build().unwrap(),
    ]
}

#[test]
fn first_passage_matches_enumeration() {
    for spec in specs() {
        for k in 0..=3 {
            let brute = enumerate(&spec, k, HORIZON);
            let fp = first_passage(&spec, k, HORIZON).unwrap();
            for m in 1..=HORIZON {
                let err = (fp.point(m) - brute.hit[m]).abs();
                assert!(err <= 1e-14, "delta {} k {k} m {m}: {err:e}", spec.delta());
            }
            // tail[n] = P(tau >= n) = 1 - P(tau <= n - 1)
            let mut below = 0.0;
            for n in 1..=HORIZON {
                below += brute.hit[n - 1];
                assert!((fp.tail()[n] - (1.0 - below)).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn occupancy_matches_enumeration() {
    for spec in specs() {
        for k in 0..=3 {
            let brute = enumerate(&spec, k, HORIZON);
            let mut evo = ForwardEvolution::new(&spec, k, HORIZON).unwrap();
            loop {
                let n = evo.time();
                for (j, &v) in brute.at[n].iter().enumerate() {
                    let dp = evo.row().get(j).copied().unwrap_or(0.0);
                    assert!((dp - v).abs() <= 1e-14, "delta {} k {k} n {n} j {j}", spec.delta());
                }
                if !evo.advance() {
                    break;
                }
            }
        }
    }
}
