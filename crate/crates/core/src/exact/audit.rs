//! Audits of exact identities and inequalities on DP tables.
//!
//! Identities are checked as absolute residuals over every time up to the
//! horizon. Inequalities are checked in cross-multiplied form, `lhs <= rhs`,
//! with slack `rhs - lhs`; anything below [`SLACK_TOLERANCE`] is a violation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{first_passage, renewal_convolution, FirstPassageTable, ForwardEvolution};
use crate::error::{Error, Result};
use crate::scale::ScaleTable;
use crate::spec::WalkSpec;

/// Largest negative slack treated as rounding noise.
pub const SLACK_TOLERANCE: f64 = -1e-13;

/// Horizons up to this are audited over every index combination.
pub const EXHAUSTIVE_HORIZON: usize = 64;

/// Sampled combinations per check and height pair beyond the exhaustive horizon.
pub const SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residual {
    pub max_abs: f64,
    /// Time at which `max_abs` occurs.
    pub at_n: usize,
    pub checked: usize,
    /// Times where the identity is vacuous or not claimed by parity.
    pub zero_by_parity: usize,
}

impl Residual {
    fn record(&mut self, n: usize, lhs: f64, rhs: f64) {
        let r = (lhs - rhs).abs();
        self.checked += 1;
        if r > self.max_abs || r.is_nan() {
            self.max_abs = r;
            self.at_n = n;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub n_max: usize,
    pub k: usize,
    /// `P_k(X_n = 0) = p_k lambda_k P_0(X_n = k)`; absent for `k = 0`.
    pub reversal: Option<Residual>,
    /// `P_k(X_n = 0) = sum_j P_k(tau_0 = n - j) P_0(X_j = 0)`.
    pub renewal: Residual,
    /// `P_0(tau_0 > n) = P~_0(X_n = 0)` for even `n`, against the dual walk.
    pub duality: Residual,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        let r = self.reversal.map_or(0.0, |r| r.max_abs);
        r.max(self.renewal.max_abs).max(self.duality.max_abs)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn audit_identities(spec: &WalkSpec, n_max: usize, k: usize) -> Result<IdentityReport> {
    if n_max < 2 {
        return Err(Error::Domain("identity audit needs n_max >= 2".into()));
    }

    // P_k(X_n = 0) and P_0(X_n = k), P_0(X_n = 0) for all n <= n_max
    let mut from_k = Vec::with_capacity(n_max + 1);
    let mut evo = ForwardEvolution::new(spec, k, n_max)?;
    from_k.push(evo.row()[0]);
    while evo.advance() {
        from_k.push(evo.row()[0]);
    }
    let mut to_k = Vec::with_capacity(n_max + 1);
    let mut u = Vec::with_capacity(n_max + 1);
    let mut evo = ForwardEvolution::new(spec, 0, n_max)?;
    to_k.push(evo.row()[k]);
    u.push(evo.row()[0]);
    while evo.advance() {
        to_k.push(evo.row()[k]);
        u.push(evo.row()[0]);
    }

    let reversal = if k >= 1 {
        let table = ScaleTable::build(spec, k)?;
        let weight = table.p(k)? * table.lambda(k)?;
        let mut res = Residual::default();
        for n in 0..=n_max {
            if (n + k) % 2 == 1 {
                res.zero_by_parity += 1;
            }
            res.record(n, from_k[n], weight * to_k[n]);
        }
        Some(res)
    } else {
        None
    };

    let fk = first_passage(spec, k, n_max)?;
    let conv = renewal_convolution(fk.f(), Some(&u));
    let mut renewal = Residual::default();
    for n in 0..=n_max {
        if k == 0 && n == 0 {
            // the return-time convention excludes time 0
            renewal.zero_by_parity += 1;
            continue;
        }
        if (n + k) % 2 == 1 {
            renewal.zero_by_parity += 1;
        }
        renewal.record(n, from_k[n], conv[n]);
    }

    let f0 = if k == 0 { fk } else { first_passage(spec, 0, n_max)? };
    let dual = spec.dual_spec()?;
    let mut evo = ForwardEvolution::new(&dual, 0, n_max)?;
    let mut duality = Residual::default();
    loop {
        let n = evo.time();
        if n % 2 == 0 {
            duality.record(n, f0.tail()[n + 1], evo.row()[0]);
        } else {
            duality.zero_by_parity += 1;
        }
        if !evo.advance() {
            break;
        }
    }

    Ok(IdentityReport {
        n_max,
        k,
        reversal,
        renewal,
        duality,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckTally {
    pub checked: u64,
    pub violations: u64,
    /// Smallest `rhs - lhs` seen.
    pub min_slack: f64,
    /// Smallest `(rhs - lhs) / max(|lhs|, |rhs|)` over cases with a nonzero side.
    pub min_rel_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub n_max: usize,
    pub heights: Vec<usize>,
    pub exhaustive: bool,
    pub tallies: BTreeMap<&'static str, CheckTally>,
    /// First violations found, at most 32.
    pub violations: Vec<Violation>,
}

impl InequalityReport {
    pub fn total_violations(&self) -> u64 {
        self.tallies.values().map(|t| t.violations).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.total_violations() == 0
    }
}

struct Auditor {
    tallies: BTreeMap<&'static str, CheckTally>,
    violations: Vec<Violation>,
}

impl Auditor {
    fn check(&mut self, name: &'static str, lhs: f64, rhs: f64, context: impl FnOnce() -> String) {
        let slack = rhs - lhs;
        let tally = self.tallies.entry(name).or_insert(CheckTally {
            min_slack: f64::INFINITY,
            min_rel_slack: f64::INFINITY,
            ..Default::default()
        });
        tally.checked += 1;
        tally.min_slack = tally.min_slack.min(slack);
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            tally.min_rel_slack = tally.min_rel_slack.min(slack / scale);
        }
        if !(slack >= SLACK_TOLERANCE) {
            tally.violations += 1;
            if self.violations.len() < 32 {
                self.violations.push(Violation {
                    check: name,
                    context: context(),
                    lhs,
                    rhs,
                    slack,
                });
            }
        }
    }
}

/// Index sets drawn either exhaustively or by seeded sampling.
struct Grid {
    n: usize,
    rng: Option<ChaCha8Rng>,
}

impl Grid {
    /// Calls `body` on sorted tuples `a_0 <= ... <= a_{D-1}` in `lo..=hi`.
    fn sorted<const D: usize>(&mut self, lo: usize, hi: usize, mut body: impl FnMut([usize; D])) {
        if hi < lo {
            return;
        }
        match &mut self.rng {
            Some(rng) => {
                for _ in 0..SAMPLES {
                    let mut t = [0usize; D];
                    for v in t.iter_mut() {
                        *v = rng.random_range(lo..=hi);
                    }
                    t.sort_unstable();
                    body(t);
                }
            }
            None => {
                let mut t = [lo; D];
                loop {
                    body(t);
                    // next non-decreasing tuple
                    let mut i = D;
                    loop {
                        if i == 0 {
                            return;
                        }
                        i -= 1;
                        if t[i] < hi {
                            t[i] += 1;
                            for j in i + 1..D {
                                t[j] = t[i];
                            }
                            break;
                        }
                    }
                }
            }
        }
    }

    fn horizon(&self) -> usize {
        self.n
    }
}

/// `P(tau_0 in [a, b])` with `b = usize::MAX` read as unbounded.
fn interval(t: &FirstPassageTable, a: usize, b: usize) -> f64 {
    if b == usize::MAX {
        t.prob_in(a, None)
    } else {
        t.prob_in(a, Some(b))
    }
}

fn show(b: usize) -> String {
    if b == usize::MAX {
        "inf".into()
    } else {
        b.to_string()
    }
}

/// Checks the convexity, averaging and lattice-path inequalities for the
/// return-time law and for the hitting-time laws from each height in
/// `heights` (0 is always included).
pub fn audit_inequalities(spec: &WalkSpec, n_max: usize, heights: &[usize], seed: u64) -> Result<InequalityReport> {
    if n_max < 4 {
        return Err(Error::Domain("inequality audit needs n_max >= 4".into()));
    }
    let mut hs: Vec<usize> = heights.iter().copied().filter(|&h| h <= n_max).collect();
    hs.push(0);
    hs.sort_unstable();
    hs.dedup();

    let tables: Vec<FirstPassageTable> = hs
        .iter()
        .map(|&h| first_passage(spec, h, n_max))
        .collect::<Result<_>>()?;
    let scale = ScaleTable::build(spec, *hs.last().unwrap_or(&1).max(&1))?;
    let exhaustive = n_max <= EXHAUSTIVE_HORIZON;
    let mut grid = Grid {
        n: n_max,
        rng: (!exhaustive).then(|| ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut a = Auditor {
        tallies: BTreeMap::new(),
        violations: Vec::new(),
    };
    let n = n_max;
    let f = tables[0].f();

    // convexity of the return-time law: all even 0 < k < m with m + k <= n
    let mut prefix = vec![0.0; n + 2];
    for m in 0..=n {
        prefix[m + 1] = prefix[m] + f[m];
    }
    for m in (4..=n).step_by(2) {
        for k in (2..m).step_by(2) {
            if m + k > n {
                break;
            }
            a.check("convex", f[m], 0.5 * (f[m + k] + f[m - k]), || format!("m={m} k={k}"));
            let avg = (prefix[m + k + 1] - prefix[m - k]) / (k as f64 + 1.0);
            a.check("average", f[m], avg, || format!("m={m} k={k}"));
        }
    }

    for (ik, &k) in hs.iter().enumerate() {
        for (il, &l) in hs.iter().enumerate().skip(ik + 1) {
            let tk = &tables[ik];
            let tl = &tables[il];
            let fk = tk.f();
            let fl = tl.f();
            let even = (l - k) % 2 == 0;
            // quadruples p <= q <= r <= s, with s = n + 1 standing for infinity
            let top = grid.horizon() + 1;
            let unbounded = |s: usize| if s == top { usize::MAX } else { s };
            if even {
                grid.sorted::<4>(0, top, |[p, q, r, s]| {
                    if q == top {
                        return;
                    }
                    let s = unbounded(s);
                    let lhs = interval(tl, p, q) * interval(tk, r, s);
                    let rhs = interval(tl, r, s) * interval(tk, p, q);
                    a.check("intervals", lhs, rhs, || {
                        format!("k={k} l={l} [{p},{q}] [{r},{}]", show(s))
                    });
                });
            } else {
                let p_min = if k == 0 { 2 } else { 0 };
                grid.sorted::<4>(p_min, top, |[p, q, r, s]| {
                    if q == top || r + 1 > n {
                        return;
                    }
                    let s = unbounded(s);
                    if s != usize::MAX && s + 1 > n {
                        return;
                    }
                    let lhs = interval(tl, p, q) * interval(tk, r, s);
                    let shifted = if s == usize::MAX { s } else { s + 1 };
                    let rhs = interval(tl, r + 1, shifted) * interval(tk, p.saturating_sub(1), q.saturating_sub(1));
                    a.check("intervals2", lhs, rhs, || {
                        format!("k={k} l={l} [{p},{q}] [{r},{}]", show(s))
                    });
                });
            }

            // ratio monotonicity: pairs (n0, n0 + j) with n0 >= l
            grid.sorted::<2>(l.max(1), n, |[n0, n1]| {
                if n1 == n0 {
                    return;
                }
                let j = n1 - n0;
                if (n0 - l) % 2 != 0 || (n0 + j - k) % 2 != 0 {
                    return;
                }
                if even {
                    let lhs = fk[n1] * fl[n0];
                    let rhs = fl[n1] * fk[n0];
                    a.check("lattice1", lhs, rhs, || format!("k={k} l={l} n={n0} j={j}"));
                } else {
                    if n1 + 1 > n || (k == 0 && n0 < 3) {
                        return;
                    }
                    let lhs = fk[n1] * fl[n0];
                    let rhs = fl[n1 + 1] * fk[n0 - 1];
                    a.check("lattice2", lhs, rhs, || format!("k={k} l={l} n={n0} j={j}"));
                }
            });
        }
    }

    for (il, &l) in hs.iter().enumerate() {
        let fl = tables[il].f();
        let ml = scale.scale(l)?;
        // M_0 = 0 under the return-time convention, so l = 0 says nothing
        if l % 2 == 0 && l > 0 {
            for m in l..=n {
                a.check("lattice3", fl[m], ml * f[m], || format!("l={l} m={m}"));
            }
        } else if l % 2 == 1 {
            for m in l.max(2)..=n {
                a.check("lattice4", fl[m], ml * f[m - 1], || format!("l={l} m={m}"));
            }
        }
        if l == 0 {
            continue;
        }
        // lower bounds with P_0(tau_0 - tau_l in [p, q]) = P_l(tau_0 in [p, q]) / M_l
        let t0 = &tables[0];
        let tl = &tables[il];
        grid.sorted::<3>(0, n, |[p, q, m]| {
            if !(p < q && q < m) {
                return;
            }
            if l % 2 == 0 {
                let lhs = f[m] * tl.prob_in(p, Some(q));
                let rhs = fl[m] * t0.prob_in(p, Some(q));
                a.check("lattice5", lhs, rhs, || format!("l={l} [{p},{q}] m={m}"));
            } else {
                if p < 2 {
                    return;
                }
                let lhs = f[m - 1] * tl.prob_in(p, Some(q));
                let rhs = fl[m] * t0.prob_in(p - 1, Some(q - 1));
                a.check("lattice5a", lhs, rhs, || format!("l={l} [{p},{q}] m={m}"));
            }
        });
    }

    Ok(InequalityReport {
        n_max,
        heights: hs,
        exhaustive,
        tallies: a.tallies,
        violations: a.violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssrw_hand_values() {
        let r = audit_identities(&WalkSpec::ssrw(), 2, 1).unwrap();
        assert_eq!(r.reversal.unwrap().max_abs, 0.0);
        assert_eq!(r.duality.max_abs, 0.0);
        assert!(r.renewal.max_abs < 1e-16);
    }

    #[test]
    fn identities_hold_small() {
        for spec in [WalkSpec::rational(0.5).unwrap(), WalkSpec::rational(2.0).unwrap()] {
            for k in [0, 1, 2, 7] {
                let r = audit_identities(&spec, 200, k).unwrap();
                assert!(r.passes(1e-13), "{r:?}");
            }
        }
    }

    #[test]
    fn inequalities_hold_exhaustive() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let r = audit_inequalities(&spec, 24, &[1, 2, 3, 6], 7).unwrap();
        assert!(r.exhaustive);
        assert!(r.is_clean(), "{:?}", r.violations);
        for name in [
            "convex",
            "average",
            "intervals",
            "intervals2",
            "lattice1",
            "lattice2",
            "lattice3",
            "lattice4",
            "lattice5",
            "lattice5a",
        ] {
            assert!(r.tallies[name].checked > 0, "{name}");
        }
    }

    #[test]
    fn detects_broken_law() {
        // a fabricated non-convex sequence must be flagged
        let mut a = Auditor {
            tallies: BTreeMap::new(),
            violations: Vec::new(),
        };
        a.check("convex", 0.3, 0.2, || "fake".into());
        assert_eq!(a.tallies["convex"].violations, 1);
        assert_eq!(a.violations[0].context, "fake");
    }

    #[test]
    fn nondecreasing_tuples() {
        let mut grid = Grid { n: 3, rng: None };
        let mut count = 0;
        grid.sorted::<2>(0, 3, |[x, y]| {
            assert!(x <= y);
            count += 1;
        });
        assert_eq!(count, 10);
    }
}
