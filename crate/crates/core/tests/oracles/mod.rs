//! Independent oracles shared by the test targets: quadrature, brute-force
//! path enumeration and the simple symmetric walk's return law.
#![allow(dead_code)]

use besselwalk_core::WalkSpec;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=order {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        out.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
    }
    out
}

/// Composite 20-point Gauss-Legendre over `panels` equal pieces of `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    thread_local!(static RULE: Vec<(f64, f64)> = gauss_legendre(20));
    RULE.with(|rule| {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            let mid = a + (i as f64 + 0.5) * h;
            for &(z, w) in rule {
                acc += w * f(mid + 0.5 * h * z);
            }
        }
        acc * 0.5 * h
    })
}

/// `Gamma(kappa, a) / Gamma(kappa)` with both pieces integrated. For
/// `kappa <= 1` the lower piece uses `t = u^{1/kappa}`, which removes the
/// singularity at 0.
pub fn upper_gamma_oracle(a: f64, kappa: f64) -> f64 {
    let integrand = |t: f64| ((kappa - 1.0) * t.ln() - t).exp();
    let lower = if kappa <= 1.0 {
        integrate(&|u: f64| (-u.powf(1.0 / kappa)).exp(), 0.0, a.powf(kappa), 64) / kappa
    } else {
        // halving panels towards 0, where t^{kappa-1} has a cusp
        let mut acc = 0.0;
        let mut hi = a;
        for _ in 0..200 {
            acc += integrate(&integrand, 0.5 * hi, hi, 2);
            hi *= 0.5;
        }
        acc
    };
    // geometric panels from a: the integrand varies on the scale of t near 0
    let mut upper = 0.0;
    let mut lo = a;
    while lo < a + 150.0 {
        let hi = lo + lo.clamp(1e-3, 2.0);
        upper += integrate(&integrand, lo, hi, 4);
        lo = hi;
    }
    upper / (lower + upper)
}

/// Exit moments from the Green's function of `(x - 1, x + 1)` with scale
/// `s(y) = y^{1+delta}` and speed density `2 / s'(y)`.
pub fn exit_oracle(x: f64, delta: f64) -> (f64, f64, f64, f64) {
    let a = 1.0 + delta;
    let s = |y: f64| y.powf(a);
    let (l, r) = (x - 1.0, x + 1.0);
    let span = s(r) - s(l);
    let f = (s(r) - s(x)) / span;
    let green = |y: f64| {
        let (lo, hi) = if y < x { (y, x) } else { (x, y) };
        (s(lo) - s(l)) * (s(r) - s(hi)) / span * 2.0 / (a * y.powf(delta))
    };
    let moment = |phi: &dyn Fn(f64) -> f64| {
        let w = |y: f64| green(y) * phi(y);
        integrate(&w, l, x, 16) + integrate(&w, x, r, 16)
    };
    let g = moment(&|_| 1.0);
    let hp = moment(&|y| s(y) - s(l)) / span;
    let hm = moment(&|y| s(r) - s(y)) / span;
    (f, g, hp, hm)
}

pub struct Tally {
    /// `hit[m]`: probability of the first visit to 0 at step m.
    pub hit: Vec<f64>,
    /// `at[n][j]`: probability of height j at step n.
    pub at: Vec<Vec<f64>>,
}

// depth-first over all 2^n step sequences; at 0 the down branch has weight 0
fn walk(p: &[f64], x: usize, t: usize, w: f64, first_done: bool, tally: &mut Tally) {
    tally.at[t][x] += w;
    if t + 1 == tally.at.len() {
        return;
    }
    for up in [true, false] {
        let (nx, pw) = if up {
            (x + 1, if x == 0 { 1.0 } else { p[x] })
        } else if x == 0 {
            continue;
        } else {
            (x - 1, 1.0 - p[x])
        };
        let hit_now = !first_done && nx == 0;
        if hit_now {
            tally.hit[t + 1] += w * pw;
        }
        walk(p, nx, t + 1, w * pw, first_done || hit_now, tally);
    }
}

/// Exact laws to `horizon` steps from `k` by summing over every path.
pub fn enumerate(spec: &WalkSpec, k: usize, horizon: usize) -> Tally {
    let p: Vec<f64> = (0..=k + horizon + 1).map(|x| spec.p_up(x as u64)).collect();
    let mut tally = Tally {
        hit: vec![0.0; horizon + 1],
        at: vec![vec![0.0; k + horizon + 2]; horizon + 1],
    };
    walk(&p, k, 0, 1.0, false, &mut tally);
    tally
}

/// `P_0(tau_0 = n)` for the simple symmetric walk, `n = 0..=n_max`:
/// `C(n, n/2) 2^{-n} / (n - 1)` at even `n`, built by
/// `c_{n+2} = c_n (n+1)/(n+2)` for the central term `c_n`.
pub fn ssrw_return_law(n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let mut c = 1.0;
    for n in (2..=n_max).step_by(2) {
        c *= (n - 1) as f64 / n as f64;
        out[n] = c / (n - 1) as f64;
    }
    out
}
