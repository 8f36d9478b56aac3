//! Exact finite-horizon laws by forward dynamic programming.
//!
//! Every table here is obtained by pushing probability mass one step at a
//! time through the transition kernel. No height truncation is applied to
//! position laws; for hitting times, mass that can no longer reach 0 before
//! the horizon is moved to an "escaped" bucket, which is exact for the
//! quantities reported.

pub mod audit;

use std::io::Write;

use crate::error::{Error, Result};
use crate::spec::WalkSpec;

pub use audit::{audit_identities, audit_inequalities, IdentityReport, InequalityReport, Residual, Violation};

/// Stored cells allowed in a full [`OccupancyGrid`].
pub const MAX_GRID_CELLS: u64 = 1 << 28;

/// Cell updates allowed in one rolling computation.
pub const MAX_ROLLING_CELLS: u64 = 1 << 36;

fn check_rolling(what: &str, steps: usize, width: usize) -> Result<()> {
    let cells = steps as u64 * width as u64;
    if cells > MAX_ROLLING_CELLS {
        return Err(Error::ResourceLimit {
            what: what.to_string(),
            cells,
            limit: MAX_ROLLING_CELLS,
        });
    }
    Ok(())
}

/// `(p, q)` tables for heights `0..=max_x`.
fn kernel(spec: &WalkSpec, max_x: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::with_capacity(max_x + 1);
    let mut q = Vec::with_capacity(max_x + 1);
    for x in 0..=max_x as u64 {
        let (px, qx) = spec.transition_prob(x)?;
        p.push(px);
        q.push(qx);
    }
    Ok((p, q))
}

/// One step of the reflecting chain on `0..cur.len()`; mass never leaves the
/// array as long as its last entry is zero.
fn step(p: &[f64], q: &[f64], cur: &[f64], next: &mut [f64]) {
    let w = cur.len();
    next[0] = if w > 1 { cur[1] * q[1] } else { 0.0 };
    for j in 1..w - 1 {
        next[j] = cur[j - 1] * p[j - 1] + cur[j + 1] * q[j + 1];
    }
    if w > 1 {
        next[w - 1] = cur[w - 2] * p[w - 2];
    }
}

/// Rolling forward evolution of `P_k(X_n = .)`, two rows at a time.
#[derive(Debug, Clone)]
pub struct ForwardEvolution {
    p: Vec<f64>,
    q: Vec<f64>,
    cur: Vec<f64>,
    next: Vec<f64>,
    n: usize,
    n_max: usize,
}

impl ForwardEvolution {
    pub fn new(spec: &WalkSpec, k: usize, n_max: usize) -> Result<ForwardEvolution> {
        let width = k + n_max + 2;
        check_rolling("occupancy evolution", n_max, width)?;
        let (p, q) = kernel(spec, width)?;
        let mut cur = vec![0.0; width];
        cur[k] = 1.0;
        Ok(ForwardEvolution {
            p,
            q,
            next: vec![0.0; width],
            cur,
            n: 0,
            n_max,
        })
    }

    pub fn time(&self) -> usize {
        self.n
    }

    /// `P_k(X_n = j)` for `j` in `0..width`, at the current time.
    pub fn row(&self) -> &[f64] {
        &self.cur
    }

    /// Advances one step; returns `false` once the horizon is reached.
    pub fn advance(&mut self) -> bool {
        if self.n >= self.n_max {
            return false;
        }
        step(&self.p, &self.q, &self.cur, &mut self.next);
        std::mem::swap(&mut self.cur, &mut self.next);
        self.n += 1;
        true
    }
}

/// Full table of `P_k(X_n = j)` for `0 <= n <= n_max`, `0 <= j <= k + n_max`.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    k: usize,
    n_max: usize,
    rows: Vec<Vec<f64>>,
}

impl OccupancyGrid {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Row `n`, truncated after the highest reachable height `k + n`.
    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }

    pub fn prob(&self, n: usize, j: usize) -> f64 {
        self.rows.get(n).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
    }
}

/// Stored cells of a full occupancy grid.
pub fn occupancy_cells(k: usize, n_max: usize) -> u64 {
    (n_max as u64 + 1) * (k as u64 + n_max as u64 + 1)
}

pub fn occupancy(spec: &WalkSpec, k: usize, n_max: usize) -> Result<OccupancyGrid> {
    if n_max < 1 {
        return Err(Error::Domain("occupancy needs n_max >= 1".into()));
    }
    let cells = occupancy_cells(k, n_max);
    if cells > MAX_GRID_CELLS {
        return Err(Error::ResourceLimit {
            what: format!("occupancy grid (k = {k}, n_max = {n_max}); use ForwardEvolution"),
            cells,
            limit: MAX_GRID_CELLS,
        });
    }
    let mut evo = ForwardEvolution::new(spec, k, n_max)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    rows.push(evo.row()[..=k].to_vec());
    while evo.advance() {
        let n = evo.time();
        rows.push(evo.row()[..=k + n].to_vec());
    }
    Ok(OccupancyGrid { k, n_max, rows })
}

/// Exact law of `tau_0` from height `k` (first return time when `k = 0`).
#[derive(Debug, Clone)]
pub struct FirstPassageTable {
    k: usize,
    n_max: usize,
    f: Vec<f64>,
    tail: Vec<f64>,
    prefix: Vec<f64>,
}

impl FirstPassageTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `f[m] = P_k(tau_0 = m)` for `0 <= m <= n_max`.
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// `tail[n] = P_k(tau_0 >= n)` for `0 <= n <= n_max + 1`.
    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn point(&self, m: usize) -> f64 {
        self.f.get(m).copied().unwrap_or(0.0)
    }

    /// `P_k(tau_0 in [a, b])`; `b = None` means unbounded. Requires the
    /// interval (or `a` when unbounded) to lie within the horizon.
    pub fn prob_in(&self, a: usize, b: Option<usize>) -> f64 {
        match b {
            None => self.tail[a],
            Some(b) if b < a => 0.0,
            Some(b) => {
                if b - a < 64 {
                    self.f[a..=b].iter().sum()
                } else {
                    self.prefix[b + 1] - self.prefix[a]
                }
            }
        }
    }

    /// `m, f, tail` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,f,tail")?;
        for m in 0..=self.n_max {
            writeln!(out, "{},{:.16e},{:.16e}", m, self.f[m], self.tail[m])?;
        }
        Ok(())
    }
}

pub fn first_passage(spec: &WalkSpec, k: usize, n_max: usize) -> Result<FirstPassageTable> {
    if n_max < 2 {
        return Err(Error::Domain("first_passage needs n_max >= 2".into()));
    }
    let width = n_max + 2;
    check_rolling("first-passage table", n_max, width)?;
    let (p, q) = kernel(spec, width)?;

    let mut f = vec![0.0; n_max + 1];
    let mut tail = vec![1.0; n_max + 2];
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    let mut escaped = 0.0;
    let t0 = if k == 0 {
        // forced first step
        cur[1] = 1.0;
        1
    } else {
        if k <= n_max {
            cur[k] = 1.0;
        } else {
            escaped = 1.0;
        }
        0
    };
    // tail[n] = P(tau_0 > n - 1) = mass alive after step n - 1
    tail[0] = 1.0;
    if t0 == 1 {
        tail[1] = 1.0;
    }
    for t in t0..n_max {
        // at time t, heights above n_max - t cannot return by n_max
        let reach = n_max - t;
        for c in cur.iter_mut().skip(reach + 1) {
            if *c != 0.0 {
                escaped += *c;
                *c = 0.0;
            }
        }
        let top = reach.min(width - 2);
        f[t + 1] = cur[1] * q[1];
        next[0] = 0.0;
        for j in 1..=top {
            let from_below = if j >= 2 { cur[j - 1] * p[j - 1] } else { 0.0 };
            next[j] = from_below + cur[j + 1] * q[j + 1];
        }
        next[top + 1] = cur[top] * p[top];
        for v in next.iter_mut().skip(top + 2) {
            *v = 0.0;
        }
        std::mem::swap(&mut cur, &mut next);
        let alive: f64 = cur[1..].iter().sum::<f64>() + escaped;
        tail[t + 2] = alive;
    }
    let mut prefix = vec![0.0; n_max + 2];
    for m in 0..=n_max {
        prefix[m + 1] = prefix[m] + f[m];
    }
    Ok(FirstPassageTable {
        k,
        n_max,
        f,
        tail,
        prefix,
    })
}

/// `P_0(X_n = 0)` for `0 <= n <= n_max`, by two independent routes.
#[derive(Debug, Clone)]
pub struct ReturnProbs {
    /// Read off the forward evolution.
    pub direct: Vec<f64>,
    /// Renewal convolution of the return-time law with itself.
    pub renewal: Vec<f64>,
}

pub fn return_probs(spec: &WalkSpec, n_max: usize) -> Result<ReturnProbs> {
    if n_max < 2 {
        return Err(Error::Domain("return_prob_zero needs n_max >= 2".into()));
    }
    let mut direct = Vec::with_capacity(n_max + 1);
    let mut evo = ForwardEvolution::new(spec, 0, n_max)?;
    direct.push(evo.row()[0]);
    while evo.advance() {
        direct.push(evo.row()[0]);
    }
    let fp = first_passage(spec, 0, n_max)?;
    Ok(ReturnProbs {
        direct,
        renewal: renewal_convolution(fp.f(), None),
    })
}

/// `P_0(X_n = 0)` for `0 <= n <= n_max`.
pub fn return_prob_zero(spec: &WalkSpec, n_max: usize) -> Result<Vec<f64>> {
    Ok(return_probs(spec, n_max)?.direct)
}

/// `u_n = sum_j f_{n-j} u_j` with `u_0 = 1` when `base` is `None`, otherwise
/// `sum_j f_{n-j} base_j`.
pub(crate) fn renewal_convolution(f: &[f64], base: Option<&[f64]>) -> Vec<f64> {
    let n_max = f.len() - 1;
    match base {
        None => {
            let mut u = vec![0.0; n_max + 1];
            u[0] = 1.0;
            for n in 1..=n_max {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += f[n - j] * u[j];
                }
                u[n] = acc;
            }
            u
        }
        Some(u) => (0..=n_max).map(|n| (0..=n).map(|j| f[n - j] * u[j]).sum()).collect(),
    }
}

/// `P_q(X_i in (0, h) for all i <= m)`.
pub fn confinement_prob(spec: &WalkSpec, q: usize, h: usize, m: usize) -> Result<f64> {
    if !(0 < q && q < h) {
        return Err(Error::Domain(format!(
            "confinement needs 0 < q < h, got q = {q}, h = {h}"
        )));
    }
    check_rolling("confinement strip", m, h + 1)?;
    let (p, qd) = kernel(spec, h)?;
    let mut cur = vec![0.0; h + 1];
    let mut next = vec![0.0; h + 1];
    cur[q] = 1.0;
    for _ in 0..m {
        for j in 1..h {
            let from_below = if j >= 2 { cur[j - 1] * p[j - 1] } else { 0.0 };
            let from_above = if j + 1 < h { cur[j + 1] * qd[j + 1] } else { 0.0 };
            next[j] = from_below + from_above;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur[1..h].iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_first_step() {
        let g = occupancy(&WalkSpec::ssrw(), 0, 2).unwrap();
        assert_eq!(g.prob(1, 1), 1.0);
        assert_eq!(g.prob(2, 0), 0.5);
        assert_eq!(g.prob(2, 2), 0.5);
    }

    #[test]
    fn rational_first_step_down() {
        let spec = WalkSpec::rational(1.0).unwrap();
        let g = occupancy(&spec, 1, 1).unwrap();
        assert!((g.prob(1, 0) - 2.0 / 3.0).abs() < 1e-15);
        let fp = first_passage(&spec, 0, 4).unwrap();
        assert!((fp.point(2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ssrw_returns() {
        let fp = first_passage(&WalkSpec::ssrw(), 0, 6).unwrap();
        assert_eq!(fp.f()[..=6], [0.0, 0.0, 0.5, 0.0, 0.125, 0.0, 0.0625]);
        assert_eq!(fp.tail()[0], 1.0);
        assert_eq!(fp.tail()[2], 1.0);
        assert_eq!(fp.tail()[3], 0.5);
        let from_one = first_passage(&WalkSpec::ssrw(), 1, 4).unwrap();
        assert_eq!(from_one.point(1), 0.5);
    }

    #[test]
    fn tail_matches_partial_sums() {
        let spec = WalkSpec::rational(0.5).unwrap();
        for k in [0usize, 1, 3, 10] {
            let fp = first_passage(&spec, k, 300).unwrap();
            let mut acc = 0.0;
            for n in 0..=300 {
                assert!((fp.tail()[n] - (1.0 - acc)).abs() < 1e-13);
                acc += fp.f()[n];
            }
            assert!(fp.tail().windows(2).all(|w| w[1] <= w[0] + 1e-14));
        }
    }

    #[test]
    fn start_beyond_horizon() {
        let fp = first_passage(&WalkSpec::ssrw(), 50, 10).unwrap();
        assert!(fp.f().iter().all(|&v| v == 0.0));
        assert_eq!(fp.tail()[11], 1.0);
    }

    #[test]
    fn return_probabilities() {
        let r = return_probs(&WalkSpec::ssrw(), 10).unwrap();
        assert_eq!(r.direct[0], 1.0);
        assert_eq!(r.direct[2], 0.5);
        for n in (1..=10).step_by(2) {
            assert_eq!(r.direct[n], 0.0);
            assert_eq!(r.renewal[n], 0.0);
        }
        for n in 0..=10 {
            assert!((r.direct[n] - r.renewal[n]).abs() < 1e-15);
        }
    }

    #[test]
    fn strip_survival() {
        let spec = WalkSpec::ssrw();
        assert_eq!(confinement_prob(&spec, 1, 2, 1).unwrap(), 0.0);
        assert_eq!(confinement_prob(&spec, 1, 3, 2).unwrap(), 0.25);
        assert_eq!(confinement_prob(&spec, 2, 5, 0).unwrap(), 1.0);
        assert!(confinement_prob(&spec, 0, 5, 1).is_err());
    }

    #[test]
    fn grid_limit() {
        let err = occupancy(&WalkSpec::ssrw(), 0, 1 << 14).unwrap_err();
        match err {
            Error::ResourceLimit { cells, .. } => assert_eq!(cells, (1u64 << 14) * ((1 << 14) + 1) + (1 << 14) + 1),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn csv_rendering() {
        let fp = first_passage(&WalkSpec::ssrw(), 0, 2).unwrap();
        let mut buf = Vec::new();
        fp.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("m,f,tail"));
        assert_eq!(
            text.lines().nth(3),
            Some("2,5.0000000000000000e-1,1.0000000000000000e0")
        );
    }
}
