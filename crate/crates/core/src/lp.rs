//! Two-phase dense tableau simplex for `min cᵀx  s.t.  A x = b, x ≥ 0`.
//!
//! The tableau is periodically rebuilt from the original data through an LU
//! factorization of the basis, and the reported primal point and duals are
//! always recomputed that way, so accumulated pivoting error does not leak
//! into certificates.

use alloc::vec;
use alloc::vec::Vec;

use crate::matcore::Lu;
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_iter: usize,
    /// Reduced-cost threshold for optimality.
    pub rc_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Phase-one infeasibility tolerance, relative to `1 + ‖b‖₁`.
    pub feas_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_iter: 100_000, rc_tol: 1e-11, pivot_tol: 1e-9, feas_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal point (last basic solution when not optimal).
    pub x: Vec<f64>,
    /// Equality-constraint multipliers `y` with `Aᵀy ≤ c` at optimality.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Direction of unbounded descent, when `status = Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

const REINVERT_EVERY: usize = 40;
const DEGENERATE_STREAK: usize = 30;

struct Tableau<'a> {
    a: &'a DenseMatrix,
    b: Vec<f64>,
    sign: Vec<f64>,
    n: usize,
    width: usize,
    rows: Vec<usize>,
    t: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
}

impl<'a> Tableau<'a> {
    fn new(a: &'a DenseMatrix, b: &[f64]) -> Self {
        let (m, n) = a.shape();
        let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = b.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let width = n + m + 1;
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            for j in 0..n {
                t[i * width + j] = sign[i] * a.get(i, j);
            }
            t[i * width + n + i] = 1.0;
            t[i * width + width - 1] = b[i];
        }
        Self {
            a,
            b,
            sign,
            n,
            width,
            rows: (0..m).collect(),
            t,
            d: vec![0.0; width],
            basis: (n..n + m).collect(),
        }
    }

    /// Column `j` of the row-flipped constraint matrix, restricted to an original row.
    #[inline]
    fn orig(&self, row: usize, j: usize) -> f64 {
        if j < self.n {
            self.sign[row] * self.a.get(row, j)
        } else if j - self.n == row {
            1.0
        } else {
            0.0
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.t[r * w + j];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m() {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                for (x, &pv) in self.t[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                    *x -= f * pv;
                }
                self.t[i * w + j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (x, &pv) in self.d.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
            self.d[j] = 0.0;
        }
        self.basis[r] = j;
    }

    fn basis_lu(&self) -> Option<Lu> {
        let m = self.m();
        let bm = DenseMatrix::from_fn(m, m, |i, k| self.orig(self.rows[i], self.basis[k]));
        Lu::factor(&bm, 1e-13)
    }

    /// Rebuilds the tableau and reduced costs from the original data.
    fn reinvert(&mut self, cost: &dyn Fn(usize) -> f64) -> bool {
        let Some(lu) = self.basis_lu() else {
            return false;
        };
        let m = self.m();
        let w = self.width;
        let cols = w - 1;
        let mut col = vec![0.0; m];
        for j in 0..cols {
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.orig(self.rows[i], j);
            }
            let sol = lu.solve(&col);
            for i in 0..m {
                self.t[i * w + j] = sol[i];
            }
        }
        let rb: Vec<f64> = self.rows.iter().map(|&r| self.b[r]).collect();
        let xb = lu.solve(&rb);
        for i in 0..m {
            self.t[i * w + w - 1] = xb[i];
        }
        for i in 0..m {
            for (k, &bj) in self.basis.iter().enumerate() {
                self.t[i * w + bj] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let cb: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
        let y = lu.solve_transpose(&cb);
        for j in 0..cols {
            let mut s = cost(j);
            for (i, &yi) in y.iter().enumerate() {
                s -= yi * self.orig(self.rows[i], j);
            }
            self.d[j] = s;
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }
        self.d[w - 1] = -cb.iter().zip(&xb).map(|(c, x)| c * x).sum::<f64>();
        true
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.rows.remove(r);
        self.basis.remove(r);
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
    IterationLimit,
}

fn run_phase(
    tab: &mut Tableau<'_>,
    cost: &dyn Fn(usize) -> f64,
    allowed: &dyn Fn(usize) -> bool,
    opts: &LpOptions,
    iters: &mut usize,
) -> PhaseEnd {
    let w = tab.width;
    let mut bland = false;
    let mut streak = 0usize;
    let mut since_reinvert = 0usize;
    loop {
        if since_reinvert >= REINVERT_EVERY {
            tab.reinvert(cost);
            since_reinvert = 0;
        }
        let mut enter = None;
        let mut best = -opts.rc_tol;
        for j in 0..w - 1 {
            if !allowed(j) {
                continue;
            }
            let dj = tab.d[j];
            if dj < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = dj;
            }
        }
        let Some(j) = enter else {
            // Confirm optimality on freshly recomputed reduced costs.
            if since_reinvert > 0 && tab.reinvert(cost) {
                since_reinvert = 0;
                let still = (0..w - 1).any(|k| allowed(k) && tab.d[k] < -opts.rc_tol);
                if still {
                    continue;
                }
            }
            return PhaseEnd::Optimal;
        };
        if *iters >= opts.max_iter {
            return PhaseEnd::IterationLimit;
        }
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..tab.m() {
            let tij = tab.t[i * w + j];
            if tij <= opts.pivot_tol {
                continue;
            }
            let ratio = tab.rhs(i).max(0.0) / tij;
            match leave {
                None => {
                    leave = Some(i);
                    best_ratio = ratio;
                }
                Some(l) => {
                    let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio);
                    let better = if tie {
                        if bland {
                            tab.basis[i] < tab.basis[l]
                        } else {
                            tij > tab.t[l * w + j]
                        }
                    } else {
                        ratio < best_ratio
                    };
                    if better {
                        leave = Some(i);
                        if !tie {
                            best_ratio = ratio;
                        }
                    }
                }
            }
        }
        let Some(r) = leave else {
            return PhaseEnd::Unbounded(j);
        };
        if best_ratio <= 1e-12 {
            streak += 1;
            if streak > DEGENERATE_STREAK {
                bland = true;
            }
        } else {
            streak = 0;
            bland = false;
        }
        tab.pivot(r, j);
        *iters += 1;
        since_reinvert += 1;
    }
}

/// Solves `min cᵀx s.t. A x = b, x ≥ 0`.
pub fn solve_standard(a: &DenseMatrix, b: &[f64], c: &[f64], opts: &LpOptions) -> LpResult {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(c.len(), n, "cost length");
    let mut tab = Tableau::new(a, b);
    let mut iters = 0usize;
    let w = tab.width;

    // Phase one: minimize the sum of artificials.
    let cost1 = |j: usize| if j >= n { 1.0 } else { 0.0 };
    for j in 0..w {
        let s: f64 = (0..m).map(|i| tab.t[i * w + j]).sum();
        tab.d[j] = if j < n { -s } else if j < w - 1 { 0.0 } else { -s };
    }
    let end = run_phase(&mut tab, &cost1, &|_| true, opts, &mut iters);
    if let PhaseEnd::IterationLimit = end {
        return finish(&tab, c, LpStatus::IterationLimit, None, iters);
    }
    let infeas: f64 = (0..tab.m())
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.rhs(i).abs())
        .sum();
    let bscale = 1.0 + b.iter().map(|v| v.abs()).sum::<f64>();
    if infeas > opts.feas_tol * bscale {
        return LpResult {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            duals: vec![0.0; m],
            objective: f64::NAN,
            ray: None,
            iterations: iters,
        };
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < tab.m() {
        if tab.basis[r] < n {
            r += 1;
            continue;
        }
        let mut pick = None;
        let mut best = 1e-7;
        for j in 0..n {
            let v = tab.t[r * w + j].abs();
            if v > best && !tab.basis.contains(&j) {
                best = v;
                pick = Some(j);
            }
        }
        match pick {
            Some(j) => {
                tab.pivot(r, j);
                r += 1;
            }
            None => tab.drop_row(r),
        }
    }

    // Phase two.
    let cost2 = |j: usize| if j < n { c[j] } else { 0.0 };
    if !tab.reinvert(&cost2) {
        return finish(&tab, c, LpStatus::IterationLimit, None, iters);
    }
    let end = run_phase(&mut tab, &cost2, &|j| j < n, opts, &mut iters);
    match end {
        PhaseEnd::Optimal => finish(&tab, c, LpStatus::Optimal, None, iters),
        PhaseEnd::IterationLimit => finish(&tab, c, LpStatus::IterationLimit, None, iters),
        PhaseEnd::Unbounded(j) => {
            let mut ray = vec![0.0; n];
            ray[j] = 1.0;
            for i in 0..tab.m() {
                let bi = tab.basis[i];
                if bi < n {
                    ray[bi] = -tab.t[i * w + j];
                }
            }
            finish(&tab, c, LpStatus::Unbounded, Some(ray), iters)
        }
    }
}

fn finish(
    tab: &Tableau<'_>,
    c: &[f64],
    status: LpStatus,
    ray: Option<Vec<f64>>,
    iterations: usize,
) -> LpResult {
    let n = tab.n;
    let m_orig = tab.sign.len();
    let mut x = vec![0.0; n];
    let mut duals = vec![0.0; m_orig];
    let cost = |j: usize| if j < n { c[j] } else { 0.0 };
    if let Some(lu) = tab.basis_lu() {
        let rb: Vec<f64> = tab.rows.iter().map(|&r| tab.b[r]).collect();
        let xb = lu.solve(&rb);
        for (i, &bj) in tab.basis.iter().enumerate() {
            if bj < n {
                x[bj] = xb[i].max(0.0);
            }
        }
        let cb: Vec<f64> = tab.basis.iter().map(|&j| cost(j)).collect();
        let y = lu.solve_transpose(&cb);
        for (i, &r) in tab.rows.iter().enumerate() {
            duals[r] = y[i] * tab.sign[r];
        }
    } else {
        for (i, &bj) in tab.basis.iter().enumerate() {
            if bj < n {
                x[bj] = tab.rhs(i).max(0.0);
            }
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    LpResult { status, x, duals, objective, ray, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn small_lp() {
        // min -x1 - 2x2 s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6
        let a = mat(&[&[1.0, 1.0, 1.0, 0.0], &[1.0, 3.0, 0.0, 1.0]]);
        let r = solve_standard(&a, &[4.0, 6.0], &[-1.0, -2.0, 0.0, 0.0], &LpOptions::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 5.0).abs() < 1e-12);
        assert!((r.x[0] - 3.0).abs() < 1e-12 && (r.x[1] - 1.0).abs() < 1e-12);
        let dual_obj = 4.0 * r.duals[0] + 6.0 * r.duals[1];
        assert!((dual_obj + 5.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = mat(&[&[1.0, 1.0]]);
        let r = solve_standard(&a, &[-1.0], &[1.0, 1.0], &LpOptions::default());
        assert_eq!(r.status, LpStatus::Infeasible);
        let a = mat(&[&[1.0, -1.0]]);
        let r = solve_standard(&a, &[1.0], &[0.0, -1.0], &LpOptions::default());
        assert_eq!(r.status, LpStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(ray.iter().all(|&v| v >= 0.0));
        assert!(ray[0] - ray[1] == 0.0);
    }

    #[test]
    fn redundant_rows() {
        let a = mat(&[&[1.0, 1.0, 0.0], &[2.0, 2.0, 0.0], &[0.0, 1.0, 1.0]]);
        let r = solve_standard(&a, &[1.0, 2.0, 1.0], &[1.0, 2.0, 0.5], &LpOptions::default());
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 1.5).abs() < 1e-12, "{}", r.objective);
    }
}
