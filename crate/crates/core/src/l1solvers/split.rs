//! Alternating-direction splitting for `min ‖Vζ‖₁  s.t.  ζ ∈ C`, where `V` has
//! orthonormal columns (or is the identity) and `C` is a residual ball.

use alloc::vec;
use alloc::vec::Vec;

use super::ellipsoid::BallProjector;
use super::SolverOptions;
use crate::matrix::{norm2, DenseMatrix};

pub(crate) enum SplitOutcome<T> {
    Accepted(T, usize),
    Stopped { zeta: Vec<f64>, iterations: usize, converged: bool },
}

fn apply(v: Option<&DenseMatrix>, x: &[f64]) -> Vec<f64> {
    match v {
        Some(m) => m.matvec(x).expect("dimensions fixed at construction"),
        None => x.to_vec(),
    }
}

fn apply_t(v: Option<&DenseMatrix>, x: &[f64]) -> Vec<f64> {
    match v {
        Some(m) => m.tr_matvec(x).expect("dimensions fixed at construction"),
        None => x.to_vec(),
    }
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Runs the splitting iteration; `accept(ζ, w)` is polled periodically and
/// ends the run when it returns a certified candidate.
pub(crate) fn split_l1<T>(
    v: Option<&DenseMatrix>,
    k: usize,
    proj: &BallProjector,
    opts: &SolverOptions,
    mut accept: impl FnMut(&[f64], &[f64]) -> Option<T>,
) -> SplitOutcome<T> {
    let mut zeta = proj.project(&vec![0.0; k]);
    let mut w = apply(v, &zeta);
    let n = w.len();
    let mut u = vec![0.0; n];
    let mut rho = opts.rho;
    let sqrt_n = libm::sqrt(n as f64);
    let tol = 1e-9;
    for it in 1..=opts.max_iter {
        let a: Vec<f64> = w.iter().zip(&u).map(|(wi, ui)| wi - ui).collect();
        zeta = proj.project(&apply_t(v, &a));
        let vz = apply(v, &zeta);
        let w_prev = core::mem::take(&mut w);
        w = vz.iter().zip(&u).map(|(z, ui)| soft(z + ui, 1.0 / rho)).collect();
        for ((ui, z), wi) in u.iter_mut().zip(&vz).zip(&w) {
            *ui += z - wi;
        }
        let r = norm2(&vz.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dw: Vec<f64> = w.iter().zip(&w_prev).map(|(a, b)| a - b).collect();
        let s = rho * norm2(&apply_t(v, &dw));

        let period = if it < 400 { 10 } else { 50 };
        if it % period == 0 {
            if let Some(t) = accept(&zeta, &w) {
                return SplitOutcome::Accepted(t, it);
            }
        }
        let eps_pri = tol * sqrt_n + tol * norm2(&vz).max(norm2(&w));
        let eps_dual = tol * sqrt_n + tol * rho * norm2(&u);
        if r <= eps_pri && s <= eps_dual {
            if let Some(t) = accept(&zeta, &w) {
                return SplitOutcome::Accepted(t, it);
            }
            return SplitOutcome::Stopped { zeta, iterations: it, converged: true };
        }
        if it % 10 == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u.iter_mut().for_each(|x| *x /= 2.0);
            } else if s > 10.0 * r {
                rho /= 2.0;
                u.iter_mut().for_each(|x| *x *= 2.0);
            }
        }
    }
    if let Some(t) = accept(&zeta, &w) {
        return SplitOutcome::Accepted(t, opts.max_iter);
    }
    SplitOutcome::Stopped { zeta, iterations: opts.max_iter, converged: false }
}
