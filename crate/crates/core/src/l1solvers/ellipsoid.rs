//! Exact Euclidean projection onto `{x : ‖Bx − y‖₂ ≤ ε}` and linear
//! minimization over the same set.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::matcore::{self, DEFAULT_TOL};
use crate::matrix::{dot, norm2, DenseMatrix};

/// Projector onto the residual ball of a fixed `(B, y, ε)`.
#[derive(Debug, Clone)]
pub struct BallProjector {
    /// Right singular vectors spanning the row space of `B`.
    v: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    /// `Uᵀ y` on the range.
    beta: Vec<f64>,
    /// Squared slack `ε² − ‖y⊥‖²` left for the in-range residual.
    tau_sq: f64,
}

impl BallProjector {
    /// `None` when the set is empty (the part of `y` outside the range of `B`
    /// already exceeds `ε`).
    pub fn new(b: &DenseMatrix, y: &[f64], eps: f64) -> Result<Option<Self>> {
        let s = matcore::svd(b)?;
        let rk = s.rank(DEFAULT_TOL);
        let ucols: Vec<Vec<f64>> = (0..rk).map(|j| s.left_vectors.column(j)).collect();
        let beta: Vec<f64> = ucols.iter().map(|u| dot(u, y)).collect();
        let mut perp = y.to_vec();
        for (u, bj) in ucols.iter().zip(&beta) {
            for (p, ui) in perp.iter_mut().zip(u) {
                *p -= bj * ui;
            }
        }
        let perp_sq = dot(&perp, &perp);
        let tau_sq = eps * eps - perp_sq;
        if tau_sq < 0.0 || (tau_sq == 0.0 && eps > 0.0) {
            return Ok(None);
        }
        Ok(Some(Self {
            v: (0..rk).map(|j| s.right_vectors.column(j)).collect(),
            sigma: s.singular_values[..rk].to_vec(),
            beta,
            tau_sq,
        }))
    }

    /// Nearest point of the set to `p`.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let alpha: Vec<f64> = self.v.iter().map(|v| dot(v, p)).collect();
        let e: Vec<f64> = alpha
            .iter()
            .zip(&self.sigma)
            .zip(&self.beta)
            .map(|((a, s), b)| s * a - b)
            .collect();
        let q0: f64 = e.iter().map(|x| x * x).sum();
        if q0 <= self.tau_sq {
            return p.to_vec();
        }
        let tau = libm::sqrt(self.tau_sq);
        let q = |mu: f64| -> (f64, f64) {
            let mut val = 0.0;
            let mut der = 0.0;
            for (ei, si) in e.iter().zip(&self.sigma) {
                let den = 1.0 + mu * si * si;
                val += ei * ei / (den * den);
                der += -2.0 * ei * ei * si * si / (den * den * den);
            }
            (val, der)
        };
        // Newton on 1/√q(μ) − 1/τ, which is concave and increasing in μ, so
        // iterates from μ = 0 approach the root monotonically from the left.
        let mut mu = 0.0f64;
        for _ in 0..200 {
            let (val, der) = q(mu);
            let sq = libm::sqrt(val);
            if (sq - tau).abs() <= 1e-15 * tau.max(1e-300) || val <= self.tau_sq {
                break;
            }
            let chi = 1.0 / sq - 1.0 / tau;
            let dchi = -0.5 * der / (val * sq);
            if !(dchi > 0.0) {
                break;
            }
            let step = -chi / dchi;
            if !(step > 0.0) || step <= 1e-17 * mu {
                break;
            }
            mu += step;
        }
        let mut out = p.to_vec();
        for (j, v) in self.v.iter().enumerate() {
            let s = self.sigma[j];
            let a_new = (alpha[j] + mu * s * self.beta[j]) / (1.0 + mu * s * s);
            let delta = a_new - alpha[j];
            for (o, vi) in out.iter_mut().zip(v) {
                *o += delta * vi;
            }
        }
        out
    }
}

/// `argmin cᵀη  s.t. ‖Bη − y‖₂ ≤ ε` for `B` with full column rank.
/// `None` when `B` is rank deficient or the set is empty.
pub fn min_linear_over_ellipsoid(
    b: &DenseMatrix,
    c: &[f64],
    y: &[f64],
    eps: f64,
) -> Result<Option<Vec<f64>>> {
    let p = b.cols();
    let s = matcore::svd(b)?;
    if s.rank(DEFAULT_TOL) < p {
        return Ok(None);
    }
    let eta_ls = matcore::pinv_apply(&s, y, DEFAULT_TOL);
    let fit = b.matvec(&eta_ls)?;
    let perp_sq: f64 = fit.iter().zip(y).map(|(f, yi)| (f - yi) * (f - yi)).sum();
    let tau_sq = eps * eps - perp_sq;
    if tau_sq < 0.0 {
        return Ok(None);
    }
    // w = Σ⁻¹ Vᵀ c
    let w: Vec<f64> = (0..p)
        .map(|j| dot(&s.right_vectors.column(j), c) / s.singular_values[j])
        .collect();
    let wn = norm2(&w);
    if wn == 0.0 {
        return Ok(Some(eta_ls));
    }
    let t = libm::sqrt(tau_sq) / wn;
    let mut eta = eta_ls;
    let mut shift = vec![0.0; p];
    for j in 0..p {
        let coef = w[j] / s.singular_values[j];
        for (i, sh) in shift.iter_mut().enumerate() {
            *sh += coef * s.right_vectors.get(i, j);
        }
    }
    for (e, sh) in eta.iter_mut().zip(&shift) {
        *e -= t * sh;
    }
    Ok(Some(eta))
}
