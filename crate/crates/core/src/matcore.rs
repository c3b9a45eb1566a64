//! Dense linear algebra: SVD, numerical rank, kernels, least squares.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U diag(S) Vᵀ` with `k = min(rows, cols)`
/// columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left_vectors: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    /// Number of singular values above `tol · σ_max · max(rows, cols)`.
    pub fn rank(&self, tol: f64) -> usize {
        let thr = self.threshold(tol);
        self.singular_values.iter().filter(|&&s| s > thr).count()
    }

    fn threshold(&self, tol: f64) -> f64 {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let dim = self.left_vectors.rows().max(self.right_vectors.rows()) as f64;
        tol * smax * dim
    }
}

/// One-sided Jacobi on the columns in `a`; accumulates rotations into `v`.
fn hestenes(a: &mut [Vec<f64>], v: &mut [Vec<f64>]) {
    let k = a.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(a, p, q, c, s);
                rotate(v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (xp, xq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let ap = *a;
        let aq = *b;
        *a = c * ap - s * aq;
        *b = s * ap + c * aq;
    }
}

/// Orthonormal basis of the orthogonal complement of the span of `cols`
/// (assumed orthonormal) in `ℝ^n`, via Householder QR.
pub fn orthonormal_complement(n: usize, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = cols.len();
    let mut work: Vec<Vec<f64>> = cols.to_vec();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = &work[j][j..];
        let alpha = norm2(x);
        if alpha == 0.0 {
            reflectors.push(None);
            continue;
        }
        let mut u = x.to_vec();
        let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
        u[0] += sign * alpha;
        let un = norm2(&u);
        for e in u.iter_mut() {
            *e /= un;
        }
        for col in work.iter_mut().skip(j) {
            let proj = 2.0 * dot(&u, &col[j..]);
            for (c, &ui) in col[j..].iter_mut().zip(&u) {
                *c -= proj * ui;
            }
        }
        reflectors.push(Some(u));
    }
    let mut out = Vec::with_capacity(n.saturating_sub(k));
    for j in k..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, r) in reflectors.iter().enumerate().rev() {
            if let Some(u) = r {
                let proj = 2.0 * dot(u, &e[i..]);
                for (c, &ui) in e[i..].iter_mut().zip(u) {
                    *c -= proj * ui;
                }
            }
        }
        out.push(e);
    }
    out
}

/// Normalizes Jacobi output columns into orthonormal singular vectors,
/// completing columns whose singular value is negligible.
fn normalize_side(len: usize, a: &[Vec<f64>], sigma: &[f64]) -> Vec<Vec<f64>> {
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cut = f64::EPSILON * smax * (len.max(a.len()) as f64);
    let mut good: Vec<Vec<f64>> = Vec::new();
    let mut slots: Vec<Option<usize>> = Vec::with_capacity(a.len());
    for (col, &s) in a.iter().zip(sigma) {
        if s > cut && s > 0.0 {
            slots.push(Some(good.len()));
            good.push(col.iter().map(|x| x / s).collect());
        } else {
            slots.push(None);
        }
    }
    let mut filler = orthonormal_complement(len, &good).into_iter();
    slots
        .into_iter()
        .map(|slot| match slot {
            Some(i) => good[i].clone(),
            None => filler.next().unwrap_or_else(|| vec![0.0; len]),
        })
        .collect()
}

/// Thin SVD by one-sided Jacobi.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry".into()));
    }
    let (r, c) = m.shape();
    let tall = r >= c;
    // Columns to orthogonalize: those of M when tall, of Mᵀ when wide.
    let (len, k) = if tall { (r, c) } else { (c, r) };
    let mut a: Vec<Vec<f64>> = if tall {
        (0..c).map(|j| m.column(j)).collect()
    } else {
        (0..r).map(|i| m.row(i).to_vec()).collect()
    };
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    hestenes(&mut a, &mut v);

    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = a.iter().map(|x| norm2(x)).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let a_sorted: Vec<Vec<f64>> = order.iter().map(|&i| a[i].clone()).collect();
    let v_sorted: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();
    let normalized = normalize_side(len, &a_sorted, &sigma);

    let to_matrix = |cols: &[Vec<f64>], rows: usize| {
        DenseMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
    };
    let (u, vm) = if tall {
        (to_matrix(&normalized, r), to_matrix(&v_sorted, c))
    } else {
        (to_matrix(&v_sorted, r), to_matrix(&normalized, c))
    };
    Ok(SvdResult { left_vectors: u, singular_values: sigma, right_vectors: vm })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    Ok(())
}

/// Numerical rank: singular values above `tol · σ_max · max(rows, cols)`.
pub fn rank(m: &DenseMatrix, tol: f64) -> Result<usize> {
    check_tol(tol)?;
    Ok(svd(m)?.rank(tol))
}

/// Smallest singular value above the rank threshold.
pub fn smallest_positive_singular(m: &DenseMatrix, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let s = svd(m)?;
    let thr = s.threshold(tol);
    s.singular_values
        .iter()
        .copied()
        .rfind(|&x| x > thr)
        .ok_or(Error::NoPositiveSingularValue)
}

/// Orthonormal kernel basis as a `cols × nullity` matrix.
pub fn nullspace_basis(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    check_tol(tol)?;
    let s = svd(m)?;
    let rk = s.rank(tol);
    let c = m.cols();
    let range: Vec<Vec<f64>> = (0..rk).map(|j| s.right_vectors.column(j)).collect();
    let null = orthonormal_complement(c, &range);
    Ok(DenseMatrix::from_fn(c, null.len(), |i, j| null[j][i]))
}

/// Splits `h = a + b` with `a ∈ ker M` and `b ⊥ ker M`.
pub fn decompose_along_kernel(m: &DenseMatrix, h: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if h.len() != m.cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "vector of length {} for a matrix with {} columns",
            h.len(),
            m.cols()
        )));
    }
    let n = nullspace_basis(m, DEFAULT_TOL)?;
    let a = project_onto_columns(&n, h);
    let b = h.iter().zip(&a).map(|(x, y)| x - y).collect();
    Ok((a, b))
}

/// `N Nᵀ h` for `N` with orthonormal columns.
pub fn project_onto_columns(n: &DenseMatrix, h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n.rows()];
    for j in 0..n.cols() {
        let col = n.column(j);
        let c = dot(&col, h);
        for (o, x) in out.iter_mut().zip(&col) {
            *o += c * x;
        }
    }
    out
}

/// Minimum-norm least-squares solution through the pseudo-inverse.
pub fn least_squares(m: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != m.rows() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "right-hand side of length {} for {} rows",
            y.len(),
            m.rows()
        )));
    }
    let s = svd(m)?;
    Ok(pinv_apply(&s, y, DEFAULT_TOL))
}

/// `V Σ⁺ Uᵀ y` restricted to singular values above the rank threshold.
pub fn pinv_apply(s: &SvdResult, y: &[f64], tol: f64) -> Vec<f64> {
    let rk = s.rank(tol);
    let mut x = vec![0.0; s.right_vectors.rows()];
    for j in 0..rk {
        let c = dot(&s.left_vectors.column(j), y) / s.singular_values[j];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += c * s.right_vectors.get(i, j);
        }
    }
    x
}

// ── LU with partial pivoting ──

/// LU factorization `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `a`; `None` when a pivot falls below `pivot_tol` times the largest entry.
    pub fn factor(a: &DenseMatrix, pivot_tol: f64) -> Option<Self> {
        let n = a.rows();
        if n != a.cols() {
            return None;
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= pivot_tol * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = b, Lᵀ z = w, x = Pᵀ z.
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

/// Solves the square system `A X = B` column by column.
pub fn solve_square(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = Lu::factor(a, 1e-14)
        .ok_or_else(|| Error::InvalidInput("singular system".into()))?;
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        out.set_column(j, &lu.solve(&b.column(j)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn svd_of_identity_and_diag() {
        let s = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
        let s = svd(&m(&[&[3.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 0.0]);
        let u = &s.left_vectors;
        assert!((dot(&u.column(0), &u.column(1))).abs() < 1e-15);
        assert!((norm2(&u.column(1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&DenseMatrix::identity(4), DEFAULT_TOL).unwrap(), 4);
        assert_eq!(rank(&DenseMatrix::zeros(2, 3), DEFAULT_TOL).unwrap(), 0);
        let e = m(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(rank(&e, DEFAULT_TOL).unwrap(), 2);
        assert!(rank(&e, 0.0).is_err());
    }

    #[test]
    fn smallest_positive_examples() {
        assert_eq!(smallest_positive_singular(&DenseMatrix::identity(3), DEFAULT_TOL).unwrap(), 1.0);
        let d = DenseMatrix::diag(&[2.0, 1e-18]);
        assert_eq!(smallest_positive_singular(&d, DEFAULT_TOL).unwrap(), 2.0);
        let ii = DenseMatrix::identity(2).hstack(&DenseMatrix::identity(2)).unwrap();
        let v = smallest_positive_singular(&ii, DEFAULT_TOL).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(
            smallest_positive_singular(&DenseMatrix::zeros(2, 2), DEFAULT_TOL),
            Err(Error::NoPositiveSingularValue)
        );
    }

    #[test]
    fn nullspace_examples() {
        let n = nullspace_basis(&m(&[&[2.0, 1.0], &[1.0, 3.0]]), DEFAULT_TOL).unwrap();
        assert_eq!(n.cols(), 0);
        let ones = m(&[&[1.0, 1.0, 1.0]]);
        let n = nullspace_basis(&ones, DEFAULT_TOL).unwrap();
        assert_eq!(n.shape(), (3, 2));
        assert!(ones.matmul(&n).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn decompose_example() {
        let (a, b) = decompose_along_kernel(&m(&[&[1.0, 1.0]]), &[1.0, 0.0]).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-15 && (a[1] + 0.5).abs() < 1e-15);
        assert!((b[0] - 0.5).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
        let (a, b) = decompose_along_kernel(&DenseMatrix::identity(2), &[1.0, 2.0]).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
        assert_eq!(b, vec![1.0, 2.0]);
    }

    #[test]
    fn least_squares_min_norm() {
        let x = least_squares(&m(&[&[1.0, 1.0]]), &[2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let x = least_squares(&DenseMatrix::identity(3), &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn lu_solves_both_orientations() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let lu = Lu::factor(&a, 1e-14).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.matvec(&x).unwrap();
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-14));
        let x = lu.solve_transpose(&b);
        let r = a.tr_matvec(&x).unwrap();
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-14));
    }
}
