//! Frames (spanning dictionaries), their measurements and the experiment ensembles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::combin::{binomial, check_budget, Combinations};
use crate::error::{Error, Result};
use crate::matcore::{self, Lu, DEFAULT_TOL};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::rng::{self, SeededRng};

/// Default cap on the number of `d`-subsets inspected by [`is_full_spark`].
pub const FULL_SPARK_BUDGET: u128 = 10_000_000;

/// A `d × n` matrix whose columns span `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    matrix: DenseMatrix,
    tol: f64,
}

impl Frame {
    pub fn new(matrix: DenseMatrix, tol: f64) -> Result<Self> {
        let (d, n) = matrix.shape();
        if d == 0 || n < d {
            return Err(Error::InvalidInput(format!(
                "a frame needs n >= d >= 1, got {d}x{n}"
            )));
        }
        let r = matcore::rank(&matrix, tol)?;
        if r != d {
            return Err(Error::InvalidInput(format!(
                "columns do not span R^{d} (rank {r})"
            )));
        }
        Ok(Self { matrix, tol })
    }

    /// Frame with the default rank tolerance.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        Self::new(matrix, DEFAULT_TOL)
    }

    #[inline]
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    #[inline]
    pub fn tol(&self) -> f64 {
        self.tol
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    /// Frame with column `j` repeated at the end.
    pub fn with_duplicate_column(&self, j: usize) -> Result<Self> {
        let col = self.matrix.column(j);
        Ok(Self { matrix: self.matrix.with_column(&col)?, tol: self.tol })
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

/// Result of a spark computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spark {
    Finite(usize),
    /// No subset of at most `cap` columns is dependent.
    AboveCap,
    /// The columns are linearly independent.
    Infinite,
}

impl fmt::Display for Spark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spark::Finite(k) => write!(f, "{k}"),
            Spark::AboveCap => write!(f, "above_cap"),
            Spark::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub d: usize,
    pub n: usize,
    pub coherence: f64,
    pub lower_bound_a: f64,
    pub upper_bound_b: f64,
    pub spark: Spark,
    pub full_spark: bool,
    pub nu_d: f64,
}

/// Largest absolute inner product between distinct normalized columns.
pub fn coherence(frame: &Frame) -> Result<f64> {
    coherence_of(frame.matrix())
}

pub(crate) fn coherence_of(m: &DenseMatrix) -> Result<f64> {
    let nm = m.normalized_columns()?;
    let cols: Vec<Vec<f64>> = (0..nm.cols()).map(|j| nm.column(j)).collect();
    let mut mu: f64 = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            mu = mu.max(dot(&cols[i], &cols[j]).abs());
        }
    }
    Ok(mu.min(1.0))
}

/// `(σ_min², σ_max²)`.
pub fn frame_bounds(frame: &Frame) -> Result<(f64, f64)> {
    let s = matcore::svd(frame.matrix())?;
    let d = frame.d();
    let smax = s.singular_values[0];
    let smin = s.singular_values[d - 1];
    Ok((smin * smin, smax * smax))
}

/// Smallest number of linearly dependent columns, searched up to `cap`.
///
/// A depth-first search extends independent prefixes by Gram–Schmidt; each
/// candidate dependency is confirmed by the SVD rank test at the frame tolerance.
pub fn spark(frame: &Frame, cap: usize) -> Result<Spark> {
    let (d, n) = (frame.d(), frame.n());
    if cap > d + 1 {
        return Err(Error::InvalidInput(format!("cap {cap} exceeds d+1 = {}", d + 1)));
    }
    if n == d {
        return Ok(Spark::Infinite);
    }
    let m = frame.matrix();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut best = d + 1;
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    spark_dfs(m, &cols, frame.tol(), 0, &mut chosen, &mut basis, &mut best);
    Ok(if best <= cap { Spark::Finite(best) } else { Spark::AboveCap })
}

fn spark_dfs(
    m: &DenseMatrix,
    cols: &[Vec<f64>],
    tol: f64,
    start: usize,
    chosen: &mut Vec<usize>,
    basis: &mut Vec<Vec<f64>>,
    best: &mut usize,
) {
    // Extending further only helps if the resulting set beats the current best.
    if chosen.len() + 1 >= *best {
        return;
    }
    for j in start..cols.len() {
        let col = &cols[j];
        let cn = norm2(col);
        let mut r = col.clone();
        for _ in 0..2 {
            for q in basis.iter() {
                let c = dot(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let rn = norm2(&r);
        if rn <= 1e-8 * cn.max(f64::MIN_POSITIVE) {
            chosen.push(j);
            let sub = m.select_columns(chosen);
            let dependent = matcore::rank(&sub, tol).map_or(true, |rk| rk < chosen.len());
            chosen.pop();
            if dependent {
                *best = chosen.len() + 1;
                if chosen.len() + 1 >= *best {
                    return;
                }
                continue;
            }
        }
        if rn == 0.0 {
            continue;
        }
        chosen.push(j);
        basis.push(r.iter().map(|x| x / rn).collect());
        spark_dfs(m, cols, tol, j + 1, chosen, basis, best);
        basis.pop();
        chosen.pop();
        if chosen.len() + 1 >= *best {
            return;
        }
    }
}

fn square_is_singular(sub: &DenseMatrix, tol: f64) -> bool {
    if Lu::factor(sub, 1e-8).is_some() {
        return false;
    }
    matcore::rank(sub, tol).map_or(true, |r| r < sub.cols())
}

/// Whether every `d` columns are linearly independent.
///
/// A square frame counts as full spark: its only `d`-subset is the whole basis.
pub fn is_full_spark(frame: &Frame) -> Result<bool> {
    is_full_spark_with_budget(frame, FULL_SPARK_BUDGET)
}

pub fn is_full_spark_with_budget(frame: &Frame, budget: u128) -> Result<bool> {
    let (d, n) = (frame.d(), frame.n());
    if n == d {
        return Ok(true);
    }
    check_budget(binomial(n, d), budget)?;
    let m = frame.matrix();
    let mut r = rng::rng_from_seed(0x5eed_f00d);
    for _ in 0..32 {
        let mut idx = rng::distinct_indices(&mut r, n, d);
        idx.sort_unstable();
        if square_is_singular(&m.select_columns(&idx), frame.tol()) {
            return Ok(false);
        }
    }
    for idx in Combinations::new(n, d) {
        if square_is_singular(&m.select_columns(&idx), frame.tol()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All frame statistics at once.
pub fn frame_stats(frame: &Frame) -> Result<FrameStats> {
    let (a, b) = frame_bounds(frame)?;
    let sp = spark(frame, frame.d() + 1)?;
    let full = match sp {
        Spark::Infinite => true,
        Spark::Finite(k) => k == frame.d() + 1,
        Spark::AboveCap => false,
    };
    Ok(FrameStats {
        d: frame.d(),
        n: frame.n(),
        coherence: coherence(frame)?,
        lower_bound_a: a,
        upper_bound_b: b,
        spark: sp,
        full_spark: full,
        nu_d: matcore::smallest_positive_singular(frame.matrix(), frame.tol())?,
    })
}

/// `(D Dᵀ)⁻¹ D`.
pub fn canonical_dual(frame: &Frame) -> Result<DenseMatrix> {
    let d = frame.matrix();
    let g = d.matmul(&d.transpose())?;
    matcore::solve_square(&g, d)
}

/// Orthonormal DCT-II matrix.
pub fn build_dct(d: usize) -> Result<DenseMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("DCT size must be positive".into()));
    }
    let df = d as f64;
    Ok(DenseMatrix::from_fn(d, d, |k, j| {
        let ck = if k == 0 { libm::sqrt(1.0 / df) } else { libm::sqrt(2.0 / df) };
        ck * libm::cos(core::f64::consts::PI * (k as f64) * (2.0 * j as f64 + 1.0) / (2.0 * df))
    }))
}

/// `[F, G]` with `F` the DCT and each column of `G` a normalized random
/// combination of three distinct DCT columns plus `perturbation` times a
/// Gaussian vector. The random draws do not depend on `perturbation`, so
/// frames sharing a seed differ only in the perturbation term.
pub fn build_coherent_frame(d: usize, perturbation: f64, seed: u64) -> Result<Frame> {
    if d < 4 {
        return Err(Error::InvalidInput(format!("coherent frame needs d >= 4, got {d}")));
    }
    if !(perturbation >= 0.0 && perturbation.is_finite()) {
        return Err(Error::InvalidInput("perturbation must be finite and nonnegative".into()));
    }
    let f = build_dct(d)?;
    let fcols: Vec<Vec<f64>> = (0..d).map(|j| f.column(j)).collect();
    let mut r = rng::rng_from_seed(seed);
    let mut g_cols = Vec::with_capacity(d);
    while g_cols.len() < d {
        let col = coherent_column(&mut r, &fcols, perturbation);
        let nrm = norm2(&col);
        if nrm > 0.0 {
            g_cols.push(col.into_iter().map(|x| x / nrm).collect::<Vec<f64>>());
        }
    }
    let mut all = fcols;
    all.extend(g_cols);
    Frame::from_matrix(DenseMatrix::from_columns(&all)?)
}

fn coherent_column(r: &mut SeededRng, fcols: &[Vec<f64>], eps: f64) -> Vec<f64> {
    let d = fcols.len();
    let k = rng::distinct_indices(r, d, 3);
    let a = rng::normal_vec(r, 3);
    let g = rng::normal_vec(r, d);
    let mut col = vec![0.0; d];
    for (ki, ai) in k.iter().zip(&a) {
        for (c, f) in col.iter_mut().zip(&fcols[*ki]) {
            *c += ai * f;
        }
    }
    for (c, gi) in col.iter_mut().zip(&g) {
        *c += eps * gi;
    }
    col
}

/// `[I_d, w]` with `w = (1+eps, eps, …, eps)`.
pub fn build_example_frame(d: usize, eps: f64) -> Result<Frame> {
    if d < 2 || !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "example frame needs d >= 2 and eps > 0, got d = {d}, eps = {eps}"
        )));
    }
    let m = DenseMatrix::from_fn(d, d + 1, |i, j| {
        if j < d {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else if i == 0 {
            1.0 + eps
        } else {
            eps
        }
    });
    Frame::from_matrix(m)
}

/// I.i.d. `N(0, 1/m)` entries.
pub fn gaussian_matrix(m: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidInput("gaussian matrix needs m, d >= 1".into()));
    }
    let mut r = rng::rng_from_seed(seed);
    let s = 1.0 / libm::sqrt(m as f64);
    let data = (0..m * d).map(|_| rng::normal(&mut r) * s).collect();
    DenseMatrix::new(m, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(rows: &[&[f64]]) -> Frame {
        Frame::from_matrix(
            DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn frame_rejects_non_spanning() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(Frame::from_matrix(m).is_err());
        assert!(Frame::from_matrix(DenseMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(coherence(&Frame::from_matrix(DenseMatrix::identity(3)).unwrap()).unwrap(), 0.0);
        assert_eq!(coherence(&frame(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])).unwrap(), 1.0);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mu = coherence(&frame(&[&[1.0, 0.0, h], &[0.0, 1.0, h]])).unwrap();
        assert!((mu - h).abs() < 1e-15);
        let z = frame(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(coherence(&z), Err(Error::DegenerateColumn { index: 2 }));
    }

    #[test]
    fn bounds_examples() {
        let ii = frame(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]]);
        let (a, b) = frame_bounds(&ii).unwrap();
        assert!((a - 2.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spark_examples() {
        let dup = frame(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(spark(&dup, 3).unwrap(), Spark::Finite(2));
        assert!(!is_full_spark(&dup).unwrap());
        let ex = build_example_frame(5, 0.1).unwrap();
        assert_eq!(spark(&ex, 6).unwrap(), Spark::Finite(6));
        assert!(is_full_spark(&ex).unwrap());
        let id = Frame::from_matrix(DenseMatrix::identity(3)).unwrap();
        assert_eq!(spark(&id, 4).unwrap(), Spark::Infinite);
        assert_eq!(spark(&ex, 3).unwrap(), Spark::AboveCap);
    }

    #[test]
    fn dct_examples() {
        assert_eq!(build_dct(1).unwrap().as_slice(), &[1.0]);
        let f = build_dct(2).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        for (v, e) in f.as_slice().iter().zip([h, h, h, -h]) {
            assert!((v - e).abs() < 1e-15);
        }
        let f = build_dct(9).unwrap();
        let g = f.transpose().matmul(&f).unwrap();
        assert!(g.sub(&DenseMatrix::identity(9)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn coherent_frame_is_low_spark_without_perturbation() {
        let f = build_coherent_frame(8, 0.0, 11).unwrap();
        assert_eq!(f.n(), 16);
        for j in 0..16 {
            assert!((f.matrix().column_norm(j) - 1.0).abs() < 1e-12);
        }
        match spark(&f, 9).unwrap() {
            Spark::Finite(k) => assert!(k <= 4),
            other => panic!("unexpected spark {other:?}"),
        }
        let p = build_coherent_frame(8, 1e-3, 11).unwrap();
        assert!(is_full_spark(&p).unwrap());
    }

    #[test]
    fn example_frame_layout() {
        let f = build_example_frame(3, 0.1).unwrap();
        assert_eq!(f.matrix().column(3), vec![1.1, 0.1, 0.1]);
        assert!(build_example_frame(1, 0.1).is_err());
        assert!(build_example_frame(3, 0.0).is_err());
    }

    #[test]
    fn gaussian_is_deterministic() {
        let a = gaussian_matrix(4, 6, 9).unwrap();
        assert_eq!(a, gaussian_matrix(4, 6, 9).unwrap());
        assert_ne!(a, gaussian_matrix(4, 6, 10).unwrap());
    }

    #[test]
    fn canonical_dual_of_parseval_is_itself() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let p = frame(&[&[h, 0.0, h, 0.0], &[0.0, h, 0.0, h]]);
        let f = canonical_dual(&p).unwrap();
        assert!(f.sub(p.matrix()).unwrap().max_abs() < 1e-14);
    }
}
