//! ℓ1 decoders: basis pursuit (exact and noisy), ℓ1-synthesis, ℓ1-analysis,
//! the ℓ0 oracle, and the sparse-dual construction.

mod ellipsoid;
mod split;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use ellipsoid::{min_linear_over_ellipsoid, BallProjector};
use split::{split_l1, SplitOutcome};

use crate::combin::{binomial, check_budget, Combinations};
use crate::error::{Error, Result};
use crate::frames::{canonical_dual, Frame};
use crate::lp::{self, LpOptions, LpStatus};
use crate::matcore::{self, DEFAULT_TOL};
use crate::matrix::{complement, dot, norm1, norm2, norm_inf, sub, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
    /// Initial penalty of the splitting scheme.
    pub rho: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-9, opt_tol: 1e-8, max_iter: 100_000, rho: 1.0 }
    }
}

impl SolverOptions {
    fn lp(&self) -> LpOptions {
        LpOptions { max_iter: self.max_iter, ..LpOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    /// The method terminated but its certificate misses the tolerances.
    Inaccurate,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Inaccurate => "inaccurate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub feasibility_residual: f64,
    pub optimality_gap: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Dual vector `λ` on the measurement constraint backing the gap.
    pub dual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub coefficients: SolverReport,
    pub signal: Vec<f64>,
}

fn check_rhs(m: &DenseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement vector of length {} for a matrix with {} rows",
            y.len(),
            m.rows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite measurement".into()));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

fn zero_report(n: usize, m: usize, y: &[f64]) -> SolverReport {
    SolverReport {
        minimizer: vec![0.0; n],
        objective: 0.0,
        feasibility_residual: norm2(y),
        optimality_gap: 0.0,
        iterations: 0,
        status: SolverStatus::Optimal,
        dual: vec![0.0; m],
    }
}

fn infeasible_report(m: &DenseMatrix, y: &[f64], iterations: usize) -> SolverReport {
    let x = matcore::least_squares(m, y).unwrap_or_else(|_| vec![0.0; m.cols()]);
    let res = m.matvec(&x).map(|mx| norm2(&sub(&mx, y))).unwrap_or(f64::INFINITY);
    SolverReport {
        objective: norm1(&x),
        minimizer: x,
        feasibility_residual: res,
        optimality_gap: f64::INFINITY,
        iterations,
        status: SolverStatus::Infeasible,
        dual: vec![0.0; m.rows()],
    }
}

/// `min ‖x‖₁  s.t.  M x = y`, solved as an LP with a dual certificate.
pub fn basis_pursuit(m: &DenseMatrix, y: &[f64], opts: &SolverOptions) -> Result<SolverReport> {
    check_rhs(m, y)?;
    let (rows, n) = m.shape();
    if y.iter().all(|&v| v == 0.0) {
        return Ok(zero_report(n, rows, y));
    }
    let split = m.hstack(&m.scaled(-1.0))?;
    let res = lp::solve_standard(&split, y, &vec![1.0; 2 * n], &opts.lp());
    match res.status {
        LpStatus::Infeasible => return Ok(infeasible_report(m, y, res.iterations)),
        LpStatus::Unbounded => {
            return Err(Error::SolverFailure("basis pursuit LP reported unbounded".into()))
        }
        _ => {}
    }
    let x: Vec<f64> = (0..n).map(|j| res.x[j] - res.x[n + j]).collect();
    let lambda = res.duals;
    let objective = norm1(&x);
    let residual = norm2(&sub(&m.matvec(&x)?, y));
    let gap = (objective - dot(y, &lambda)).abs()
        + (norm_inf(&m.tr_matvec(&lambda)?) - 1.0).max(0.0);
    let status = if res.status == LpStatus::IterationLimit {
        SolverStatus::MaxIterations
    } else if residual <= opts.feas_tol && gap <= opts.opt_tol {
        SolverStatus::Optimal
    } else {
        SolverStatus::Inaccurate
    };
    Ok(SolverReport {
        minimizer: x,
        objective,
        feasibility_residual: residual,
        optimality_gap: gap,
        iterations: res.iterations,
        status,
        dual: lambda,
    })
}

struct Certified {
    objective: f64,
    residual: f64,
    gap: f64,
    dual: Vec<f64>,
}

/// Objective, residual and duality gap of `x` for the noisy problem, with
/// the dual `λ = r / ‖Mᵀr‖_∞` built from the residual `r = y − Mx`.
fn bpdn_certificate(m: &DenseMatrix, y: &[f64], eps: f64, x: &[f64]) -> Certified {
    let r = sub(y, &m.matvec(x).expect("dims checked"));
    let residual = norm2(&r);
    let objective = norm1(x);
    let g = norm_inf(&m.tr_matvec(&r).expect("dims checked"));
    if g == 0.0 {
        return Certified { objective, residual, gap: objective, dual: vec![0.0; y.len()] };
    }
    let lambda: Vec<f64> = r.iter().map(|v| v / g).collect();
    let dual_value = dot(y, &lambda) - eps * norm2(&lambda);
    Certified { objective, residual, gap: (objective - dual_value).abs(), dual: lambda }
}

/// Indices of `idx` (sorted by decreasing `|w|`) kept while the selected
/// columns of `m` stay linearly independent.
fn independent_subset(m: &DenseMatrix, w: &[f64], idx: &[usize]) -> Vec<usize> {
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in order {
        let col = m.column(j);
        let cn = norm2(&col);
        let mut r = col;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let rn = norm2(&r);
        if rn > 1e-9 * cn && rn > 0.0 {
            basis.push(r.iter().map(|x| x / rn).collect());
            keep.push(j);
        }
    }
    keep.sort_unstable();
    keep
}

/// `min ‖x‖₁  s.t.  ‖M x − y‖₂ ≤ eps`.
///
/// `eps = 0` is solved exactly by [`basis_pursuit`]; otherwise a splitting
/// scheme identifies the support and sign pattern, a closed-form solve on that
/// support polishes the point, and the duality gap certifies it.
pub fn bpdn(m: &DenseMatrix, y: &[f64], eps: f64, opts: &SolverOptions) -> Result<SolverReport> {
    check_rhs(m, y)?;
    check_eps(eps)?;
    if eps == 0.0 {
        return basis_pursuit(m, y, opts);
    }
    let (rows, n) = m.shape();
    if norm2(y) <= eps {
        return Ok(zero_report(n, rows, y));
    }
    let Some(proj) = BallProjector::new(m, y, eps)? else {
        return Ok(infeasible_report(m, y, 0));
    };
    let accept_ok = |c: &Certified| {
        c.residual <= eps + opts.feas_tol && c.gap <= opts.opt_tol * (1.0 + c.objective)
    };
    let mut last_support: Option<Vec<usize>> = None;
    let outcome = split_l1(None, n, &proj, opts, |_zeta, w| {
        let support: Vec<usize> = (0..n).filter(|&i| w[i] != 0.0).collect();
        if support.is_empty() || last_support.as_ref() == Some(&support) {
            return None;
        }
        last_support = Some(support.clone());
        let keep = independent_subset(m, w, &support);
        let b = m.select_columns(&keep);
        let c: Vec<f64> = keep.iter().map(|&i| w[i].signum()).collect();
        let eta = min_linear_over_ellipsoid(&b, &c, y, eps).ok()??;
        let mut x = vec![0.0; n];
        for (&i, &e) in keep.iter().zip(&eta) {
            x[i] = e;
        }
        let cert = bpdn_certificate(m, y, eps, &x);
        accept_ok(&cert).then_some((x, cert))
    });
    let (x, cert, iterations, status) = match outcome {
        SplitOutcome::Accepted((x, cert), it) => (x, cert, it, SolverStatus::Optimal),
        SplitOutcome::Stopped { zeta, iterations, converged } => {
            let cert = bpdn_certificate(m, y, eps, &zeta);
            let status = if accept_ok(&cert) {
                SolverStatus::Optimal
            } else if converged {
                SolverStatus::Inaccurate
            } else {
                SolverStatus::MaxIterations
            };
            (zeta, cert, iterations, status)
        }
    };
    Ok(SolverReport {
        minimizer: x,
        objective: cert.objective,
        feasibility_residual: cert.residual,
        optimality_gap: cert.gap,
        iterations,
        status,
        dual: cert.dual,
    })
}

fn check_pair(a: &DenseMatrix, d: &Frame, y: &[f64]) -> Result<()> {
    if a.cols() != d.d() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but D is {}x{}",
            a.rows(),
            a.cols(),
            d.d(),
            d.n()
        )));
    }
    check_rhs(a, y)
}

/// ℓ1-synthesis: `x̂ = argmin ‖x‖₁ s.t. ‖ADx − y‖₂ ≤ eps`, signal `ẑ = D x̂`.
pub fn l1_synthesis(
    a: &DenseMatrix,
    d: &Frame,
    y: &[f64],
    eps: f64,
    opts: &SolverOptions,
) -> Result<SynthesisResult> {
    check_pair(a, d, y)?;
    let ad = a.matmul(d.matrix())?;
    let coefficients = bpdn(&ad, y, eps, opts)?;
    let signal = d.matrix().matvec(&coefficients.minimizer)?;
    Ok(SynthesisResult { coefficients, signal })
}

/// ℓ1-analysis: `ẑ = argmin ‖Dᵀz‖₁ s.t. ‖Az − y‖₂ ≤ eps`.
pub fn l1_analysis(
    a: &DenseMatrix,
    d: &Frame,
    y: &[f64],
    eps: f64,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    check_pair(a, d, y)?;
    check_eps(eps)?;
    if eps == 0.0 {
        analysis_exact(a, d, y, opts)
    } else {
        analysis_noisy(a, d, y, eps, opts)
    }
}

fn analysis_exact(
    a: &DenseMatrix,
    d: &Frame,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverReport> {
    let (m, dim) = a.shape();
    let n = d.n();
    let dm = d.matrix();
    if y.iter().all(|&v| v == 0.0) {
        return Ok(zero_report(dim, m, y));
    }
    // Variables [z⁺, z⁻, p, q]; rows A(z⁺ − z⁻) = y and Dᵀ(z⁺ − z⁻) − p + q = 0.
    let cols = 2 * dim + 2 * n;
    let lpm = DenseMatrix::from_fn(m + n, cols, |i, j| {
        let (sign, jj) = if j < dim {
            (1.0, j)
        } else if j < 2 * dim {
            (-1.0, j - dim)
        } else {
            (0.0, 0)
        };
        if j < 2 * dim {
            if i < m {
                sign * a.get(i, jj)
            } else {
                sign * dm.get(jj, i - m)
            }
        } else if i < m {
            0.0
        } else if j - 2 * dim == i - m {
            -1.0
        } else if j >= 2 * dim + n && j - 2 * dim - n == i - m {
            1.0
        } else {
            0.0
        }
    });
    let mut rhs = y.to_vec();
    rhs.extend(core::iter::repeat_n(0.0, n));
    let mut cost = vec![0.0; 2 * dim];
    cost.extend(core::iter::repeat_n(1.0, 2 * n));
    let res = lp::solve_standard(&lpm, &rhs, &cost, &opts.lp());
    match res.status {
        LpStatus::Infeasible => return Ok(infeasible_report(a, y, res.iterations)),
        LpStatus::Unbounded => {
            return Err(Error::SolverFailure("analysis LP reported unbounded".into()))
        }
        _ => {}
    }
    let z: Vec<f64> = (0..dim).map(|j| res.x[j] - res.x[dim + j]).collect();
    let objective = norm1(&dm.tr_matvec(&z)?);
    let residual = norm2(&sub(&a.matvec(&z)?, y));
    let lam_a = res.duals[..m].to_vec();
    let lam_d = &res.duals[m..];
    let stationarity: Vec<f64> = a
        .tr_matvec(&lam_a)?
        .iter()
        .zip(dm.matvec(lam_d)?)
        .map(|(p, q)| p + q)
        .collect();
    let gap = (objective - dot(y, &lam_a)).abs()
        + norm_inf(&stationarity)
        + (norm_inf(lam_d) - 1.0).max(0.0);
    let status = if res.status == LpStatus::IterationLimit {
        SolverStatus::MaxIterations
    } else if residual <= opts.feas_tol && gap <= opts.opt_tol {
        SolverStatus::Optimal
    } else {
        SolverStatus::Inaccurate
    };
    Ok(SolverReport {
        minimizer: z,
        objective,
        feasibility_residual: residual,
        optimality_gap: gap,
        iterations: res.iterations,
        status,
        dual: lam_a,
    })
}

/// Duality gap of `z` for the noisy analysis problem. The dual direction is
/// the normalized residual; the best multiple and the matching `g` with
/// `D g = Aᵀλ`, `‖g‖_∞ ≤ 1` come from a small LP.
fn analysis_certificate(
    a: &DenseMatrix,
    d: &DenseMatrix,
    y: &[f64],
    eps: f64,
    z: &[f64],
) -> Certified {
    let r = sub(y, &a.matvec(z).expect("dims checked"));
    let residual = norm2(&r);
    let objective = norm1(&d.tr_matvec(z).expect("dims checked"));
    let fallback = Certified { objective, residual, gap: objective, dual: vec![0.0; y.len()] };
    if residual == 0.0 {
        return fallback;
    }
    let rhat: Vec<f64> = r.iter().map(|v| v / residual).collect();
    let coef = dot(y, &rhat) - eps;
    if coef <= 0.0 {
        return fallback;
    }
    let atr = a.tr_matvec(&rhat).expect("dims checked");
    let (dim, n) = d.shape();
    // Variables [g⁺, g⁻, κ, s]; rows D(g⁺ − g⁻) − κ Aᵀr̂ = 0 and g⁺ + g⁻ + s = 1.
    let lpm = DenseMatrix::from_fn(dim + n, 3 * n + 1, |i, j| {
        if i < dim {
            if j < n {
                d.get(i, j)
            } else if j < 2 * n {
                -d.get(i, j - n)
            } else if j == 2 * n {
                -atr[i]
            } else {
                0.0
            }
        } else {
            let k = i - dim;
            if j == k || j == n + k || j == 2 * n + 1 + k {
                1.0
            } else {
                0.0
            }
        }
    });
    let mut rhs = vec![0.0; dim];
    rhs.extend(core::iter::repeat_n(1.0, n));
    let mut cost = vec![0.0; 3 * n + 1];
    cost[2 * n] = -1.0;
    let res = lp::solve_standard(&lpm, &rhs, &cost, &LpOptions::default());
    if res.status != LpStatus::Optimal {
        return fallback;
    }
    let kappa = res.x[2 * n];
    let dual_value = kappa * coef;
    Certified {
        objective,
        residual,
        gap: (objective - dual_value).abs(),
        dual: rhat.iter().map(|v| v * kappa).collect(),
    }
}

fn analysis_noisy(
    a: &DenseMatrix,
    d: &Frame,
    y: &[f64],
    eps: f64,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    let (m, dim) = a.shape();
    let dm = d.matrix();
    let n = d.n();
    if norm2(y) <= eps {
        return Ok(zero_report(dim, m, y));
    }
    // With D = U S Vᵀ, ζ = S Uᵀ z gives Dᵀz = V ζ and z = U S⁻¹ ζ.
    let s = matcore::svd(dm)?;
    let u = &s.left_vectors;
    let sig = &s.singular_values;
    let v = &s.right_vectors;
    let to_z = |zeta: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = zeta.iter().zip(sig).map(|(z, s)| z / s).collect();
        u.matvec(&scaled).expect("square factor")
    };
    let u_sinv = DenseMatrix::from_fn(dim, dim, |i, j| u.get(i, j) / sig[j]);
    let a_tilde = a.matmul(&u_sinv)?;
    let Some(proj) = BallProjector::new(&a_tilde, y, eps)? else {
        return Ok(infeasible_report(a, y, 0));
    };
    let accept_ok = |c: &Certified| {
        c.residual <= eps + opts.feas_tol && c.gap <= opts.opt_tol * (1.0 + c.objective)
    };
    let mut last_support: Option<Vec<usize>> = None;
    let outcome = split_l1(Some(v), dim, &proj, opts, |_zeta, w| {
        let support: Vec<usize> = (0..n).filter(|&i| w[i] != 0.0).collect();
        if last_support.as_ref() == Some(&support) {
            return None;
        }
        last_support = Some(support.clone());
        let cosupport = complement(n, &support);
        let k = if cosupport.is_empty() {
            DenseMatrix::identity(dim)
        } else {
            matcore::nullspace_basis(&dm.select_columns(&cosupport).transpose(), DEFAULT_TOL)
                .ok()?
        };
        if k.cols() == 0 {
            return None;
        }
        let signs: Vec<f64> = (0..n).map(|i| w[i].signum()).collect();
        let ds = dm.matvec(&signs).ok()?;
        let c = k.tr_matvec(&ds).ok()?;
        let b = a.matmul(&k).ok()?;
        let eta = min_linear_over_ellipsoid(&b, &c, y, eps).ok()??;
        let z = k.matvec(&eta).ok()?;
        let cert = analysis_certificate(a, dm, y, eps, &z);
        accept_ok(&cert).then_some((z, cert))
    });
    let (z, cert, iterations, status) = match outcome {
        SplitOutcome::Accepted((z, cert), it) => (z, cert, it, SolverStatus::Optimal),
        SplitOutcome::Stopped { zeta, iterations, converged } => {
            let z = to_z(&zeta);
            let cert = analysis_certificate(a, dm, y, eps, &z);
            let status = if accept_ok(&cert) {
                SolverStatus::Optimal
            } else if converged {
                SolverStatus::Inaccurate
            } else {
                SolverStatus::MaxIterations
            };
            (z, cert, iterations, status)
        }
    };
    Ok(SolverReport {
        minimizer: z,
        objective: cert.objective,
        feasibility_residual: cert.residual,
        optimality_gap: cert.gap,
        iterations,
        status,
        dual: cert.dual,
    })
}

/// Default number of least-squares fits the ℓ0 oracle may perform.
pub const L0_BUDGET: u128 = 10_000_000;

/// Sparsest coefficient vector fitting `y`, by exhaustive support search.
pub fn l0_oracle(
    a: &DenseMatrix,
    d: &Frame,
    y: &[f64],
    s_max: usize,
    budget: u128,
) -> Result<(Vec<f64>, usize)> {
    check_pair(a, d, y)?;
    let n = d.n();
    let s_max = s_max.min(n);
    let required: u128 = (1..=s_max).map(|k| binomial(n, k)).fold(0u128, u128::saturating_add);
    check_budget(required, budget)?;
    let fit_tol = 1e-8 * (1.0 + norm2(y));
    if norm2(y) <= fit_tol {
        return Ok((vec![0.0; n], 0));
    }
    let ad = a.matmul(d.matrix())?;
    for k in 1..=s_max {
        for support in Combinations::new(n, k) {
            let sub_m = ad.select_columns(&support);
            let coef = matcore::least_squares(&sub_m, y)?;
            let fit = sub_m.matvec(&coef)?;
            if norm2(&sub(&fit, y)) <= fit_tol {
                let mut x = vec![0.0; n];
                for (&i, &c) in support.iter().zip(&coef) {
                    x[i] = c;
                }
                return Ok((x, k));
            }
        }
    }
    Err(Error::NoSolution { s_max })
}

/// Dual frame `D̃` with `D D̃ᵀ = I` and `D̃ᵀ z0 = x0`.
pub fn sparse_dual(d: &Frame, z0: &[f64], x0: &[f64]) -> Result<DenseMatrix> {
    let dm = d.matrix();
    if z0.len() != d.d() || x0.len() != d.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal of length {} and coefficients of length {} for a {}x{} frame",
            z0.len(),
            x0.len(),
            d.d(),
            d.n()
        )));
    }
    let zn = norm2(z0);
    if zn == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let residual = norm2(&sub(&dm.matvec(x0)?, z0));
    if residual > 1e-9 * zn.max(1.0) {
        return Err(Error::InconsistentRepresentation { residual });
    }
    let f = canonical_dual(d)?;
    let xc = f.tr_matvec(z0)?;
    let corr: Vec<f64> = x0.iter().zip(&xc).map(|(a, b)| (a - b) / (zn * zn)).collect();
    Ok(DenseMatrix::from_fn(d.d(), d.n(), |i, j| f.get(i, j) + z0[i] * corr[j]))
}
