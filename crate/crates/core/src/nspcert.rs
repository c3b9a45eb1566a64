//! Null-space property certificates: NSP by linear programming, D-NSP through
//! the full-spark equivalence or recovery-based falsification, the rank test
//! for injectivity, the kernel sign condition and the coherence bound.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::combin::{binomial, check_budget, Combinations};
use crate::error::{Error, Result};
use crate::frames::{self, coherence_of, is_full_spark, Frame};
use crate::l1solvers::{l1_synthesis, SolverOptions, SolverStatus};
use crate::lp::{self, LpOptions, LpStatus};
use crate::matcore::{self, orthonormal_complement, DEFAULT_TOL};
use crate::matrix::{complement, norm1, norm1_on, norm2, relative_error, restrict, DenseMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NspOptions {
    /// Strictness margin on LP values and kernel-sign gaps.
    pub margin: f64,
    /// Upper bound on enumerated subproblems (supports × sign patterns, or
    /// supports × candidate vertices).
    pub budget: u128,
    /// Largest kernel dimension handled exactly by [`kernel_sign_condition`].
    pub exact_nullity_limit: usize,
    /// Sampled probes used when the exact mode is unavailable.
    pub samples: usize,
    pub seed: u64,
    /// Relative signal error above which recovery counts as failed.
    pub failure_threshold: f64,
    pub solver: SolverOptions,
}

impl Default for NspOptions {
    fn default() -> Self {
        Self {
            margin: 1e-9,
            budget: 10_000_000,
            exact_nullity_limit: 6,
            samples: 2000,
            seed: 0,
            failure_threshold: 1e-5,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NspCertificate {
    pub order: usize,
    pub holds: bool,
    pub worst_support: Vec<usize>,
    /// Largest `‖v_T‖₁` over kernel vectors with `‖v_{T^c}‖₁ ≤ 1`.
    pub worst_value: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DnspMethod {
    FullSparkEquivalence,
    Falsification,
}

impl DnspMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DnspMethod::FullSparkEquivalence => "full_spark_equivalence",
            DnspMethod::Falsification => "falsification",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Refuted,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// A sparse signal that ℓ1-synthesis fails to recover.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub support: Vec<usize>,
    /// Coefficients supported on `support`.
    pub coefficients: Vec<f64>,
    pub signal: Vec<f64>,
    /// Relative signal error of noiseless ℓ1-synthesis on this signal.
    pub recovery_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnspVerdict {
    pub order: usize,
    pub method: DnspMethod,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub trials_run: usize,
    /// Numerical rank of the sensing matrix the verdict is relative to.
    pub rank_a: usize,
}

// ── kernel ℓ1 minimization ──

/// `min_{u ∈ ker D} ‖w_T + u‖₁` with a fixed kernel basis.
#[derive(Debug, Clone)]
pub(crate) struct KernelL1 {
    basis: DenseMatrix,
}

impl KernelL1 {
    pub(crate) fn new(d: &DenseMatrix, tol: f64) -> Result<Self> {
        Ok(Self { basis: matcore::nullspace_basis(d, tol)? })
    }

    pub(crate) fn min(&self, w: &[f64], t: &[usize]) -> (f64, Vec<f64>) {
        let wt = restrict(w, t);
        let n = wt.len();
        let k = self.basis.cols();
        if k == 0 {
            return (norm1(&wt), vec![0.0; n]);
        }
        // Variables [c⁺, c⁻, p, q]; rows N(c⁺ − c⁻) − p + q = −w_T.
        let lpm = DenseMatrix::from_fn(n, 2 * k + 2 * n, |i, j| {
            if j < k {
                self.basis.get(i, j)
            } else if j < 2 * k {
                -self.basis.get(i, j - k)
            } else if j - 2 * k == i {
                -1.0
            } else if j >= 2 * k + n && j - 2 * k - n == i {
                1.0
            } else {
                0.0
            }
        });
        let rhs: Vec<f64> = wt.iter().map(|v| -v).collect();
        let mut cost = vec![0.0; 2 * k];
        cost.extend(core::iter::repeat_n(1.0, 2 * n));
        let res = lp::solve_standard(&lpm, &rhs, &cost, &LpOptions::default());
        let c: Vec<f64> = (0..k).map(|j| res.x[j] - res.x[k + j]).collect();
        let u = self.basis.matvec(&c).expect("basis dims");
        let val = norm1(&wt.iter().zip(&u).map(|(a, b)| a + b).collect::<Vec<_>>());
        (val, u)
    }
}

/// `min_{u ∈ ker D} ‖w_T + u‖₁` and a minimizer; `w_T` is `w` zeroed off `T`.
pub fn kernel_l1_min(d: &Frame, w: &[f64], t: &[usize]) -> Result<(f64, Vec<f64>)> {
    if w.len() != d.n() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for a frame with {} columns",
            w.len(),
            d.n()
        )));
    }
    check_support(t, d.n())?;
    Ok(KernelL1::new(d.matrix(), d.tol())?.min(w, t))
}

fn check_support(t: &[usize], n: usize) -> Result<()> {
    if t.iter().any(|&i| i >= n) {
        return Err(Error::InvalidInput(format!("support index out of range 0..{n}")));
    }
    let mut s = t.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != t.len() {
        return Err(Error::InvalidInput("support has repeated indices".into()));
    }
    Ok(())
}

// ── cross-section vertices ──

/// Vertices of `{c : ‖(Nc)_{T^c}‖₁ ≤ 1}` (as vectors `Nc`, one per ± pair),
/// plus a basis of kernel vectors vanishing on `T^c` (the lineality space).
pub(crate) struct CrossSection {
    pub vertices: Vec<Vec<f64>>,
    pub lineality: Vec<Vec<f64>>,
}

pub(crate) fn vertex_count(n: usize, s: usize, k: usize) -> u128 {
    binomial(n - s, k.saturating_sub(1))
}

pub(crate) fn cross_section(basis: &DenseMatrix, tc: &[usize]) -> Result<CrossSection> {
    let k = basis.cols();
    let b = basis.select_rows(tc);
    let (l_cols, q_cols) = if tc.is_empty() {
        ((0..k).map(|j| unit(k, j)).collect::<Vec<_>>(), Vec::new())
    } else {
        let l = matcore::nullspace_basis(&b, DEFAULT_TOL)?;
        let l_cols: Vec<Vec<f64>> = (0..l.cols()).map(|j| l.column(j)).collect();
        let q_cols = orthonormal_complement(k, &l_cols);
        (l_cols, q_cols)
    };
    let lineality = l_cols.iter().map(|c| basis.matvec(c).expect("basis dims")).collect();
    let kp = q_cols.len();
    let mut vertices = Vec::new();
    if kp > 0 {
        let q = DenseMatrix::from_fn(k, kp, |i, j| q_cols[j][i]);
        let bq = b.matmul(&q)?;
        let nq = basis.matmul(&q)?;
        let mut push = |eta: &[f64]| {
            let v = nq.matvec(eta).expect("dims");
            let scale = norm1_on(&v, tc);
            if scale > 0.0 {
                vertices.push(v.iter().map(|x| x / scale).collect());
            }
        };
        if kp == 1 {
            push(&[1.0]);
        } else {
            for rows in Combinations::new(tc.len(), kp - 1) {
                let sub = bq.select_rows(&rows);
                let nl = matcore::nullspace_basis(&sub, DEFAULT_TOL)?;
                if nl.cols() == 1 {
                    push(&nl.column(0));
                }
            }
        }
    }
    Ok(CrossSection { vertices, lineality })
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

// ── NSP ──

/// Decides the null space property of order `s` for `M` exactly.
pub fn nsp_check(m: &DenseMatrix, s: usize, opts: &NspOptions) -> Result<NspCertificate> {
    let n = m.cols();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("order must be in 1..={n}, got {s}")));
    }
    let patterns = 1u128 << (s - 1).min(100);
    check_budget(binomial(n, s).saturating_mul(patterns), opts.budget)?;
    let basis = matcore::nullspace_basis(m, DEFAULT_TOL)?;
    let k = basis.cols();
    if k == 0 {
        return Ok(NspCertificate {
            order: s,
            holds: true,
            worst_support: (0..s).collect(),
            worst_value: 0.0,
            witness: None,
        });
    }
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_support = Vec::new();
    let mut witness = Vec::new();
    'supports: for t in Combinations::new(n, s) {
        let tc = complement(n, &t);
        for pattern in 0..(1usize << (s - 1)) {
            let sigma: Vec<f64> = (0..s)
                .map(|i| if i > 0 && (pattern >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let (value, v) = support_lp(&basis, &t, &tc, &sigma);
            if value > worst_value {
                worst_value = value;
                worst_support = t.clone();
                witness = v;
            }
            if value == f64::INFINITY {
                break 'supports;
            }
        }
    }
    let holds = worst_value < 1.0 - opts.margin;
    Ok(NspCertificate {
        order: s,
        holds,
        worst_support,
        worst_value,
        witness: (!holds).then_some(witness),
    })
}

/// `max σᵀ(Nc)_T  s.t.  ‖(Nc)_{T^c}‖₁ ≤ 1`; returns the value and `v = Nc`
/// (a ray direction when unbounded).
fn support_lp(basis: &DenseMatrix, t: &[usize], tc: &[usize], sigma: &[f64]) -> (f64, Vec<f64>) {
    let k = basis.cols();
    let r = tc.len();
    let obj: Vec<f64> = (0..k)
        .map(|j| t.iter().zip(sigma).map(|(&i, s)| s * basis.get(i, j)).sum())
        .collect();
    // Variables [c⁺, c⁻, p, q, slack]; rows N_{T^c}(c⁺ − c⁻) − p + q = 0 and Σ(p + q) + slack = 1.
    let cols = 2 * k + 2 * r + 1;
    let lpm = DenseMatrix::from_fn(r + 1, cols, |i, j| {
        if i < r {
            let row = tc[i];
            if j < k {
                basis.get(row, j)
            } else if j < 2 * k {
                -basis.get(row, j - k)
            } else if j - 2 * k == i {
                -1.0
            } else if j >= 2 * k + r && j < 2 * k + 2 * r && j - 2 * k - r == i {
                1.0
            } else {
                0.0
            }
        } else if j >= 2 * k {
            1.0
        } else {
            0.0
        }
    });
    let mut rhs = vec![0.0; r];
    rhs.push(1.0);
    let mut cost: Vec<f64> = obj.iter().map(|v| -v).collect();
    cost.extend(obj.iter().copied());
    cost.extend(core::iter::repeat_n(0.0, 2 * r + 1));
    let res = lp::solve_standard(&lpm, &rhs, &cost, &LpOptions::default());
    let coeffs = |x: &[f64]| -> Vec<f64> { (0..k).map(|j| x[j] - x[k + j]).collect() };
    match res.status {
        LpStatus::Unbounded => {
            let ray = res.ray.expect("unbounded LP carries a ray");
            (f64::INFINITY, basis.matvec(&coeffs(&ray)).expect("dims"))
        }
        _ => (-res.objective, basis.matvec(&coeffs(&res.x)).expect("dims")),
    }
}

// ── D-NSP ──

/// A kernel vector `v ∈ ker(AD)` with `Dv ≠ 0` violating the D-NSP on `support`.
#[derive(Debug, Clone)]
pub(crate) struct Violation {
    pub v: Vec<f64>,
    pub support: Vec<usize>,
    /// `min_u ‖v_T + u‖₁ − ‖v_{T^c}‖₁` (infinite for vectors vanishing off `T`).
    pub gap: f64,
}

fn nonzero_image(d: &DenseMatrix, v: &[f64]) -> bool {
    let dv = d.matvec(v).expect("dims");
    norm2(&dv) > 1e-9 * d.frobenius_norm() * norm2(v)
}

/// Evaluates the D-NSP gap of `v` on `t`.
fn dnsp_gap(kl: &KernelL1, v: &[f64], t: &[usize]) -> f64 {
    let tc = complement(v.len(), t);
    kl.min(v, t).0 - norm1_on(v, &tc)
}

/// Exact search for the strongest D-NSP violation over cross-section vertices.
/// Supports in `first` are searched before the rest; the search stops at the
/// first support that yields a strict violation.
pub(crate) fn find_dnsp_violation(
    ad: &DenseMatrix,
    d: &DenseMatrix,
    d_tol: f64,
    s: usize,
    first: &[usize],
    opts: &NspOptions,
) -> Result<Option<Violation>> {
    let n = ad.cols();
    let basis = matcore::nullspace_basis(ad, DEFAULT_TOL)?;
    let k = basis.cols();
    if k == 0 {
        return Ok(None);
    }
    check_budget(binomial(n, s).saturating_mul(vertex_count(n, s, k)), opts.budget)?;
    let kl = KernelL1::new(d, d_tol)?;
    let mut order: Vec<Vec<usize>> = Vec::new();
    if first.len() == s {
        order.push(first.to_vec());
    }
    order.extend(Combinations::new(n, s).filter(|t| t.as_slice() != first));
    for t in order {
        let tc = complement(n, &t);
        let cs = cross_section(&basis, &tc)?;
        if let Some(v) = cs.lineality.iter().find(|v| nonzero_image(d, v)) {
            return Ok(Some(Violation { v: v.clone(), support: t, gap: f64::INFINITY }));
        }
        let mut best: Option<Violation> = None;
        for v in cs.vertices {
            if !nonzero_image(d, &v) {
                continue;
            }
            let g = dnsp_gap(&kl, &v, &t);
            if g > opts.margin && best.as_ref().map_or(true, |b| g > b.gap) {
                best = Some(Violation { v, support: t.clone(), gap: g });
            }
        }
        if best.is_some() {
            return Ok(best);
        }
    }
    Ok(None)
}

fn counterexample_from(
    a: &DenseMatrix,
    d: &Frame,
    v: &[f64],
    t: &[usize],
    opts: &NspOptions,
) -> Result<Counterexample> {
    let coefficients = restrict(v, t);
    let signal = d.matrix().matvec(&coefficients)?;
    let y = a.matvec(&signal)?;
    let rec = l1_synthesis(a, d, &y, 0.0, &opts.solver)?;
    Ok(Counterexample {
        support: t.to_vec(),
        coefficients,
        recovery_error: relative_error(&rec.signal, &signal),
        signal,
    })
}

/// Builds the failing sparse signal for an NSP failure of `AD`: the NSP
/// witness itself when it violates the D-NSP strictly, otherwise the
/// strongest violation found by vertex search.
fn witness_counterexample(
    a: &DenseMatrix,
    d: &Frame,
    ad: &DenseMatrix,
    cert: &NspCertificate,
    opts: &NspOptions,
) -> Result<Option<Counterexample>> {
    let Some(w) = cert.witness.as_ref() else {
        return Ok(None);
    };
    let kl = KernelL1::new(d.matrix(), d.tol())?;
    if nonzero_image(d.matrix(), w) && dnsp_gap(&kl, w, &cert.worst_support) > opts.margin {
        return counterexample_from(a, d, w, &cert.worst_support, opts).map(Some);
    }
    match find_dnsp_violation(ad, d.matrix(), d.tol(), cert.order, &cert.worst_support, opts) {
        Ok(Some(viol)) => counterexample_from(a, d, &viol.v, &viol.support, opts).map(Some),
        Ok(None) | Err(Error::CombinatorialBudgetExceeded { .. }) => {
            if nonzero_image(d.matrix(), w) {
                counterexample_from(a, d, w, &cert.worst_support, opts).map(Some)
            } else {
                Ok(None)
            }
        }
        Err(e) => Err(e),
    }
}

fn check_dims(a: &DenseMatrix, d: &Frame) -> Result<()> {
    if a.cols() != d.d() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but D is {}x{}",
            a.rows(),
            a.cols(),
            d.d(),
            d.n()
        )));
    }
    Ok(())
}

/// D-NSP decided through the full-spark equivalence with NSP of `AD`.
pub fn dnsp_certify_fullspark(
    a: &DenseMatrix,
    d: &Frame,
    s: usize,
    opts: &NspOptions,
) -> Result<DnspVerdict> {
    check_dims(a, d)?;
    if !is_full_spark(d)? {
        return Err(Error::NotFullSpark);
    }
    let ad = a.matmul(d.matrix())?;
    let cert = nsp_check(&ad, s, opts)?;
    let rank_a = matcore::rank(a, DEFAULT_TOL)?;
    if cert.holds {
        return Ok(DnspVerdict {
            order: s,
            method: DnspMethod::FullSparkEquivalence,
            verdict: Verdict::Certified,
            counterexample: None,
            trials_run: 0,
            rank_a,
        });
    }
    let counterexample = witness_counterexample(a, d, &ad, &cert, opts)?;
    Ok(DnspVerdict {
        order: s,
        method: DnspMethod::FullSparkEquivalence,
        verdict: Verdict::Refuted,
        counterexample,
        trials_run: 0,
        rank_a,
    })
}

/// Random `s`-sparse coefficient vector; odd trials use ±1 values.
pub(crate) fn random_sparse(r: &mut rng::SeededRng, n: usize, s: usize, signs: bool) -> Vec<f64> {
    loop {
        let idx = rng::distinct_indices(r, n, s);
        let mut x = vec![0.0; n];
        for &i in &idx {
            let g = rng::normal(r);
            x[i] = if signs { g.signum() } else { g };
        }
        if norm2(&x) > 0.0 {
            return x;
        }
    }
}

/// Searches for a recovery failure; never certifies.
pub fn dnsp_falsify(
    a: &DenseMatrix,
    d: &Frame,
    s: usize,
    trials: usize,
    seed: u64,
    opts: &NspOptions,
) -> Result<DnspVerdict> {
    check_dims(a, d)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let n = d.n();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("order must be in 1..={n}, got {s}")));
    }
    let rank_a = matcore::rank(a, DEFAULT_TOL)?;
    let ad = a.matmul(d.matrix())?;
    let mut trials_run = 0;
    let refuted = |cx: Counterexample, trials_run: usize| DnspVerdict {
        order: s,
        method: DnspMethod::Falsification,
        verdict: Verdict::Refuted,
        counterexample: Some(cx),
        trials_run,
        rank_a,
    };

    match nsp_check(&ad, s, opts) {
        Ok(cert) if !cert.holds => {
            if let Some(cx) = witness_counterexample(a, d, &ad, &cert, opts)? {
                trials_run += 1;
                if cx.recovery_error > opts.failure_threshold {
                    return Ok(refuted(cx, trials_run));
                }
            }
        }
        Ok(_) | Err(Error::CombinatorialBudgetExceeded { .. }) => {}
        Err(e) => return Err(e),
    }

    let mut r = rng::rng_from_seed(seed);
    for trial in 0..trials {
        let x0 = random_sparse(&mut r, n, s, trial % 2 == 1);
        let z0 = d.matrix().matvec(&x0)?;
        let y = ad.matvec(&x0)?;
        let rec = l1_synthesis(a, d, &y, 0.0, &opts.solver)?;
        trials_run += 1;
        if rec.coefficients.status != SolverStatus::Optimal {
            continue;
        }
        let err = relative_error(&rec.signal, &z0);
        if err > opts.failure_threshold {
            let support: Vec<usize> = (0..n).filter(|&i| x0[i] != 0.0).collect();
            let cx = Counterexample { support, coefficients: x0, signal: z0, recovery_error: err };
            return Ok(refuted(cx, trials_run));
        }
    }
    Ok(DnspVerdict {
        order: s,
        method: DnspMethod::Falsification,
        verdict: Verdict::Undetermined,
        counterexample: None,
        trials_run,
        rank_a,
    })
}

/// Rank test: `rank D_T = rank A D_T` for every `|T| = 2s`.
pub fn injectivity_check(a: &DenseMatrix, d: &Frame, s: usize, budget: u128) -> Result<bool> {
    check_dims(a, d)?;
    let n = d.n();
    let size = (2 * s).min(n);
    check_budget(binomial(n, size), budget)?;
    let ad = a.matmul(d.matrix())?;
    for t in Combinations::new(n, size) {
        let r_d = matcore::rank(&d.matrix().select_columns(&t), d.tol())?;
        let r_ad = matcore::rank(&ad.select_columns(&t), d.tol())?;
        if r_d != r_ad {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For every `u ∈ ker D \ {0}` and `|T| = s`, is there `ũ ∈ ker D` with
/// `‖u_T + ũ‖₁ < ‖u_{T^c}‖₁`?
///
/// Since `ũ = −u` always attains `‖u_{T^c}‖₁`, the condition fails exactly
/// when `min_ũ ‖u_T + ũ‖₁` reaches `‖u_{T^c}‖₁`. That minimum is convex and
/// positively homogeneous in `u`, so on the cross-section
/// `‖u_{T^c}‖₁ = 1` it peaks at a vertex; the exact mode evaluates every
/// vertex. Kernel vectors vanishing off `T` violate the condition outright.
pub fn kernel_sign_condition(d: &Frame, s: usize, opts: &NspOptions) -> Result<bool> {
    let n = d.n();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("order must be in 1..={n}, got {s}")));
    }
    let kl = KernelL1::new(d.matrix(), d.tol())?;
    let basis = kl.basis.clone();
    let k = basis.cols();
    if k == 0 {
        return Ok(true);
    }
    let scale_margin = |v: &[f64], t: &[usize]| -> bool {
        let tc = complement(n, t);
        kl.min(v, t).0 >= norm1_on(v, &tc) - opts.margin * norm1(v).max(1e-300)
    };
    if k > opts.exact_nullity_limit {
        let mut r = rng::rng_from_seed(opts.seed);
        for _ in 0..opts.samples {
            let c = rng::normal_vec(&mut r, k);
            let v = basis.matvec(&c)?;
            let mut t = top_support(&v, s);
            if scale_margin(&v, &t) {
                return Ok(false);
            }
            t = rng::distinct_indices(&mut r, n, s);
            t.sort_unstable();
            if scale_margin(&v, &t) {
                return Ok(false);
            }
        }
        return Err(Error::ExactModeUnavailable { nullity: k, limit: opts.exact_nullity_limit });
    }
    check_budget(binomial(n, s).saturating_mul(vertex_count(n, s, k)), opts.budget)?;
    for t in Combinations::new(n, s) {
        let tc = complement(n, &t);
        let cs = cross_section(&basis, &tc)?;
        if !cs.lineality.is_empty() {
            return Ok(false);
        }
        for v in &cs.vertices {
            if scale_margin(v, &t) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Indices of the `s` largest magnitudes, ascending.
pub(crate) fn top_support(v: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// `(1 − 2A²/(nB), μ < bound)` on the column-normalized frame.
pub fn coherence_bound_check(d: &Frame) -> Result<(f64, bool)> {
    let nm = d.matrix().normalized_columns()?;
    let nf = Frame::new(nm.clone(), d.tol())?;
    let (a, b) = frames::frame_bounds(&nf)?;
    let bound = 1.0 - 2.0 * a * a / (d.n() as f64 * b);
    let mu = coherence_of(&nm)?;
    Ok((bound, mu < bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn nsp_examples() {
        let opts = NspOptions::default();
        let c = nsp_check(&DenseMatrix::identity(3), 1, &opts).unwrap();
        assert!(c.holds && c.worst_value == 0.0);
        let c = nsp_check(&mat(&[&[1.0, 1.0, 1.0]]), 1, &opts).unwrap();
        assert!(!c.holds);
        assert!((c.worst_value - 1.0).abs() < 1e-12, "{}", c.worst_value);
        let w = c.witness.unwrap();
        let tc = complement(3, &c.worst_support);
        assert!(norm1_on(&w, &c.worst_support) >= norm1_on(&w, &tc) - 1e-9);
        assert!(nsp_check(&mat(&[&[1.0, 1.0, 1.0]]), 0, &opts).is_err());
    }

    #[test]
    fn kernel_l1_min_examples() {
        let d = Frame::from_matrix(mat(&[&[1.0, 2.0]])).unwrap();
        let (v, u) = kernel_l1_min(&d, &[1.0, 5.0], &[0]).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        assert!((u[0] + 1.0).abs() < 1e-12 && (u[1] - 0.5).abs() < 1e-12);
        let id = Frame::from_matrix(DenseMatrix::identity(2)).unwrap();
        assert_eq!(kernel_l1_min(&id, &[1.0, -3.0], &[0, 1]).unwrap().0, 4.0);
        let (v, _) = kernel_l1_min(&d, &[2.0, -1.0], &[0, 1]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn kernel_sign_condition_examples() {
        let opts = NspOptions::default();
        let id = Frame::from_matrix(DenseMatrix::identity(3)).unwrap();
        assert!(kernel_sign_condition(&id, 1, &opts).unwrap());
        let dup = Frame::from_matrix(mat(&[
            &[1.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]))
        .unwrap();
        assert!(!kernel_sign_condition(&dup, 1, &opts).unwrap());
        let ex = frames::build_example_frame(10, 0.05).unwrap();
        assert!(!kernel_sign_condition(&ex, 2, &opts).unwrap());
    }

    #[test]
    fn coherence_bound_examples() {
        let id = Frame::from_matrix(DenseMatrix::identity(4)).unwrap();
        let (b, ok) = coherence_bound_check(&id).unwrap();
        assert!((b - 0.5).abs() < 1e-14 && ok);
        let dup = Frame::from_matrix(mat(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])).unwrap();
        assert!(!coherence_bound_check(&dup).unwrap().1);
    }

    #[test]
    fn injectivity_examples() {
        let d = frames::build_example_frame(3, 0.2).unwrap();
        let a = mat(&[&[2.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 3.0]]);
        assert!(injectivity_check(&a, &d, 1, u128::MAX).unwrap());
        assert!(!injectivity_check(&DenseMatrix::zeros(2, 3), &d, 1, u128::MAX).unwrap());
    }

    #[test]
    fn falsify_rejects_zero_trials() {
        let d = frames::build_example_frame(3, 0.2).unwrap();
        let a = DenseMatrix::identity(3);
        assert!(dnsp_falsify(&a, &d, 1, 0, 1, &NspOptions::default()).is_err());
    }

    #[test]
    fn duplicate_column_is_not_full_spark() {
        let d = Frame::from_matrix(mat(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap();
        let a = DenseMatrix::identity(2);
        assert_eq!(
            dnsp_certify_fullspark(&a, &d, 1, &NspOptions::default()),
            Err(Error::NotFullSpark)
        );
    }
}
