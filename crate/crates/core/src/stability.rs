//! Closed-form stability quantities and error bounds.

use alloc::format;
use alloc::vec::Vec;

use crate::combin::Combinations;
use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::matcore::{self, DEFAULT_TOL};
use crate::matrix::{complement, norm1_on, norm2, DenseMatrix};
use crate::nspcert::{cross_section, top_support, KernelL1};
use crate::rng;

/// Largest `nullity(AD)` evaluated exactly by [`snsp_constant_estimate`].
pub const EXACT_MAX_NULLITY: usize = 2;
/// Largest number of frame columns evaluated exactly.
pub const EXACT_MAX_N: usize = 12;

/// `ℓ1` mass outside the `s` largest-magnitude entries.
pub fn best_s_term_residual(x: &[f64], s: usize) -> Result<f64> {
    if s > x.len() {
        return Err(Error::InvalidInput(format!("s = {s} exceeds length {}", x.len())));
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags[s..].iter().sum())
}

/// `‖M‖_{1→2}`: the largest column Euclidean norm.
pub fn operator_norm_1_2(m: &DenseMatrix) -> f64 {
    (0..m.cols()).map(|j| m.column_norm(j)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Every support and every cross-section vertex evaluated: the exact infimum.
    ExactTiny,
    /// Random kernel directions: an over-estimate of the infimum.
    SampledUpperEstimate,
}

impl EstimateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMode::ExactTiny => "exact_tiny",
            EstimateMode::SampledUpperEstimate => "sampled_upper_estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnspEstimate {
    /// `+∞` when `ker(AD) = {0}`; negative values refute the D-SNSP.
    pub c_hat: f64,
    pub mode: EstimateMode,
    pub worst_support: Vec<usize>,
    pub worst_vector: Option<Vec<f64>>,
}

/// Estimates the largest `c` with
/// `‖v_{T^c}‖₁ − min_{u∈ker D} ‖v_T + u‖₁ ≥ c ‖Dv‖₂` on `ker(AD)`, `|T| = s`.
///
/// The ratio is a quotient of a concave and a convex positively homogeneous
/// function, hence quasi-concave on each cross-section `‖v_{T^c}‖₁ = 1`, and
/// its infimum over that polytope is attained at a vertex.
pub fn snsp_constant_estimate(
    a: &DenseMatrix,
    d: &Frame,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<SnspEstimate> {
    if a.cols() != d.d() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but D is {}x{}",
            a.rows(),
            a.cols(),
            d.d(),
            d.n()
        )));
    }
    let n = d.n();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("order must be in 1..={n}, got {s}")));
    }
    let dm = d.matrix();
    let ad = a.matmul(dm)?;
    let basis = matcore::nullspace_basis(&ad, DEFAULT_TOL)?;
    let k = basis.cols();
    let exact = k <= EXACT_MAX_NULLITY && n <= EXACT_MAX_N;
    let mode = if exact { EstimateMode::ExactTiny } else { EstimateMode::SampledUpperEstimate };
    let mut best = SnspEstimate {
        c_hat: f64::INFINITY,
        mode,
        worst_support: Vec::new(),
        worst_vector: None,
    };
    if k == 0 {
        return Ok(best);
    }
    let kl = KernelL1::new(dm, d.tol())?;
    let dscale = dm.frobenius_norm();
    let probe = |v: &[f64], t: &[usize], best: &mut SnspEstimate| {
        let dv = norm2(&dm.matvec(v).expect("dims"));
        if dv <= 1e-9 * dscale * norm2(v) {
            return;
        }
        let tc = complement(n, t);
        let ratio = (norm1_on(v, &tc) - kl.min(v, t).0) / dv;
        if ratio < best.c_hat {
            best.c_hat = ratio;
            best.worst_support = t.to_vec();
            best.worst_vector = Some(v.to_vec());
        }
    };
    if exact {
        for t in Combinations::new(n, s) {
            let cs = cross_section(&basis, &complement(n, &t))?;
            for v in cs.lineality.iter().chain(&cs.vertices) {
                probe(v, &t, &mut best);
            }
        }
    } else {
        let mut r = rng::rng_from_seed(seed);
        for _ in 0..samples {
            let c = rng::normal_vec(&mut r, k);
            let v = basis.matvec(&c)?;
            probe(&v, &top_support(&v, s), &mut best);
            let mut t = rng::distinct_indices(&mut r, n, s);
            t.sort_unstable();
            probe(&v, &t, &mut best);
        }
    }
    Ok(best)
}

/// Inputs shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityInputs {
    pub c: f64,
    pub nu_a: f64,
    pub nu_d: f64,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub a_spectral: f64,
    pub x0_l1: f64,
    pub sigma_s_x0: f64,
}

impl StabilityInputs {
    fn validate(&self) -> Result<()> {
        let pos = [("c", self.c), ("nu_A", self.nu_a), ("nu_D", self.nu_d)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("eps", self.eps),
            ("delta", self.delta),
            ("A_spectral", self.a_spectral),
            ("x0_l1", self.x0_l1),
            ("sigma_s", self.sigma_s_x0),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn kernel_term(&self) -> f64 {
        2.0 * libm::sqrt(self.n as f64) / (self.c * self.nu_a * self.nu_d)
    }
}

/// `(2/c) σ_s + ε (2√n / (c ν_A ν_D) + 2/ν_A)`.
pub fn bound_theorem_sta(inp: &StabilityInputs) -> Result<f64> {
    inp.validate()?;
    Ok(2.0 / inp.c * inp.sigma_s_x0 + inp.eps * (inp.kernel_term() + 2.0 / inp.nu_a))
}

fn check_nu_ad(c: f64, nu_ad: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite() && nu_ad > 0.0 && nu_ad.is_finite()) {
        return Err(Error::InvalidInput("c and nu_AD must be positive".into()));
    }
    Ok(())
}

/// Coefficient bound `(2/c) σ_s + ε/ν_AD`, the form the derivation yields.
pub fn bound_lemma_coeff(inp: &StabilityInputs, nu_ad: f64) -> Result<f64> {
    check_nu_ad(inp.c, nu_ad)?;
    Ok(2.0 / inp.c * inp.sigma_s_x0 + inp.eps / nu_ad)
}

/// Coefficient bound with the printed noise term `2 ν_AD ε`.
pub fn bound_lemma_coeff_statement_form(inp: &StabilityInputs, nu_ad: f64) -> Result<f64> {
    check_nu_ad(inp.c, nu_ad)?;
    Ok(2.0 / inp.c * inp.sigma_s_x0 + 2.0 * nu_ad * inp.eps)
}

/// `ρ = 2δ‖A‖₂‖x₀‖₁ + ε` and
/// `2δ‖x₀‖₁ + (2√n/(c ν_A ν_D)) ρ + 2ρ/ν_A`.
pub fn bound_theorem_robust(inp: &StabilityInputs) -> Result<(f64, f64)> {
    inp.validate()?;
    let rho = 2.0 * inp.delta * inp.a_spectral * inp.x0_l1 + inp.eps;
    let bound = 2.0 * inp.delta * inp.x0_l1 + inp.kernel_term() * rho + 2.0 * rho / inp.nu_a;
    Ok((rho, bound))
}
