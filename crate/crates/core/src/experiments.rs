//! Coherent-frame recovery experiment and the inadmissible-frame demonstration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frames::{build_coherent_frame, build_example_frame, coherence, gaussian_matrix};
use crate::l1solvers::{l1_synthesis, SolverOptions, SolverStatus};
use crate::matcore::{self, DEFAULT_TOL};
use crate::matrix::{complement, norm1_on, norm2, norm_inf, relative_error, restrict};
use crate::nspcert::{nsp_check, NspOptions};
use crate::rng::{self, derive_seed, GENERATOR_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub m: usize,
    pub trials: usize,
    pub sparsity_levels: Vec<usize>,
    pub perturbations: Vec<f64>,
    pub noise_eps: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub failure_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 50,
            m: 30,
            trials: 100,
            sparsity_levels: vec![2, 3],
            perturbations: vec![0.0, 1e-4, 1e-3, 3e-3, 9e-3],
            noise_eps: 0.0,
            seed: 0,
            solver: SolverOptions::default(),
            failure_threshold: 1e-5,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidInput(msg));
        if self.d < 4 {
            return bad(format!("d must be at least 4, got {}", self.d));
        }
        if self.m == 0 || self.m > self.d {
            return bad(format!("m must be in 1..=d, got {}", self.m));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(&s) = self.sparsity_levels.iter().find(|&&s| s == 0 || s > self.d) {
            return bad(format!("sparsity level {s} outside 1..=d"));
        }
        if let Some(p) = self.perturbations.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return bad(format!("perturbation {p} is not a finite nonnegative number"));
        }
        if !(self.noise_eps >= 0.0 && self.noise_eps.is_finite()) {
            return bad("noise_eps must be finite and nonnegative".into());
        }
        if !(self.failure_threshold > 0.0) {
            return bad("failure_threshold must be positive".into());
        }
        Ok(())
    }
}

/// Maxima over the successful trials of one (perturbation, sparsity) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub e_z: f64,
    pub e_x: f64,
    /// Trials whose solve did not reach a certified optimum.
    pub failed_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub perturbation: f64,
    pub coherence: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub config: ExperimentConfig,
    pub generator: &'static str,
    pub rows: Vec<ReportRow>,
}

/// Runs the coherent-frame protocol: for each perturbation a frame
/// `[DCT, G]` and Gaussian `A`, then `trials` seeded `s`-sparse signals per
/// sparsity level decoded by noiseless (or `noise_eps`) ℓ1-synthesis.
///
/// Frame draws, the sensing matrix and the test signals are shared across
/// perturbation levels, so rows differ only by the perturbation itself.
pub fn run_table_experiment(cfg: &ExperimentConfig) -> Result<ReportTable> {
    cfg.validate()?;
    let n = 2 * cfg.d;
    let frame_seed = derive_seed(cfg.seed, &[1]);
    let a = gaussian_matrix(cfg.m, cfg.d, derive_seed(cfg.seed, &[2]))?;
    let mut rows = Vec::with_capacity(cfg.perturbations.len());
    for &p in &cfg.perturbations {
        let d = build_coherent_frame(cfg.d, p, frame_seed)?;
        let mut cells = Vec::with_capacity(cfg.sparsity_levels.len());
        for &s in &cfg.sparsity_levels {
            let mut cell = Cell { e_z: f64::NAN, e_x: f64::NAN, failed_solves: 0 };
            let mut e_z: f64 = 0.0;
            let mut e_x: f64 = 0.0;
            let mut ok = 0usize;
            for trial in 0..cfg.trials {
                let mut r = rng::rng_from_seed(derive_seed(cfg.seed, &[3, s as u64, trial as u64]));
                let idx = rng::distinct_indices(&mut r, n, s);
                let mut x0 = vec![0.0; n];
                loop {
                    for &i in &idx {
                        x0[i] = rng::normal(&mut r);
                    }
                    if norm2(&x0) > 0.0 {
                        break;
                    }
                }
                let z0 = d.matrix().matvec(&x0)?;
                let mut y = a.matvec(&z0)?;
                if cfg.noise_eps > 0.0 {
                    let w = rng::normal_vec(&mut r, cfg.m);
                    let wn = norm2(&w);
                    for (yi, wi) in y.iter_mut().zip(&w) {
                        *yi += cfg.noise_eps * wi / wn;
                    }
                }
                let rec = l1_synthesis(&a, &d, &y, cfg.noise_eps, &cfg.solver)?;
                if rec.coefficients.status != SolverStatus::Optimal {
                    cell.failed_solves += 1;
                    continue;
                }
                ok += 1;
                e_z = e_z.max(relative_error(&rec.signal, &z0));
                e_x = e_x.max(relative_error(&rec.coefficients.minimizer, &x0));
            }
            if ok > 0 {
                cell.e_z = e_z;
                cell.e_x = e_x;
            }
            cells.push(cell);
        }
        rows.push(ReportRow { perturbation: p, coherence: coherence(&d)?, cells });
    }
    Ok(ReportTable { config: cfg.clone(), generator: GENERATOR_ID, rows })
}

/// Where a demonstration signal came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoSource {
    /// `V = ±v + αu` with `Dv ∈ ker A`, restricted to `T`.
    KernelConstruction,
    /// NSP witness of `AD` at order `|T|`, restricted to its own support.
    NspWitness,
    /// Random coefficients on `T`.
    Random,
}

impl DemoSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            DemoSource::KernelConstruction => "kernel_construction",
            DemoSource::NspWitness => "nsp_witness",
            DemoSource::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRecord {
    pub d: usize,
    pub eps: f64,
    pub m: usize,
    pub support: Vec<usize>,
    pub u_t_norm: f64,
    pub u_tc_norm: f64,
    pub candidates_tested: usize,
    pub worst_error: f64,
    pub worst_source: DemoSource,
    pub worst_support: Vec<usize>,
    pub worst_signal: Vec<f64>,
    /// Largest error among the kernel-construction signals alone.
    pub witness_error: f64,
    pub failure_threshold: f64,
}

impl DemoRecord {
    pub fn recovery_failed(&self) -> bool {
        self.worst_error > self.failure_threshold
    }
}

/// Shows that `[I, w]` defeats ℓ1-synthesis on a support holding the first
/// and last columns: verifies `‖u_T‖₁ > ‖u_{T^c}‖₁` for the kernel generator
/// `u = (w, −1)`, then decodes signals supported on `T` from `m` Gaussian
/// measurements (default `m = d/2`).
pub fn run_example_demo(
    d: usize,
    eps: f64,
    t: &[usize],
    seed: u64,
    m: Option<usize>,
    opts: &NspOptions,
) -> Result<DemoRecord> {
    let frame = build_example_frame(d, eps)?;
    let n = d + 1;
    let mut t = t.to_vec();
    t.sort_unstable();
    t.dedup();
    if t.len() < 2 || t[0] != 0 || *t.last().expect("nonempty") != d || t.iter().any(|&i| i >= n) {
        return Err(Error::InvalidInput(format!(
            "support must contain the first (0) and last ({d}) indices and have at least two entries"
        )));
    }
    let mut u = frame.matrix().column(d);
    u.push(-1.0);
    let tc = complement(n, &t);
    let (t_norm, tc_norm) = (norm1_on(&u, &t), norm1_on(&u, &tc));
    if t_norm <= tc_norm {
        return Err(Error::PremiseFailed { t_norm, tc_norm });
    }
    let m = m.unwrap_or((d / 2).max(1));
    if m == 0 || m >= d {
        return Err(Error::InvalidInput(format!("m must be in 1..d, got {m}")));
    }
    let a = gaussian_matrix(m, d, derive_seed(seed, &[7]))?;
    let ad = a.matmul(frame.matrix())?;

    let mut candidates: Vec<(DemoSource, Vec<usize>, Vec<f64>)> = Vec::new();
    let ker_a = matcore::nullspace_basis(&a, DEFAULT_TOL)?;
    let umin = u.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    for j in 0..ker_a.cols() {
        let v = matcore::least_squares(frame.matrix(), &ker_a.column(j))?;
        let alpha0 = 2.0 * norm_inf(&v) / umin;
        for sign in [1.0, -1.0] {
            for mult in [1.0, 4.0, 16.0] {
                let big: Vec<f64> =
                    v.iter().zip(&u).map(|(vi, ui)| sign * vi + mult * alpha0 * ui).collect();
                candidates.push((DemoSource::KernelConstruction, t.clone(), restrict(&big, &t)));
            }
        }
    }
    if let Ok(cert) = nsp_check(&ad, t.len(), opts) {
        if let Some(w) = cert.witness {
            let ws = cert.worst_support.clone();
            candidates.push((DemoSource::NspWitness, ws.clone(), restrict(&w, &ws)));
        }
    }
    let mut r = rng::rng_from_seed(derive_seed(seed, &[8]));
    for _ in 0..20 {
        let mut x = vec![0.0; n];
        for &i in &t {
            x[i] = rng::normal(&mut r);
        }
        candidates.push((DemoSource::Random, t.clone(), x));
    }

    let mut rec = DemoRecord {
        d,
        eps,
        m,
        support: t.clone(),
        u_t_norm: t_norm,
        u_tc_norm: tc_norm,
        candidates_tested: 0,
        worst_error: 0.0,
        worst_source: DemoSource::Random,
        worst_support: t.clone(),
        worst_signal: vec![0.0; d],
        witness_error: 0.0,
        failure_threshold: opts.failure_threshold,
    };
    for (source, support, x) in candidates {
        let z0 = frame.matrix().matvec(&x)?;
        if norm2(&z0) == 0.0 {
            continue;
        }
        let y = a.matvec(&z0)?;
        let out = l1_synthesis(&a, &frame, &y, 0.0, &opts.solver)?;
        if out.coefficients.status != SolverStatus::Optimal {
            continue;
        }
        rec.candidates_tested += 1;
        let err = relative_error(&out.signal, &z0);
        if source == DemoSource::KernelConstruction {
            rec.witness_error = rec.witness_error.max(err);
        }
        if err > rec.worst_error {
            rec.worst_error = err;
            rec.worst_source = source;
            rec.worst_support = support;
            rec.worst_signal = z0;
        }
    }
    Ok(rec)
}
