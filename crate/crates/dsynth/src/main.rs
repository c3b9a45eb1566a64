use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dsynth::config::read_config;
use dsynth::io::{read_matrix, read_vector, write_text, write_vector};
use dsynth::kv::KvBlock;
use dsynth::report::format_report;
use dsynth::run_experiment_timed;
use dsynth_core::experiments::{run_example_demo, ExperimentConfig};
use dsynth_core::frames::{frame_stats, is_full_spark_with_budget, Frame};
use dsynth_core::l1solvers::{l0_oracle, l1_analysis, l1_synthesis, SolverOptions, SolverReport};
use dsynth_core::matcore::{self, DEFAULT_TOL};
use dsynth_core::matrix::norm1;
use dsynth_core::nspcert::{
    dnsp_certify_fullspark, dnsp_falsify, injectivity_check, nsp_check, DnspVerdict, NspOptions,
};
use dsynth_core::stability::{
    best_s_term_residual, bound_lemma_coeff, bound_lemma_coeff_statement_form,
    bound_theorem_robust, bound_theorem_sta, snsp_constant_estimate, StabilityInputs,
    EXACT_MAX_N, EXACT_MAX_NULLITY,
};

#[derive(Parser, Debug)]
#[command(name = "dsynth", version, about = "Frame-based sparse recovery: certificates, decoders, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true, default_value_t = 1e-9)]
    feas_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    opt_tol: f64,
    #[arg(long, global = true, default_value_t = 100_000)]
    max_iter: usize,
    /// Cap on enumerated subproblems.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    budget: u128,
    /// Output path (or prefix, for `solve`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coherence, frame bounds, spark and ν_D of a frame.
    FrameInfo { frame: PathBuf },
    /// Null space property of order s.
    CheckNsp {
        matrix: PathBuf,
        #[arg(long)]
        s: Option<usize>,
    },
    /// D-NSP of A: certified through full spark, otherwise falsified by sampling.
    CheckDnsp {
        a: PathBuf,
        d: PathBuf,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// rank D_T = rank A D_T for every |T| = 2s.
    CheckInjectivity {
        a: PathBuf,
        d: PathBuf,
        #[arg(long)]
        s: Option<usize>,
    },
    /// ℓ1-synthesis; writes <out>.x.csv and <out>.z.csv (<out> defaults to y without extension).
    Solve {
        a: PathBuf,
        d: PathBuf,
        y: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// ℓ1-analysis; writes <out>.z.csv (<out> defaults to y without extension).
    Analyze {
        a: PathBuf,
        d: PathBuf,
        y: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Sparsest representation by exhaustive support search.
    Oracle {
        a: PathBuf,
        d: PathBuf,
        y: PathBuf,
        /// Largest support size searched.
        #[arg(long)]
        s: Option<usize>,
    },
    /// Stability bounds with the SNSP constant of (A, D).
    Bounds {
        a: PathBuf,
        d: PathBuf,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Coefficient vector x0 (defaults to zero).
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Frame perturbation ‖D0 − D‖_{1→2}.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Samples when the constant cannot be computed exactly.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coherent-frame recovery table (CSV).
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recovery failure on the frame [I, w].
    DemoExample1 {
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long)]
        eps: Option<f64>,
        /// 0-based support; must contain 0 and d.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Exit 2: bad invocation, detected before any computation.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn need<T>(v: Option<T>, flag: &str, cmd: &str) -> Result<T> {
    v.ok_or_else(|| UsageError(format!("{cmd} requires --{flag}")).into())
}

fn solver_options(c: &Common) -> Result<SolverOptions> {
    if !(c.feas_tol > 0.0 && c.opt_tol > 0.0) || c.max_iter == 0 {
        return Err(UsageError("tolerances must be positive and --max-iter at least 1".into()).into());
    }
    Ok(SolverOptions { feas_tol: c.feas_tol, opt_tol: c.opt_tol, max_iter: c.max_iter, ..Default::default() })
}

fn nsp_options(c: &Common) -> Result<NspOptions> {
    Ok(NspOptions { budget: c.budget, solver: solver_options(c)?, ..Default::default() })
}

fn frame(path: &Path) -> Result<Frame> {
    let m = read_matrix(path)?;
    Frame::from_matrix(m).with_context(|| format!("{}: not a frame", path.display()))
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",")
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solver_kv(kv: &mut KvBlock, r: &SolverReport, verbose: bool) {
    kv.push("status", r.status.as_str())
        .push("objective", f(r.objective))
        .push("feasibility_residual", f(r.feasibility_residual))
        .push("optimality_gap", f(r.optimality_gap))
        .push("iterations", r.iterations);
    if verbose {
        kv.push("dual", floats(&r.dual));
    }
}

fn dnsp_kv(v: &DnspVerdict, verbose: bool) -> KvBlock {
    let mut kv = KvBlock::new();
    kv.push("order", v.order)
        .push("method", v.method.as_str())
        .push("verdict", v.verdict.as_str())
        .push("trials_run", v.trials_run)
        .push("rank_a", v.rank_a);
    if let Some(cx) = &v.counterexample {
        kv.push("counterexample_support", list(&cx.support))
            .push("counterexample_error", f(cx.recovery_error));
        if verbose {
            kv.push("counterexample_coefficients", floats(&cx.coefficients))
                .push("counterexample_signal", floats(&cx.signal));
        }
    }
    kv
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let out = c.out.as_deref();
    match cli.command {
        Command::FrameInfo { frame: p } => {
            let fr = frame(&p)?;
            let st = frame_stats(&fr)?;
            let mut kv = KvBlock::new();
            kv.push("d", st.d)
                .push("n", st.n)
                .push("coherence", f(st.coherence))
                .push("A", f(st.lower_bound_a))
                .push("B", f(st.upper_bound_b))
                .push("spark", st.spark)
                .push("full_spark", st.full_spark)
                .push("nu_D", f(st.nu_d));
            emit(&kv.render(), out)
        }
        Command::CheckNsp { matrix, s } => {
            let s = need(s, "s", "check-nsp")?;
            let opts = nsp_options(c)?;
            let m = read_matrix(&matrix)?;
            let cert = nsp_check(&m, s, &opts)?;
            let mut kv = KvBlock::new();
            kv.push("order", cert.order)
                .push("holds", cert.holds)
                .push("worst_support", list(&cert.worst_support))
                .push("worst_value", f(cert.worst_value));
            if let Some(w) = &cert.witness {
                kv.push("witness", floats(w));
            }
            emit(&kv.render(), out)
        }
        Command::CheckDnsp { a, d, s, trials, seed } => {
            let s = need(s, "s", "check-dnsp")?;
            let opts = nsp_options(c)?;
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            if am.cols() != fr.d() {
                anyhow::bail!("A is {}x{} but D is {}x{}", am.rows(), am.cols(), fr.d(), fr.n());
            }
            let full = match is_full_spark_with_budget(&fr, c.budget) {
                Ok(b) => b,
                Err(dsynth_core::Error::CombinatorialBudgetExceeded { .. }) => false,
                Err(e) => return Err(e.into()),
            };
            let verdict = if full {
                dnsp_certify_fullspark(&am, &fr, s, &opts)?
            } else {
                let trials = need(trials, "trials", "check-dnsp on a frame without full spark")?;
                let seed = need(seed, "seed", "check-dnsp on a frame without full spark")?;
                dnsp_falsify(&am, &fr, s, trials, seed, &opts)?
            };
            let mut kv = dnsp_kv(&verdict, c.verbose);
            kv.push("full_spark", full);
            emit(&kv.render(), out)
        }
        Command::CheckInjectivity { a, d, s } => {
            let s = need(s, "s", "check-injectivity")?;
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            let ok = injectivity_check(&am, &fr, s, c.budget)?;
            let mut kv = KvBlock::new();
            kv.push("order", s).push("injective", ok);
            emit(&kv.render(), out)
        }
        Command::Solve { a, d, y, eps } => {
            let eps = need(eps, "eps", "solve")?;
            let opts = solver_options(c)?;
            let prefix = c.out.clone().unwrap_or_else(|| y.with_extension(""));
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            let yv = read_vector(&y)?;
            let r = l1_synthesis(&am, &fr, &yv, eps, &opts)?;
            let xp = with_suffix(&prefix, ".x.csv");
            let zp = with_suffix(&prefix, ".z.csv");
            write_vector(&xp, &r.coefficients.minimizer)?;
            write_vector(&zp, &r.signal)?;
            let mut kv = KvBlock::new();
            solver_kv(&mut kv, &r.coefficients, c.verbose);
            kv.push("x_path", xp.display()).push("z_path", zp.display());
            print!("{}", kv.render());
            Ok(())
        }
        Command::Analyze { a, d, y, eps } => {
            let eps = need(eps, "eps", "analyze")?;
            let opts = solver_options(c)?;
            let prefix = c.out.clone().unwrap_or_else(|| y.with_extension(""));
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            let yv = read_vector(&y)?;
            let r = l1_analysis(&am, &fr, &yv, eps, &opts)?;
            let zp = with_suffix(&prefix, ".z.csv");
            write_vector(&zp, &r.minimizer)?;
            let mut kv = KvBlock::new();
            solver_kv(&mut kv, &r, c.verbose);
            kv.push("z_path", zp.display());
            print!("{}", kv.render());
            Ok(())
        }
        Command::Oracle { a, d, y, s } => {
            let s = need(s, "s", "oracle")?;
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            let yv = read_vector(&y)?;
            let (x, k) = l0_oracle(&am, &fr, &yv, s, c.budget)?;
            let z = fr.matrix().matvec(&x)?;
            let mut kv = KvBlock::new();
            kv.push("sparsity", k).push("support", list(&support_of(&x)));
            match out {
                Some(prefix) => {
                    let xp = with_suffix(prefix, ".x.csv");
                    let zp = with_suffix(prefix, ".z.csv");
                    write_vector(&xp, &x)?;
                    write_vector(&zp, &z)?;
                    kv.push("x_path", xp.display()).push("z_path", zp.display());
                }
                None => {
                    kv.push("x", floats(&x)).push("z", floats(&z));
                }
            }
            print!("{}", kv.render());
            Ok(())
        }
        Command::Bounds { a, d, s, eps, x0, delta, samples, seed } => {
            let s = need(s, "s", "bounds")?;
            let eps = need(eps, "eps", "bounds")?;
            let am = read_matrix(&a)?;
            let fr = frame(&d)?;
            if am.cols() != fr.d() {
                anyhow::bail!("A is {}x{} but D is {}x{}", am.rows(), am.cols(), fr.d(), fr.n());
            }
            let ad = am.matmul(fr.matrix())?;
            let nullity = fr.n() - matcore::rank(&ad, DEFAULT_TOL)?;
            let exact = nullity <= EXACT_MAX_NULLITY && fr.n() <= EXACT_MAX_N;
            let seed = if exact {
                seed.unwrap_or(0)
            } else {
                need(seed, "seed", "bounds (sampled constant)")?
            };
            let x0v = match &x0 {
                Some(p) => read_vector(p)?,
                None => vec![0.0; fr.n()],
            };
            if x0v.len() != fr.n() {
                anyhow::bail!("x0 has length {} but D has {} columns", x0v.len(), fr.n());
            }
            let est = snsp_constant_estimate(&am, &fr, s, samples, seed)?;
            let inp = StabilityInputs {
                c: est.c_hat,
                nu_a: matcore::smallest_positive_singular(&am, DEFAULT_TOL)?,
                nu_d: matcore::smallest_positive_singular(fr.matrix(), DEFAULT_TOL)?,
                n: fr.n(),
                eps,
                delta,
                a_spectral: matcore::svd(&am)?.singular_values[0],
                x0_l1: norm1(&x0v),
                sigma_s_x0: best_s_term_residual(&x0v, s)?,
            };
            let nu_ad = matcore::smallest_positive_singular(&ad, DEFAULT_TOL)?;
            let mut kv = KvBlock::new();
            kv.push("c", f(inp.c)).push("c_mode", est.mode.as_str());
            if c.verbose {
                kv.push("c_worst_support", list(&est.worst_support))
                    .push("nu_A", f(inp.nu_a))
                    .push("nu_D", f(inp.nu_d))
                    .push("nu_AD", f(nu_ad))
                    .push("n", inp.n)
                    .push("eps", f(eps))
                    .push("delta", f(delta))
                    .push("A_spectral", f(inp.a_spectral))
                    .push("x0_l1", f(inp.x0_l1))
                    .push("sigma_s", f(inp.sigma_s_x0));
            }
            if inp.c > 0.0 && inp.c.is_finite() {
                let (rho, robust) = bound_theorem_robust(&inp)?;
                kv.push("signal_bound", f(bound_theorem_sta(&inp)?))
                    .push("coeff_bound_proof_form", f(bound_lemma_coeff(&inp, nu_ad)?))
                    .push("coeff_bound_statement_form", f(bound_lemma_coeff_statement_form(&inp, nu_ad)?))
                    .push("rho", f(rho))
                    .push("robust_bound", f(robust));
            } else {
                kv.push("signal_bound", "undefined");
            }
            emit(&kv.render(), out)
        }
        Command::Experiment { config, trials, seed } => {
            let mut cfg = match &config {
                Some(p) => read_config(p, ExperimentConfig::default()).map_err(|e| UsageError(e.to_string()))?,
                None => ExperimentConfig::default(),
            };
            let seeded = seed.is_some() || config_sets_seed(config.as_deref())?;
            if !seeded {
                return Err(UsageError("experiment requires --seed (or seed in --config)".into()).into());
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.solver = SolverOptions { rho: cfg.solver.rho, ..solver_options(c)? };
            cfg.validate().map_err(|e| UsageError(e.to_string()))?;
            let (table, wall) = run_experiment_timed(&cfg)?;
            emit(&format_report(&table, Some(wall)), out)
        }
        Command::DemoExample1 { d, eps, support, m, seed } => {
            let eps = need(eps, "eps", "demo-example1")?;
            let seed = need(seed, "seed", "demo-example1")?;
            let t = support.unwrap_or_else(|| vec![0, d]);
            let rec = run_example_demo(d, eps, &t, seed, m, &nsp_options(c)?)?;
            let mut kv = KvBlock::new();
            kv.push("d", rec.d)
                .push("eps", f(rec.eps))
                .push("m", rec.m)
                .push("support", list(&rec.support))
                .push("u_T_l1", f(rec.u_t_norm))
                .push("u_Tc_l1", f(rec.u_tc_norm))
                .push("premise_holds", rec.u_t_norm > rec.u_tc_norm)
                .push("candidates_tested", rec.candidates_tested)
                .push("witness_error", f(rec.witness_error))
                .push("worst_error", f(rec.worst_error))
                .push("worst_source", rec.worst_source.as_str())
                .push("worst_support", list(&rec.worst_support))
                .push("failure_threshold", f(rec.failure_threshold))
                .push("recovery_failed", rec.recovery_failed());
            if c.verbose {
                kv.push("worst_signal", floats(&rec.worst_signal));
            }
            emit(&kv.render(), out)
        }
    }
}

fn config_sets_seed(path: Option<&Path>) -> Result<bool> {
    let Some(p) = path else { return Ok(false) };
    let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
    Ok(text
        .lines()
        .filter_map(|l| l.split('#').next()?.split_once('='))
        .any(|(k, _)| k.trim() == "seed"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn support_of(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] != 0.0).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let verbose = cli.common.verbose;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            if verbose {
                eprintln!("error: {e:?}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}
