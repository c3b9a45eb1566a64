//! `key = value` experiment configuration. Lists are comma-separated,
//! `#` starts a comment, unknown keys are rejected.

use std::path::Path;

use dsynth_core::experiments::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue { line: usize, key: String, value: String },
}

pub const KEYS: &[&str] = &[
    "d",
    "m",
    "trials",
    "sparsity_levels",
    "perturbations",
    "noise_eps",
    "seed",
    "feas_tol",
    "opt_tol",
    "max_iter",
    "rho",
    "failure_threshold",
];

fn list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// Applies the assignments in `text` on top of `base`.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: line_no, msg: format!("expected key = value, got {line:?}") });
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = || ConfigError::BadValue { line: line_no, key: key.into(), value: value.into() };
        match key {
            "d" => cfg.d = value.parse().map_err(|_| bad())?,
            "m" => cfg.m = value.parse().map_err(|_| bad())?,
            "trials" => cfg.trials = value.parse().map_err(|_| bad())?,
            "sparsity_levels" => cfg.sparsity_levels = list(value).ok_or_else(bad)?,
            "perturbations" => cfg.perturbations = list(value).ok_or_else(bad)?,
            "noise_eps" => cfg.noise_eps = value.parse().map_err(|_| bad())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
            "feas_tol" => cfg.solver.feas_tol = value.parse().map_err(|_| bad())?,
            "opt_tol" => cfg.solver.opt_tol = value.parse().map_err(|_| bad())?,
            "max_iter" => cfg.solver.max_iter = value.parse().map_err(|_| bad())?,
            "rho" => cfg.solver.rho = value.parse().map_err(|_| bad())?,
            "failure_threshold" => cfg.failure_threshold = value.parse().map_err(|_| bad())?,
            _ => return Err(ConfigError::UnknownKey { line: line_no, key: key.into() }),
        }
    }
    Ok(cfg)
}

pub fn read_config(path: &Path, base: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text, base)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Inverse of [`parse_config`]; every key is written.
pub fn render_config(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    vec![
        ("d", cfg.d.to_string()),
        ("m", cfg.m.to_string()),
        ("trials", cfg.trials.to_string()),
        ("sparsity_levels", join(&cfg.sparsity_levels)),
        ("perturbations", join(&cfg.perturbations)),
        ("noise_eps", cfg.noise_eps.to_string()),
        ("seed", cfg.seed.to_string()),
        ("feas_tol", cfg.solver.feas_tol.to_string()),
        ("opt_tol", cfg.solver.opt_tol.to_string()),
        ("max_iter", cfg.solver.max_iter.to_string()),
        ("rho", cfg.solver.rho.to_string()),
        ("failure_threshold", cfg.failure_threshold.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_comments() {
        let text = "# scaled run\nd = 20\nsparsity_levels = 1, 2,3\nperturbations = 0,1e-3 # two rows\nseed=7\n";
        let cfg = parse_config(text, ExperimentConfig::default()).unwrap();
        assert_eq!((cfg.d, cfg.seed), (20, 7));
        assert_eq!(cfg.sparsity_levels, vec![1, 2, 3]);
        assert_eq!(cfg.perturbations, vec![0.0, 1e-3]);
        assert_eq!(cfg.m, 30);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = parse_config("d = 5\ncolour = red\n", ExperimentConfig::default()).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 2, .. }));
        let e = parse_config("trials = many\n", ExperimentConfig::default()).unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { line: 1, .. }));
        assert!(parse_config("just words\n", ExperimentConfig::default()).is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = ExperimentConfig { seed: 99, noise_eps: 0.25, ..Default::default() };
        cfg.solver.max_iter = 77;
        let text: String = render_config(&cfg).iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(parse_config(&text, ExperimentConfig::default()).unwrap(), cfg);
        assert_eq!(render_config(&cfg).len(), KEYS.len());
    }
}
