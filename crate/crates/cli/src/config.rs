//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt;
use std::path::Path;

use paircorr_core::certio::{self, DEFAULT_DECIMALS};
use paircorr_core::{FunctionalKind, SearchConfig, SeriesTruncation};

/// A configuration problem; always reported as a usage error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Everything a command needs besides its paths.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: FunctionalKind,
    pub search: SearchConfig,
    /// Precision of the interval verification.
    pub verify_precision: u32,
    /// Significant digits written to certificate files.
    pub decimals: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(kind: FunctionalKind) -> Self {
        RunConfig {
            kind,
            search: SearchConfig::for_kind(kind),
            verify_precision: paircorr_core::mp::DEFAULT_PRECISION,
            decimals: DEFAULT_DECIMALS,
            seed: 0,
        }
    }

    /// Sets the final-solve and verification precision together.
    pub fn set_precision(&mut self, bits: u32) -> Result<(), ConfigError> {
        if bits < 64 {
            return Err(ConfigError(format!("precision must be at least 64 bits, got {bits}")));
        }
        self.search.final_solver.precision = bits;
        self.verify_precision = bits;
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("config line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value.trim()).map_err(|e| ConfigError(format!("config line {}: {e}", no + 1)))?;
        }
        self.search.validate().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = &mut self.search;
        match key {
            "r_lo" => s.r_bracket.0 = num(key, value)?,
            "r_hi" => s.r_bracket.1 = num(key, value)?,
            "brent_tol" => s.brent_tol = num(key, value)?,
            "lambda_lo" => s.lambda_bracket.0 = num(key, value)?,
            "lambda_hi" => s.lambda_bracket.1 = num(key, value)?,
            "lambda_tol" => s.lambda_tol = num(key, value)?,
            "resolve_margin" => s.resolve_margin = num(key, value)?,
            "lambda_bump" => s.lambda_bump = num(key, value)?,
            "resolve_retries" => s.resolve_retries = num(key, value)?,
            "max_evaluations" => s.max_evaluations = num(key, value)?,
            "search_precision" => s.search_solver.precision = num(key, value)?,
            "search_gap" => s.search_solver.gap_tolerance = num(key, value)?,
            "search_iterations" => s.search_solver.max_iterations = num(key, value)?,
            "final_precision" => s.final_solver.precision = num(key, value)?,
            "final_gap" => s.final_solver.gap_tolerance = num(key, value)?,
            "final_iterations" => s.final_solver.max_iterations = num(key, value)?,
            "series_terms" => {
                s.truncation = SeriesTruncation::new(num(key, value)?, s.truncation.tail_bound.clone())
                    .map_err(|e| ConfigError(e.to_string()))?
            }
            "series_tail" => {
                s.truncation.tail_bound = certio::parse_decimal(value)
                    .ok_or_else(|| ConfigError(format!("{key}: not a decimal: {value}")))?
            }
            "progress" => s.progress = num(key, value)?,
            "precision" => self.set_precision(num(key, value)?)?,
            "verify_precision" => self.verify_precision = num(key, value)?,
            "decimals" => self.decimals = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(ConfigError(format!("unknown key {key}"))),
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError(format!("{key}: cannot parse {value:?}")))
}

/// Degrees named by a sweep range: `d=4..12`, `4..12:2` or `6,8,10`.
pub fn parse_sweep(spec: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = || ConfigError(format!("bad sweep range {spec:?}"));
    let body = spec.trim().strip_prefix("d=").unwrap_or(spec.trim());
    let ds: Vec<usize> = if let Some((range, step)) = body.split_once("..").map(|(a, rest)| {
        let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
        ((a, b), step)
    }) {
        let lo: usize = range.0.trim().parse().map_err(|_| bad())?;
        let hi: usize = range.1.trim().parse().map_err(|_| bad())?;
        let step: usize = step.trim().parse().map_err(|_| bad())?;
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        body.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if ds.is_empty() || ds.contains(&0) {
        return Err(bad());
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_ranges() {
        assert_eq!(parse_sweep("d=4..8").unwrap(), [4, 5, 6, 7, 8]);
        assert_eq!(parse_sweep("6..12:2").unwrap(), [6, 8, 10, 12]);
        assert_eq!(parse_sweep("3,5").unwrap(), [3, 5]);
        for bad in ["d=8..4", "4..8:0", "0..2", "x", ""] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_overrides_defaults() {
        let mut cfg = RunConfig::new(FunctionalKind::Z);
        cfg.apply_text("# comment\nbrent_tol = 1e-4\nr_hi=1.5 # trailing\nprecision = 320\n").unwrap();
        assert_eq!(cfg.search.brent_tol, 1e-4);
        assert_eq!(cfg.search.r_bracket, (1.0, 1.5));
        assert_eq!(cfg.search.final_solver.precision, 320);
        assert_eq!(cfg.verify_precision, 320);
        assert!(cfg.apply_text("nonsense = 1").is_err());
        assert!(cfg.apply_text("brent_tol").is_err());
        assert!(cfg.apply_text("r_lo = 2.0").is_err());
        assert!(cfg.apply_text("precision = 32").is_err());
    }
}
