//! Optional `key = value` settings file.
//!
//! Recognised keys: `quad.rel_tol`, `quad.max_nodes`, `plot.db_floor`.
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::path::Path;

use qi_core::QuadratureConfig;

use crate::CliError;

pub const DEFAULT_DB_FLOOR: f64 = -25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub quad: QuadratureConfig,
    pub db_floor: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            db_floor: DEFAULT_DB_FLOOR,
        }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading config {}", path.display()),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| CliError::Usage(format!("config line {}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let value = value.trim();
            match key.trim() {
                "quad.rel_tol" => {
                    let v: f64 = value.parse().map_err(|_| bad("quad.rel_tol must be a number"))?;
                    if !(v > 0.0 && v < 1.0) {
                        return Err(bad("quad.rel_tol must lie in (0, 1)"));
                    }
                    s.quad = s.quad.with_rel_tol(v);
                }
                "quad.max_nodes" => {
                    let v: usize = value.parse().map_err(|_| bad("quad.max_nodes must be a positive integer"))?;
                    if v < 15 {
                        return Err(bad("quad.max_nodes must be at least 15"));
                    }
                    s.quad = s.quad.with_max_evals(v);
                }
                "plot.db_floor" => {
                    let v: f64 = value.parse().map_err(|_| bad("plot.db_floor must be a number"))?;
                    if !(v.is_finite() && v < 0.0) {
                        return Err(bad("plot.db_floor must be finite and negative"));
                    }
                    s.db_floor = v;
                }
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        Ok(s)
    }
}
