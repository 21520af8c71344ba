//! Ingest sparse-autoencoder measurement files and derive the teacher's
//! capacity summary and floor-prediction inputs.
//!
//! File schema (attribute-value text, `#` comments allowed):
//!
//! ```text
//! schema_version = 1
//! layer = 12
//! d_model = 1024
//! token_count = 300000000
//! importance = [0.5, 0.25, ...]
//! activation_freq = [0.01, 0.002, ...]
//! ```
//!
//! Importance is the feature's mean squared activation E[z_i^2]; in these
//! units it already carries the activation magnitude, so floor predictions
//! sum the measured importances directly (unit second moments).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::capacity_g;
use crate::error::{FloorcastError, Result};
use crate::importance::{ActivationModel, ImportanceSpec};

pub const SCHEMA_VERSION: u64 = 1;

/// Default activation-frequency threshold for counting a feature alive.
pub const DEFAULT_ALIVE_THRESHOLD: f64 = 1e-5;

/// Per-feature measurements from one trained SAE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaeStats {
    pub layer: i64,
    pub d_model: u64,
    pub token_count: u64,
    /// I_i = E[z_i^2] per feature.
    pub importance: Vec<f64>,
    /// Fraction of tokens on which each feature fires.
    pub activation_freq: Vec<f64>,
}

/// Capacity summary derived from SAE measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaeSummary {
    pub n_alive: u64,
    pub avg_l0: f64,
    pub alpha: f64,
    pub g: f64,
    pub d_crit: f64,
}

impl SaeStats {
    fn validate(&self, path: &str) -> Result<()> {
        let fail = |message: String| FloorcastError::Parse {
            path: path.to_string(),
            line: 0,
            message,
        };
        if self.importance.is_empty() {
            return Err(fail("no features".into()));
        }
        if self.importance.len() != self.activation_freq.len() {
            return Err(FloorcastError::LengthMismatch {
                left: self.importance.len(),
                right: self.activation_freq.len(),
                context: "importance vs activation_freq".into(),
            });
        }
        if self.d_model == 0 || self.token_count == 0 {
            return Err(fail("d_model and token_count must be positive".into()));
        }
        for (i, v) in self.importance.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(fail(format!("importance[{i}] = {v} is negative or non-finite")));
            }
        }
        for (i, f) in self.activation_freq.iter().enumerate() {
            if !f.is_finite() || !(0.0..=1.0).contains(f) {
                return Err(fail(format!(
                    "activation_freq[{i}] = {f} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Load and validate an SAE stats file.
pub fn load_sae_stats(path: &Path) -> Result<SaeStats> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut schema_version: Option<u64> = None;
    let mut layer: Option<i64> = None;
    let mut d_model: Option<u64> = None;
    let mut token_count: Option<u64> = None;
    let mut importance: Option<Vec<f64>> = None;
    let mut activation_freq: Option<Vec<f64>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let err = |message: String| FloorcastError::Parse {
            path: path_str.clone(),
            line: lineno,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let value = value.trim();
        match key.trim() {
            "schema_version" => {
                schema_version =
                    Some(value.parse().map_err(|e| err(format!("schema_version: {e}")))?)
            }
            "layer" => layer = Some(value.parse().map_err(|e| err(format!("layer: {e}")))?),
            "d_model" => d_model = Some(value.parse().map_err(|e| err(format!("d_model: {e}")))?),
            "token_count" => {
                token_count = Some(value.parse().map_err(|e| err(format!("token_count: {e}")))?)
            }
            "importance" => importance = Some(parse_array(value).map_err(err)?),
            "activation_freq" => activation_freq = Some(parse_array(value).map_err(err)?),
            other => return Err(err(format!("unknown field `{other}`"))),
        }
    }

    let missing = |field: &str| FloorcastError::Parse {
        path: path_str.clone(),
        line: 0,
        message: format!("missing field `{field}`"),
    };
    let found = schema_version.ok_or_else(|| missing("schema_version"))?;
    if found != SCHEMA_VERSION {
        return Err(FloorcastError::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let stats = SaeStats {
        layer: layer.ok_or_else(|| missing("layer"))?,
        d_model: d_model.ok_or_else(|| missing("d_model"))?,
        token_count: token_count.ok_or_else(|| missing("token_count"))?,
        importance: importance.ok_or_else(|| missing("importance"))?,
        activation_freq: activation_freq.ok_or_else(|| missing("activation_freq"))?,
    };
    stats.validate(&path_str)?;
    Ok(stats)
}

fn parse_array(value: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| "expected `[v, v, ...]`".to_string())?;
    let inner = inner.trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{e}: `{v}`")))
        .collect()
}

/// Write an SAE stats file; floats use shortest round-trip formatting so
/// `load(save(stats)) == stats` exactly.
pub fn save_sae_stats(path: &Path, stats: &SaeStats) -> Result<()> {
    let fmt_array = |values: &[f64]| {
        let parts: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        format!("[{}]", parts.join(", "))
    };
    let text = format!(
        "schema_version = {}\nlayer = {}\nd_model = {}\ntoken_count = {}\nimportance = {}\nactivation_freq = {}\n",
        SCHEMA_VERSION,
        stats.layer,
        stats.d_model,
        stats.token_count,
        fmt_array(&stats.importance),
        fmt_array(&stats.activation_freq),
    );
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Capacity summary over features alive at `alive_threshold`.
///
/// `avg_l0` is the expected number of simultaneously active alive features
/// per token (sum of alive frequencies); `alpha = 1 - avg_l0 / n_alive`.
pub fn summarize(stats: &SaeStats, alive_threshold: f64) -> Result<SaeSummary> {
    let alive: Vec<usize> = (0..stats.activation_freq.len())
        .filter(|&i| stats.activation_freq[i] > alive_threshold)
        .collect();
    if alive.is_empty() {
        return Err(FloorcastError::Numeric(format!(
            "no features alive at threshold {alive_threshold}"
        )));
    }
    let n_alive = alive.len() as u64;
    let avg_l0: f64 = alive.iter().map(|&i| stats.activation_freq[i]).sum();
    let alpha = 1.0 - avg_l0 / n_alive as f64;
    let g = capacity_g(alpha)?;
    Ok(SaeSummary {
        n_alive,
        avg_l0,
        alpha,
        g,
        d_crit: n_alive as f64 / g,
    })
}

/// Prediction inputs over alive features: measured importances sorted
/// descending, with unit second moments (E[z^2] already carries the
/// activation magnitude in these units).
pub fn to_prediction_inputs(
    stats: &SaeStats,
    alive_threshold: f64,
) -> Result<(ImportanceSpec, ActivationModel)> {
    let summary = summarize(stats, alive_threshold)?;
    let alive_importance: Vec<f64> = stats
        .importance
        .iter()
        .zip(&stats.activation_freq)
        .filter(|(_, f)| **f > alive_threshold)
        .map(|(i, _)| *i)
        .collect();
    let importance = ImportanceSpec::empirical(alive_importance)?;
    let moments = vec![1.0; importance.n_features as usize];
    let activation = ActivationModel::empirical(summary.alpha, moments)?;
    Ok((importance, activation))
}
