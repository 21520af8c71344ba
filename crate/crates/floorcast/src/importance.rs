//! Feature-importance distributions and the width-bottleneck floor.
//!
//! A width-`d_s` student keeps the `F_S = floor(d_s * g(alpha))` most
//! important features; everything past that index is dropped and each
//! dropped feature contributes `I_i * E[x_i^2]` to the loss floor.

use serde::{Deserialize, Serialize};

use crate::capacity::representable_features;
use crate::error::{FloorcastError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceKind {
    Zipf,
    PowerLaw,
    Empirical,
}

/// A materialized importance distribution, sorted descending.
///
/// Zipf and power-law kinds are normalized to sum 1; empirical values are
/// kept in their measured units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSpec {
    pub kind: ImportanceKind,
    pub n_features: u64,
    /// Power-law tail exponent; only meaningful for `PowerLaw`.
    pub beta: Option<f64>,
    pub values: Vec<f64>,
}

impl ImportanceSpec {
    /// `I_i proportional to 1/i`, normalized to sum 1.
    pub fn zipf(n_features: u64) -> Result<Self> {
        Self::from_ranks(ImportanceKind::Zipf, n_features, 1.0, None)
    }

    /// `I_i proportional to i^(-beta)`, normalized to sum 1.
    pub fn power_law(n_features: u64, beta: f64) -> Result<Self> {
        if beta <= 0.0 || beta.is_nan() {
            return Err(FloorcastError::InvalidArgument(format!(
                "power-law exponent must be positive, got {beta}"
            )));
        }
        Self::from_ranks(ImportanceKind::PowerLaw, n_features, beta, Some(beta))
    }

    /// Measured importances; sorted descending, units preserved.
    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FloorcastError::InvalidArgument(
                "empirical importance list is empty".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FloorcastError::InvalidArgument(
                "importances must be finite and non-negative".into(),
            ));
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        Ok(Self {
            kind: ImportanceKind::Empirical,
            n_features: values.len() as u64,
            beta: None,
            values,
        })
    }

    fn from_ranks(
        kind: ImportanceKind,
        n_features: u64,
        exponent: f64,
        beta: Option<f64>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(FloorcastError::InvalidArgument(
                "n_features must be >= 1".into(),
            ));
        }
        let mut values: Vec<f64> = (1..=n_features)
            .map(|rank| (rank as f64).powf(-exponent))
            .collect();
        let total: f64 = values.iter().sum();
        for v in &mut values {
            *v /= total;
        }
        Ok(Self {
            kind,
            n_features,
            beta,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    BernoulliUniform,
    Empirical,
}

/// Per-feature activation second moments plus the shared sparsity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationModel {
    pub kind: ActivationKind,
    pub alpha: f64,
    /// E[x_i^2] per feature.
    pub second_moments: Vec<f64>,
}

impl ActivationModel {
    /// Feature is 0 with probability alpha, else uniform on [0, 1]:
    /// `E[x^2] = (1 - alpha) / 3` for every feature.
    pub fn bernoulli_uniform(alpha: f64, n_features: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(FloorcastError::AlphaDomain(alpha));
        }
        let moment = (1.0 - alpha) / 3.0;
        Ok(Self {
            kind: ActivationKind::BernoulliUniform,
            alpha,
            second_moments: vec![moment; n_features as usize],
        })
    }

    pub fn empirical(alpha: f64, second_moments: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(FloorcastError::AlphaDomain(alpha));
        }
        if second_moments.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(FloorcastError::InvalidArgument(
                "second moments must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            kind: ActivationKind::Empirical,
            alpha,
            second_moments,
        })
    }
}

/// Predicted floor at one student width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPrediction {
    pub d_s: u64,
    pub f_kept: u64,
    pub f_dropped: u64,
    /// Importance-weighted mass of dropped features.
    pub floor_raw: f64,
    /// floor_raw relative to the curve's reference width (1.0 there).
    pub floor_normalized: f64,
}

/// Floor predictions across widths, normalized to one reference width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorCurve {
    pub predictions: Vec<FloorPrediction>,
    /// Set when the reference width's floor is zero and normalization is
    /// therefore meaningless (all normalized entries forced to 0).
    pub degenerate_reference: bool,
}

/// Importance-weighted mass of the features dropped at width `d_s`.
pub fn predicted_floor(
    importance: &ImportanceSpec,
    activation: &ActivationModel,
    d_s: u64,
) -> Result<FloorPrediction> {
    if activation.second_moments.len() != importance.values.len() {
        return Err(FloorcastError::LengthMismatch {
            left: importance.values.len(),
            right: activation.second_moments.len(),
            context: "importance vs second moments".into(),
        });
    }
    let f_kept = representable_features(d_s, activation.alpha, importance.n_features)?;
    let f_dropped = importance.n_features - f_kept;
    let floor_raw: f64 = importance.values[f_kept as usize..]
        .iter()
        .zip(&activation.second_moments[f_kept as usize..])
        .map(|(i, m)| i * m)
        .sum();
    Ok(FloorPrediction {
        d_s,
        f_kept,
        f_dropped,
        floor_raw,
        floor_normalized: f64::NAN, // filled in by floor_curve
    })
}

/// Predicted floors over `widths`, normalized by the floor at
/// `normalize_to` (defaults to the smallest width).
pub fn floor_curve(
    importance: &ImportanceSpec,
    activation: &ActivationModel,
    widths: &[u64],
    normalize_to: Option<u64>,
) -> Result<FloorCurve> {
    if widths.is_empty() {
        return Err(FloorcastError::InvalidArgument("widths is empty".into()));
    }
    let reference = match normalize_to {
        Some(w) => {
            if !widths.contains(&w) {
                return Err(FloorcastError::InvalidArgument(format!(
                    "normalization width {w} is not in the width list"
                )));
            }
            w
        }
        None => *widths.iter().min().expect("non-empty"),
    };
    let mut predictions: Vec<FloorPrediction> = widths
        .iter()
        .map(|&w| predicted_floor(importance, activation, w))
        .collect::<Result<_>>()?;
    normalize_floor_curve(&mut predictions, reference)
}

/// Normalization path shared with externally supplied raw floors.
pub fn normalize_floor_curve(
    predictions: &mut Vec<FloorPrediction>,
    reference_width: u64,
) -> Result<FloorCurve> {
    let reference = predictions
        .iter()
        .find(|p| p.d_s == reference_width)
        .ok_or_else(|| {
            FloorcastError::InvalidArgument(format!(
                "reference width {reference_width} not present"
            ))
        })?
        .floor_raw;
    let degenerate = reference == 0.0;
    for p in predictions.iter_mut() {
        p.floor_normalized = if degenerate { 0.0 } else { p.floor_raw / reference };
    }
    Ok(FloorCurve {
        predictions: std::mem::take(predictions),
        degenerate_reference: degenerate,
    })
}
