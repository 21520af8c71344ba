//! Superposition capacity: how many sparse features fit per hidden dimension.
//!
//! The capacity function `g(alpha) = 1 / ((1-alpha) ln(1/(1-alpha)))` comes
//! from the compressed-sensing phase transition. It is defined on (0, 1),
//! diverges at both endpoints, and attains its analytic minimum `e` at
//! `alpha = 1 - 1/e ≈ 0.632`. Above that point it is strictly increasing,
//! which covers every sparsity level used in practice (alpha >= 0.8).

use serde::{Deserialize, Serialize};

use crate::error::{FloorcastError, Result};

/// Sparsity at which `capacity_g` attains its minimum value `e`.
pub const ALPHA_AT_MIN_CAPACITY: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// Capacity summary for one (sparsity, feature count) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProfile {
    /// Feature inactivity rate, in [0, 1).
    pub alpha: f64,
    /// Features representable per hidden dimension.
    pub g: f64,
    /// Total feature count F.
    pub n_features: u64,
    /// Critical width d* = F / g(alpha).
    pub d_crit: f64,
}

impl CapacityProfile {
    pub fn new(alpha: f64, n_features: u64) -> Result<Self> {
        if n_features == 0 {
            return Err(FloorcastError::InvalidArgument(
                "n_features must be >= 1".into(),
            ));
        }
        let g = capacity_g(alpha)?;
        Ok(Self {
            alpha,
            g,
            n_features,
            d_crit: n_features as f64 / g,
        })
    }
}

/// Features representable per dimension at sparsity `alpha`.
///
/// Rejects `alpha <= 0` and `alpha >= 1`: the formula diverges at both ends
/// and experiments only ever probe the strictly sparse regime.
pub fn capacity_g(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FloorcastError::AlphaDomain(alpha));
    }
    let density = 1.0 - alpha;
    Ok(1.0 / (density * (1.0 / density).ln()))
}

/// Smallest width at which all `n_features` features fit: F / g(alpha).
pub fn critical_width(n_features: u64, alpha: f64) -> Result<f64> {
    if n_features == 0 {
        return Err(FloorcastError::InvalidArgument(
            "n_features must be >= 1".into(),
        ));
    }
    Ok(n_features as f64 / capacity_g(alpha)?)
}

/// Number of features a width-`d_s` bottleneck can carry:
/// `min(n_features, floor(d_s * g(alpha)))`.
pub fn representable_features(d_s: u64, alpha: f64, n_features: u64) -> Result<u64> {
    if d_s == 0 {
        return Err(FloorcastError::InvalidArgument("d_s must be >= 1".into()));
    }
    let capacity = (d_s as f64 * capacity_g(alpha)?).floor() as u64;
    Ok(capacity.min(n_features))
}
