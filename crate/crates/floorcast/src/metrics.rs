//! Agreement metrics between predicted and measured floors.

use crate::error::{FloorcastError, Result};

/// Pearson correlation coefficient. Errors on degenerate variance.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FloorcastError::DegenerateFit(
            "zero variance in Pearson correlation".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Coefficient of determination of predictions `pred` against `actual`,
/// with SStot taken about the mean of `actual`. Can be negative.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(FloorcastError::DegenerateFit(
            "zero variance in observations".into(),
        ));
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean absolute percentage error, in percent. Requires nonzero actuals.
pub fn mape_percent(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    if actual.contains(&0.0) {
        return Err(FloorcastError::DegenerateFit(
            "zero actual value in MAPE".into(),
        ));
    }
    let total: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| ((p - a) / a).abs())
        .sum();
    Ok(100.0 * total / actual.len() as f64)
}

/// Per-point accuracy: max(0, 100 - absolute percentage error).
pub fn accuracy_percent(pred: f64, actual: f64) -> f64 {
    if actual == 0.0 {
        return 0.0;
    }
    (100.0 - 100.0 * ((pred - actual) / actual).abs()).max(0.0)
}

/// Median of a slice; None when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(FloorcastError::LengthMismatch {
            left: x.len(),
            right: y.len(),
            context: "metric inputs".into(),
        });
    }
    if x.len() < 2 {
        return Err(FloorcastError::InvalidArgument(
            "need at least 2 points".into(),
        ));
    }
    Ok(())
}
