//! Calibration between predicted floors (importance units) and observed
//! distillation floors (nats/token).
//!
//! The observed floor decomposes as `observed = C * predicted + B`: a
//! geometric term amplified through the network plus a width-independent
//! architectural baseline. All R^2 values use 1 - SSres/SStot with SStot
//! about the observed mean, so constrained fits can go negative.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FloorcastError, Result};
use crate::metrics::r_squared;

/// One (width, predicted floor, observed floor) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorPoint {
    pub d_s: u64,
    pub predicted: f64,
    pub observed: f64,
}

/// Calibration dataset; widths strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorDataset {
    pub points: Vec<FloorPoint>,
}

impl FloorDataset {
    pub fn new(points: Vec<FloorPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(FloorcastError::InvalidArgument(
                "need at least 2 calibration points".into(),
            ));
        }
        for pair in points.windows(2) {
            if pair[1].d_s <= pair[0].d_s {
                return Err(FloorcastError::InvalidArgument(
                    "widths must be strictly increasing".into(),
                ));
            }
        }
        for p in &points {
            if p.observed <= 0.0 || !p.observed.is_finite() {
                return Err(FloorcastError::InvalidArgument(format!(
                    "observed floor at d_s = {} must be positive",
                    p.d_s
                )));
            }
            if p.predicted < 0.0 || !p.predicted.is_finite() {
                return Err(FloorcastError::InvalidArgument(format!(
                    "predicted floor at d_s = {} must be non-negative",
                    p.d_s
                )));
            }
        }
        Ok(Self { points })
    }

    /// Read a (d_s, predicted, observed) CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for record in reader.deserialize() {
            points.push(record?);
        }
        Self::new(points)
    }

    fn predicted(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.predicted).collect()
    }

    fn observed(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.observed).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Affine,
    Origin,
    FixedB,
    PowerLaw,
}

/// Named parameters of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParams {
    Affine { c: f64, b: f64 },
    Origin { c: f64 },
    FixedB { c: f64, b: f64 },
    PowerLaw { a: f64, gamma: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: FitParams,
    pub r_squared: f64,
    /// observed - fitted, one per dataset point.
    pub residuals: Vec<f64>,
    /// False when the optimizer hit its budget or the fit is degenerate.
    pub converged: bool,
}

/// One row of the geometric/baseline decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub d_s: u64,
    pub observed: f64,
    /// C * predicted.
    pub geometric: f64,
    pub baseline: f64,
    /// geometric / observed * 100.
    pub pct_geometric: f64,
}

/// Ordinary least squares of observed on predicted: y = Cx + B.
pub fn fit_affine(data: &FloorDataset) -> Result<FitResult> {
    if data.points.len() < 3 {
        return Err(FloorcastError::InvalidArgument(
            "affine fit needs at least 3 points".into(),
        ));
    }
    let x = data.predicted();
    let y = data.observed();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(FloorcastError::DegenerateFit(
            "zero variance in predicted floors".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c = sxy / sxx;
    let b = my - c * mx;
    let fitted: Vec<f64> = x.iter().map(|v| c * v + b).collect();
    let (r2, converged) = match r_squared(&fitted, &y) {
        Ok(v) => (v, true),
        Err(_) => (f64::NAN, false),
    };
    Ok(FitResult {
        model: FitModel::Affine,
        params: FitParams::Affine { c, b },
        r_squared: r2,
        residuals: y.iter().zip(&fitted).map(|(o, f)| o - f).collect(),
        converged,
    })
}

/// Least squares through the origin: y = Cx, C = sum(xy)/sum(x^2).
pub fn fit_origin(data: &FloorDataset) -> Result<FitResult> {
    let x = data.predicted();
    let y = data.observed();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(FloorcastError::DegenerateFit(
            "all predicted floors are zero".into(),
        ));
    }
    let c = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let fitted: Vec<f64> = x.iter().map(|v| c * v).collect();
    let r2 = r_squared(&fitted, &y)?;
    Ok(FitResult {
        model: FitModel::Origin,
        params: FitParams::Origin { c },
        r_squared: r2,
        residuals: y.iter().zip(&fitted).map(|(o, f)| o - f).collect(),
        converged: true,
    })
}

/// Single-parameter fit y = Cx + b with b supplied (measured from a
/// control run). The control point -- the largest width -- is excluded
/// from the fit; residuals and R^2 still cover every point.
pub fn fit_fixed_b(data: &FloorDataset, b: f64) -> Result<FitResult> {
    let control = data
        .points
        .iter()
        .map(|p| p.d_s)
        .max()
        .expect("non-empty dataset");
    let included: Vec<&FloorPoint> = data.points.iter().filter(|p| p.d_s != control).collect();
    if included.is_empty() {
        return Err(FloorcastError::InvalidArgument(
            "no points remain after excluding the control width".into(),
        ));
    }
    let sxx: f64 = included.iter().map(|p| p.predicted * p.predicted).sum();
    if sxx == 0.0 {
        return Err(FloorcastError::DegenerateFit(
            "all included predicted floors are zero".into(),
        ));
    }
    let c = included
        .iter()
        .map(|p| p.predicted * (p.observed - b))
        .sum::<f64>()
        / sxx;
    let y = data.observed();
    let fitted: Vec<f64> = data.points.iter().map(|p| c * p.predicted + b).collect();
    let r2 = r_squared(&fitted, &y)?;
    Ok(FitResult {
        model: FitModel::FixedB,
        params: FitParams::FixedB { c, b },
        r_squared: r2,
        residuals: y.iter().zip(&fitted).map(|(o, f)| o - f).collect(),
        converged: true,
    })
}

/// Fit `observed = a * d_s^(-gamma) + b` by Nelder-Mead simplex descent
/// from a multistart grid of gamma values, with a, b >= 0 enforced by
/// projection. Ties between starts break toward lower gamma.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(FloorcastError::InvalidArgument(
            "power-law fit needs at least 4 points".into(),
        ));
    }
    if points.iter().any(|(d, y)| *d <= 0.0 || *y <= 0.0) {
        return Err(FloorcastError::InvalidArgument(
            "power-law fit needs positive widths and observations".into(),
        ));
    }
    let y: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let y_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_max == y_min {
        // constant observations: gamma is unidentifiable
        return Ok(FitResult {
            model: FitModel::PowerLaw,
            params: FitParams::PowerLaw {
                a: 0.0,
                gamma: 0.0,
                b: y_min,
            },
            r_squared: f64::NAN,
            residuals: y.iter().map(|v| v - y_min).collect(),
            converged: false,
        });
    }

    let sse = |p: &[f64; 3]| -> f64 {
        let [a, gamma, b] = project(*p);
        points
            .iter()
            .map(|(d, y)| {
                let f = a * d.powf(-gamma) + b;
                (y - f) * (y - f)
            })
            .sum()
    };

    let d_first = points[0].0;
    let mut best: Option<([f64; 3], f64, bool)> = None;
    let mut gamma0 = 0.2;
    while gamma0 <= 1.0 + 1e-9 {
        let b0 = 0.9 * y_min;
        let a0 = ((points[0].1 - b0) * d_first.powf(gamma0)).max(1e-12);
        let (candidate, f, converged) = nelder_mead([a0, gamma0, b0], &sse, 4000, 1e-14);
        let replace = match &best {
            None => true,
            Some((bp, bf, _)) => {
                f < *bf - 1e-15 || ((f - *bf).abs() <= 1e-15 && candidate[1] < bp[1])
            }
        };
        if replace {
            best = Some((candidate, f, converged));
        }
        gamma0 += 0.1;
    }
    let (raw, _, converged) = best.expect("at least one start");
    let [a, gamma, b] = project(raw);
    let fitted: Vec<f64> = points.iter().map(|(d, _)| a * d.powf(-gamma) + b).collect();
    let r2 = r_squared(&fitted, &y)?;
    Ok(FitResult {
        model: FitModel::PowerLaw,
        params: FitParams::PowerLaw { a, gamma, b },
        r_squared: r2,
        residuals: y.iter().zip(&fitted).map(|(o, f)| o - f).collect(),
        converged,
    })
}

fn project(p: [f64; 3]) -> [f64; 3] {
    [p[0].max(0.0), p[1], p[2].max(0.0)]
}

/// Minimal Nelder-Mead on R^3. Returns (best point, best value, converged).
fn nelder_mead(
    start: [f64; 3],
    f: &dyn Fn(&[f64; 3]) -> f64,
    max_iters: usize,
    tol: f64,
) -> ([f64; 3], f64, bool) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let mut simplex: Vec<[f64; 3]> = vec![start];
    for i in 0..3 {
        let mut v = start;
        let step = if v[i] != 0.0 { 0.1 * v[i].abs() } else { 0.05 };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite sse"));
        let (best, second_worst, worst) = (order[0], order[2], order[3]);
        if (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs()) {
            return (simplex[best], values[best], true);
        }

        let mut centroid = [0.0; 3];
        for &i in &order[..3] {
            for k in 0..3 {
                centroid[k] += simplex[i][k] / 3.0;
            }
        }
        let combine = |coef: f64| {
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = centroid[k] + coef * (centroid[k] - simplex[worst][k]);
            }
            p
        };

        let reflected = combine(REFLECT);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = combine(EXPAND);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = combine(-CONTRACT);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                let anchor = simplex[best];
                for i in 0..4 {
                    if i == best {
                        continue;
                    }
                    for k in 0..3 {
                        simplex[i][k] = anchor[k] + SHRINK * (simplex[i][k] - anchor[k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best_idx = 0;
    for i in 1..4 {
        if values[i] < values[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx], values[best_idx], false)
}

/// Split each observation into geometric (C * predicted) and baseline (B)
/// components.
pub fn decompose(data: &FloorDataset, c: f64, b: f64) -> Result<Vec<DecompositionRow>> {
    data.points
        .iter()
        .map(|p| {
            if p.observed <= 0.0 {
                return Err(FloorcastError::InvalidArgument(format!(
                    "observed floor at d_s = {} must be positive",
                    p.d_s
                )));
            }
            let geometric = c * p.predicted;
            Ok(DecompositionRow {
                d_s: p.d_s,
                observed: p.observed,
                geometric,
                baseline: b,
                pct_geometric: geometric / p.observed * 100.0,
            })
        })
        .collect()
}
