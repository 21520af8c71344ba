//! C ABI over the floor-prediction core: capacity arithmetic, an opaque
//! floor-model handle, and the calibration fits. Every function returns an
//! [`FcStatus`]; results come back through out-pointers.

use std::slice;

use floorcast::calibrate::{fit_affine, fit_power_law, FitParams, FloorDataset, FloorPoint};
use floorcast::capacity::{capacity_g, critical_width, representable_features};
use floorcast::importance::{predicted_floor, ActivationModel, ImportanceSpec};
use floorcast::FloorcastError;

/// Status codes for every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    FcOk = 0,
    FcErrNullPointer = 1,
    FcErrInvalidArgument = 2,
    FcErrAlphaDomain = 3,
    FcErrNumeric = 4,
    FcErrDegenerateFit = 5,
}

fn status_of(err: &FloorcastError) -> FcStatus {
    match err {
        FloorcastError::AlphaDomain(_) => FcStatus::FcErrAlphaDomain,
        FloorcastError::Numeric(_) | FloorcastError::Diverged { .. } => FcStatus::FcErrNumeric,
        FloorcastError::DegenerateFit(_) => FcStatus::FcErrDegenerateFit,
        _ => FcStatus::FcErrInvalidArgument,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fc_status_message(status: FcStatus) -> *const std::os::raw::c_char {
    let msg: &'static [u8] = match status {
        FcStatus::FcOk => b"ok\0",
        FcStatus::FcErrNullPointer => b"null pointer argument\0",
        FcStatus::FcErrInvalidArgument => b"invalid argument\0",
        FcStatus::FcErrAlphaDomain => b"alpha outside (0, 1)\0",
        FcStatus::FcErrNumeric => b"numeric failure\0",
        FcStatus::FcErrDegenerateFit => b"degenerate fit\0",
    };
    msg.as_ptr() as *const std::os::raw::c_char
}

/// Features representable per hidden dimension at sparsity `alpha`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_capacity_g(alpha: f64, out: *mut f64) -> FcStatus {
    if out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    match capacity_g(alpha) {
        Ok(g) => {
            *out = g;
            FcStatus::FcOk
        }
        Err(e) => status_of(&e),
    }
}

/// Smallest width at which all `n_features` features fit.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_critical_width(
    n_features: u64,
    alpha: f64,
    out: *mut f64,
) -> FcStatus {
    if out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    match critical_width(n_features, alpha) {
        Ok(d) => {
            *out = d;
            FcStatus::FcOk
        }
        Err(e) => status_of(&e),
    }
}

/// min(n_features, floor(d_s * g(alpha))).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_representable_features(
    d_s: u64,
    alpha: f64,
    n_features: u64,
    out: *mut u64,
) -> FcStatus {
    if out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    match representable_features(d_s, alpha, n_features) {
        Ok(f) => {
            *out = f;
            FcStatus::FcOk
        }
        Err(e) => status_of(&e),
    }
}

/// Opaque floor model: an importance distribution plus activation moments.
pub struct FcFloorModel {
    importance: ImportanceSpec,
    activation: ActivationModel,
}

/// Zipf-importance model with Bernoulli-uniform activations.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives an owned handle
/// that must be released with `fc_floor_model_free`.
#[no_mangle]
pub unsafe extern "C" fn fc_floor_model_zipf(
    n_features: u64,
    alpha: f64,
    out: *mut *mut FcFloorModel,
) -> FcStatus {
    if out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    let importance = match ImportanceSpec::zipf(n_features) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    let activation = match ActivationModel::bernoulli_uniform(alpha, n_features) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    *out = Box::into_raw(Box::new(FcFloorModel {
        importance,
        activation,
    }));
    FcStatus::FcOk
}

/// Model from measured importances (sorted internally) with unit second
/// moments, as used for SAE-derived predictions.
///
/// # Safety
/// `importance` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_floor_model_empirical(
    importance: *const f64,
    len: usize,
    alpha: f64,
    out: *mut *mut FcFloorModel,
) -> FcStatus {
    if importance.is_null() || out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    let values = slice::from_raw_parts(importance, len).to_vec();
    let importance = match ImportanceSpec::empirical(values) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    let moments = vec![1.0; importance.n_features as usize];
    let activation = match ActivationModel::empirical(alpha, moments) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    *out = Box::into_raw(Box::new(FcFloorModel {
        importance,
        activation,
    }));
    FcStatus::FcOk
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle from a constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn fc_floor_model_free(model: *mut FcFloorModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicted floor at width `d_s`.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_floor_model_predict(
    model: *const FcFloorModel,
    d_s: u64,
    out: *mut f64,
) -> FcStatus {
    if model.is_null() || out.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    let model = &*model;
    match predicted_floor(&model.importance, &model.activation, d_s) {
        Ok(p) => {
            *out = p.floor_raw;
            FcStatus::FcOk
        }
        Err(e) => status_of(&e),
    }
}

fn dataset_from_raw(
    d_s: *const u64,
    predicted: *const f64,
    observed: *const f64,
    len: usize,
) -> std::result::Result<FloorDataset, FcStatus> {
    if d_s.is_null() || predicted.is_null() || observed.is_null() {
        return Err(FcStatus::FcErrNullPointer);
    }
    let (d_s, predicted, observed) = unsafe {
        (
            slice::from_raw_parts(d_s, len),
            slice::from_raw_parts(predicted, len),
            slice::from_raw_parts(observed, len),
        )
    };
    let points = d_s
        .iter()
        .zip(predicted)
        .zip(observed)
        .map(|((&d_s, &predicted), &observed)| FloorPoint {
            d_s,
            predicted,
            observed,
        })
        .collect();
    FloorDataset::new(points).map_err(|e| status_of(&e))
}

/// OLS of observed on predicted floors: observed = C * predicted + B.
///
/// # Safety
/// The three arrays must each hold `len` readable elements; the out
/// pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_fit_affine(
    d_s: *const u64,
    predicted: *const f64,
    observed: *const f64,
    len: usize,
    out_c: *mut f64,
    out_b: *mut f64,
    out_r_squared: *mut f64,
) -> FcStatus {
    if out_c.is_null() || out_b.is_null() || out_r_squared.is_null() {
        return FcStatus::FcErrNullPointer;
    }
    let data = match dataset_from_raw(d_s, predicted, observed, len) {
        Ok(d) => d,
        Err(s) => return s,
    };
    match fit_affine(&data) {
        Ok(fit) => {
            if let FitParams::Affine { c, b } = fit.params {
                *out_c = c;
                *out_b = b;
                *out_r_squared = fit.r_squared;
                FcStatus::FcOk
            } else {
                FcStatus::FcErrNumeric
            }
        }
        Err(e) => status_of(&e),
    }
}

/// Fit observed = a * d_s^-gamma + b.
///
/// # Safety
/// `d_s` and `observed` must each hold `len` readable elements; the out
/// pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_fit_power_law(
    d_s: *const f64,
    observed: *const f64,
    len: usize,
    out_a: *mut f64,
    out_gamma: *mut f64,
    out_b: *mut f64,
    out_r_squared: *mut f64,
) -> FcStatus {
    if d_s.is_null()
        || observed.is_null()
        || out_a.is_null()
        || out_gamma.is_null()
        || out_b.is_null()
        || out_r_squared.is_null()
    {
        return FcStatus::FcErrNullPointer;
    }
    let points: Vec<(f64, f64)> = slice::from_raw_parts(d_s, len)
        .iter()
        .zip(slice::from_raw_parts(observed, len))
        .map(|(&d, &o)| (d, o))
        .collect();
    match fit_power_law(&points) {
        Ok(fit) => {
            if let FitParams::PowerLaw { a, gamma, b } = fit.params {
                *out_a = a;
                *out_gamma = gamma;
                *out_b = b;
                *out_r_squared = fit.r_squared;
                FcStatus::FcOk
            } else {
                FcStatus::FcErrNumeric
            }
        }
        Err(e) => status_of(&e),
    }
}
