//! From-scratch trainer for the tied-weight sparse-feature autoencoder.
//!
//! The model encodes `x` in `R^n` to `h = W x` in `R^d` and decodes
//! `x_hat = ReLU(W^T h + b)`. Training minimizes the importance-weighted
//! reconstruction loss on freshly sampled batches; the converged loss is
//! the measured floor for that width.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FloorcastError, Result};
use crate::importance::ImportanceSpec;

/// Steps between evaluation-loss measurements.
pub const EVAL_INTERVAL: u64 = 20;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRunConfig {
    pub config_id: String,
    pub n_features: u64,
    pub d_hidden: u64,
    pub alpha: f64,
    pub importance: ImportanceSpec,
    pub seed: u64,
    pub steps: u64,
    pub batch_size: u64,
    pub learning_rate: f64,
    /// Fraction of recorded evaluations (from the end) averaged into the floor.
    pub eval_fraction: f64,
}

impl ToyRunConfig {
    pub fn new(
        n_features: u64,
        d_hidden: u64,
        alpha: f64,
        importance: ImportanceSpec,
        seed: u64,
    ) -> Self {
        Self {
            config_id: format!("n{n_features}_d{d_hidden}_a{alpha}_s{seed}"),
            n_features,
            d_hidden,
            alpha,
            importance,
            seed,
            steps: 2000,
            batch_size: 1024,
            learning_rate: 1e-3,
            eval_fraction: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d_hidden == 0 || self.d_hidden > self.n_features {
            return Err(FloorcastError::InvalidArgument(format!(
                "d_hidden must be in 1..=n_features, got {} vs {}",
                self.d_hidden, self.n_features
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FloorcastError::AlphaDomain(self.alpha));
        }
        if self.importance.n_features != self.n_features {
            return Err(FloorcastError::LengthMismatch {
                left: self.n_features as usize,
                right: self.importance.n_features as usize,
                context: "config n_features vs importance".into(),
            });
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(FloorcastError::InvalidArgument(
                "steps and batch_size must be >= 1".into(),
            ));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction <= 1.0) {
            return Err(FloorcastError::InvalidArgument(format!(
                "eval_fraction must be in (0, 1], got {}",
                self.eval_fraction
            )));
        }
        Ok(())
    }
}

/// Encoder weights (row-major d x n) and output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub d_hidden: usize,
    pub n_features: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl ModelState {
    pub fn zeros(d_hidden: usize, n_features: usize) -> Self {
        Self {
            d_hidden,
            n_features,
            w: vec![0.0; d_hidden * n_features],
            b: vec![0.0; n_features],
        }
    }

    /// W ~ uniform(-1/sqrt(n), 1/sqrt(n)), b = 0.
    pub fn init(d_hidden: usize, n_features: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (n_features as f64).sqrt();
        let w = (0..d_hidden * n_features)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self {
            d_hidden,
            n_features,
            w,
            b: vec![0.0; n_features],
        }
    }
}

/// Gradient of the weighted loss with respect to `ModelState`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// A flat batch of samples, row-major (batch_size x n_features).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub data: Vec<f64>,
    pub n_features: usize,
    pub batch_size: usize,
}

impl Batch {
    pub fn sample(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.n_features..(idx + 1) * self.n_features]
    }
}

/// One measured floor (single seed unless aggregated by the sweep).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorMeasurement {
    pub config_id: String,
    pub actual_floor: f64,
    pub floor_std: f64,
    pub n_seeds: u64,
    pub loss_history: Vec<(u64, f64)>,
}

/// Derive an independent RNG stream from (seed, config_id) so results do
/// not depend on scheduling order.
pub fn run_rng(seed: u64, config_id: &str) -> ChaCha8Rng {
    // FNV-1a over the id, then splitmix64 to spread the bits.
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in config_id.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Each coordinate is 0 with probability `alpha`, else uniform on [0, 1].
pub fn generate_batch(
    alpha: f64,
    n_features: u64,
    batch_size: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Batch> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FloorcastError::AlphaDomain(alpha));
    }
    let n = n_features as usize;
    let b = batch_size as usize;
    let mut data = vec![0.0; n * b];
    for v in &mut data {
        if rng.gen::<f64>() >= alpha {
            *v = rng.gen::<f64>();
        }
    }
    Ok(Batch {
        data,
        n_features: n,
        batch_size: b,
    })
}

/// Single-sample forward pass: returns (h, x_hat).
pub fn forward(state: &ModelState, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != state.n_features {
        return Err(FloorcastError::LengthMismatch {
            left: x.len(),
            right: state.n_features,
            context: "input vs model width".into(),
        });
    }
    let (d, n) = (state.d_hidden, state.n_features);
    let mut h = vec![0.0; d];
    for k in 0..d {
        let row = &state.w[k * n..(k + 1) * n];
        h[k] = row.iter().zip(x).map(|(w, x)| w * x).sum();
    }
    let mut pre = state.b.clone();
    for k in 0..d {
        let row = &state.w[k * n..(k + 1) * n];
        let hk = h[k];
        for (p, w) in pre.iter_mut().zip(row) {
            *p += hk * w;
        }
    }
    let x_hat = pre.iter().map(|p| p.max(0.0)).collect();
    Ok((h, x_hat))
}

/// Mean over the batch of `sum_i I_i (x_i - x_hat_i)^2`.
pub fn weighted_loss(x: &Batch, x_hat: &Batch, importance: &ImportanceSpec) -> Result<f64> {
    if x.data.len() != x_hat.data.len() || x.n_features != importance.values.len() {
        return Err(FloorcastError::LengthMismatch {
            left: x.data.len(),
            right: x_hat.data.len(),
            context: "batch vs reconstruction vs importance".into(),
        });
    }
    let mut total = 0.0;
    for s in 0..x.batch_size {
        let xs = x.sample(s);
        let rs = x_hat.sample(s);
        for ((xi, ri), imp) in xs.iter().zip(rs).zip(&importance.values) {
            let e = xi - ri;
            total += imp * e * e;
        }
    }
    Ok(total / x.batch_size as f64)
}

/// Fused batch loss and gradient. The gradient path is the bottleneck of
/// the whole sweep, so the dense inner loops stay branch-free and the
/// sparse input is exploited where it can be.
fn loss_and_grad(
    state: &ModelState,
    batch: &Batch,
    importance: &ImportanceSpec,
    grad_out: Option<&mut Gradient>,
) -> Result<f64> {
    if batch.n_features != state.n_features || importance.values.len() != state.n_features {
        return Err(FloorcastError::LengthMismatch {
            left: batch.n_features,
            right: state.n_features,
            context: "batch vs model".into(),
        });
    }
    let (d, n) = (state.d_hidden, state.n_features);
    let inv_b = 1.0 / batch.batch_size as f64;
    let mut loss = 0.0;

    let mut gw: Vec<f64> = Vec::new();
    let mut gb: Vec<f64> = Vec::new();
    let wants_grad = grad_out.is_some();
    if wants_grad {
        gw = vec![0.0; d * n];
        gb = vec![0.0; n];
    }

    let mut h = vec![0.0; d];
    let mut pre = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut u = vec![0.0; d];
    // (index, value) pairs of active inputs in the current sample
    let mut active: Vec<(usize, f64)> = Vec::with_capacity(n);

    for s in 0..batch.batch_size {
        let x = batch.sample(s);
        active.clear();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                active.push((j, xj));
            }
        }

        // h = W x over active coordinates only
        for k in 0..d {
            let row = &state.w[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for &(j, xj) in &active {
                acc += row[j] * xj;
            }
            h[k] = acc;
        }

        // pre = W^T h + b
        pre.copy_from_slice(&state.b);
        for k in 0..d {
            let row = &state.w[k * n..(k + 1) * n];
            let hk = h[k];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += hk * w;
            }
        }

        // loss and backprop signal delta = 2 I (x_hat - x) * relu'(pre)
        for i in 0..n {
            let x_hat = pre[i].max(0.0);
            let err = x_hat - x[i];
            loss += importance.values[i] * err * err;
            delta[i] = if pre[i] > 0.0 {
                2.0 * importance.values[i] * err
            } else {
                0.0
            };
        }

        if wants_grad {
            // grad_b += delta
            for (g, dl) in gb.iter_mut().zip(&delta) {
                *g += dl;
            }
            // grad_W += outer(h, delta) + outer(W delta, x)
            for k in 0..d {
                let row = &state.w[k * n..(k + 1) * n];
                u[k] = row.iter().zip(&delta).map(|(w, dl)| w * dl).sum();
            }
            for k in 0..d {
                let grow = &mut gw[k * n..(k + 1) * n];
                let hk = h[k];
                for (g, dl) in grow.iter_mut().zip(&delta) {
                    *g += hk * dl;
                }
                let uk = u[k];
                for &(j, xj) in &active {
                    grow[j] += uk * xj;
                }
            }
        }
    }

    if let Some(out) = grad_out {
        for g in &mut gw {
            *g *= inv_b;
        }
        for g in &mut gb {
            *g *= inv_b;
        }
        out.w = gw;
        out.b = gb;
    }
    Ok(loss * inv_b)
}

/// Exact analytic gradient of `weighted_loss` w.r.t. W and b, averaged
/// over the batch. ReLU subgradient at exactly 0 is taken as 0.
pub fn grad(state: &ModelState, batch: &Batch, importance: &ImportanceSpec) -> Result<Gradient> {
    let mut g = Gradient {
        w: Vec::new(),
        b: Vec::new(),
    };
    loss_and_grad(state, batch, importance, Some(&mut g))?;
    Ok(g)
}

/// Batch loss without the gradient.
pub fn batch_loss(state: &ModelState, batch: &Batch, importance: &ImportanceSpec) -> Result<f64> {
    loss_and_grad(state, batch, importance, None)
}

/// Train one seed to convergence and estimate its loss floor.
///
/// The floor is the mean evaluation loss (on freshly drawn batches) over
/// the final `eval_fraction` of recorded evaluations. Non-finite loss is a
/// hard error, never clipped.
pub fn train(config: &ToyRunConfig) -> Result<FloorMeasurement> {
    config.validate()?;
    let (d, n) = (config.d_hidden as usize, config.n_features as usize);
    let mut rng = run_rng(config.seed, &config.config_id);
    let mut state = ModelState::init(d, n, &mut rng);

    let mut m = Gradient {
        w: vec![0.0; d * n],
        b: vec![0.0; n],
    };
    let mut v = Gradient {
        w: vec![0.0; d * n],
        b: vec![0.0; n],
    };
    let mut g = Gradient {
        w: Vec::new(),
        b: Vec::new(),
    };

    let mut history: Vec<(u64, f64)> = Vec::new();
    let lr = config.learning_rate;

    for step in 1..=config.steps {
        let batch = generate_batch(config.alpha, config.n_features, config.batch_size, &mut rng)?;
        let loss = loss_and_grad(&state, &batch, &config.importance, Some(&mut g))?;
        if !loss.is_finite() {
            return Err(FloorcastError::Diverged { step, loss });
        }

        let t = step as f64;
        let bc1 = 1.0 - ADAM_BETA1.powf(t);
        let bc2 = 1.0 - ADAM_BETA2.powf(t);
        for ((w, m), (v, g)) in state
            .w
            .iter_mut()
            .zip(&mut m.w)
            .zip(v.w.iter_mut().zip(&g.w))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
        }
        for ((b, m), (v, g)) in state
            .b
            .iter_mut()
            .zip(&mut m.b)
            .zip(v.b.iter_mut().zip(&g.b))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *b -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
        }

        if step.is_multiple_of(EVAL_INTERVAL) || step == config.steps {
            let eval =
                generate_batch(config.alpha, config.n_features, config.batch_size, &mut rng)?;
            let eval_loss = batch_loss(&state, &eval, &config.importance)?;
            if !eval_loss.is_finite() {
                return Err(FloorcastError::Diverged {
                    step,
                    loss: eval_loss,
                });
            }
            history.push((step, eval_loss));
        }
    }

    let window = ((history.len() as f64 * config.eval_fraction).ceil() as usize).max(1);
    let tail = &history[history.len() - window..];
    let actual_floor = tail.iter().map(|(_, l)| l).sum::<f64>() / tail.len() as f64;

    Ok(FloorMeasurement {
        config_id: config.config_id.clone(),
        actual_floor,
        floor_std: 0.0,
        n_seeds: 1,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn zipf(n: u64) -> ImportanceSpec {
        ImportanceSpec::zipf(n).unwrap()
    }

    #[test]
    fn batch_nonzero_fraction_matches_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batch = generate_batch(0.8, 10, 10_000, &mut rng).unwrap();
        let nnz = batch.data.iter().filter(|v| **v != 0.0).count() as f64;
        let frac = nnz / batch.data.len() as f64;
        // 3 standard errors of a Bernoulli(0.2) mean over 1e5 draws
        let se = (0.2_f64 * 0.8 / batch.data.len() as f64).sqrt();
        assert!((frac - 0.2).abs() < 3.0 * se, "frac = {frac}");
    }

    #[test]
    fn batch_second_moment_matches_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch = generate_batch(0.8, 10, 10_000, &mut rng).unwrap();
        let m2 = batch.data.iter().map(|v| v * v).sum::<f64>() / batch.data.len() as f64;
        assert!((m2 - 0.0667).abs() < 0.003, "E[x^2] = {m2}");
    }

    #[test]
    fn batch_is_deterministic() {
        let a = generate_batch(0.9, 5, 64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = generate_batch(0.9, 5, 64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_zero_weights() {
        let state = ModelState::zeros(2, 4);
        let (_, x_hat) = forward(&state, &[1.0, 0.5, 0.0, 2.0]).unwrap();
        assert_eq!(x_hat, vec![0.0; 4]);
    }

    #[test]
    fn forward_identity_reconstructs() {
        let n = 3;
        let mut state = ModelState::zeros(n, n);
        for i in 0..n {
            state.w[i * n + i] = 1.0;
        }
        let x = [0.3, 0.0, 0.9];
        let (h, x_hat) = forward(&state, &x).unwrap();
        assert_eq!(h, x.to_vec());
        for (a, b) in x_hat.iter().zip(&x) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_hand_arithmetic() {
        // n = 3, d = 2, hand-computed
        let state = ModelState {
            d_hidden: 2,
            n_features: 3,
            w: vec![1.0, 0.0, -1.0, 0.5, 2.0, 0.0],
            b: vec![0.1, -0.2, 0.3],
        };
        let x = [1.0, 2.0, 3.0];
        // h = [1*1 + 0*2 + (-1)*3, 0.5*1 + 2*2 + 0*3] = [-2, 4.5]
        // pre = W^T h + b = [-2*1 + 4.5*0.5 + 0.1, -2*0 + 4.5*2 - 0.2, -2*(-1) + 0 + 0.3]
        //     = [0.35, 8.8, 2.3]
        let (h, x_hat) = forward(&state, &x).unwrap();
        assert!((h[0] + 2.0).abs() < 1e-12 && (h[1] - 4.5).abs() < 1e-12);
        for (a, e) in x_hat.iter().zip([0.35, 8.8, 2.3]) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn loss_zero_on_perfect_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = generate_batch(0.5, 6, 32, &mut rng).unwrap();
        assert_eq!(weighted_loss(&batch, &batch, &zipf(6)).unwrap(), 0.0);
    }

    #[test]
    fn loss_of_zero_reconstruction_matches_moment() {
        // x_hat = 0 gives E[loss] = sum_i I_i (1 - alpha)/3.
        let n = 8;
        let imp = zipf(n);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let batch = generate_batch(0.7, n, 20_000, &mut rng).unwrap();
        let zeros = Batch {
            data: vec![0.0; batch.data.len()],
            n_features: batch.n_features,
            batch_size: batch.batch_size,
        };
        let loss = weighted_loss(&batch, &zeros, &imp).unwrap();
        let expected = 0.3 / 3.0; // importances sum to 1
        assert!(
            (loss - expected).abs() < 0.02 * expected.max(1.0),
            "loss = {loss}, expected {expected}"
        );
    }

    #[test]
    fn uniform_importance_is_scaled_mse() {
        let n = 4u64;
        let imp = ImportanceSpec::empirical(vec![0.25; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = generate_batch(0.5, n, 16, &mut rng).unwrap();
        let y = generate_batch(0.5, n, 16, &mut rng).unwrap();
        let wl = weighted_loss(&x, &y, &imp).unwrap();
        let mse: f64 = x
            .data
            .iter()
            .zip(&y.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / x.batch_size as f64;
        assert!((wl - 0.25 * mse).abs() < 1e-12);
    }

    fn finite_difference_grad(
        state: &ModelState,
        batch: &Batch,
        imp: &ImportanceSpec,
        step: f64,
    ) -> Gradient {
        let mut out = Gradient {
            w: vec![0.0; state.w.len()],
            b: vec![0.0; state.b.len()],
        };
        let mut s = state.clone();
        for i in 0..state.w.len() {
            s.w[i] = state.w[i] + step;
            let hi = batch_loss(&s, batch, imp).unwrap();
            s.w[i] = state.w[i] - step;
            let lo = batch_loss(&s, batch, imp).unwrap();
            s.w[i] = state.w[i];
            out.w[i] = (hi - lo) / (2.0 * step);
        }
        for i in 0..state.b.len() {
            s.b[i] = state.b[i] + step;
            let hi = batch_loss(&s, batch, imp).unwrap();
            s.b[i] = state.b[i] - step;
            let lo = batch_loss(&s, batch, imp).unwrap();
            s.b[i] = state.b[i];
            out.b[i] = (hi - lo) / (2.0 * step);
        }
        out
    }

    #[test]
    fn gradient_matches_central_differences() {
        // >= 100 random small instances, relative tolerance 1e-4
        let imp = zipf(6);
        for trial in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let mut state = ModelState::init(3, 6, &mut rng);
            // Move biases off zero so no preactivation sits exactly on the
            // ReLU kink, where central differences disagree with any
            // subgradient choice.
            for b in &mut state.b {
                *b = 0.05 + 0.1 * rng.gen::<f64>();
            }
            let batch = generate_batch(0.5, 6, 8, &mut rng).unwrap();
            let analytic = grad(&state, &batch, &imp).unwrap();
            let numeric = finite_difference_grad(&state, &batch, &imp, 1e-5);
            for (a, n) in analytic
                .w
                .iter()
                .chain(&analytic.b)
                .zip(numeric.w.iter().chain(&numeric.b))
            {
                let scale = a.abs().max(n.abs()).max(1e-6);
                assert!(
                    (a - n).abs() / scale < 1e-4,
                    "trial {trial}: analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn gradient_linear_in_importance() {
        let imp = zipf(5);
        let doubled =
            ImportanceSpec::empirical(imp.values.iter().map(|v| 2.0 * v).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let state = ModelState::init(2, 5, &mut rng);
        let batch = generate_batch(0.6, 5, 16, &mut rng).unwrap();
        let g1 = grad(&state, &batch, &imp).unwrap();
        let g2 = grad(&state, &batch, &doubled).unwrap();
        for (a, b) in g1.w.iter().chain(&g1.b).zip(g2.w.iter().chain(&g2.b)) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_on_zero_batch_with_nonpositive_bias() {
        // b <= 0 and x = 0 means pre <= 0 everywhere: gradient vanishes.
        let state = ModelState {
            d_hidden: 2,
            n_features: 3,
            w: vec![0.5, -0.2, 0.3, 0.1, 0.0, -0.4],
            b: vec![-0.1, 0.0, -0.5],
        };
        let batch = Batch {
            data: vec![0.0; 12],
            n_features: 3,
            batch_size: 4,
        };
        let g = grad(&state, &batch, &zipf(3)).unwrap();
        assert!(g.w.iter().chain(&g.b).all(|v| *v == 0.0));
    }

    #[test]
    fn full_width_trains_to_near_zero() {
        let n = 6;
        let mut config = ToyRunConfig::new(n, n, 0.8, zipf(n), 1);
        config.steps = 2000;
        config.batch_size = 256;
        let m = train(&config).unwrap();
        assert!(m.actual_floor < 1e-3, "floor = {}", m.actual_floor);
    }

    #[test]
    fn training_is_deterministic() {
        let config = {
            let mut c = ToyRunConfig::new(8, 3, 0.9, zipf(8), 42);
            c.steps = 200;
            c.batch_size = 64;
            c
        };
        let a = train(&config).unwrap();
        let b = train(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn floor_bracketed_by_capacity_and_naive_bounds() {
        // n = 40, alpha = 0.99, d_s = 1. The capacity formula assumes
        // perfect packing of floor(g * d_s) features and so lower-bounds the
        // trained floor; the tail past d_s features (one feature per
        // dimension, no superposition) upper-bounds it, since even a single
        // dimension packs an antipodal pair. At this width the trained
        // model sits near the two-feature tail, well above the formula's
        // 21-feature budget -- the formula is an optimistic bound here.
        use crate::importance::{predicted_floor, ActivationModel};
        let n = 40;
        let imp = zipf(n);
        let act = ActivationModel::bernoulli_uniform(0.99, n).unwrap();
        let refined = predicted_floor(&imp, &act, 1).unwrap().floor_raw;
        let naive: f64 = (1..n as usize)
            .map(|i| imp.values[i] * act.second_moments[i])
            .sum();
        let mut config = ToyRunConfig::new(n, 1, 0.99, imp, 0);
        config.batch_size = 512;
        let m = train(&config).unwrap();
        assert!(
            m.actual_floor > refined && m.actual_floor < naive,
            "actual {} outside [{refined}, {naive}]",
            m.actual_floor
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let imp = zipf(4);
        let mut c = ToyRunConfig::new(4, 5, 0.9, imp.clone(), 0);
        c.d_hidden = 5;
        assert!(train(&c).is_err());
        let mut c = ToyRunConfig::new(4, 2, 0.9, imp.clone(), 0);
        c.alpha = 0.0;
        assert!(train(&c).is_err());
        let mut c = ToyRunConfig::new(4, 2, 0.9, imp, 0);
        c.eval_fraction = 0.0;
        assert!(train(&c).is_err());
    }
}
