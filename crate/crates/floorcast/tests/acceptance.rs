//! Acceptance gate: eight criteria, one pass/fail line each.
//!
//! Criteria 6 and 7 share one reduced sweep (5 seeds, 2000 steps); it runs
//! once per test-binary invocation and checkpoints to `target/` so an
//! interrupted run resumes instead of restarting.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use floorcast::calibrate::{
    decompose, fit_affine, fit_origin, fit_power_law, FitParams, FloorDataset,
};
use floorcast::capacity::capacity_g;
use floorcast::importance::{predicted_floor, ActivationModel, ImportanceSpec};
use floorcast::metrics::median;
use floorcast::saestats::{load_sae_stats, summarize};
use floorcast::sweep::{score, SweepGrid, SweepRow};
use floorcast::toymodel::{
    batch_loss, generate_batch, grad, run_rng, train, ModelState, ToyRunConfig,
};

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn pythia_dataset() -> FloorDataset {
    FloorDataset::from_csv(&data_file("pythia_floors.csv")).unwrap()
}

#[test]
fn criterion_1_capacity_table() {
    // Published reference rows; the 0.992 row is printed as 27.0 but the
    // formula gives 25.89, so it is excluded here as a known deviation.
    let rows = [
        (0.50, 2.9),
        (0.80, 3.1),
        (0.90, 4.3),
        (0.95, 6.7),
        (0.99, 21.7),
    ];
    let mut worst: f64 = 0.0;
    for (alpha, printed) in rows {
        worst = worst.max((capacity_g(alpha).unwrap() - printed).abs());
    }
    report(
        "1 capacity table",
        worst <= 0.05,
        &format!("max |g - printed| = {worst:.3}, tolerance 0.05"),
    );
}

#[test]
fn criterion_2_sae_summaries() {
    // (file, printed alpha, printed g, printed d_crit)
    let cases = [
        ("sae_layer12.stats", 0.9924, 26.92, 1065.0),
        ("sae_layer16.stats", 0.9915, 24.60, 1186.0),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (file, alpha, g, d_crit) in cases {
        let stats = load_sae_stats(&data_file(file)).unwrap();
        let s = summarize(&stats, 1e-5).unwrap();
        pass &= (s.alpha - alpha).abs() <= 0.0005
            && (s.g - g).abs() <= 0.3
            && (s.d_crit - d_crit).abs() <= 8.0;
        detail.push_str(&format!(
            "{file}: alpha {:.4}, g {:.2}, d_crit {:.0}; ",
            s.alpha, s.g, s.d_crit
        ));
    }
    report("2 sae summaries", pass, detail.trim_end_matches("; "));
}

#[test]
fn criterion_3_calibration() {
    let data = pythia_dataset();
    let affine = fit_affine(&data).unwrap();
    let FitParams::Affine { c, b } = affine.params else {
        panic!("affine fit returned wrong params")
    };
    let origin = fit_origin(&data).unwrap();
    let pass = (c - 8.97).abs() <= 0.05
        && (b - 0.623).abs() <= 0.005
        && (affine.r_squared - 0.993).abs() <= 0.002
        && (origin.r_squared - (-1.98)).abs() <= 0.05;
    report(
        "3 calibration",
        pass,
        &format!(
            "C = {c:.3}, B = {b:.3}, R2 = {:.3}, origin R2 = {:.3}",
            affine.r_squared, origin.r_squared
        ),
    );
}

#[test]
fn criterion_4_decomposition() {
    let published = [0.713, 0.359, 0.100, 0.014, 0.001];
    let rows = decompose(&pythia_dataset(), 8.97, 0.586).unwrap();
    let worst = rows
        .iter()
        .zip(published)
        .map(|(row, printed)| (row.geometric - printed).abs())
        .fold(0.0f64, f64::max);
    report(
        "4 decomposition",
        worst <= 0.002,
        &format!("max |geometric - printed| = {worst:.4}, tolerance 0.002"),
    );
}

#[test]
fn criterion_5_power_law() {
    let points: Vec<(f64, f64)> = pythia_dataset()
        .points
        .iter()
        .map(|p| (p.d_s as f64, p.observed))
        .collect();
    let fit = fit_power_law(&points).unwrap();
    let FitParams::PowerLaw { a, gamma, b } = fit.params else {
        panic!("power-law fit returned wrong params")
    };
    report(
        "5 power law",
        (gamma - 0.47).abs() <= 0.04 && fit.r_squared >= 0.995,
        &format!(
            "a = {a:.2}, gamma = {gamma:.2}, b = {b:.2}, R2 = {:.3}",
            fit.r_squared
        ),
    );
}

/// Reduced sweep shared by criteria 6 and 7. 312 rows, 5 seeds, 2000 steps.
fn reduced_sweep() -> &'static [SweepRow] {
    static ROWS: OnceLock<Vec<SweepRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let grid = SweepGrid {
            seeds: 5,
            ..Default::default()
        };
        let checkpoint =
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance_sweep.csv");
        floorcast::sweep::run_sweep(&grid, Some(&checkpoint)).unwrap()
    })
}

#[test]
fn criterion_6_toy_sweep_agreement() {
    let rows = reduced_sweep();
    let report_all = score(rows, 1e-4).unwrap();
    let alpha99: Vec<f64> = rows
        .iter()
        .filter(|r| (r.alpha - 0.99).abs() < 1e-9 && r.predicted_floor > 1e-4)
        .map(|r| {
            (100.0 - (r.predicted_floor - r.actual_floor_mean).abs() / r.actual_floor_mean
                * 100.0)
                .max(0.0)
        })
        .collect();
    let median_99 = median(&alpha99).unwrap_or(f64::NAN);
    let pass = report_all.pearson_r >= 0.85 && median_99 >= 90.0;
    report(
        "6 toy sweep agreement",
        pass,
        &format!(
            "pearson r = {:.3} (need >= 0.85), median accuracy at alpha 0.99 = {median_99:.1}% \
             (need >= 90%) over {} filtered points",
            report_all.pearson_r, report_all.n_points
        ),
    );
}

#[test]
fn criterion_7_collapse() {
    let rows = reduced_sweep();
    let mut collapse_violations = 0usize;
    let mut monotonicity_violations = 0usize;
    let mut configs = 0usize;
    let grid = SweepGrid::default();
    for &n in &grid.feature_counts {
        for &d_t in &grid.teacher_widths {
            for &alpha in &grid.sparsities {
                let mut cfg: Vec<&SweepRow> = rows
                    .iter()
                    .filter(|r| r.n == n && r.d_t == d_t && (r.alpha - alpha).abs() < 1e-9)
                    .collect();
                cfg.sort_by_key(|r| r.d_s);
                configs += 1;
                let base = cfg[0].actual_floor_mean;
                let above: Vec<f64> = cfg
                    .iter()
                    .filter(|r| r.d_s as f64 >= r.d_crit)
                    .map(|r| r.actual_floor_mean)
                    .collect();
                if !above.is_empty() {
                    let mean = above.iter().sum::<f64>() / above.len() as f64;
                    if mean > 0.15 * base {
                        collapse_violations += 1;
                    }
                }
                let pooled = (cfg.iter().map(|r| r.actual_floor_std.powi(2)).sum::<f64>()
                    / cfg.len() as f64)
                    .sqrt();
                for pair in cfg.windows(2) {
                    if pair[1].actual_floor_mean > pair[0].actual_floor_mean + pooled {
                        monotonicity_violations += 1;
                    }
                }
            }
        }
    }
    report(
        "7 collapse",
        collapse_violations == 0 && monotonicity_violations == 0,
        &format!(
            "{collapse_violations}/{configs} configs exceed 15% of the d_s = 1 floor above \
             d_crit; {monotonicity_violations} monotonicity violations"
        ),
    );
}

#[test]
fn criterion_8_property_suites() {
    // Gradient vs central finite differences, 100 random instances.
    let imp = ImportanceSpec::zipf(6).unwrap();
    let mut worst_rel: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = run_rng(trial, "acceptance_fd");
        let mut state = ModelState::init(3, 6, &mut rng);
        for b in &mut state.b {
            // off the ReLU kink, where no subgradient matches central FD
            *b = 0.05 + 0.1 * rand::Rng::gen::<f64>(&mut rng);
        }
        let batch = generate_batch(0.5, 6, 8, &mut rng).unwrap();
        let analytic = grad(&state, &batch, &imp).unwrap();
        let h = 1e-5;
        for (flat_idx, a) in analytic.w.iter().chain(&analytic.b).enumerate() {
            let mut plus = state.clone();
            let mut minus = state.clone();
            let (p, m) = if flat_idx < state.w.len() {
                (&mut plus.w[flat_idx], &mut minus.w[flat_idx])
            } else {
                let i = flat_idx - state.w.len();
                (&mut plus.b[i], &mut minus.b[i])
            };
            *p += h;
            *m -= h;
            let numeric = (batch_loss(&plus, &batch, &imp).unwrap()
                - batch_loss(&minus, &batch, &imp).unwrap())
                / (2.0 * h);
            let scale = a.abs().max(numeric.abs()).max(1e-6);
            worst_rel = worst_rel.max((a - numeric).abs() / scale);
        }
    }
    let fd_ok = worst_rel < 1e-4;

    // Brute-force tail-sum oracle for predicted_floor at F <= 20.
    let mut oracle_ok = true;
    for f in 1..=20u64 {
        let imp = ImportanceSpec::zipf(f).unwrap();
        let act = ActivationModel::bernoulli_uniform(0.9, f).unwrap();
        for d_s in 1..=4u64 {
            let p = predicted_floor(&imp, &act, d_s).unwrap();
            let oracle: f64 = (p.f_kept as usize..f as usize)
                .map(|i| imp.values[i] * act.second_moments[i])
                .sum();
            oracle_ok &= (p.floor_raw - oracle).abs() <= 1e-15;
        }
    }

    // OLS residuals sum to zero.
    let affine = fit_affine(&pythia_dataset()).unwrap();
    let residual_sum: f64 = affine.residuals.iter().sum();
    let ols_ok = residual_sum.abs() < 1e-9;

    // Bit-identical reruns for every seeded operation.
    let mut det_ok = true;
    for seed in 0..3u64 {
        let config = ToyRunConfig::new(10, 2, 0.9, ImportanceSpec::zipf(10).unwrap(), seed);
        let a = train(&config).unwrap();
        let b = train(&config).unwrap();
        det_ok &= a == b;
    }
    let g1 = generate_batch(0.8, 5, 16, &mut run_rng(7, "acceptance_det")).unwrap();
    let g2 = generate_batch(0.8, 5, 16, &mut run_rng(7, "acceptance_det")).unwrap();
    det_ok &= g1 == g2;

    report(
        "8 property suites",
        fd_ok && oracle_ok && ols_ok && det_ok,
        &format!(
            "fd worst rel err = {worst_rel:.2e}, tail-sum oracle = {oracle_ok}, \
             |sum residuals| = {:.2e}, determinism = {det_ok}",
            residual_sum.abs()
        ),
    );
}
