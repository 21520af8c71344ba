//! Command-line surface: every subcommand reads CSV/stats files, prints a
//! table, and optionally emits CSV or SVG artifacts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::calibrate::{
    decompose, fit_affine, fit_fixed_b, fit_origin, fit_power_law, FitParams, FitResult,
    FloorDataset,
};
use crate::capacity::{capacity_g, critical_width, representable_features};
use crate::error::{FloorcastError, Result};
use crate::importance::{floor_curve, ActivationModel, ImportanceSpec};
use crate::plot::{plot, PlotKind};
use crate::saestats::{load_sae_stats, summarize, to_prediction_inputs, DEFAULT_ALIVE_THRESHOLD};
use crate::sweep::{collapse_curve, naive_score, read_rows, run_sweep, score, SweepGrid};

/// Exit code for validation errors (bad flags, unreadable inputs, schema).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for numeric failures (divergence, degenerate fits).
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "floorcast",
    about = "Predict and measure superposition-capacity loss floors",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Affine,
    Origin,
    #[value(name = "fixed-b")]
    FixedB,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity g(alpha), critical width, and representable features.
    Capacity {
        #[arg(long)]
        alpha: f64,
        /// Total feature count; enables the critical-width column.
        #[arg(long)]
        features: Option<u64>,
        /// Student widths (comma list) to tabulate representable features.
        #[arg(long, value_delimiter = ',')]
        widths: Vec<u64>,
    },
    /// Predicted floor curve over student widths.
    Predict {
        /// Feature sparsity; ignored when --input supplies measurements.
        #[arg(long)]
        alpha: Option<f64>,
        /// Feature count for the Zipf importance model.
        #[arg(long)]
        features: Option<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<u64>,
        /// SAE stats file; replaces the Zipf model with measured importances.
        #[arg(long, conflicts_with_all = ["alpha", "features"])]
        input: Option<PathBuf>,
        /// Alive-feature activation threshold for --input.
        #[arg(long)]
        threshold: Option<f64>,
        /// Write the curve as CSV instead of a table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the toy-model grid and write one CSV row per configuration.
    ToySweep {
        /// "default" or a key=value grid file.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        /// Output CSV; doubles as the resume checkpoint.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Score a sweep CSV: prediction agreement, refined vs naive.
    Score {
        #[arg(long)]
        input: PathBuf,
        /// Rows with predicted floor at or below this are excluded.
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
    },
    /// Collapse a sweep CSV onto the width-ratio axis.
    Collapse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize an SAE stats file: alive count, L0, alpha, g, d_crit.
    SaeSummary {
        #[arg(long)]
        input: PathBuf,
        /// Alive-feature activation threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Fit observed floors against predicted floors.
    Calibrate {
        #[arg(long, value_enum)]
        mode: FitMode,
        /// Baseline held fixed in fixed-b mode.
        #[arg(long)]
        b: Option<f64>,
        /// CSV with d_s, predicted, observed columns.
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit observed floors to a * d_s^-gamma + b.
    Powerfit {
        /// CSV with d_s, predicted, observed columns (observed is fitted).
        #[arg(long)]
        input: PathBuf,
    },
    /// Render a CSV artifact as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        /// capacity-curve, floor-grid, scatter, collapse, or pred-vs-obs.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Log-scale both axes (scatter only).
        #[arg(long)]
        log_space: bool,
    },
}

/// Parse argv, run, and map errors onto the exit-code contract.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version, 2 for usage errors.
            let code = if e.exit_code() == 0 { 0 } else { EXIT_VALIDATION };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                FloorcastError::Numeric(_)
                | FloorcastError::Diverged { .. }
                | FloorcastError::DegenerateFit(_) => EXIT_NUMERIC,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn log_config(args: std::fmt::Arguments) {
    eprintln!("config: {args}");
}

/// Six significant digits, plain notation when compact.
fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if (-3..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Capacity {
            alpha,
            features,
            widths,
        } => cmd_capacity(alpha, features, &widths),
        Command::Predict {
            alpha,
            features,
            widths,
            input,
            threshold,
            out,
        } => cmd_predict(alpha, features, &widths, input.as_deref(), threshold, out.as_deref()),
        Command::ToySweep {
            grid,
            seeds,
            steps,
            out,
        } => cmd_toy_sweep(&grid, seeds, steps, &out),
        Command::Score { input, threshold } => cmd_score(&input, threshold),
        Command::Collapse { input, out } => cmd_collapse(&input, out.as_deref()),
        Command::SaeSummary { input, threshold } => cmd_sae_summary(&input, threshold),
        Command::Calibrate { mode, b, input } => cmd_calibrate(mode, b, &input),
        Command::Powerfit { input } => cmd_powerfit(&input),
        Command::Plot {
            input,
            kind,
            out,
            log_space,
        } => cmd_plot(&input, &kind, &out, log_space),
    }
}

fn cmd_capacity(alpha: f64, features: Option<u64>, widths: &[u64]) -> Result<()> {
    log_config(format_args!(
        "capacity alpha={alpha} features={features:?} widths={widths:?}"
    ));
    let g = capacity_g(alpha)?;
    println!("alpha = {alpha}");
    println!("g     = {:.2}", g);
    if let Some(f) = features {
        println!("d_crit = {:.2}", critical_width(f, alpha)?);
        if !widths.is_empty() {
            println!("d_s,representable");
            for &w in widths {
                println!("{w},{}", representable_features(w, alpha, f)?);
            }
        }
    }
    Ok(())
}

fn cmd_predict(
    alpha: Option<f64>,
    features: Option<u64>,
    widths: &[u64],
    input: Option<&Path>,
    threshold: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let threshold = threshold.unwrap_or(DEFAULT_ALIVE_THRESHOLD);
    let (importance, activation) = match input {
        Some(path) => {
            log_config(format_args!(
                "predict input={} threshold={threshold} widths={widths:?}",
                path.display()
            ));
            let stats = load_sae_stats(path)?;
            to_prediction_inputs(&stats, threshold)?
        }
        None => {
            let alpha = alpha.ok_or_else(|| {
                FloorcastError::InvalidArgument("--alpha is required without --input".into())
            })?;
            let features = features.ok_or_else(|| {
                FloorcastError::InvalidArgument("--features is required without --input".into())
            })?;
            log_config(format_args!(
                "predict alpha={alpha} features={features} widths={widths:?} importance=zipf"
            ));
            (
                ImportanceSpec::zipf(features)?,
                ActivationModel::bernoulli_uniform(alpha, features)?,
            )
        }
    };
    let curve = floor_curve(&importance, &activation, widths, None)?;
    let mut csv = String::from("d_s,f_kept,f_dropped,floor_raw,floor_normalized\n");
    for p in &curve.predictions {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.d_s,
            p.f_kept,
            p.f_dropped,
            sig6(p.floor_raw),
            sig6(p.floor_normalized)
        );
    }
    match out {
        Some(path) => {
            write_atomic(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    if curve.degenerate_reference {
        eprintln!("note: reference width has zero predicted floor; normalized column is all 0");
    }
    Ok(())
}

fn cmd_toy_sweep(grid: &str, seeds: Option<u64>, steps: Option<u64>, out: &Path) -> Result<()> {
    let mut grid = if grid == "default" {
        SweepGrid::default()
    } else {
        SweepGrid::from_file(Path::new(grid))?
    };
    if let Some(s) = seeds {
        grid.seeds = s;
    }
    if let Some(s) = steps {
        grid.steps = s;
    }
    log_config(format_args!(
        "toy-sweep n={:?} d_t={:?} alpha={:?} seeds={} steps={} batch={} lr={} out={}",
        grid.feature_counts,
        grid.teacher_widths,
        grid.sparsities,
        grid.seeds,
        grid.steps,
        grid.batch_size,
        grid.learning_rate,
        out.display()
    ));
    let rows = run_sweep(&grid, Some(out))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn print_report(label: &str, report: &crate::sweep::ScoreReport) {
    println!(
        "{label}: pearson_r={:.3} r2={:.3} r2_log={:.3} mape={:.1}% accuracy={:.1}% \
         median_accuracy={:.1}% n={}",
        report.pearson_r,
        report.r_squared,
        report.r_squared_log,
        report.mape_percent,
        report.accuracy_percent,
        report.median_accuracy_percent,
        report.n_points
    );
}

fn cmd_score(input: &Path, threshold: f64) -> Result<()> {
    log_config(format_args!(
        "score input={} threshold={threshold}",
        input.display()
    ));
    let rows = read_rows(input)?;
    print_report("refined", &score(&rows, threshold)?);
    print_report("naive", &naive_score(&rows, threshold)?);
    Ok(())
}

fn cmd_collapse(input: &Path, out: Option<&Path>) -> Result<()> {
    log_config(format_args!("collapse input={}", input.display()));
    let rows = read_rows(input)?;
    let (curve, skipped) = collapse_curve(&rows);
    let mut csv = String::from("ratio,normalized\n");
    for (ratio, normalized) in &curve {
        let _ = writeln!(csv, "{},{}", sig6(*ratio), sig6(*normalized));
    }
    match out {
        Some(path) => {
            write_atomic(path, &csv)?;
            println!("wrote {} points to {}", curve.len(), path.display());
        }
        None => print!("{csv}"),
    }
    if skipped > 0 {
        eprintln!("note: skipped {skipped} rows with zero baseline floor");
    }
    Ok(())
}

fn cmd_sae_summary(input: &Path, threshold: Option<f64>) -> Result<()> {
    let threshold = threshold.unwrap_or(DEFAULT_ALIVE_THRESHOLD);
    log_config(format_args!(
        "sae-summary input={} threshold={threshold}",
        input.display()
    ));
    let stats = load_sae_stats(input)?;
    let s = summarize(&stats, threshold)?;
    println!("layer      = {}", stats.layer);
    println!("n_alive    = {}", s.n_alive);
    println!("avg_l0     = {:.1}", s.avg_l0);
    println!("alpha      = {:.4}", s.alpha);
    println!("g          = {:.2}", s.g);
    println!("d_crit     = {:.0}", s.d_crit);
    Ok(())
}

fn print_fit(fit: &FitResult) {
    match fit.params {
        FitParams::Affine { c, b } => println!("C = {c:.3}, B = {b:.3}"),
        FitParams::Origin { c } => println!("C = {c:.3}"),
        FitParams::FixedB { c, b } => println!("C = {c:.3}, B = {b:.3} (fixed)"),
        FitParams::PowerLaw { a, gamma, b } => {
            println!("a = {a:.2}, gamma = {gamma:.2}, b = {b:.2}")
        }
    }
    println!("R^2 = {:.3}", fit.r_squared);
    if !fit.converged {
        println!("warning: fit did not converge");
    }
}

fn cmd_calibrate(mode: FitMode, b: Option<f64>, input: &Path) -> Result<()> {
    log_config(format_args!(
        "calibrate mode={mode:?} b={b:?} input={}",
        input.display()
    ));
    let data = FloorDataset::from_csv(input)?;
    let fit = match mode {
        FitMode::Affine => fit_affine(&data)?,
        FitMode::Origin => fit_origin(&data)?,
        FitMode::FixedB => {
            let b = b.ok_or_else(|| {
                FloorcastError::InvalidArgument("--b is required in fixed-b mode".into())
            })?;
            fit_fixed_b(&data, b)?
        }
    };
    print_fit(&fit);
    let (c, b) = match fit.params {
        FitParams::Affine { c, b } | FitParams::FixedB { c, b } => (c, b),
        FitParams::Origin { c } => (c, 0.0),
        FitParams::PowerLaw { .. } => unreachable!("calibrate never fits a power law"),
    };
    println!("d_s,observed,geometric,baseline,pct_geometric");
    for row in decompose(&data, c, b)? {
        println!(
            "{},{},{},{},{:.1}",
            row.d_s,
            sig6(row.observed),
            sig6(row.geometric),
            sig6(row.baseline),
            row.pct_geometric
        );
    }
    Ok(())
}

fn cmd_powerfit(input: &Path) -> Result<()> {
    log_config(format_args!("powerfit input={}", input.display()));
    let data = FloorDataset::from_csv(input)?;
    let points: Vec<(f64, f64)> = data
        .points
        .iter()
        .map(|p| (p.d_s as f64, p.observed))
        .collect();
    let fit = fit_power_law(&points)?;
    print_fit(&fit);
    Ok(())
}

fn cmd_plot(input: &Path, kind: &str, out: &Path, log_space: bool) -> Result<()> {
    log_config(format_args!(
        "plot input={} kind={kind} out={} log_space={log_space}",
        input.display(),
        out.display()
    ));
    let kind: PlotKind = kind.parse()?;
    plot(input, kind, out, log_space)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formats_compactly() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(21.71), "21.71");
        assert_eq!(sig6(0.0795), "0.0795");
        assert_eq!(sig6(1234.5678), "1234.57");
        assert_eq!(sig6(1.0e-7), "1.00000e-7");
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["floorcast", "--help"]), 0);
        assert_eq!(run(["floorcast", "capacity", "--help"]), 0);
    }

    #[test]
    fn unknown_flag_is_validation_error() {
        assert_eq!(run(["floorcast", "capacity", "--bogus"]), EXIT_VALIDATION);
    }

    #[test]
    fn missing_input_is_validation_error() {
        assert_eq!(
            run(["floorcast", "score", "--input", "/nonexistent.csv"]),
            EXIT_VALIDATION
        );
    }
}
