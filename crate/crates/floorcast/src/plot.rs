//! Deterministic SVG rendering of the CSV artifacts the other modules emit.
//!
//! Plots are strictly derived from their input files: identical input
//! produces byte-identical SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{FloorcastError, Result};
use crate::sweep::{read_rows, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    CapacityCurve,
    FloorGrid,
    Scatter,
    Collapse,
    PredVsObs,
}

impl std::str::FromStr for PlotKind {
    type Err = FloorcastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity-curve" => Ok(Self::CapacityCurve),
            "floor-grid" => Ok(Self::FloorGrid),
            "scatter" => Ok(Self::Scatter),
            "collapse" => Ok(Self::Collapse),
            "pred-vs-obs" => Ok(Self::PredVsObs),
            other => Err(FloorcastError::InvalidArgument(format!(
                "unknown plot kind `{other}`"
            ))),
        }
    }
}

/// Render `input` (CSV) as a self-contained SVG at `output`.
pub fn plot(input: &Path, kind: PlotKind, output: &Path, log_space: bool) -> Result<()> {
    let svg = match kind {
        PlotKind::CapacityCurve => capacity_curve_svg(input)?,
        PlotKind::FloorGrid => floor_grid_svg(input)?,
        PlotKind::Scatter => scatter_svg(input, log_space)?,
        PlotKind::Collapse => collapse_svg(input)?,
        PlotKind::PredVsObs => pred_vs_obs_svg(input)?,
    };
    let tmp = output.with_extension("tmp");
    std::fs::write(&tmp, svg)?;
    std::fs::rename(&tmp, output)?;
    Ok(())
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 48.0;

struct Panel {
    origin_x: f64,
    origin_y: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_x: bool,
    log_y: bool,
}

impl Panel {
    fn x(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log_x {
            (v.log10(), self.x_min.log10(), self.x_max.log10())
        } else {
            (v, self.x_min, self.x_max)
        };
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        self.origin_x + MARGIN + t * (PANEL_W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log_y {
            (v.log10(), self.y_min.log10(), self.y_max.log10())
        } else {
            (v, self.y_min, self.y_max)
        };
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        self.origin_y + PANEL_H - MARGIN - t * (PANEL_H - 2.0 * MARGIN)
    }

    fn frame(&self, title: &str, x_label: &str, y_label: &str, out: &mut String) {
        let left = self.origin_x + MARGIN;
        let right = self.origin_x + PANEL_W - MARGIN;
        let top = self.origin_y + MARGIN;
        let bottom = self.origin_y + PANEL_H - MARGIN;
        let _ = write!(
            out,
            "<rect x=\"{left:.1}\" y=\"{top:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>",
            right - left,
            bottom - top
        );
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
            (left + right) / 2.0,
            top - 8.0,
            escape(title)
        );
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
            (left + right) / 2.0,
            bottom + 28.0,
            escape(x_label)
        );
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
            left - 34.0,
            (top + bottom) / 2.0,
            left - 34.0,
            (top + bottom) / 2.0,
            escape(y_label)
        );
        // endpoint ticks
        for (v, label_x) in [(self.x_min, left), (self.x_max, right)] {
            let _ = write!(
                out,
                "<text x=\"{label_x:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
                bottom + 14.0,
                fmt_tick(v)
            );
        }
        for (v, label_y) in [(self.y_min, bottom), (self.y_max, top)] {
            let _ = write!(
                out,
                "<text x=\"{:.1}\" y=\"{label_y:.1}\" font-size=\"9\" text-anchor=\"end\" font-family=\"sans-serif\">{}</text>",
                left - 4.0,
                fmt_tick(v)
            );
        }
    }

    fn polyline(&self, pts: &[(f64, f64)], stroke: &str, dashed: bool, out: &mut String) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", self.x(*x), self.y(*y)))
            .collect();
        let dash = if dashed { " stroke-dasharray=\"5,3\"" } else { "" };
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"{dash}/>",
            coords.join(" ")
        );
    }

    fn dots(&self, pts: &[(f64, f64)], fill: &str, out: &mut String) {
        for (x, y) in pts {
            let _ = write!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{fill}\"/>",
                self.x(*x),
                self.y(*y)
            );
        }
    }

    fn vline(&self, x: f64, stroke: &str, out: &mut String) {
        if x < self.x_min || x > self.x_max {
            return;
        }
        let _ = write!(
            out,
            "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"{stroke}\" stroke-width=\"1\" stroke-dasharray=\"2,3\"/>",
            self.x(x),
            self.origin_y + MARGIN,
            self.origin_y + PANEL_H - MARGIN
        );
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>{body}</svg>\n"
    )
}

fn read_columns(path: &Path, required: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut indices = Vec::with_capacity(required.len());
    for name in required {
        let idx = headers.iter().position(|h| h == *name).ok_or_else(|| {
            FloorcastError::InvalidArgument(format!(
                "{}: missing column `{name}` (found: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            ))
        })?;
        indices.push(idx);
    }
    let mut columns = vec![Vec::new(); required.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (slot, &idx) in indices.iter().enumerate() {
            let raw = record.get(idx).unwrap_or("");
            let value: f64 = raw.parse().map_err(|_| FloorcastError::Parse {
                path: path.display().to_string(),
                line: line + 2,
                message: format!("bad number `{raw}` in column `{}`", required[slot]),
            })?;
            columns[slot].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(FloorcastError::InvalidArgument(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(columns)
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn capacity_curve_svg(input: &Path) -> Result<String> {
    let cols = read_columns(input, &["alpha", "g"])?;
    let pts: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[1].iter().cloned()).collect();
    let (x_min, x_max) = bounds(&cols[0]);
    let (y_min, y_max) = bounds(&cols[1]);
    let panel = Panel {
        origin_x: 0.0,
        origin_y: 0.0,
        x_min,
        x_max,
        y_min,
        y_max,
        log_x: false,
        log_y: false,
    };
    let mut body = String::new();
    panel.frame("capacity per dimension", "alpha", "g(alpha)", &mut body);
    panel.polyline(&pts, "#1f77b4", false, &mut body);
    Ok(svg_document(PANEL_W, PANEL_H, &body))
}

fn floor_grid_svg(input: &Path) -> Result<String> {
    let rows = read_rows(input)?;
    if rows.is_empty() {
        return Err(FloorcastError::InvalidArgument(format!(
            "{}: no sweep rows",
            input.display()
        )));
    }
    // one panel per (n, alpha) cell, rows: n, columns: alpha
    let mut ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut alphas: Vec<u64> = rows.iter().map(|r| (r.alpha * 1e6).round() as u64).collect();
    alphas.sort_unstable();
    alphas.dedup();

    let mut body = String::new();
    for (row_idx, &n) in ns.iter().enumerate() {
        for (col_idx, &alpha_key) in alphas.iter().enumerate() {
            let alpha = alpha_key as f64 / 1e6;
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.n == n && ((r.alpha * 1e6).round() as u64) == alpha_key)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let mut widths: Vec<u64> = cell.iter().map(|r| r.d_s).collect();
            widths.sort_unstable();
            widths.dedup();
            let actual: Vec<(f64, f64)> = widths
                .iter()
                .map(|&d| {
                    let r = cell.iter().find(|r| r.d_s == d).expect("width present");
                    (d as f64, r.actual_floor_mean)
                })
                .collect();
            let predicted: Vec<(f64, f64)> = widths
                .iter()
                .map(|&d| {
                    let r = cell.iter().find(|r| r.d_s == d).expect("width present");
                    (d as f64, r.predicted_floor)
                })
                .collect();
            let ys: Vec<f64> = actual
                .iter()
                .chain(&predicted)
                .map(|(_, y)| *y)
                .collect();
            let (y_min, y_max) = bounds(&ys);
            let panel = Panel {
                origin_x: col_idx as f64 * PANEL_W,
                origin_y: row_idx as f64 * PANEL_H,
                x_min: widths[0] as f64,
                x_max: *widths.last().expect("non-empty") as f64,
                y_min: y_min.min(0.0),
                y_max,
                log_x: false,
                log_y: false,
            };
            panel.frame(
                &format!("n={n} alpha={alpha}"),
                "d_s",
                "floor",
                &mut body,
            );
            panel.polyline(&actual, "#1f77b4", false, &mut body);
            panel.polyline(&predicted, "#d62728", true, &mut body);
            panel.vline(cell[0].d_crit, "#666", &mut body);
        }
    }
    Ok(svg_document(
        alphas.len() as f64 * PANEL_W,
        ns.len() as f64 * PANEL_H,
        &body,
    ))
}

fn scatter_svg(input: &Path, log_space: bool) -> Result<String> {
    let cols = read_columns(input, &["predicted", "actual_mean"])?;
    let mut pts: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[1].iter().cloned()).collect();
    if log_space {
        pts.retain(|(x, y)| *x > 0.0 && *y > 0.0);
        if pts.is_empty() {
            return Err(FloorcastError::InvalidArgument(
                "log-log scatter requires strictly positive values".into(),
            ));
        }
    }
    let xs: Vec<f64> = pts.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let panel = Panel {
        origin_x: 0.0,
        origin_y: 0.0,
        x_min,
        x_max,
        y_min,
        y_max,
        log_x: log_space,
        log_y: log_space,
    };
    let mut body = String::new();
    panel.frame("predicted vs actual floor", "predicted", "actual", &mut body);
    // y = x reference
    let lo = x_min.max(y_min);
    let hi = x_max.min(y_max);
    if hi > lo {
        panel.polyline(&[(lo, lo), (hi, hi)], "#999", true, &mut body);
    }
    panel.dots(&pts, "#1f77b4", &mut body);
    Ok(svg_document(PANEL_W, PANEL_H, &body))
}

fn collapse_svg(input: &Path) -> Result<String> {
    let cols = read_columns(input, &["ratio", "normalized"])?;
    let pts: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[1].iter().cloned()).collect();
    let (x_min, x_max) = bounds(&cols[0]);
    let (y_min, y_max) = bounds(&cols[1]);
    let panel = Panel {
        origin_x: 0.0,
        origin_y: 0.0,
        x_min: x_min.min(0.9),
        x_max: x_max.max(1.1),
        y_min: y_min.min(0.0),
        y_max,
        log_x: false,
        log_y: false,
    };
    let mut body = String::new();
    panel.frame(
        "floor collapse at the critical width",
        "d_s / d_crit",
        "normalized floor",
        &mut body,
    );
    panel.dots(&pts, "#1f77b4", &mut body);
    panel.vline(1.0, "#d62728", &mut body);
    Ok(svg_document(PANEL_W, PANEL_H, &body))
}

fn pred_vs_obs_svg(input: &Path) -> Result<String> {
    let cols = read_columns(input, &["d_s", "predicted_normalized", "observed_normalized"])?;
    let pred: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[1].iter().cloned()).collect();
    let obs: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[2].iter().cloned()).collect();
    let (x_min, x_max) = bounds(&cols[0]);
    let ys: Vec<f64> = cols[1].iter().chain(cols[2].iter()).cloned().collect();
    let (y_min, y_max) = bounds(&ys);
    let panel = Panel {
        origin_x: 0.0,
        origin_y: 0.0,
        x_min,
        x_max,
        y_min: y_min.min(0.0),
        y_max,
        log_x: false,
        log_y: false,
    };
    let mut body = String::new();
    panel.frame(
        "normalized predicted vs observed floors",
        "d_s",
        "normalized floor",
        &mut body,
    );
    panel.polyline(&pred, "#999", true, &mut body);
    panel.polyline(&obs, "#d62728", false, &mut body);
    Ok(svg_document(PANEL_W, PANEL_H, &body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "capacity-curve".parse::<PlotKind>().unwrap(),
            PlotKind::CapacityCurve
        );
        assert!("heatmap3d".parse::<PlotKind>().is_err());
    }

    #[test]
    fn collapse_plot_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("collapse.csv");
        std::fs::write(&input, "ratio,normalized\n0.5,1.0\n1.0,0.4\n1.5,0.05\n").unwrap();
        let out1 = dir.path().join("a.svg");
        let out2 = dir.path().join("b.svg");
        plot(&input, PlotKind::Collapse, &out1, false).unwrap();
        plot(&input, PlotKind::Collapse, &out2, false).unwrap();
        let a = std::fs::read(&out1).unwrap();
        let b = std::fs::read(&out2).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("stroke-dasharray"), "vertical marker present");
    }

    #[test]
    fn scatter_log_rejects_nonpositive() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("rows.csv");
        std::fs::write(&input, "predicted,actual_mean\n0.0,0.0\n-1.0,2.0\n").unwrap();
        let out = dir.path().join("s.svg");
        assert!(plot(&input, PlotKind::Scatter, &out, true).is_err());
    }

    #[test]
    fn schema_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("bad.csv");
        std::fs::write(&input, "foo,bar\n1,2\n").unwrap();
        let out = dir.path().join("c.svg");
        let err = plot(&input, PlotKind::CapacityCurve, &out, false).unwrap_err();
        assert!(err.to_string().contains("missing column"));
    }
}
