//! Per-repetition results, their aggregates, and the CSV/SVG renderings.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::ModelName;
use crate::error::{PipelineError, Result};
use crate::metrics::Metrics;

pub const CSV_HEADER: &str = "model,rep,seed,accuracy,precision_distracted,recall_distracted,\
f1_distracted,precision_driving,recall_driving,f1_driving";

pub const METRIC_NAMES: [&str; 7] = [
    "accuracy",
    "precision_distracted",
    "recall_distracted",
    "f1_distracted",
    "precision_driving",
    "recall_driving",
    "f1_driving",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: ModelName,
    pub rep: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub model: ModelName,
    pub mean: [f64; 7],
    /// Sample standard deviation; zero for a single repetition.
    pub std: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Models in order of first appearance.
    pub fn models(&self) -> Vec<ModelName> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model);
            }
        }
        out
    }

    pub fn rows_for(&self, model: ModelName) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.model == model)
    }

    pub fn aggregate(&self, model: ModelName) -> Option<Aggregate> {
        let values: Vec<[f64; 7]> = self.rows_for(model).map(|r| r.metrics.as_row()).collect();
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mut mean = [0.0; 7];
        let mut std = [0.0; 7];
        for k in 0..7 {
            mean[k] = values.iter().map(|v| v[k]).sum::<f64>() / n;
            if values.len() > 1 {
                let ss: f64 = values.iter().map(|v| (v[k] - mean[k]).powi(2)).sum();
                std[k] = (ss / (n - 1.0)).sqrt();
            }
        }
        Some(Aggregate { model, mean, std })
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        self.models().into_iter().filter_map(|m| self.aggregate(m)).collect()
    }

    /// Data rows first, then a `mean` and a `std` row per model.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        let line = |s: &mut String, model: ModelName, rep: &str, seed: &str, v: &[f64; 7]| {
            let _ = write!(s, "{model},{rep},{seed}");
            for x in v {
                let _ = write!(s, ",{x}");
            }
            s.push('\n');
        };
        for r in &self.rows {
            line(&mut s, r.model, &r.rep.to_string(), &r.seed.to_string(), &r.metrics.as_row());
        }
        for a in self.aggregates() {
            line(&mut s, a.model, "mean", "", &a.mean);
            line(&mut s, a.model, "std", "", &a.std);
        }
        s
    }

    /// Grouped bar chart: one group per model, one bar per metric mean
    /// with a ±std whisker.
    pub fn to_svg(&self) -> String {
        const PLOT_H: f64 = 300.0;
        const BAR_W: f64 = 14.0;
        const GAP: f64 = 24.0;
        const LEFT: f64 = 50.0;
        const TOP: f64 = 30.0;
        const COLORS: [&str; 7] = [
            "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3",
        ];
        let aggs = self.aggregates();
        let group_w = 7.0 * BAR_W + GAP;
        let width = LEFT + group_w * aggs.len().max(1) as f64 + 170.0;
        let height = TOP + PLOT_H + 50.0;
        let base = TOP + PLOT_H;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r##"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##);
        for tick in 0..=4 {
            let v = tick as f64 * 0.25;
            let y = base - v * PLOT_H;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#dddddd"/><text x="{:.0}" y="{:.3}" text-anchor="end">{v:.2}</text>"##,
                LEFT + group_w * aggs.len() as f64,
                LEFT - 6.0,
                y + 4.0
            );
        }
        for (g, a) in aggs.iter().enumerate() {
            let x0 = LEFT + GAP / 2.0 + g as f64 * group_w;
            for k in 0..7 {
                let mean = a.mean[k].clamp(0.0, 1.0);
                let h = mean * PLOT_H;
                let x = x0 + k as f64 * BAR_W;
                let _ = writeln!(
                    s,
                    r#"<rect class="bar" data-model="{}" data-metric="{}" x="{x:.3}" y="{:.3}" width="{:.3}" height="{h:.3}" fill="{}"/>"#,
                    a.model,
                    METRIC_NAMES[k],
                    base - h,
                    BAR_W - 2.0,
                    COLORS[k]
                );
                let cx = x + (BAR_W - 2.0) / 2.0;
                let lo = base - (a.mean[k] - a.std[k]).clamp(0.0, 1.0) * PLOT_H;
                let hi = base - (a.mean[k] + a.std[k]).clamp(0.0, 1.0) * PLOT_H;
                let _ = writeln!(
                    s,
                    r##"<line class="whisker" x1="{cx:.3}" y1="{lo:.3}" x2="{cx:.3}" y2="{hi:.3}" stroke="#222222"/>"##
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
                x0 + 3.5 * BAR_W,
                base + 18.0,
                a.model
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{base}" x2="{:.3}" y2="{base}" stroke="#000000"/>"##,
            LEFT + group_w * aggs.len() as f64
        );
        let lx = LEFT + group_w * aggs.len() as f64 + 15.0;
        for (k, name) in METRIC_NAMES.iter().enumerate() {
            let y = TOP + k as f64 * 18.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.3}" y="{y:.3}" width="10" height="10" fill="{}"/><text x="{:.3}" y="{:.3}">{name}</text>"#,
                COLORS[k],
                lx + 14.0,
                y + 9.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn emit_report(report: &EvalReport, csv_path: &Path, svg_path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(PipelineError::data("report", "no rows to report"));
    }
    std::fs::write(csv_path, report.to_csv()).map_err(|e| PipelineError::io("report", csv_path, e))?;
    std::fs::write(svg_path, report.to_svg()).map_err(|e| PipelineError::io("report", svg_path, e))?;
    Ok(())
}
