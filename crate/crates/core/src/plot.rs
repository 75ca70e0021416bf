//! Metric-versus-step panels as SVG, with the interquartile band across seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::experiment::{read_metrics_csv, summarize};
use crate::metrics::MetricsRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

/// Resolves a metric name or its short alias to a `metrics.csv` column.
pub fn canonical_metric(name: &str) -> Result<&'static str> {
    match name {
        "eshd" => Ok("eshd"),
        "auroc" => Ok("auroc"),
        "mse_L" | "mse_l" => Ok("mse_L"),
        "kl" | "kl_true_learned" => Ok("kl_true_learned"),
        "mse_X" | "mse_x" => Ok("mse_X"),
        _ => Err(BcdError::arg(format!(
            "unknown metric {name:?} (expected eshd, auroc, mse_L, kl, mse_X)"
        ))),
    }
}

/// Per-step median and quartiles of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub name: String,
    pub x: Vec<f64>,
    pub y_median: Vec<f64>,
    pub y_q1: Vec<f64>,
    pub y_q3: Vec<f64>,
}

impl PlotSeries {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y_median: Vec<f64>, y_q1: Vec<f64>, y_q3: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if y_median.len() != n || y_q1.len() != n || y_q3.len() != n {
            return Err(BcdError::dim("plot series columns differ in length"));
        }
        for k in 0..n {
            if !(y_q1[k] <= y_median[k] && y_median[k] <= y_q3[k]) {
                return Err(BcdError::arg(format!(
                    "quartiles out of order at x={}: {} {} {}",
                    x[k], y_q1[k], y_median[k], y_q3[k]
                )));
            }
        }
        Ok(PlotSeries {
            name: name.into(),
            x,
            y_median,
            y_q1,
            y_q3,
        })
    }

    /// Aggregates one metric over several seed trajectories.
    pub fn from_trajectories(trajectories: &[&[MetricsRecord]], metric: &str) -> Result<Self> {
        let metric = canonical_metric(metric)?;
        let rows = summarize(trajectories, &[metric])?;
        let x = rows.iter().map(|r| r.step as f64).collect();
        let med = rows.iter().map(|r| r.spreads[0].median).collect();
        let q1 = rows.iter().map(|r| r.spreads[0].q1).collect();
        let q3 = rows.iter().map(|r| r.spreads[0].q3).collect();
        Self::new(metric, x, med, q1, q3)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["step", "median", "q1", "q3"])?;
        for k in 0..self.len() {
            w.write_record([
                self.x[k].to_string(),
                self.y_median[k].to_string(),
                self.y_q1[k].to_string(),
                self.y_q3[k].to_string(),
            ])?;
        }
        w.flush().map_err(|e| BcdError::io(path, e))
    }

    pub fn read_csv(path: &Path, name: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut x, mut med, mut q1, mut q3) = (vec![], vec![], vec![], vec![]);
        for rec in rdr.deserialize() {
            let (s, m, a, b): (f64, f64, f64, f64) = rec?;
            x.push(s);
            med.push(m);
            q1.push(a);
            q3.push(b);
        }
        Self::new(name, x, med, q1, q3)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1) = padded_range(self.x.iter().copied());
        let (y0, y1) = padded_range(self.y_q1.iter().chain(&self.y_q3).chain(&self.y_median).copied());
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.name)
        );

        let bottom = MARGIN_TOP + plot_h;
        let right = MARGIN_LEFT + plot_w;
        let _ = writeln!(
            s,
            r#"<path d="M{MARGIN_LEFT},{MARGIN_TOP} V{bottom} H{right}" fill="none" stroke="black"/>"#
        );
        for k in 0..=TICKS {
            let t = k as f64 / TICKS as f64;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let (tx, ty) = (px(xv), py(yv));
            let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{bottom}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
            let _ = writeln!(
                s,
                r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bottom + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{MARGIN_LEFT}" y2="{ty:.2}" stroke="black"/>"#, MARGIN_LEFT - 5.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 8.0,
                ty + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 10.0
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.name)
        );

        if !self.is_empty() {
            let mut band = String::new();
            for k in 0..self.len() {
                let _ = write!(band, "{:.2},{:.2} ", px(self.x[k]), py(self.y_q3[k]));
            }
            for k in (0..self.len()).rev() {
                let _ = write!(band, "{:.2},{:.2} ", px(self.x[k]), py(self.y_q1[k]));
            }
            let _ = writeln!(
                s,
                r#"<polygon class="iqr" points="{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#,
                band.trim_end()
            );
            let line: Vec<String> = (0..self.len())
                .map(|k| format!("{:.2},{:.2}", px(self.x[k]), py(self.y_median[k])))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="median" points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_svg()).map_err(|e| BcdError::io(path, e))
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e5) {
        format!("{v:.1e}")
    } else if v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads `<dir>/<seed>/metrics.csv` for every seed subdirectory, in seed order.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<(PathBuf, Vec<MetricsRecord>)>> {
    let entries = fs::read_dir(dir).map_err(|e| BcdError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("metrics.csv"))
        .filter(|p| p.is_file())
        .collect();
    if files.is_empty() {
        return Err(BcdError::Format {
            path: dir.display().to_string(),
            reason: "no <seed>/metrics.csv files found".into(),
        });
    }
    files.sort();
    files
        .into_iter()
        .map(|p| read_metrics_csv(&p).map(|t| (p, t)))
        .collect()
}

/// Writes `<metric>.svg` and `<metric>.csv` into `out` for each metric.
pub fn plot_scenario(dir: &Path, metrics: &[&str], out: &Path) -> Result<Vec<PlotSeries>> {
    let names: Vec<&str> = metrics.iter().map(|m| canonical_metric(m)).collect::<Result<_>>()?;
    let runs = load_scenario_dir(dir)?;
    let trajectories: Vec<&[MetricsRecord]> = runs.iter().map(|(_, t)| t.as_slice()).collect();
    fs::create_dir_all(out).map_err(|e| BcdError::io(out, e))?;
    names
        .into_iter()
        .map(|m| {
            let series = PlotSeries::from_trajectories(&trajectories, m)?;
            series.write_svg(&out.join(format!("{m}.svg")))?;
            series.write_csv(&out.join(format!("{m}.csv")))?;
            Ok(series)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::write_metrics_csv;
    use tempfile::tempdir;

    fn record(step: usize, eshd: f64) -> MetricsRecord {
        MetricsRecord {
            step,
            eshd,
            auroc: 0.5,
            mse_l: 1.0,
            kl_true_learned: 2.0,
            mse_x: 3.0,
        }
    }

    #[test]
    fn quartile_order_is_enforced() {
        assert!(PlotSeries::new("m", vec![0.0], vec![1.0], vec![2.0], vec![3.0]).is_err());
        assert!(PlotSeries::new("m", vec![0.0], vec![1.0], vec![1.0], vec![1.0]).is_ok());
        assert!(PlotSeries::new("m", vec![0.0, 1.0], vec![1.0], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn single_seed_band_collapses() {
        let t = vec![record(0, 4.0), record(50, 2.0)];
        let s = PlotSeries::from_trajectories(&[&t], "eshd").unwrap();
        assert_eq!(s.y_median, vec![4.0, 2.0]);
        assert_eq!(s.y_q1, s.y_median);
        assert_eq!(s.y_q3, s.y_median);
    }

    #[test]
    fn aliases_and_unknown_metrics() {
        assert_eq!(canonical_metric("kl").unwrap(), "kl_true_learned");
        assert_eq!(canonical_metric("mse_L").unwrap(), "mse_L");
        assert!(canonical_metric("f1").is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = PlotSeries::new("eshd", vec![0.0, 50.0, 100.0], vec![3.0, 1.0, 0.0], vec![2.0, 0.5, 0.0], vec![4.0, 2.0, 0.5])
            .unwrap()
            .to_svg();
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches("<polygon").count(), 1);
        assert!(s.contains(">step</text>"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn scenario_dir_aggregates_match_recomputation() {
        let dir = tempdir().unwrap();
        let seeds = [[5.0, 3.0], [1.0, 0.0], [2.0, 2.0]];
        for (k, e) in seeds.iter().enumerate() {
            let sub = dir.path().join(k.to_string());
            fs::create_dir_all(&sub).unwrap();
            write_metrics_csv(&sub.join("metrics.csv"), &[record(0, e[0]), record(50, e[1])]).unwrap();
        }
        let out = dir.path().join("plots");
        let series = plot_scenario(dir.path(), &["eshd", "kl"], &out).unwrap();
        assert_eq!(series[0].y_median, vec![2.0, 2.0]);
        assert_eq!(series[0].y_q1, vec![1.5, 1.0]);
        assert_eq!(series[0].y_q3, vec![3.5, 2.5]);
        assert!(out.join("eshd.svg").is_file());
        assert!(out.join("kl_true_learned.svg").is_file());
        let back = PlotSeries::read_csv(&out.join("eshd.csv"), "eshd").unwrap();
        assert_eq!(back, series[0]);
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempdir().unwrap();
        assert!(plot_scenario(dir.path(), &["eshd"], dir.path()).is_err());
    }
}
