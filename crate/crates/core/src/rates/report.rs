//! Sweep reports: JSON document, CSV table and one SVG plot per functional.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Functional, Source};
use super::fit::{fit_rate, RateFit};
use super::{Context, ErrorFunctionalSample};
use crate::cell::{CellResiduals, Classification};
use crate::epssolve::Epsilon;
use crate::types::{CTensor, Mat2};

/// Which inputs were closed forms and which were computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub r: Source,
    pub v: Source,
    pub c_tensor: Source,
    pub u: Source,
    pub z: Source,
    /// Torus resolution of the cell solve, if one was run.
    pub cell_n: Option<usize>,
    pub library_version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub abar: [[f64; 2]; 2],
    pub c_tensor: BTreeMap<String, f64>,
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<CellResiduals>,
}

impl CellSummary {
    pub fn new(abar: &Mat2, c: &CTensor, classification: Classification, residuals: Option<&CellResiduals>) -> Self {
        CellSummary {
            abar: abar.0,
            c_tensor: c.labelled().into_iter().collect(),
            classification,
            residuals: residuals.cloned(),
        }
    }
}

/// The fit of one (functional, p) series over the smallest ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub functional: Functional,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub expected_slope: f64,
    /// None if fewer than three positive samples remained.
    pub fit: Option<RateFit>,
    /// ε values whose sample was exactly zero and was left out of the fit.
    pub excluded_zero: Vec<Epsilon>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub cell: CellSummary,
    /// Ordered by decreasing ε.
    pub samples: Vec<ErrorFunctionalSample>,
    pub fits: Vec<FitEntry>,
}

fn series_keys(config: &ExperimentConfig) -> Vec<(Functional, Option<f64>)> {
    let mut keys = Vec::new();
    for &f in &config.functionals {
        if f.per_p() {
            keys.extend(config.ps.iter().map(|&p| (f, Some(p))));
        } else {
            keys.push((f, None));
        }
    }
    keys
}

impl RateReport {
    pub(super) fn build(ctx: &Context, mut samples: Vec<ErrorFunctionalSample>) -> Self {
        samples.sort_by_key(|s| s.epsilon.k());
        let c_good = ctx.classification == Classification::CGood;
        let fits = series_keys(&ctx.config)
            .into_iter()
            .map(|(f, p)| {
                let tail = &samples[samples.len().saturating_sub(ctx.config.fit_points)..];
                let mut points = Vec::new();
                let mut excluded_zero = Vec::new();
                for s in tail {
                    match s.get(f, p) {
                        Some(v) if v == 0.0 => excluded_zero.push(s.epsilon),
                        Some(v) => points.push((s.epsilon.value(), v)),
                        None => {}
                    }
                }
                FitEntry { functional: f, p, expected_slope: f.expected_slope(p, c_good), fit: fit_rate(&points).ok(), excluded_zero }
            })
            .collect();
        RateReport {
            provenance: ctx.provenance.clone(),
            config: ctx.config.clone(),
            cell: ctx.cell.clone(),
            samples,
            fits,
        }
    }

    pub fn fit(&self, f: Functional, p: Option<f64>) -> Option<&RateFit> {
        self.fits.iter().find(|e| e.functional == f && e.p == p).and_then(|e| e.fit.as_ref())
    }

    pub fn slope(&self, f: Functional, p: Option<f64>) -> Option<f64> {
        self.fit(f, p).map(|r| r.slope)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rows `epsilon,functional,p,value`, in sample then functional order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,functional,p,value\n");
        for sample in &self.samples {
            for v in &sample.values {
                let p = v.p.map(|p| p.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{:e}", sample.epsilon.value(), v.functional, p, v.value).expect("string write");
            }
        }
        s
    }

    /// Fixed-width table of fitted slopes.
    pub fn slopes_table(&self) -> String {
        let mut s = format!("{:<12} {:>4} {:>8} {:>8} {:>7}\n", "functional", "p", "slope", "expected", "r^2");
        for e in &self.fits {
            let p = e.p.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            match &e.fit {
                Some(f) => writeln!(s, "{:<12} {:>4} {:>8.3} {:>8.3} {:>7.4}", e.functional.name(), p, f.slope, e.expected_slope, f.r_squared),
                None => writeln!(s, "{:<12} {:>4} {:>8} {:>8.3} {:>7}", e.functional.name(), p, "n/a", e.expected_slope, "-"),
            }
            .expect("string write");
        }
        s
    }

    /// Log-log plot of one functional: every series, its fitted line and slope.
    pub fn to_svg(&self, f: Functional) -> Option<String> {
        let series: Vec<(Option<f64>, Vec<(f64, f64)>)> = self
            .fits
            .iter()
            .filter(|e| e.functional == f)
            .map(|e| {
                let pts = self
                    .samples
                    .iter()
                    .filter_map(|s| s.get(f, e.p).filter(|v| *v > 0.0).map(|v| (s.epsilon.value(), v)))
                    .collect();
                (e.p, pts)
            })
            .collect();
        let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
        if all.is_empty() {
            return None;
        }
        let lx: Vec<f64> = all.iter().map(|p| p.0.log10()).collect();
        let ly: Vec<f64> = all.iter().map(|p| p.1.log10()).collect();
        let (x0, x1) = (lx.iter().cloned().fold(f64::INFINITY, f64::min).floor(), lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil());
        let (y0, y1) = (ly.iter().cloned().fold(f64::INFINITY, f64::min).floor(), ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil());
        let (x1, y1) = (if x1 > x0 { x1 } else { x0 + 1.0 }, if y1 > y0 { y1 } else { y0 + 1.0 });
        let (w, h, pad) = (640.0, 480.0, 70.0);
        let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<title>{} ({}, {}, {})</title>"#, f, self.config.name, self.config.coefficient, self.config.rhs);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * pad, h - 2.0 * pad);
        for d in (x0 as i32)..=(x1 as i32) {
            let x = px(d as f64);
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{pad}" x2="{x:.1}" y2="{}" stroke="lightgray"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, h - pad, h - pad + 18.0);
        }
        for d in (y0 as i32)..=(y1 as i32) {
            let y = py(d as f64);
            let _ = writeln!(s, r#"<line x1="{pad}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="lightgray"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, w - pad, pad - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">epsilon</text>"#, w / 2.0, h - 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{f}</text>"#, w / 2.0);
        for (k, (p, pts)) in series.iter().enumerate() {
            let c = colors[k % colors.len()];
            for &(e, v) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{c}"/>"#, px(e.log10()), py(v.log10()));
            }
            let label = p.map(|p| format!("p = {p}: ")).unwrap_or_default();
            let text = match self.fit(f, *p) {
                Some(fit) => {
                    let (a, b) = (fit.points_used.iter().cloned().fold(f64::INFINITY, f64::min), fit.points_used.iter().cloned().fold(0.0, f64::max));
                    let line = |e: f64| (fit.intercept + fit.slope * e.ln()).exp().log10();
                    let _ = writeln!(s, r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}" stroke-width="1.5"/>"#, px(a.log10()), py(line(a)), px(b.log10()), py(line(b)));
                    format!("{label}slope {:.3}", fit.slope)
                }
                None => format!("{label}no fit"),
            };
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{c}">{text}</text>"#, pad + 10.0, pad + 18.0 + 16.0 * k as f64);
        }
        s.push_str("</svg>\n");
        Some(s)
    }
}
