//! Plain-text and binary writers for analysis outputs: binary PGM (`P5`)
//! images, CSV tables and self-contained SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Association, GrayImage, Heatmap, SpectrumReport, SweepReport};

/// Binary 8-bit PGM of a `[0, 1]` image. Each pixel is drawn as a
/// `cell × cell` block.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[f64], cell: usize) -> Vec<u8> {
    let cell = cell.max(1);
    let (w, h) = (width * cell, height * cell);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for r in 0..h {
        for c in 0..w {
            let v = pixels[(r / cell) * width + c / cell];
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_image_pgm(path: &Path, img: &GrayImage, cell: usize) -> Result<()> {
    write_file(path, pgm_bytes(img.width, img.height, &img.pixels, cell))
}

pub fn write_heatmap_pgm(path: &Path, heatmap: &Heatmap, cell: usize) -> Result<()> {
    write_file(path, pgm_bytes(heatmap.cols, heatmap.rows, &heatmap.values, cell))
}

/// `neuron,f0,f1,...` with one row per neuron.
pub fn heatmap_csv(heatmap: &Heatmap) -> String {
    let mut s = String::from("neuron");
    for c in 0..heatmap.cols {
        let _ = write!(s, ",f{c}");
    }
    s.push('\n');
    for r in 0..heatmap.rows {
        let _ = write!(s, "{r}");
        for c in 0..heatmap.cols {
            let _ = write!(s, ",{}", heatmap.get(r, c));
        }
        s.push('\n');
    }
    s
}

/// `bundle,rank,rmse,objective,best_seed,iterations,converged`.
pub fn sweep_csv(reports: &[SweepReport]) -> String {
    let mut s = String::from("bundle,rank,rmse,objective,best_seed,iterations,converged\n");
    for rep in reports {
        for e in &rep.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                rep.label, e.rank, e.rmse, e.objective, e.seed, e.iterations, e.converged
            );
        }
    }
    s
}

/// `bundle,layer,index,sigma` with 1-based indices.
pub fn spectrum_csv(reports: &[SpectrumReport]) -> String {
    let mut s = String::from("bundle,layer,index,sigma\n");
    for rep in reports {
        for layer in &rep.layers {
            for (i, v) in layer.values.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", rep.label, layer.layer, i + 1, v);
            }
        }
    }
    s
}

/// `factor,class_0,...` label-weight table.
pub fn association_csv(assoc: &Association) -> String {
    let mut s = String::from("factor");
    for c in 0..assoc.classes {
        let _ = write!(s, ",class_{c}");
    }
    s.push('\n');
    for (r, w) in assoc.weights.iter().enumerate() {
        let _ = write!(s, "{r}");
        for v in w {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Minimal multi-series line chart.
#[derive(Clone, Debug)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 160.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 50.0;
        let plot_w = W - LEFT - RIGHT;
        let plot_h = H - TOP - BOTTOM;

        let ty = |y: f64| if self.log_y { y.max(1e-300).log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
            .collect();
        let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(ty(p.1)), b.max(ty(p.1))));
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil().max(y0 + 1.0);
        } else {
            y0 = y0.min(0.0);
            if y1 <= y0 {
                y1 = y0 + 1.0;
            }
        }
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| TOP + plot_h - (ty(y) - y0) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

        for i in 0..=5 {
            let x = x0 + (x1 - x0) * i as f64 / 5.0;
            let px = sx(x);
            let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, TOP + plot_h, TOP + plot_h + 5.0);
            let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + plot_h + 18.0, tick_label(x));
        }
        let y_ticks: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / 6.0).ceil().max(1.0);
            let mut v = Vec::new();
            let mut e = y0;
            while e <= y1 + 1e-9 {
                v.push(10f64.powf(e));
                e += step;
            }
            v
        } else {
            (0..=5).map(|i| y0 + (y1 - y0) * i as f64 / 5.0).collect()
        };
        for y in y_ticks {
            let py = sy(y);
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick_label(y));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, H - 10.0, escape(&self.x_label));
        let _ = writeln!(s, r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#, TOP + plot_h / 2.0, TOP + plot_h / 2.0, escape(&self.y_label));

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let coords: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + plot_w + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

pub fn sweep_chart(reports: &[SweepReport]) -> LineChart {
    LineChart {
        title: "Coupled factorization RMSE by rank".into(),
        x_label: "rank".into(),
        y_label: "RMSE".into(),
        log_y: false,
        series: reports
            .iter()
            .map(|r| Series {
                name: r.label.clone(),
                points: r.entries.iter().map(|e| (e.rank as f64, e.rmse)).collect(),
            })
            .collect(),
    }
}

pub fn spectrum_chart(reports: &[SpectrumReport], layer: usize) -> LineChart {
    LineChart {
        title: format!("Top singular values of layer {layer} activations"),
        x_label: "index".into(),
        y_label: "singular value".into(),
        log_y: true,
        series: reports
            .iter()
            .filter_map(|r| {
                r.layers.iter().find(|l| l.layer == layer).map(|l| Series {
                    name: r.label.clone(),
                    points: l
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                })
            })
            .collect(),
    }
}
