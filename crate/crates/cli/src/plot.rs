use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Hand path (x, y) from trajectory CSVs.
    Trajectory,
    /// Prediction error over time from cycle CSVs.
    Epred,
    /// Spike raster from a raster CSV.
    Raster,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Trajectory => "trajectory",
            Kind::Epred => "epred",
            Kind::Raster => "raster",
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dots: bool,
}

fn columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == *n)
                .with_context(|| format!("{} has no `{n}` column", path.display()))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(idx.iter().map(|&i| row[i].trim().to_string()).collect());
    }
    Ok(out)
}

fn numeric(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    columns(path, names)?
        .into_iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    v.parse::<f64>()
                        .with_context(|| format!("bad number `{v}`"))
                })
                .collect()
        })
        .collect()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn render(kind: Kind, inputs: &[PathBuf]) -> Result<String> {
    let mut series = Vec::new();
    let (x_label, y_label, equal) = match kind {
        Kind::Trajectory => {
            for p in inputs {
                let rows = numeric(p, &["x", "y"])?;
                series.push(Series {
                    label: stem(p),
                    points: rows.iter().map(|r| (r[0], r[1])).collect(),
                    dots: false,
                });
            }
            ("x (m)", "y (m)", true)
        }
        Kind::Epred => {
            for p in inputs {
                let rows = numeric(p, &["t_ms", "epred_x", "epred_y"])?;
                for (k, axis) in ["x", "y"].iter().enumerate() {
                    series.push(Series {
                        label: format!("{} e_{axis}", stem(p)),
                        points: rows.iter().map(|r| (r[0] / 1000.0, r[k + 1])).collect(),
                        dots: false,
                    });
                }
            }
            ("t (s)", "prediction error (m/s)", false)
        }
        Kind::Raster => {
            let mut pops: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            let mut offsets: BTreeMap<String, usize> = BTreeMap::new();
            let mut rows = Vec::new();
            for p in inputs {
                rows.extend(columns(p, &["population", "neuron", "t_ms"])?);
            }
            for r in &rows {
                let n: usize = r[1]
                    .parse()
                    .with_context(|| format!("bad neuron `{}`", r[1]))?;
                let e = offsets.entry(r[0].clone()).or_insert(0);
                *e = (*e).max(n + 1);
            }
            let mut base = 0;
            for v in offsets.values_mut() {
                let size = *v;
                *v = base;
                base += size;
            }
            for r in &rows {
                let n: usize = r[1].parse()?;
                let t: f64 = r[2]
                    .parse()
                    .with_context(|| format!("bad time `{}`", r[2]))?;
                pops.entry(r[0].clone())
                    .or_default()
                    .push((t / 1000.0, (offsets[&r[0]] + n) as f64));
            }
            series.extend(pops.into_iter().map(|(label, points)| Series {
                label,
                points,
                dots: true,
            }));
            ("t (s)", "neuron", false)
        }
    };
    if series.iter().all(|s| s.points.is_empty()) {
        bail!("nothing to plot");
    }
    Ok(svg(&series, x_label, y_label, equal))
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - d, hi + d)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    (x0, x1, y0, y1)
}

fn svg(series: &[Series], x_label: &str, y_label: &str, equal: bool) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = bounds(series);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    if equal {
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        (x0, x1) = (cx - scale * pw / 2.0, cx + scale * pw / 2.0);
        (y0, y1) = (cy - scale * ph / 2.0, cy + scale * ph / 2.0);
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            HEIGHT - MARGIN + 16.0,
            tick(x)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            sy(y) + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if ser.dots {
            for &(x, y) in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="1.5" height="3" fill="{color}"/>"#,
                    sx(x),
                    sy(y) - 1.5
                );
            }
        } else {
            let path: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
