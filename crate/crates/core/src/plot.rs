//! Static SVG figures drawn from the CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use svg::node::element::{Circle, Line, Polyline, Rectangle, Text};
use svg::Document;

use crate::analysis::RatioKind;
use crate::error::{Error, Result};
use crate::experiment::{read_observables_csv, read_profile_csv, ProfileRow};
use crate::report::ratio_curves;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 60.0); // left, right, top, bottom
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// A labelled series of `(x, y, error)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, Option<f64>)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        MARGIN.0 + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN.0 - MARGIN.1)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN.3 - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN.2 - MARGIN.3)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        return (c - 1.0, c + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// About five round tick positions in `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn text(x: f64, y: f64, s: &str, anchor: &str) -> Text {
    Text::new(s)
        .set("x", x)
        .set("y", y)
        .set("font-family", "sans-serif")
        .set("font-size", 12)
        .set("text-anchor", anchor)
}

fn axes(mut doc: Document, f: &Frame, title: &str, xlabel: &str, ylabel: &str) -> Document {
    let (x0, x1) = (MARGIN.0, WIDTH - MARGIN.1);
    let (y0, y1) = (HEIGHT - MARGIN.3, MARGIN.2);
    doc = doc.add(
        Rectangle::new()
            .set("x", x0)
            .set("y", y1)
            .set("width", x1 - x0)
            .set("height", y0 - y1)
            .set("fill", "none")
            .set("stroke", "black"),
    );
    for t in ticks(f.x.0, f.x.1) {
        let x = f.sx(t);
        doc = doc
            .add(Line::new().set("x1", x).set("x2", x).set("y1", y0).set("y2", y0 + 5.0).set("stroke", "black"))
            .add(text(x, y0 + 18.0, &fmt_tick(t), "middle"));
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.sy(t);
        doc = doc
            .add(Line::new().set("x1", x0 - 5.0).set("x2", x0).set("y1", y).set("y2", y).set("stroke", "black"))
            .add(text(x0 - 8.0, y + 4.0, &fmt_tick(t), "end"));
    }
    doc.add(text((x0 + x1) / 2.0, HEIGHT - 15.0, xlabel, "middle"))
        .add(text(18.0, (y0 + y1) / 2.0, ylabel, "middle").set("transform", format!("rotate(-90 18 {})", (y0 + y1) / 2.0)))
        .add(text((x0 + x1) / 2.0, 25.0, title, "middle").set("font-size", 14))
}

fn document() -> Document {
    Document::new()
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .add(Rectangle::new().set("width", WIDTH).set("height", HEIGHT).set("fill", "white"))
}

/// Line plot with optional error bars and a legend.
pub fn line_plot(series: &[Series], title: &str, xlabel: &str, ylabel: &str) -> Result<Document> {
    let pts: Vec<&(f64, f64, Option<f64>)> = series.iter().flat_map(|s| &s.points).collect();
    if pts.is_empty() {
        return Err(Error::InvalidArgument(format!("nothing to plot for `{title}`")));
    }
    let fold = |it: &mut dyn Iterator<Item = f64>| it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (xa, xb) = fold(&mut pts.iter().map(|p| p.0));
    let (ya, yb) = fold(&mut pts.iter().flat_map(|p| {
        let e = p.2.unwrap_or(0.0);
        [p.1 - e, p.1 + e]
    }));
    let f = Frame {
        x: padded(xa, xb),
        y: padded(ya, yb),
    };
    let mut doc = axes(document(), &f, title, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let line: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", f.sx(p.0), f.sy(p.1))).collect();
        doc = doc.add(
            Polyline::new()
                .set("points", line.join(" "))
                .set("fill", "none")
                .set("stroke", color)
                .set("stroke-width", 1.5),
        );
        for &(x, y, e) in &s.points {
            doc = doc.add(Circle::new().set("cx", f.sx(x)).set("cy", f.sy(y)).set("r", 2.5).set("fill", color));
            if let Some(e) = e {
                doc = doc.add(
                    Line::new()
                        .set("x1", f.sx(x))
                        .set("x2", f.sx(x))
                        .set("y1", f.sy(y - e))
                        .set("y2", f.sy(y + e))
                        .set("stroke", color),
                );
            }
        }
        let ly = MARGIN.2 + 16.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN.1 - 110.0;
        doc = doc
            .add(Line::new().set("x1", lx).set("x2", lx + 20.0).set("y1", ly - 4.0).set("y2", ly - 4.0).set("stroke", color).set("stroke-width", 2))
            .add(text(lx + 26.0, ly, &s.label, "start"));
    }
    Ok(doc)
}

/// Heat map of `value(x, y)` on a rectangular grid; missing cells are grey.
/// Darker cells have smaller values.
pub fn heatmap(cells: &[(f64, f64, Option<f64>)], title: &str, xlabel: &str, ylabel: &str) -> Result<Document> {
    let mut xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument(format!("nothing to plot for `{title}`")));
    }
    let half = |v: &[f64]| if v.len() > 1 { (v[1] - v[0]) / 2.0 } else { 0.5 };
    let (hx, hy) = (half(&xs), half(&ys));
    let f = Frame {
        x: (xs[0] - hx, xs[xs.len() - 1] + hx),
        y: (ys[0] - hy, ys[ys.len() - 1] + hy),
    };
    // Log scale: objectives span orders of magnitude.
    let vals: Vec<f64> = cells.iter().filter_map(|c| c.2).filter(|v| *v > 0.0).map(f64::ln).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut doc = document();
    for &(x, y, v) in cells {
        let fill = match v {
            Some(v) if v > 0.0 && hi > lo => {
                let s = ((v.ln() - lo) / (hi - lo)).clamp(0.0, 1.0);
                let c = (40.0 + 215.0 * s) as u8;
                format!("rgb({c},{c},{})", (80.0 + 175.0 * s) as u8)
            }
            Some(_) => "rgb(40,40,80)".to_string(),
            None => "rgb(200,200,200)".to_string(),
        };
        let (xa, xb) = (f.sx(x - hx), f.sx(x + hx));
        let (ya, yb) = (f.sy(y + hy), f.sy(y - hy));
        doc = doc.add(
            Rectangle::new()
                .set("x", xa)
                .set("y", ya)
                .set("width", xb - xa)
                .set("height", yb - ya)
                .set("fill", fill),
        );
    }
    Ok(axes(doc, &f, title, xlabel, ylabel))
}

fn profile_series(rows: &[ProfileRow]) -> Vec<Series> {
    let mut by: BTreeMap<(usize, u64), BTreeMap<usize, Vec<(f64, f64, Option<f64>)>>> = BTreeMap::new();
    for r in rows {
        let err = (r.std_s.is_finite() && r.n_samples > 0).then(|| r.std_s / (r.n_samples as f64).sqrt());
        by.entry((r.l, r.p.to_bits()))
            .or_default()
            .entry(r.t)
            .or_default()
            .push((r.x as f64, r.mean_s, err));
    }
    by.into_iter()
        .filter_map(|((l, p), times)| {
            let t = times.keys().copied().filter(|&t| t <= 2 * l).max()?;
            let mut points = times.get(&t)?.clone();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Some(Series {
                label: format!("L={l} p={} t={t}", f64::from_bits(p)),
                points,
            })
        })
        .collect()
}

/// Draws every figure that the tables in `dir` support and returns the
/// files written. Failures are collected rather than propagated.
pub fn plot_directory(dir: &Path) -> (Vec<PathBuf>, Vec<String>) {
    let mut written = Vec::new();
    let mut errors = Vec::new();
    let mut save = |name: &str, doc: Result<Document>| {
        let path = dir.join(name);
        match doc.and_then(|d| svg::save(&path, &d).map_err(Error::from)) {
            Ok(()) => written.push(path),
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    };
    let profiles = dir.join(crate::run::PROFILE_FILE);
    if profiles.exists() {
        save(
            "profiles.svg",
            read_profile_csv(&profiles).and_then(|rows| line_plot(&profile_series(&rows), "Mean entanglement profile", "x", "S(x, t)")),
        );
    }
    let observables = dir.join(crate::run::OBSERVABLES_FILE);
    if observables.exists() {
        for (kind, name, label) in [(RatioKind::R12, "r12.svg", "R_1/2"), (RatioKind::R1d1, "r1d1.svg", "R_1/delta1")] {
            save(
                name,
                read_observables_csv(&observables).and_then(|rows| {
                    let (curves, _) = ratio_curves(&rows, kind, None, None)?;
                    let series: Vec<Series> = curves
                        .iter()
                        .map(|c| Series {
                            label: format!("L={}", c.l),
                            points: c.points().iter().map(|pt| (pt.p, pt.value, Some(pt.se))).collect(),
                        })
                        .collect();
                    line_plot(&series, label, "p", label)
                }),
            );
        }
    }
    let landscape = dir.join("landscape.csv");
    if landscape.exists() {
        save("landscape.svg", landscape_plot(&landscape));
    }
    (written, errors)
}

/// Heat map of a landscape table over `nu` and whichever of `theta`, `p_c`
/// varies (theta first).
pub fn landscape_plot(path: &Path) -> Result<Document> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<(f64, f64, Option<f64>, Option<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        let (Some(pc), Some(nu)) = (num(0), num(1)) else {
            return Err(Error::Schema {
                path: path.display().to_string(),
                message: "expected columns p_c,nu,theta,objective".into(),
            });
        };
        rows.push((pc, nu, num(2), num(3)));
    }
    let varies = |f: &dyn Fn(&(f64, f64, Option<f64>, Option<f64>)) -> Option<f64>| {
        let mut v: Vec<f64> = rows.iter().filter_map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len() > 1
    };
    if varies(&|r| r.2) {
        let cells: Vec<_> = rows.iter().filter_map(|r| r.2.map(|th| (r.1, th, r.3))).collect();
        heatmap(&min_over_rest(cells), "Collapse objective", "nu", "theta")
    } else {
        let cells: Vec<_> = rows.iter().map(|r| (r.1, r.0, r.3)).collect();
        heatmap(&min_over_rest(cells), "Collapse objective", "nu", "p_c")
    }
}

/// Profiles the landscape onto two axes, keeping the smallest objective.
fn min_over_rest(cells: Vec<(f64, f64, Option<f64>)>) -> Vec<(f64, f64, Option<f64>)> {
    let mut best: BTreeMap<(u64, u64), (f64, f64, Option<f64>)> = BTreeMap::new();
    for (x, y, v) in cells {
        let e = best.entry((x.to_bits(), y.to_bits())).or_insert((x, y, None));
        e.2 = match (e.2, v) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    best.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_positions() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().zip([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(ticks(0.05, 0.15).len(), 5);
        assert_eq!(fmt_tick(0.30000000000000004), "0.3");
        assert_eq!(fmt_tick(-0.0), "0");
    }

    #[test]
    fn plots_render() {
        let s = vec![Series {
            label: "L=4".into(),
            points: vec![(0.0, 1.0, Some(0.1)), (1.0, 2.0, None)],
        }];
        let doc = line_plot(&s, "t", "x", "y").unwrap().to_string();
        assert!(doc.contains("polyline") && doc.contains("L=4"));
        assert!(line_plot(&[], "t", "x", "y").is_err());
        let cells = vec![(1.0, 0.1, Some(2.0)), (2.0, 0.1, Some(20.0)), (1.0, 0.2, None), (2.0, 0.2, Some(1.0))];
        let h = heatmap(&cells, "h", "nu", "p_c").unwrap().to_string();
        assert_eq!(h.matches("<rect").count(), 6);
    }
}
