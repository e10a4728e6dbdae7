//! Minimal deterministic SVG charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str, width: f64, height: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        width / 2.0,
        escape(title)
    );
    s
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn draw(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y0 - y1
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xv:.3}</text>",
                self.px(xv),
                y0 + 16.0
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yv:.3}</text>",
                x0 - 4.0,
                self.py(yv) + 4.0
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            W / 2.0,
            H - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            "<text x=\"15\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.1})\">{}</text>",
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
    }
}

/// One point series per category.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub fn scatter(title: &str, xlabel: &str, ylabel: &str, series: &[Series], diagonal: bool) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let mut axes = Axes {
        x: range(all().map(|p| p.0)),
        y: range(all().map(|p| p.1)),
    };
    if diagonal {
        let lo = axes.x.0.min(axes.y.0);
        let hi = axes.x.1.max(axes.y.1);
        axes = Axes { x: (lo, hi), y: (lo, hi) };
    }
    let mut s = header(title, W, H);
    axes.draw(&mut s, xlabel, ylabel);
    if diagonal {
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
            axes.px(axes.x.0),
            axes.py(axes.x.0),
            axes.px(axes.x.1),
            axes.py(axes.x.1)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.7\"/>",
                axes.px(x),
                axes.py(y)
            );
        }
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{color}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            W - MARGIN + 8.0,
            ly,
            W - MARGIN + 15.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Labeled grid; `None` cells are drawn grey.
pub fn heatmap(title: &str, rows: &[String], cols: &[String], cells: &[Vec<Option<f64>>], lo: f64, hi: f64) -> String {
    let cell = 28.0;
    let left = 150.0;
    let top = 130.0;
    let width = left + cell * cols.len() as f64 + 40.0;
    let height = top + cell * rows.len() as f64 + 40.0;
    let mut s = header(title, width.max(300.0), height);
    for (j, c) in cols.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" transform=\"rotate(-60 {x:.1} {:.1})\">{}</text>",
            top - 6.0,
            top - 6.0,
            escape(c)
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            y + cell / 2.0 + 4.0,
            escape(r)
        );
        for (j, v) in cells[i].iter().enumerate() {
            let x = left + cell * j as f64;
            let (fill, label) = match v {
                Some(v) => {
                    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                    // white to dark blue
                    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
                    (format!("#{:02x}{:02x}{:02x}", c(255.0, 8.0), c(255.0, 48.0), c(255.0, 107.0)), format!("{v:.0}"))
                }
                None => ("#cccccc".to_string(), String::new()),
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"white\"/>"
            );
            if !label.is_empty() {
                let _ = writeln!(
                    s,
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\" fill=\"{}\">{label}</text>",
                    x + cell / 2.0,
                    y + cell / 2.0 + 3.0,
                    if v.unwrap_or(0.0) > (lo + hi) / 2.0 { "white" } else { "black" }
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Dots grouped along the x axis by category.
pub fn dot_groups(title: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let n = groups.len().max(1) as f64;
    let axes = Axes {
        x: (-0.5, n - 0.5),
        y: range(groups.iter().flat_map(|g| g.1.iter().copied())),
    };
    let mut s = header(title, W, H);
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for i in 0..=4 {
        let yv = axes.y.0 + i as f64 / 4.0 * (axes.y.1 - axes.y.0);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yv:.3}</text>",
            x0 - 4.0,
            axes.py(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (i, (name, vals)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = axes.px(i as f64);
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y0 + 16.0,
            escape(name)
        );
        for (k, v) in vals.iter().enumerate() {
            // deterministic horizontal jitter
            let dx = ((k * 37) % 21) as f64 - 10.0;
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.7\"/>",
                cx + dx,
                axes.py(*v)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
