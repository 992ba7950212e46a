//! Minimal static SVG plots: polylines and box plots.

use std::fmt::Write;

use ipcw::simulation::Quantiles;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
    /// SVG `stroke-dasharray`, `None` for solid.
    pub dash: Option<&'a str>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let labels = [
        (x0, y0 + 16.0, "middle", format!("{:.2}", f.x.0)),
        (x1, y0 + 16.0, "middle", format!("{:.2}", f.x.1)),
        (x0 - 6.0, y0, "end", format!("{:.3}", f.y.0)),
        (x0 - 6.0, y1 + 4.0, "end", format!("{:.3}", f.y.1)),
    ];
    for (x, y, anchor, text) in labels {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_plot(title: &str, series: &[Series<'_>]) -> String {
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let fold = |sel: fn(&(f64, f64)) -> f64| {
        finite()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (xr, yr) = (fold(|p| p.0), fold(|p| p.1));
    let frame = if xr.0.is_finite() {
        Frame::new(xr, yr)
    } else {
        Frame::new((0.0, 1.0), (0.0, 1.0))
    };

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame);
    for (k, s) in series.iter().enumerate() {
        // missing points break the line
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", frame.px(x), frame.py(y));
            pen_down = true;
        }
        let dash = s
            .dash
            .map(|v| format!(r#" stroke-dasharray="{v}""#))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            d.trim_end(),
            s.color
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="11" fill="{}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            s.color,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One box (5%-25%-50%-75%-95%) per labelled group.
pub fn box_plot(title: &str, groups: &[(String, Quantiles)]) -> String {
    let lo = groups.iter().map(|g| g.1.q05).fold(f64::INFINITY, f64::min);
    let hi = groups.iter().map(|g| g.1.q95).fold(f64::NEG_INFINITY, f64::max);
    let frame = if lo.is_finite() && hi.is_finite() {
        Frame::new((0.0, groups.len() as f64), (lo.min(0.0), hi.max(0.0)))
    } else {
        Frame::new((0.0, 1.0), (0.0, 1.0))
    };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame);
    let zero = frame.py(0.0);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="gray" stroke-dasharray="3,3"/>"#,
        WIDTH - MARGIN
    );
    for (k, (label, q)) in groups.iter().enumerate() {
        if !q.q50.is_finite() {
            continue;
        }
        let cx = frame.px(k as f64 + 0.5);
        let half = 0.3 * (frame.px(1.0) - frame.px(0.0));
        let (l, r) = (cx - half, cx + half);
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            frame.py(q.q05),
            frame.py(q.q95)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{l:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
            frame.py(q.q75),
            r - l,
            frame.py(q.q25) - frame.py(q.q75)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{l:.2}" y1="{m:.2}" x2="{r:.2}" y2="{m:.2}" stroke="black" stroke-width="2"/>"#,
            m = frame.py(q.q50)
        );
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 30.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
