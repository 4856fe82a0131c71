//! Minimal SVG line plots: axes, ticks, legend, and one polyline per
//! series. Output is plain text built deterministically from the data, so
//! identical inputs give byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

/// One curve: equal-length coordinate slices, a legend label, a stroke
/// color, and an optional dash pattern.
pub struct Series<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: &'a str,
    /// SVG stroke-dasharray value; empty for a solid line.
    pub dash: &'a str,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".into();
    }
    let formatted = format!("{v:.3}");
    let trimmed = formatted.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Render a line plot of the given series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x_lo, x_hi) = range(series.iter().flat_map(|s| s.xs.iter().copied()));
    let (mut y_lo, mut y_hi) = range(series.iter().flat_map(|s| s.ys.iter().copied()));
    let pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |v: f64| MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let to_y = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .expect("string write");
    writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    )
    .expect("string write");
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{title}</text>",
        MARGIN_LEFT + plot_w / 2.0
    )
    .expect("string write");

    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let px = to_x(xv);
        let py = to_y(yv);
        writeln!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ccc\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        )
        .expect("string write");
        writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ccc\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>",
            MARGIN_TOP + plot_h + 18.0,
            tick_label(xv)
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>",
            MARGIN_LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        )
        .expect("string write");
    }

    writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"black\"/>"
    )
    .expect("string write");
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{x_label}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    )
    .expect("string write");
    writeln!(
        out,
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\" transform=\"rotate(-90 20 {:.1})\">{y_label}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .expect("string write");

    for s in series {
        let mut points = String::new();
        for (x, y) in s.xs.iter().zip(s.ys) {
            write!(points, "{:.2},{:.2} ", to_x(*x), to_y(*y)).expect("string write");
        }
        let dash = if s.dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{}\"", s.dash)
        };
        writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>",
            points.trim_end(),
            s.color
        )
        .expect("string write");
    }

    for (i, s) in series.iter().enumerate() {
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let dash = if s.dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{}\"", s.dash)
        };
        writeln!(
            out,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" \
             stroke-width=\"1.5\"{dash}/>",
            lx + 26.0,
            s.color
        )
        .expect("string write");
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 32.0,
            ly + 4.0,
            s.label
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}
