//! Minimal polyline SVG plots (fixed 800x500 viewBox, log or linear axes).
//! CSV files remain the authoritative artifacts; these are quick visual
//! companions rendered without external tooling.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;

pub const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// One curve: a label, a stroke color and polyline segments (a gap between
/// segments renders as a break in the line).
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub segments: Vec<Vec<(f64, f64)>>,
}

pub struct Panel {
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// Render stacked panels sharing one x axis into a single 800x500 SVG.
pub fn render(title: &str, x_label: &str, log_x: bool, panels: &[Panel]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    let n = panels.len().max(1) as f64;
    let panel_gap = 26.0;
    let panel_height = (HEIGHT - MARGIN_T - MARGIN_B - panel_gap * (n - 1.0)) / n;

    // Shared x range over all panels.
    let xs: Vec<f64> = panels
        .iter()
        .flat_map(|p| p.series.iter())
        .flat_map(|s| s.segments.iter())
        .flat_map(|seg| seg.iter().map(|(x, _)| *x))
        .collect();
    let (x_lo, x_hi) = range(&xs, log_x);

    for (pi, panel) in panels.iter().enumerate() {
        let top = MARGIN_T + pi as f64 * (panel_height + panel_gap);
        let bottom = top + panel_height;
        let ys: Vec<f64> = panel
            .series
            .iter()
            .flat_map(|s| s.segments.iter())
            .flat_map(|seg| seg.iter().map(|(_, y)| *y))
            .collect();
        let (y_lo, y_hi) = range(&ys, panel.log_y);

        let x_map = |x: f64| -> f64 {
            let t = coord(x, x_lo, x_hi, log_x);
            MARGIN_L + t * (WIDTH - MARGIN_L - MARGIN_R)
        };
        let y_map = |y: f64| -> f64 {
            let t = coord(y, y_lo, y_hi, panel.log_y);
            bottom - t * (bottom - top)
        };

        out.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"none\" stroke=\"#888\"/>\n",
            WIDTH - MARGIN_L - MARGIN_R,
            panel_height
        ));

        for (tick, label) in ticks(x_lo, x_hi, log_x) {
            let px = x_map(tick);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{bottom:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>\n",
                top
            ));
            if pi + 1 == panels.len() {
                out.push_str(&format!(
                    "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>\n",
                    bottom + 16.0
                ));
            }
        }
        for (tick, label) in ticks(y_lo, y_hi, panel.log_y) {
            let py = y_map(tick);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#eee\"/>\n",
                WIDTH - MARGIN_R
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>\n",
                MARGIN_L - 6.0,
                py + 4.0
            ));
        }

        for (si, s) in panel.series.iter().enumerate() {
            for seg in &s.segments {
                if seg.is_empty() {
                    continue;
                }
                let pts: Vec<String> = seg
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", x_map(*x), y_map(*y)))
                    .collect();
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                    pts.join(" "),
                    s.color
                ));
            }
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{}\">{}</text>\n",
                WIDTH - MARGIN_R - 150.0,
                top + 16.0 + 14.0 * si as f64,
                s.color,
                escape(&s.label)
            ));
        }

        out.push_str(&format!(
            "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" \
             text-anchor=\"middle\">{}</text>\n",
            (top + bottom) / 2.0,
            (top + bottom) / 2.0,
            escape(&panel.y_label)
        ));
    }

    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    ));
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: &[f64], log: bool) -> (f64, f64) {
    let usable: Vec<f64> = vals
        .iter()
        .cloned()
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .collect();
    if usable.is_empty() {
        return if log { (0.1, 10.0) } else { (0.0, 1.0) };
    }
    let lo = usable.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = usable.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        if log {
            (lo / 2.0, hi * 2.0)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    } else {
        (lo, hi)
    }
}

fn coord(v: f64, lo: f64, hi: f64, log: bool) -> f64 {
    let t = if log {
        (v.max(f64::MIN_POSITIVE).log10() - lo.log10()) / (hi.log10() - lo.log10())
    } else {
        (v - lo) / (hi - lo)
    };
    t.clamp(0.0, 1.0)
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let k_lo = lo.log10().ceil() as i32;
        let k_hi = hi.log10().floor() as i32;
        let step = (((k_hi - k_lo).max(0) as usize / 8) + 1) as i32;
        (k_lo..=k_hi)
            .step_by(step as usize)
            .map(|k| (10f64.powi(k), format!("1e{k}")))
            .collect()
    } else {
        (0..=4)
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / 4.0;
                (v, format!("{v:.3}"))
            })
            .collect()
    }
}
