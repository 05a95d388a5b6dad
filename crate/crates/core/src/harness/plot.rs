//! Self-contained SVG line plots.

use std::fmt::Write as _;

use super::sim::SimLog;

const W: f64 = 900.0;
const H: f64 = 360.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 30.0, 70.0]; // top right bottom left
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Line plot with optional dashed horizontal line at `hline`.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], hline: Option<(f64, &str)>) -> String {
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ys = series
        .iter()
        .flat_map(|s| s.y.iter())
        .chain(hline.iter().map(|(y, _)| y))
        .filter(finite);
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };

    let [top, right, bottom, left] = MARGIN;
    let pw = W - left - right;
    let ph = H - top - bottom;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(xv),
            top + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        H - 4.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        esc(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        // thin to at most ~2000 vertices
        let stride = (ser.x.len() / 2000).max(1);
        for (j, (x, y)) in ser.x.iter().zip(ser.y).enumerate().step_by(stride) {
            let _ = write!(d, "{}{:.1},{:.1} ", if j == 0 { "M" } else { "L" }, px(*x), py(*y));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            left + 10.0 + 160.0 * i as f64,
            top - 8.0,
            esc(ser.label)
        );
    }
    if let Some((y, label)) = hline {
        let _ = writeln!(
            s,
            r#"<line x1="{left}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="black" stroke-dasharray="6 4"/>"#,
            left + pw,
            py(y),
            py(y)
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left + pw - 4.0, py(y) - 4.0, esc(label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Power plot: reference, demand and generated power in MW.
pub fn power_plot(log: &SimLog) -> String {
    let mw = |c: &[f64]| c.iter().map(|p| p / 1e6).collect::<Vec<_>>();
    let (r, d, g) = (mw(&log.p_ref), mw(&log.p_dem), mw(&log.p_gen));
    line_plot(
        "Power",
        "time [s]",
        "power [MW]",
        &[
            Series { label: "P_ref", x: &log.t, y: &r },
            Series { label: "P_dem", x: &log.t, y: &d },
            Series { label: "P_gen", x: &log.t, y: &g },
        ],
        None,
    )
}

/// Thrust plot in kN with the bound drawn when it is finite.
pub fn thrust_plot(log: &SimLog, bound: Option<f64>) -> String {
    let kn = |c: &[f64]| c.iter().map(|f| f / 1e3).collect::<Vec<_>>();
    let (tr, est) = (kn(&log.f_true), kn(&log.f_hat));
    line_plot(
        "Thrust",
        "time [s]",
        "thrust [kN]",
        &[
            Series { label: "F_true", x: &log.t, y: &tr },
            Series { label: "F_hat", x: &log.t, y: &est },
        ],
        bound.filter(|b| b.is_finite()).map(|b| (b / 1e3, "bound")),
    )
}
