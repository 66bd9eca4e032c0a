use std::fmt::Write;

use super::VariantRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone SVG box plot of absolute prediction errors, one box per
/// variant. Whiskers span min to max; the marker is the MAE.
pub fn mae_box_plot_svg(rows: &[VariantRow]) -> String {
    let ok: Vec<_> = rows.iter().filter_map(|r| r.result.as_ref().ok().map(|s| (r.variant.label(), s))).collect();
    let ymax = ok.iter().map(|(_, s)| s.max).fold(1.0f64, f64::max) * 1.05;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (1.0 - v / ymax);
    let slot = (WIDTH - LEFT - RIGHT) / rows.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle">Absolute RSRP error by indoor-loss variant</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        HEIGHT - BOTTOM
    );
    for k in 0..=4 {
        let v = ymax * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">MAE [dB]</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (i, r) in rows.iter().enumerate() {
        let label = escape(r.variant.label());
        let cx = LEFT + slot * (i as f64 + 0.5);
        let half = slot * 0.25;
        let _ = writeln!(s, r#"<g class="box" data-variant="{label}">"#);
        match &r.result {
            Ok(st) => {
                let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(st.min), y(st.max));
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="steelblue" fill-opacity="0.5" stroke="black"/>"#,
                    cx - half,
                    y(st.q3),
                    2.0 * half,
                    (y(st.q1) - y(st.q3)).max(0.5)
                );
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                    cx - half,
                    y(st.median),
                    cx + half,
                    y(st.median)
                );
                let _ = writeln!(s, r#"<circle cx="{cx:.1}" cy="{:.1}" r="3" fill="darkred"/>"#, y(st.mae_db));
            }
            Err(e) => {
                let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" fill="gray">n/a</text>"#, y(ymax / 2.0));
                let _ = writeln!(s, "<title>{}</title>", escape(&e.to_string()));
            }
        }
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, HEIGHT - BOTTOM + 18.0);
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
