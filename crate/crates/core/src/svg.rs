//! Minimal SVG heatmaps.

use std::fmt::Write;

const CELL: f64 = 4.0;
const MARGIN: f64 = 40.0;
const BAR: f64 = 16.0;

/// Anchors of a perceptually ordered dark-blue to yellow ramp.
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn colour(u: f64) -> String {
    let u = u.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (u.floor() as usize).min(RAMP.len() - 2);
    let f = u - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heatmap of `values[row][col]`; row 0 is drawn at the top and NaN cells
/// are left grey. `x_range`/`y_range` label the column and row axes.
pub fn heatmap(values: &[Vec<f64>], title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let rows = values.len();
    let cols = values.first().map_or(0, |r| r.len());
    let finite = values.iter().flatten().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = finite.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let w = cols as f64 * CELL;
    let h = rows as f64 * CELL;
    let width = w + 2.0 * MARGIN + 3.0 * BAR + 60.0;
    let height = h + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{}</text>"#, MARGIN * 0.6, escape(title));
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let fill = if v.is_finite() { colour((v - lo) / span) } else { "#bbbbbb".into() };
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#,
                MARGIN + c as f64 * CELL,
                MARGIN + r as f64 * CELL
            );
        }
    }
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{:.3}</text>"#, MARGIN + h + 14.0, x_range.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN + w,
        MARGIN + h + 14.0,
        x_range.1
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + 10.0,
        y_range.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + h,
        y_range.1
    );
    let bx = MARGIN + w + BAR;
    let steps = 32;
    for k in 0..steps {
        let u = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{}" width="{BAR}" height="{}" fill="{}"/>"#,
            MARGIN + k as f64 * h / steps as f64,
            h / steps as f64,
            colour(u)
        );
    }
    if lo.is_finite() {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{hi:.3e}</text>"#, bx + BAR + 4.0, MARGIN + 10.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{lo:.3e}</text>"#, bx + BAR + 4.0, MARGIN + h);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_cell_per_value() {
        let v = vec![vec![0.0, 1.0, f64::NAN], vec![2.0, 3.0, 4.0]];
        let s = heatmap(&v, "a < b", (-1.0, 1.0), (-1.0, 1.0));
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<rect").count(), 6 + 32);
        assert!(s.contains("#bbbbbb"));
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
    }
}
