//! Minimal deterministic SVG line plots.

use std::fmt::Write;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub struct Series {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Palette index; `None` draws in grey.
    pub color: Option<usize>,
    pub width: f64,
}

impl Series {
    pub fn new(xs: &[f64], ys: &[f64], color: Option<usize>) -> Self {
        Series {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            color,
            width: 1.2,
        }
    }

    pub fn bold(mut self) -> Self {
        self.width = 2.5;
        self
    }
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>) -> Self {
        Panel {
            title: title.into(),
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (&x, &y) in s.xs.iter().zip(&s.ys) {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if b.1 - b.0 <= 0.0 {
            b.1 = b.0 + 1.0;
        }
        if b.3 - b.2 <= 0.0 {
            b.2 -= 0.5;
            b.3 += 0.5;
        }
        let pad = 0.05 * (b.3 - b.2);
        (b.0, b.1, b.2 - pad, b.3 + pad)
    }
}

const W: f64 = 320.0;
const H: f64 = 240.0;
const M: f64 = 30.0;

/// Panels side by side in one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let total = W * panels.len() as f64;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0}" height="{H:.0}" viewBox="0 0 {total:.0} {H:.0}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (k, p) in panels.iter().enumerate() {
        let ox = W * k as f64;
        let (x0, x1, y0, y1) = p.bounds();
        let sx = |x: f64| ox + M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        writeln!(out, r#"<g class="panel" id="panel-{k}">"#).unwrap();
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{M:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="0.8"/>"#,
            ox + M,
            W - 2.0 * M,
            H - 2.0 * M
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            ox + W / 2.0,
            M - 10.0,
            escape(&p.title)
        )
        .unwrap();
        for s in &p.series {
            let color = s.color.map_or("#999999", |c| PALETTE[c % PALETTE.len()]);
            let mut pts = String::new();
            for (&x, &y) in s.xs.iter().zip(&s.ys) {
                write!(pts, "{:.2},{:.2} ", sx(x), sy(y)).unwrap();
            }
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="{:.1}" points="{}"/>"#,
                s.width,
                pts.trim_end()
            )
            .unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_group_per_panel() {
        let mut a = Panel::new("a < b");
        a.push(Series::new(&[0.0, 1.0], &[0.0, 1.0], Some(0)));
        let b = Panel::new("empty");
        let svg = render(&[a, b]);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a &lt; b"));
    }
}
