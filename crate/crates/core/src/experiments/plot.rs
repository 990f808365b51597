//! Minimal deterministic SVG rendering: line/scatter charts and cell grids.

use std::fmt::Write;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    /// Categorical x tick labels at the given positions.
    pub x_ticks: Option<Vec<(f64, String)>>,
    /// Draw markers only, no connecting lines.
    pub scatter: bool,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            ..Chart::default()
        }
    }
}

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (0.01..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

pub fn line_chart(chart: &Chart, series: &[Series]) -> String {
    let ty = |y: f64| {
        if chart.log_y {
            y.max(f64::MIN_POSITIVE).log10()
        } else {
            y
        }
    };
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
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = span(x0, x1);
    let (y0, y1) = if chart.log_y {
        span(y0.floor(), y1.ceil())
    } else {
        span(y0.min(0.0), y1)
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (ty(y) - y0) / (y1 - y0) * ph;
    let py_raw = |t: f64| TOP + ph - (t - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    // y ticks
    let y_ticks: Vec<f64> = if chart.log_y {
        (y0 as i64..=y1 as i64).map(|e| e as f64).collect()
    } else {
        (0..=4)
            .map(|i| y0 + (y1 - y0) * f64::from(i) / 4.0)
            .collect()
    };
    for t in y_ticks {
        let y = py_raw(t);
        let label = if chart.log_y {
            fmt_num(10f64.powf(t))
        } else {
            fmt_num(t)
        };
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    // x ticks
    let x_ticks: Vec<(f64, String)> = match &chart.x_ticks {
        Some(t) => t.clone(),
        None => (0..=4)
            .map(|i| {
                let v = x0 + (x1 - x0) * f64::from(i) / 4.0;
                (v, fmt_num(v))
            })
            .collect(),
    };
    for (v, label) in x_ticks {
        let x = px(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 19.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !chart.scatter && ser.points.len() > 1 {
            let path: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        let r = if chart.scatter { 2.0 } else { 3.0 };
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{ly}">{}</text>"#,
            ly - 10.0,
            lx + 18.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    DontCare,
    Active,
    /// An active cell the processing strategy never energized.
    Skipped,
}

impl CellClass {
    fn color(&self) -> &'static str {
        match self {
            CellClass::DontCare => "#f5d142",
            CellClass::Active => "#2b6cb0",
            CellClass::Skipped => "#a0a0a0",
        }
    }

    fn label(&self) -> &'static str {
        match self {
            CellClass::DontCare => "dontcare",
            CellClass::Active => "active",
            CellClass::Skipped => "skipped",
        }
    }
}

/// Renders a row-major grid of cell classes; runs of equal class in a row
/// share one rectangle.
pub fn grid_heatmap(title: &str, n_rows: usize, n_cols: usize, classes: &[CellClass]) -> String {
    assert_eq!(classes.len(), n_rows * n_cols, "class grid size");
    let px = (480.0 / n_rows.max(n_cols).max(1) as f64).floor().max(1.0);
    let (gw, gh) = (px * n_cols as f64, px * n_rows as f64);
    let (ox, oy) = (20.0, 40.0);
    let w = ox + gw + 140.0;
    let h = oy + gh + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{ox}" y="24" font-size="15">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect class="dontcare" x="{ox}" y="{oy}" width="{gw}" height="{gh}" fill="{}"/>"#,
        CellClass::DontCare.color()
    );
    for r in 0..n_rows {
        let row = &classes[r * n_cols..(r + 1) * n_cols];
        let mut c = 0;
        while c < n_cols {
            let class = row[c];
            let start = c;
            while c < n_cols && row[c] == class {
                c += 1;
            }
            if class != CellClass::DontCare {
                let _ = writeln!(
                    s,
                    r#"<rect class="{}" x="{}" y="{}" width="{}" height="{px}" fill="{}"/>"#,
                    class.label(),
                    ox + px * start as f64,
                    oy + px * r as f64,
                    px * (c - start) as f64,
                    class.color()
                );
            }
        }
    }
    for (i, class) in [CellClass::DontCare, CellClass::Active, CellClass::Skipped]
        .iter()
        .enumerate()
    {
        let ly = oy + 14.0 + 18.0 * i as f64;
        let lx = ox + gw + 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{ly}">{}</text>"#,
            ly - 10.0,
            class.color(),
            lx + 18.0,
            class.label()
        );
    }
    s.push_str("</svg>\n");
    s
}
