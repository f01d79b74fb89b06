use std::fmt::Write;

use super::models::{ModelGroup, ModelKind};
use super::report::Curves;
use super::PLOT_WINDOW;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureGroup {
    /// Tree ensembles and KNN against the network.
    Trees,
    /// Linear models against the network.
    Linear,
}

impl FigureGroup {
    fn includes(self, kind: ModelKind) -> bool {
        match (self, kind.group()) {
            (_, ModelGroup::Neural) => true,
            (FigureGroup::Trees, g) => g == ModelGroup::TreeOrKnn,
            (FigureGroup::Linear, g) => g == ModelGroup::Linear,
        }
    }

    fn title(self) -> &'static str {
        match self {
            FigureGroup::Trees => "DNN vs ensemble and KNN models",
            FigureGroup::Linear => "DNN vs linear models",
        }
    }
}

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 240.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn polyline(xs: &[f64], ys: &[f64], sx: &impl Fn(f64) -> f64, sy: &impl Fn(f64) -> f64) -> String {
    let mut pts = String::new();
    for (x, y) in xs.iter().zip(ys) {
        if y.is_finite() {
            let _ = write!(pts, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
    }
    pts.trim_end().to_string()
}

/// SVG of the true function, the group's prediction curves, and a shaded
/// band for `x >= boundary`, over the fixed plot window.
pub fn render_figure(curves: &Curves, boundary: f64, group: FigureGroup) -> String {
    let (x0, x1) = PLOT_WINDOW;
    let members: Vec<&(ModelKind, Vec<f64>)> = curves.models.iter().filter(|(k, _)| group.includes(*k)).collect();

    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for v in std::iter::once(&curves.y_true).chain(members.iter().map(|(_, v)| v)) {
        for y in v.iter().filter(|y| y.is_finite()) {
            y_lo = y_lo.min(*y);
            y_hi = y_hi.max(*y);
        }
    }
    if !(y_lo < y_hi) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{} over x in [{x0}, {x1}]</title>"#, group.title());
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let band = sx(boundary.clamp(x0, x1));
    let _ = writeln!(
        s,
        r##"<rect class="test-region" x="{band:.2}" y="{TOP}" width="{:.2}" height="{plot_h}" fill="#f8d0d0" fill-opacity="0.6"/>"##,
        LEFT + plot_w - band
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    );

    let mut tick = (x0 * 10.0).round() / 10.0;
    while tick <= x1 + 1e-9 {
        let px = sx(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{tick:.1}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
        tick += 0.1;
    }
    let step = nice_step(y_hi - y_lo);
    let mut yt = (y_lo / step).ceil() * step;
    while yt <= y_hi {
        let py = sy(yt);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            (yt * 1e6).round() / 1e6
        );
        yt += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">x</text><text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        LEFT + plot_w / 2.0,
        TOP - 15.0,
        group.title()
    );

    let (true_color, dash) = match group {
        FigureGroup::Trees => ("#e377c2", ""),
        FigureGroup::Linear => ("#7b2d8b", r#" stroke-dasharray="6,4""#),
    };
    let mut legend = vec![("True function".to_string(), true_color.to_string(), dash.to_string())];
    let _ = writeln!(
        s,
        r#"<polyline class="true-curve" points="{}" fill="none" stroke="{true_color}" stroke-width="2.5"{dash}/>"#,
        polyline(&curves.x, &curves.y_true, &sx, &sy)
    );
    for (i, (kind, ys)) in members.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="model-curve" data-model="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            kind.id(),
            polyline(&curves.x, ys, &sx, &sy)
        );
        legend.push((kind.display_name().to_string(), color.to_string(), String::new()));
    }
    for (i, (label, color, dash)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 25.0,
            lx + 30.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
