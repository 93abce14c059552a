//! SVG pictures of a vh-barrier: the max-min plane and its doubled-axis
//! image.

use std::fmt::Write as _;

use skorokhod::{DiscreteMeasure, Side, VhBarrier};

pub const V_COLOR: &str = "#8F00FF";
pub const H_COLOR: &str = "#FF69B4";

const PANEL: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// Affine map from `[lo, hi]` onto a panel side.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn at(&self, x: f64) -> f64 {
        self.from + (x - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn range(b: &VhBarrier, lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> (f64, f64) {
    let xs = b
        .coordinates()
        .into_iter()
        .chain(lambda.locations())
        .chain(mu.locations());
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = 0.1 * (hi - lo).max(1.0);
    (lo - pad, hi + pad)
}

fn line(out: &mut String, (x1, y1): (f64, f64), (x2, y2): (f64, f64), color: &str, extra: &str) {
    writeln!(
        out,
        r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="2.5"{extra}/>"#
    )
    .unwrap();
}

fn text(out: &mut String, (x, y): (f64, f64), anchor: &str, s: &str) {
    writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{s}</text>"#).unwrap();
}

/// Two panels: the barrier in the `(max, min)` plane, with h-line tails
/// dashed, and the inverse barrier on `D × R`.
pub fn barrier_svg(b: &VhBarrier, lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> String {
    let (lo, hi) = range(b, lambda, mu);
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let mx = Axis {
        lo,
        hi,
        from: MARGIN,
        to: MARGIN + PANEL,
    };
    let my = Axis {
        lo,
        hi,
        from: MARGIN + PANEL,
        to: MARGIN,
    };
    let p = |max: f64, min: f64| (mx.at(max), my.at(min));
    writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999"/>"##
    )
    .unwrap();
    line(&mut out, p(lo, lo), p(hi, hi), "#999", r#" stroke-width="1""#);
    for l in b.v_lines() {
        line(&mut out, p(l.max, l.depth), p(l.max, l.max), V_COLOR, "");
    }
    for l in b.h_lines() {
        line(&mut out, p(l.min, l.min), p(l.right, l.min), H_COLOR, "");
        line(
            &mut out,
            p(l.min, lo),
            p(l.min, l.min),
            H_COLOR,
            r#" stroke-dasharray="6 4""#,
        );
    }
    for a in lambda.atoms() {
        let (x, y) = p(a.x, a.x);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#).unwrap();
    }
    text(
        &mut out,
        (MARGIN + PANEL / 2.0, height - 12.0),
        "middle",
        "running maximum",
    );
    text(
        &mut out,
        (MARGIN + PANEL / 2.0, MARGIN - 16.0),
        "middle",
        "max-min plane",
    );
    writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">running minimum</text>"#,
        MARGIN + PANEL / 2.0,
        MARGIN + PANEL / 2.0
    )
    .unwrap();

    // doubled axis: the left half runs backwards
    let left = 2.0 * MARGIN + PANEL;
    let half = PANEL / 2.0;
    let dl = Axis {
        lo: hi,
        hi: lo,
        from: left,
        to: left + half,
    };
    let dr = Axis {
        lo,
        hi,
        from: left + half,
        to: left + PANEL,
    };
    let y = Axis {
        lo,
        hi,
        from: MARGIN + PANEL,
        to: MARGIN,
    };
    writeln!(
        out,
        r##"<rect x="{left}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999"/>"##
    )
    .unwrap();
    line(
        &mut out,
        (left + half, MARGIN),
        (left + half, MARGIN + PANEL),
        "#999",
        r#" stroke-width="1" stroke-dasharray="2 3""#,
    );
    for &(level, extent) in b.to_dbarrier().levels() {
        let (end, color) = match extent.side {
            Side::Left => (dl.at(extent.value), V_COLOR),
            Side::Right => (dr.at(extent.value), H_COLOR),
        };
        line(&mut out, (left, y.at(level)), (end, y.at(level)), color, "");
    }
    text(&mut out, (left + half / 2.0, height - 12.0), "middle", "R' (reversed)");
    text(&mut out, (left + 1.5 * half, height - 12.0), "middle", "R");
    text(&mut out, (left + half, MARGIN - 16.0), "middle", "doubled axis D x R");
    out.push_str("</svg>\n");
    out
}
