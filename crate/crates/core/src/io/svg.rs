//! Deterministic SVG 1.1 rendering on a fixed 800×800 canvas.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::Gaussian;
use crate::project::ellipse_outline;
use crate::sensitivity::{EigenCurves, FactorTrace};

pub const CANVAS: f64 = 800.0;
const CENTER: f64 = CANVAS / 2.0;
/// Pixel radius of the unit circle in trace plots.
pub const UNIT_RADIUS: f64 = 360.0;
const MARGIN: f64 = 60.0;
const ELLIPSE_SEGMENTS: usize = 96;
const LABEL_MIN_NORM: f64 = 0.15;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">",
        c = CANVAS
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{c}\" height=\"{c}\" fill=\"white\"/>",
        c = CANVAS
    )
    .unwrap();
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|&(x, y)| format!("{},{}", num(x), num(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn trace_px(x: f64, y: f64) -> (f64, f64) {
    (CENTER + UNIT_RADIUS * x, CENTER - UNIT_RADIUS * y)
}

/// Factor traces inside the unit circle. The `s ≤ 1` part of each trace is
/// shaded against the origin, the full trace is a polyline ending in an
/// arrowhead, and traces that never move are drawn as a dot.
pub fn render_traces_svg(traces: &[FactorTrace], dim_names: &[String]) -> Result<String> {
    if let Some(p) = traces.iter().flat_map(|t| &t.points).find(|p| p.len() != 2) {
        return Err(Error::invalid(format!(
            "trace rendering is two-dimensional; got q = {}, use q = 2",
            p.len()
        )));
    }
    let mut out = String::new();
    header(&mut out);
    out.push_str("<defs>\n");
    for t in traces {
        writeln!(
            out,
            "<marker id=\"arrow-{a}\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"8\" markerHeight=\"8\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"{c}\"/></marker>",
            a = t.axis,
            c = color(t.axis)
        )
        .unwrap();
    }
    out.push_str("</defs>\n");
    writeln!(
        out,
        "<line x1=\"{l}\" y1=\"{c}\" x2=\"{r}\" y2=\"{c}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
        l = num(CENTER - UNIT_RADIUS),
        r = num(CENTER + UNIT_RADIUS),
        c = num(CENTER)
    )
    .unwrap();
    writeln!(
        out,
        "<line x1=\"{c}\" y1=\"{t}\" x2=\"{c}\" y2=\"{b}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
        t = num(CENTER - UNIT_RADIUS),
        b = num(CENTER + UNIT_RADIUS),
        c = num(CENTER)
    )
    .unwrap();
    writeln!(
        out,
        "<circle cx=\"{c}\" cy=\"{c}\" r=\"{r}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>",
        c = num(CENTER),
        r = num(UNIT_RADIUS)
    )
    .unwrap();

    for t in traces {
        let c = color(t.axis);
        let name = dim_names
            .get(t.axis)
            .cloned()
            .unwrap_or_else(|| format!("x{}", t.axis + 1));
        for (sign, pts) in [(1.0, t.points.clone()), (-1.0, t.mirrored())] {
            let px: Vec<(f64, f64)> = pts.iter().map(|p| trace_px(p[0], p[1])).collect();
            let Some(&last) = px.last() else { continue };
            if t.is_stationary() {
                writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{c}\"/>",
                    num(last.0),
                    num(last.1)
                )
                .unwrap();
            } else {
                let split = t.region_split.min(px.len());
                if split >= 1 {
                    let mut region = vec![(CENTER, CENTER)];
                    region.extend_from_slice(&px[..split]);
                    writeln!(
                        out,
                        "<polygon points=\"{}\" fill=\"{c}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
                        points_attr(&region)
                    )
                    .unwrap();
                }
                writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" marker-end=\"url(#arrow-{})\"/>",
                    points_attr(&px),
                    t.axis
                )
                .unwrap();
            }
            if sign > 0.0 {
                // traces that collapse to the origin are labeled at their start
                let anchor = [pts.last().unwrap(), &pts[0]]
                    .into_iter()
                    .find(|p| p.norm() >= LABEL_MIN_NORM);
                let (lx, ly) = match anchor {
                    Some(p) => {
                        let r = p.norm();
                        trace_px(p[0] / r * (r + 0.08), p[1] / r * (r + 0.08))
                    }
                    None => (last.0 + 8.0, last.1 - 8.0),
                };
                writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" fill=\"{c}\" text-anchor=\"middle\">{}</text>",
                    num(lx),
                    num(ly),
                    escape(&name)
                )
                .unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Eigenvalue curves `λ_i / Σλ` against the sweep parameter `t`, with the
/// `s = 1` line dashed and avoided crossings circled.
pub fn render_eigvals_svg(curves: &EigenCurves) -> String {
    let n = curves.values.len();
    let dim = curves.values.first().map_or(0, Vec::len);
    let (x0, x1) = (MARGIN, CANVAS - MARGIN / 2.0);
    let (y0, y1) = (CANVAS - MARGIN, MARGIN / 2.0);
    let px = |t: f64, v: f64| (x0 + (x1 - x0) * t, y0 + (y1 - y0) * v);
    let t_of = |k: usize| {
        if n > 1 {
            k as f64 / (n - 1) as f64
        } else {
            0.0
        }
    };
    let normalized: Vec<Vec<f64>> = curves
        .values
        .iter()
        .map(|vals| {
            let total: f64 = vals.iter().sum();
            vals.iter()
                .map(|v| if total > 0.0 { v / total } else { 0.0 })
                .collect()
        })
        .collect();

    let mut out = String::new();
    header(&mut out);
    writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
        num(x0),
        num(y1),
        num(x1 - x0),
        num(y0 - y1)
    )
    .unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (tx, _) = px(f, 0.0);
        let (_, ty) = px(0.0, f);
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{f}</text>",
            num(tx),
            num(y0 + 18.0)
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{f}</text>",
            num(x0 - 6.0),
            num(ty + 4.0)
        )
        .unwrap();
    }
    let (sx, _) = px(0.5, 0.0);
    writeln!(
        out,
        "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"6,4\"/>",
        num(y0),
        num(y1),
        x = num(sx)
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">t = s / (1 + s)</text>",
        num((x0 + x1) / 2.0),
        num(CANVAS - 15.0)
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"18\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {y})\">eigenvalue / trace</text>",
        y = num((y0 + y1) / 2.0)
    )
    .unwrap();

    for i in 0..dim {
        let pts: Vec<(f64, f64)> = (0..n).map(|k| px(t_of(k), normalized[k][i])).collect();
        writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            points_attr(&pts),
            color(i)
        )
        .unwrap();
        let (lx, ly) = (x1 - 50.0, y1 + 20.0 + 18.0 * i as f64);
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" fill=\"{}\">λ{}</text>",
            num(lx),
            num(ly),
            color(i),
            i + 1
        )
        .unwrap();
    }
    for flag in &curves.avoided_crossings {
        let k = flag.step;
        let v = (normalized[k][flag.pair] + normalized[k][flag.pair + 1]) / 2.0;
        let (cx, cy) = px(t_of(k), v);
        writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"9\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>",
            num(cx),
            num(cy)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Projected means with 1σ and 2σ outlines, colored by label in order of
/// first appearance. Items with zero covariance get no outline.
pub fn render_projection_svg(items: &[(String, Gaussian)]) -> Result<String> {
    if let Some((_, g)) = items.iter().find(|(_, g)| g.dim() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: g.dim(),
        });
    }
    let mut outlines = Vec::with_capacity(items.len());
    for (_, g) in items {
        outlines.push(if g.cov().is_zero() {
            None
        } else {
            Some([
                ellipse_outline(g, 1.0, ELLIPSE_SEGMENTS)?,
                ellipse_outline(g, 2.0, ELLIPSE_SEGMENTS)?,
            ])
        });
    }
    let extent = items
        .iter()
        .map(|(_, g)| [g.mean()[0], g.mean()[1]])
        .chain(outlines.iter().flatten().flat_map(|o| o[1].iter().copied()));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in extent {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let span = if span.is_finite() && span > 0.0 {
        span
    } else {
        2.0
    };
    let mid = if lo[0].is_finite() {
        [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
    } else {
        [0.0, 0.0]
    };
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let px = |p: [f64; 2]| {
        (
            CENTER + (p[0] - mid[0]) * scale,
            CENTER - (p[1] - mid[1]) * scale,
        )
    };

    let mut palette: Vec<&str> = Vec::new();
    let mut out = String::new();
    header(&mut out);
    for ((label, g), outline) in items.iter().zip(&outlines) {
        let idx = match palette.iter().position(|l| *l == label.as_str()) {
            Some(i) => i,
            None => {
                palette.push(label);
                palette.len() - 1
            }
        };
        let c = color(idx);
        if let Some([one, two]) = outline {
            for (pts, dash) in [(two, " stroke-dasharray=\"5,4\""), (one, "")] {
                let px_pts: Vec<(f64, f64)> = pts.iter().map(|&p| px(p)).collect();
                writeln!(
                    out,
                    "<polygon points=\"{}\" fill=\"{c}\" fill-opacity=\"0.08\" stroke=\"{c}\" stroke-width=\"1.5\"{dash}/>",
                    points_attr(&px_pts)
                )
                .unwrap();
            }
        }
        let (cx, cy) = px([g.mean()[0], g.mean()[1]]);
        writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{c}\"><title>{}</title></circle>",
            num(cx),
            num(cy),
            escape(label)
        )
        .unwrap();
    }
    for (i, label) in palette.iter().enumerate() {
        let y = 24.0 + 18.0 * i as f64;
        writeln!(
            out,
            "<rect x=\"16\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>",
            num(y - 10.0),
            color(i)
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"34\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
            num(y),
            escape(label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}
