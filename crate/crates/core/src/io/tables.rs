//! CSV tables for projections, factor traces and eigenvalue curves.
//!
//! Numbers use Rust's shortest round-trip formatting, so the tables are
//! byte-stable and lossless.

use std::fmt::Write;

use crate::cov::Scale;
use crate::error::{Error, Result};
use crate::model::Gaussian;
use crate::sensitivity::{EigenCurves, FactorTrace};

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Maps `-0.0` to `0.0`.
fn unsigned_zero(v: f64) -> f64 {
    v + 0.0
}

fn axis_name(names: &[String], axis: usize) -> String {
    names
        .get(axis)
        .cloned()
        .unwrap_or_else(|| format!("x{}", axis + 1))
}

/// `label, mean_1..q, cov_i_j` (row-major) for each projected item.
pub fn projection_csv(items: &[(String, Gaussian)]) -> Result<String> {
    let q = items.first().map_or(0, |(_, g)| g.dim());
    if let Some((_, g)) = items.iter().find(|(_, g)| g.dim() != q) {
        return Err(Error::DimensionMismatch {
            expected: q,
            actual: g.dim(),
        });
    }
    let mut out = String::from("label");
    for i in 1..=q {
        write!(out, ",mean_{i}").unwrap();
    }
    for i in 1..=q {
        for j in 1..=q {
            write!(out, ",cov_{i}_{j}").unwrap();
        }
    }
    out.push('\n');
    for (label, g) in items {
        out.push_str(&quote(label));
        for v in g.mean().iter() {
            write!(out, ",{}", unsigned_zero(*v)).unwrap();
        }
        let k = g.cov().as_matrix();
        for i in 0..q {
            for j in 0..q {
                write!(out, ",{}", unsigned_zero(k[(i, j)])).unwrap();
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// `step, s, axis, orientation, x, y`: both orientations `±Aᵀe` per axis and step.
pub fn traces_csv(
    traces: &[FactorTrace],
    scales: &[Scale],
    dim_names: &[String],
) -> Result<String> {
    let mut out = String::from("step,s,axis,orientation,x,y\n");
    for trace in traces {
        if trace.points.len() != scales.len() {
            return Err(Error::DimensionMismatch {
                expected: scales.len(),
                actual: trace.points.len(),
            });
        }
        if let Some(p) = trace.points.iter().find(|p| p.len() != 2) {
            return Err(Error::invalid(format!(
                "factor traces are two-dimensional; got q = {}, use q = 2",
                p.len()
            )));
        }
    }
    for (k, scale) in scales.iter().enumerate() {
        for trace in traces {
            let p = &trace.points[k];
            let name = quote(&axis_name(dim_names, trace.axis));
            let (x, y) = (unsigned_zero(p[0]), unsigned_zero(p[1]));
            writeln!(out, "{k},{scale},{name},+,{x},{y}").unwrap();
            writeln!(
                out,
                "{k},{scale},{name},-,{},{}",
                unsigned_zero(-x),
                unsigned_zero(-y)
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// `step, s, index, lambda` with 1-based eigenvalue index.
pub fn eigvals_csv(curves: &EigenCurves) -> String {
    let mut out = String::from("step,s,index,lambda\n");
    for (k, (scale, values)) in curves.scales.iter().zip(&curves.values).enumerate() {
        for (i, v) in values.iter().enumerate() {
            writeln!(out, "{k},{scale},{},{}", i + 1, unsigned_zero(*v)).unwrap();
        }
    }
    out
}
