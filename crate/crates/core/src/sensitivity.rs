//! Sensitivity of the projection to the uncertainty scale factor.
//!
//! The factor `s` is swept over `[0, ∞)` on a uniform grid `t ∈ [0, 1]`
//! mapped through `s = t / (1 - t)`, so `t = 0.5` lands on `s = 1` and the
//! last step is the `s → ∞` limit. For every step a PCA model is fitted; the
//! projected unit vectors `Aᵀ e_i` of the original axes form the factor traces.

use rayon::prelude::*;

use crate::cov::{global_cov, CovOptions, Scale};
use crate::eigen::{eig_sym, select_components, PcaModel};
use crate::error::{Error, Result};
use crate::model::{UncertainDataset, Vector};

pub const DEFAULT_STEPS: usize = 64;

/// Gap threshold, relative to the median gap of a pair, below which a
/// local minimum counts as an avoided crossing.
pub const AVOIDED_CROSSING_RATIO: f64 = 0.25;

/// Gaps at or below this fraction of the step's largest eigenvalue are
/// treated as exact crossings.
const EXACT_CROSSING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSchedule {
    steps: usize,
}

impl SweepSchedule {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::invalid(format!(
                "sweep needs at least 2 steps, got {steps}"
            )));
        }
        Ok(SweepSchedule { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / (self.steps - 1) as f64
    }

    pub fn scales(&self) -> Vec<Scale> {
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    Scale::Infinite
                } else {
                    let t = self.t(k);
                    Scale::Finite(t / (1.0 - t))
                }
            })
            .collect()
    }
}

impl Default for SweepSchedule {
    fn default() -> Self {
        SweepSchedule {
            steps: DEFAULT_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AvoidedCrossing {
    pub step: usize,
    /// Index `i` of the eigenvalue pair `(λ_i, λ_{i+1})`.
    pub pair: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurves {
    pub scales: Vec<Scale>,
    /// Descending eigenvalues per step.
    pub values: Vec<Vec<f64>>,
    pub avoided_crossings: Vec<AvoidedCrossing>,
}

/// Trace of one original axis through the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTrace {
    pub axis: usize,
    /// `Aₖᵀ e_axis` per step, after sign alignment.
    pub points: Vec<Vector>,
    /// Index of the first step with `s > 1`.
    pub region_split: usize,
}

impl FactorTrace {
    /// The mirrored orientation `-Aₖᵀ e_axis`.
    pub fn mirrored(&self) -> Vec<Vector> {
        self.points.iter().map(|p| -p).collect()
    }

    pub fn is_stationary(&self) -> bool {
        self.points
            .iter()
            .all(|p| (p - &self.points[0]).amax() <= 1e-12)
    }
}

pub fn sweep(
    ds: &UncertainDataset,
    q: usize,
    sched: &SweepSchedule,
) -> Result<(Vec<PcaModel>, EigenCurves)> {
    if q == 0 || q > ds.dim() {
        return Err(Error::invalid(format!(
            "target dimension q = {q} must satisfy 1 <= q <= {}",
            ds.dim()
        )));
    }
    let scales = sched.scales();
    let models = scales
        .par_iter()
        .map(|&scale| {
            let global = global_cov(ds, &CovOptions::with_scale(scale))?;
            let pairs = eig_sym(&global.matrix)?;
            select_components(&pairs, global.mean, q)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut curves = EigenCurves {
        values: models.iter().map(|m| m.eigenvalues.clone()).collect(),
        scales,
        avoided_crossings: Vec::new(),
    };
    curves.avoided_crossings = detect_avoided_crossings(&curves);
    Ok((models, curves))
}

fn check_shapes(models: &[PcaModel]) -> Result<()> {
    if let Some(first) = models.first() {
        for m in models {
            if m.components.shape() != first.components.shape() {
                return Err(Error::invalid(format!(
                    "inconsistent model shapes: {:?} vs {:?}",
                    m.components.shape(),
                    first.components.shape()
                )));
            }
        }
    }
    Ok(())
}

/// Flips whole component columns of each step so that they point the same
/// way as in the previous (already aligned) step. Subspaces are unchanged.
pub fn align_signs(models: &[PcaModel]) -> Result<Vec<PcaModel>> {
    check_shapes(models)?;
    let mut out: Vec<PcaModel> = Vec::with_capacity(models.len());
    for model in models {
        let mut model = model.clone();
        if let Some(prev) = out.last() {
            for j in 0..model.q() {
                // flipping column j changes Σᵢ⟨pᵢ(k), pᵢ(k-1)⟩ by -2·dot
                let dot = model.components.column(j).dot(&prev.components.column(j));
                if dot < 0.0 {
                    model.components.column_mut(j).neg_mut();
                }
            }
        }
        out.push(model);
    }
    Ok(out)
}

pub fn factor_traces(models: &[PcaModel], scales: &[Scale]) -> Result<Vec<FactorTrace>> {
    if models.len() != scales.len() {
        return Err(Error::DimensionMismatch {
            expected: models.len(),
            actual: scales.len(),
        });
    }
    let aligned = align_signs(models)?;
    let Some(first) = aligned.first() else {
        return Ok(Vec::new());
    };
    let region_split = scales
        .iter()
        .position(|s| s.value() > 1.0)
        .unwrap_or(scales.len());
    Ok((0..first.dim())
        .map(|axis| FactorTrace {
            axis,
            points: aligned
                .iter()
                .map(|m| m.components.row(axis).transpose())
                .collect(),
            region_split,
        })
        .collect())
}

/// Flags interior local minima of adjacent eigenvalue gaps that stay
/// positive but drop below a quarter of the pair's median gap.
///
/// Only finite-scale steps take part; the `s → ∞` step lives on a
/// different scale.
pub fn detect_avoided_crossings(curves: &EigenCurves) -> Vec<AvoidedCrossing> {
    let finite: Vec<usize> = (0..curves.values.len())
        .filter(|&k| !curves.scales.get(k).is_some_and(|s| s.is_infinite()))
        .collect();
    if finite.len() < 3 {
        return Vec::new();
    }
    let dim = curves.values[finite[0]].len();
    let mut flags = Vec::new();
    for pair in 0..dim.saturating_sub(1) {
        let gaps: Vec<f64> = finite
            .iter()
            .map(|&k| curves.values[k][pair] - curves.values[k][pair + 1])
            .collect();
        let median = median(&gaps);
        for j in 1..gaps.len() - 1 {
            let k = finite[j];
            let floor = EXACT_CROSSING_TOLERANCE * curves.values[k][0].abs();
            let g = gaps[j];
            if g < gaps[j - 1]
                && g < gaps[j + 1]
                && g > floor
                && g < AVOIDED_CROSSING_RATIO * median
            {
                flags.push(AvoidedCrossing { step: k, pair });
            }
        }
    }
    flags.sort_by_key(|f| (f.step, f.pair));
    flags
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
