//! Symmetric eigendecomposition and principal component selection.

use crate::cov::{global_cov, CovOptions};
use crate::error::{Error, Result};
use crate::model::{CovMatrix, Matrix, UncertainDataset, Vector, PSD_TOLERANCE};

/// Off-diagonal Frobenius norm, relative to `‖K‖_F`, at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by descending eigenvalue; column `i` of `vectors`
/// belongs to `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi rotations on a symmetric matrix.
///
/// Returns the raw (unsorted, unclamped) eigenvalues and the accumulated
/// rotation matrix whose columns are the eigenvectors.
pub(crate) fn jacobi(k: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = k.nrows();
    if !k.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: k.ncols(),
        });
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut a = k.clone();
    let mut v = Matrix::identity(n, n);
    let norm = a.norm();
    if norm == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < JACOBI_TOLERANCE * norm {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

/// Applies `A <- Jᵀ A J` and `V <- V J` for the plane rotation in (p, q).
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Flips `v` so that its largest-magnitude entry is positive.
///
/// Entries within 1e-12 of the maximum magnitude count as ties, resolved
/// by the lowest index.
pub fn canonicalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().position(|x| x.abs() >= max - 1e-12) {
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full decomposition of a covariance matrix.
///
/// Eigenvalues in `(-1e-9 λ_max, 0)` are reported as zero; anything more
/// negative is an error since the input is supposed to be PSD.
pub fn eig_sym(k: &CovMatrix) -> Result<EigenPairs> {
    let (raw, vectors) = jacobi(k.as_matrix())?;
    let n = raw.len();
    let largest = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));

    let mut values = Vec::with_capacity(n);
    let mut sorted = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let lambda = raw[src];
        let lambda = if lambda < 0.0 {
            if lambda < -PSD_TOLERANCE * largest {
                return Err(Error::NotPsd {
                    value: lambda,
                    largest,
                });
            }
            0.0
        } else {
            lambda
        };
        values.push(lambda);
        let mut col: Vec<f64> = vectors.column(src).iter().copied().collect();
        canonicalize_sign(&mut col);
        sorted.column_mut(dst).copy_from_slice(&col);
    }
    Ok(EigenPairs {
        values,
        vectors: sorted,
    })
}

/// The projection fitted by PCA: dataset mean and the top-q eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vector,
    /// D×q matrix `A = [w₁ … w_q]` with orthonormal columns.
    pub components: Matrix,
    /// All D eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn q(&self) -> usize {
        self.components.ncols()
    }
}

pub fn select_components(e: &EigenPairs, mean: Vector, q: usize) -> Result<PcaModel> {
    let d = e.values.len();
    if q == 0 || q > d {
        return Err(Error::invalid(format!(
            "target dimension q = {q} must satisfy 1 <= q <= {d}"
        )));
    }
    if mean.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: mean.len(),
        });
    }
    Ok(PcaModel {
        mean,
        components: e.vectors.columns(0, q).into_owned(),
        eigenvalues: e.values.clone(),
    })
}

/// Convenience pipeline: global covariance, eigendecomposition, top-q selection.
pub fn fit(ds: &UncertainDataset, q: usize, opts: &CovOptions) -> Result<PcaModel> {
    let global = global_cov(ds, opts)?;
    let pairs = eig_sym(&global.matrix)?;
    select_components(&pairs, global.mean, q)
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns.
///
/// Small angles come from the sines (singular values of `B - A AᵀB`) so
/// they stay accurate near zero; large ones from the cosines.
pub fn principal_angles(a: &Matrix, b: &Matrix) -> Vec<f64> {
    let cross = a.transpose() * b;
    let mut cosines: Vec<f64> = cross
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    let residual = b - a * &cross;
    let mut sines: Vec<f64> = residual
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    sines.sort_by(|x, y| x.total_cmp(y));
    cosines
        .iter()
        .zip(sines.iter().chain(std::iter::repeat(&1.0)))
        .map(|(&c, &s)| {
            let c = c.clamp(0.0, 1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                s.clamp(0.0, 1.0).asin()
            }
        })
        .collect()
}
