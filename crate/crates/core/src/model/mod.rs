//! Distribution data model and moment algebra.
//!
//! Every distribution is reduced to its mean vector and covariance matrix.
//! All covariances use population (1/N) normalization.

mod sampling;

pub use sampling::Sampler;

use nalgebra::{DMatrix, DVector};

use crate::eigen;
use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative floor below which a negative eigenvalue counts as rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Symmetric D×D covariance matrix.
///
/// Construction symmetrizes the input via `(K + Kᵀ) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(Matrix);

impl CovMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::invalid("covariance matrix must be at least 1x1"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrized(matrix))
    }

    /// Like [`CovMatrix::new`], additionally rejecting matrices with
    /// eigenvalues below `-PSD_TOLERANCE * max|λ|`.
    pub fn new_psd(matrix: Matrix) -> Result<Self> {
        let cov = Self::new(matrix)?;
        cov.check_psd()?;
        Ok(cov)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
        }
        Self::new(Matrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn zeros(dim: usize) -> Self {
        CovMatrix(Matrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        CovMatrix(Matrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub(crate) fn symmetrized(matrix: Matrix) -> Self {
        let t = matrix.transpose();
        CovMatrix((matrix + t) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Smallest raw eigenvalue together with the largest eigenvalue magnitude.
    pub fn eigen_extremes(&self) -> Result<(f64, f64)> {
        let (values, _) = eigen::jacobi(&self.0)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let largest = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((min, largest))
    }

    pub fn check_psd(&self) -> Result<()> {
        let (min, largest) = self.eigen_extremes()?;
        if min < -PSD_TOLERANCE * largest {
            return Err(Error::NotPsd {
                value: min,
                largest,
            });
        }
        Ok(())
    }
}

/// Multivariate normal `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vector,
    cov: CovMatrix,
}

impl Gaussian {
    pub fn new(mean: Vector, cov: CovMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                actual: cov.dim(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        cov.check_psd()?;
        Ok(Gaussian { mean, cov })
    }

    /// Builds a Gaussian whose covariance is already known to be PSD
    /// (for example the image of a PSD matrix under `A K Aᵀ`).
    pub(crate) fn from_parts(mean: Vector, cov: CovMatrix) -> Self {
        debug_assert_eq!(mean.len(), cov.dim());
        Gaussian { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &CovMatrix {
        &self.cov
    }
}

/// Independent one-dimensional marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar1D {
    Number(f64),
    /// Uniform on `[lo, hi]`.
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Trapezoid with support `[a, d]` and plateau `[b, c]`.
    Trapezoid {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
}

impl Scalar1D {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            Scalar1D::Number(x) if !x.is_finite() => Err(Error::NonFinite),
            Scalar1D::Number(_) => Ok(()),
            Scalar1D::Interval { lo, hi } => {
                if !finite(&[lo, hi]) {
                    Err(Error::NonFinite)
                } else if lo > hi {
                    Err(Error::InvalidDistribution(format!(
                        "interval requires a <= b, got [{lo}, {hi}]"
                    )))
                } else {
                    Ok(())
                }
            }
            Scalar1D::Trapezoid { a, b, c, d } => {
                if !finite(&[a, b, c, d]) {
                    Err(Error::NonFinite)
                } else if !(a <= b && b <= c && c <= d) {
                    Err(Error::InvalidDistribution(format!(
                        "trapezoid requires a <= b <= c <= d, got [{a}, {b}, {c}, {d}]"
                    )))
                } else {
                    Ok(())
                }
            }
            Scalar1D::Normal { mean, sd } => {
                if !finite(&[mean, sd]) {
                    Err(Error::NonFinite)
                } else if sd < 0.0 {
                    Err(Error::InvalidDistribution(format!(
                        "normal requires sd >= 0, got {sd}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Scalar1D::Number(x) => x,
            Scalar1D::Interval { lo, hi } => 0.5 * (lo + hi),
            Scalar1D::Trapezoid { a, b, c, d } => trapezoid_moments(a, b, c, d).0,
            Scalar1D::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Scalar1D::Number(_) => 0.0,
            Scalar1D::Interval { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Scalar1D::Trapezoid { a, b, c, d } => trapezoid_moments(a, b, c, d).1,
            Scalar1D::Normal { sd, .. } => sd * sd,
        }
    }

    /// Image under `x -> scale * x + shift`; `scale` must be positive.
    fn affine(&self, scale: f64, shift: f64) -> Scalar1D {
        let f = |x: f64| scale * x + shift;
        match *self {
            Scalar1D::Number(x) => Scalar1D::Number(f(x)),
            Scalar1D::Interval { lo, hi } => Scalar1D::Interval {
                lo: f(lo),
                hi: f(hi),
            },
            Scalar1D::Trapezoid { a, b, c, d } => Scalar1D::Trapezoid {
                a: f(a),
                b: f(b),
                c: f(c),
                d: f(d),
            },
            Scalar1D::Normal { mean, sd } => Scalar1D::Normal {
                mean: f(mean),
                sd: scale * sd,
            },
        }
    }
}

/// Mean and variance of the trapezoidal density on `[a, d]` with plateau `[b, c]`.
///
/// With plateau height `h = 2 / ((d + c) - (a + b))` the raw moments are
/// `E[x^k] = h / ((k+1)(k+2)) * [(d^{k+2} - c^{k+2})/(d - c) - (b^{k+2} - a^{k+2})/(b - a)]`,
/// where each difference quotient is expanded so that `a = b` or `c = d`
/// (triangles, rectangles) need no special case. Moments are taken about the
/// support midpoint to limit cancellation.
pub(crate) fn trapezoid_moments(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let origin = 0.5 * (a + d);
    let (a, b, c, d) = (a - origin, b - origin, c - origin, d - origin);
    let denom = (d + c) - (a + b);
    if denom <= 0.0 {
        return (origin, 0.0);
    }
    // (d^3 - c^3)/(d - c) and (b^3 - a^3)/(b - a)
    let q3 = (d * d + d * c + c * c) - (b * b + b * a + a * a);
    // (d^4 - c^4)/(d - c) and (b^4 - a^4)/(b - a)
    let q4 = (d + c) * (d * d + c * c) - (b + a) * (b * b + a * a);
    let m1 = q3 / (3.0 * denom);
    let m2 = q4 / (6.0 * denom);
    (origin + m1, (m2 - m1 * m1).max(0.0))
}

/// A random vector known through its first two moments.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// A certain observation.
    Point(Vector),
    Gaussian(Gaussian),
    /// Independent per-dimension marginals (diagonal covariance).
    ProductOf1D(Vec<Scalar1D>),
    /// A cluster of points summarized by its sample mean and 1/N covariance.
    EmpiricalCluster(Vec<Vector>),
}

impl Distribution {
    pub fn point(coords: &[f64]) -> Self {
        Distribution::Point(Vector::from_column_slice(coords))
    }

    pub fn gaussian(mean: &[f64], cov: CovMatrix) -> Result<Self> {
        Ok(Distribution::Gaussian(Gaussian::new(
            Vector::from_column_slice(mean),
            cov,
        )?))
    }

    pub fn product(marginals: Vec<Scalar1D>) -> Result<Self> {
        let d = Distribution::ProductOf1D(marginals);
        d.validate()?;
        Ok(d)
    }

    pub fn cluster(points: Vec<Vector>) -> Result<Self> {
        let d = Distribution::EmpiricalCluster(points);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Point(x) => {
                if x.is_empty() {
                    return Err(Error::invalid("point must have at least one coordinate"));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            Distribution::Gaussian(g) => {
                if g.mean.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                if g.mean.len() != g.cov.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: g.mean.len(),
                        actual: g.cov.dim(),
                    });
                }
            }
            Distribution::ProductOf1D(marginals) => {
                if marginals.is_empty() {
                    return Err(Error::invalid(
                        "product distribution needs at least one marginal",
                    ));
                }
                marginals.iter().try_for_each(Scalar1D::validate)?;
            }
            Distribution::EmpiricalCluster(points) => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::InvalidDistribution("empty cluster".into()))?;
                if first.is_empty() {
                    return Err(Error::invalid(
                        "cluster points must have at least one coordinate",
                    ));
                }
                for p in points {
                    if p.len() != first.len() {
                        return Err(Error::DimensionMismatch {
                            expected: first.len(),
                            actual: p.len(),
                        });
                    }
                    if p.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Point(x) => x.len(),
            Distribution::Gaussian(g) => g.dim(),
            Distribution::ProductOf1D(m) => m.len(),
            Distribution::EmpiricalCluster(points) => points.first().map_or(0, |p| p.len()),
        }
    }

    /// Expected value `E[t]`.
    pub fn mean(&self) -> Vector {
        match self {
            Distribution::Point(x) => x.clone(),
            Distribution::Gaussian(g) => g.mean.clone(),
            Distribution::ProductOf1D(m) => {
                Vector::from_iterator(m.len(), m.iter().map(Scalar1D::mean))
            }
            Distribution::EmpiricalCluster(points) => sample_mean(points),
        }
    }

    /// Covariance `Cov[t, t]`.
    pub fn cov(&self) -> CovMatrix {
        match self {
            Distribution::Point(x) => CovMatrix::zeros(x.len()),
            Distribution::Gaussian(g) => g.cov.clone(),
            Distribution::ProductOf1D(m) => CovMatrix(Matrix::from_diagonal(
                &Vector::from_iterator(m.len(), m.iter().map(Scalar1D::variance)),
            )),
            Distribution::EmpiricalCluster(points) => {
                let mean = sample_mean(points);
                let d = mean.len();
                let mut acc = Matrix::zeros(d, d);
                for p in points {
                    let dev = p - &mean;
                    acc += &dev * dev.transpose();
                }
                CovMatrix::symmetrized(acc / points.len() as f64)
            }
        }
    }

    /// Moment summary as a Gaussian.
    pub fn moments(&self) -> Gaussian {
        Gaussian::from_parts(self.mean(), self.cov())
    }

    /// Per-axis transform `x_d -> scale_d * x_d + shift_d`, keeping the variant.
    ///
    /// Scales must be positive so that interval and trapezoid bounds keep
    /// their order.
    pub fn scale_shift(&self, scale: &[f64], shift: &[f64]) -> Result<Distribution> {
        let dim = self.dim();
        for len in [scale.len(), shift.len()] {
            if len != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: len,
                });
            }
        }
        if scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(
                "axis scale factors must be positive and finite",
            ));
        }
        let a = Matrix::from_diagonal(&Vector::from_column_slice(scale));
        let b = Vector::from_column_slice(shift);
        let map =
            |x: &Vector| Vector::from_iterator(dim, (0..dim).map(|i| scale[i] * x[i] + shift[i]));
        Ok(match self {
            Distribution::Point(x) => Distribution::Point(map(x)),
            Distribution::Gaussian(g) => Distribution::Gaussian(Gaussian::from_parts(
                affine_mean(&a, &b, &g.mean)?,
                affine_cov(&a, &g.cov)?,
            )),
            Distribution::ProductOf1D(m) => Distribution::ProductOf1D(
                m.iter()
                    .enumerate()
                    .map(|(i, s)| s.affine(scale[i], shift[i]))
                    .collect(),
            ),
            Distribution::EmpiricalCluster(points) => {
                Distribution::EmpiricalCluster(points.iter().map(map).collect())
            }
        })
    }

    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(self)
    }
}

fn sample_mean(points: &[Vector]) -> Vector {
    let d = points.first().map_or(0, |p| p.len());
    let mut acc = Vector::zeros(d);
    for p in points {
        acc += p;
    }
    acc / points.len() as f64
}

/// `A m + b`.
pub fn affine_mean(a: &Matrix, b: &Vector, m: &Vector) -> Result<Vector> {
    if a.ncols() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            actual: m.len(),
        });
    }
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    Ok(a * m + b)
}

/// `A K Aᵀ`, symmetrized. Translations do not affect covariances.
pub fn affine_cov(a: &Matrix, k: &CovMatrix) -> Result<CovMatrix> {
    if a.ncols() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            actual: k.dim(),
        });
    }
    Ok(CovMatrix::symmetrized(a * k.as_matrix() * a.transpose()))
}

/// An ordered collection of D-variate distributions with weights and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainDataset {
    items: Vec<Distribution>,
    weights: Vec<f64>,
    labels: Vec<Option<String>>,
    dim_names: Vec<String>,
}

impl UncertainDataset {
    /// Unit weights, no labels, axes named `x1..xD`.
    pub fn new(items: Vec<Distribution>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        for item in &items {
            item.validate()?;
            if item.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: item.dim(),
                });
            }
        }
        let n = items.len();
        Ok(UncertainDataset {
            items,
            weights: vec![1.0; n],
            labels: vec![None; n],
            dim_names: (1..=dim).map(|i| format!("x{i}")).collect(),
        })
    }

    pub fn from_points(points: &[Vector]) -> Result<Self> {
        Self::new(points.iter().cloned().map(Distribution::Point).collect())
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.items.len() {
            return Err(Error::DimensionMismatch {
                expected: self.items.len(),
                actual: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeight(w));
        }
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::ZeroWeight);
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<Option<String>>) -> Result<Self> {
        if labels.len() != self.items.len() {
            return Err(Error::DimensionMismatch {
                expected: self.items.len(),
                actual: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_dim_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        self.dim_names = names;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.items[0].dim()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Distribution] {
        &self.items
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Label of item `i`, falling back to its index.
    pub fn label(&self, i: usize) -> String {
        self.labels[i].clone().unwrap_or_else(|| i.to_string())
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    /// Dataset with every item replaced by a Point at its mean.
    pub fn means_only(&self) -> UncertainDataset {
        UncertainDataset {
            items: self
                .items
                .iter()
                .map(|d| Distribution::Point(d.mean()))
                .collect(),
            weights: self.weights.clone(),
            labels: self.labels.clone(),
            dim_names: self.dim_names.clone(),
        }
    }

    /// Z-scores every axis with the weighted mean and the uncertainty-aware
    /// standard deviation (diagonal of the global covariance at `s = 1`).
    /// Axes with zero spread are only centered.
    pub fn standardized(&self) -> Result<UncertainDataset> {
        let global = crate::cov::global_cov(self, &crate::cov::CovOptions::default())?;
        let dim = self.dim();
        let sd: Vec<f64> = (0..dim)
            .map(|i| {
                let v = global.matrix.as_matrix()[(i, i)].max(0.0).sqrt();
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        let scale: Vec<f64> = sd.iter().map(|s| 1.0 / s).collect();
        let shift: Vec<f64> = (0..dim).map(|i| -global.mean[i] * scale[i]).collect();
        let items = self
            .items
            .iter()
            .map(|d| d.scale_shift(&scale, &shift))
            .collect::<Result<Vec<_>>>()?;
        Ok(UncertainDataset {
            items,
            weights: self.weights.clone(),
            labels: self.labels.clone(),
            dim_names: self.dim_names.clone(),
        })
    }
}
