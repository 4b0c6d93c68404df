use rand::Rng;
use rand_distr::StandardNormal;

use super::{Distribution, Matrix, Scalar1D, Vector};
use crate::eigen;
use crate::error::Result;

/// Draws realizations of a [`Distribution`].
///
/// Gaussians are sampled as `mean + L z` with `L = V √Λ` from the
/// eigendecomposition of the covariance, which also handles singular
/// covariances. Empirical clusters are resampled uniformly.
#[derive(Debug, Clone)]
pub enum Sampler {
    Point(Vector),
    Gaussian { mean: Vector, factor: Matrix },
    Product(Vec<Scalar1D>),
    Cluster(Vec<Vector>),
}

impl Sampler {
    pub fn new(dist: &Distribution) -> Result<Self> {
        Ok(match dist {
            Distribution::Point(x) => Sampler::Point(x.clone()),
            Distribution::Gaussian(g) => Sampler::Gaussian {
                mean: g.mean().clone(),
                factor: sqrt_factor(g.cov().as_matrix())?,
            },
            Distribution::ProductOf1D(m) => Sampler::Product(m.clone()),
            Distribution::EmpiricalCluster(points) => Sampler::Cluster(points.clone()),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Sampler::Point(x) => x.len(),
            Sampler::Gaussian { mean, .. } => mean.len(),
            Sampler::Product(m) => m.len(),
            Sampler::Cluster(points) => points[0].len(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            Sampler::Point(x) => x.clone(),
            Sampler::Gaussian { mean, factor } => {
                let z = Vector::from_fn(mean.len(), |_, _| rng.sample(StandardNormal));
                mean + factor * z
            }
            Sampler::Product(m) => {
                Vector::from_iterator(m.len(), m.iter().map(|s| draw_scalar(s, rng)))
            }
            Sampler::Cluster(points) => points[rng.random_range(0..points.len())].clone(),
        }
    }
}

/// `L` with `L Lᵀ = K` for a PSD matrix `K`.
pub(crate) fn sqrt_factor(k: &Matrix) -> Result<Matrix> {
    let (values, mut vectors) = eigen::jacobi(k)?;
    for (j, lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        vectors.column_mut(j).scale_mut(root);
    }
    Ok(vectors)
}

fn draw_scalar<R: Rng + ?Sized>(s: &Scalar1D, rng: &mut R) -> f64 {
    match *s {
        Scalar1D::Number(x) => x,
        Scalar1D::Interval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        Scalar1D::Trapezoid { a, b, c, d } => trapezoid_quantile(a, b, c, d, rng.random::<f64>()),
        Scalar1D::Normal { mean, sd } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        }
    }
}

/// Inverse CDF of the trapezoid on `[a, d]` with plateau `[b, c]`.
pub(crate) fn trapezoid_quantile(a: f64, b: f64, c: f64, d: f64, u: f64) -> f64 {
    let denom = (d + c) - (a + b);
    if denom <= 0.0 {
        return a;
    }
    let h = 2.0 / denom;
    let left = 0.5 * h * (b - a);
    let plateau = h * (c - b);
    if u < left {
        a + (2.0 * u * (b - a) / h).sqrt()
    } else if u < left + plateau {
        b + (u - left) / h
    } else {
        d - (2.0 * (1.0 - u) * (d - c) / h).max(0.0).sqrt()
    }
}
