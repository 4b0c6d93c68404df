//! Uncertainty-aware global covariance.
//!
//! For items `t_i` with means `m_i`, covariances `Ψ_i` and normalized weights,
//!
//! ```text
//! K = E_cov[m mᵀ] + s² E_cov[Ψ] - x̄ x̄ᵀ
//! ```
//!
//! The accumulation is the per-item loop
//! `K += w_i ((m_i - x̄)(m_i - x̄)ᵀ + s² Ψ_i)` followed by one division by
//! `Σ w`. Every summand is PSD, so rounding cannot push `K` below zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CovMatrix, Matrix, UncertainDataset, Vector};

/// Uncertainty scale factor `s`. Item covariances enter the global
/// covariance as `s² Ψ_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Finite(f64),
    /// Direction limit `s → ∞`, represented by the uncertainty term alone.
    Infinite,
}

impl Scale {
    pub fn new(s: f64) -> Result<Self> {
        if s == f64::INFINITY {
            Ok(Scale::Infinite)
        } else if s.is_finite() && s >= 0.0 {
            Ok(Scale::Finite(s))
        } else {
            Err(Error::invalid(format!(
                "scale must be >= 0 or inf, got {s}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Scale::Finite(s) => s,
            Scale::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Scale::Infinite)
    }
}

impl Default for Scale {
    fn default() -> Self {
        Scale::Finite(1.0)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Finite(s) => write!(f, "{s}"),
            Scale::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "INF" | "Inf" => Ok(Scale::Infinite),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("invalid scale {other:?}")))?;
                Scale::new(v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovOptions {
    pub scale: Scale,
    pub use_weights: bool,
}

impl Default for CovOptions {
    fn default() -> Self {
        CovOptions {
            scale: Scale::default(),
            use_weights: true,
        }
    }
}

impl CovOptions {
    pub fn with_scale(scale: Scale) -> Self {
        CovOptions {
            scale,
            ..Default::default()
        }
    }
}

/// Global covariance together with its two additive terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalCov {
    pub mean: Vector,
    /// `term_means + s² term_uncertainty` (or `term_uncertainty` for `s = ∞`).
    pub matrix: CovMatrix,
    /// `E_cov[m mᵀ] - x̄ x̄ᵀ`: regular PCA on the item means.
    pub term_means: CovMatrix,
    /// `E_cov[Ψ]`: average item covariance.
    pub term_uncertainty: CovMatrix,
    pub scale: Scale,
}

fn effective_weights(ds: &UncertainDataset, opts: &CovOptions) -> Result<Vec<f64>> {
    let weights = if opts.use_weights {
        ds.weights().to_vec()
    } else {
        vec![1.0; ds.len()]
    };
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::ZeroWeight);
    }
    Ok(weights)
}

fn weighted_mean(means: &[Vector], weights: &[f64]) -> Vector {
    let total: f64 = weights.iter().sum();
    let mut acc = Vector::zeros(means[0].len());
    for (m, &w) in means.iter().zip(weights) {
        acc += m * w;
    }
    acc / total
}

/// Weighted empirical mean `Σ w_i E[t_i] / Σ w_i`.
pub fn dataset_mean(ds: &UncertainDataset, opts: &CovOptions) -> Result<Vector> {
    let weights = effective_weights(ds, opts)?;
    let means: Vec<Vector> = ds.items().iter().map(|d| d.mean()).collect();
    Ok(weighted_mean(&means, &weights))
}

pub fn global_cov(ds: &UncertainDataset, opts: &CovOptions) -> Result<GlobalCov> {
    let weights = effective_weights(ds, opts)?;
    let dim = ds.dim();
    let mut means = Vec::with_capacity(ds.len());
    let mut covs = Vec::with_capacity(ds.len());
    for item in ds.items() {
        if item.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: item.dim(),
            });
        }
        means.push(item.mean());
        covs.push(item.cov().into_matrix());
    }
    Ok(accumulate(&means, &covs, &weights, opts.scale))
}

/// Regular PCA covariance of a point set (1/N normalization).
pub fn global_cov_from_points(points: &[Vector]) -> Result<GlobalCov> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let dim = first.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
    }
    let zeros = vec![Matrix::zeros(dim, dim); points.len()];
    Ok(accumulate(
        points,
        &zeros,
        &vec![1.0; points.len()],
        Scale::Finite(0.0),
    ))
}

fn accumulate(means: &[Vector], covs: &[Matrix], weights: &[f64], scale: Scale) -> GlobalCov {
    let dim = means[0].len();
    let total: f64 = weights.iter().sum();
    let mean = weighted_mean(means, weights);
    let s2 = match scale {
        Scale::Finite(s) => s * s,
        Scale::Infinite => 0.0,
    };

    let mut k = Matrix::zeros(dim, dim);
    let mut term_means = Matrix::zeros(dim, dim);
    let mut term_uncertainty = Matrix::zeros(dim, dim);
    // centered outer products: equal to E[m mᵀ] - x̄ x̄ᵀ without cancellation
    for ((m, psi), &w) in means.iter().zip(covs).zip(weights) {
        let c = m - &mean;
        let outer = &c * c.transpose();
        k += (&outer + psi * s2) * w;
        term_means += outer * w;
        term_uncertainty += psi * w;
    }
    k /= total;
    term_means /= total;
    term_uncertainty /= total;

    let term_means = CovMatrix::symmetrized(term_means);
    let term_uncertainty = CovMatrix::symmetrized(term_uncertainty);
    let matrix = match scale {
        Scale::Finite(_) => CovMatrix::symmetrized(k),
        // No uncertainty at all: the scale has no effect and every s gives term_means.
        Scale::Infinite if term_uncertainty.is_zero() => term_means.clone(),
        Scale::Infinite => term_uncertainty.clone(),
    };
    GlobalCov {
        mean,
        matrix,
        term_means,
        term_uncertainty,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Distribution, Gaussian};
    use proptest::prelude::*;

    fn two_gaussians() -> UncertainDataset {
        let psi = CovMatrix::from_diagonal(&[0.0, 4.0]).unwrap();
        UncertainDataset::new(vec![
            Distribution::gaussian(&[-1.0, 0.0], psi.clone()).unwrap(),
            Distribution::gaussian(&[1.0, 0.0], psi).unwrap(),
        ])
        .unwrap()
    }

    fn at(s: f64) -> CovOptions {
        CovOptions::with_scale(Scale::new(s).unwrap())
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn dataset_mean_examples() {
        let ds = UncertainDataset::from_points(&[v(&[0.0, 0.0]), v(&[2.0, 0.0])]).unwrap();
        assert_eq!(
            dataset_mean(&ds, &Default::default()).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        let ds = UncertainDataset::from_points(&[v(&[0.0]), v(&[4.0])])
            .unwrap()
            .with_weights(vec![3.0, 1.0])
            .unwrap();
        assert_eq!(
            dataset_mean(&ds, &Default::default()).unwrap().as_slice(),
            &[1.0]
        );
        let unweighted = CovOptions {
            use_weights: false,
            ..Default::default()
        };
        assert_eq!(dataset_mean(&ds, &unweighted).unwrap().as_slice(), &[2.0]);
        let ds = UncertainDataset::from_points(&[v(&[7.0, 7.0])]).unwrap();
        assert_eq!(
            dataset_mean(&ds, &Default::default()).unwrap().as_slice(),
            &[7.0, 7.0]
        );
    }

    #[test]
    fn two_points_reduce_to_regular_pca() {
        let ds = UncertainDataset::from_points(&[v(&[0.0, 0.0]), v(&[2.0, 0.0])]).unwrap();
        let g = global_cov(&ds, &Default::default()).unwrap();
        assert_eq!(g.matrix.as_matrix().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_gaussian_examples() {
        let ds = two_gaussians();
        let cases = [
            (1.0, [1.0, 0.0, 0.0, 4.0]),
            (0.0, [1.0, 0.0, 0.0, 0.0]),
            (0.5, [1.0, 0.0, 0.0, 1.0]),
        ];
        for (s, expected) in cases {
            let g = global_cov(&ds, &at(s)).unwrap();
            assert_eq!(g.matrix.as_matrix().as_slice(), &expected, "s = {s}");
        }
        let inf = global_cov(&ds, &CovOptions::with_scale(Scale::Infinite)).unwrap();
        assert_eq!(inf.matrix, inf.term_uncertainty);
        assert_eq!(inf.matrix.as_matrix().as_slice(), &[0.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn infinite_scale_without_uncertainty_keeps_term_means() {
        let ds = UncertainDataset::from_points(&[v(&[0.0, 1.0]), v(&[2.0, 0.0])]).unwrap();
        let inf = global_cov(&ds, &CovOptions::with_scale(Scale::Infinite)).unwrap();
        let one = global_cov(&ds, &Default::default()).unwrap();
        assert_eq!(inf.matrix, one.matrix);
    }

    #[test]
    fn from_points_examples() {
        let g = global_cov_from_points(&[v(&[0.0, 0.0]), v(&[2.0, 0.0])]).unwrap();
        assert_eq!(g.matrix.as_matrix().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let g = global_cov_from_points(&[v(&[1.0, 1.0])]).unwrap();
        assert!(g.matrix.is_zero());
        assert!(matches!(
            global_cov_from_points(&[]),
            Err(Error::EmptyDataset)
        ));
        assert!(global_cov_from_points(&[v(&[1.0]), v(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn scale_parsing() {
        assert_eq!("inf".parse::<Scale>().unwrap(), Scale::Infinite);
        assert_eq!("0.5".parse::<Scale>().unwrap(), Scale::Finite(0.5));
        assert!("-1".parse::<Scale>().is_err());
        assert!("nan".parse::<Scale>().is_err());
        assert!("abc".parse::<Scale>().is_err());
    }

    #[test]
    fn zero_total_weight_rejected() {
        let ds = UncertainDataset::from_points(&[v(&[0.0]), v(&[1.0])]).unwrap();
        // with_weights rejects the all-zero case already; unweighted mode must still work
        assert!(ds.clone().with_weights(vec![0.0, 0.0]).is_err());
        assert!(global_cov(&ds, &at(1.0)).is_ok());
    }

    /// Brute-force `1/N Σ (x - x̄)(x - x̄)ᵀ` entry by entry.
    fn naive_population_cov(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = points.len() as f64;
        let d = points[0].len();
        let mean: Vec<f64> = (0..d)
            .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n)
            .collect();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        points
                            .iter()
                            .map(|p| (p[i] - mean[i]) * (p[j] - mean[j]))
                            .sum::<f64>()
                            / n
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn iris_population_covariance() {
        let text = include_str!("../data/iris.csv");
        let points: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(4).map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(points.len(), 150);
        let expected = naive_population_cov(&points);
        let vs: Vec<Vector> = points.iter().map(|p| v(p)).collect();
        let g = global_cov_from_points(&vs).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.matrix.as_matrix()[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
        // textbook 1/N value for sepal length
        assert!((expected[0][0] - 0.681122).abs() < 1e-6);
    }

    fn arb_dataset() -> impl Strategy<Value = UncertainDataset> {
        (1usize..=6, 1usize..=12).prop_flat_map(|(d, n)| {
            (
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
                prop::collection::vec(prop::collection::vec(-1.5f64..1.5, d * d), n),
                prop::collection::vec(0.1f64..5.0, n),
            )
                .prop_map(move |(means, factors, weights)| {
                    let items = means
                        .iter()
                        .zip(&factors)
                        .map(|(m, f)| {
                            let b = Matrix::from_column_slice(d, d, f);
                            let psi = CovMatrix::new(&b * b.transpose()).unwrap();
                            Distribution::Gaussian(Gaussian::new(v(m), psi).unwrap())
                        })
                        .collect();
                    UncertainDataset::new(items)
                        .unwrap()
                        .with_weights(weights)
                        .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn zero_scale_is_point_pca_on_means(ds in arb_dataset()) {
            let opts = CovOptions { scale: Scale::Finite(0.0), use_weights: false };
            let g = global_cov(&ds, &opts).unwrap();
            let means: Vec<Vector> = ds.items().iter().map(|d| d.mean()).collect();
            let p = global_cov_from_points(&means).unwrap();
            prop_assert!((g.matrix.as_matrix() - p.matrix.as_matrix()).norm() <= 1e-12);
        }

        #[test]
        fn scaling_law(ds in arb_dataset()) {
            for s in [0.0, 0.5, 1.0, 2.0] {
                let g = global_cov(&ds, &at(s)).unwrap();
                let rebuilt = g.term_means.as_matrix() + g.term_uncertainty.as_matrix() * (s * s);
                let err = (g.matrix.as_matrix() - rebuilt).amax();
                prop_assert!(err <= 1e-12 * g.matrix.as_matrix().amax().max(1.0));
            }
        }

        #[test]
        fn global_cov_is_psd(ds in arb_dataset(), s in 0.0f64..3.0) {
            let g = global_cov(&ds, &at(s)).unwrap();
            let (min, largest) = g.matrix.eigen_extremes().unwrap();
            prop_assert!(min >= -1e-9 * largest);
        }

        #[test]
        fn duplication_equals_weight(ds in arb_dataset(), k in 2usize..5) {
            let first = ds.items()[0].clone();
            let rest: Vec<_> = ds.items()[1..].to_vec();
            let rest_w: Vec<f64> = ds.weights()[1..].to_vec();

            let mut dup_items = vec![first.clone(); k];
            dup_items.extend(rest.clone());
            let mut dup_w = vec![1.0; k];
            dup_w.extend(rest_w.clone());
            let dup = UncertainDataset::new(dup_items).unwrap().with_weights(dup_w).unwrap();

            let mut one_items = vec![first];
            one_items.extend(rest);
            let mut one_w = vec![k as f64];
            one_w.extend(rest_w);
            let one = UncertainDataset::new(one_items).unwrap().with_weights(one_w).unwrap();

            let a = global_cov(&dup, &at(1.0)).unwrap();
            let b = global_cov(&one, &at(1.0)).unwrap();
            let tol = 1e-12 * a.matrix.as_matrix().amax().max(1.0);
            prop_assert!((a.matrix.as_matrix() - b.matrix.as_matrix()).amax() <= tol);
            prop_assert!((a.mean - b.mean).amax() <= 1e-12 * 5.0);
        }
    }
}
