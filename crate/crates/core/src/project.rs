//! Projection of points and distributions onto the principal subspace.
//!
//! Projections are mean-centered: `y = Aᵀ(x - x̄)`. Distributions map to the
//! Gaussian `N(Aᵀ(μ - x̄), Aᵀ Ψ A)`; non-Gaussian inputs are summarized by
//! their first two moments.

use crate::eigen::{self, PcaModel};
use crate::error::{Error, Result};
use crate::model::{affine_cov, CovMatrix, Distribution, Gaussian, Vector};

pub fn project_point(model: &PcaModel, x: &Vector) -> Result<Vector> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    Ok(model.components.tr_mul(&(x - &model.mean)))
}

pub fn project_distribution(model: &PcaModel, dist: &Distribution) -> Result<Gaussian> {
    if dist.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: dist.dim(),
        });
    }
    let mean = project_point(model, &dist.mean())?;
    let cov = affine_cov(&model.components.transpose(), &dist.cov())?;
    Ok(Gaussian::from_parts(mean, cov))
}

/// Outline of the `k_sigma` isoline of a 2-D Gaussian: `μ + k L (cos θ, sin θ)`
/// with `L = V √Λ`, sampled at `segments` evenly spaced angles.
pub fn ellipse_outline(g: &Gaussian, k_sigma: f64, segments: usize) -> Result<Vec<[f64; 2]>> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: g.dim(),
        });
    }
    if !(k_sigma > 0.0 && k_sigma.is_finite()) {
        return Err(Error::invalid("k_sigma must be positive"));
    }
    if segments < 8 {
        return Err(Error::invalid("ellipse outline needs at least 8 segments"));
    }
    let pairs = eigen::eig_sym(g.cov())?;
    let v = &pairs.vectors;
    let r0 = k_sigma * pairs.values[0].sqrt();
    let r1 = k_sigma * pairs.values[1].sqrt();
    let (cx, cy) = (g.mean()[0], g.mean()[1]);
    Ok((0..segments)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / segments as f64;
            let (u0, u1) = (r0 * theta.cos(), r1 * theta.sin());
            [
                cx + v[(0, 0)] * u0 + v[(0, 1)] * u1,
                cy + v[(1, 0)] * u0 + v[(1, 1)] * u1,
            ]
        })
        .collect())
}

/// Projected covariance scaled for display at uncertainty scale `s`:
/// `s² Aᵀ Ψ A` (infinite scales show the unscaled covariance).
pub fn scaled_cov(cov: &CovMatrix, scale: crate::cov::Scale) -> CovMatrix {
    match scale {
        crate::cov::Scale::Finite(s) => CovMatrix::symmetrized(cov.as_matrix() * (s * s)),
        crate::cov::Scale::Infinite => cov.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eig_sym, select_components};
    use crate::model::Matrix;
    use proptest::prelude::*;

    fn model(columns: &[&[f64]], mean: &[f64]) -> PcaModel {
        let d = mean.len();
        let flat: Vec<f64> = columns.iter().flat_map(|c| c.iter().copied()).collect();
        PcaModel {
            mean: Vector::from_column_slice(mean),
            components: Matrix::from_column_slice(d, columns.len(), &flat),
            eigenvalues: vec![0.0; d],
        }
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn point_examples() {
        let m = model(&[&[1.0, 0.0]], &[0.0, 0.0]);
        assert_eq!(
            project_point(&m, &v(&[3.0, 7.0])).unwrap().as_slice(),
            &[3.0]
        );
        let m = model(&[&[1.0, 0.0]], &[2.0, 5.0]);
        assert_eq!(
            project_point(&m, &v(&[2.0, 5.0])).unwrap().as_slice(),
            &[0.0]
        );
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let m = model(&[&[r, r]], &[0.0, 0.0]);
        let y = project_point(&m, &v(&[1.0, 1.0])).unwrap();
        assert!((y[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(project_point(&m, &v(&[1.0])).is_err());
    }

    #[test]
    fn distribution_examples() {
        let m = model(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], &[0.0, 0.0, 0.0]);
        let g = Distribution::gaussian(&[1.0, 2.0, 3.0], CovMatrix::identity(3)).unwrap();
        let p = project_distribution(&m, &g).unwrap();
        assert_eq!(p.mean().as_slice(), &[1.0, 2.0]);
        assert_eq!(p.cov(), &CovMatrix::identity(2));

        let p = project_distribution(&m, &Distribution::point(&[4.0, 5.0, 6.0])).unwrap();
        assert_eq!(p.mean().as_slice(), &[4.0, 5.0]);
        assert!(p.cov().is_zero());
        assert!(project_distribution(&m, &Distribution::point(&[4.0])).is_err());
    }

    /// `Aᵀ Ψ A` from explicit index loops.
    fn naive_congruence(a: &Matrix, psi: &Matrix) -> Matrix {
        let (d, q) = a.shape();
        Matrix::from_fn(q, q, |i, j| {
            let mut acc = 0.0;
            for k in 0..d {
                for l in 0..d {
                    acc += a[(k, i)] * psi[(k, l)] * a[(l, j)];
                }
            }
            acc
        })
    }

    proptest! {
        #[test]
        fn projected_cov_matches_naive_loops(
            bf in prop::collection::vec(-2.0f64..2.0, 16),
            kf in prop::collection::vec(-2.0f64..2.0, 16),
            mean in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let b = Matrix::from_column_slice(4, 4, &bf);
            let psi = CovMatrix::new(&b * b.transpose()).unwrap();
            let k = Matrix::from_column_slice(4, 4, &kf);
            let basis = eig_sym(&CovMatrix::new(&k * k.transpose()).unwrap()).unwrap();
            let m = select_components(&basis, Vector::zeros(4), 2).unwrap();
            let g = Distribution::gaussian(&mean, psi.clone()).unwrap();
            let p = project_distribution(&m, &g).unwrap();
            let expected = naive_congruence(&m.components, psi.as_matrix());
            prop_assert!((p.cov().as_matrix() - expected).amax() <= 1e-12);
            let (min, largest) = p.cov().eigen_extremes().unwrap();
            prop_assert!(min >= -1e-9 * largest);
        }

        #[test]
        fn full_rank_projection_inverts_reconstruction(
            kf in prop::collection::vec(-2.0f64..2.0, 9),
            y in prop::collection::vec(-5.0f64..5.0, 3),
            mean in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let k = Matrix::from_column_slice(3, 3, &kf);
            let basis = eig_sym(&CovMatrix::new(&k * k.transpose()).unwrap()).unwrap();
            let m = select_components(&basis, v(&mean), 3).unwrap();
            let y = v(&y);
            let x = &m.components * &y + &m.mean;
            let back = project_point(&m, &x).unwrap();
            prop_assert!((back - y).amax() <= 1e-10);
        }
    }

    #[test]
    fn unit_circle_outline() {
        let g = Gaussian::new(Vector::zeros(2), CovMatrix::identity(2)).unwrap();
        let pts = ellipse_outline(&g, 1.0, 64).unwrap();
        assert_eq!(pts.len(), 64);
        for (j, p) in pts.iter().enumerate() {
            let theta = std::f64::consts::TAU * j as f64 / 64.0;
            assert!((p[0] - theta.cos()).abs() < 1e-12);
            assert!((p[1] - theta.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_aligned_outline() {
        let g = Gaussian::new(
            v(&[1.0, -1.0]),
            CovMatrix::from_diagonal(&[4.0, 1.0]).unwrap(),
        )
        .unwrap();
        let pts = ellipse_outline(&g, 1.0, 8).unwrap();
        let max_x = pts.iter().map(|p| (p[0] - 1.0).abs()).fold(0.0, f64::max);
        let max_y = pts.iter().map(|p| (p[1] + 1.0).abs()).fold(0.0, f64::max);
        assert!((max_x - 2.0).abs() < 1e-12);
        assert!((max_y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_outline_lies_on_isoline() {
        let cov = CovMatrix::from_rows(&[vec![3.0, 1.2], vec![1.2, 1.0]]).unwrap();
        let g = Gaussian::new(v(&[0.5, 2.0]), cov.clone()).unwrap();
        let inv = cov.as_matrix().clone().try_inverse().unwrap();
        for k in [1.0, 2.0] {
            for p in ellipse_outline(&g, k, 36).unwrap() {
                let d = v(&[p[0] - 0.5, p[1] - 2.0]);
                let q = (d.transpose() * &inv * &d)[(0, 0)];
                assert!((q - k * k).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn outline_errors() {
        let bad = Gaussian::from_parts(
            Vector::zeros(2),
            CovMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(),
        );
        assert!(ellipse_outline(&bad, 1.0, 16).is_err());
        let g = Gaussian::new(Vector::zeros(3), CovMatrix::identity(3)).unwrap();
        assert!(ellipse_outline(&g, 1.0, 16).is_err());
        let g = Gaussian::new(Vector::zeros(2), CovMatrix::identity(2)).unwrap();
        assert!(ellipse_outline(&g, 1.0, 4).is_err());
        assert!(ellipse_outline(&g, 0.0, 16).is_err());
    }
}
