//! Hellinger distance between PCA results and the sampling comparison.
//!
//! A PCA result is fully described by its mean and global covariance, so
//! two results are compared as Gaussians through the Bhattacharyya
//! coefficient. The sampling harness pools draws from every item, computes
//! the conventional covariance and measures its distance to the closed form.

use std::fmt::Write as _;

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cov::{global_cov, CovOptions, GlobalCov};
use crate::eigen;
use crate::error::{Error, Result};
use crate::model::{CovMatrix, Distribution, Gaussian, Matrix, UncertainDataset, Vector};
use crate::sensitivity::median;

/// Ridge added to both covariances when either is singular.
pub const SINGULAR_RIDGE: f64 = 1e-12;

/// Mean and covariance of a PCA result, read as a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaSummary {
    pub mean: Vector,
    pub cov: CovMatrix,
}

impl PcaSummary {
    pub fn new(mean: Vector, cov: CovMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                actual: cov.dim(),
            });
        }
        Ok(PcaSummary { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl From<&GlobalCov> for PcaSummary {
    fn from(g: &GlobalCov) -> Self {
        PcaSummary {
            mean: g.mean.clone(),
            cov: g.matrix.clone(),
        }
    }
}

impl From<&Gaussian> for PcaSummary {
    fn from(g: &Gaussian) -> Self {
        PcaSummary {
            mean: g.mean().clone(),
            cov: g.cov().clone(),
        }
    }
}

/// `ln det` via Cholesky; `None` when the matrix is not positive definite.
fn log_det(m: &Matrix) -> Option<(f64, Cholesky<f64, nalgebra::Dyn>)> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some((2.0 * acc, chol))
}

fn bhattacharyya_distance_raw(dmu: &Vector, p: &Matrix, q: &Matrix) -> Option<f64> {
    let avg = (p + q) * 0.5;
    let (ld_avg, chol) = log_det(&avg)?;
    let (ld_p, _) = log_det(p)?;
    let (ld_q, _) = log_det(q)?;
    let solved = chol.solve(dmu);
    let mahalanobis = dmu.dot(&solved);
    Some(0.125 * mahalanobis + 0.5 * (ld_avg - 0.5 * (ld_p + ld_q)))
}

/// Bhattacharyya distance `D_B = ⅛ Δμᵀ Σ̄⁻¹ Δμ + ½ ln(det Σ̄ / √(det Σ_p det Σ_q))`.
pub fn bhattacharyya_distance(p: &PcaSummary, q: &PcaSummary) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: q.dim(),
        });
    }
    let dmu = &p.mean - &q.mean;
    let (pm, qm) = (p.cov.as_matrix(), q.cov.as_matrix());
    if let Some(d) = bhattacharyya_distance_raw(&dmu, pm, qm) {
        return Ok(d.max(0.0));
    }
    let ridge = Matrix::identity(p.dim(), p.dim()) * SINGULAR_RIDGE;
    bhattacharyya_distance_raw(&dmu, &(pm + &ridge), &(qm + &ridge))
        .map(|d| d.max(0.0))
        .ok_or(Error::Singular)
}

/// Closed-form Gaussian Bhattacharyya coefficient `exp(-D_B)` in `[0, 1]`.
pub fn bhattacharyya_coeff(p: &PcaSummary, q: &PcaSummary) -> Result<f64> {
    Ok((-bhattacharyya_distance(p, q)?).exp().clamp(0.0, 1.0))
}

/// Hellinger distance `√(1 - BC)` in `[0, 1]`.
pub fn hellinger(p: &PcaSummary, q: &PcaSummary) -> Result<f64> {
    Ok((1.0 - bhattacharyya_coeff(p, q)?).max(0.0).sqrt().min(1.0))
}

/// Conventional PCA summary of pooled samples: `samples_per_item` draws from
/// every item, each carrying its item's weight, with 1/M normalization.
pub fn sampled_pca<R: Rng + ?Sized>(
    ds: &UncertainDataset,
    samples_per_item: usize,
    rng: &mut R,
) -> Result<PcaSummary> {
    if samples_per_item < 1 {
        return Err(Error::invalid("samples_per_item must be at least 1"));
    }
    let dim = ds.dim();
    let mut draws = Vec::with_capacity(ds.len() * samples_per_item);
    let mut weights = Vec::with_capacity(draws.capacity());
    for (item, &w) in ds.items().iter().zip(ds.weights()) {
        let sampler = item.sampler()?;
        for _ in 0..samples_per_item {
            draws.push(sampler.draw(rng));
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    let mut mean = Vector::zeros(dim);
    for (x, &w) in draws.iter().zip(&weights) {
        mean += x * w;
    }
    mean /= total;
    let mut cov = Matrix::zeros(dim, dim);
    for (x, &w) in draws.iter().zip(&weights) {
        let dev = x - &mean;
        cov.ger(w, &dev, &dev, 1.0);
    }
    cov /= total;
    PcaSummary::new(mean, CovMatrix::symmetrized(cov))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_items: usize,
    pub dims: Vec<usize>,
    /// Samples drawn per item; strictly increasing.
    pub sample_counts: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_items: 10,
            dims: (2..=12).collect(),
            sample_counts: vec![10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000],
            runs: 40,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.n_items < 1 {
            return Err(Error::invalid("n_items must be at least 1"));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::invalid(
                "dims must be a nonempty list of positive integers",
            ));
        }
        if self.sample_counts.is_empty()
            || self.sample_counts[0] < 1
            || self.sample_counts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "sample counts must be positive and strictly increasing",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dim: usize,
    pub samples: usize,
    pub median_hellinger: f64,
    pub runs: usize,
    pub seed: u64,
}

/// Seeded random orthogonal matrix (QR of a Gaussian matrix with the signs
/// of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q diag(u) Qᵀ` with `u ~ U[0.5, 2]`.
pub fn random_covariance<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CovMatrix {
    let q = random_orthogonal(dim, rng);
    let spectrum = Vector::from_fn(dim, |_, _| rng.random_range(0.5..2.0));
    CovMatrix::symmetrized(&q * Matrix::from_diagonal(&spectrum) * q.transpose())
}

/// Reverses the row-major entries of `sigma`, symmetrizes and projects the
/// result onto the PSD cone.
pub fn reversed_covariance(sigma: &CovMatrix) -> Result<CovMatrix> {
    let d = sigma.dim();
    let m = sigma.as_matrix();
    let reversed = Matrix::from_fn(d, d, |i, j| m[(d - 1 - i, d - 1 - j)]);
    let sym = CovMatrix::symmetrized(reversed);
    let pairs = eigen::jacobi(sym.as_matrix())?;
    let (values, vectors) = pairs;
    let clamped = Vector::from_iterator(d, values.iter().map(|v| v.max(0.0)));
    Ok(CovMatrix::symmetrized(
        &vectors * Matrix::from_diagonal(&clamped) * vectors.transpose(),
    ))
}

/// `n_items` Gaussians with means drawn from `N(0, Σ)` and a shared
/// covariance obtained by reversing `Σ`.
pub fn synthetic_dataset<R: Rng + ?Sized>(
    dim: usize,
    n_items: usize,
    rng: &mut R,
) -> Result<UncertainDataset> {
    let sigma = random_covariance(dim, rng);
    let psi = reversed_covariance(&sigma)?;
    let prior =
        Distribution::Gaussian(Gaussian::from_parts(Vector::zeros(dim), sigma)).sampler()?;
    let items = (0..n_items)
        .map(|_| Distribution::Gaussian(Gaussian::from_parts(prior.draw(rng), psi.clone())))
        .collect();
    UncertainDataset::new(items)
}

/// RNG for one run: seeded with `seed + run`, with the dimension selecting
/// an independent stream.
pub fn run_rng(seed: u64, dim: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
    rng.set_stream(dim as u64);
    rng
}

fn one_run(cfg: &ExperimentConfig, dim: usize, run: usize) -> Result<Vec<f64>> {
    let mut rng = run_rng(cfg.seed, dim, run);
    let ds = synthetic_dataset(dim, cfg.n_items, &mut rng)?;
    let closed = PcaSummary::from(&global_cov(&ds, &CovOptions::default())?);
    cfg.sample_counts
        .iter()
        .map(|&m| hellinger(&sampled_pca(&ds, m, &mut rng)?, &closed))
        .collect()
}

/// Median over runs of the Hellinger distance between the sampled and the
/// closed-form summary, for every `(dim, sample count)`.
///
/// Runs execute in parallel; every run owns its RNG, so the table does not
/// depend on scheduling.
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.runs).map(move |r| (d, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(d, r)| one_run(cfg, d, r))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (di, &dim) in cfg.dims.iter().enumerate() {
        let runs = &results[di * cfg.runs..(di + 1) * cfg.runs];
        for (si, &samples) in cfg.sample_counts.iter().enumerate() {
            let values: Vec<f64> = runs.iter().map(|r| r[si]).collect();
            rows.push(ConvergenceRow {
                dim,
                samples,
                median_hellinger: median(&values),
                runs: cfg.runs,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("dim,samples,median_hellinger,runs,seed\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.dim, r.samples, r.median_hellinger, r.runs, r.seed
        );
    }
    out
}
