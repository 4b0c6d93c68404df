//! Principal component analysis on probability distributions.
//!
//! Every input item is a random vector known through its first two moments.
//! The global covariance adds the (weighted) average item covariance to the
//! covariance of the item means, so certain points and uncertain
//! distributions share one pipeline:
//!
//! ```text
//! dataset -> cov::global_cov -> eigen::eig_sym -> eigen::select_components -> project
//! ```
//!
//! [`sensitivity`] sweeps the uncertainty scale factor and produces factor
//! traces, [`metrics`] compares PCA results with the Hellinger distance, and
//! [`io`] handles dataset files and SVG/CSV output.

pub mod cli;
pub mod cov;
pub mod eigen;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod project;
pub mod sensitivity;

pub use cov::{dataset_mean, global_cov, global_cov_from_points, CovOptions, GlobalCov, Scale};
pub use eigen::{eig_sym, fit, select_components, EigenPairs, PcaModel};
pub use error::{Error, Result};
pub use model::{
    affine_cov, affine_mean, CovMatrix, Distribution, Gaussian, Matrix, Scalar1D, UncertainDataset,
    Vector,
};
