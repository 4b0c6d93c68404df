//! JSON dataset files.
//!
//! ```json
//! {
//!   "dims": ["M1", "P1"],
//!   "items": [
//!     {"label": "Tom", "values": [{"number": 15}, {"interval": [10, 12]}]},
//!     {"label": "Bob", "weight": 2, "values": [{"trapezoid": [8, 10, 12, 14]},
//!                                              {"normal": {"mean": 14, "sd": 5.7}}]},
//!     {"mvn": {"mean": [1, 2], "cov": [[1, 0], [0, 1]]}}
//!   ]
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CovMatrix, Distribution, Gaussian, Scalar1D, UncertainDataset, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub dims: Vec<String>,
    pub items: Vec<ItemSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<CellSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mvn: Option<MvnSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellSpec {
    Number(f64),
    Interval([f64; 2]),
    Trapezoid([f64; 4]),
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MvnSpec {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl From<CellSpec> for Scalar1D {
    fn from(c: CellSpec) -> Self {
        match c {
            CellSpec::Number(x) => Scalar1D::Number(x),
            CellSpec::Interval([lo, hi]) => Scalar1D::Interval { lo, hi },
            CellSpec::Trapezoid([a, b, c, d]) => Scalar1D::Trapezoid { a, b, c, d },
            CellSpec::Normal { mean, sd } => Scalar1D::Normal { mean, sd },
        }
    }
}

impl From<Scalar1D> for CellSpec {
    fn from(s: Scalar1D) -> Self {
        match s {
            Scalar1D::Number(x) => CellSpec::Number(x),
            Scalar1D::Interval { lo, hi } => CellSpec::Interval([lo, hi]),
            Scalar1D::Trapezoid { a, b, c, d } => CellSpec::Trapezoid([a, b, c, d]),
            Scalar1D::Normal { mean, sd } => CellSpec::Normal { mean, sd },
        }
    }
}

impl DatasetFile {
    /// Resolves every item into a validated distribution. Errors name the
    /// offending item and axis.
    pub fn into_dataset(self, path: &Path) -> Result<UncertainDataset> {
        let dim = self.dims.len();
        if dim == 0 {
            return Err(Error::parse(path, "\"dims\" must list at least one axis"));
        }
        if self.items.is_empty() {
            return Err(Error::parse(path, "empty dataset"));
        }
        let mut items = Vec::with_capacity(self.items.len());
        let mut weights = Vec::with_capacity(self.items.len());
        let mut labels = Vec::with_capacity(self.items.len());
        for (i, item) in self.items.into_iter().enumerate() {
            let ctx = match &item.label {
                Some(l) => format!("item {i} ({l})"),
                None => format!("item {i}"),
            };
            let fail = |msg: String| Error::parse(path, format!("{ctx}: {msg}"));
            let dist = match (item.values, item.mvn) {
                (Some(values), None) => {
                    if values.len() != dim {
                        return Err(fail(format!("expected {dim} values, got {}", values.len())));
                    }
                    let marginals: Vec<Scalar1D> = values.into_iter().map(Scalar1D::from).collect();
                    for (axis, m) in marginals.iter().enumerate() {
                        m.validate()
                            .map_err(|e| fail(format!("{}: {e}", self.dims[axis])))?;
                    }
                    Distribution::ProductOf1D(marginals)
                }
                (None, Some(mvn)) => {
                    if mvn.mean.len() != dim {
                        return Err(fail(format!(
                            "mvn mean must have {dim} entries, got {}",
                            mvn.mean.len()
                        )));
                    }
                    if mvn.cov.len() != dim || mvn.cov.iter().any(|r| r.len() != dim) {
                        return Err(fail(format!("mvn cov must be {dim}x{dim}")));
                    }
                    let cov = CovMatrix::from_rows(&mvn.cov).map_err(|e| fail(e.to_string()))?;
                    Distribution::Gaussian(
                        Gaussian::new(Vector::from_column_slice(&mvn.mean), cov)
                            .map_err(|e| fail(e.to_string()))?,
                    )
                }
                (Some(_), Some(_)) => {
                    return Err(fail("give either \"values\" or \"mvn\", not both".into()))
                }
                (None, None) => return Err(fail("missing \"values\" or \"mvn\"".into())),
            };
            let weight = item.weight.unwrap_or(1.0);
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(fail(format!(
                    "weight must be finite and nonnegative, got {weight}"
                )));
            }
            items.push(dist);
            weights.push(weight);
            labels.push(item.label);
        }
        UncertainDataset::new(items)
            .and_then(|ds| ds.with_weights(weights))
            .and_then(|ds| ds.with_labels(labels))
            .and_then(|ds| ds.with_dim_names(self.dims))
            .map_err(|e| match e {
                Error::Parse { .. } => e,
                other => Error::parse(path, other.to_string()),
            })
    }
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<UncertainDataset> {
    let file: DatasetFile =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
    file.into_dataset(path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<UncertainDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

/// Serializable form of a dataset. Points become rows of numbers and
/// empirical clusters are written as their Gaussian moment summary.
pub fn to_dataset_file(ds: &UncertainDataset) -> DatasetFile {
    let items = ds
        .items()
        .iter()
        .enumerate()
        .map(|(i, dist)| {
            let (values, mvn) = match dist {
                Distribution::Point(x) => {
                    (Some(x.iter().map(|&v| CellSpec::Number(v)).collect()), None)
                }
                Distribution::ProductOf1D(m) => {
                    (Some(m.iter().map(|&s| CellSpec::from(s)).collect()), None)
                }
                Distribution::Gaussian(_) | Distribution::EmpiricalCluster(_) => {
                    let g = dist.moments();
                    let k = g.cov().as_matrix();
                    let d = g.dim();
                    let mvn = MvnSpec {
                        mean: g.mean().iter().copied().collect(),
                        cov: (0..d)
                            .map(|r| (0..d).map(|c| k[(r, c)]).collect())
                            .collect(),
                    };
                    (None, Some(mvn))
                }
            };
            let weight = ds.weights()[i];
            ItemSpec {
                label: ds.labels()[i].clone(),
                weight: (weight != 1.0).then_some(weight),
                values,
                mvn,
            }
        })
        .collect();
    DatasetFile {
        dims: ds.dim_names().to_vec(),
        items,
    }
}

pub fn save_dataset(ds: &UncertainDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_dataset_file(ds))
        .map_err(|e| Error::parse(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
