//! Labeled point tables (CSV with a header row).

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CovMatrix, Distribution, Gaussian, Matrix, UncertainDataset, Vector};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct PointsFile {
    pub columns: Vec<String>,
    pub points: Vec<Vector>,
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregateMode {
    #[default]
    Gaussian,
    Empirical,
}

impl std::str::FromStr for AggregateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(AggregateMode::Gaussian),
            "empirical" => Ok(AggregateMode::Empirical),
            other => Err(Error::invalid(format!(
                "unknown aggregate mode {other:?} (expected gaussian or empirical)"
            ))),
        }
    }
}

/// Parses CSV text. `label_column` names the label column; without it a
/// trailing column called `label` is treated as labels and every other
/// column must be numeric.
pub fn parse_points(text: &str, path: &Path, label_column: Option<&str>) -> Result<PointsFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::parse(path, format!("missing label column {name:?}")))?,
        ),
        None => (header.last().map(String::as_str) == Some(DEFAULT_LABEL_COLUMN))
            .then(|| header.len() - 1),
    };
    let columns: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if columns.is_empty() {
        return Err(Error::parse(path, "no numeric columns"));
    }

    let mut points = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::parse(
                path,
                format!(
                    "line {line}: expected {} fields, got {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        let mut coords = Vec::with_capacity(columns.len());
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == label_idx {
                continue;
            }
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        path,
                        format!(
                            "line {line}, column {:?}: {cell:?} is not a finite number",
                            header[i]
                        ),
                    )
                })?;
            coords.push(value);
        }
        if let (Some(idx), Some(labels)) = (label_idx, labels.as_mut()) {
            labels.push(record[idx].to_string());
        }
        points.push(Vector::from_vec(coords));
    }
    if points.is_empty() {
        return Err(Error::parse(path, "empty dataset"));
    }
    Ok(PointsFile {
        columns,
        points,
        labels,
    })
}

pub fn load_points(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<PointsFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text, path, label_column)
}

impl PointsFile {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Column-wise z-scores with population standard deviation. Constant
    /// columns are only centered.
    pub fn standardized(&self) -> PointsFile {
        let n = self.points.len() as f64;
        let mean = self
            .points
            .iter()
            .fold(Vector::zeros(self.dim()), |acc, p| acc + p)
            / n;
        let var = self
            .points
            .iter()
            .fold(Vector::zeros(self.dim()), |acc, p| {
                acc + (p - &mean).map(|x| x * x)
            })
            / n;
        let sd = var.map(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
        PointsFile {
            columns: self.columns.clone(),
            points: self
                .points
                .iter()
                .map(|p| (p - &mean).component_div(&sd))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    /// Every row as an exact point, labeled when labels are present.
    pub fn to_dataset(&self) -> Result<UncertainDataset> {
        let ds =
            UncertainDataset::from_points(&self.points)?.with_dim_names(self.columns.clone())?;
        match &self.labels {
            Some(l) => ds.with_labels(l.iter().cloned().map(Some).collect()),
            None => Ok(ds),
        }
    }
}

/// One item per class, in order of first appearance, weighted by class size.
pub fn aggregate_by_label(points: &PointsFile, mode: AggregateMode) -> Result<UncertainDataset> {
    let labels = points
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("aggregation needs a label column"))?;
    let mut classes: Vec<(String, Vec<Vector>)> = Vec::new();
    for (p, l) in points.points.iter().zip(labels) {
        match classes.iter_mut().find(|(name, _)| name == l) {
            Some((_, members)) => members.push(p.clone()),
            None => classes.push((l.clone(), vec![p.clone()])),
        }
    }
    let mut items = Vec::with_capacity(classes.len());
    let mut weights = Vec::with_capacity(classes.len());
    let mut names = Vec::with_capacity(classes.len());
    for (name, members) in classes {
        let n = members.len();
        let dist = match mode {
            AggregateMode::Gaussian => {
                if n < 2 {
                    return Err(Error::invalid(format!(
                        "class {name:?} has {n} point; gaussian aggregation needs at least 2"
                    )));
                }
                Distribution::Gaussian(class_gaussian(&members)?)
            }
            AggregateMode::Empirical => Distribution::cluster(members)?,
        };
        items.push(dist);
        weights.push(n as f64);
        names.push(Some(name));
    }
    UncertainDataset::new(items)?
        .with_weights(weights)?
        .with_labels(names)?
        .with_dim_names(points.columns.clone())
}

fn class_gaussian(members: &[Vector]) -> Result<Gaussian> {
    let n = members.len() as f64;
    let d = members[0].len();
    let mean = members.iter().fold(Vector::zeros(d), |acc, p| acc + p) / n;
    let mut cov = Matrix::zeros(d, d);
    for p in members {
        let c = p - &mean;
        cov.ger(1.0 / n, &c, &c, 1.0);
    }
    Gaussian::new(mean, CovMatrix::new(cov)?)
}
