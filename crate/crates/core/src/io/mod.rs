//! Dataset ingestion and rendering.
//!
//! * [`dataset`]: distribution datasets as JSON.
//! * [`points`]: labeled point CSV files and aggregation by label.
//! * [`svg`]: deterministic SVG plots of projections, factor traces and eigenvalues.
//! * [`tables`]: CSV tables for projections, traces and eigenvalue curves.

pub mod dataset;
pub mod points;
pub mod svg;
pub mod tables;

pub use dataset::{load_dataset, parse_dataset, save_dataset, to_dataset_file, DatasetFile};
pub use points::{aggregate_by_label, load_points, parse_points, AggregateMode, PointsFile};
pub use svg::{render_eigvals_svg, render_projection_svg, render_traces_svg};
pub use tables::{eigvals_csv, projection_csv, traces_csv};
