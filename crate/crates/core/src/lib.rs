//! Isolation Forest anomaly detection with per-example attribute explanations.
//!
//! The crate trains isolation forests ([`forest`]), explains single
//! predictions ([`explain`]), and evaluates explanation quality by planting
//! known anomalies into normal data ([`synthbench`], [`heatmap`]). The
//! [`io`], [`bench`] and [`cli`] modules wire everything to CSV files and the
//! `isoexplain` binary.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod forest;
pub mod heatmap;
pub mod io;
pub mod rng;
pub mod synthbench;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use explain::{
    explain, explain_diffi_local, explain_ours, explain_random, normalize_explanation, split_score,
    ExplanationVector, Method,
};
pub use forest::{fit_forest, fit_forest_including, nu, IsolationForest, IsolationTree, TreeNode};
