//! Two-attribute contribution maps over a 2-D two-cluster layout.
//!
//! Each grid point is explained by a forest that either includes it in the
//! training data (in-bag, one forest per point) or was trained without it
//! (out-of-bag, one shared forest). The map records which share of the
//! explanation goes to the first attribute.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{explain, ExplanationVector, Method};
use crate::forest::{fit_forest, fit_forest_including, IsolationForest};
use crate::io::fmt_f64;
use crate::rng::{derive_seed, stream_rng};

const TAG_DATA: u64 = 11;
const TAG_FOREST: u64 = 12;
const TAG_EXPLAIN: u64 = 13;

pub const CLUSTER_SIZE: usize = 500;
/// Uniform anomalies added in the with-anomalies setting, as a share of the
/// clustered points.
pub const ANOMALY_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            x1: (-10.0, 10.0),
            x2: (-10.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bagging {
    InBag,
    OutOfBag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Setting {
    pub bagging: Bagging,
    pub with_anomalies: bool,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::new(Bagging::InBag, true),
        Setting::new(Bagging::OutOfBag, true),
        Setting::new(Bagging::InBag, false),
        Setting::new(Bagging::OutOfBag, false),
    ];

    pub const fn new(bagging: Bagging, with_anomalies: bool) -> Self {
        Self {
            bagging,
            with_anomalies,
        }
    }

    pub fn tag(self) -> &'static str {
        match (self.bagging, self.with_anomalies) {
            (Bagging::InBag, true) => "ib_a",
            (Bagging::OutOfBag, true) => "oob_a",
            (Bagging::InBag, false) => "ib_no_a",
            (Bagging::OutOfBag, false) => "oob_no_a",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|set| set.tag() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown heatmap setting '{s}' (expected ib_a, oob_a, ib_no_a or oob_no_a)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapConfig {
    pub resolution: usize,
    pub bounds: Bounds,
    pub setting: Setting,
    pub method: Method,
    pub trees: usize,
    pub psi: usize,
    pub seed: u64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            resolution: 50,
            bounds: Bounds::default(),
            setting: Setting::new(Bagging::InBag, true),
            method: Method::Ours,
            trees: 100,
            psi: 256,
            seed: 0,
        }
    }
}

impl HeatmapConfig {
    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Config(format!(
                "grid resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        let Bounds { x1, x2 } = self.bounds;
        if !(x1.0 < x1.1 && x2.0 < x2.1) || ![x1.0, x1.1, x2.0, x2.1].iter().all(|v| v.is_finite())
        {
            return Err(Error::Config(format!(
                "empty heatmap bounds {:?}",
                self.bounds
            )));
        }
        Ok(())
    }

    /// Grid points in (row, column) order: `x2` varies slowest.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let xs = linspace(self.bounds.x1, self.resolution);
        let ys = linspace(self.bounds.x2, self.resolution);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .collect()
    }
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub x1: f64,
    pub x2: f64,
    pub contribution_x1: f64,
}

/// Two unit-variance clusters of 500 points at (-5, -5) and (5, 5); with
/// anomalies, 2% extra points uniform over the default bounds.
pub fn gen_two_cluster_2d(with_anomalies: bool, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, 0);
    let n_anomalies = if with_anomalies {
        (ANOMALY_FRACTION * (2 * CLUSTER_SIZE) as f64).round() as usize
    } else {
        0
    };
    let mut values = Vec::with_capacity(2 * (2 * CLUSTER_SIZE + n_anomalies));
    for center in [-5.0, 5.0] {
        for _ in 0..CLUSTER_SIZE {
            values.push(center + rng.sample::<f64, _>(StandardNormal));
            values.push(center + rng.sample::<f64, _>(StandardNormal));
        }
    }
    let b = Bounds::default();
    for _ in 0..n_anomalies {
        values.push(rng.random_range(b.x1.0..=b.x1.1));
        values.push(rng.random_range(b.x2.0..=b.x2.1));
    }
    let n = values.len() / 2;
    Dataset::from_flat(values, n, 2, vec!["x1".into(), "x2".into()])
        .expect("generated values are finite")
}

/// Share of the first attribute after clipping negative weights to zero;
/// 0.5 when both clipped weights vanish.
pub fn contribution_fraction(w: &ExplanationVector) -> Result<f64> {
    if w.weights.len() != 2 {
        return Err(Error::Input(format!(
            "contribution maps need 2 attributes, got {}",
            w.weights.len()
        )));
    }
    let a = w.weights[0].max(0.0);
    let b = w.weights[1].max(0.0);
    if a + b == 0.0 {
        Ok(0.5)
    } else {
        Ok(a / (a + b))
    }
}

/// Full grid for one method and setting.
pub fn render_grid(config: &HeatmapConfig) -> Result<Vec<HeatmapCell>> {
    let mut out = render_points(config, &[config.method], &config.grid())?;
    Ok(out.pop().map(|(_, cells)| cells).unwrap_or_default())
}

/// Full grid for several methods at once, sharing the trained forests.
pub fn render_grid_methods(
    config: &HeatmapConfig,
    methods: &[Method],
) -> Result<Vec<(Method, Vec<HeatmapCell>)>> {
    render_points(config, methods, &config.grid())
}

/// Explains arbitrary query points under `config`'s setting; `config.method`
/// is ignored in favour of `methods`. Results keep the order of `points`.
pub fn render_points(
    config: &HeatmapConfig,
    methods: &[Method],
    points: &[(f64, f64)],
) -> Result<Vec<(Method, Vec<HeatmapCell>)>> {
    config.validate()?;
    let data = gen_two_cluster_2d(
        config.setting.with_anomalies,
        derive_seed(config.seed, TAG_DATA),
    );
    let forest_seed = derive_seed(config.seed, TAG_FOREST);
    let explain_seed = derive_seed(config.seed, TAG_EXPLAIN);

    let shared = match config.setting.bagging {
        Bagging::OutOfBag => Some(fit_forest(&data, config.trees, config.psi, forest_seed)?),
        Bagging::InBag => None,
    };

    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(i, &(x1, x2))| {
            let x = [x1, x2];
            let owned;
            let forest: &IsolationForest = match &shared {
                Some(f) => f,
                None => {
                    let with_point = data.with_row(&x)?;
                    owned = fit_forest_including(
                        &with_point,
                        config.trees,
                        config.psi,
                        forest_seed,
                        data.n(),
                    )?;
                    &owned
                }
            };
            let mut rng = stream_rng(explain_seed, i as u64);
            methods
                .iter()
                .map(|&m| {
                    let w = explain(m, forest, &x, &mut rng)?;
                    Ok(HeatmapCell {
                        x1,
                        x2,
                        contribution_x1: contribution_fraction(&w)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(methods
        .iter()
        .enumerate()
        .map(|(j, &m)| (m, per_point.iter().map(|cells| cells[j]).collect()))
        .collect())
}

/// Mean distance of the cells' first-attribute share from an even split.
pub fn mean_imbalance(cells: &[HeatmapCell]) -> f64 {
    cells
        .iter()
        .map(|c| (c.contribution_x1 - 0.5).abs())
        .sum::<f64>()
        / cells.len() as f64
}

/// Writes `x1,x2,method,setting,contribution_x1` rows.
pub fn write_heatmap_csv<W: Write>(
    maps: &[(Method, Setting, Vec<HeatmapCell>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "method", "setting", "contribution_x1"])?;
    for (method, setting, cells) in maps {
        for c in cells {
            w.write_record([
                fmt_f64(c.x1),
                fmt_f64(c.x2),
                method.to_string(),
                setting.to_string(),
                fmt_f64(c.contribution_x1),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<heatmap csv>", e))?;
    Ok(())
}
