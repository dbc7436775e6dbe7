//! Ground-truth simulation for explanation quality.
//!
//! Normal data carries no label telling which attribute makes a point
//! anomalous, so one is planted: pick an example, push a random coalition of
//! `k` attributes to `multiplier x column max`, and explain the example before
//! and after. A faithful method should move all of its weight onto the
//! coalition, which is scored against the vector holding `1/k` on each
//! changed attribute.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{explain_random, normalize_explanation, ExplanationVector, Method};
use crate::forest::{fit_forest, IsolationForest};
use crate::io::fmt_f64;
use crate::rng::{derive_seed, stream_rng};

const TAG_DATA: u64 = 1;
const TAG_FOREST: u64 = 2;
const TAG_PICKS: u64 = 3;

/// Distance of cluster centers from the origin along every coordinate.
pub const CLUSTER_OFFSET: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalizationSpec {
    /// Fraction of attributes to change, in (0, 1].
    pub m_fraction: f64,
    /// Number of examples drawn (with replacement) and explained.
    pub n_examples: usize,
    pub multiplier: f64,
    pub seed: u64,
    /// Score `w0 - w_new` with its signs instead of its magnitude.
    pub signed_difference: bool,
}

impl Default for AnomalizationSpec {
    fn default() -> Self {
        Self {
            m_fraction: 0.33,
            n_examples: 100,
            multiplier: 3.0,
            seed: 0,
            signed_difference: false,
        }
    }
}

impl AnomalizationSpec {
    /// Coalition size `max(1, round(m * d))`, capped at `d`.
    pub fn k(&self, d: usize) -> usize {
        ((self.m_fraction * d as f64).round() as usize).clamp(1, d)
    }

    fn validate(&self) -> Result<()> {
        if !(self.m_fraction > 0.0 && self.m_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "m_fraction must lie in (0, 1], got {}",
                self.m_fraction
            )));
        }
        if self.n_examples == 0 {
            return Err(Error::Config("n_examples must be at least 1".into()));
        }
        if !self.multiplier.is_finite() {
            return Err(Error::Config("multiplier must be finite".into()));
        }
        Ok(())
    }
}

/// Ideal explanation: `1/k` on each of the `k` changed attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedVector {
    pub weights: Vec<f64>,
    pub changed: BTreeSet<usize>,
}

pub fn expected_vector(changed: &BTreeSet<usize>, d: usize) -> Result<ExpectedVector> {
    check_changed(changed, d)?;
    let share = 1.0 / changed.len() as f64;
    let mut weights = vec![0.0; d];
    for &j in changed {
        weights[j] = share;
    }
    Ok(ExpectedVector {
        weights,
        changed: changed.clone(),
    })
}

fn check_changed(changed: &BTreeSet<usize>, d: usize) -> Result<()> {
    if changed.is_empty() {
        return Err(Error::Input(
            "the set of changed attributes is empty".into(),
        ));
    }
    if let Some(&j) = changed.iter().find(|&&j| j >= d) {
        return Err(Error::Input(format!(
            "attribute {j} out of range for d={d}"
        )));
    }
    Ok(())
}

/// Euclidean distance between the expected and a normalized explanation.
pub fn explanation_error(expected: &ExpectedVector, w: &[f64]) -> Result<f64> {
    if expected.weights.len() != w.len() {
        return Err(Error::Input(format!(
            "expected vector has {} entries, explanation has {}",
            expected.weights.len(),
            w.len()
        )));
    }
    Ok(expected
        .weights
        .iter()
        .zip(w)
        .map(|(e, v)| (e - v) * (e - v))
        .sum::<f64>()
        .sqrt())
}

/// Copy of row `example_index` with every changed attribute set to
/// `multiplier * max(column)` over all rows.
pub fn anomalize(
    data: &Dataset,
    example_index: usize,
    changed: &BTreeSet<usize>,
    multiplier: f64,
) -> Result<Vec<f64>> {
    check_changed(changed, data.d())?;
    if example_index >= data.n() {
        return Err(Error::Input(format!(
            "example {example_index} out of range for n={}",
            data.n()
        )));
    }
    Ok(anomalize_with_max(
        data.row(example_index),
        changed,
        multiplier,
        &data.column_max(),
    ))
}

fn anomalize_with_max(
    row: &[f64],
    changed: &BTreeSet<usize>,
    multiplier: f64,
    column_max: &[f64],
) -> Vec<f64> {
    let mut x = row.to_vec();
    for &j in changed {
        x[j] = multiplier * column_max[j];
    }
    x
}

/// `n` points split evenly over `n_clusters` unit-variance Gaussians.
///
/// Cluster `c` is centred at `±5` on every coordinate: even clusters sit on
/// the positive diagonal and odd ones on the negative, and clusters beyond the
/// first pair additionally flip the coordinates selected by the bits of `c/2`.
/// Earlier clusters receive the remainder when `n` does not divide evenly.
pub fn gen_clusters(n: usize, d: usize, n_clusters: usize, seed: u64) -> Result<Dataset> {
    if n_clusters == 0 || d == 0 {
        return Err(Error::Config(
            "need at least one cluster and one attribute".into(),
        ));
    }
    if n < n_clusters {
        return Err(Error::Config(format!(
            "{n} points cannot fill {n_clusters} clusters"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut values = Vec::with_capacity(n * d);
    for c in 0..n_clusters {
        let count = n / n_clusters + usize::from(c < n % n_clusters);
        let center = cluster_center(c, d);
        for _ in 0..count {
            values.extend(
                center
                    .iter()
                    .map(|m| m + rng.sample::<f64, _>(StandardNormal)),
            );
        }
    }
    let names = (0..d).map(|j| format!("f{j}")).collect();
    Dataset::from_flat(values, n, d, names)
}

fn cluster_center(c: usize, d: usize) -> Vec<f64> {
    let base = if c.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pattern = c / 2;
    (0..d)
        .map(|j| {
            let flip = j < usize::BITS as usize && (pattern >> j) & 1 == 1;
            if flip {
                -base * CLUSTER_OFFSET
            } else {
                base * CLUSTER_OFFSET
            }
        })
        .collect()
}

/// Aggregated outcome of one method over all picks.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthResult {
    pub method: Method,
    /// Mean error over the picks that produced a usable difference vector.
    pub mean_error: f64,
    /// `mean_error` divided by the random baseline's mean error on the same picks.
    pub normalized_error: f64,
    /// Error per pick in pick order; `None` marks an excluded pick.
    pub errors: Vec<Option<f64>>,
}

impl GroundTruthResult {
    pub fn n_excluded(&self) -> usize {
        self.errors.iter().filter(|e| e.is_none()).count()
    }

    pub fn n_used(&self) -> usize {
        self.errors.len() - self.n_excluded()
    }
}

struct Pick {
    errors: Vec<Option<f64>>,
    random_error: f64,
}

/// Runs the anomalize / re-explain / compare protocol on `spec.n_examples`
/// examples drawn with replacement from `data`.
///
/// The random baseline is always evaluated (one fresh vector per pick) to
/// normalize the other methods; it is reported only when listed in `methods`.
/// Picks whose before/after explanations coincide cannot be normalized and
/// are excluded with a warning.
pub fn run_ground_truth(
    data: &Dataset,
    forest: &IsolationForest,
    spec: &AnomalizationSpec,
    methods: &[Method],
) -> Result<Vec<GroundTruthResult>> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(Error::Config("no explanation methods selected".into()));
    }
    if forest.d() != data.d() {
        return Err(Error::Input(format!(
            "forest expects {} attributes, data has {}",
            forest.d(),
            data.d()
        )));
    }
    let d = data.d();
    let k = spec.k(d);
    let column_max = data.column_max();
    let pick_seed = derive_seed(spec.seed, TAG_PICKS);
    let scored: Vec<Method> = methods
        .iter()
        .copied()
        .filter(|m| *m != Method::Random)
        .collect();

    let picks = (0..spec.n_examples)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(pick_seed, p as u64);
            let example = rng.random_range(0..data.n());
            let changed: BTreeSet<usize> = index::sample(&mut rng, d, k).into_iter().collect();
            let expected = expected_vector(&changed, d)?;
            let original = data.row(example);
            let modified = anomalize_with_max(original, &changed, spec.multiplier, &column_max);

            let mut errors = Vec::with_capacity(scored.len());
            for &m in &scored {
                let before = crate::explain::explain(m, forest, original, &mut rng)?;
                let after = crate::explain::explain(m, forest, &modified, &mut rng)?;
                let diff = difference(&before, &after, spec.signed_difference);
                errors.push(match normalize_explanation(&diff) {
                    Ok(w) => Some(explanation_error(&expected, &w.weights)?),
                    Err(Error::ZeroNorm) => None,
                    Err(e) => return Err(e),
                });
            }
            let random = explain_random(d, &mut rng)?;
            let random_error = explanation_error(&expected, &random.weights)?;
            Ok(Pick {
                errors,
                random_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let random_mean = picks.iter().map(|p| p.random_error).sum::<f64>() / picks.len() as f64;
    let mut results = Vec::with_capacity(methods.len());
    for &m in methods {
        let errors: Vec<Option<f64>> = match scored.iter().position(|&s| s == m) {
            Some(i) => picks.iter().map(|p| p.errors[i]).collect(),
            None => picks.iter().map(|p| Some(p.random_error)).collect(),
        };
        let used: Vec<f64> = errors.iter().flatten().copied().collect();
        let excluded = errors.len() - used.len();
        if excluded > 0 {
            log::warn!(
                "{m}: excluded {excluded} of {} picks with an all-zero difference",
                errors.len()
            );
        }
        let mean_error = if used.is_empty() {
            f64::NAN
        } else {
            used.iter().sum::<f64>() / used.len() as f64
        };
        results.push(GroundTruthResult {
            method: m,
            mean_error,
            normalized_error: mean_error / random_mean,
            errors,
        });
    }
    Ok(results)
}

fn difference(
    before: &ExplanationVector,
    after: &ExplanationVector,
    signed: bool,
) -> ExplanationVector {
    let weights = before
        .weights
        .iter()
        .zip(&after.weights)
        .map(|(b, a)| if signed { b - a } else { (b - a).abs() })
        .collect();
    ExplanationVector {
        weights,
        method: before.method,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Size,
    Dims,
    MFraction,
}

impl SweepAxis {
    pub fn tag(self) -> &'static str {
        match self {
            SweepAxis::Size => "size",
            SweepAxis::Dims => "dims",
            SweepAxis::MFraction => "m_fraction",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(SweepAxis::Size),
            "dims" => Ok(SweepAxis::Dims),
            "m_fraction" | "m" => Ok(SweepAxis::MFraction),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected size, dims or m_fraction)"
            ))),
        }
    }
}

/// Parameters of one synthetic ground-truth run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub n_clusters: usize,
    pub trees: usize,
    pub psi: usize,
    pub spec: AnomalizationSpec,
    pub methods: Vec<Method>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            d: 6,
            n_clusters: 2,
            trees: 100,
            psi: 256,
            spec: AnomalizationSpec::default(),
            methods: Method::ALL.to_vec(),
        }
    }
}

/// Generates the data, trains the forest and runs the protocol once.
pub fn run_synthetic(config: &SynthConfig) -> Result<Vec<GroundTruthResult>> {
    let seed = config.spec.seed;
    let data = gen_clusters(
        config.n,
        config.d,
        config.n_clusters,
        derive_seed(seed, TAG_DATA),
    )?;
    let forest = fit_forest(
        &data,
        config.trees,
        config.psi,
        derive_seed(seed, TAG_FOREST),
    )?;
    run_ground_truth(&data, &forest, &config.spec, &config.methods)
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub run_id: usize,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub results: Vec<GroundTruthResult>,
}

/// Runs the synthetic protocol once per grid value, varying only `axis`.
///
/// Every grid point reuses the base seed. Along the `m_fraction` axis the
/// data and forest are built once and shared.
pub fn sweep(axis: SweepAxis, grid: &[f64], base: &SynthConfig) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if axis == SweepAxis::MFraction {
        let seed = base.spec.seed;
        let data = gen_clusters(base.n, base.d, base.n_clusters, derive_seed(seed, TAG_DATA))?;
        let forest = fit_forest(&data, base.trees, base.psi, derive_seed(seed, TAG_FOREST))?;
        return sweep_m_fraction(&data, &forest, grid, &base.spec, &base.methods);
    }
    grid.iter()
        .enumerate()
        .map(|(run_id, &value)| {
            let count = as_count(axis, value)?;
            let mut config = base.clone();
            match axis {
                SweepAxis::Size => config.n = count,
                SweepAxis::Dims => config.d = count,
                SweepAxis::MFraction => unreachable!(),
            }
            Ok(SweepPoint {
                run_id,
                axis,
                axis_value: value,
                results: run_synthetic(&config)?,
            })
        })
        .collect()
}

/// Protocol on fixed data and forest for each anomalized fraction in `grid`.
pub fn sweep_m_fraction(
    data: &Dataset,
    forest: &IsolationForest,
    grid: &[f64],
    spec: &AnomalizationSpec,
    methods: &[Method],
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(run_id, &m)| {
            let spec = AnomalizationSpec {
                m_fraction: m,
                ..spec.clone()
            };
            Ok(SweepPoint {
                run_id,
                axis: SweepAxis::MFraction,
                axis_value: m,
                results: run_ground_truth(data, forest, &spec, methods)?,
            })
        })
        .collect()
}

fn as_count(axis: SweepAxis, value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::Config(format!(
            "{axis} grid values must be positive integers, got {value}"
        )))
    }
}

/// Long-format table: one row per (grid point, method, pick).
pub fn write_results_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run_id",
        "axis",
        "axis_value",
        "method",
        "pick_index",
        "error",
    ])?;
    for p in points {
        for r in &p.results {
            for (i, e) in r.errors.iter().enumerate() {
                w.write_record([
                    p.run_id.to_string(),
                    p.axis.to_string(),
                    fmt_f64(p.axis_value),
                    r.method.to_string(),
                    i.to_string(),
                    e.map(fmt_f64).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

/// One row per (grid point, method) with mean and random-normalized error.
pub fn write_aggregate_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run_id",
        "axis",
        "axis_value",
        "method",
        "mean_error",
        "normalized_error",
        "n_used",
        "n_excluded",
    ])?;
    for p in points {
        for r in &p.results {
            w.write_record([
                p.run_id.to_string(),
                p.axis.to_string(),
                fmt_f64(p.axis_value),
                r.method.to_string(),
                fmt_f64(r.mean_error),
                fmt_f64(r.normalized_error),
                r.n_used().to_string(),
                r.n_excluded().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<aggregate csv>", e))?;
    Ok(())
}
