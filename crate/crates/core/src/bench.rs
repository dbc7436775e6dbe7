//! Per-example explanation latency.
//!
//! The timed workload mirrors one ground-truth pick: explain the original
//! example, then its anomalized copy. Training is never inside the timer.

use std::collections::BTreeSet;
use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{explain, Method};
use crate::forest::IsolationForest;
use crate::io::fmt_f64;
use crate::rng::{derive_seed, stream_rng};
use crate::synthbench::{anomalize, AnomalizationSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub method: Method,
    pub dataset_id: String,
    pub m_fraction: f64,
    pub n_trees: usize,
    /// Median over repeats of wall-clock seconds per explanation vector.
    pub seconds_per_example: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub repeats: usize,
    /// Picks per repeat; each pick costs two explanations.
    pub n_examples: usize,
    pub multiplier: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repeats: 7,
            n_examples: 100,
            multiplier: 3.0,
            seed: 0,
        }
    }
}

/// Times every (method, m) combination on the same forest. Records come out
/// ordered by m, then method.
pub fn bench_explain(
    forest: &IsolationForest,
    data: &Dataset,
    dataset_id: &str,
    methods: &[Method],
    m_grid: &[f64],
    config: &BenchConfig,
) -> Result<Vec<TimingRecord>> {
    if config.repeats < 3 {
        return Err(Error::Config(format!(
            "timing needs at least 3 repeats, got {}",
            config.repeats
        )));
    }
    if config.n_examples == 0 || methods.is_empty() || m_grid.is_empty() {
        return Err(Error::Config("empty benchmark workload".into()));
    }
    if forest.d() != data.d() {
        return Err(Error::Input(format!(
            "forest expects {} attributes, data has {}",
            forest.d(),
            data.d()
        )));
    }

    let mut workloads = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::Config(format!(
                "m_fraction must lie in (0, 1], got {m}"
            )));
        }
        let spec = AnomalizationSpec {
            m_fraction: m,
            ..Default::default()
        };
        let k = spec.k(data.d());
        let mut rng = stream_rng(derive_seed(config.seed, 21), 0);
        let mut queries = Vec::with_capacity(2 * config.n_examples);
        for _ in 0..config.n_examples {
            let example = rng.random_range(0..data.n());
            let changed: BTreeSet<usize> =
                index::sample(&mut rng, data.d(), k).into_iter().collect();
            queries.push(data.row(example).to_vec());
            queries.push(anomalize(data, example, &changed, config.multiplier)?);
        }
        for &method in methods {
            workloads.push((method, m, queries.clone()));
        }
    }

    let mut rng = stream_rng(derive_seed(config.seed, 22), 0);
    let mut run = |method: Method, queries: &[Vec<f64>]| -> Result<f64> {
        let start = Instant::now();
        for q in queries {
            black_box(explain(method, forest, black_box(q), &mut rng)?);
        }
        Ok(start.elapsed().as_secs_f64())
    };
    for (method, _, queries) in &workloads {
        run(*method, queries)?; // warm-up
    }
    // round-robin so slow drift (frequency scaling, other load) hits every
    // combination alike
    let mut times = vec![Vec::with_capacity(config.repeats); workloads.len()];
    for _ in 0..config.repeats {
        for (slot, (method, _, queries)) in times.iter_mut().zip(&workloads) {
            slot.push(run(*method, queries)?);
        }
    }

    Ok(workloads
        .iter()
        .zip(times)
        .map(|((method, m, queries), mut t)| {
            t.sort_by(f64::total_cmp);
            let median = t[t.len() / 2];
            TimingRecord {
                method: *method,
                dataset_id: dataset_id.to_string(),
                m_fraction: *m,
                n_trees: forest.n_trees(),
                seconds_per_example: (median / queries.len() as f64).max(f64::MIN_POSITIVE),
            }
        })
        .collect())
}

pub fn write_timing_csv<W: Write>(records: &[TimingRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "dataset_id",
        "m_fraction",
        "n_trees",
        "seconds_per_example",
    ])?;
    for r in records {
        w.write_record([
            r.method.to_string(),
            r.dataset_id.clone(),
            fmt_f64(r.m_fraction),
            r.n_trees.to_string(),
            fmt_f64(r.seconds_per_example),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<timing csv>", e))?;
    Ok(())
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}
