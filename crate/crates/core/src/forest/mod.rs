//! Isolation Forest construction and scoring.

mod tree;

use rand::seq::index;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub(crate) use tree::check_query;
pub use tree::{depth_limit, fit_tree, Edge, IsolationTree, PathLength, TreeNode};

/// An ensemble of isolation trees together with the parameters it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationForest {
    trees: Vec<IsolationTree>,
    psi: usize,
    d: usize,
    seed: u64,
}

impl IsolationForest {
    /// Assembles a forest from existing trees (hand-built or deserialized).
    pub fn from_trees(trees: Vec<IsolationTree>, psi: usize, seed: u64) -> Result<Self> {
        let first = trees
            .first()
            .ok_or_else(|| Error::Config("a forest needs at least one tree".into()))?;
        let d = first.n_features();
        for (i, t) in trees.iter().enumerate() {
            if t.n_features() != d {
                return Err(Error::Structure(format!(
                    "tree {i} has {} attributes, tree 0 has {d}",
                    t.n_features()
                )));
            }
            if t.sample_size() > psi {
                return Err(Error::Structure(format!(
                    "tree {i} was fit on {} examples, more than psi={psi}",
                    t.sample_size()
                )));
            }
        }
        Ok(Self {
            trees,
            psi,
            d,
            seed,
        })
    }

    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn psi(&self) -> usize {
        self.psi
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-tree path lengths of `x`, in tree order.
    pub fn path_lengths(&self, x: &[f64]) -> Result<Vec<PathLength>> {
        check_query(x, self.d)?;
        Ok(self.trees.iter().map(|t| t.route(x, |_| {})).collect())
    }

    /// Forest-average of leaf depth plus `nu(leaf size)`.
    ///
    /// Larger means *less* anomalous: anomalies are isolated on short paths.
    pub fn anomaly_score(&self, x: &[f64]) -> Result<f64> {
        check_query(x, self.d)?;
        let total: f64 = self
            .trees
            .iter()
            .map(|t| {
                let p = t.route(x, |_| {});
                p.depth as f64 + nu_unchecked(p.leaf_size)
            })
            .sum();
        Ok(total / self.trees.len() as f64)
    }

    /// Classic normalized score `2^(-a(x) / c(sample size))` in (0, 1];
    /// values near 1 are anomalies.
    pub fn normalized_score(&self, x: &[f64]) -> Result<f64> {
        let a = self.anomaly_score(x)?;
        let c = average_path_length(self.trees[0].sample_size());
        if c == 0.0 {
            return Ok(1.0);
        }
        Ok((-a / c).exp2())
    }
}

/// Trains `t` trees, each on its own uniform subsample (without replacement)
/// of `min(psi, n)` rows.
///
/// Tree `i` draws from stream `i` of `seed`, so the result is independent of
/// thread scheduling.
pub fn fit_forest(data: &Dataset, t: usize, psi: usize, seed: u64) -> Result<IsolationForest> {
    fit_with(data, t, psi, seed, None)
}

/// Like [`fit_forest`], but row `include` is placed in every tree's
/// subsample (the rest of the subsample is drawn from the other rows).
pub fn fit_forest_including(
    data: &Dataset,
    t: usize,
    psi: usize,
    seed: u64,
    include: usize,
) -> Result<IsolationForest> {
    if include >= data.n() {
        return Err(Error::Input(format!(
            "row {include} out of range for n={}",
            data.n()
        )));
    }
    fit_with(data, t, psi, seed, Some(include))
}

fn fit_with(
    data: &Dataset,
    t: usize,
    psi: usize,
    seed: u64,
    include: Option<usize>,
) -> Result<IsolationForest> {
    if t == 0 {
        return Err(Error::Config("number of trees must be at least 1".into()));
    }
    if psi < 2 {
        return Err(Error::Config(format!(
            "subsample size must be at least 2, got {psi}"
        )));
    }
    let sample_size = psi.min(data.n());
    let limit = depth_limit(sample_size);
    let trees = (0..t)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut rows = match include {
                None => index::sample(&mut rng, data.n(), sample_size).into_vec(),
                Some(keep) => {
                    let mut rows: Vec<usize> =
                        index::sample(&mut rng, data.n() - 1, sample_size - 1)
                            .into_iter()
                            .map(|r| if r >= keep { r + 1 } else { r })
                            .collect();
                    rows.push(keep);
                    rows
                }
            };
            let root = tree::grow(data, &mut rows, 0, limit, &mut rng);
            IsolationTree::new(root, data.d())
        })
        .collect::<Result<Vec<_>>>()?;
    IsolationForest::from_trees(trees, psi, seed)
}

/// `2 H(i) - 2`, the expected extra depth for a leaf still holding `i` examples.
pub fn nu(i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::Input("nu is undefined for 0".into()));
    }
    Ok(nu_unchecked(i))
}

pub(crate) fn nu_unchecked(i: usize) -> f64 {
    2.0 * harmonic(i) - 2.0
}

fn harmonic(i: usize) -> f64 {
    // summed smallest-first for accuracy
    (1..=i).rev().map(|j| 1.0 / j as f64).sum()
}

/// Average unsuccessful-search path length in a BST of `n` keys; the usual
/// normalizer for isolation scores.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * harmonic(n - 1) - 2.0 * m / n as f64
        }
    }
}
