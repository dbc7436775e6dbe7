//! Per-attribute explanation vectors for single examples.
//!
//! Three methods share one output type:
//!
//! * [`Method::Ours`] walks each tree along the example's path and credits the
//!   split attribute of every traversed node with `log2(parent/child) - 1`,
//!   where `child` is the node the example lands in. A balanced split earns
//!   nothing; sending the example into a small child earns up to
//!   `log2(psi) - 1`; sending it into the larger side of a lopsided split
//!   costs up to 1.
//! * [`Method::DiffiLocal`] gives every edge of a path the same weight
//!   `1/h - 1/log2(root size)`, `h` being the leaf depth.
//! * [`Method::Random`] draws a uniform vector and scales it onto the simplex.
//!
//! Vectors come back unnormalized; see [`normalize_explanation`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::forest::{check_query, IsolationForest, IsolationTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ours,
    DiffiLocal,
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::DiffiLocal, Method::Random];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::DiffiLocal => "diffi_local",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(Method::Ours),
            "diffi_local" | "diffi" => Ok(Method::DiffiLocal),
            "random" => Ok(Method::Random),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected ours, diffi_local or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationVector {
    pub weights: Vec<f64>,
    pub method: Method,
}

impl ExplanationVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Index of the largest weight (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &w) in self.weights.iter().enumerate() {
            if best.is_none_or(|(_, b)| w > b) {
                best = Some((i, w));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Reward for a split that sends an example from a node of `parent_size`
/// examples into a child of `child_size` examples.
pub fn split_score(parent_size: usize, child_size: usize) -> Result<f64> {
    if child_size == 0 || child_size >= parent_size {
        return Err(Error::Input(format!(
            "split score needs 1 <= child < parent, got parent={parent_size}, child={child_size}"
        )));
    }
    Ok(score_unchecked(parent_size, child_size))
}

#[inline]
fn score_unchecked(parent_size: usize, child_size: usize) -> f64 {
    (parent_size as f64 / child_size as f64).log2() - 1.0
}

fn add_ours(tree: &IsolationTree, x: &[f64], w: &mut [f64]) {
    tree.route(x, |e| {
        w[e.feature] += score_unchecked(e.parent_size, e.child_size)
    });
}

/// Contribution of a single tree to [`explain_ours`].
pub fn ours_tree_contribution(tree: &IsolationTree, x: &[f64]) -> Result<Vec<f64>> {
    check_query(x, tree.n_features())?;
    let mut w = vec![0.0; tree.n_features()];
    add_ours(tree, x, &mut w);
    Ok(w)
}

/// Path-shortening attribution: for every tree, every edge on the path of
/// `x` credits its split attribute with [`split_score`]. Trees are summed in
/// order.
pub fn explain_ours(forest: &IsolationForest, x: &[f64]) -> Result<ExplanationVector> {
    check_query(x, forest.d())?;
    let mut w = vec![0.0; forest.d()];
    for tree in forest.trees() {
        add_ours(tree, x, &mut w);
    }
    Ok(ExplanationVector {
        weights: w,
        method: Method::Ours,
    })
}

/// Local-DIFFI baseline. Trees where `x` lands at the root (single-leaf
/// trees) contribute nothing.
pub fn explain_diffi_local(forest: &IsolationForest, x: &[f64]) -> Result<ExplanationVector> {
    check_query(x, forest.d())?;
    let mut w = vec![0.0; forest.d()];
    let mut path = Vec::with_capacity(16);
    for tree in forest.trees() {
        path.clear();
        let leaf = tree.route(x, |e| path.push(e.feature));
        if leaf.depth == 0 {
            continue;
        }
        // h_max uses the actual root size, which is below psi on small datasets
        let h_max = (tree.sample_size() as f64).log2();
        let weight = 1.0 / leaf.depth as f64 - 1.0 / h_max;
        for &f in &path {
            w[f] += weight;
        }
    }
    Ok(ExplanationVector {
        weights: w,
        method: Method::DiffiLocal,
    })
}

/// `d` i.i.d. uniform draws on [0, 1], scaled to sum to 1.
pub fn explain_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ExplanationVector> {
    if d == 0 {
        return Err(Error::Input("random explanation needs d >= 1".into()));
    }
    loop {
        let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            return Ok(ExplanationVector {
                weights: w.into_iter().map(|v| v / sum).collect(),
                method: Method::Random,
            });
        }
    }
}

/// Dispatches to the method's explainer. `rng` is only consumed by
/// [`Method::Random`].
pub fn explain<R: Rng + ?Sized>(
    method: Method,
    forest: &IsolationForest,
    x: &[f64],
    rng: &mut R,
) -> Result<ExplanationVector> {
    match method {
        Method::Ours => explain_ours(forest, x),
        Method::DiffiLocal => explain_diffi_local(forest, x),
        Method::Random => {
            check_query(x, forest.d())?;
            explain_random(forest.d(), rng)
        }
    }
}

/// Divides by the L1 norm. Non-negative vectors end up summing to 1; signs
/// are kept.
pub fn normalize_explanation(w: &ExplanationVector) -> Result<ExplanationVector> {
    let norm: f64 = w.weights.iter().map(|v| v.abs()).sum();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(ExplanationVector {
        weights: w.weights.iter().map(|v| v / norm).collect(),
        method: w.method,
    })
}
