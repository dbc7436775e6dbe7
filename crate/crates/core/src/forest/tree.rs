use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A node of an isolation tree.
///
/// Every node records how many training examples reached it; the explanation
/// methods only need those counts and the split of each internal node.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        value: f64,
        size: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        size: usize,
        depth: usize,
    },
}

impl TreeNode {
    pub fn leaf(size: usize, depth: usize) -> Self {
        TreeNode::Leaf { size, depth }
    }

    /// Internal node whose size is the sum of its children.
    pub fn split(feature: usize, value: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Internal {
            feature,
            value,
            size: left.size() + right.size(),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            TreeNode::Internal { size, .. } | TreeNode::Leaf { size, .. } => size,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Deepest leaf depth below this node.
    pub fn max_depth(&self) -> usize {
        match self {
            TreeNode::Leaf { depth, .. } => *depth,
            TreeNode::Internal { left, right, .. } => left.max_depth().max(right.max_depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    fn check(&self, depth: usize, n_features: usize) -> Result<()> {
        match self {
            TreeNode::Leaf {
                size,
                depth: recorded,
            } => {
                if *size == 0 {
                    return Err(Error::Structure(format!("empty leaf at depth {depth}")));
                }
                if *recorded != depth {
                    return Err(Error::Structure(format!(
                        "leaf records depth {recorded} but sits at depth {depth}"
                    )));
                }
                Ok(())
            }
            TreeNode::Internal {
                feature,
                value,
                size,
                left,
                right,
            } => {
                if *feature >= n_features {
                    return Err(Error::Structure(format!(
                        "split feature {feature} out of range for d={n_features}"
                    )));
                }
                if !value.is_finite() {
                    return Err(Error::Structure(format!("non-finite split value {value}")));
                }
                if left.size() == 0 || right.size() == 0 || left.size() + right.size() != *size {
                    return Err(Error::Structure(format!(
                        "node of size {size} has children of sizes {} and {}",
                        left.size(),
                        right.size()
                    )));
                }
                left.check(depth + 1, n_features)?;
                right.check(depth + 1, n_features)
            }
        }
    }
}

/// One edge of an example's root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub feature: usize,
    pub parent_size: usize,
    pub child_size: usize,
}

/// Where an example ends up in a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathLength {
    pub depth: usize,
    pub leaf_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    root: TreeNode,
    n_features: usize,
}

impl IsolationTree {
    /// Wraps a root node after checking the structural invariants: sizes add
    /// up, no child is empty, leaf depths match their position and split
    /// features index into `n_features` attributes.
    pub fn new(root: TreeNode, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Config("a tree needs at least one attribute".into()));
        }
        root.check(0, n_features)?;
        Ok(Self { root, n_features })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Number of training examples this tree was fit on.
    pub fn sample_size(&self) -> usize {
        self.root.size()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Routes `x` to its leaf, calling `visit` for every edge taken.
    ///
    /// `x[feature] < value` goes left, everything else (ties included) goes
    /// right. The caller guarantees `x.len() == n_features`.
    #[inline]
    pub fn route(&self, x: &[f64], mut visit: impl FnMut(Edge)) -> PathLength {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { size, depth } => {
                    return PathLength {
                        depth: *depth,
                        leaf_size: *size,
                    }
                }
                TreeNode::Internal {
                    feature,
                    value,
                    size,
                    left,
                    right,
                } => {
                    let child = if x[*feature] < *value { left } else { right };
                    visit(Edge {
                        feature: *feature,
                        parent_size: *size,
                        child_size: child.size(),
                    });
                    node = child;
                }
            }
        }
    }

    /// Leaf depth and leaf size reached by `x`.
    pub fn path_length(&self, x: &[f64]) -> Result<PathLength> {
        check_query(x, self.n_features)?;
        Ok(self.route(x, |_| {}))
    }
}

pub(crate) fn check_query(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Input(format!(
            "query has {} attributes, model expects {d}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("query contains non-finite value {v}")));
    }
    Ok(())
}

/// `ceil(log2(sample_size))`, the height at which growth stops.
pub fn depth_limit(sample_size: usize) -> usize {
    if sample_size <= 1 {
        0
    } else {
        (usize::BITS - (sample_size - 1).leading_zeros()) as usize
    }
}

/// Grows an isolation tree on every row of `sample`, starting at `depth`.
pub fn fit_tree<R: Rng + ?Sized>(
    sample: &Dataset,
    depth: usize,
    depth_limit: usize,
    rng: &mut R,
) -> TreeNode {
    let mut rows: Vec<usize> = (0..sample.n()).collect();
    grow(sample, &mut rows, depth, depth_limit, rng)
}

/// Grows a tree over the given row indices of `data`, reordering them in place.
pub(crate) fn grow<R: Rng + ?Sized>(
    data: &Dataset,
    rows: &mut [usize],
    depth: usize,
    depth_limit: usize,
    rng: &mut R,
) -> TreeNode {
    let size = rows.len();
    if size <= 1 || depth >= depth_limit {
        return TreeNode::leaf(size, depth);
    }

    let d = data.d();
    let mut lo = data.row(rows[0]).to_vec();
    let mut hi = lo.clone();
    for &r in &rows[1..] {
        for (j, &v) in data.row(r).iter().enumerate() {
            if v < lo[j] {
                lo[j] = v;
            } else if v > hi[j] {
                hi[j] = v;
            }
        }
    }
    let splittable: Vec<usize> = (0..d).filter(|&j| lo[j] < hi[j]).collect();
    if splittable.is_empty() {
        return TreeNode::leaf(size, depth);
    }

    let feature = splittable[rng.random_range(0..splittable.len())];
    let value = open_uniform(lo[feature], hi[feature], rng);

    // partition: [0, mid) goes left
    let mut mid = 0;
    for i in 0..size {
        if data.get(rows[i], feature) < value {
            rows.swap(i, mid);
            mid += 1;
        }
    }
    debug_assert!(mid > 0 && mid < size);

    let (left_rows, right_rows) = rows.split_at_mut(mid);
    let left = grow(data, left_rows, depth + 1, depth_limit, rng);
    let right = grow(data, right_rows, depth + 1, depth_limit, rng);
    TreeNode::Internal {
        feature,
        value,
        size,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Uniform draw from the open interval `(lo, hi)`.
///
/// When `lo` and `hi` are adjacent floats the interval holds no value; `hi`
/// is returned, which still separates the two.
fn open_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    for _ in 0..16 {
        let v = rng.random_range(lo..hi);
        if v > lo {
            return v;
        }
    }
    hi
}
