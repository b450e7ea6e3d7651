//! Newton regression trees grown leaf-wise (best-first).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::typology::forest::midpoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub lambda_reg: f64,
    /// Splits must gain strictly more than this.
    pub min_split_gain: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_leaves: 31, min_samples_leaf: 1, lambda_reg: 1.0, min_split_gain: 1e-12 }
    }
}

/// Gradient and hessian sums over a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradStats {
    pub grad: f64,
    pub hess: f64,
    pub count: usize,
}

impl GradStats {
    pub fn of(rows: &[usize], grad: &[f64], hess: &[f64]) -> Self {
        rows.iter().fold(GradStats::default(), |mut s, &r| {
            s.grad += grad[r];
            s.hess += hess[r];
            s.count += 1;
            s
        })
    }

    /// `G^2 / (H + lambda)`, zero when the denominator is not positive.
    pub fn objective(&self, lambda: f64) -> f64 {
        let denom = self.hess + lambda;
        if denom > 0.0 {
            self.grad * self.grad / denom
        } else {
            0.0
        }
    }

    /// Newton leaf value `-G / (H + lambda)`.
    pub fn leaf_value(&self, lambda: f64) -> f64 {
        let denom = self.hess + lambda;
        if denom > 0.0 {
            -self.grad / denom
        } else {
            0.0
        }
    }
}

/// `G_L^2/(H_L+λ) + G_R^2/(H_R+λ) - G_P^2/(H_P+λ)`.
///
/// With unit hessians and `λ = 0` this is the drop in squared error of the
/// gradients around their node means.
pub fn split_gain(parent: &GradStats, left: &GradStats, right: &GradStats, lambda: f64) -> f64 {
    left.objective(lambda) + right.objective(lambda) - parent.objective(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree with nodes in preorder (root at index 0).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    idx = if row[feature] < threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            TreeNode::Split { feature, threshold, gain, .. } => Some((feature, threshold, gain)),
            TreeNode::Leaf { .. } => None,
        })
    }

    pub fn total_gain(&self) -> f64 {
        self.splits().map(|(_, _, g)| g).sum()
    }

    /// Adds each split's gain to its feature's slot.
    pub fn accumulate_gain(&self, gains: &mut [f64]) {
        for (feature, _, gain) in self.splits() {
            gains[feature] += gain;
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.splits().map(|(f, _, _)| f).max()
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

enum BuildNode {
    Open { rows: Vec<usize>, stats: GradStats, best: Option<SplitCandidate> },
    Split { candidate: SplitCandidate, left: usize, right: usize },
    Leaf { value: f64 },
}

struct Builder<'a> {
    columns: Vec<Vec<f64>>,
    grad: &'a [f64],
    hess: &'a [f64],
    params: TreeParams,
}

impl Builder<'_> {
    fn best_split(&self, rows: &[usize], parent: &GradStats) -> Option<SplitCandidate> {
        let per_feature: Vec<Option<SplitCandidate>> = (0..self.columns.len())
            .into_par_iter()
            .map(|f| self.best_split_for_feature(f, rows, parent))
            .collect();
        // ordered reduction: highest gain, ties to the lowest feature index
        per_feature.into_iter().flatten().fold(None, |best: Option<SplitCandidate>, c| match best {
            Some(b) if b.gain >= c.gain => Some(b),
            _ => Some(c),
        })
    }

    fn best_split_for_feature(&self, feature: usize, rows: &[usize], parent: &GradStats) -> Option<SplitCandidate> {
        let column = &self.columns[feature];
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
        let min_leaf = self.params.min_samples_leaf.max(1);
        let lambda = self.params.lambda_reg;

        let mut left = GradStats::default();
        let mut best: Option<SplitCandidate> = None;
        for k in 0..sorted.len().saturating_sub(1) {
            let r = sorted[k];
            left.grad += self.grad[r];
            left.hess += self.hess[r];
            left.count += 1;
            let (lo, hi) = (column[r], column[sorted[k + 1]]);
            if lo == hi || left.count < min_leaf || sorted.len() - left.count < min_leaf {
                continue;
            }
            let right = GradStats {
                grad: parent.grad - left.grad,
                hess: parent.hess - left.hess,
                count: parent.count - left.count,
            };
            let gain = split_gain(parent, &left, &right, lambda);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate { feature, threshold: midpoint(lo, hi), gain });
            }
        }
        best
    }

    fn open(&self, rows: Vec<usize>) -> BuildNode {
        let stats = GradStats::of(&rows, self.grad, self.hess);
        let best = self.best_split(&rows, &stats);
        BuildNode::Open { rows, stats, best }
    }
}

/// Fits one tree to gradients and hessians by leaf-wise best-first growth.
///
/// `rows` is row-major; every row has the same width.
pub fn fit_regression_tree(rows: &[Vec<f64>], grad: &[f64], hess: &[f64], params: &TreeParams) -> RegressionTree {
    assert!(!rows.is_empty(), "tree needs at least one sample");
    assert_eq!(rows.len(), grad.len());
    assert_eq!(rows.len(), hess.len());
    let n_features = rows[0].len();
    let columns: Vec<Vec<f64>> = (0..n_features).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
    let builder = Builder { columns, grad, hess, params: *params };

    let mut arena = vec![builder.open((0..rows.len()).collect())];
    let mut n_leaves = 1;
    while n_leaves < params.max_leaves.max(1) {
        // open leaf with the best admissible split, ties to the oldest
        let mut pick: Option<(usize, f64)> = None;
        for (id, node) in arena.iter().enumerate() {
            if let BuildNode::Open { best: Some(c), .. } = node {
                if c.gain > params.min_split_gain && pick.is_none_or(|(_, g)| c.gain > g) {
                    pick = Some((id, c.gain));
                }
            }
        }
        let Some((id, _)) = pick else { break };

        let BuildNode::Open { rows: node_rows, best: Some(candidate), .. } =
            std::mem::replace(&mut arena[id], BuildNode::Leaf { value: 0.0 })
        else {
            unreachable!("picked node is open with a split");
        };
        let column = &builder.columns[candidate.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            node_rows.into_iter().partition(|&r| column[r] < candidate.threshold);
        let left = arena.len();
        arena.push(builder.open(left_rows));
        let right = arena.len();
        arena.push(builder.open(right_rows));
        arena[id] = BuildNode::Split { candidate, left, right };
        n_leaves += 1;
    }

    for node in arena.iter_mut() {
        if let BuildNode::Open { stats, .. } = node {
            *node = BuildNode::Leaf { value: stats.leaf_value(params.lambda_reg) };
        }
    }

    let mut nodes = Vec::with_capacity(arena.len());
    emit_preorder(&arena, 0, &mut nodes);
    RegressionTree { nodes }
}

fn emit_preorder(arena: &[BuildNode], id: usize, out: &mut Vec<TreeNode>) -> usize {
    let slot = out.len();
    match &arena[id] {
        BuildNode::Leaf { value } => out.push(TreeNode::Leaf { value: *value }),
        BuildNode::Split { candidate, left, right } => {
            out.push(TreeNode::Leaf { value: 0.0 });
            let l = emit_preorder(arena, *left, out);
            let r = emit_preorder(arena, *right, out);
            out[slot] = TreeNode::Split {
                feature: candidate.feature,
                threshold: candidate.threshold,
                gain: candidate.gain,
                left: l,
                right: r,
            };
        }
        BuildNode::Open { .. } => unreachable!("open nodes are closed before emission"),
    }
    slot
}
