//! Random-forest classifier for binary targets, used by the MissForest imputer.
//!
//! Trees are grown to purity on bootstrap samples with Gini impurity and a
//! random feature subset per split. Per-tree RNG seeds are supplied by the
//! caller so results never depend on thread scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
enum Node {
    Leaf { ones: usize, total: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct ClassificationTree {
    nodes: Vec<Node>,
}

impl ClassificationTree {
    /// Predicted class for one row; ties between classes go to 1.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { ones, total } => return u8::from(2 * ones >= *total),
                Node::Split { feature, threshold, left, right } => {
                    idx = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

fn gini(ones: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    mtry: usize,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let ones = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let total = rows.len();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { ones, total });
        if ones == 0 || ones == total || total < 2 {
            return id;
        }

        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(rng);

        // Sample `mtry` features; if none of them separates the node, keep
        // drawing from the rest until one does.
        let mut best: Option<(f64, usize, f64)> = None;
        for (k, &feature) in order.iter().enumerate() {
            if k >= self.mtry && best.is_some() {
                break;
            }
            if let Some((score, threshold)) = self.best_threshold(&rows, feature, ones) {
                let better = match best {
                    None => true,
                    Some((s, f, _)) => score < s || (score == s && feature < f),
                };
                if better {
                    best = Some((score, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][feature] < threshold);
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Lowest weighted child impurity over thresholds of one feature.
    fn best_threshold(&self, rows: &[usize], feature: usize, ones: usize) -> Option<(f64, f64)> {
        let mut sorted: Vec<(f64, u8)> = rows.iter().map(|&r| (self.x[r][feature], self.y[r])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = sorted.len();
        let mut left_ones = 0;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..total - 1 {
            left_ones += sorted[i].1 as usize;
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = total - n_left;
            let score = n_left as f64 * gini(left_ones, n_left)
                + n_right as f64 * gini(ones - left_ones, n_right);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, midpoint(sorted[i].0, sorted[i + 1].0)));
            }
        }
        best
    }
}

/// Midpoint of `lo < hi` such that `lo < t <= hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t <= lo {
        hi
    } else {
        t
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<ClassificationTree>,
}

impl RandomForest {
    /// Fits one tree per seed; `x` rows must all have the same width.
    pub fn fit(x: &[Vec<f64>], y: &[u8], tree_seeds: &[u64]) -> RandomForest {
        assert_eq!(x.len(), y.len());
        assert!(!x.is_empty(), "forest needs at least one row");
        let n_features = x[0].len();
        let mtry = mtry_for(n_features);
        let trees = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = x.len();
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut grower = Grower { x, y, mtry, nodes: Vec::new() };
                if n_features == 0 {
                    let ones = sample.iter().filter(|&&r| y[r] == 1).count();
                    grower.nodes.push(Node::Leaf { ones, total: sample.len() });
                } else {
                    grower.grow(sample, &mut rng);
                }
                ClassificationTree { nodes: grower.nodes }
            })
            .collect();
        RandomForest { trees }
    }

    /// Majority vote; an even split goes to 1.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let votes: usize = self.trees.iter().map(|t| t.predict(row) as usize).sum();
        u8::from(2 * votes >= self.trees.len())
    }

    pub fn trees(&self) -> &[ClassificationTree] {
        &self.trees
    }
}

/// Features tried per split: ceil(sqrt(d)), at least 1.
pub fn mtry_for(n_predictors: usize) -> usize {
    ((n_predictors as f64).sqrt().ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mtry_values() {
        assert_eq!(mtry_for(1), 1);
        assert_eq!(mtry_for(2), 2);
        assert_eq!(mtry_for(39), 7);
        assert_eq!(mtry_for(112), 11);
    }

    #[test]
    fn learns_copied_feature() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 2) as f64, ((i / 3) % 2) as f64]).collect();
        let y: Vec<u8> = x.iter().map(|r| r[0] as u8).collect();
        let seeds: Vec<u64> = (0..25).collect();
        let forest = RandomForest::fit(&x, &y, &seeds);
        assert_eq!(forest.predict(&[1.0, 0.0]), 1);
        assert_eq!(forest.predict(&[0.0, 1.0]), 0);
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = vec![vec![0.0], vec![1.0]];
        let forest = RandomForest::fit(&x, &[1, 1], &[7]);
        assert_eq!(forest.trees()[0].n_nodes(), 1);
        assert_eq!(forest.predict(&[0.0]), 1);
    }

    #[test]
    fn midpoint_stays_above_low() {
        assert_eq!(midpoint(0.0, 1.0), 0.5);
        let lo = 1.0_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo < t && t <= hi);
    }

    #[test]
    fn deterministic_for_seeds() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 3) as f64, (i % 5) as f64, (i % 2) as f64]).collect();
        let y: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0 || i % 5 == 1)).collect();
        let seeds: Vec<u64> = (100..140).collect();
        let a = RandomForest::fit(&x, &y, &seeds);
        let b = RandomForest::fit(&x, &y, &seeds);
        for row in &x {
            assert_eq!(a.predict(row), b.predict(row));
        }
    }
}
