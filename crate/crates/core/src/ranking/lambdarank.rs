//! LambdaRank gradients for one query group.

use crate::evaluation::ndcg::{discount, gain, ideal_dcg_at_p};

/// Positions (1-based) of each item when sorted by descending score, ties by index.
pub fn score_positions(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut positions = vec![0; scores.len()];
    for (pos0, idx) in order.into_iter().enumerate() {
        positions[idx] = pos0 + 1;
    }
    positions
}

/// Truncated discount: zero past position `p`.
fn discount_at(position: usize, p: usize) -> f64 {
    if position <= p {
        discount(position)
    } else {
        0.0
    }
}

/// |ΔNDCG@p| from swapping every preference pair in the current order.
///
/// Returns `(i, j, weight)` for each pair with `relevance[i] > relevance[j]`.
pub fn delta_ndcg_weights(scores: &[f64], relevance: &[u32], p: usize) -> Vec<(usize, usize, f64)> {
    assert_eq!(scores.len(), relevance.len());
    let idcg = ideal_dcg_at_p(relevance, p);
    if idcg <= 0.0 {
        return Vec::new();
    }
    let positions = score_positions(scores);
    let mut pairs = Vec::new();
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if relevance[i] <= relevance[j] {
                continue;
            }
            let dg = gain(relevance[i]) - gain(relevance[j]);
            let dd = discount_at(positions[i], p) - discount_at(positions[j], p);
            pairs.push((i, j, (dg * dd).abs() / idcg));
        }
    }
    pairs
}

/// Per-item gradients and hessians of the ΔNDCG-weighted pairwise logistic loss.
///
/// For each pair with `rel_i > rel_j`: `rho = 1 / (1 + exp(sigma (s_i - s_j)))`,
/// `g_i -= sigma rho w`, `g_j += sigma rho w`,
/// `h_i, h_j += sigma^2 rho (1 - rho) w`.
pub fn compute_group_gradients(
    scores: &[f64],
    relevance: &[u32],
    p: usize,
    sigma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = scores.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for (i, j, w) in delta_ndcg_weights(scores, relevance, p) {
        let rho = 1.0 / (1.0 + (sigma * (scores[i] - scores[j])).exp());
        let lambda = sigma * rho * w;
        grad[i] -= lambda;
        grad[j] += lambda;
        let h = sigma * sigma * rho * (1.0 - rho) * w;
        hess[i] += h;
        hess[j] += h;
    }
    (grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_candidates_equal_scores() {
        let (g, h) = compute_group_gradients(&[0.0, 0.0], &[1, 0], 5, 1.0);
        let w = 1.0 - 1.0 / 3f64.log2();
        assert!((w - 0.369070).abs() < 1e-6);
        assert!((g[0] + 0.5 * w).abs() < 1e-15);
        assert!((g[1] - 0.5 * w).abs() < 1e-15);
        assert!((g[0] + 0.184535).abs() < 1e-6);
        assert!((h[0] - 0.25 * w).abs() < 1e-15);
        assert_eq!(h[0], h[1]);
    }

    #[test]
    fn equal_relevance_is_noop() {
        let (g, h) = compute_group_gradients(&[0.3, -1.0, 2.0], &[2, 2, 2], 5, 1.0);
        assert!(g.iter().chain(&h).all(|&x| x == 0.0));
    }

    #[test]
    fn positions_break_ties_by_index() {
        assert_eq!(score_positions(&[1.0, 3.0, 1.0, 2.0]), vec![3, 1, 4, 2]);
    }

    #[test]
    fn items_past_p_carry_no_weight() {
        // both items of the (1, 0) pair sit past p = 1
        let w = delta_ndcg_weights(&[3.0, 2.0, 1.0], &[2, 1, 0], 1);
        let tail = w.iter().find(|&&(i, j, _)| i == 1 && j == 2).unwrap();
        assert_eq!(tail.2, 0.0);
    }
}
