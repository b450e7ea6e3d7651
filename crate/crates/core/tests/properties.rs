use proptest::prelude::*;

use rankforge::corpus::{cap_corpus, parse_conllu, token_count, vocabulary, TokenizedCorpus};
use rankforge::dataset_features::{ttr, ttr_distance};
use rankforge::evaluation::divergence::rank_divergence;
use rankforge::evaluation::ndcg::ndcg_at_p;
use rankforge::performance::PerformanceRecord;
use rankforge::ranking::dataset::{RankingDataset, RankingGroup};
use rankforge::ranking::features::PairFeatureVector;
use rankforge::ranking::gbdt::{rank_by_score, train, GbdtModel, TrainParams};
use rankforge::ranking::lambdarank::{compute_group_gradients, delta_ndcg_weights};
use rankforge::ranking::relevance::{Candidate, GoldRankingGroup, RelevanceConvention};
use rankforge::ranking::tree::{fit_regression_tree, TreeNode, TreeParams};
use rankforge::typology::{and_vector, crop_matrix, impute_knn, impute_missforest, MissForestParams, TypologyMatrix, TypologyVector};

fn sentences() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[a-cA-C]{1,3}", 1..6), 1..8)
}

fn corpus(s: Vec<Vec<String>>) -> TokenizedCorpus {
    TokenizedCorpus::new("xx", s, "").unwrap()
}

fn binary_matrix(max_lang: usize, max_feat: usize) -> impl Strategy<Value = TypologyMatrix> {
    (2..max_lang, 1..max_feat).prop_flat_map(|(nl, nf)| {
        prop::collection::vec(prop_oneof![Just(None), Just(Some(0.0)), Just(Some(1.0))], nl * nf).prop_map(
            move |cells| {
                TypologyMatrix::new(
                    (0..nf).map(|f| format!("F{f}")).collect(),
                    (0..nl).map(|l| format!("L{l}")).collect(),
                    cells,
                )
                .unwrap()
            },
        )
    })
}

fn gold(perf: &[f64], p: usize) -> GoldRankingGroup {
    let cands = perf.iter().enumerate().map(|(i, &v)| Candidate::new(format!("s{i}"), v)).collect();
    GoldRankingGroup::new("t", cands, p, RelevanceConvention::BestIsP).unwrap()
}

/// Small random dataset: `groups` of up to 6 candidates and 3 features.
fn dataset() -> impl Strategy<Value = RankingDataset> {
    prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 3..7), 1..4).prop_map(
        |groups| {
            let groups = groups
                .into_iter()
                .enumerate()
                .map(|(t, rows)| {
                    let perf: Vec<f64> = rows.iter().map(|r| r[3]).collect();
                    let cands = perf.iter().enumerate().map(|(i, &v)| Candidate::new(format!("s{i}"), v)).collect();
                    RankingGroup {
                        gold: GoldRankingGroup::new(format!("t{t}"), cands, 3, RelevanceConvention::BestIsP).unwrap(),
                        rows: rows.into_iter().map(|r| r[..3].to_vec()).collect(),
                    }
                })
                .collect();
            RankingDataset::new(vec!["a".into(), "b".into(), "c".into()], groups).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn cap_is_prefix(s in sentences(), m in 1usize..10) {
        let c = corpus(s);
        let capped = cap_corpus(&c, m);
        prop_assert!(c.sentences().starts_with(capped.sentences()));
        prop_assert_eq!(capped.len(), m.min(c.len()));
    }

    #[test]
    fn vocabulary_bounded_by_tokens(s in sentences(), fold in any::<bool>()) {
        let c = corpus(s);
        prop_assert!(vocabulary(&c, fold).len() <= token_count(&c));
        let t = ttr(&c);
        prop_assert!(t > 0.0 && t <= 1.0);
    }

    #[test]
    fn conllu_round_trip(s in sentences()) {
        let c = corpus(s);
        let back = parse_conllu(c.to_conllu().as_bytes(), "xx").unwrap();
        prop_assert_eq!(back.sentences(), c.sentences());
    }

    #[test]
    fn ttr_distance_is_a_distance(x in 0.01f64..=1.0, y in 0.01f64..=1.0) {
        prop_assert_eq!(ttr_distance(x, y), ttr_distance(y, x));
        prop_assert!(ttr_distance(x, y) >= 0.0);
        prop_assert_eq!(ttr_distance(x, y) == 0.0, x == y);
    }

    #[test]
    fn and_vector_laws(bits in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
        let a = TypologyVector::new("a", bits.iter().map(|b| b.0 as u8 as f64).collect());
        let b = TypologyVector::new("b", bits.iter().map(|b| b.1 as u8 as f64).collect());
        let ab = and_vector(&a, &b).unwrap();
        prop_assert_eq!(&ab.values, &and_vector(&b, &a).unwrap().values);
        prop_assert_eq!(&and_vector(&a, &a).unwrap().values, &a.values);
        for i in 0..ab.values.len() {
            prop_assert!(ab.values[i] <= a.values[i] && ab.values[i] <= b.values[i]);
        }
    }

    #[test]
    fn crop_respects_thresholds(m in binary_matrix(10, 10), ft in 0.0f64..0.6, lt in 0.0f64..0.6) {
        if let Ok((cropped, report)) = crop_matrix(&m, ft, lt) {
            let n_lang = m.n_languages() as f64;
            for (f, id) in m.feature_ids().iter().enumerate() {
                let frac = m.feature_missing_count(f) as f64 / n_lang;
                prop_assert_eq!(cropped.feature_ids().contains(id), frac <= ft);
            }
            for l in 0..cropped.n_languages() {
                let frac = cropped.language_missing_count(l) as f64 / cropped.n_features() as f64;
                prop_assert!(frac <= lt);
            }
            prop_assert_eq!(cropped.n_languages() + report.dropped_languages.len(), m.n_languages());
        }
    }

    #[test]
    fn imputation_keeps_observed_cells(m in binary_matrix(8, 6), k in 1usize..4) {
        let params = MissForestParams { trees_per_forest: 5, max_iters: 3, ..Default::default() };
        let k = k.min(m.n_languages() - 1);
        for (out, _) in [impute_missforest(&m, &params).unwrap(), impute_knn(&m, k).unwrap()] {
            prop_assert_eq!(out.missing_count(), 0);
            for l in 0..m.n_languages() {
                for f in 0..m.n_features() {
                    let v = out.get(l, f).unwrap();
                    prop_assert!(v == 0.0 || v == 1.0);
                    if let Some(o) = m.get(l, f) {
                        prop_assert_eq!(v, o);
                    }
                }
            }
        }
    }

    #[test]
    fn gradients_sum_to_zero_and_match_differences(
        scores in prop::collection::vec(-4.0f64..4.0, 2..9),
        rel_seed in prop::collection::vec(0u32..6, 9),
        p in 1usize..9,
        sigma in 0.25f64..2.0,
    ) {
        let n = scores.len();
        let rel = &rel_seed[..n];
        let (g, h) = compute_group_gradients(&scores, rel, p, sigma);
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-12);
        prop_assert!(h.iter().all(|&x| x >= 0.0));
        let w = delta_ndcg_weights(&scores, rel, p);
        let eps = 1e-6;
        for k in 0..n {
            let loss = |s: &[f64]| -> f64 {
                w.iter()
                    .filter(|&&(i, j, _)| i == k || j == k)
                    .map(|&(i, j, wij)| wij * (-sigma * (s[i] - s[j])).exp().ln_1p())
                    .sum()
            };
            let mut up = scores.clone();
            let mut down = scores.clone();
            up[k] += eps;
            down[k] -= eps;
            let fd = (loss(&up) - loss(&down)) / (2.0 * eps);
            let scale = fd.abs().max(g[k].abs());
            prop_assert!((fd - g[k]).abs() <= 1e-5 * scale + 1e-10, "k={} fd={} g={}", k, fd, g[k]);
        }
    }

    #[test]
    fn leaf_values_match_brute_force(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..30),
        seed in prop::collection::vec((-1.0f64..1.0, 0.01f64..1.0), 30),
        lambda in 0.0f64..2.0,
        max_leaves in 1usize..8,
    ) {
        let n = rows.len();
        let grad: Vec<f64> = seed[..n].iter().map(|s| s.0).collect();
        let hess: Vec<f64> = seed[..n].iter().map(|s| s.1).collect();
        let params = TreeParams { max_leaves, lambda_reg: lambda, ..Default::default() };
        let tree = fit_regression_tree(&rows, &grad, &hess, &params);
        prop_assert!(tree.n_leaves() <= max_leaves);
        // group rows by the leaf they land in, then recompute -G/(H+λ)
        let leaf_of = |row: &[f64]| {
            let mut i = 0;
            loop {
                match tree.nodes[i] {
                    TreeNode::Leaf { .. } => return i,
                    TreeNode::Split { feature, threshold, left, right, .. } => {
                        i = if row[feature] < threshold { left } else { right };
                    }
                }
            }
        };
        for (id, node) in tree.nodes.iter().enumerate() {
            if let TreeNode::Leaf { value } = node {
                let members: Vec<usize> = (0..n).filter(|&r| leaf_of(&rows[r]) == id).collect();
                prop_assert!(!members.is_empty());
                let g: f64 = members.iter().map(|&r| grad[r]).sum();
                let h: f64 = members.iter().map(|&r| hess[r]).sum();
                prop_assert!((value - (-g / (h + lambda))).abs() <= 1e-12 * (1.0 + value.abs()));
            }
        }
    }

    #[test]
    fn training_invariants(ds in dataset(), rounds in 0usize..15) {
        let params = TrainParams { num_rounds: rounds, ..Default::default() };
        let Ok(model) = train(&ds, &params, None) else {
            prop_assert!(ds.groups.iter().all(|g| !g.gold.is_trainable()));
            return Ok(());
        };
        let per_split: f64 = model.trees.iter().map(|t| t.total_gain()).sum();
        let table: f64 = model.gain_table.iter().sum();
        prop_assert!((table - per_split).abs() <= 1e-12 * (1.0 + per_split.abs()));

        let back = GbdtModel::from_json(&model.to_json().unwrap()).unwrap();
        for g in &ds.groups {
            for r in &g.rows {
                prop_assert_eq!(model.predict_row(r).to_bits(), back.predict_row(r).to_bits());
            }
        }

        // pointwise scoring: permuting rows permutes scores
        let g = &ds.groups[0];
        let rows: Vec<PairFeatureVector> = g.gold.candidates.iter().zip(&g.rows).map(|(c, r)| PairFeatureVector {
            target_code: g.gold.target_code.clone(),
            source_code: c.source_code.clone(),
            feature_names: ds.feature_names.clone(),
            values: r.clone(),
        }).collect();
        let scores = model.predict(&rows).unwrap();
        let mut reversed = rows.clone();
        reversed.reverse();
        let mut rs = model.predict(&reversed).unwrap();
        rs.reverse();
        prop_assert_eq!(&scores, &rs);
    }

    #[test]
    fn ranking_ignores_score_shift(scores in prop::collection::vec(-5.0f64..5.0, 1..10), shift in -3.0f64..3.0) {
        let codes: Vec<String> = (0..scores.len()).map(|i| format!("c{i}")).collect();
        // dyadic shift keeps sums exact so no new ties appear
        let shift = (shift * 8.0).round() / 8.0;
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let a = rank_by_score(codes.iter().map(|s| s.as_str()), &scores);
        let b = rank_by_score(codes.iter().map(|s| s.as_str()), &shifted);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ndcg_bounds_and_tail_invariance(perf in prop::collection::vec(0.0f64..1.0, 2..9), order_seed in any::<u64>(), p in 1usize..6) {
        let g = gold(&perf, p);
        let mut order = g.gold_sources();
        let n = order.len();
        let mut x = order_seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (x >> 33) as usize % (i + 1));
        }
        let v = ndcg_at_p(&order, &g, p).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        let top_matches = order[..p.min(n)] == g.gold_sources()[..p.min(n)];
        prop_assert_eq!(v == 1.0, top_matches);
        if n > p {
            let mut tail = order.clone();
            tail[p..].reverse();
            prop_assert_eq!(ndcg_at_p(&tail, &g, p).unwrap(), v);
        }
    }

    #[test]
    fn divergence_symmetric(scores in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 6)) {
        let pairs = [("a", "b"), ("a", "c"), ("b", "a"), ("b", "c"), ("c", "a"), ("c", "b")];
        let a: Vec<_> = pairs.iter().zip(&scores).map(|(&(s, t), x)| PerformanceRecord::new(s, t, x.0)).collect();
        let b: Vec<_> = pairs.iter().zip(&scores).map(|(&(s, t), x)| PerformanceRecord::new(s, t, x.1)).collect();
        let ab = rank_divergence(&a, &b, false).unwrap();
        let ba = rank_divergence(&b, &a, false).unwrap();
        prop_assert_eq!(ab.len(), ba.len());
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert_eq!(x.pair_code(), y.pair_code());
            prop_assert_eq!(x.abs_diff, y.abs_diff);
            prop_assert_eq!(x.diff, -y.diff);
        }
    }
}
