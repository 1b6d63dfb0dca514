use fairtune::metrics::auc;
use fairtune::PredictionBundle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mann-Whitney over all positive/negative pairs, ties worth one half.
fn pairwise_auc(labels: &[bool], scores: &[f64]) -> Option<f64> {
    let mut doubled = 0u64;
    let mut pairs = 0u64;
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1;
                doubled += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (pairs > 0).then(|| doubled as f64 / (2 * pairs) as f64)
}

fn bundle(labels: Vec<bool>, scores: Vec<f64>) -> PredictionBundle {
    let n = labels.len();
    PredictionBundle::new(labels, vec![false; n], scores, vec![false; n]).unwrap()
}

#[test]
fn seeded_corpus_matches_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 5000 {
        let n = rng.random_range(2..=12);
        // few distinct score levels so ties are common
        let levels = rng.random_range(1..=n);
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let Some(expected) = pairwise_auc(&labels, &scores) else { continue };
        assert_eq!(auc(&bundle(labels, scores)).unwrap(), expected);
        checked += 1;
    }
}

#[test]
fn single_class_is_undefined() {
    assert!(auc(&bundle(vec![true, true], vec![0.1, 0.2])).is_err());
}

#[test]
fn all_tied_is_half() {
    assert_eq!(auc(&bundle(vec![true, false, true, false], vec![0.3; 4])).unwrap(), 0.5);
}

proptest! {
    #[test]
    fn rank_auc_equals_pairwise(
        rows in prop::collection::vec((any::<bool>(), -3i32..=3), 2..=12)
    ) {
        let labels: Vec<bool> = rows.iter().map(|r| r.0).collect();
        let scores: Vec<f64> = rows.iter().map(|r| r.1 as f64 * 0.5).collect();
        if let Some(expected) = pairwise_auc(&labels, &scores) {
            prop_assert_eq!(auc(&bundle(labels, scores)).unwrap(), expected);
        }
    }

    #[test]
    fn auc_ignores_monotone_rescaling(
        rows in prop::collection::vec((any::<bool>(), -100.0f64..100.0), 2..=40)
    ) {
        let labels: Vec<bool> = rows.iter().map(|r| r.0).collect();
        let scores: Vec<f64> = rows.iter().map(|r| r.1).collect();
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let squashed: Vec<f64> = scores.iter().map(|s| (s / 50.0).atan()).collect();
        let a = auc(&bundle(labels.clone(), scores)).unwrap();
        let b = auc(&bundle(labels, squashed)).unwrap();
        prop_assert_eq!(a, b);
    }
}
