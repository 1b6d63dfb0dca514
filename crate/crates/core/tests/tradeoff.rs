use fairtune::tradeoff::{bench, build_baselines, classify, mutate, BaselineCurve, CurvePoint, RegionProportions};
use fairtune::{MetricName, MetricPair, PredictionBundle, RegionLabel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bundle(n: usize, seed: u64) -> PredictionBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sensitive: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0 || rng.random_bool(0.3)).collect();
    let scores: Vec<f64> = labels
        .iter()
        .zip(&sensitive)
        .map(|(&y, &z)| 0.3 * f64::from(u8::from(y)) + 0.2 * f64::from(u8::from(z)) + rng.random_range(0.0..0.5))
        .collect();
    let predicted = scores.iter().map(|&s| s >= 0.5).collect();
    PredictionBundle::new(labels, predicted, scores, sensitive).unwrap()
}

#[test]
fn full_mutation_equalizes_selection_rates() {
    let b = random_bundle(300, 1);
    let curves = build_baselines(&b, &MetricPair::all(), 3, 4).unwrap();
    for c in &curves {
        let end = c.at_degree(100).unwrap();
        if matches!(c.pair.fairness, MetricName::Spd | MetricName::Di) {
            assert_eq!(end.f, 1.0, "{}", c.pair);
        }
        if c.pair.utility == MetricName::Auc {
            assert_eq!(end.u, 0.5);
        }
        assert_eq!(c.at_degree(0).map(|p| (p.u, p.f)), Some(c.anchor));
    }
    let constant = mutate(&b, b.len(), 0);
    assert!(constant.predicted().windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn baselines_are_seeded() {
    let b = random_bundle(120, 2);
    let pairs = MetricPair::all();
    assert_eq!(build_baselines(&b, &pairs, 4, 7).unwrap(), build_baselines(&b, &pairs, 4, 7).unwrap());
}

#[test]
fn bench_labels_every_candidate_once_per_pair() {
    let b = random_bundle(200, 3);
    let candidates = vec![("orig".to_string(), b.clone()), ("other".to_string(), random_bundle(200, 9))];
    let out = bench(&b, &candidates, &MetricPair::all(), 3, 1).unwrap();
    assert_eq!(out.labels().len(), 2 * 15);
    let table = out.table().unwrap();
    assert_eq!(table.per_pair.len(), 15);
    assert!((table.mean.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // the original model ties its own anchor everywhere
    assert!(out.placed.iter().all(|models| models[0].region == RegionLabel::Bad));
}

#[test]
fn one_model_one_pair_gives_indicators() {
    let p = RegionProportions::from_labels(&[RegionLabel::Inverted]).unwrap();
    assert_eq!(p.0, [0.0, 0.0, 1.0, 0.0, 0.0]);
}

fn curve_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..10)
}

proptest! {
    #[test]
    fn classification_ignores_point_order(
        anchor in (0.0f64..1.0, 0.0f64..1.0),
        rest in curve_strategy(),
        point in (0.0f64..1.0, 0.0f64..1.0),
        rot in 0usize..10,
    ) {
        let pair = MetricPair::new(MetricName::Spd, MetricName::Acc).unwrap();
        let mut pts = vec![CurvePoint { degree: 0, u: anchor.0, f: anchor.1 }];
        pts.extend(rest.iter().enumerate().map(|(i, &(u, f))| CurvePoint { degree: 10 * (i as u32 + 1), u, f }));
        let mut rotated = pts.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let a = BaselineCurve::new(pair, pts).unwrap();
        let b = BaselineCurve::new(pair, rotated).unwrap();
        prop_assert_eq!(classify(point, &a), classify(point, &b));
    }

    #[test]
    fn regions_match_quadrants(
        anchor in (0.0f64..1.0, 0.0f64..1.0),
        point in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let pair = MetricPair::new(MetricName::Di, MetricName::F1).unwrap();
        let curve = BaselineCurve::new(pair, vec![
            CurvePoint { degree: 0, u: anchor.0, f: anchor.1 },
            CurvePoint { degree: 100, u: 0.0, f: 1.0 },
        ]).unwrap();
        let label = classify(point, &curve);
        let (du, df) = (point.0 - anchor.0, point.1 - anchor.1);
        let expected = match (du > 1e-12, df > 1e-12) {
            (true, true) => vec![RegionLabel::WinWin],
            (true, false) => vec![RegionLabel::Inverted],
            (false, false) => vec![RegionLabel::LoseLose, RegionLabel::Bad],
            (false, true) => vec![RegionLabel::Good, RegionLabel::Bad],
        };
        prop_assert!(expected.contains(&label));
    }
}
