use fairtune::measurement::{standardize, MetricName, Monotonicity};
use fairtune::metrics::{m_a, m_b, rate_deltas, ConfusionCounts, GroupRates};
use proptest::prelude::*;

fn processed(m: MetricName, raw: f64) -> f64 {
    standardize(raw, &m.spec()).unwrap().value
}

fn counts(pos: u64, neg: u64, tp: u64, fp: u64) -> ConfusionCounts {
    ConfusionCounts { tp, fp, fn_: pos - tp, tn: neg - fp }
}

/// (positives, negatives, tp, fp) with both classes present.
fn group() -> impl Strategy<Value = (u64, u64, u64, u64)> {
    (1u64..500, 1u64..500).prop_flat_map(|(p, n)| (Just(p), Just(n), 0..=p, 0..=n))
}

#[test]
fn endpoints_and_ideals() {
    for m in MetricName::ALL {
        let spec = m.spec();
        let (lo, hi) = (processed(m, spec.min), processed(m, spec.max));
        match spec.monotonicity {
            Monotonicity::Increasing => assert_eq!((lo, hi), (0.0, 1.0), "{m}"),
            Monotonicity::Decreasing => assert_eq!((lo, hi), (1.0, 0.0), "{m}"),
            Monotonicity::NonMonotonic { ideal } => {
                assert_eq!((lo, hi), (0.0, 0.0), "{m}");
                assert_eq!(processed(m, ideal), 1.0, "{m}");
            }
        }
    }
}

#[test]
fn sweep_is_bounded_and_monotone() {
    for m in MetricName::ALL {
        let spec = m.spec();
        let xs: Vec<f64> = (0..1000).map(|i| spec.min + (spec.max - spec.min) * i as f64 / 999.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| processed(m, x)).collect();
        assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)), "{m}");
        for (w, x) in ys.windows(2).zip(xs.windows(2)) {
            match spec.monotonicity {
                Monotonicity::Increasing => assert!(w[1] >= w[0], "{m}"),
                Monotonicity::Decreasing => assert!(w[1] <= w[0], "{m}"),
                Monotonicity::NonMonotonic { ideal } => {
                    if x[1] <= ideal {
                        assert!(w[1] >= w[0], "{m}");
                    } else if x[0] >= ideal {
                        assert!(w[1] <= w[0], "{m}");
                    }
                }
            }
        }
    }
}

#[test]
fn closed_forms() {
    for i in 0..=200 {
        let x = i as f64 / 200.0;
        assert!((processed(MetricName::Spd, x) - (1.0 - x)).abs() <= 1e-15);
        let c = 2.0 * x - 1.0;
        assert!((processed(MetricName::Eod, c) - (1.0 - c.abs())).abs() <= 1e-15);
    }
}

#[test]
fn three_rate_metrics_collapse_to_their_minimum() {
    for i in 0..=200 {
        for j in 0..=200 {
            let a = -1.0 + i as f64 / 100.0;
            let b = -1.0 + j as f64 / 100.0;
            let c = -b;
            let eod = processed(MetricName::Eod, c);
            let aod = processed(MetricName::Aod, 0.5 * (a + c));
            let erd = processed(MetricName::Erd, a + b);
            let min = eod.min(aod).min(erd);
            assert!((eod + aod + erd - (1.0 + 2.0 * min)).abs() <= 1e-12, "a={a} b={b}");
        }
    }
}

proptest! {
    #[test]
    fn tpr_gap_is_exact_negated_fnr_gap(u in group(), p in group()) {
        let rates = GroupRates::from_counts(counts(u.0, u.1, u.2, u.3), counts(p.0, p.1, p.2, p.3)).unwrap();
        let d = rate_deltas(&rates).unwrap();
        prop_assert_eq!(d.b + d.c, 0.0);
    }

    #[test]
    fn fpr_and_fnr_metrics_decouple(u in group(), p in group(), shift in 0u64..500) {
        let base = GroupRates::from_counts(counts(u.0, u.1, u.2, u.3), counts(p.0, p.1, p.2, p.3)).unwrap();
        // move only false positives of the unprivileged group
        let fp = (u.3 + shift) % (u.1 + 1);
        let fpr_moved = GroupRates::from_counts(counts(u.0, u.1, u.2, fp), base.privileged).unwrap();
        prop_assert_eq!(m_b(&fpr_moved).unwrap(), m_b(&base).unwrap());
        // move only false negatives
        let tp = (u.2 + shift) % (u.0 + 1);
        let fnr_moved = GroupRates::from_counts(counts(u.0, u.1, tp, u.3), base.privileged).unwrap();
        prop_assert_eq!(m_a(&fnr_moved).unwrap(), m_a(&base).unwrap());
    }

    #[test]
    fn standardized_values_stay_in_unit_interval(t in 0.0f64..=1.0, k in 0usize..10) {
        let m = MetricName::ALL[k];
        let spec = m.spec();
        let v = processed(m, spec.min + t * (spec.max - spec.min));
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
