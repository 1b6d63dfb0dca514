//! Bundled synthetic dataset with a known group bias.
//!
//! Each row has a qualification score `q ~ N(0, 1)` drawn independently of the
//! group, a proxy feature correlated with the group, and a label whose log-odds
//! are `1.5 q ± ln(7/3)`. At equal qualification the favorable rate is therefore
//! 0.7 for the privileged group and 0.3 for the unprivileged one. The group
//! column itself is the sensitive attribute and is never a model input, so a
//! classifier only picks up the bias through the proxy.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{DataSource, PrivilegedRule, TaskConfig, DEFAULT_SPLIT};
use crate::seeding::{substream, Stream};

pub const QUALIFICATION_WEIGHT: f64 = 1.5;
pub const PRIVILEGED_RATE: f64 = 0.7;
pub const UNPRIVILEGED_RATE: f64 = 0.3;
const PROXY_SHIFT: f64 = 1.0;
const PROXY_NOISE: f64 = 0.6;

pub fn biased_csv(rows: usize, seed: u64) -> String {
    let mut rng = substream(seed, Stream::Synthetic);
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let group_shift = (PRIVILEGED_RATE / (1.0 - PRIVILEGED_RATE)).ln();
    debug_assert!((group_shift + (UNPRIVILEGED_RATE / (1.0 - UNPRIVILEGED_RATE)).ln()).abs() < 1e-12);

    let mut out = String::from("qualification,proxy,group,label\n");
    for _ in 0..rows {
        let privileged = rng.random_bool(0.5);
        let q: f64 = standard.sample(&mut rng);
        let proxy = if privileged { PROXY_SHIFT } else { 0.0 } + PROXY_NOISE * standard.sample(&mut rng);
        let logit = QUALIFICATION_WEIGHT * q + if privileged { group_shift } else { -group_shift };
        let p = 1.0 / (1.0 + (-logit).exp());
        let label = rng.random_bool(p);
        writeln!(out, "{q:.6},{proxy:.6},{},{}", u8::from(privileged), u8::from(label))
            .expect("write to string");
    }
    out
}

/// Task configuration matching [`biased_csv`].
pub fn biased_task(rows: usize, seed: u64) -> TaskConfig {
    TaskConfig {
        dataset_name: "synthetic_biased".into(),
        label_column: "label".into(),
        favorable_value: "1".into(),
        sensitive_column: "group".into(),
        privileged: PrivilegedRule::Eq { value: "1".into() },
        categorical_columns: vec![],
        numeric_columns: vec!["qualification".into(), "proxy".into()],
        split_fractions: DEFAULT_SPLIT,
        split_seed: seed,
        delimiter: ",".into(),
        missing_markers: vec![String::new()],
        source: Some(DataSource::Synthetic { rows, seed }),
    }
}
