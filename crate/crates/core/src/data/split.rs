use rand::seq::SliceRandom;

use super::config::validate_fractions;
use super::DataError;
use crate::seeding::{substream, Stream};

pub const MIN_SPLIT_ROWS: usize = 10;

/// Index sets of a train/tune/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sizes of the three parts. Tune and test get `floor(count * fraction)`; the
/// remainder goes to train.
pub fn partition_sizes(count: usize, fractions: [f64; 3]) -> (usize, usize, usize) {
    // the epsilon keeps exact multiples like 10 * 0.2 from flooring to 1
    let part = |f: f64| ((count as f64) * f + 1e-9).floor() as usize;
    let tune = part(fractions[1]);
    let test = part(fractions[2]);
    let train = count.saturating_sub(tune + test);
    (train, tune, test)
}

/// Shuffles `0..count` with the split stream of `seed` and cuts it by
/// [`partition_sizes`]. No minimum row count is enforced here.
pub fn partition(count: usize, fractions: [f64; 3], seed: u64) -> Result<SplitIndices, DataError> {
    validate_fractions(fractions)?;
    let (n_train, n_tune, n_test) = partition_sizes(count, fractions);
    if n_train == 0 || n_tune == 0 || n_test == 0 {
        return Err(DataError::DegenerateSplit(format!(
            "{count} rows split by {fractions:?} gives sizes ({n_train}, {n_tune}, {n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut substream(seed, Stream::Split));
    let mut train = order[..n_train].to_vec();
    let mut tune = order[n_train..n_train + n_tune].to_vec();
    let mut test = order[n_train + n_tune..].to_vec();
    train.sort_unstable();
    tune.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, tune, test })
}

pub fn split(count: usize, fractions: [f64; 3], seed: u64) -> Result<SplitIndices, DataError> {
    if count < MIN_SPLIT_ROWS {
        return Err(DataError::DegenerateSplit(format!(
            "need at least {MIN_SPLIT_ROWS} rows to split, got {count}"
        )));
    }
    partition(count, fractions, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiples() {
        let s = split(10, [0.6, 0.2, 0.2], 7).unwrap();
        assert_eq!((s.train.len(), s.tune.len(), s.test.len()), (6, 2, 2));
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(split(10, [0.6, 0.2, 0.2], 7).unwrap(), split(10, [0.6, 0.2, 0.2], 7).unwrap());
        assert_ne!(split(50, [0.6, 0.2, 0.2], 7).unwrap(), split(50, [0.6, 0.2, 0.2], 8).unwrap());
    }

    #[test]
    fn remainder_goes_to_train() {
        let s = split(11, [0.6, 0.2, 0.2], 3).unwrap();
        assert_eq!((s.train.len(), s.tune.len(), s.test.len()), (7, 2, 2));
    }

    /// Enumerates every row count and compares with the remainder rule computed
    /// in exact integer arithmetic (fractions expressed in percent).
    #[test]
    fn sizes_match_integer_enumeration() {
        for count in 10..500usize {
            for (pct, fr) in [([60, 20, 20], [0.6, 0.2, 0.2]), ([70, 15, 15], [0.7, 0.15, 0.15])] {
                let tune = count * pct[1] / 100;
                let test = count * pct[2] / 100;
                assert_eq!(partition_sizes(count, fr), (count - tune - test, tune, test), "{count}");
            }
        }
    }

    #[test]
    fn four_rows_half_quarter_quarter() {
        let s = partition(4, [0.5, 0.25, 0.25], 1).unwrap();
        assert_eq!((s.train.len(), s.tune.len(), s.test.len()), (2, 1, 1));
    }

    #[test]
    fn disjoint_cover() {
        let s = split(37, [0.6, 0.2, 0.2], 99).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.tune).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(split(9, [0.6, 0.2, 0.2], 0), Err(DataError::DegenerateSplit(_))));
    }
}
