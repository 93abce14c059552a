//! Fixtures shared by the benchmarks.

use skorokhod::{calibrate_perkins, corpus_pair, CalibrationResult, DiscreteMeasure};

/// Corpus instances `0..n`.
pub fn instances(n: u64) -> Vec<(DiscreteMeasure, DiscreteMeasure)> {
    (0..n).map(corpus_pair).collect()
}

/// Calibrated rule for corpus instance `seed`.
pub fn calibrated(seed: u64) -> CalibrationResult {
    let (lambda, mu) = corpus_pair(seed);
    calibrate_perkins(&lambda, &mu, 1e-10).expect("corpus instances calibrate")
}
