//! Seeded random instances and bounded-perturbation neighbor pairs for
//! property suites and audits.

use std::ops::RangeInclusive;

use crate::instance::{validate_instance, NeighborPair, PrivacyParams, QualityVector, ValidatedInstance};
use crate::noise::RngState;

/// Scores drawn uniformly from `[lo, hi)`.
pub fn random_scores(rng: &mut RngState, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| lo + (hi - lo) * rng.uniform()).collect()
}

/// An instance with `k` drawn uniformly from `k_range` and scores uniform
/// on `[lo, hi)`.
pub fn random_instance(
    rng: &mut RngState,
    k_range: RangeInclusive<usize>,
    lo: f64,
    hi: f64,
    params: PrivacyParams,
) -> ValidatedInstance {
    let (k_min, k_max) = (*k_range.start(), *k_range.end());
    let k = k_min + rng.index(k_max - k_min + 1);
    let quality = QualityVector::from_scores(random_scores(rng, k, lo, hi))
        .expect("finite scores and distinct labels");
    validate_instance(quality, params).expect("params are validated")
}

/// A neighbor of `base` with every score moved by an independent uniform
/// draw from `[−sensitivity, sensitivity]`.
pub fn perturbed_neighbor(
    rng: &mut RngState,
    base: &QualityVector,
    sensitivity: f64,
) -> NeighborPair {
    let scores = base
        .scores
        .iter()
        .map(|s| s + sensitivity * (2.0 * rng.uniform() - 1.0))
        .collect();
    let other = QualityVector {
        labels: base.labels.clone(),
        scores,
    };
    NeighborPair::new(base.clone(), other).expect("same labels, finite scores")
}
