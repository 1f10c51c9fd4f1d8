//! Domain types shared by every mechanism: quality vectors, privacy
//! parameters, validated instances and neighbor pairs, plus the
//! pair-based sensitivity estimators.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("outcome set is empty: a quality vector needs at least one outcome")]
    EmptyOutcomeSet,
    #[error("labels and scores differ in length ({labels} labels, {scores} scores)")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("score for outcome {label:?} is not finite ({value})")]
    NonFiniteScore { label: String, value: f64 },
    #[error("epsilon must be positive and finite (got {0})")]
    NonPositiveEpsilon(f64),
    #[error("sensitivity must be positive and finite (got {0})")]
    NonPositiveSensitivity(f64),
    #[error("duplicate outcome label {0:?}")]
    DuplicateLabel(String),
    #[error("neighbor pair label sequences differ")]
    PairLabelMismatch,
    #[error("neighbor pair list is empty")]
    EmptyPairList,
}

/// Scores `q(D, ω_1) .. q(D, ω_k)` together with their outcome labels.
///
/// This is a plain data carrier; [`QualityVector::validate`] (or
/// [`validate_instance`]) checks its invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityVector {
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
}

impl QualityVector {
    pub fn new(labels: Vec<String>, scores: Vec<f64>) -> Result<Self, InstanceError> {
        let q = QualityVector { labels, scores };
        q.validate()?;
        Ok(q)
    }

    /// Builds a vector with labels `"0"`, `"1"`, ...
    pub fn from_scores(scores: Vec<f64>) -> Result<Self, InstanceError> {
        let labels = (0..scores.len()).map(|i| i.to_string()).collect();
        Self::new(labels, scores)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.labels.len() != self.scores.len() {
            return Err(InstanceError::LengthMismatch {
                labels: self.labels.len(),
                scores: self.scores.len(),
            });
        }
        if self.scores.is_empty() {
            return Err(InstanceError::EmptyOutcomeSet);
        }
        for (label, &value) in self.labels.iter().zip(&self.scores) {
            if !value.is_finite() {
                return Err(InstanceError::NonFiniteScore {
                    label: label.clone(),
                    value,
                });
            }
        }
        let mut seen = HashSet::with_capacity(self.labels.len());
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                return Err(InstanceError::DuplicateLabel(label.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// The best true score `q* = max_i q_i`.
    pub fn q_star(&self) -> f64 {
        self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Privacy budget ε and quality-function sensitivity Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub sensitivity: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, sensitivity: f64) -> Result<Self, InstanceError> {
        let p = PrivacyParams {
            epsilon,
            sensitivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        // NaN fails both comparisons.
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(InstanceError::NonPositiveEpsilon(self.epsilon));
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(InstanceError::NonPositiveSensitivity(self.sensitivity));
        }
        let rate = self.rate();
        if !(rate > 0.0 && rate.is_finite() && self.scale().is_finite()) {
            return Err(InstanceError::NonPositiveEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// Exponential-noise rate `ε / (2Δ)`.
    pub fn rate(&self) -> f64 {
        self.epsilon / (2.0 * self.sensitivity)
    }

    /// Laplace / Gumbel noise scale `2Δ / ε`.
    pub fn scale(&self) -> f64 {
        2.0 * self.sensitivity / self.epsilon
    }
}

/// A quality vector and privacy parameters whose invariants have been
/// checked. Only [`validate_instance`] builds one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedInstance {
    quality: QualityVector,
    params: PrivacyParams,
    q_star: f64,
    gaps: Vec<f64>,
}

/// Checks every invariant of `q` and `p` and bundles them.
pub fn validate_instance(
    q: QualityVector,
    p: PrivacyParams,
) -> Result<ValidatedInstance, InstanceError> {
    q.validate()?;
    p.validate()?;
    let q_star = q.q_star();
    let gaps = q.scores.iter().map(|&s| s - q_star).collect();
    Ok(ValidatedInstance {
        quality: q,
        params: p,
        q_star,
        gaps,
    })
}

impl ValidatedInstance {
    pub fn quality(&self) -> &QualityVector {
        &self.quality
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn labels(&self) -> &[String] {
        &self.quality.labels
    }

    pub fn scores(&self) -> &[f64] {
        &self.quality.scores
    }

    pub fn k(&self) -> usize {
        self.quality.len()
    }

    pub fn q_star(&self) -> f64 {
        self.q_star
    }

    /// `q_i − q*` for every outcome; all entries are `<= 0` and at least
    /// one is exactly zero.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn rate(&self) -> f64 {
        self.params.rate()
    }

    pub fn scale(&self) -> f64 {
        self.params.scale()
    }

    /// Coin probabilities `exp(λ (q_i − q*))`. The maximizer's coin is
    /// exactly 1.
    pub fn coin_probabilities(&self) -> Vec<f64> {
        let rate = self.rate();
        self.gaps.iter().map(|&g| (rate * g).exp()).collect()
    }
}

/// Score vectors induced by two neighboring datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct NeighborPair {
    pub q1: QualityVector,
    pub q2: QualityVector,
}

#[derive(Deserialize)]
struct RawPair {
    q1: QualityVector,
    q2: QualityVector,
}

impl TryFrom<RawPair> for NeighborPair {
    type Error = InstanceError;

    fn try_from(raw: RawPair) -> Result<Self, Self::Error> {
        NeighborPair::new(raw.q1, raw.q2)
    }
}

impl NeighborPair {
    pub fn new(q1: QualityVector, q2: QualityVector) -> Result<Self, InstanceError> {
        q1.validate()?;
        q2.validate()?;
        if q1.labels != q2.labels {
            return Err(InstanceError::PairLabelMismatch);
        }
        Ok(NeighborPair { q1, q2 })
    }

    /// Coordinate-wise differences `q1_i − q2_i`.
    pub fn differences(&self) -> impl Iterator<Item = f64> + '_ {
        self.q1
            .scores
            .iter()
            .zip(&self.q2.scores)
            .map(|(a, b)| a - b)
    }

    /// `max_i |q1_i − q2_i|`.
    pub fn max_abs_difference(&self) -> f64 {
        self.differences().map(f64::abs).fold(0.0, f64::max)
    }
}

/// File layout of a neighbor-pairs document: `{"pairs": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborPairs {
    pub pairs: Vec<NeighborPair>,
}

/// Largest per-outcome score change seen across the supplied pairs.
///
/// This is evidence, not a certificate: the true sensitivity is a supremum
/// over *all* neighboring datasets, so the value returned here is only a
/// lower bound on it.
pub fn sensitivity_from_pairs(pairs: &[NeighborPair]) -> Result<f64, InstanceError> {
    if pairs.is_empty() {
        return Err(InstanceError::EmptyPairList);
    }
    Ok(pairs
        .iter()
        .map(NeighborPair::max_abs_difference)
        .fold(0.0, f64::max))
}

/// Range form of the sensitivity, `max_ω(q1 − q2) − min_ω(q1 − q2)`,
/// maximized over the supplied pairs. A uniform shift between neighbors
/// contributes nothing.
///
/// Like [`sensitivity_from_pairs`] this only lower-bounds the quantity
/// over all neighbors.
pub fn dong_sensitivity_from_pairs(pairs: &[NeighborPair]) -> Result<f64, InstanceError> {
    if pairs.is_empty() {
        return Err(InstanceError::EmptyPairList);
    }
    Ok(pairs
        .iter()
        .map(|pair| {
            let (lo, hi) = pair
                .differences()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                    (lo.min(d), hi.max(d))
                });
            hi - lo
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qv(labels: &[&str], scores: &[f64]) -> QualityVector {
        QualityVector {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            scores: scores.to_vec(),
        }
    }

    fn pair(a: &[f64], b: &[f64]) -> NeighborPair {
        NeighborPair::new(
            QualityVector::from_scores(a.to_vec()).unwrap(),
            QualityVector::from_scores(b.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = validate_instance(qv(&["a"], &[0.0]), PrivacyParams { epsilon: 1.0, sensitivity: 1.0 })
            .unwrap();
        assert_eq!(inst.k(), 1);
        assert_eq!(inst.gaps(), &[0.0]);
    }

    #[test]
    fn derived_rate() {
        let inst = validate_instance(
            qv(&["a", "b"], &[1.0, 0.0]),
            PrivacyParams { epsilon: 2.0, sensitivity: 1.0 },
        )
        .unwrap();
        assert_eq!(inst.rate(), 1.0);
        assert_eq!(inst.q_star(), 1.0);
        assert_eq!(inst.coin_probabilities()[0], 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ok = PrivacyParams { epsilon: 1.0, sensitivity: 1.0 };
        let e = validate_instance(qv(&["a"], &[0.0]), PrivacyParams { epsilon: 0.0, sensitivity: 1.0 });
        assert_eq!(e, Err(InstanceError::NonPositiveEpsilon(0.0)));
        let e = validate_instance(qv(&["a"], &[0.0]), PrivacyParams { epsilon: 1.0, sensitivity: 0.0 });
        assert_eq!(e, Err(InstanceError::NonPositiveSensitivity(0.0)));
        assert_eq!(
            validate_instance(qv(&[], &[]), ok),
            Err(InstanceError::EmptyOutcomeSet)
        );
        assert!(matches!(
            validate_instance(qv(&["a"], &[f64::NAN]), ok),
            Err(InstanceError::NonFiniteScore { .. })
        ));
        assert!(matches!(
            validate_instance(qv(&["a"], &[f64::INFINITY]), ok),
            Err(InstanceError::NonFiniteScore { .. })
        ));
        assert_eq!(
            validate_instance(qv(&["a", "a"], &[0.0, 1.0]), ok),
            Err(InstanceError::DuplicateLabel("a".into()))
        );
        assert!(matches!(
            validate_instance(qv(&["a", "b"], &[0.0]), ok),
            Err(InstanceError::LengthMismatch { .. })
        ));
        assert!(PrivacyParams::new(f64::NAN, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn error_message_names_epsilon() {
        let msg = PrivacyParams::new(0.0, 1.0).unwrap_err().to_string();
        assert!(msg.contains("epsilon"));
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(sensitivity_from_pairs(&[pair(&[1.0, 0.0], &[0.0, 1.0])]), Ok(1.0));
        assert_eq!(sensitivity_from_pairs(&[pair(&[5.0, 3.0], &[5.0, 3.0])]), Ok(0.0));
        assert_eq!(
            sensitivity_from_pairs(&[pair(&[5.0, 1.0], &[4.0, 2.0]), pair(&[5.0, 3.0], &[4.0, 3.0])]),
            Ok(1.0)
        );
        assert_eq!(sensitivity_from_pairs(&[]), Err(InstanceError::EmptyPairList));
    }

    #[test]
    fn dong_sensitivity_examples() {
        assert_eq!(dong_sensitivity_from_pairs(&[pair(&[5.0, 3.0], &[4.0, 2.0])]), Ok(0.0));
        assert_eq!(dong_sensitivity_from_pairs(&[pair(&[5.0, 1.0], &[4.0, 2.0])]), Ok(2.0));
        assert_eq!(dong_sensitivity_from_pairs(&[pair(&[5.0, 3.0], &[5.0, 3.0])]), Ok(0.0));
        assert_eq!(dong_sensitivity_from_pairs(&[]), Err(InstanceError::EmptyPairList));
    }

    #[test]
    fn pair_labels_must_match() {
        let a = qv(&["a", "b"], &[0.0, 1.0]);
        let b = qv(&["b", "a"], &[0.0, 1.0]);
        assert_eq!(NeighborPair::new(a, b), Err(InstanceError::PairLabelMismatch));
    }

    #[test]
    fn pairs_file_format() {
        let text = r#"{"pairs": [{"q1": {"labels": ["a","b"], "scores": [1.0, 0.0]},
                                  "q2": {"labels": ["a","b"], "scores": [0.0, 1.0]}}]}"#;
        let parsed: NeighborPairs = serde_json::from_str(text).unwrap();
        assert_eq!(parsed.pairs.len(), 1);
        let back: NeighborPairs =
            serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
        assert_eq!(back, parsed);

        let mismatched = r#"{"pairs": [{"q1": {"labels": ["a"], "scores": [1.0]},
                                        "q2": {"labels": ["b"], "scores": [0.0]}}]}"#;
        assert!(serde_json::from_str::<NeighborPairs>(mismatched).is_err());
    }

    fn scores_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 1..8)
    }

    fn pairs_strategy() -> impl Strategy<Value = Vec<NeighborPair>> {
        (1usize..6).prop_flat_map(|k| {
            prop::collection::vec(
                (
                    prop::collection::vec(-10.0f64..10.0, k),
                    prop::collection::vec(-10.0f64..10.0, k),
                ),
                1..6,
            )
            .prop_map(|raw| raw.iter().map(|(a, b)| pair(a, b)).collect())
        })
    }

    proptest! {
        #[test]
        fn rate_times_scale_is_one(eps in 1e-3f64..100.0, delta in 1e-3f64..100.0) {
            let p = PrivacyParams::new(eps, delta).unwrap();
            prop_assert!((p.rate() * p.scale() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn q_star_is_permutation_invariant(scores in scores_strategy(), seed in any::<u64>()) {
            let q = QualityVector::from_scores(scores.clone()).unwrap();
            let mut idx: Vec<usize> = (0..scores.len()).collect();
            let n = idx.len();
            // cheap deterministic permutation from the seed
            for i in (1..n).rev() {
                idx.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
            }
            let permuted = QualityVector {
                labels: idx.iter().map(|&i| q.labels[i].clone()).collect(),
                scores: idx.iter().map(|&i| q.scores[i]).collect(),
            };
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(q.q_star(), max);
            prop_assert_eq!(permuted.q_star(), max);
        }

        #[test]
        fn sensitivity_permutation_and_extension(pairs in pairs_strategy(), extra in pairs_strategy()) {
            let base = sensitivity_from_pairs(&pairs).unwrap();
            let mut reversed = pairs.clone();
            reversed.reverse();
            prop_assert_eq!(sensitivity_from_pairs(&reversed).unwrap(), base);
            // extension only makes sense with matching k
            if extra[0].q1.len() == pairs[0].q1.len() {
                let mut longer = pairs.clone();
                longer.extend(extra);
                prop_assert!(sensitivity_from_pairs(&longer).unwrap() >= base);
            }
        }

        #[test]
        fn dong_is_nonnegative_and_kills_shifts(pairs in pairs_strategy(), shift in -50i32..50) {
            prop_assert!(dong_sensitivity_from_pairs(&pairs).unwrap() >= 0.0);
            let shifted: Vec<NeighborPair> = pairs
                .iter()
                .map(|p| {
                    let q2 = QualityVector {
                        labels: p.q1.labels.clone(),
                        scores: p.q1.scores.iter().map(|s| s - f64::from(shift)).collect(),
                    };
                    NeighborPair::new(p.q1.clone(), q2).unwrap()
                })
                .collect();
            // q1 − (q1 − c) rounds, but stays within a few ulps of c
            prop_assert!(dong_sensitivity_from_pairs(&shifted).unwrap() < 1e-12);
        }
    }
}
