//! Executable checks of the ε-DP ratio bound and of the expected-error
//! dominance of permute-and-flip over the exponential mechanism, both
//! evaluated on exact output distributions.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::instance::{validate_instance, InstanceError, NeighborPair, PrivacyParams, ValidatedInstance};
use crate::mechanisms::Mechanism;
use crate::oracle::{self, OracleError};
use crate::table::ProbabilityTable;

/// Relative slack allowed on the `e^ε` bound for floating-point error.
pub const RATIO_SLACK: f64 = 1e-9;

/// Slack allowed when comparing expected errors.
pub const DOMINANCE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("pair {index} changes a score by {difference}, more than the sensitivity {sensitivity}")]
    PairExceedsSensitivity {
        index: usize,
        difference: f64,
        sensitivity: f64,
    },
    #[error("mechanism {0} has no exact oracle; only pf, rnm-expo and em can be audited")]
    UnsupportedOracle(Mechanism),
    #[error("distribution labels do not match the instance labels")]
    LabelMismatch,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

// Infinite ratios (mass on one side only) are written as `null`.
fn ser_ratio<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else {
        s.serialize_none()
    }
}

fn de_ratio<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAudit {
    pub pair_index: usize,
    pub worst_label: String,
    #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bound: f64,
    #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
    pub worst_ratio: f64,
    pub pass: bool,
    pub per_pair: Vec<PairAudit>,
}

/// Largest probability ratio across outcomes, in both directions.
/// `0/0` counts as 1; `p/0` with `p > 0` is infinite.
fn worst_ratio(a: &ProbabilityTable, b: &ProbabilityTable) -> (usize, f64) {
    let mut worst = (0, 1.0);
    for (i, (&p, &q)) in a.probabilities().iter().zip(b.probabilities()).enumerate() {
        let r = match (p > 0.0, q > 0.0) {
            (false, false) => 1.0,
            (true, false) | (false, true) => f64::INFINITY,
            (true, true) => (p / q).max(q / p),
        };
        if r > worst.1 {
            worst = (i, r);
        }
    }
    worst
}

/// Checks `Pr[M(D1) = ω] <= e^ε Pr[M(D2) = ω]` on every supplied pair and
/// outcome, using the mechanism's exact output distribution.
///
/// Only the supplied pairs are examined; a pass is evidence, not proof.
pub fn privacy_ratio_audit(
    mechanism: Mechanism,
    pairs: &[NeighborPair],
    params: PrivacyParams,
) -> Result<AuditReport, AuditError> {
    if !matches!(
        mechanism,
        Mechanism::PermuteAndFlip | Mechanism::RnmExponential | Mechanism::Exponential
    ) {
        return Err(AuditError::UnsupportedOracle(mechanism));
    }
    params.validate()?;
    let bound = params.epsilon.exp();
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (index, pair) in pairs.iter().enumerate() {
        let difference = pair.max_abs_difference();
        if difference > params.sensitivity {
            return Err(AuditError::PairExceedsSensitivity {
                index,
                difference,
                sensitivity: params.sensitivity,
            });
        }
        let first = validate_instance(pair.q1.clone(), params)?;
        let second = validate_instance(pair.q2.clone(), params)?;
        let a = oracle::exact_distribution(mechanism, &first)?;
        let b = oracle::exact_distribution(mechanism, &second)?;
        let (outcome, ratio) = worst_ratio(&a, &b);
        per_pair.push(PairAudit {
            pair_index: index,
            worst_label: first.labels()[outcome].clone(),
            ratio,
        });
    }
    let worst_ratio = per_pair.iter().map(|p| p.ratio).fold(1.0, f64::max);
    Ok(AuditReport {
        bound,
        worst_ratio,
        pass: worst_ratio <= bound * (1.0 + RATIO_SLACK),
        per_pair,
    })
}

/// Expected suboptimality `Σ_i P(i) (q* − q_i)` of a selection distribution.
pub fn expected_error(
    inst: &ValidatedInstance,
    dist: &ProbabilityTable,
) -> Result<f64, AuditError> {
    if dist.labels() != inst.labels() {
        return Err(AuditError::LabelMismatch);
    }
    Ok(dist
        .probabilities()
        .iter()
        .zip(inst.gaps())
        .map(|(p, g)| -p * g)
        .sum::<f64>()
        .max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceUtility {
    pub instance_id: usize,
    pub expected_error_pf: f64,
    pub expected_error_em: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub per_instance: Vec<InstanceUtility>,
    pub dominance_violations: usize,
}

/// Compares permute-and-flip and exponential-mechanism expected error on
/// every instance and counts cases where permute-and-flip is worse by more
/// than [`DOMINANCE_SLACK`].
pub fn dominance_check(instances: &[ValidatedInstance]) -> Result<UtilityReport, AuditError> {
    let mut per_instance = Vec::with_capacity(instances.len());
    let mut dominance_violations = 0;
    for (instance_id, inst) in instances.iter().enumerate() {
        let pf = expected_error(inst, &oracle::pf_exact_distribution(inst)?)?;
        let em = expected_error(inst, &oracle::em_exact_distribution(inst)?)?;
        if pf > em + DOMINANCE_SLACK {
            dominance_violations += 1;
        }
        per_instance.push(InstanceUtility {
            instance_id,
            expected_error_pf: pf,
            expected_error_em: em,
        });
    }
    Ok(UtilityReport {
        per_instance,
        dominance_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::QualityVector;
    use crate::table::Provenance;

    fn q(scores: &[f64]) -> QualityVector {
        QualityVector::from_scores(scores.to_vec()).unwrap()
    }

    fn pair(a: &[f64], b: &[f64]) -> NeighborPair {
        NeighborPair::new(q(a), q(b)).unwrap()
    }

    #[test]
    fn em_swap_pair() {
        let params = PrivacyParams::new(2.0, 1.0).unwrap();
        let r = privacy_ratio_audit(Mechanism::Exponential, &[pair(&[1.0, 0.0], &[0.0, 1.0])], params)
            .unwrap();
        assert!((r.worst_ratio - std::f64::consts::E).abs() < 1e-12);
        assert!((r.bound - 2f64.exp()).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn identical_pair_has_unit_ratio() {
        let params = PrivacyParams::new(0.5, 1.0).unwrap();
        for m in [Mechanism::PermuteAndFlip, Mechanism::RnmExponential, Mechanism::Exponential] {
            let r = privacy_ratio_audit(m, &[pair(&[0.3, -1.0, 2.0], &[0.3, -1.0, 2.0])], params).unwrap();
            assert!((r.worst_ratio - 1.0).abs() < 1e-12, "{m}");
            assert!(r.pass);
        }
    }

    #[test]
    fn rejects_wide_pairs_and_unsupported_mechanisms() {
        let params = PrivacyParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            privacy_ratio_audit(Mechanism::PermuteAndFlip, &[pair(&[0.0, 0.0], &[1.5, 0.0])], params),
            Err(AuditError::PairExceedsSensitivity { index: 0, .. })
        ));
        assert_eq!(
            privacy_ratio_audit(Mechanism::RnmLaplace, &[], params),
            Err(AuditError::UnsupportedOracle(Mechanism::RnmLaplace))
        );
    }

    #[test]
    fn worst_ratio_handles_zero_mass() {
        let a = ProbabilityTable::new(vec!["0".into(), "1".into()], vec![1.0, 0.0], Provenance::ExactClosedForm).unwrap();
        let b = ProbabilityTable::new(vec!["0".into(), "1".into()], vec![0.5, 0.5], Provenance::ExactClosedForm).unwrap();
        assert_eq!(worst_ratio(&a, &a), (0, 1.0));
        assert_eq!(worst_ratio(&a, &b).1, f64::INFINITY);
        assert_eq!(worst_ratio(&b, &a).1, f64::INFINITY);
    }

    #[test]
    fn report_file_format() {
        let report = AuditReport {
            bound: 2.0,
            worst_ratio: f64::INFINITY,
            pass: false,
            per_pair: vec![PairAudit {
                pair_index: 0,
                worst_label: "a".into(),
                ratio: f64::INFINITY,
            }],
        };
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "bound": 2.0, "worst_ratio": null, "pass": false,
                "per_pair": [{"pair_index": 0, "worst_label": "a", "ratio": null}]
            })
        );
        let back: AuditReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn expected_error_examples() {
        let params = PrivacyParams::new(2.0, 1.0).unwrap();
        let inst = validate_instance(q(&[1.0, 0.0]), params).unwrap();
        let em = expected_error(&inst, &oracle::em_exact_distribution(&inst).unwrap()).unwrap();
        let pf = expected_error(&inst, &oracle::pf_exact_distribution(&inst).unwrap()).unwrap();
        assert!((em - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert!((pf - 0.183_939_720_585_721_17).abs() < 1e-12);

        let onehot = ProbabilityTable::new(inst.labels().to_vec(), vec![1.0, 0.0], Provenance::ExactClosedForm)
            .unwrap();
        assert_eq!(expected_error(&inst, &onehot).unwrap(), 0.0);

        let other = ProbabilityTable::new(vec!["x".into(), "y".into()], vec![1.0, 0.0], Provenance::ExactClosedForm)
            .unwrap();
        assert_eq!(expected_error(&inst, &other), Err(AuditError::LabelMismatch));
    }

    #[test]
    fn dominance_examples() {
        let params = PrivacyParams::new(2.0, 1.0).unwrap();
        let insts = vec![
            validate_instance(q(&[1.0, 0.0]), params).unwrap(),
            validate_instance(q(&[3.0, 3.0, 3.0]), params).unwrap(),
        ];
        let r = dominance_check(&insts).unwrap();
        assert_eq!(r.dominance_violations, 0);
        assert!((r.per_instance[0].expected_error_pf - 0.183_940).abs() < 1e-6);
        assert!((r.per_instance[0].expected_error_em - 0.268_941).abs() < 1e-6);
        assert_eq!(r.per_instance[1].expected_error_pf, 0.0);
        assert_eq!(r.per_instance[1].expected_error_em, 0.0);
    }
}
