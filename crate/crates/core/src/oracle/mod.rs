//! Exact and empirical output distributions of the selection mechanisms.
//!
//! Three independent routes to the permute-and-flip / exponential-noise
//! Report Noisy Max distribution are provided so they can be checked
//! against each other:
//!
//! * [`pf_exact_distribution`] enumerates the random candidate set: each
//!   index joins independently with its coin probability and the winner is
//!   uniform over the set.
//! * [`rnm_expo_exact_distribution`] evaluates the win-probability integral
//!   in closed form by inclusion–exclusion,
//!   `P(i) = Σ_{U ∋ i} (−1)^{|U|−1} exp(λ Σ_{j∈U} (q_j − q*)) / |U|`.
//! * [`rnm_exact_quadrature`] integrates `∫ f_i(v) Π_{j≠i} F_j(v) dv`
//!   numerically, for any noise family.

mod quadrature;
pub mod stats;

use thiserror::Error;

pub use stats::{chi_square_gof, kolmogorov_sf, ks_test, tv_distance, GofResult, KsResult};

use crate::instance::ValidatedInstance;
use crate::mechanisms::Mechanism;
use crate::noise::{NoiseFamily, RngState};
use crate::table::{ProbabilityTable, Provenance, TableError};

/// Largest outcome count accepted by the subset-enumeration oracles.
pub const MAX_ENUMERATION_OUTCOMES: usize = 20;

/// Largest outcome count accepted by [`rnm_exact_quadrature`].
pub const MAX_QUADRATURE_OUTCOMES: usize = 64;

/// Absolute error target per probability in [`rnm_exact_quadrature`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

// Noise mass left outside the integration window, per tail.
const QUADRATURE_TAIL: f64 = 1e-14;
const QUADRATURE_MAX_INTERVALS: usize = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{k} outcomes exceed the enumeration limit of {limit}")]
    TooManyOutcomesForEnumeration { k: usize, limit: usize },
    #[error("{k} outcomes exceed the quadrature limit of {limit}")]
    TooManyOutcomesForQuadrature { k: usize, limit: usize },
    #[error("quadrature did not converge for outcome {index}: achieved error {achieved:e}")]
    QuadratureNonConvergence { index: usize, achieved: f64 },
    #[error("probability tables have different label sequences")]
    LabelMismatch,
    #[error("{counts} counts for {categories} categories")]
    CountLengthMismatch { counts: usize, categories: usize },
    #[error("no observations")]
    EmptySample,
    #[error("every category was merged away; expected table is degenerate for this sample size")]
    AllCategoriesMerged,
    #[error("mechanism {0} has no exact distribution oracle")]
    NoExactOracle(Mechanism),
    #[error("mechanism {0} is not a Report Noisy Max variant")]
    NoQuadrature(Mechanism),
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error(transparent)]
    Table(#[from] TableError),
}

fn table(
    inst: &ValidatedInstance,
    probabilities: Vec<f64>,
    provenance: Provenance,
) -> Result<ProbabilityTable, OracleError> {
    Ok(ProbabilityTable::new(
        inst.labels().to_vec(),
        probabilities,
        provenance,
    )?)
}

fn check_enumerable(inst: &ValidatedInstance) -> Result<(), OracleError> {
    if inst.k() > MAX_ENUMERATION_OUTCOMES {
        return Err(OracleError::TooManyOutcomesForEnumeration {
            k: inst.k(),
            limit: MAX_ENUMERATION_OUTCOMES,
        });
    }
    Ok(())
}

/// Exponential mechanism probabilities `exp(λ (q_i − q*)) / Σ_j exp(λ (q_j − q*))`.
pub fn em_exact_distribution(inst: &ValidatedInstance) -> Result<ProbabilityTable, OracleError> {
    let weights = inst.coin_probabilities();
    let total: f64 = weights.iter().sum();
    let probabilities = weights.iter().map(|w| w / total).collect();
    table(inst, probabilities, Provenance::ExactClosedForm)
}

/// Permute-and-flip probabilities by enumerating every candidate set `S`:
/// `S` occurs with probability `Π_{j∈S} p_j Π_{j∉S} (1 − p_j)` and each
/// member wins with probability `1/|S|`.
pub fn pf_exact_distribution(inst: &ValidatedInstance) -> Result<ProbabilityTable, OracleError> {
    check_enumerable(inst)?;
    let coins = inst.coin_probabilities();
    let k = coins.len();
    let mut probabilities = vec![0.0; k];
    for set in 1u32..(1 << k) {
        let mut weight = 1.0;
        for (j, &p) in coins.iter().enumerate() {
            weight *= if set & (1 << j) != 0 { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        let share = weight / f64::from(set.count_ones());
        for (j, prob) in probabilities.iter_mut().enumerate() {
            if set & (1 << j) != 0 {
                *prob += share;
            }
        }
    }
    table(inst, probabilities, Provenance::ExactEnumeration)
}

/// Report Noisy Max with exponential noise, in closed form by
/// inclusion–exclusion over subsets `U` containing the winner. Every
/// exponent is `<= 0`, so each term lies in `[−1, 1]`.
pub fn rnm_expo_exact_distribution(
    inst: &ValidatedInstance,
) -> Result<ProbabilityTable, OracleError> {
    check_enumerable(inst)?;
    let rate = inst.rate();
    let gaps = inst.gaps();
    let k = gaps.len();
    let mut probabilities = vec![0.0; k];
    for set in 1u32..(1 << k) {
        let size = set.count_ones();
        let exponent: f64 = (0..k)
            .filter(|&j| set & (1 << j) != 0)
            .map(|j| gaps[j])
            .sum();
        let magnitude = (rate * exponent).exp() / f64::from(size);
        let term = if size % 2 == 1 { magnitude } else { -magnitude };
        for (j, prob) in probabilities.iter_mut().enumerate() {
            if set & (1 << j) != 0 {
                *prob += term;
            }
        }
    }
    table(inst, probabilities, Provenance::ExactClosedForm)
}

/// Report Noisy Max win probabilities for any noise family by adaptive
/// Gauss–Kronrod quadrature of `∫ f(v − d_i) Π_{j≠i} F(v − d_j) dv`, with
/// `d_j = q_j − q*`. The window leaves at most `1e-14` noise mass outside
/// per tail, and kinks at every `d_j` are used as breakpoints. The table is
/// renormalized.
pub fn rnm_exact_quadrature(
    inst: &ValidatedInstance,
    family: NoiseFamily,
) -> Result<ProbabilityTable, OracleError> {
    let k = inst.k();
    if k > MAX_QUADRATURE_OUTCOMES {
        return Err(OracleError::TooManyOutcomesForQuadrature {
            k,
            limit: MAX_QUADRATURE_OUTCOMES,
        });
    }
    let kind = family
        .with_rate(inst.rate())
        .expect("validated instance has a positive finite rate");
    let gaps = inst.gaps();
    // The winning noisy value must exceed the maximizer's, whose gap is 0.
    let (lo, hi) = kind.support_bounds(QUADRATURE_TAIL);
    let abs_tol = QUADRATURE_TOLERANCE * 1e-2;

    let mut probabilities = Vec::with_capacity(k);
    for i in 0..k {
        let integrand = |v: f64| {
            let mut value = kind.pdf(v - gaps[i]);
            for (j, &g) in gaps.iter().enumerate() {
                if j != i && value != 0.0 {
                    value *= kind.cdf(v - g);
                }
            }
            value
        };
        let r = quadrature::integrate(integrand, lo, hi, gaps, abs_tol, QUADRATURE_MAX_INTERVALS);
        if !r.converged && r.error > QUADRATURE_TOLERANCE {
            return Err(OracleError::QuadratureNonConvergence {
                index: i,
                achieved: r.error,
            });
        }
        probabilities.push(r.value.max(0.0));
    }
    let total: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= total;
    }
    table(inst, probabilities, Provenance::Quadrature)
}

/// Exact output distribution for the mechanisms that have one:
/// permute-and-flip (enumeration), exponential-noise RNM (inclusion–
/// exclusion) and the exponential mechanism (closed form).
pub fn exact_distribution(
    mechanism: Mechanism,
    inst: &ValidatedInstance,
) -> Result<ProbabilityTable, OracleError> {
    match mechanism {
        Mechanism::PermuteAndFlip => pf_exact_distribution(inst),
        Mechanism::RnmExponential => rnm_expo_exact_distribution(inst),
        Mechanism::Exponential => em_exact_distribution(inst),
        other => Err(OracleError::NoExactOracle(other)),
    }
}

/// Quadrature table for a Report Noisy Max variant.
pub fn quadrature_distribution(
    mechanism: Mechanism,
    inst: &ValidatedInstance,
) -> Result<ProbabilityTable, OracleError> {
    let family = mechanism
        .noise_family()
        .ok_or(OracleError::NoQuadrature(mechanism))?;
    rnm_exact_quadrature(inst, family)
}

/// Outcome counts of `n` independent runs from one generator seeded with
/// `seed`.
pub fn empirical_counts(
    mechanism: Mechanism,
    inst: &ValidatedInstance,
    n: u64,
    seed: u64,
) -> Result<Vec<u64>, OracleError> {
    if n == 0 {
        return Err(OracleError::ZeroSamples);
    }
    let mut rng = RngState::new(seed);
    let mut counts = vec![0u64; inst.k()];
    for _ in 0..n {
        counts[mechanism.run(inst, &mut rng).index] += 1;
    }
    Ok(counts)
}

/// Relative frequencies of `n` seeded runs.
pub fn empirical_distribution(
    mechanism: Mechanism,
    inst: &ValidatedInstance,
    n: u64,
    seed: u64,
) -> Result<ProbabilityTable, OracleError> {
    let counts = empirical_counts(mechanism, inst, n, seed)?;
    let total = n as f64;
    let probabilities = counts.iter().map(|&c| c as f64 / total).collect();
    table(inst, probabilities, Provenance::Empirical { n, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{validate_instance, PrivacyParams, QualityVector};

    const E_INV_HALF: f64 = 0.183_939_720_585_721_17; // e^{-1}/2
    const EM_TOP: f64 = 0.731_058_578_630_004_9; // e/(1+e)

    fn inst(scores: &[f64], eps: f64) -> ValidatedInstance {
        validate_instance(
            QualityVector::from_scores(scores.to_vec()).unwrap(),
            PrivacyParams::new(eps, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn em_examples() {
        let t = em_exact_distribution(&inst(&[0.0, 0.0, 0.0], 1.0)).unwrap();
        assert!(close(t.probabilities(), &[1.0 / 3.0; 3], 1e-15));
        let t = em_exact_distribution(&inst(&[1.0, 0.0], 2.0)).unwrap();
        assert!(close(t.probabilities(), &[EM_TOP, 1.0 - EM_TOP], 1e-15));
        let t = em_exact_distribution(&inst(&[1_000_000.0, 999_999.0], 2.0)).unwrap();
        assert!(close(t.probabilities(), &[EM_TOP, 1.0 - EM_TOP], 1e-12));
        let t = em_exact_distribution(&inst(&[1.0], 0.3)).unwrap();
        assert_eq!(t.probabilities(), &[1.0]);
        assert_eq!(t.provenance(), Provenance::ExactClosedForm);
    }

    #[test]
    fn pf_examples() {
        let t = pf_exact_distribution(&inst(&[1.0, 0.0], 2.0)).unwrap();
        assert!(close(t.probabilities(), &[1.0 - E_INV_HALF, E_INV_HALF], 1e-15));
        assert_eq!(t.provenance(), Provenance::ExactEnumeration);
        let t = pf_exact_distribution(&inst(&[2.5; 5], 0.7)).unwrap();
        assert!(close(t.probabilities(), &[0.2; 5], 1e-15));
        let t = pf_exact_distribution(&inst(&[0.0, -1e9], 1.0)).unwrap();
        assert!(close(t.probabilities(), &[1.0, 0.0], 1e-12));
    }

    #[test]
    fn rnm_expo_examples() {
        let t = rnm_expo_exact_distribution(&inst(&[1.0, 0.0], 2.0)).unwrap();
        assert!((t.probabilities()[1] - E_INV_HALF).abs() < 1e-15);
        let t = rnm_expo_exact_distribution(&inst(&[4.0], 2.0)).unwrap();
        assert_eq!(t.probabilities(), &[1.0]);
        let t = rnm_expo_exact_distribution(&inst(&[0.0, 0.0], 2.0)).unwrap();
        assert!(close(t.probabilities(), &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn enumeration_limit() {
        let big = inst(&[0.0; 21], 1.0);
        assert!(matches!(
            pf_exact_distribution(&big),
            Err(OracleError::TooManyOutcomesForEnumeration { k: 21, .. })
        ));
        assert!(matches!(
            rnm_expo_exact_distribution(&big),
            Err(OracleError::TooManyOutcomesForEnumeration { .. })
        ));
        let huge = inst(&[0.0; 65], 1.0);
        assert!(matches!(
            rnm_exact_quadrature(&huge, NoiseFamily::Laplace),
            Err(OracleError::TooManyOutcomesForQuadrature { .. })
        ));
    }

    #[test]
    fn twenty_outcomes_enumerate() {
        let scores: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let i = inst(&scores, 1.0);
        let pf = pf_exact_distribution(&i).unwrap();
        let rnm = rnm_expo_exact_distribution(&i).unwrap();
        assert!(tv_distance(&pf, &rnm).unwrap() < 1e-8);
    }

    #[test]
    fn quadrature_examples() {
        let i = inst(&[1.0, 0.0], 2.0);
        let q = rnm_exact_quadrature(&i, NoiseFamily::Exponential).unwrap();
        assert!((q.probabilities()[1] - E_INV_HALF).abs() < 1e-6);
        assert_eq!(q.provenance(), Provenance::Quadrature);
        let q = rnm_exact_quadrature(&i, NoiseFamily::Gumbel).unwrap();
        assert!((q.probabilities()[0] - EM_TOP).abs() < 1e-6);
        let q = rnm_exact_quadrature(&inst(&[0.0, 0.0], 1.0), NoiseFamily::Laplace).unwrap();
        assert!(close(q.probabilities(), &[0.5, 0.5], 1e-9));
    }

    #[test]
    fn laplace_two_outcomes_closed_form() {
        // X − Y for i.i.d. Laplace(α) has P(X − Y > −d) = 1 − ½e^{−d/α}(1 + d/(2α)).
        let i = inst(&[1.0, 0.0], 2.0); // α = 1, d = 1
        let q = rnm_exact_quadrature(&i, NoiseFamily::Laplace).unwrap();
        let expected = 1.0 - 0.5 * (-1.0f64).exp() * 1.5;
        assert!((q.probabilities()[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn exact_selector() {
        let i = inst(&[1.0, 0.0], 2.0);
        assert!(exact_distribution(Mechanism::PermuteAndFlip, &i).is_ok());
        assert_eq!(
            exact_distribution(Mechanism::RnmLaplace, &i),
            Err(OracleError::NoExactOracle(Mechanism::RnmLaplace))
        );
        assert_eq!(
            quadrature_distribution(Mechanism::IntermediateA, &i),
            Err(OracleError::NoQuadrature(Mechanism::IntermediateA))
        );
    }

    #[test]
    fn empirical_examples() {
        let i = inst(&[1.0, 0.0], 2.0);
        let t = empirical_distribution(Mechanism::PermuteAndFlip, &i, 1, 9).unwrap();
        assert!(t.probabilities().iter().filter(|&&p| p == 1.0).count() == 1);
        assert_eq!(t.provenance(), Provenance::Empirical { n: 1, seed: 9 });
        let a = empirical_distribution(Mechanism::PermuteAndFlip, &i, 5000, 4).unwrap();
        let b = empirical_distribution(Mechanism::PermuteAndFlip, &i, 5000, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            empirical_counts(Mechanism::Exponential, &i, 0, 0),
            Err(OracleError::ZeroSamples)
        );
    }

    #[test]
    fn pf_is_not_em() {
        let i = inst(&[1.0, 0.0], 2.0);
        let tv = tv_distance(
            &pf_exact_distribution(&i).unwrap(),
            &em_exact_distribution(&i).unwrap(),
        )
        .unwrap();
        assert!((tv - 0.085_001).abs() < 1e-6, "{tv}");
    }
}
