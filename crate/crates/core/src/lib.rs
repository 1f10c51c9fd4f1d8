//! Differentially private selection.
//!
//! Mechanisms: permute-and-flip, Report Noisy Max with exponential,
//! Laplace or Gumbel noise, the exponential mechanism, and two
//! intermediate algorithms that interpolate between permute-and-flip and
//! exponential-noise Report Noisy Max. Alongside them live exact
//! output-distribution oracles, goodness-of-fit machinery and audits of the
//! ε-DP ratio bound.
//!
//! All mechanisms consume a precomputed score vector; the private dataset
//! never enters the library.

pub mod audit;
pub mod generate;
pub mod instance;
pub mod mechanisms;
pub mod noise;
pub mod oracle;
pub mod table;

pub use audit::{
    dominance_check, expected_error, privacy_ratio_audit, AuditError, AuditReport, PairAudit,
    UtilityReport,
};
pub use instance::{
    dong_sensitivity_from_pairs, sensitivity_from_pairs, validate_instance, InstanceError,
    NeighborPair, NeighborPairs, PrivacyParams, QualityVector, ValidatedInstance,
};
pub use mechanisms::{
    argmax_with_gap, exponential_mechanism, intermediate_a, intermediate_b, permute_and_flip,
    report_noisy_max, report_noisy_max_with_gap, GapResult, Mechanism, MechanismError,
    SelectionResult, Trace,
};
pub use noise::{NoiseFamily, NoiseKind, RngState};
pub use oracle::{
    em_exact_distribution, pf_exact_distribution, rnm_expo_exact_distribution,
    rnm_exact_quadrature, GofResult, OracleError,
};
pub use table::{ProbabilityTable, Provenance};
