//! Output distributions over outcome indices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest deviation of the total mass from 1 accepted by
/// [`ProbabilityTable::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Entries this far outside `[0, 1]` are clamped rather than rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("{labels} labels but {probabilities} probabilities")]
    LengthMismatch { labels: usize, probabilities: usize },
    #[error("probability {value} for {label:?} lies outside [0, 1]")]
    OutOfRange { label: String, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    BadTotal(f64),
    #[error("unknown provenance {0:?}")]
    BadProvenance(String),
}

/// How a table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ExactClosedForm,
    ExactEnumeration,
    Quadrature,
    Empirical { n: u64, seed: u64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ExactClosedForm => f.write_str("exact-closed-form"),
            Provenance::ExactEnumeration => f.write_str("exact-enumeration"),
            Provenance::Quadrature => f.write_str("quadrature"),
            Provenance::Empirical { n, seed } => write!(f, "empirical(n={n},seed={seed})"),
        }
    }
}

impl FromStr for Provenance {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TableError::BadProvenance(s.to_string());
        match s {
            "exact-closed-form" => Ok(Provenance::ExactClosedForm),
            "exact-enumeration" => Ok(Provenance::ExactEnumeration),
            "quadrature" => Ok(Provenance::Quadrature),
            _ => {
                let inner = s
                    .strip_prefix("empirical(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(bad)?;
                let (n, seed) = inner.split_once(',').ok_or_else(bad)?;
                let n = n.trim().strip_prefix("n=").ok_or_else(bad)?;
                let seed = seed.trim().strip_prefix("seed=").ok_or_else(bad)?;
                Ok(Provenance::Empirical {
                    n: n.parse().map_err(|_| bad())?,
                    seed: seed.parse().map_err(|_| bad())?,
                })
            }
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Pr[M = ω_i]` for every outcome, in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ProbabilityTable {
    labels: Vec<String>,
    probabilities: Vec<f64>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawTable {
    labels: Vec<String>,
    probabilities: Vec<f64>,
    provenance: Provenance,
}

impl TryFrom<RawTable> for ProbabilityTable {
    type Error = TableError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        ProbabilityTable::new(raw.labels, raw.probabilities, raw.provenance)
    }
}

impl ProbabilityTable {
    /// Checks the entries, clamping round-off excursions of at most
    /// [`CLAMP_TOLERANCE`] back into `[0, 1]`.
    pub fn new(
        labels: Vec<String>,
        mut probabilities: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, TableError> {
        if labels.len() != probabilities.len() {
            return Err(TableError::LengthMismatch {
                labels: labels.len(),
                probabilities: probabilities.len(),
            });
        }
        for (label, p) in labels.iter().zip(probabilities.iter_mut()) {
            if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(p) {
                return Err(TableError::OutOfRange {
                    label: label.clone(),
                    value: *p,
                });
            }
            *p = p.clamp(0.0, 1.0);
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(TableError::BadTotal(total));
        }
        Ok(ProbabilityTable {
            labels,
            probabilities,
            provenance,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Probability of the outcome with the given label.
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probabilities[i])
    }
}
