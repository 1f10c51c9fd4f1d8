//! Goodness-of-fit machinery: Pearson chi-square with tail pooling, the
//! one-sample Kolmogorov–Smirnov test, and total variation distance.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::OracleError;
use crate::table::ProbabilityTable;

/// Categories whose expected count falls below this are pooled.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// `½ Σ |p_i − q_i|` over tables with identical label sequences.
pub fn tv_distance(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<f64, OracleError> {
    if p.labels() != q.labels() {
        return Err(OracleError::LabelMismatch);
    }
    let sum: f64 = p
        .probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * sum).min(1.0))
}

/// Pearson chi-square goodness of fit of `observed_counts` against
/// `expected`.
///
/// Categories with expected count below [`MIN_EXPECTED_COUNT`] are pooled
/// into one tail bin; if that bin is still too small it is folded into the
/// smallest remaining category. Zero-probability categories are dropped
/// unless something was observed there, which yields an infinite statistic.
/// A single surviving bin is a vacuous pass with zero degrees of freedom.
pub fn chi_square_gof(
    observed_counts: &[u64],
    expected: &ProbabilityTable,
    significance: f64,
) -> Result<GofResult, OracleError> {
    if observed_counts.len() != expected.len() {
        return Err(OracleError::CountLengthMismatch {
            counts: observed_counts.len(),
            categories: expected.len(),
        });
    }
    let n: u64 = observed_counts.iter().sum();
    if n == 0 {
        return Err(OracleError::EmptySample);
    }
    let total = n as f64;

    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut pool = (0.0, 0.0);
    let mut impossible = false;
    for (&obs, &p) in observed_counts.iter().zip(expected.probabilities()) {
        let exp = p * total;
        let obs = obs as f64;
        if p == 0.0 {
            impossible |= obs > 0.0;
        } else if exp < MIN_EXPECTED_COUNT {
            pool.0 += obs;
            pool.1 += exp;
        } else {
            bins.push((obs, exp));
        }
    }
    if pool.1 > 0.0 {
        if pool.1 >= MIN_EXPECTED_COUNT {
            bins.push(pool);
        } else if let Some(smallest) = bins.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)) {
            smallest.0 += pool.0;
            smallest.1 += pool.1;
        } else {
            return Err(OracleError::AllCategoriesMerged);
        }
    }
    if bins.is_empty() {
        return Err(OracleError::AllCategoriesMerged);
    }

    let dof = bins.len() - 1;
    if impossible {
        return Ok(GofResult {
            statistic: f64::INFINITY,
            degrees_of_freedom: dof,
            p_value: 0.0,
            pass: false,
        });
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .sf(statistic)
    };
    Ok(GofResult {
        statistic,
        degrees_of_freedom: dof,
        p_value,
        pass: p_value >= significance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² x²)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = f64::from(j);
        let term = (-2.0 * j * j * x * x).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `samples` against `cdf`, using the
/// Stephens small-sample correction of the asymptotic distribution.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsResult {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let i = i as f64;
            ((i + 1.0) / n - f).max(f - i / n)
        })
        .fold(0.0, f64::max);
    let root = n.sqrt();
    let p_value = kolmogorov_sf((root + 0.12 + 0.11 / root) * statistic);
    KsResult { statistic, p_value }
}
