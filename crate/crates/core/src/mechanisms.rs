//! Private selection mechanisms.
//!
//! Every mechanism works on the gaps `q_i − q*` rather than on the raw
//! scores. The output distribution is unchanged (all of them depend on
//! scores only through differences) and large scores lose no precision.
//!
//! Noisy-score ties are a measure-zero event in exact arithmetic but can
//! happen in floating point; they are broken toward the smallest index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::ValidatedInstance;
use crate::noise::{NoiseFamily, NoiseKind, RngState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("gap release needs at least two outcomes (got {0})")]
    NeedAtLeastTwoOutcomes(usize),
    #[error("cannot take the argmax of an empty sequence")]
    EmptySequence,
    #[error("noisy value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("unknown mechanism {0:?} (expected one of pf, rnm-expo, rnm-laplace, rnm-gumbel, em, alg-a, alg-b)")]
    UnknownMechanism(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub index: usize,
    pub label: String,
}

impl SelectionResult {
    fn new(inst: &ValidatedInstance, index: usize) -> Self {
        SelectionResult {
            index,
            label: inst.labels()[index].clone(),
        }
    }
}

/// Winner of a noisy-max run together with the noisy gap to the runner-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub index: usize,
    pub label: String,
    pub gap: f64,
}

/// Result of [`argmax_with_gap`]. With a single value there is no
/// runner-up; the gap is reported as 0 and `unopposed` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxGap {
    pub index: usize,
    pub gap: f64,
    pub unopposed: bool,
}

/// Internal state of one mechanism run, recorded for debugging and tests.
/// Values are in score units (`q_i + noise`), not gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// Noisy scores `v_i`; capped scores `v_i^⊤` for intermediate B.
    pub noisy: Vec<f64>,
    /// Tie-break noise `z_i` of intermediate B.
    pub tiebreak: Vec<f64>,
    /// Visiting order of permute-and-flip.
    pub order: Vec<usize>,
    /// `(index, heads probability, landed heads)` per flipped coin.
    pub coins: Vec<(usize, f64, bool)>,
    /// Candidate set `S` (intermediate A) or `S'` (intermediate B).
    pub candidates: Vec<usize>,
}

/// Index of the largest value, ties toward the smallest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn noise_for(inst: &ValidatedInstance, family: NoiseFamily) -> NoiseKind {
    family
        .with_rate(inst.rate())
        .expect("validated instance has a positive finite rate")
}

/// Gap-frame noisy scores `(q_i − q*) + noise_i`, one draw per index in order.
fn noisy_gaps(
    inst: &ValidatedInstance,
    family: NoiseFamily,
    rng: &mut RngState,
    trace: Option<&mut Trace>,
) -> Vec<f64> {
    let kind = noise_for(inst, family);
    let noise: Vec<f64> = (0..inst.k()).map(|_| kind.sample(rng)).collect();
    if let Some(t) = trace {
        t.noisy = inst.scores().iter().zip(&noise).map(|(q, n)| q + n).collect();
    }
    inst.gaps().iter().zip(&noise).map(|(g, n)| g + n).collect()
}

/// Report Noisy Max: add i.i.d. noise to every score and return the argmax.
/// Exponential noise has rate `ε/2Δ`; Laplace and Gumbel noise have scale
/// `2Δ/ε`.
pub fn report_noisy_max(
    inst: &ValidatedInstance,
    family: NoiseFamily,
    rng: &mut RngState,
) -> SelectionResult {
    report_noisy_max_traced(inst, family, rng, None)
}

pub fn report_noisy_max_traced(
    inst: &ValidatedInstance,
    family: NoiseFamily,
    rng: &mut RngState,
    trace: Option<&mut Trace>,
) -> SelectionResult {
    let values = noisy_gaps(inst, family, rng, trace);
    SelectionResult::new(inst, argmax(&values))
}

/// Samples directly from `exp(λ q_i) / Σ_j exp(λ q_j)` by inverting the
/// cumulative distribution with one uniform draw.
pub fn exponential_mechanism(inst: &ValidatedInstance, rng: &mut RngState) -> SelectionResult {
    let weights = inst.coin_probabilities();
    let total: f64 = weights.iter().sum();
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            chosen = Some(i);
            break;
        }
    }
    // Round-off can leave `target` just past the final partial sum; fall
    // back to the last outcome with positive weight.
    let index = chosen.unwrap_or_else(|| {
        weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("the maximizer has weight 1")
    });
    SelectionResult::new(inst, index)
}

/// Permute-and-Flip: visit outcomes in uniformly random order and return
/// the first whose coin, with heads probability `exp(λ (q_i − q*))`, lands
/// heads. The maximizer's coin always lands heads, so the loop terminates.
pub fn permute_and_flip(inst: &ValidatedInstance, rng: &mut RngState) -> SelectionResult {
    permute_and_flip_traced(inst, rng, None)
}

pub fn permute_and_flip_traced(
    inst: &ValidatedInstance,
    rng: &mut RngState,
    mut trace: Option<&mut Trace>,
) -> SelectionResult {
    let rate = inst.rate();
    let order = rng.permutation(inst.k());
    if let Some(t) = trace.as_deref_mut() {
        t.order = order.clone();
    }
    for &r in &order {
        let p = (rate * inst.gaps()[r]).exp();
        let heads = rng.bernoulli(p);
        if let Some(t) = trace.as_deref_mut() {
            t.coins.push((r, p, heads));
        }
        if heads {
            return SelectionResult::new(inst, r);
        }
    }
    unreachable!("the maximizer's coin has probability 1")
}

/// Intermediate algorithm A: add exponential noise, collect every index
/// whose noisy score reaches `q*`, return one of them uniformly at random.
pub fn intermediate_a(inst: &ValidatedInstance, rng: &mut RngState) -> SelectionResult {
    intermediate_a_traced(inst, rng, None)
}

pub fn intermediate_a_traced(
    inst: &ValidatedInstance,
    rng: &mut RngState,
    mut trace: Option<&mut Trace>,
) -> SelectionResult {
    let values = noisy_gaps(inst, NoiseFamily::Exponential, rng, trace.as_deref_mut());
    let candidates: Vec<usize> = (0..inst.k()).filter(|&i| values[i] >= 0.0).collect();
    assert!(
        !candidates.is_empty(),
        "candidate set is empty: the maximizer's noisy score is below q*"
    );
    let index = candidates[rng.index(candidates.len())];
    if let Some(t) = trace {
        t.candidates = candidates;
    }
    SelectionResult::new(inst, index)
}

/// Intermediate algorithm B: cap noisy scores at `q*`, draw a second
/// exponential `z_i` for every index, and return the capped index with the
/// largest `v_i^⊤ + z_i`.
pub fn intermediate_b(inst: &ValidatedInstance, rng: &mut RngState) -> SelectionResult {
    intermediate_b_traced(inst, rng, None)
}

pub fn intermediate_b_traced(
    inst: &ValidatedInstance,
    rng: &mut RngState,
    trace: Option<&mut Trace>,
) -> SelectionResult {
    let kind = noise_for(inst, NoiseFamily::Exponential);
    let k = inst.k();
    // gap frame: the cap q* becomes 0
    let mut capped = Vec::with_capacity(k);
    let mut tiebreak = Vec::with_capacity(k);
    for &g in inst.gaps() {
        capped.push((g + kind.sample(rng)).min(0.0));
        tiebreak.push(kind.sample(rng));
    }
    let candidates: Vec<usize> = (0..k).filter(|&i| capped[i] == 0.0).collect();
    assert!(
        !candidates.is_empty(),
        "capped candidate set is empty: the maximizer was capped below q*"
    );
    let mut best = candidates[0];
    for &i in &candidates[1..] {
        if capped[i] + tiebreak[i] > capped[best] + tiebreak[best] {
            best = i;
        }
    }
    if let Some(t) = trace {
        let q_star = inst.q_star();
        t.noisy = capped.iter().map(|c| q_star + c).collect();
        t.tiebreak = tiebreak;
        t.candidates = candidates;
    }
    SelectionResult::new(inst, best)
}

/// Argmax of `noisy_values` (ties toward the smallest index) and the gap to
/// the second-largest value. The maximum itself is deliberately not
/// returned: releasing it costs extra privacy budget, the gap does not.
pub fn argmax_with_gap(noisy_values: &[f64]) -> Result<ArgmaxGap, MechanismError> {
    if noisy_values.is_empty() {
        return Err(MechanismError::EmptySequence);
    }
    if let Some(i) = noisy_values.iter().position(|v| !v.is_finite()) {
        return Err(MechanismError::NonFiniteValue(i));
    }
    let index = argmax(noisy_values);
    let runner_up = noisy_values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if runner_up == f64::NEG_INFINITY {
        ArgmaxGap {
            index,
            gap: 0.0,
            unopposed: true,
        }
    } else {
        ArgmaxGap {
            index,
            gap: noisy_values[index] - runner_up,
            unopposed: false,
        }
    })
}

/// Report Noisy Max that also releases the noisy gap between winner and
/// runner-up. Uses exactly the draws of [`report_noisy_max`], so the same
/// seed picks the same index.
pub fn report_noisy_max_with_gap(
    inst: &ValidatedInstance,
    family: NoiseFamily,
    rng: &mut RngState,
) -> Result<GapResult, MechanismError> {
    if inst.k() < 2 {
        return Err(MechanismError::NeedAtLeastTwoOutcomes(inst.k()));
    }
    let values = noisy_gaps(inst, family, rng, None);
    let ArgmaxGap { index, gap, .. } = argmax_with_gap(&values)?;
    Ok(GapResult {
        index,
        label: inst.labels()[index].clone(),
        gap,
    })
}

/// Closed set of mechanisms selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    PermuteAndFlip,
    RnmExponential,
    RnmLaplace,
    RnmGumbel,
    Exponential,
    IntermediateA,
    IntermediateB,
}

impl Mechanism {
    pub const ALL: [Mechanism; 7] = [
        Mechanism::PermuteAndFlip,
        Mechanism::RnmExponential,
        Mechanism::RnmLaplace,
        Mechanism::RnmGumbel,
        Mechanism::Exponential,
        Mechanism::IntermediateA,
        Mechanism::IntermediateB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::PermuteAndFlip => "pf",
            Mechanism::RnmExponential => "rnm-expo",
            Mechanism::RnmLaplace => "rnm-laplace",
            Mechanism::RnmGumbel => "rnm-gumbel",
            Mechanism::Exponential => "em",
            Mechanism::IntermediateA => "alg-a",
            Mechanism::IntermediateB => "alg-b",
        }
    }

    /// Noise family for the Report Noisy Max variants.
    pub fn noise_family(self) -> Option<NoiseFamily> {
        match self {
            Mechanism::RnmExponential => Some(NoiseFamily::Exponential),
            Mechanism::RnmLaplace => Some(NoiseFamily::Laplace),
            Mechanism::RnmGumbel => Some(NoiseFamily::Gumbel),
            _ => None,
        }
    }

    pub fn run(self, inst: &ValidatedInstance, rng: &mut RngState) -> SelectionResult {
        self.run_traced(inst, rng, None)
    }

    pub fn run_traced(
        self,
        inst: &ValidatedInstance,
        rng: &mut RngState,
        trace: Option<&mut Trace>,
    ) -> SelectionResult {
        match self {
            Mechanism::PermuteAndFlip => permute_and_flip_traced(inst, rng, trace),
            Mechanism::RnmExponential => {
                report_noisy_max_traced(inst, NoiseFamily::Exponential, rng, trace)
            }
            Mechanism::RnmLaplace => report_noisy_max_traced(inst, NoiseFamily::Laplace, rng, trace),
            Mechanism::RnmGumbel => report_noisy_max_traced(inst, NoiseFamily::Gumbel, rng, trace),
            Mechanism::Exponential => exponential_mechanism(inst, rng),
            Mechanism::IntermediateA => intermediate_a_traced(inst, rng, trace),
            Mechanism::IntermediateB => intermediate_b_traced(inst, rng, trace),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MechanismError::UnknownMechanism(s.to_string()))
    }
}
