//! The MW-MSR filter and update.
//!
//! A node sorts everything it received this step (plus its own value),
//! splits off the values strictly above and strictly below its own, and from
//! each side removes the longest run of most-extreme messages that at most
//! `f` nodes could have produced, i.e. whose minimum message cover has size
//! at most `f`. The survivors are averaged with equal weights.
//!
//! With one-hop paths every message has a distinct originator, so this is
//! exactly the classic W-MSR rule: drop up to `f` values above and below.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::messaging::{canonical_cmp, has_cover_within, masks_within, path_masks, Message};

#[derive(Debug, Error, PartialEq)]
pub enum UpdateError {
    #[error("weights and messages differ in length ({weights} vs {msgs})")]
    LengthMismatch { weights: usize, msgs: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("neighbor weights sum to {0} > 1")]
    WeightSum(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    /// Removed messages above the own value, most extreme first.
    pub removed_high: Vec<Message>,
    /// Removed messages below the own value, most extreme first.
    pub removed_low: Vec<Message>,
    /// Surviving messages in canonical (ascending) order; always includes
    /// the own-value message.
    pub kept: Vec<Message>,
    /// Equal weight `1 / |kept|` applied to each survivor.
    pub weight: f64,
}

/// Splits `msgs` into values strictly above and strictly below `own`, each
/// ordered from the most extreme inward (canonical order, reversed for the
/// high side).
pub fn partition_extremes(msgs: &[Message], own: f64) -> (Vec<Message>, Vec<Message>) {
    let mut sorted: Vec<Message> = msgs.to_vec();
    sorted.sort_by(canonical_cmp);
    let mut high: Vec<Message> = sorted.iter().filter(|m| m.value > own).cloned().collect();
    high.reverse();
    let low = sorted.into_iter().filter(|m| m.value < own).collect();
    (high, low)
}

/// Length of the longest prefix of `extremes` whose messages admit a cover
/// of at most `f` nodes other than `dest`.
///
/// Cover size is monotone in the prefix and grows by at most one per
/// message, so this prefix is all of `extremes` when its cover is at most
/// `f`, and otherwise the prefix just before the first one needing `f + 1`
/// nodes (whose own cover is exactly `f`).
pub fn removal_prefix_len(extremes: &[Message], f: usize, dest: NodeId) -> usize {
    let masks = path_masks(extremes.iter().map(|m| m.path.nodes()), dest);
    let fits = |len: usize| match &masks {
        Some(masks) => masks_within(&masks[..len], f),
        None => has_cover_within(extremes[..len].iter().map(|m| m.path.nodes()), dest, f),
    };
    if fits(extremes.len()) {
        return extremes.len();
    }
    // Any f messages are covered by their originators, so the answer is at
    // least min(f, len). Gallop, then bisect: fits(lo) holds, fits(hi) fails.
    let mut lo = f.min(extremes.len());
    let mut step = f.max(1);
    let mut hi = loop {
        let probe = lo + step;
        if probe >= extremes.len() {
            break extremes.len();
        }
        if fits(probe) {
            lo = probe;
            step *= 2;
        } else {
            break probe;
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// The removal set for one side: the longest most-extreme prefix of
/// `sorted_extremes` coverable by `f` nodes.
pub fn select_removal_set(sorted_extremes: &[Message], f: usize, dest: NodeId) -> Vec<Message> {
    sorted_extremes[..removal_prefix_len(sorted_extremes, f, dest)].to_vec()
}

/// One MW-MSR step for node `dest`.
///
/// `msgs` should include the own-value message on the trivial path
/// `[dest]`; it is added when missing. Messages may arrive in any order.
pub fn mwmsr_update(own: f64, msgs: &[Message], f: usize, dest: NodeId) -> (f64, FilterResult) {
    let mut all: Vec<Message> = msgs.to_vec();
    if !all.iter().any(|m| m.path.is_trivial() && m.path.source() == dest) {
        all.push(Message::own(own, dest));
    }
    all.sort_by(canonical_cmp);

    let below = all.partition_point(|m| m.value < own);
    let above = all.partition_point(|m| m.value <= own);
    let low_len = removal_prefix_len(&all[..below], f, dest);
    let high_side: Vec<Message> = all[above..].iter().rev().cloned().collect();
    let high_len = removal_prefix_len(&high_side, f, dest);

    let removed_low = all[..low_len].to_vec();
    let removed_high = high_side[..high_len].to_vec();
    let kept: Vec<Message> = all[low_len..all.len() - high_len].to_vec();
    let weight = 1.0 / kept.len() as f64;
    let new_value = mean(kept.iter().map(|m| m.value), kept.len());
    (
        new_value,
        FilterResult {
            removed_high,
            removed_low,
            kept,
            weight,
        },
    )
}

/// Sum in iteration order divided by `len`.
fn mean(values: impl Iterator<Item = f64>, len: usize) -> f64 {
    values.sum::<f64>() / len as f64
}

/// Fault-free linear consensus step: `own + sum_m w_m (value(m) - own)`.
///
/// Weights must be finite, non-negative and sum to at most one.
pub fn nominal_update(own: f64, msgs: &[Message], weights: &[f64]) -> Result<f64, UpdateError> {
    if msgs.len() != weights.len() {
        return Err(UpdateError::LengthMismatch {
            weights: weights.len(),
            msgs: msgs.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(UpdateError::BadWeight(w));
    }
    let total: f64 = weights.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(UpdateError::WeightSum(total));
    }
    Ok(own
        + msgs
            .iter()
            .zip(weights)
            .map(|(m, w)| w * (m.value - own))
            .sum::<f64>())
}
