//! Relayed messages, minimum message covers, and classification of path
//! anomalies (duplicated, unknown or missing paths).
//!
//! A message cover of a message set is a node set meeting every message
//! path. The receiving node itself is never a cover candidate, while the
//! originator is.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Path};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MessagingError {
    #[error("destination {0} cannot be part of a cover candidate set")]
    DestinationInCandidate(NodeId),
    #[error("message on path {path:?} is not addressed to node {dest}")]
    WrongDestination { path: Vec<NodeId>, dest: NodeId },
}

/// A value relayed along a path; the originator is the path source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub value: f64,
    pub path: Path,
}

impl Message {
    pub fn new(value: f64, path: Path) -> Self {
        Message { value, path }
    }

    pub fn own(value: f64, node: NodeId) -> Self {
        Message::new(value, Path::trivial(node))
    }

    pub fn originator(&self) -> NodeId {
        self.path.source()
    }

    pub fn dest(&self) -> NodeId {
        self.path.dest()
    }
}

/// Total order used everywhere a deterministic message order is needed:
/// value, then originator, then the node sequence of the path.
pub fn canonical_cmp(a: &Message, b: &Message) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then_with(|| a.originator().cmp(&b.originator()))
        .then_with(|| a.path.nodes().cmp(b.path.nodes()))
}

/// One line of a message log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedMessage {
    pub step: u64,
    pub value: f64,
    pub path: Path,
    pub originator: NodeId,
}

impl LoggedMessage {
    pub fn new(step: u64, msg: &Message) -> Self {
        LoggedMessage {
            step,
            value: msg.value,
            path: msg.path.clone(),
            originator: msg.originator(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    /// Minimum cover size; when `capped` this is `bound + 1`, a lower bound.
    pub size: usize,
    /// A minimum cover (empty when capped).
    pub witness: BTreeSet<NodeId>,
    /// The search stopped after proving the minimum exceeds the bound.
    pub capped: bool,
}

/// Whether `cand` meets every message path.
pub fn is_cover(
    msgs: &[Message],
    cand: &BTreeSet<NodeId>,
    dest: NodeId,
) -> Result<bool, MessagingError> {
    if cand.contains(&dest) {
        return Err(MessagingError::DestinationInCandidate(dest));
    }
    check_destinations(msgs, dest)?;
    Ok(msgs
        .iter()
        .all(|m| m.path.nodes().iter().any(|v| cand.contains(v))))
}

fn check_destinations(msgs: &[Message], dest: NodeId) -> Result<(), MessagingError> {
    match msgs.iter().find(|m| m.dest() != dest) {
        Some(m) => Err(MessagingError::WrongDestination {
            path: m.path.nodes().to_vec(),
            dest,
        }),
        None => Ok(()),
    }
}

/// Exact minimum message cover, searched for sizes `0..=bound`.
///
/// Candidates are the path nodes other than `dest`. Messages whose path is
/// the trivial `[dest]` carry no candidate and are ignored.
pub fn minimum_cover_size(msgs: &[Message], dest: NodeId, bound: usize) -> CoverResult {
    let found = |witness: BTreeSet<NodeId>| CoverResult {
        size: witness.len(),
        witness,
        capped: false,
    };
    if let Some(masks) = path_masks(msgs.iter().map(|m| m.path.nodes()), dest) {
        let sets = reduce_masks(&masks);
        for k in 0..=bound {
            let mut chosen = 0;
            if mask_search(&sets, k, &mut chosen) {
                return found((0..128).filter(|b| chosen >> b & 1 == 1).collect());
            }
        }
    } else {
        let mut solver = HittingSet::new(candidate_sets(msgs.iter().map(|m| m.path.nodes()), dest));
        for k in 0..=bound {
            if let Some(witness) = solver.solve_within(k) {
                return found(witness.into_iter().collect());
            }
        }
    }
    CoverResult {
        size: bound + 1,
        witness: BTreeSet::new(),
        capped: true,
    }
}

/// Whether the messages admit a cover of at most `k` nodes.
pub fn has_cover_within<'a>(
    paths: impl IntoIterator<Item = &'a [NodeId]>,
    dest: NodeId,
    k: usize,
) -> bool {
    let paths: Vec<&[NodeId]> = paths.into_iter().collect();
    if k == 0 {
        return paths.iter().all(|p| p.iter().all(|&v| v == dest));
    }
    match path_masks(paths.iter().copied(), dest) {
        Some(masks) => masks_within(&masks, k),
        None => HittingSet::new(candidate_sets(paths, dest))
            .solve_within(k)
            .is_some(),
    }
}

/// Candidate sets as 128-bit node masks, or `None` when some node id does
/// not fit. Trivial paths give an empty mask.
pub(crate) fn path_masks<'a>(paths: impl IntoIterator<Item = &'a [NodeId]>, dest: NodeId) -> Option<Vec<u128>> {
    paths
        .into_iter()
        .map(|p| {
            p.iter()
                .filter(|&&v| v != dest)
                .try_fold(0u128, |m, &v| (v < 128).then(|| m | 1 << v))
        })
        .collect()
}

/// `has_cover_within` on masks from `path_masks`.
pub(crate) fn masks_within(masks: &[u128], k: usize) -> bool {
    let mut chosen = 0;
    mask_search(&reduce_masks(masks), k, &mut chosen)
}

/// Distinct nonempty masks, smallest first, without supersets of others.
fn reduce_masks(masks: &[u128]) -> Vec<u128> {
    let mut by_size: Vec<Vec<u128>> = Vec::new();
    for &m in masks.iter().filter(|&&m| m != 0) {
        let size = m.count_ones() as usize;
        if by_size.len() < size {
            by_size.resize_with(size, Vec::new);
        }
        by_size[size - 1].push(m);
    }
    let mut singles = 0u128;
    let mut kept: Vec<u128> = Vec::with_capacity(masks.len());
    for (idx, mut bucket) in by_size.into_iter().enumerate() {
        bucket.sort_unstable();
        bucket.dedup();
        let smaller = kept.len();
        for m in bucket {
            if m & singles != 0 {
                continue;
            }
            if idx == 0 {
                singles |= m;
            } else if kept[..smaller].iter().any(|&k| k.count_ones() > 1 && k & m == k) {
                continue;
            }
            kept.push(m);
        }
    }
    kept
}

/// The bounded search of `HittingSet` on masks.
fn mask_search(sets: &[u128], budget: usize, chosen: &mut u128) -> bool {
    let mut first_unhit = None;
    let mut packing = 0usize;
    let mut used = 0u128;
    for &set in sets {
        if set & *chosen != 0 {
            continue;
        }
        first_unhit.get_or_insert(set);
        if set & used == 0 {
            used |= set;
            packing += 1;
            if packing > budget {
                return false;
            }
        }
    }
    let Some(mut branch) = first_unhit else {
        return true;
    };
    if budget == 0 {
        return false;
    }
    while branch != 0 {
        let bit = branch & branch.wrapping_neg();
        branch ^= bit;
        *chosen |= bit;
        if mask_search(sets, budget - 1, chosen) {
            return true;
        }
        *chosen ^= bit;
    }
    false
}

/// Candidate node sets, one per distinct path, with `dest` removed.
/// Supersets of other sets are dropped since hitting the subset hits them.
fn candidate_sets<'a>(
    paths: impl IntoIterator<Item = &'a [NodeId]>,
    dest: NodeId,
) -> Vec<Vec<NodeId>> {
    let mut sets: Vec<Vec<NodeId>> = paths
        .into_iter()
        .map(|p| {
            let mut s: Vec<NodeId> = p.iter().copied().filter(|&v| v != dest).collect();
            s.sort_unstable();
            s
        })
        .filter(|s| !s.is_empty())
        .collect();
    sets.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut seen: HashSet<Vec<NodeId>> = HashSet::with_capacity(sets.len());
    let mut kept = Vec::with_capacity(sets.len());
    for s in sets {
        if !has_proper_subset_in(&s, &seen) {
            seen.insert(s.clone());
            kept.push(s);
        }
    }
    kept
}

fn has_proper_subset_in(set: &[NodeId], seen: &HashSet<Vec<NodeId>>) -> bool {
    if set.len() > 16 {
        return seen.iter().any(|k| k.len() < set.len() && k.iter().all(|v| set.binary_search(v).is_ok()));
    }
    let full = (1u32 << set.len()) - 1;
    (1..full).any(|mask| {
        let sub: Vec<NodeId> = set
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        seen.contains(&sub)
    })
}

/// Bounded search tree for hitting set: pick an unhit set, branch on each
/// of its elements. Sets are small (at most `l` elements), so a budget of
/// `k` costs at most `l^k` leaves. A greedy disjoint packing gives a lower
/// bound that prunes most failing branches early.
struct HittingSet {
    /// Compact index -> node id.
    nodes: Vec<NodeId>,
    /// Sets over compact indices, and the same sets as bitsets of `words`
    /// 64-bit words each, stored back to back.
    sets: Vec<Vec<usize>>,
    masks: Vec<u64>,
    words: usize,
    chosen: Vec<usize>,
    chosen_mask: Vec<u64>,
}

fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

impl HittingSet {
    fn new(sets: Vec<Vec<NodeId>>) -> Self {
        let mut nodes: Vec<NodeId> = sets.iter().flatten().copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let words = nodes.len().div_ceil(64).max(1);
        let sets: Vec<Vec<usize>> = sets
            .iter()
            .map(|s| s.iter().map(|v| nodes.binary_search(v).expect("node listed")).collect())
            .collect();
        let mut masks = vec![0u64; sets.len() * words];
        for (idx, s) in sets.iter().enumerate() {
            for &c in s {
                masks[idx * words + c / 64] |= 1 << (c % 64);
            }
        }
        HittingSet {
            nodes,
            sets,
            masks,
            words,
            chosen: Vec::new(),
            chosen_mask: vec![0; words],
        }
    }

    fn solve_within(&mut self, k: usize) -> Option<Vec<NodeId>> {
        self.chosen.clear();
        self.chosen_mask.fill(0);
        if self.search(k) {
            let mut w: Vec<NodeId> = self.chosen.iter().map(|&c| self.nodes[c]).collect();
            w.sort_unstable();
            Some(w)
        } else {
            None
        }
    }

    fn toggle(&mut self, c: usize) {
        self.chosen_mask[c / 64] ^= 1 << (c % 64);
    }

    fn search(&mut self, budget: usize) -> bool {
        let w = self.words;
        let mut first_unhit = None;
        let mut packing = 0usize;
        let mut used = vec![0u64; w];
        for idx in 0..self.sets.len() {
            let mask = &self.masks[idx * w..(idx + 1) * w];
            if intersects(mask, &self.chosen_mask) {
                continue;
            }
            if first_unhit.is_none() {
                first_unhit = Some(idx);
            }
            if !intersects(mask, &used) {
                used.iter_mut().zip(mask).for_each(|(u, m)| *u |= m);
                packing += 1;
                if packing > budget {
                    return false;
                }
            }
        }
        let Some(idx) = first_unhit else {
            return true;
        };
        if budget == 0 {
            return false;
        }
        for pos in 0..self.sets[idx].len() {
            let c = self.sets[idx][pos];
            self.chosen.push(c);
            self.toggle(c);
            if self.search(budget - 1) {
                return true;
            }
            self.toggle(c);
            self.chosen.pop();
        }
        false
    }
}

/// Verdict for one expected path (or one unexpected arrival) at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PathAnomaly {
    Ok,
    /// More than one message on the same path in the same step.
    Duplicate,
    /// A message on a path the receiver does not expect.
    UnknownPath,
    /// Nothing arrived on an expected path (sync: this step; async: for
    /// longer than the delay bound).
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Timing {
    Sync,
    /// Normal paths deliver within `tau` steps of sending.
    Async { tau: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathVerdict {
    pub step: u64,
    pub path: Path,
    pub kind: PathAnomaly,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub verdicts: Vec<PathVerdict>,
    /// Paths with at least one non-`Ok` verdict; each carries a faulty node.
    pub implicated: BTreeSet<Path>,
    /// Expected paths flagged for frequent losses (only with a threshold).
    pub lossy: BTreeSet<Path>,
}

impl AnomalyReport {
    pub fn count(&self, kind: PathAnomaly) -> usize {
        self.verdicts.iter().filter(|v| v.kind == kind).count()
    }

    pub fn is_clean(&self) -> bool {
        self.verdicts.iter().all(|v| v.kind == PathAnomaly::Ok)
    }
}

/// Classifies a receiver's message log over the steps `first..=last`.
///
/// In async mode a path is `Missing` at step `k` when nothing arrived on it
/// during `[k - tau, k]`; steps earlier than `first + tau` are not judged
/// for missing messages. `loss_threshold`, when set, flags expected paths
/// with at least that many `Missing` verdicts as lossy.
pub fn classify_path_anomaly(
    observed: &[LoggedMessage],
    expected: &[Path],
    first: u64,
    last: u64,
    timing: Timing,
    loss_threshold: Option<usize>,
) -> AnomalyReport {
    let expected_set: BTreeSet<&Path> = expected.iter().collect();
    let mut per_step: BTreeMap<(u64, &Path), usize> = BTreeMap::new();
    for m in observed.iter().filter(|m| (first..=last).contains(&m.step)) {
        *per_step.entry((m.step, &m.path)).or_default() += 1;
    }
    let mut report = AnomalyReport::default();
    let mut missing_counts: BTreeMap<&Path, usize> = BTreeMap::new();
    let mut last_seen: BTreeMap<&Path, u64> = BTreeMap::new();
    for step in first..=last {
        for path in expected {
            let count = per_step.get(&(step, path)).copied().unwrap_or(0);
            if count > 0 {
                last_seen.insert(path, step);
            }
            let kind = match (count, timing) {
                (0, Timing::Sync) => PathAnomaly::Missing,
                (0, Timing::Async { tau }) => {
                    let window_start = step.saturating_sub(tau);
                    let seen_in_window = last_seen
                        .get(path)
                        .is_some_and(|&s| s >= window_start);
                    if step >= first + tau && !seen_in_window {
                        PathAnomaly::Missing
                    } else {
                        PathAnomaly::Ok
                    }
                }
                (1, _) => PathAnomaly::Ok,
                _ => PathAnomaly::Duplicate,
            };
            if kind == PathAnomaly::Missing {
                *missing_counts.entry(path).or_default() += 1;
            }
            report.verdicts.push(PathVerdict {
                step,
                path: path.clone(),
                kind,
            });
        }
        for (_, path) in per_step.keys().filter(|(s, _)| *s == step) {
            if !expected_set.contains(path) {
                report.verdicts.push(PathVerdict {
                    step,
                    path: (*path).clone(),
                    kind: PathAnomaly::UnknownPath,
                });
            }
        }
    }
    report.implicated = report
        .verdicts
        .iter()
        .filter(|v| v.kind != PathAnomaly::Ok)
        .map(|v| v.path.clone())
        .collect();
    if let Some(threshold) = loss_threshold {
        report.lossy = missing_counts
            .into_iter()
            .filter(|&(_, c)| c >= threshold)
            .map(|(p, _)| p.clone())
            .collect();
    }
    report
}
