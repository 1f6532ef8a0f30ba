//! Exact checks of `(r, s)`-robustness with `l` hops and of the partition
//! conditions NC and SC.
//!
//! A node `i` of a set `V1` is `r`-reachable with `l` hops with respect to a
//! suspect set `F` when it has `r` paths of at most `l` hops that start at
//! distinct nodes outside `V1`, share no node except `i`, and have no `F`
//! node in an intermediate position. Intermediate nodes may lie inside `V1`.
//!
//! All searches are exhaustive over node subsets (bitmasks), so they are
//! meant for graphs of a dozen or so nodes.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::disjoint_paths_from_set;
use crate::graph::{subsets_of_size, Graph, NodeId};

/// Largest graph the subset enumerations accept without `force`.
pub const MAX_NODES: usize = 14;
/// Largest graph accepted with `f >= 2` without `force`.
pub const MAX_NODES_MULTI_FAULT: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RobustnessError {
    #[error("node {node} is not in V1")]
    NodeNotInSet { node: NodeId },
    #[error("graph with {n} nodes and f = {f} exceeds the exhaustive-search limit; pass force to override")]
    TooLarge { n: usize, f: usize },
    #[error("graph with {0} nodes cannot be encoded as 64-bit node masks")]
    TooManyNodes(usize),
    #[error("s must be at least 1")]
    ZeroS,
}

type Mask = u64;

fn mask_of(nodes: impl IntoIterator<Item = NodeId>) -> Mask {
    nodes.into_iter().fold(0, |m, v| m | (1 << v))
}

fn nodes_of(mask: Mask) -> BTreeSet<NodeId> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

fn check_size(n: usize, f: usize, force: bool) -> Result<(), RobustnessError> {
    if n > 63 {
        return Err(RobustnessError::TooManyNodes(n));
    }
    if !force && (n > MAX_NODES || (n > MAX_NODES_MULTI_FAULT && f >= 2)) {
        return Err(RobustnessError::TooLarge { n, f });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct CandPath {
    source: NodeId,
    /// Every node except the destination.
    body: Mask,
    intermediates: Mask,
    last_hop: NodeId,
}

/// Precomputed simple in-paths of at most `hops` hops for every node.
pub struct ReachabilityOracle<'g> {
    g: &'g Graph,
    hops: usize,
    cands: Vec<Vec<CandPath>>,
}

impl<'g> ReachabilityOracle<'g> {
    pub fn new(g: &'g Graph, hops: usize) -> Self {
        assert!(g.n() <= 63, "node masks hold at most 63 nodes");
        let cands = (0..g.n())
            .map(|i| {
                g.enumerate_in_paths(i, hops)
                    .into_iter()
                    .map(|p| {
                        let nodes = p.nodes();
                        CandPath {
                            source: p.source(),
                            body: mask_of(nodes[..nodes.len() - 1].iter().copied()),
                            intermediates: mask_of(p.intermediates().iter().copied()),
                            last_hop: nodes[nodes.len() - 2],
                        }
                    })
                    .collect()
            })
            .collect();
        ReachabilityOracle { g, hops, cands }
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    /// Maximum number of independent paths into `i` from outside `v1`
    /// avoiding `f_set` intermediates, stopping early once `cap` is reached.
    fn count(&self, v1: Mask, i: NodeId, f_set: Mask, cap: usize) -> usize {
        if self.hops == 1 {
            return self.g
                .in_neighbors(i)
                .iter()
                .filter(|&&j| v1 >> j & 1 == 0)
                .count()
                .min(cap);
        }
        // Group usable paths by their last hop; at most one path per group.
        let mut groups: Vec<Vec<Mask>> = Vec::new();
        let mut group_of: Vec<Option<usize>> = vec![None; self.g.n()];
        for c in &self.cands[i] {
            if v1 >> c.source & 1 == 1 || c.intermediates & f_set != 0 {
                continue;
            }
            let gi = *group_of[c.last_hop].get_or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[gi].push(c.body);
        }
        for grp in &mut groups {
            // drop bodies that strictly contain another body of the group
            grp.sort_by_key(|b| b.count_ones());
            let mut minimal: Vec<Mask> = Vec::with_capacity(grp.len());
            for &b in grp.iter() {
                if !minimal.iter().any(|&m| m & b == m) {
                    minimal.push(b);
                }
            }
            *grp = minimal;
        }
        groups.sort_by_key(|g| g.len());
        let cap = cap.min(groups.len());
        let mut best = 0;
        pack(&groups, 0, 0, 0, cap, &mut best);
        best
    }

    /// Maximum number of independent paths into `i` from outside `v1`.
    pub fn max_independent_paths(
        &self,
        v1: &BTreeSet<NodeId>,
        i: NodeId,
        f_set: &BTreeSet<NodeId>,
    ) -> Result<usize, RobustnessError> {
        if !v1.contains(&i) {
            return Err(RobustnessError::NodeNotInSet { node: i });
        }
        Ok(self.count(mask_of(v1.iter().copied()), i, mask_of(f_set.iter().copied()), usize::MAX))
    }

    /// Independent-path counts for every nonempty `V1` and every `i` in it,
    /// with respect to `f_set`, capped at `cap`.
    pub fn table(&self, f_set: &BTreeSet<NodeId>, cap: usize) -> ReachTable {
        let n = self.g.n();
        let f_mask = mask_of(f_set.iter().copied());
        let cap = cap.min(u8::MAX as usize);
        let counts: Vec<u8> = (0..(1usize << n) * n)
            .into_par_iter()
            .map(|idx| {
                let (v1, i) = ((idx / n) as Mask, idx % n);
                if v1 >> i & 1 == 0 {
                    0
                } else {
                    self.count(v1, i, f_mask, cap) as u8
                }
            })
            .collect();
        ReachTable {
            n,
            f_set: f_mask,
            counts,
        }
    }
}

fn pack(groups: &[Vec<Mask>], idx: usize, used: Mask, count: usize, cap: usize, best: &mut usize) {
    if count > *best {
        *best = count;
    }
    if *best >= cap || idx == groups.len() || count + (groups.len() - idx) <= *best {
        return;
    }
    for &body in &groups[idx] {
        if body & used == 0 {
            pack(groups, idx + 1, used | body, count + 1, cap, best);
            if *best >= cap {
                return;
            }
        }
    }
    pack(groups, idx + 1, used, count, cap, best);
}

/// Independent-path counts for one suspect set.
pub struct ReachTable {
    n: usize,
    f_set: Mask,
    counts: Vec<u8>,
}

/// Per-`V1` summary for a fixed `r`: `Z^r` and whether `Z^r = V1`.
struct ReachSummary {
    z: Vec<Mask>,
}

impl ReachSummary {
    fn full(&self, v: Mask) -> bool {
        self.z[v as usize] == v
    }

    fn size(&self, v: Mask) -> usize {
        self.z[v as usize].count_ones() as usize
    }
}

impl ReachTable {
    pub fn count(&self, v1: &BTreeSet<NodeId>, i: NodeId) -> usize {
        self.counts[mask_of(v1.iter().copied()) as usize * self.n + i] as usize
    }

    fn summary(&self, r: usize) -> ReachSummary {
        let n = self.n;
        let z = (0..1usize << n)
            .map(|v1| {
                (0..n)
                    .filter(|&i| v1 >> i & 1 == 1 && self.counts[v1 * n + i] as usize >= r)
                    .fold(0, |m, i| m | (1 << i))
            })
            .collect();
        ReachSummary { z }
    }

    /// First pair violating `(r, s)`-robustness, in (V1, V2) mask order.
    fn first_violation(&self, r: usize, s: usize) -> Option<(Mask, Mask, Mask, Mask)> {
        let sum = self.summary(r);
        self.scan_pairs(&sum, |z1, z2| z1 + z2 < s)
            .map(|(v1, v2)| (v1, v2, sum.z[v1 as usize], sum.z[v2 as usize]))
    }

    /// The largest `s` for which the graph is `(r, s)`-robust with respect
    /// to this table's suspect set; `None` means every `s` works.
    pub fn max_s(&self, r: usize) -> Option<usize> {
        let sum = self.summary(r);
        let mut best: Option<usize> = None;
        self.scan_pairs(&sum, |z1, z2| {
            let s = z1 + z2;
            if best.is_none_or(|b| s < b) {
                best = Some(s);
            }
            false
        });
        best
    }

    /// Visits unordered pairs of nonempty disjoint sets where neither side is
    /// fully reachable, stopping at the first pair for which `stop` is true.
    fn scan_pairs(
        &self,
        sum: &ReachSummary,
        mut stop: impl FnMut(usize, usize) -> bool,
    ) -> Option<(Mask, Mask)> {
        let all: Mask = (1 << self.n) - 1;
        for v1 in 1..=all {
            if sum.full(v1) {
                continue;
            }
            let low1 = v1.trailing_zeros();
            let comp = all & !v1;
            // V2 ranges over nonempty submasks of the complement whose
            // lowest node is above V1's lowest node.
            let mut v2: Mask = 0;
            loop {
                v2 = (v2.wrapping_sub(comp)) & comp;
                if v2 == 0 {
                    break;
                }
                if v2.trailing_zeros() < low1 || sum.full(v2) {
                    continue;
                }
                if stop(sum.size(v1), sum.size(v2)) {
                    return Some((v1, v2));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessWitness {
    pub v1: BTreeSet<NodeId>,
    pub v2: BTreeSet<NodeId>,
    pub f_set: BTreeSet<NodeId>,
    /// `r`-reachable nodes of `v1`.
    pub z1: BTreeSet<NodeId>,
    /// `r`-reachable nodes of `v2`.
    pub z2: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub verdict: bool,
    pub witness: Option<RobustnessWitness>,
}

impl RobustnessReport {
    fn holds() -> Self {
        RobustnessReport {
            verdict: true,
            witness: None,
        }
    }
}

/// Maximum number of independent `<= hops`-hop paths into `i` from outside
/// `v1` with no intermediate node in `f_set`.
pub fn max_independent_paths(
    g: &Graph,
    v1: &BTreeSet<NodeId>,
    i: NodeId,
    hops: usize,
    f_set: &BTreeSet<NodeId>,
) -> Result<usize, RobustnessError> {
    check_size(g.n(), 0, true)?;
    ReachabilityOracle::new(g, hops).max_independent_paths(v1, i, f_set)
}

fn report_from(table_f: Mask, hit: Option<(Mask, Mask, Mask, Mask)>) -> RobustnessReport {
    match hit {
        None => RobustnessReport::holds(),
        Some((v1, v2, z1, z2)) => RobustnessReport {
            verdict: false,
            witness: Some(RobustnessWitness {
                v1: nodes_of(v1),
                v2: nodes_of(v2),
                f_set: nodes_of(table_f),
                z1: nodes_of(z1),
                z2: nodes_of(z2),
            }),
        },
    }
}

/// `(r, s)`-robustness with `hops` hops with respect to one suspect set.
pub fn is_rs_robust_wrt(
    g: &Graph,
    r: usize,
    s: usize,
    hops: usize,
    f_set: &BTreeSet<NodeId>,
    force: bool,
) -> Result<RobustnessReport, RobustnessError> {
    if s == 0 {
        return Err(RobustnessError::ZeroS);
    }
    check_size(g.n(), f_set.len(), force)?;
    let oracle = ReachabilityOracle::new(g, hops);
    let table = oracle.table(f_set, r);
    Ok(report_from(table.f_set, table.first_violation(r, s)))
}

/// Every suspect set of at most `f` nodes, by size then lexicographically.
pub fn suspect_sets(n: usize, f: usize) -> Vec<BTreeSet<NodeId>> {
    (0..=f.min(n))
        .flat_map(|k| subsets_of_size(n, k))
        .map(|s| s.into_iter().collect())
        .collect()
}

/// `(r, s)`-robustness with `hops` hops under the `f`-total model: the
/// conjunction over every suspect set of at most `f` nodes. The witness is
/// the first violation in suspect-set order.
pub fn is_rs_robust(
    g: &Graph,
    r: usize,
    s: usize,
    hops: usize,
    f: usize,
    force: bool,
) -> Result<RobustnessReport, RobustnessError> {
    if s == 0 {
        return Err(RobustnessError::ZeroS);
    }
    check_size(g.n(), f, force)?;
    let oracle = ReachabilityOracle::new(g, hops);
    let first = suspect_sets(g.n(), f).into_par_iter().find_map_first(|f_set| {
        let table = oracle.table(&f_set, r);
        table
            .first_violation(r, s)
            .map(|hit| report_from(table.f_set, Some(hit)))
    });
    Ok(first.unwrap_or_else(RobustnessReport::holds))
}

/// Robustness profile of a graph for fixed `hops` and `f`: for each `r` the
/// largest `s` it is `(r, s)`-robust for. Built from one reachability table
/// per suspect set, so many `(r, s)` queries share the expensive part.
pub struct RobustnessProfile {
    n: usize,
    /// `max_s[r]`, `None` meaning unbounded.
    max_s: Vec<Option<usize>>,
}

impl RobustnessProfile {
    pub fn new(oracle: &ReachabilityOracle<'_>, f: usize, max_r: usize) -> Self {
        let n = oracle.graph().n();
        let tables: Vec<ReachTable> = suspect_sets(n, f)
            .iter()
            .map(|f_set| oracle.table(f_set, max_r))
            .collect();
        let max_s = (0..=max_r)
            .map(|r| {
                tables
                    .iter()
                    .filter_map(|t| t.max_s(r))
                    .min()
            })
            .collect();
        RobustnessProfile { n, max_s }
    }

    /// Whether the graph is `(r, s)`-robust; `r` beyond the profile's range
    /// is answered conservatively as not robust.
    pub fn is_robust(&self, r: usize, s: usize) -> bool {
        match self.max_s.get(r) {
            Some(None) => true,
            Some(Some(max)) => s <= *max,
            None => false,
        }
    }

    /// Largest `r` with `(r, 1)`-robustness.
    pub fn max_r(&self) -> usize {
        (0..self.max_s.len())
            .rev()
            .find(|&r| self.is_robust(r, 1))
            .unwrap_or(0)
            .min(self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionWitness {
    pub left: BTreeSet<NodeId>,
    pub center: BTreeSet<NodeId>,
    pub right: BTreeSet<NodeId>,
    pub f_set: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub witness: Option<PartitionWitness>,
}

/// Condition NC: for every partition `(L, C, R)` and suspect set `F` with
/// `|F| <= f` leaving `L \ F` and `R \ F` nonempty, either `R ∪ C` holds at
/// least `f + 1` distinct in-neighbors of `L \ F`, or `L ∪ C` does of `R \ F`.
pub fn condition_nc(g: &Graph, f: usize) -> Result<ConditionReport, RobustnessError> {
    let n = g.n();
    check_size(n, f, false)?;
    let in_mask: Vec<Mask> = (0..n).map(|v| mask_of(g.in_neighbors(v).iter().copied())).collect();
    let in_of = |y: Mask| -> Mask {
        (0..n)
            .filter(|&v| y >> v & 1 == 1)
            .fold(0, |m, v| m | in_mask[v])
    };
    let arrow = |x: Mask, y: Mask| (x & in_of(y)).count_ones() as usize > f;
    let all: Mask = (1 << n) - 1;
    let f_sets: Vec<Mask> = suspect_sets(n, f).iter().map(|s| mask_of(s.iter().copied())).collect();
    for left in 1..=all {
        let rest = all & !left;
        let mut right: Mask = 0;
        loop {
            right = right.wrapping_sub(rest) & rest;
            if right == 0 {
                break;
            }
            if right.trailing_zeros() < left.trailing_zeros() {
                continue;
            }
            let center = rest & !right;
            for &fm in &f_sets {
                let (l_rest, r_rest) = (left & !fm, right & !fm);
                if l_rest == 0 || r_rest == 0 {
                    continue;
                }
                if !arrow(right | center, l_rest) && !arrow(left | center, r_rest) {
                    return Ok(ConditionReport {
                        holds: false,
                        witness: Some(PartitionWitness {
                            left: nodes_of(left),
                            center: nodes_of(center),
                            right: nodes_of(right),
                            f_set: nodes_of(fm),
                        }),
                    });
                }
            }
        }
    }
    Ok(ConditionReport {
        holds: true,
        witness: None,
    })
}

/// Condition SC: for every bipartition `(L, R)` and suspect set `F` with
/// `|F| <= f` leaving `L \ F` and `R \ F` nonempty, every node of `R \ F` has
/// `f + 1` paths from distinct nodes of `L` sharing only that node and with
/// no `F` intermediates (paths of any length), or the same holds with `L`
/// and `R` swapped.
pub fn condition_sc(g: &Graph, f: usize) -> Result<ConditionReport, RobustnessError> {
    let n = g.n();
    check_size(n, f, false)?;
    let all: Mask = (1 << n) - 1;
    let f_sets: Vec<BTreeSet<NodeId>> = suspect_sets(n, f);
    let reaches = |from: Mask, to: Mask, f_set: &BTreeSet<NodeId>| {
        let sources = nodes_of(from);
        nodes_of(to)
            .into_iter()
            .all(|u| disjoint_paths_from_set(g, &sources, u, f_set) > f)
    };
    for left in 1..all {
        let right = all & !left;
        if right.trailing_zeros() < left.trailing_zeros() {
            continue;
        }
        for f_set in &f_sets {
            let fm = mask_of(f_set.iter().copied());
            let (l_rest, r_rest) = (left & !fm, right & !fm);
            if l_rest == 0 || r_rest == 0 {
                continue;
            }
            if !reaches(left, r_rest, f_set) && !reaches(right, l_rest, f_set) {
                return Ok(ConditionReport {
                    holds: false,
                    witness: Some(PartitionWitness {
                        left: nodes_of(left),
                        center: BTreeSet::new(),
                        right: nodes_of(right),
                        f_set: f_set.clone(),
                    }),
                });
            }
        }
    }
    Ok(ConditionReport {
        holds: true,
        witness: None,
    })
}

/// Re-checks a reported violation from scratch: for the witness pair, none of
/// the three robustness conditions may hold.
pub fn witness_is_violation(
    g: &Graph,
    r: usize,
    s: usize,
    hops: usize,
    w: &RobustnessWitness,
) -> bool {
    let oracle = ReachabilityOracle::new(g, hops);
    let reachable = |set: &BTreeSet<NodeId>| -> BTreeSet<NodeId> {
        set.iter()
            .copied()
            .filter(|&i| oracle.max_independent_paths(set, i, &w.f_set).unwrap() >= r)
            .collect()
    };
    let (z1, z2) = (reachable(&w.v1), reachable(&w.v2));
    !w.v1.is_empty()
        && !w.v2.is_empty()
        && w.v1.is_disjoint(&w.v2)
        && z1 != w.v1
        && z2 != w.v2
        && z1.len() + z2.len() < s
        && z1 == w.z1
        && z2 == w.z2
}

/// Candidate six-node digraphs for the async fixture: nodes split into the
/// triples {0, 2, 4} and {1, 3, 5}, each triple complete, plus exactly one
/// in-edge per node from the other triple. Such a graph is never 2-robust
/// with one hop (each triple sees at most one outside in-neighbor per node),
/// and the cross edges decide multi-hop robustness. Yields `(code, graph)`
/// in code order.
pub fn fixture_candidates() -> impl Iterator<Item = (usize, Graph)> {
    const A: [NodeId; 3] = [0, 2, 4];
    const B: [NodeId; 3] = [1, 3, 5];
    (0..729usize).map(|code| {
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        for t in [A, B] {
            for &x in &t {
                pairs.extend(t.iter().filter(|&&y| y != x).map(|&y| (x, y)));
            }
        }
        let mut c = code;
        for v in 0..6 {
            let other = if v % 2 == 0 { B } else { A };
            pairs.push((other[c % 3], v));
            c /= 3;
        }
        (code, Graph::from_edges(6, pairs, true).expect("ids are in range"))
    })
}

/// First candidate (in code order) containing `required` edges that is not
/// 2-robust with one hop but is 3-robust with two hops under the `f`-total
/// model.
pub fn discover_fixture(f: usize, required: &[(NodeId, NodeId)]) -> Option<(usize, Graph)> {
    fixture_candidates().find(|(_, g)| {
        required.iter().all(|&(a, b)| g.has_edge(a, b))
            && !is_rs_robust(g, 2, 1, 1, f, false).expect("six nodes").verdict
            && is_rs_robust(g, 3, 1, 2, f, false).expect("six nodes").verdict
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Generator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FIG1A: &str = "undirected 5\n1 2\n1 3\n1 5\n2 4\n3 4\n4 5\n";

    fn set(nodes: &[usize]) -> BTreeSet<NodeId> {
        nodes.iter().map(|v| v - 1).collect()
    }

    fn c4() -> Graph {
        Graph::generate(Generator::Cycle(4)).unwrap()
    }

    /// Independent oracle: plain include/exclude search over every usable
    /// path, no grouping or dominance pruning.
    fn brute_force_paths(g: &Graph, v1: &BTreeSet<NodeId>, i: NodeId, hops: usize, f_set: &BTreeSet<NodeId>) -> usize {
        let cands: Vec<Vec<NodeId>> = g
            .enumerate_in_paths(i, hops)
            .into_iter()
            .filter(|p| !v1.contains(&p.source()) && p.intermediates().iter().all(|v| !f_set.contains(v)))
            .map(|p| p.nodes()[..p.nodes().len() - 1].to_vec())
            .collect();
        fn go(cands: &[Vec<NodeId>], used: &mut BTreeSet<NodeId>) -> usize {
            let Some((first, rest)) = cands.split_first() else { return 0 };
            let skip = go(rest, used);
            if first.iter().any(|v| used.contains(v)) {
                return skip;
            }
            used.extend(first.iter().copied());
            let take = 1 + go(rest, used);
            for v in first {
                used.remove(v);
            }
            skip.max(take)
        }
        go(&cands, &mut BTreeSet::new())
    }

    #[test]
    fn independent_paths_fig1a() {
        let g = Graph::parse(FIG1A).unwrap();
        assert_eq!(max_independent_paths(&g, &set(&[1, 2]), 0, 2, &BTreeSet::new()).unwrap(), 3);
        assert_eq!(max_independent_paths(&g, &set(&[1, 2]), 0, 2, &set(&[3])).unwrap(), 3);
        assert_eq!(brute_force_paths(&g, &set(&[1, 2]), 0, 2, &BTreeSet::new()), 3);
        assert_eq!(
            max_independent_paths(&g, &set(&[2]), 0, 1, &BTreeSet::new()),
            Err(RobustnessError::NodeNotInSet { node: 0 })
        );
        let lonely = Graph::parse("directed 3\n1 2\n").unwrap();
        assert_eq!(max_independent_paths(&lonely, &set(&[1]), 0, 2, &BTreeSet::new()).unwrap(), 0);
    }

    #[test]
    fn independent_paths_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(3..=6);
            let pairs: Vec<_> = (0..n)
                .flat_map(|j| (0..n).map(move |i| (j, i)))
                .filter(|(j, i)| j != i)
                .filter(|_| rng.gen_bool(0.45))
                .collect();
            let g = Graph::from_edges(n, pairs, true).unwrap();
            for hops in 1..=3 {
                let oracle = ReachabilityOracle::new(&g, hops);
                for v1m in 1u64..(1 << n) {
                    let v1 = nodes_of(v1m);
                    let f_set: BTreeSet<NodeId> = [rng.gen_range(0..n)].into();
                    for &i in &v1 {
                        assert_eq!(
                            oracle.max_independent_paths(&v1, i, &f_set).unwrap(),
                            brute_force_paths(&g, &v1, i, hops, &f_set)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn c4_fixtures() {
        let r = is_rs_robust_wrt(&c4(), 2, 2, 1, &set(&[1]), false).unwrap();
        assert!(!r.verdict);
        let w = r.witness.unwrap();
        assert!(witness_is_violation(&c4(), 2, 2, 1, &w));
        assert!(is_rs_robust_wrt(&c4(), 2, 2, 2, &set(&[1]), false).unwrap().verdict);
        assert!(is_rs_robust(&c4(), 2, 2, 2, 1, false).unwrap().verdict);
        assert!(!is_rs_robust(&c4(), 2, 2, 1, 1, false).unwrap().verdict);
    }

    #[test]
    fn c4_one_hop_has_the_halves_as_a_violation() {
        let g = c4();
        let oracle = ReachabilityOracle::new(&g, 1);
        let table = oracle.table(&set(&[1]), 2);
        // {1,2} vs {3,4}: no node has two in-neighbors outside its half
        for half in [set(&[1, 2]), set(&[3, 4])] {
            for &i in &half {
                assert_eq!(table.count(&half, i), 1);
            }
        }
    }

    #[test]
    fn r_zero_is_always_robust() {
        let g = Graph::parse("directed 4\n1 2\n").unwrap();
        assert!(is_rs_robust(&g, 0, 1, 1, 1, false).unwrap().verdict);
        assert_eq!(is_rs_robust(&g, 0, 0, 1, 1, false), Err(RobustnessError::ZeroS));
    }

    #[test]
    fn complete_graphs() {
        let k5 = Graph::generate(Generator::Complete(5)).unwrap();
        for hops in 1..=2 {
            assert!(is_rs_robust(&k5, 3, 1, hops, 2, false).unwrap().verdict);
            assert!(!is_rs_robust(&k5, 4, 1, hops, 2, false).unwrap().verdict);
        }
    }

    #[test]
    fn guardrail() {
        let big = Graph::generate(Generator::Cycle(15)).unwrap();
        assert_eq!(
            is_rs_robust(&big, 2, 2, 1, 1, false),
            Err(RobustnessError::TooLarge { n: 15, f: 1 })
        );
        let mid = Graph::generate(Generator::Cycle(11)).unwrap();
        assert!(is_rs_robust(&mid, 2, 2, 1, 2, false).is_err());
        assert!(is_rs_robust(&mid, 2, 2, 1, 1, false).is_ok());
    }

    #[test]
    fn profile_agrees_with_direct_check() {
        let g = Graph::parse(FIG1A).unwrap();
        for hops in 1..=3 {
            let oracle = ReachabilityOracle::new(&g, hops);
            for f in 0..=2 {
                let profile = RobustnessProfile::new(&oracle, f, 4);
                for r in 0..=4 {
                    for s in 1..=5 {
                        assert_eq!(
                            profile.is_robust(r, s),
                            is_rs_robust(&g, r, s, hops, f, false).unwrap().verdict,
                            "r={r} s={s} hops={hops} f={f}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn nc_and_sc_examples() {
        let path3 = Graph::parse("undirected 3\n1 2\n2 3\n").unwrap();
        let k4 = Graph::generate(Generator::Complete(4)).unwrap();
        assert!(condition_nc(&c4(), 1).unwrap().holds);
        assert!(condition_sc(&c4(), 1).unwrap().holds);
        assert!(!condition_nc(&path3, 1).unwrap().holds);
        assert!(!condition_sc(&path3, 1).unwrap().holds);
        assert!(condition_nc(&k4, 1).unwrap().holds);
        assert!(condition_sc(&k4, 1).unwrap().holds);
        let edge = Graph::parse("undirected 2\n1 2\n").unwrap();
        assert!(condition_sc(&edge, 0).unwrap().holds);
        assert!(condition_nc(&edge, 0).unwrap().holds);
    }

    #[test]
    fn suspect_set_order() {
        let sets = suspect_sets(3, 2);
        assert_eq!(sets.len(), 7);
        assert!(sets[0].is_empty());
        assert_eq!(sets[1], [0].into());
        assert_eq!(sets[6], [1, 2].into());
    }
}
