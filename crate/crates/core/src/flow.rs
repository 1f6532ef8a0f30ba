//! Unit-capacity max-flow used for counting internally vertex-disjoint paths
//! of unbounded length (Menger).

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{Graph, NodeId};

const INF: u32 = u32::MAX / 2;

struct FlowNet {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<u32>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            head: vec![NIL; nodes],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
        }
    }

    fn add(&mut self, a: usize, b: usize, c: u32) {
        for (from, to, cap) in [(a, b, c), (b, a, 0)] {
            self.to.push(to);
            self.cap.push(cap);
            self.next.push(self.head[from]);
            self.head[from] = self.to.len() - 1;
        }
    }

    fn max_flow(&mut self, s: usize, t: usize, limit: u32) -> u32 {
        let mut flow = 0;
        let n = self.head.len();
        while flow < limit {
            let mut prev_edge = vec![NIL; n];
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                let mut e = self.head[v];
                while e != NIL {
                    let w = self.to[e];
                    if self.cap[e] > 0 && !seen[w] {
                        seen[w] = true;
                        prev_edge[w] = e;
                        queue.push_back(w);
                    }
                    e = self.next[e];
                }
            }
            if !seen[t] {
                break;
            }
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                self.cap[e] -= 1;
                self.cap[e ^ 1] += 1;
                v = self.to[e ^ 1];
            }
            flow += 1;
        }
        flow
    }
}

/// Maximum number of paths from `sources` to `target` that share only
/// `target`. Each source starts at most one path. Nodes in `blocked` may
/// not appear as intermediates (they may still be sources).
pub fn disjoint_paths_from_set(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    target: NodeId,
    blocked: &BTreeSet<NodeId>,
) -> usize {
    paths_impl(g, sources, target, blocked, true)
}

/// Maximum number of internally vertex-disjoint paths from the single
/// node(s) in `sources` to `target` (sources may start several paths).
pub fn disjoint_paths(g: &Graph, sources: &[NodeId], target: NodeId, blocked: &BTreeSet<NodeId>) -> usize {
    let set: BTreeSet<NodeId> = sources.iter().copied().collect();
    paths_impl(g, &set, target, blocked, false)
}

fn paths_impl(
    g: &Graph,
    sources: &BTreeSet<NodeId>,
    target: NodeId,
    blocked: &BTreeSet<NodeId>,
    distinct_sources: bool,
) -> usize {
    if sources.contains(&target) {
        return 0;
    }
    let n = g.n();
    let v_in = |v: usize| 2 * v;
    let v_out = |v: usize| 2 * v + 1;
    let s = 2 * n;
    let mut net = FlowNet::new(2 * n + 1);
    for v in 0..n {
        if v == target {
            continue;
        }
        if sources.contains(&v) {
            net.add(v_in(v), v_out(v), if distinct_sources { 1 } else { INF });
            net.add(s, v_in(v), INF);
        } else if !blocked.contains(&v) {
            net.add(v_in(v), v_out(v), 1);
        }
    }
    for (a, b) in g.edges() {
        if a != target {
            net.add(v_out(a), v_in(b), 1);
        }
    }
    net.max_flow(s, v_in(target), INF) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_has_two_disjoint_paths() {
        let g = Graph::parse("undirected 5\n1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
        assert_eq!(disjoint_paths(&g, &[0], 2, &BTreeSet::new()), 2);
        assert_eq!(disjoint_paths(&g, &[0], 2, &[1].into()), 1);
        let set: BTreeSet<_> = [0, 4].into();
        assert_eq!(disjoint_paths_from_set(&g, &set, 2, &BTreeSet::new()), 2);
        // both routes into node 2 from {0} pass through 1 or 3; 3 blocked
        assert_eq!(disjoint_paths_from_set(&g, &[0].into(), 2, &[3].into()), 1);
    }

    #[test]
    fn blocked_source_still_counts() {
        let g = Graph::parse("directed 3\n1 3\n2 3\n").unwrap();
        let set: BTreeSet<_> = [0, 1].into();
        assert_eq!(disjoint_paths_from_set(&g, &set, 2, &[0].into()), 2);
    }
}
