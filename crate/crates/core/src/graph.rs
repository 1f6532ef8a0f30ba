//! Directed communication graphs, the edge-list file format, topology
//! generators and simple-path queries.
//!
//! An edge `(j, i)` means node `i` can get information from node `j`.
//! Node ids are `0..n` internally; edge-list files use 1-based ids.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("generator needs at least 2 nodes, got {0}")]
    TooSmall(usize),
    #[error("grid radius must be positive, got {0}")]
    BadRadius(f64),
}

/// A simple path `source, ..., destination`. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Path(Arc<[NodeId]>);

impl Path {
    pub fn new(nodes: impl Into<Vec<NodeId>>) -> Self {
        let nodes: Vec<NodeId> = nodes.into();
        assert!(!nodes.is_empty(), "a path has at least one node");
        Path(nodes.into())
    }

    /// The trivial one-node path `[i]` used for a node's own value.
    pub fn trivial(i: NodeId) -> Self {
        Path::new(vec![i])
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    pub fn dest(&self) -> NodeId {
        self.0[self.0.len() - 1]
    }

    /// Hop count.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_trivial(&self) -> bool {
        self.0.len() == 1
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    /// Nodes strictly between source and destination.
    pub fn intermediates(&self) -> &[NodeId] {
        if self.0.len() <= 2 {
            &[]
        } else {
            &self.0[1..self.0.len() - 1]
        }
    }

    /// True when every hop is an edge of `g` and no node repeats.
    pub fn is_valid_in(&self, g: &Graph) -> bool {
        let nodes = self.nodes();
        if nodes.iter().any(|&v| v >= g.n()) {
            return false;
        }
        let distinct: BTreeSet<_> = nodes.iter().collect();
        distinct.len() == nodes.len() && nodes.windows(2).all(|w| g.has_edge(w[0], w[1]))
    }
}

impl Ord for Path {
    /// Canonical order: hop count first, then lexicographic node sequence.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &self.0[..])
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.nodes().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let nodes = Vec::<NodeId>::deserialize(d)?;
        if nodes.is_empty() {
            return Err(serde::de::Error::custom("empty path"));
        }
        Ok(Path::new(nodes))
    }
}

/// Topology generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    Cycle(usize),
    Complete(usize),
    /// `side * side` nodes; node `i` sits at `(i mod side, i / side)` and two
    /// nodes are adjacent when their Euclidean distance is at most `radius`.
    Grid { side: usize, radius: f64 },
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Cycle(n) => write!(f, "cycle {n}"),
            Generator::Complete(n) => write!(f, "complete {n}"),
            Generator::Grid { side, radius } => write!(f, "grid {side} {radius}"),
        }
    }
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<usize, String> {
            parts
                .get(i)
                .ok_or_else(|| format!("generator `{s}` is missing an argument"))?
                .parse()
                .map_err(|e| format!("bad generator argument: {e}"))
        };
        match parts.first().copied() {
            Some("cycle") if parts.len() == 2 => Ok(Generator::Cycle(num(1)?)),
            Some("complete") if parts.len() == 2 => Ok(Generator::Complete(num(1)?)),
            Some("grid") if parts.len() == 3 => Ok(Generator::Grid {
                side: num(1)?,
                radius: parts[2]
                    .parse()
                    .map_err(|e| format!("bad grid radius: {e}"))?,
            }),
            _ => Err(format!(
                "unknown generator `{s}` (expected `cycle N`, `complete N` or `grid SIDE RADIUS`)"
            )),
        }
    }
}

/// Immutable directed graph.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: BTreeSet<(NodeId, NodeId)>,
    in_adj: Vec<Vec<NodeId>>,
    out_adj: Vec<Vec<NodeId>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("directed", &self.directed)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from `(from, to)` pairs. With `directed == false` each
    /// pair is added in both directions. Duplicate pairs collapse.
    pub fn from_edges(
        n: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
        directed: bool,
    ) -> Result<Self, GraphError> {
        let mut edges = BTreeSet::new();
        for (j, i) in pairs {
            for v in [j, i] {
                if v >= n {
                    return Err(GraphError::NodeOutOfRange { node: v, n });
                }
            }
            if j == i {
                return Err(GraphError::SelfLoop(j));
            }
            edges.insert((j, i));
            if !directed {
                edges.insert((i, j));
            }
        }
        Ok(Self::from_edge_set(n, directed, edges))
    }

    fn from_edge_set(n: usize, directed: bool, edges: BTreeSet<(NodeId, NodeId)>) -> Self {
        let mut in_adj = vec![Vec::new(); n];
        let mut out_adj = vec![Vec::new(); n];
        for &(j, i) in &edges {
            out_adj[j].push(i);
            in_adj[i].push(j);
        }
        for adj in in_adj.iter_mut().chain(out_adj.iter_mut()) {
            adj.sort_unstable();
        }
        Graph {
            n,
            directed,
            edges,
            in_adj,
            out_adj,
        }
    }

    /// Parses the edge-list document: a header `directed N` or
    /// `undirected N`, then one `j i` pair (1-based) per line. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(bool, usize)> = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| GraphError::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some((_, n)) = header else {
                let directed = match fields.first().copied() {
                    Some("directed") => true,
                    Some("undirected") => false,
                    _ => {
                        return Err(err(
                            "expected header `directed N` or `undirected N`".into(),
                        ))
                    }
                };
                if fields.len() != 2 {
                    return Err(err("header takes exactly one node count".into()));
                }
                let n: usize = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad node count `{}`", fields[1])))?;
                header = Some((directed, n));
                continue;
            };
            if fields.len() != 2 {
                return Err(err(format!("expected `j i`, got `{line}`")));
            }
            let mut ids = [0usize; 2];
            for (slot, field) in ids.iter_mut().zip(&fields) {
                let v: usize = field
                    .parse()
                    .map_err(|_| err(format!("bad node id `{field}`")))?;
                if v == 0 || v > n {
                    return Err(err(format!("node id {v} outside 1..={n}")));
                }
                *slot = v - 1;
            }
            if ids[0] == ids[1] {
                return Err(err(format!("self-loop on node {}", ids[0] + 1)));
            }
            pairs.push((ids[0], ids[1]));
        }
        let Some((directed, n)) = header else {
            return Err(GraphError::Parse {
                line: text.lines().count().max(1),
                msg: "missing header".into(),
            });
        };
        Graph::from_edges(n, pairs, directed)
    }

    /// Writes the graph back as a `directed` edge list (1-based ids), one
    /// line per directed edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("directed {}\n", self.n);
        for &(j, i) in &self.edges {
            out.push_str(&format!("{} {}\n", j + 1, i + 1));
        }
        out
    }

    pub fn generate(kind: Generator) -> Result<Self, GraphError> {
        match kind {
            Generator::Cycle(n) => {
                if n < 2 {
                    return Err(GraphError::TooSmall(n));
                }
                Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)).filter(|(a, b)| a != b), false)
            }
            Generator::Complete(n) => {
                if n < 2 {
                    return Err(GraphError::TooSmall(n));
                }
                let pairs = (0..n).flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (j, i)));
                Graph::from_edges(n, pairs, false)
            }
            Generator::Grid { side, radius } => {
                let n = side * side;
                if n < 2 {
                    return Err(GraphError::TooSmall(n));
                }
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(GraphError::BadRadius(radius));
                }
                let r2 = radius * radius + 1e-9;
                let mut pairs = Vec::new();
                for a in 0..n {
                    let (ax, ay) = grid_coordinate(a, side);
                    for b in (a + 1)..n {
                        let (bx, by) = grid_coordinate(b, side);
                        let dx = ax as f64 - bx as f64;
                        let dy = ay as f64 - by as f64;
                        if dx * dx + dy * dy <= r2 {
                            pairs.push((a, b));
                        }
                    }
                }
                Graph::from_edges(n, pairs, false)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the graph was declared directed. Undirected graphs still
    /// store both directions of every edge.
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn in_neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.in_adj[i]
    }

    pub fn out_neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.out_adj[i]
    }

    pub fn in_degree(&self, i: NodeId) -> usize {
        self.in_adj[i].len()
    }

    pub fn min_in_degree(&self) -> usize {
        (0..self.n).map(|i| self.in_degree(i)).min().unwrap_or(0)
    }

    /// Returns a copy with one extra directed edge.
    pub fn with_edge(&self, from: NodeId, to: NodeId) -> Result<Self, GraphError> {
        if from >= self.n || to >= self.n {
            return Err(GraphError::NodeOutOfRange {
                node: from.max(to),
                n: self.n,
            });
        }
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        let mut edges = self.edges.clone();
        edges.insert((from, to));
        Ok(Self::from_edge_set(self.n, true, edges))
    }

    /// Returns a copy with the listed nodes' edges removed (the nodes stay,
    /// isolated).
    pub fn without_nodes(&self, removed: &BTreeSet<NodeId>) -> Self {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(j, i)| !removed.contains(j) && !removed.contains(i))
            .collect();
        Self::from_edge_set(self.n, self.directed, edges)
    }

    /// Nodes that reach `i` over a path of at most `hops` hops, excluding `i`.
    pub fn l_hop_in_neighbors(&self, i: NodeId, hops: usize) -> BTreeSet<NodeId> {
        let mut found = BTreeSet::new();
        self.walk_in_paths(i, hops, &mut |path| {
            found.insert(path[path.len() - 1]);
        });
        found
    }

    /// Nodes reachable from `i` over a path of at most `hops` hops, excluding `i`.
    pub fn l_hop_out_neighbors(&self, i: NodeId, hops: usize) -> BTreeSet<NodeId> {
        (0..self.n)
            .filter(|&j| j != i && self.l_hop_in_neighbors(j, hops).contains(&i))
            .collect()
    }

    /// Every simple path of 1..=`hops` hops ending at `i`, in canonical
    /// order (hop count, then lexicographic).
    pub fn enumerate_in_paths(&self, i: NodeId, hops: usize) -> Vec<Path> {
        let mut paths = Vec::new();
        self.walk_in_paths(i, hops, &mut |rev| {
            let nodes: Vec<NodeId> = rev.iter().rev().copied().collect();
            paths.push(Path::new(nodes));
        });
        paths.sort();
        paths
    }

    /// DFS backwards from `i`; `visit` sees each path reversed
    /// (destination first) when it has at least one hop.
    fn walk_in_paths(&self, i: NodeId, hops: usize, visit: &mut impl FnMut(&[NodeId])) {
        let mut on_path = vec![false; self.n];
        let mut rev = vec![i];
        on_path[i] = true;
        self.walk_rec(hops, &mut rev, &mut on_path, visit);
    }

    fn walk_rec(
        &self,
        hops: usize,
        rev: &mut Vec<NodeId>,
        on_path: &mut [bool],
        visit: &mut impl FnMut(&[NodeId]),
    ) {
        if rev.len() > hops {
            return;
        }
        let head = rev[rev.len() - 1];
        for &j in &self.in_adj[head] {
            if on_path[j] {
                continue;
            }
            rev.push(j);
            on_path[j] = true;
            visit(rev);
            self.walk_rec(hops, rev, on_path, visit);
            on_path[j] = false;
            rev.pop();
        }
    }

    /// Longest simple-path length over all node pairs. Exhaustive; meant for
    /// small graphs.
    pub fn longest_path_length(&self) -> usize {
        let mut best = 0;
        let mut on_path = vec![false; self.n];
        for s in 0..self.n {
            on_path[s] = true;
            best = best.max(self.longest_from(s, 0, &mut on_path));
            on_path[s] = false;
            if best + 1 == self.n {
                break;
            }
        }
        best
    }

    fn longest_from(&self, v: NodeId, depth: usize, on_path: &mut [bool]) -> usize {
        let mut best = depth;
        for &w in &self.out_adj[v] {
            if !on_path[w] {
                on_path[w] = true;
                best = best.max(self.longest_from(w, depth + 1, on_path));
                on_path[w] = false;
            }
        }
        best
    }

    /// Nodes reachable from `root` (including it), ignoring `blocked` nodes.
    pub fn reachable_from(&self, root: NodeId, blocked: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        if blocked.contains(&root) {
            return seen;
        }
        let mut stack = vec![root];
        seen.insert(root);
        while let Some(v) = stack.pop() {
            for &w in &self.out_adj[v] {
                if !blocked.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Whether the graph minus `blocked` has a node reaching every other
    /// remaining node (a spanning out-tree).
    pub fn has_rooted_spanning_tree(&self, blocked: &BTreeSet<NodeId>) -> bool {
        let remaining = self.n - blocked.len();
        if remaining <= 1 {
            return true;
        }
        (0..self.n)
            .filter(|v| !blocked.contains(v))
            .any(|root| self.reachable_from(root, blocked).len() == remaining)
    }

    pub fn is_strongly_connected(&self) -> bool {
        let none = BTreeSet::new();
        self.n <= 1
            || (self.reachable_from(0, &none).len() == self.n
                && (0..self.n).all(|v| self.reachable_from(v, &none).contains(&0)))
    }

    /// Directed vertex connectivity: the least number of nodes whose removal
    /// leaves the graph not strongly connected (or a single node). A complete
    /// digraph has connectivity `n - 1`.
    pub fn vertex_connectivity(&self) -> usize {
        if !self.is_strongly_connected() {
            return 0;
        }
        let mut best = self.n.saturating_sub(1);
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v && !self.has_edge(u, v) {
                    best = best.min(crate::flow::disjoint_paths(self, &[u], v, &BTreeSet::new()));
                }
            }
        }
        best
    }

    /// The largest `k` such that deleting any `k - 1` nodes leaves a graph
    /// with a rooted spanning out-tree. Capped at `n`. Exhaustive over node
    /// subsets; small graphs only.
    pub fn rooted_connectivity(&self) -> usize {
        for k in 0..self.n {
            // Is there a cut of size k?
            let found = subsets_of_size(self.n, k).any(|cut| {
                let blocked: BTreeSet<NodeId> = cut.into_iter().collect();
                !self.has_rooted_spanning_tree(&blocked)
            });
            if found {
                return k;
            }
        }
        self.n
    }
}

impl FromStr for Graph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Graph::parse(s)
    }
}

/// Grid coordinate `(i mod side, i / side)`.
pub fn grid_coordinate(i: NodeId, side: usize) -> (usize, usize) {
    (i % side, i / side)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = Vec<NodeId>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // advance
        let mut next = out.clone();
        let mut idx = k;
        loop {
            if idx == 0 {
                current = None;
                break;
            }
            idx -= 1;
            if next[idx] < n - k + idx {
                next[idx] += 1;
                for j in idx + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}
