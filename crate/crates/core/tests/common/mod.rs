#![allow(dead_code)]

use mwmsr::Graph;
use proptest::prelude::*;

/// Random digraph on `min_n..=max_n` nodes, each ordered pair an edge with
/// probability about `density`.
pub fn digraph(min_n: usize, max_n: usize, density: f64) -> impl Strategy<Value = Graph> {
    (min_n..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(proptest::bool::weighted(density), n * n).prop_map(move |bits| {
            let pairs = (0..n)
                .flat_map(|j| (0..n).map(move |i| (j, i)))
                .filter(|&(j, i)| j != i && bits[j * n + i]);
            Graph::from_edges(n, pairs, true).unwrap()
        })
    })
}

/// The same, but always undirected.
pub fn undirected(min_n: usize, max_n: usize, density: f64) -> impl Strategy<Value = Graph> {
    (min_n..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(proptest::bool::weighted(density), n * n).prop_map(move |bits| {
            let pairs = (0..n)
                .flat_map(|j| (0..n).map(move |i| (j, i)))
                .filter(|&(j, i)| j < i && bits[j * n + i]);
            Graph::from_edges(n, pairs, false).unwrap()
        })
    })
}

pub fn ceil_half(n: usize) -> usize {
    n.div_ceil(2)
}
