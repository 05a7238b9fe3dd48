//! Multi-source shortest paths on weighted adjacency lists.
//!
//! Used both for sphere grids and for immersed bases. Heap entries are
//! ordered by (distance, node index), so equal distances settle the
//! smallest node first and the output is bitwise reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Adjacency list: for every node, its `(neighbor, edge length)` pairs.
pub type Adjacency = [Vec<(usize, f64)>];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from several sources, each with an additive offset.
///
/// Returns `min_s (offset(s) + path(s, v))` for every node; unreachable
/// nodes get `+inf`. Propagation stops at nodes where `limit` is exceeded.
pub fn multi_source(adj: &Adjacency, sources: &[(usize, f64)], limit: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    for &(node, offset) in sources {
        if offset < dist[node] {
            dist[node] = offset;
            heap.push(Entry { dist: offset, node });
        }
    }
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] || d > limit {
            continue;
        }
        for &(next, len) in &adj[node] {
            let nd = d + len;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Entry { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Shortest path lengths from a single node.
pub fn single_source(adj: &Adjacency, source: usize) -> Vec<f64> {
    multi_source(adj, &[(source, 0.0)], f64::INFINITY)
}

/// Whether every node is reachable from node 0.
pub fn is_connected(adj: &Adjacency) -> bool {
    if adj.is_empty() {
        return false;
    }
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &(w, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == adj.len()
}
