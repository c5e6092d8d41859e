//! Undirected weighted graphs in compressed sparse row layout, plus the
//! combinatorial quantities built on them: degrees, path distances,
//! neighborhoods, components, volume, edge boundary and conductance.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Undirected graph on nodes `0..n` with strictly positive edge weights.
///
/// Every undirected edge is stored twice, once in each endpoint's neighbor
/// list. Neighbor lists are sorted by node id.
#[derive(Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n())
            .field("edges", &self.num_edges())
            .finish()
    }
}

/// Shortest-path hop count. Disconnected pairs are `Infinite`, never a
/// large number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

/// Connected-component labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Component id per node, numbered in order of the smallest node id
    /// they contain.
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// A largest component; ties go to the smallest component id.
    pub giant: usize,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Node ids of component `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }

    pub fn giant_members(&self) -> Vec<usize> {
        self.members(self.giant)
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
            weights: Vec::new(),
            degrees: vec![0.0; n],
        }
    }

    /// Builds a graph from undirected edges, each listed once in either
    /// orientation.
    ///
    /// Self-links, duplicate edges (in either orientation), out-of-range
    /// endpoints and non-positive or non-finite weights are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            if u == v {
                return Err(Error::input(format!("self-link on node {u}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::input(format!(
                    "edge ({u}, {v}) has weight {w}; weights must be finite and positive"
                )));
            }
            list.push((u.min(v), u.max(v), w));
        }
        list.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(Error::input(format!(
                "duplicate edge ({}, {})",
                pair[0].0, pair[0].1
            )));
        }
        Ok(Self::from_sorted_unique(n, &list))
    }

    /// Builds a binary graph from unit-weight edges.
    pub fn from_unweighted_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    /// `edges` must hold `(u, v, w)` with `u < v`, sorted, without
    /// duplicates.
    pub(crate) fn from_sorted_unique(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n];
        for &(u, v, _) in edges {
            counts[u] += 1;
            counts[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let m2 = *offsets.last().unwrap();
        let mut neighbors = vec![0usize; m2];
        let mut weights = vec![0.0f64; m2];
        let mut cursor = offsets[..n].to_vec();
        // For node x, entries (u, x) with u < x arrive in increasing u before
        // entries (x, v) arrive in increasing v, so every list is sorted.
        for &(u, v, w) in edges {
            neighbors[cursor[v]] = u;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }
        for &(u, v, w) in edges {
            neighbors[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
        }
        let degrees = (0..n)
            .map(|x| weights[offsets[x]..offsets[x + 1]].iter().sum())
            .collect();
        Graph {
            offsets,
            neighbors,
            weights,
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn is_binary(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: i, n: self.n() })
        }
    }

    /// Neighbor ids of `i`, ascending. Panics if `i` is out of range.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Edge weights aligned with [`Graph::neighbors`].
    pub fn neighbor_weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of neighbors of `i`.
    pub fn neighbor_count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Iterates each undirected edge once as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| v > u)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    /// Weight of edge `(i, j)`, or 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.neighbors(i).binary_search(&j) {
            Ok(pos) => self.neighbor_weights(i)[pos],
            Err(_) => 0.0,
        }
    }

    /// Weighted degree of node `i`.
    pub fn degree(&self, i: usize) -> Result<f64> {
        self.check(i)?;
        Ok(self.degrees[i])
    }

    /// All weighted degrees.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn average_degree(&self) -> Result<f64> {
        if self.n() == 0 {
            return Err(Error::input("average degree of an empty graph"));
        }
        Ok(self.degrees.iter().sum::<f64>() / self.n() as f64)
    }

    /// Hop distances from `source` to every node (weights ignored).
    pub fn bfs_distances(&self, source: usize) -> Result<Vec<Distance>> {
        self.check(source)?;
        let mut dist = vec![Distance::Infinite; self.n()];
        dist[source] = Distance::Finite(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let Distance::Finite(du) = dist[u] else { unreachable!() };
            for &v in self.neighbors(u) {
                if dist[v] == Distance::Infinite {
                    dist[v] = Distance::Finite(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Shortest-path hop count between `i` and `j`.
    pub fn path_distance(&self, i: usize, j: usize) -> Result<Distance> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Ok(Distance::Finite(0));
        }
        let mut dist = vec![usize::MAX; self.n()];
        dist[i] = 0;
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    if v == j {
                        return Ok(Distance::Finite(dist[v]));
                    }
                    queue.push_back(v);
                }
            }
        }
        Ok(Distance::Infinite)
    }

    /// Nodes within `s` hops of `i`, ascending; always contains `i`.
    pub fn neighborhood(&self, i: usize, s: usize) -> Result<Vec<usize>> {
        self.check(i)?;
        let mut scratch = BallScratch::new(self.n());
        let mut ball = scratch.ball(self, i, s).to_vec();
        ball.sort_unstable();
        Ok(ball)
    }

    /// `(1/n) Σ_i |N(i, s)|^k`, the k-th moment of s-neighborhood sizes.
    pub fn neighborhood_moment(&self, s: usize, k: f64) -> Result<f64> {
        if self.n() == 0 {
            return Err(Error::input("neighborhood moment of an empty graph"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::input(format!("moment order must be positive, got {k}")));
        }
        let mut scratch = BallScratch::new(self.n());
        let total: f64 = (0..self.n())
            .map(|i| (scratch.ball(self, i, s).len() as f64).powf(k))
            .sum();
        Ok(total / self.n() as f64)
    }

    pub fn connected_components(&self) -> ComponentLabeling {
        let n = self.n();
        let mut labels = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            labels[start] = id;
            queue.push_back(start);
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &v in self.neighbors(u) {
                    if labels[v] == usize::MAX {
                        labels[v] = id;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        let mut giant = 0;
        for (c, &s) in sizes.iter().enumerate() {
            if s > sizes[giant] {
                giant = c;
            }
        }
        ComponentLabeling {
            labels,
            sizes,
            giant,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.connected_components().count() == 1
    }

    /// Sum of degrees over `set`. Repeated ids count once.
    pub fn volume(&self, set: &[usize]) -> Result<f64> {
        let mask = self.mask(set)?;
        Ok(self.volume_masked(&mask))
    }

    /// Total weight of edges with exactly one endpoint in `set`.
    pub fn edge_boundary(&self, set: &[usize]) -> Result<f64> {
        let mask = self.mask(set)?;
        Ok(self.boundary_masked(&mask))
    }

    /// `edge_boundary(set) / volume(set)`.
    pub fn conductance(&self, set: &[usize]) -> Result<f64> {
        let mask = self.mask(set)?;
        let vol = self.volume_masked(&mask);
        if vol <= 0.0 {
            return Err(Error::domain("conductance undefined for link-free set"));
        }
        Ok(self.boundary_masked(&mask) / vol)
    }

    /// Largest cluster conductance over the partition. Every cluster must
    /// carry at least one link.
    pub fn max_conductance(&self, partition: &Partition) -> Result<f64> {
        let stats = self.cluster_cut_stats(partition)?;
        let mut worst: f64 = 0.0;
        for (c, &(vol, boundary)) in stats.iter().enumerate() {
            if vol <= 0.0 {
                return Err(Error::domain(format!(
                    "cluster {c} has zero volume; conductance undefined for link-free set"
                )));
            }
            worst = worst.max(boundary / vol);
        }
        Ok(worst)
    }

    /// `(volume, edge boundary)` per cluster in a single pass over edges.
    pub fn cluster_cut_stats(&self, partition: &Partition) -> Result<Vec<(f64, f64)>> {
        if partition.n() != self.n() {
            return Err(Error::input(format!(
                "partition covers {} nodes but graph has {}",
                partition.n(),
                self.n()
            )));
        }
        let labels = partition.labels();
        let mut stats = vec![(0.0, 0.0); partition.num_clusters()];
        for (i, &l) in labels.iter().enumerate() {
            stats[l].0 += self.degrees[i];
        }
        for (u, v, w) in self.edges() {
            if labels[u] != labels[v] {
                stats[labels[u]].1 += w;
                stats[labels[v]].1 += w;
            }
        }
        Ok(stats)
    }

    /// Subgraph induced by `nodes`. Node `k` of the result is `nodes[k]`
    /// of `self`; `nodes` must be distinct.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &u) in nodes.iter().enumerate() {
            self.check(u)?;
            if local[u] != usize::MAX {
                return Err(Error::input(format!("node {u} listed twice")));
            }
            local[u] = k;
        }
        let mut edges = Vec::new();
        for (ku, &u) in nodes.iter().enumerate() {
            for (&v, &w) in self.neighbors(u).iter().zip(self.neighbor_weights(u)) {
                let kv = local[v];
                if kv != usize::MAX && ku < kv {
                    edges.push((ku, kv, w));
                }
            }
        }
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Graph::from_sorted_unique(nodes.len(), &edges))
    }

    fn mask(&self, set: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.n()];
        for &i in set {
            self.check(i)?;
            mask[i] = true;
        }
        Ok(mask)
    }

    fn volume_masked(&self, mask: &[bool]) -> f64 {
        mask.iter()
            .zip(&self.degrees)
            .filter(|(&m, _)| m)
            .map(|(_, &d)| d)
            .sum()
    }

    fn boundary_masked(&self, mask: &[bool]) -> f64 {
        let mut total = 0.0;
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            for (&j, &w) in self.neighbors(i).iter().zip(self.neighbor_weights(i)) {
                if !mask[j] {
                    total += w;
                }
            }
        }
        total
    }
}

/// Reusable BFS buffers for repeated truncated searches.
pub(crate) struct BallScratch {
    seen: Vec<u32>,
    epoch: u32,
    ball: Vec<usize>,
    depth: Vec<usize>,
}

impl BallScratch {
    pub(crate) fn new(n: usize) -> Self {
        BallScratch {
            seen: vec![0; n],
            epoch: 0,
            ball: Vec::new(),
            depth: Vec::new(),
        }
    }

    /// Nodes within `radius` hops of `source`, in BFS order.
    pub(crate) fn ball(&mut self, g: &Graph, source: usize, radius: usize) -> &[usize] {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.ball.clear();
        self.depth.clear();
        self.seen[source] = self.epoch;
        self.ball.push(source);
        self.depth.push(0);
        let mut head = 0;
        while head < self.ball.len() {
            let (u, d) = (self.ball[head], self.depth[head]);
            head += 1;
            if d == radius {
                continue;
            }
            for &v in g.neighbors(u) {
                if self.seen[v] != self.epoch {
                    self.seen[v] = self.epoch;
                    self.ball.push(v);
                    self.depth.push(d + 1);
                }
            }
        }
        &self.ball
    }
}
