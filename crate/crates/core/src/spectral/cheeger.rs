//! Exact k-way Cheeger constant by exhaustive enumeration of set
//! partitions. Exponential; meant as an oracle for small graphs.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;

/// Largest graph accepted by [`brute_force_cheeger`].
pub const CHEEGER_MAX_NODES: usize = 14;

struct Search<'a> {
    degrees: &'a [f64],
    edges: Vec<(usize, usize, f64)>,
    k: usize,
    labels: Vec<usize>,
    best: f64,
    best_labels: Option<Vec<usize>>,
    volume: Vec<f64>,
    boundary: Vec<f64>,
}

impl Search<'_> {
    /// Assigns node `i` given that labels `0..used` are already in use,
    /// enumerating restricted growth strings with exactly `k` blocks.
    fn assign(&mut self, i: usize, used: usize) {
        let n = self.labels.len();
        if i == n {
            if used == self.k {
                self.score();
            }
            return;
        }
        // Enough nodes must remain to open the missing blocks.
        if n - i < self.k - used {
            return;
        }
        let top = if used < self.k { used + 1 } else { used };
        for l in 0..top {
            self.labels[i] = l;
            self.assign(i + 1, used.max(l + 1));
        }
    }

    fn score(&mut self) {
        self.volume.iter_mut().for_each(|v| *v = 0.0);
        self.boundary.iter_mut().for_each(|b| *b = 0.0);
        for (i, &l) in self.labels.iter().enumerate() {
            self.volume[l] += self.degrees[i];
        }
        if self.volume.iter().any(|&v| v <= 0.0) {
            return;
        }
        for &(u, v, w) in &self.edges {
            let (a, b) = (self.labels[u], self.labels[v]);
            if a != b {
                self.boundary[a] += w;
                self.boundary[b] += w;
            }
        }
        let worst = self
            .boundary
            .iter()
            .zip(&self.volume)
            .map(|(b, v)| b / v)
            .fold(0.0, f64::max);
        if worst < self.best {
            self.best = worst;
            self.best_labels = Some(self.labels.clone());
        }
    }
}

/// Minimum over partitions into `k` nonempty, volume-positive blocks of
/// the largest block conductance, with a minimizing partition.
pub fn brute_force_cheeger(g: &Graph, k: usize) -> Result<(f64, Partition)> {
    let n = g.n();
    if n > CHEEGER_MAX_NODES {
        return Err(Error::Capacity(format!(
            "exhaustive Cheeger search supports at most {CHEEGER_MAX_NODES} nodes, got {n}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::input(format!("cannot split {n} nodes into {k} blocks")));
    }
    let mut search = Search {
        degrees: g.degrees(),
        edges: g.edges().collect(),
        k,
        labels: vec![0; n],
        best: f64::INFINITY,
        best_labels: None,
        volume: vec![0.0; k],
        boundary: vec![0.0; k],
    };
    search.assign(0, 0);
    match search.best_labels {
        Some(labels) => Ok((search.best, Partition::new(labels)?)),
        None => Err(Error::domain(format!(
            "no partition into {k} volume-positive blocks exists"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_unweighted_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn disjoint_triangles_have_zero_constant() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let (h, p) = brute_force_cheeger(&g, 2).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(g.max_conductance(&p).unwrap(), 0.0);
    }

    #[test]
    fn k4_balanced_split() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let (h, p) = brute_force_cheeger(&g, 2).unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.sizes(), vec![2, 2]);
    }

    #[test]
    fn c6_splits_into_paths() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]);
        let (h, p) = brute_force_cheeger(&g, 2).unwrap();
        assert!((h - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.sizes(), vec![3, 3]);
    }

    #[test]
    fn bridged_triangles() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let (h, _) = brute_force_cheeger(&g, 2).unwrap();
        assert!((h - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn k5_three_way_forces_a_singleton() {
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let (h, _) = brute_force_cheeger(&g, 3).unwrap();
        // Any 3-block split of 5 nodes has a singleton, which scores 1.
        assert!((h - 1.0).abs() < 1e-15);
        let (h1, p1) = brute_force_cheeger(&g, 1).unwrap();
        assert_eq!(h1, 0.0);
        assert_eq!(p1.num_clusters(), 1);
    }

    #[test]
    fn capacity_and_volume_errors() {
        let big = Graph::empty(15);
        assert!(matches!(brute_force_cheeger(&big, 2), Err(Error::Capacity(_))));
        let g = graph(3, &[(0, 1)]);
        // Node 2 is isolated: it can only join a block that has links.
        let (h, _) = brute_force_cheeger(&g, 1).unwrap();
        assert_eq!(h, 0.0);
        assert!(brute_force_cheeger(&Graph::empty(3), 2).is_err());
    }
}
