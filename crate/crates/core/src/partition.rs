use crate::error::{Error, Result};

/// Assignment of every node to exactly one of `L` clusters, `0..L`.
///
/// Clusters may carry a discard flag: they keep their labels but are
/// excluded from inference and from retained-cluster diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    num_clusters: usize,
    discarded: Vec<bool>,
}

impl Partition {
    /// Labels must cover `0..L` with every label used at least once.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let num_clusters = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut used = vec![false; num_clusters];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(Error::input(format!(
                "cluster label {missing} is unused; labels must cover 0..{num_clusters}"
            )));
        }
        Ok(Partition {
            labels,
            num_clusters,
            discarded: vec![false; num_clusters],
        })
    }

    /// Relabels arbitrary labels to `0..L` by decreasing cluster size, ties
    /// broken by the smallest member node.
    pub fn canonical(labels: &[usize]) -> Self {
        let max = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut size = vec![0usize; max];
        let mut first = vec![usize::MAX; max];
        for (i, &l) in labels.iter().enumerate() {
            size[l] += 1;
            first[l] = first[l].min(i);
        }
        let mut order: Vec<usize> = (0..max).filter(|&l| size[l] > 0).collect();
        order.sort_by(|&a, &b| size[b].cmp(&size[a]).then(first[a].cmp(&first[b])));
        let mut map = vec![usize::MAX; max];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        let num_clusters = order.len();
        Partition {
            labels: labels.iter().map(|&l| map[l]).collect(),
            num_clusters,
            discarded: vec![false; num_clusters],
        }
    }

    pub fn trivial(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            num_clusters: usize::from(n > 0),
            discarded: vec![false; usize::from(n > 0)],
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member nodes per cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn is_discarded(&self, cluster: usize) -> bool {
        self.discarded[cluster]
    }

    pub fn discarded(&self) -> &[bool] {
        &self.discarded
    }

    pub fn set_discarded(&mut self, cluster: usize, flag: bool) {
        self.discarded[cluster] = flag;
    }

    /// Ids of clusters not flagged as discarded, ascending.
    pub fn retained(&self) -> Vec<usize> {
        (0..self.num_clusters).filter(|&c| !self.discarded[c]).collect()
    }

    /// Flags every cluster with fewer than `min_size` members.
    pub fn discard_smaller_than(&mut self, min_size: usize) {
        for (c, size) in self.sizes().into_iter().enumerate() {
            self.discarded[c] = size < min_size;
        }
    }
}
