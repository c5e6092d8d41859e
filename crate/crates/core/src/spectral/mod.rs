//! Normalized Laplacian spectra and spectral clustering.
//!
//! The normalized Laplacian `I - D^{-1/2} A D^{-1/2}` has eigenvalues in
//! `[0, 2]`; the multiplicity of zero equals the number of connected
//! components, and small eigenvalues certify the existence of
//! low-conductance partitions. Spectral clustering embeds each node by its
//! row in the first `L` eigenvectors, normalizes rows to the unit sphere,
//! and runs k-means on the result.

mod cheeger;
mod kmeans;
mod lanczos;

pub use cheeger::{brute_force_cheeger, CHEEGER_MAX_NODES};
pub use kmeans::{kmeans, kmeans_with, KMeansFit, KMeansOptions};
pub use lanczos::KrylovOptions;

use faer::Mat;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::symmetric_eigen;
use crate::partition::Partition;

/// Below this node count spectra come from a dense eigendecomposition.
pub const DENSE_THRESHOLD: usize = 2000;

/// Eigenvalues below this count as zero when counting components.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Rows of the eigenvector matrix with smaller norm are treated as zero.
const ZERO_ROW_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    pub dense_threshold: usize,
    pub krylov: KrylovOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            dense_threshold: DENSE_THRESHOLD,
            krylov: KrylovOptions::default(),
        }
    }
}

/// Ascending Laplacian eigenvalues with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Matrix dimension (node count).
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumReport {
    /// Number of eigenvalues below [`ZERO_EIGENVALUE_TOL`].
    pub fn zero_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .take_while(|&&l| l < ZERO_EIGENVALUE_TOL)
            .count()
    }

    /// `λ_{k+1} - λ_k` for 1-based `k`, if both are available.
    pub fn gap_after(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        Some(self.eigenvalues.get(k)? - self.eigenvalues.get(k - 1)?)
    }
}

fn inverse_sqrt_degrees(g: &Graph) -> Result<Vec<f64>> {
    g.degrees()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::ZeroDegree { node: i })
            }
        })
        .collect()
}

/// Dense normalized Laplacian. Every node needs positive degree.
pub fn normalized_laplacian(g: &Graph) -> Result<Mat<f64>> {
    let inv = inverse_sqrt_degrees(g)?;
    let n = g.n();
    let mut lap = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        lap[(i, i)] = 1.0;
        for (&j, &w) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
            lap[(i, j)] = -w * inv[i] * inv[j];
        }
    }
    Ok(lap)
}

/// Sparse `y = L x` for the normalized Laplacian.
pub(crate) struct LaplacianOperator<'a> {
    graph: &'a Graph,
    inv_sqrt_degree: Vec<f64>,
}

impl<'a> LaplacianOperator<'a> {
    pub(crate) fn new(graph: &'a Graph) -> Result<Self> {
        Ok(LaplacianOperator {
            graph,
            inv_sqrt_degree: inverse_sqrt_degrees(graph)?,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.graph.n()
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        let inv = &self.inv_sqrt_degree;
        for i in 0..self.graph.n() {
            let mut acc = 0.0;
            for (&j, &w) in self.graph.neighbors(i).iter().zip(self.graph.neighbor_weights(i)) {
                acc += w * inv[j] * x[j];
            }
            y[i] = x[i] - inv[i] * acc;
        }
    }
}

/// Eigendecomposition of the normalized Laplacian.
///
/// With `k = None` every eigenpair is returned; otherwise the `k` smallest.
pub fn spectrum(g: &Graph, k: Option<usize>) -> Result<SpectrumReport> {
    spectrum_with(g, k, &SpectrumOptions::default())
}

pub fn spectrum_with(g: &Graph, k: Option<usize>, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    let n = g.n();
    if n == 0 {
        return Err(Error::input("spectrum of an empty graph"));
    }
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Error::input(format!("requested {k} eigenpairs of a {n}-node graph")));
        }
    }
    match k {
        Some(k) if n > opts.dense_threshold => {
            let op = LaplacianOperator::new(g)?;
            let (eigenvalues, eigenvectors) = lanczos::smallest_eigenpairs(&op, k, &opts.krylov)?;
            Ok(SpectrumReport {
                n,
                eigenvalues,
                eigenvectors,
            })
        }
        _ => {
            let lap = normalized_laplacian(g)?;
            let (values, vectors) = symmetric_eigen(&lap)?;
            let keep = k.unwrap_or(n);
            Ok(SpectrumReport {
                n,
                eigenvalues: values[..keep].to_vec(),
                eigenvectors: (0..keep)
                    .map(|c| (0..n).map(|r| vectors[(r, c)]).collect())
                    .collect(),
            })
        }
    }
}

/// Row-normalized spectral coordinates, one point per node.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub positions: Vec<Vec<f64>>,
    /// Nodes whose unnormalized row vanished; they sit at the origin.
    pub zero_rows: Vec<usize>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }
}

/// Maps node `i` to `(V_1i, ..., V_Li)` scaled to unit Euclidean norm.
pub fn spectral_embedding(report: &SpectrumReport, dim: usize) -> Result<Embedding> {
    if dim == 0 || dim > report.eigenvectors.len() {
        return Err(Error::input(format!(
            "embedding dimension {dim} outside 1..={}",
            report.eigenvectors.len()
        )));
    }
    let mut positions = Vec::with_capacity(report.n);
    let mut zero_rows = Vec::new();
    for i in 0..report.n {
        let row: Vec<f64> = report.eigenvectors[..dim].iter().map(|v| v[i]).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < ZERO_ROW_TOL {
            zero_rows.push(i);
            positions.push(vec![0.0; dim]);
        } else {
            positions.push(row.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(Embedding {
        positions,
        zero_rows,
    })
}

/// Spectral clustering output with bookkeeping for zero embedding rows.
#[derive(Debug, Clone)]
pub struct SpectralClustering {
    /// Clusters labeled by decreasing size.
    pub partition: Partition,
    /// Nodes with a vanishing embedding row, assigned to the nearest centroid
    /// after k-means.
    pub zero_rows: Vec<usize>,
}

/// Spectral clustering into `clusters` groups.
pub fn spectral_cluster(g: &Graph, clusters: usize, seed: u64) -> Result<Partition> {
    if clusters == 0 {
        return Err(Error::input("cluster count must be at least 1"));
    }
    let report = spectrum(g, Some(clusters))?;
    Ok(spectral_cluster_from_report(&report, clusters, seed)?.partition)
}

/// Spectral clustering reusing an existing spectrum with at least
/// `clusters` eigenvectors.
pub fn spectral_cluster_from_report(
    report: &SpectrumReport,
    clusters: usize,
    seed: u64,
) -> Result<SpectralClustering> {
    if clusters == 0 {
        return Err(Error::input("cluster count must be at least 1"));
    }
    if clusters == 1 {
        return Ok(SpectralClustering {
            partition: Partition::trivial(report.n),
            zero_rows: Vec::new(),
        });
    }
    let emb = spectral_embedding(report, clusters)?;
    let active: Vec<usize> = {
        let mut zero = vec![false; report.n];
        emb.zero_rows.iter().for_each(|&i| zero[i] = true);
        (0..report.n).filter(|&i| !zero[i]).collect()
    };
    let points: Vec<Vec<f64>> = active.iter().map(|&i| emb.positions[i].clone()).collect();
    let fit = kmeans_with(&points, clusters, seed, &KMeansOptions::default())?;
    let mut labels = vec![0usize; report.n];
    for (&i, &l) in active.iter().zip(&fit.labels) {
        labels[i] = l;
    }
    for &i in &emb.zero_rows {
        labels[i] = kmeans::nearest(&fit.centroids, &emb.positions[i]).0;
    }
    Ok(SpectralClustering {
        partition: Partition::canonical(&labels),
        zero_rows: emb.zero_rows,
    })
}
