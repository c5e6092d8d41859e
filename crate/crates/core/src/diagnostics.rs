//! Cluster-count selection, the component-aware clustering pipeline and
//! cluster quality reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::spectral::{self, spectral_cluster_from_report, SpectrumReport};

/// Largest tolerated maximal conductance before a warning.
pub const HIGH_CONDUCTANCE: f64 = 0.1;
/// Fewer retained clusters than this triggers a warning.
pub const MIN_CLUSTERS: usize = 5;
pub const DEFAULT_UNBALANCED_FRACTION: f64 = 0.9;
pub const DEFAULT_MIN_SIZE: usize = 20;
pub const DEFAULT_EIGEN_THRESHOLD: f64 = 0.05;
/// Cap on automatically chosen giant-component cluster counts.
pub const DEFAULT_MAX_CLUSTERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Warning {
    HighConductance,
    TooFewClusters,
    Unbalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub id: usize,
    pub size: usize,
    pub volume: f64,
    pub boundary: f64,
    /// `None` for link-free clusters.
    pub conductance: Option<f64>,
    pub discarded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    /// Every cluster, discarded ones included.
    pub clusters: Vec<ClusterStats>,
    /// Maximum conductance over retained clusters.
    pub max_conductance: f64,
    /// Cluster count used on the giant component, or the retained cluster
    /// count when no spectrum was involved.
    #[serde(rename = "L_effective")]
    pub l_effective: usize,
    pub retained_clusters: usize,
    /// `λ_L` on the giant component.
    pub lambda_l: Option<f64>,
    /// `λ_{L+1} - λ_L` on the giant component.
    pub spectral_gap: Option<f64>,
    pub warnings: Vec<Warning>,
    /// Giant-component nodes whose spectral embedding row vanished; they
    /// were assigned to the nearest centroid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_embedding_rows: Vec<usize>,
}

impl ClusterDiagnostics {
    /// Retained cluster sizes, descending.
    pub fn retained_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self
            .clusters
            .iter()
            .filter(|c| !c.discarded)
            .map(|c| c.size)
            .collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn has_warning(&self, w: Warning) -> bool {
        self.warnings.contains(&w)
    }
}

/// Largest `L <= max_l` with `λ_L < threshold`, and at least 1.
pub fn choose_num_clusters(report: &SpectrumReport, threshold: f64, max_l: usize) -> usize {
    let below = report
        .eigenvalues
        .iter()
        .take(max_l)
        .rposition(|&l| l < threshold)
        .map_or(0, |p| p + 1);
    below.max(1)
}

#[derive(Debug, Clone)]
pub struct QualityOptions {
    pub high_conductance: f64,
    pub min_clusters: usize,
    pub unbalanced_fraction: f64,
}

impl Default for QualityOptions {
    fn default() -> Self {
        QualityOptions {
            high_conductance: HIGH_CONDUCTANCE,
            min_clusters: MIN_CLUSTERS,
            unbalanced_fraction: DEFAULT_UNBALANCED_FRACTION,
        }
    }
}

/// Per-cluster statistics and warnings, with default thresholds.
pub fn quality_report(g: &Graph, p: &Partition) -> Result<ClusterDiagnostics> {
    quality_report_with(g, p, &QualityOptions::default())
}

pub fn quality_report_with(
    g: &Graph,
    p: &Partition,
    opts: &QualityOptions,
) -> Result<ClusterDiagnostics> {
    let stats = g.cluster_cut_stats(p)?;
    let sizes = p.sizes();
    let mut clusters = Vec::with_capacity(stats.len());
    let mut max_conductance: f64 = 0.0;
    for (id, &(volume, boundary)) in stats.iter().enumerate() {
        let discarded = p.is_discarded(id);
        let conductance = (volume > 0.0).then(|| boundary / volume);
        if !discarded {
            match conductance {
                Some(c) => max_conductance = max_conductance.max(c),
                None => {
                    return Err(Error::domain(format!(
                        "retained cluster {id} has zero volume; conductance undefined"
                    )))
                }
            }
        }
        clusters.push(ClusterStats {
            id,
            size: sizes[id],
            volume,
            boundary,
            conductance,
            discarded,
        });
    }
    let retained: Vec<&ClusterStats> = clusters.iter().filter(|c| !c.discarded).collect();
    let retained_nodes: usize = retained.iter().map(|c| c.size).sum();
    let largest = retained.iter().map(|c| c.size).max().unwrap_or(0);
    let mut warnings = Vec::new();
    if max_conductance > opts.high_conductance {
        warnings.push(Warning::HighConductance);
    }
    if retained.len() < opts.min_clusters {
        warnings.push(Warning::TooFewClusters);
    }
    if retained_nodes > 0 && largest as f64 > opts.unbalanced_fraction * retained_nodes as f64 {
        warnings.push(Warning::Unbalanced);
    }
    let retained_clusters = retained.len();
    Ok(ClusterDiagnostics {
        clusters,
        max_conductance,
        l_effective: retained_clusters,
        retained_clusters,
        lambda_l: None,
        spectral_gap: None,
        warnings,
        zero_embedding_rows: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Clusters to build in the giant component; chosen from the spectrum
    /// when `None`.
    pub l_giant: Option<usize>,
    pub min_size: usize,
    pub eigen_threshold: f64,
    pub max_clusters: usize,
    pub quality: QualityOptions,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            l_giant: None,
            min_size: DEFAULT_MIN_SIZE,
            eigen_threshold: DEFAULT_EIGEN_THRESHOLD,
            max_clusters: DEFAULT_MAX_CLUSTERS,
            quality: QualityOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Clusters labeled by decreasing size with discard flags set.
    pub partition: Partition,
    pub diagnostics: ClusterDiagnostics,
    /// Giant-component node ids, ascending.
    pub giant: Vec<usize>,
    /// Spectrum of the giant component's Laplacian.
    pub giant_spectrum: SpectrumReport,
}

/// Spectral clustering of the giant component with every other component
/// as its own cluster; clusters smaller than `min_size` are flagged as
/// discarded.
pub fn cluster_pipeline(g: &Graph, opts: &PipelineOptions) -> Result<PipelineOutput> {
    if g.n() == 0 {
        return Err(Error::input("clustering an empty graph"));
    }
    let components = g.connected_components();
    let giant = components.giant_members();
    if giant.len() < opts.min_size {
        return Err(Error::domain(format!(
            "giant component has {} nodes, fewer than the minimum cluster size {}",
            giant.len(),
            opts.min_size
        )));
    }
    if giant.len() < 2 {
        return Err(Error::domain("graph has no links"));
    }
    let sub = g.induced_subgraph(&giant)?;
    let max_l = opts.max_clusters.min(sub.n()).max(1);
    let wanted = match opts.l_giant {
        Some(0) => return Err(Error::input("giant cluster count must be at least 1")),
        Some(l) if l > sub.n() => {
            return Err(Error::input(format!(
                "{l} clusters requested in a giant component of {} nodes",
                sub.n()
            )))
        }
        Some(l) => Some(l),
        None => None,
    };
    // One extra eigenpair for the gap after L.
    let k = (wanted.unwrap_or(max_l) + 1).min(sub.n());
    let report = spectral::spectrum(&sub, Some(k))?;
    let l = wanted.unwrap_or_else(|| choose_num_clusters(&report, opts.eigen_threshold, max_l));
    let clustering = spectral_cluster_from_report(&report, l, opts.seed)?;
    let giant_clusters = clustering.partition;

    let mut labels = vec![usize::MAX; g.n()];
    for (local, &node) in giant.iter().enumerate() {
        labels[node] = giant_clusters.label(local);
    }
    let mut next = giant_clusters.num_clusters();
    let mut component_label = vec![usize::MAX; components.count()];
    for (node, &c) in components.labels.iter().enumerate() {
        if c == components.giant {
            continue;
        }
        if component_label[c] == usize::MAX {
            component_label[c] = next;
            next += 1;
        }
        labels[node] = component_label[c];
    }
    let mut partition = Partition::canonical(&labels);
    partition.discard_smaller_than(opts.min_size);
    let mut diagnostics = quality_report_with(g, &partition, &opts.quality)?;
    diagnostics.l_effective = l;
    diagnostics.lambda_l = report.eigenvalues.get(l - 1).copied();
    diagnostics.spectral_gap = report.gap_after(l);
    diagnostics.zero_embedding_rows = clustering.zero_rows.iter().map(|&i| giant[i]).collect();
    Ok(PipelineOutput {
        partition,
        diagnostics,
        giant,
        giant_spectrum: report,
    })
}
