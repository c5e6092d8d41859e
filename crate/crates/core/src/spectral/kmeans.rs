//! Lloyd's k-means with k-means++ seeding and independent restarts.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng;

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the within-cluster sum of squares improves by less than
    /// this fraction of its previous value.
    pub rel_tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: 10,
            max_iter: 300,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Raw cluster index per point, aligned with `centroids`.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the best restart.
    pub wcss: f64,
    /// Index of the winning restart.
    pub restart: usize,
    /// WCSS after every Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of and squared distance to the closest centroid; ties go to the
/// lower index.
pub(crate) fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, p);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|x| (x + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Index drawn with probability proportional to `weights`.
fn weighted_pick(weights: &[f64], total: f64, rng: &mut rng::Rng) -> usize {
    let mut target = rng.random::<f64>() * total;
    let mut pick = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            pick = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
    }
    pick.expect("positive total implies a positive weight")
}

/// Greedy k-means++ seeding: each new centroid is the best of
/// `2 + ln k` candidates drawn proportionally to squared distance.
fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // Fewer distinct points than clusters; excluded by the caller.
            centroids.push(points[rng.random_range(0..points.len())].clone());
            continue;
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let c = weighted_pick(&d2, total, rng);
            let next: Vec<f64> = d2
                .iter()
                .zip(points)
                .map(|(&d, p)| d.min(sq_dist(p, &points[c])))
                .collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|(b, _, _)| potential < *b) {
                best = Some((potential, c, next));
            }
        }
        let (_, c, next) = best.expect("at least one trial");
        centroids.push(points[c].clone());
        d2 = next;
    }
    centroids
}

struct Run {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    wcss: f64,
    history: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], k: usize, opts: &KMeansOptions, rng: &mut rng::Rng) -> Run {
    let dim = points[0].len();
    let mut centroids = plus_plus_init(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut changed = false;
        for (p, l) in points.iter().zip(labels.iter_mut()) {
            let c = nearest(&centroids, p).0;
            if *l != c {
                *l = c;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        // An emptied cluster takes the point farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let (far, _) = points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| counts[labels[*i]] > 1)
                    .map(|(i, p)| (i, sq_dist(p, &centroids[labels[i]])))
                    .fold((usize::MAX, -1.0), |a, b| if b.1 > a.1 { b } else { a });
                if far != usize::MAX {
                    counts[labels[far]] -= 1;
                    labels[far] = c;
                    counts[c] = 1;
                    changed = true;
                }
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let wcss: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centroids[l]))
            .sum();
        history.push(wcss);
        let stalled = prev.is_finite() && prev - wcss <= opts.rel_tol * prev;
        prev = wcss;
        if !changed || stalled {
            break;
        }
    }
    Run {
        labels,
        centroids,
        wcss: prev,
        history,
    }
}

/// Clusters `points` into `k` groups; labels are canonical (decreasing
/// size, ties by first member).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition> {
    let fit = kmeans_with(points, k, seed, &KMeansOptions::default())?;
    Ok(Partition::canonical(&fit.labels))
}

pub fn kmeans_with(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::input("k-means needs k >= 1"));
    }
    if k > points.len() {
        return Err(Error::input(format!(
            "k-means with k = {k} on {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::input("k-means points must be finite and share a dimension"));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::domain(format!(
            "degenerate input: k = {k} exceeds the {distinct} distinct points"
        )));
    }
    let mut best: Option<(usize, Run)> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = rng::rng_from(seed, r as u64);
        let run = lloyd(points, k, opts, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| run.wcss < b.wcss) {
            best = Some((r, run));
        }
    }
    let (restart, run) = best.expect("at least one restart");
    Ok(KMeansFit {
        labels: run.labels,
        centroids: run.centroids,
        wcss: run.wcss,
        restart,
        history: run.history,
    })
}
