//! Seeded random graph generators: random geometric graphs, the random
//! connections model, Erdős-Rényi, stochastic block models and the
//! configuration model.
//!
//! All generators emit binary graphs and are deterministic given their
//! seed.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[serde(alias = "RGG")]
    Rgg,
    #[serde(alias = "RCM")]
    Rcm,
    #[serde(alias = "ER")]
    Er,
    #[serde(alias = "SBM")]
    Sbm,
    #[serde(alias = "CONFIG", alias = "configuration")]
    Config,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Rgg => "rgg",
            Model::Rcm => "rcm",
            Model::Er => "er",
            Model::Sbm => "sbm",
            Model::Config => "config",
        }
    }

    /// Whether nodes carry positions in the unit square.
    pub fn is_positional(self) -> bool {
        matches!(self, Model::Rgg | Model::Rcm)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgg" => Ok(Model::Rgg),
            "rcm" => Ok(Model::Rcm),
            "er" => Ok(Model::Er),
            "sbm" => Ok(Model::Sbm),
            "config" | "configuration" => Ok(Model::Config),
            other => Err(Error::input(format!("unknown graph model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub model: Model,
    pub graph: Graph,
    /// Points in `[0,1]^2`, for positional models only.
    pub positions: Option<Vec<[f64; 2]>>,
    /// Latent node types: `α_i` for the RCM, block id for the SBM.
    pub types: Option<Vec<f64>>,
    /// Configuration model only: stubs dropped after failed re-matching.
    pub dropped_stubs: usize,
}

/// RCM units link beyond this many radii with probability below 1e-15.
const RCM_CUTOFF_RADII: f64 = 38.0;

fn uniform_points(n: usize, rng: &mut Rng) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

/// Spatial hash of points in the unit square with cells at least `reach`
/// wide.
struct Grid {
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(points: &[[f64; 2]], reach: f64) -> Self {
        let max_cells = ((points.len() as f64).sqrt().ceil() as usize).max(1);
        let cells = if reach > 0.0 {
            ((1.0 / reach).floor() as usize).clamp(1, max_cells)
        } else {
            max_cells
        };
        let mut buckets = vec![Vec::new(); cells * cells];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::coords(cells, p);
            buckets[cy * cells + cx].push(i);
        }
        Grid { cells, buckets }
    }

    fn coords(cells: usize, p: &[f64; 2]) -> (usize, usize) {
        let cx = ((p[0] * cells as f64) as usize).min(cells - 1);
        let cy = ((p[1] * cells as f64) as usize).min(cells - 1);
        (cx, cy)
    }

    /// Candidates `j > i` in the 3x3 block around `i`'s cell, ascending.
    fn candidates(&self, points: &[[f64; 2]], i: usize, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = Self::coords(self.cells, &points[i]);
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.cells - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.cells - 1) {
                out.extend(self.buckets[y * self.cells + x].iter().filter(|&&j| j > i));
            }
        }
        out.sort_unstable();
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn build(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Graph {
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Graph::from_sorted_unique(n, &edges)
}

/// Connection radius `(target_degree / (π n))^{1/2}`.
pub fn rgg_radius(n: usize, target_degree: f64) -> f64 {
    (target_degree / (PI * n as f64)).sqrt()
}

/// Random geometric graph: uniform points in the unit square, linked when
/// within `rgg_radius(n, target_degree)` of each other.
pub fn gen_rgg(n: usize, target_degree: f64, seed: u64) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(Error::input("random geometric graph needs n >= 2"));
    }
    if !(target_degree >= 0.0 && target_degree.is_finite()) {
        return Err(Error::input("target degree must be finite and nonnegative"));
    }
    gen_rgg_radius(n, rgg_radius(n, target_degree), seed)
}

/// Random geometric graph with an explicit connection radius.
pub fn gen_rgg_radius(n: usize, radius: f64, seed: u64) -> Result<GeneratedGraph> {
    let mut rng = rng::rng(seed);
    let positions = uniform_points(n, &mut rng);
    let mut edges = Vec::new();
    if radius > 0.0 {
        let grid = Grid::new(&positions, radius);
        let mut cand = Vec::new();
        for i in 0..n {
            grid.candidates(&positions, i, &mut cand);
            for &j in &cand {
                if dist(&positions[i], &positions[j]) <= radius {
                    edges.push((i, j, 1.0));
                }
            }
        }
    }
    Ok(GeneratedGraph {
        model: Model::Rgg,
        graph: build(n, edges),
        positions: Some(positions),
        types: None,
        dropped_stubs: 0,
    })
}

/// RCM radius `(target / (divisor · π n))^{1/2}`.
pub fn rcm_radius(n: usize, target: f64, divisor: f64) -> f64 {
    (target / (divisor * PI * n as f64)).sqrt()
}

/// Random connections model with the calibration `r_n = (5/(3.5 π n))^{1/2}`.
pub fn gen_rcm(n: usize, seed: u64) -> Result<GeneratedGraph> {
    gen_rcm_radius(n, rcm_radius(n, 5.0, 3.5), seed)
}

/// Random connections model: `A_ij = 1{α_i + α_j - ||X_i - X_j|| / r > ε_ij}`
/// with `α_i ~ U[0,1]`, `X_i ~ U[0,1]^2` and standard logistic `ε_ij`.
///
/// The distance term enters with a minus sign so that link probability
/// vanishes with distance.
pub fn gen_rcm_radius(n: usize, radius: f64, seed: u64) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(Error::input("random connections model needs n >= 2"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input("RCM radius must be positive"));
    }
    let mut rng = rng::rng(seed);
    let positions = uniform_points(n, &mut rng);
    let alpha: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let reach = radius * (2.0 + RCM_CUTOFF_RADII);
    let grid = Grid::new(&positions, reach);
    let mut edges = Vec::new();
    let mut cand = Vec::new();
    for i in 0..n {
        grid.candidates(&positions, i, &mut cand);
        for &j in &cand {
            let d = dist(&positions[i], &positions[j]);
            if d > reach {
                continue;
            }
            let u: f64 = rng.random();
            let eps = (u / (1.0 - u)).ln();
            if alpha[i] + alpha[j] - d / radius > eps {
                edges.push((i, j, 1.0));
            }
        }
    }
    Ok(GeneratedGraph {
        model: Model::Rcm,
        graph: build(n, edges),
        positions: Some(positions),
        types: Some(alpha),
        dropped_stubs: 0,
    })
}

/// Calls `f` with each index in `0..total` selected independently with
/// probability `p`, ascending, by geometric skipping.
fn bernoulli_indices(total: u64, p: f64, rng: &mut Rng, mut f: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(f);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut next: u64 = 0;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (total - next) as f64 {
            return;
        }
        next += skip as u64;
        f(next);
        next += 1;
        if next >= total {
            return;
        }
    }
}

/// Maps a linear index over pairs `j < i` to `(j, i)`.
fn triangle_pair(t: u64) -> (usize, usize) {
    let mut i = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0).floor() as u64;
    while i * (i - 1) / 2 > t {
        i -= 1;
    }
    while (i + 1) * i / 2 <= t {
        i += 1;
    }
    let j = t - i * (i - 1) / 2;
    (j as usize, i as usize)
}

/// Erdős-Rényi graph: every pair links independently with probability
/// `kappa / n`.
pub fn gen_er(n: usize, kappa: f64, seed: u64) -> Result<GeneratedGraph> {
    if n < 2 {
        return Err(Error::input("Erdős-Rényi graph needs n >= 2"));
    }
    if !(kappa > 0.0 && kappa < n as f64) {
        return Err(Error::input(format!("kappa must lie in (0, n), got {kappa}")));
    }
    let mut rng = rng::rng(seed);
    let p = kappa / n as f64;
    let total = (n as u64) * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    bernoulli_indices(total, p, &mut rng, |t| {
        let (j, i) = triangle_pair(t);
        edges.push((j, i, 1.0));
    });
    Ok(GeneratedGraph {
        model: Model::Er,
        graph: build(n, edges),
        positions: None,
        types: None,
        dropped_stubs: 0,
    })
}

/// Stochastic block model with `blocks` equal consecutive blocks.
pub fn gen_sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> Result<GeneratedGraph> {
    if blocks == 0 || n == 0 || n % blocks != 0 {
        return Err(Error::input(format!("{blocks} blocks do not divide {n} nodes")));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("{name} = {p} is not a probability")));
        }
    }
    let size = n / blocks;
    let mut rng = rng::rng(seed);
    let mut edges = Vec::new();
    for a in 0..blocks {
        let base_a = a * size;
        let within = (size as u64) * (size as u64).saturating_sub(1) / 2;
        bernoulli_indices(within, p_in, &mut rng, |t| {
            let (j, i) = triangle_pair(t);
            edges.push((base_a + j, base_a + i, 1.0));
        });
        for b in a + 1..blocks {
            let base_b = b * size;
            bernoulli_indices((size * size) as u64, p_out, &mut rng, |t| {
                let (r, c) = ((t / size as u64) as usize, (t % size as u64) as usize);
                edges.push((base_a + r, base_b + c, 1.0));
            });
        }
    }
    let types = (0..n).map(|i| (i / size) as f64).collect();
    Ok(GeneratedGraph {
        model: Model::Sbm,
        graph: build(n, edges),
        positions: None,
        types: Some(types),
        dropped_stubs: 0,
    })
}

/// Erdős-Gallai test for a simple graph with the given degrees.
pub fn is_graphical(degrees: &[usize]) -> bool {
    let n = degrees.len();
    if degrees.iter().sum::<usize>() % 2 == 1 || degrees.iter().any(|&d| d >= n.max(1)) {
        return degrees.iter().all(|&d| d == 0) && n <= 1;
    }
    let mut d = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let mut lhs = 0usize;
    for k in 1..=n {
        lhs += d[k - 1];
        let rhs = k * (k - 1) + d[k..].iter().map(|&x| x.min(k)).sum::<usize>();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// Maximum re-matching passes for clashing stubs.
pub const CONFIG_MAX_PASSES: usize = 100;

/// Configuration model by stub matching. Self-links and repeated pairs are
/// returned to the pool and re-matched; stubs still unmatched after
/// [`CONFIG_MAX_PASSES`] passes are dropped and counted.
pub fn gen_configuration(degrees: &[usize], seed: u64) -> Result<GeneratedGraph> {
    let n = degrees.len();
    let total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(Error::input(format!("degree sum {total} is odd")));
    }
    if let Some(i) = degrees.iter().position(|&d| d >= n) {
        return Err(Error::input(format!(
            "node {i} has degree {} but only {} other nodes exist",
            degrees[i],
            n.saturating_sub(1)
        )));
    }
    if !is_graphical(degrees) {
        return Err(Error::input("degree sequence is not graphical"));
    }
    let mut rng = rng::rng(seed);
    let mut pool: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i, d))
        .collect();
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(total / 2);
    let mut edges = Vec::with_capacity(total / 2);
    for _ in 0..CONFIG_MAX_PASSES {
        if pool.len() < 2 {
            break;
        }
        pool.shuffle(&mut rng);
        let mut rejected = Vec::new();
        for pair in pool.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && seen.insert((u, v)) {
                edges.push((u, v, 1.0));
            } else {
                rejected.extend_from_slice(pair);
            }
        }
        pool = rejected;
    }
    Ok(GeneratedGraph {
        model: Model::Config,
        graph: build(n, edges),
        positions: None,
        types: None,
        dropped_stubs: pool.len(),
    })
}
