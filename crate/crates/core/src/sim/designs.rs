//! Outcome models for the simulation designs and the IPW spillover
//! estimator.

use rand::Rng as _;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphgen::GeneratedGraph;
use crate::inference::MomentSample;
use crate::rng;

/// Sweep cap for the binary game.
pub const MAX_BEST_RESPONSE_SWEEPS: usize = 1000;
/// Residual target for the linear-in-means solve.
pub const LIM_TOLERANCE: f64 = 1e-10;
const MAX_LIM_ITERATIONS: usize = 100_000;

/// Weighted neighbor average of `v`, zero at isolated nodes.
pub fn neighbor_average(g: &Graph, v: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let deg = g.degrees()[i];
            if deg == 0.0 {
                return 0.0;
            }
            let s: f64 = g
                .neighbors(i)
                .iter()
                .zip(g.neighbor_weights(i))
                .map(|(&j, w)| w * v[j])
                .sum();
            s / deg
        })
        .collect()
}

/// `W_i = ε_i + (neighbor average of ε)_i` with `ε_i` i.i.d. standard normal.
pub fn design1_outcomes(g: &Graph, seed: u64) -> Result<MomentSample> {
    let mut rng = rng::rng(seed);
    let eps: Vec<f64> = (0..g.n()).map(|_| rng.sample(StandardNormal)).collect();
    let avg = neighbor_average(g, &eps);
    MomentSample::scalar(eps.iter().zip(&avg).map(|(e, a)| e + a).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub p_treat: f64,
    pub nu_scale: f64,
    /// Add `x_i - 0.5` to the error for models with positions.
    pub homophily: bool,
}

impl OutcomeParams {
    /// `p_treat = 0.1` roughly equalizes `1/P(T_i = 1)` at degree 1 and
    /// `1/P(T_i = 0)` at degree 20, bounding IPW weights near 10 over that
    /// range.
    pub fn linear_in_means() -> Self {
        OutcomeParams {
            alpha: 1.0,
            beta: 0.5,
            delta: 1.0,
            gamma: 1.0,
            p_treat: 0.1,
            nu_scale: 1.0,
            homophily: true,
        }
    }

    pub fn binary_game() -> Self {
        OutcomeParams {
            beta: 1.0,
            ..Self::linear_in_means()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_treat > 0.0 && self.p_treat < 1.0) {
            return Err(Error::input(format!("p_treat must lie in (0, 1), got {}", self.p_treat)));
        }
        let all = [self.alpha, self.beta, self.delta, self.gamma, self.nu_scale];
        if all.iter().any(|x| !x.is_finite()) || self.nu_scale < 0.0 {
            return Err(Error::input("outcome parameters must be finite with nu_scale >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design2Draw {
    pub outcomes: Vec<f64>,
    pub treatments: Vec<bool>,
    /// Sup-norm residual of the equilibrium condition; zero for the game.
    pub residual: f64,
    pub iterations: usize,
}

/// Treatments and the index `α + δ GD + γ D + ε` shared by both models.
fn primitives(gg: &GeneratedGraph, params: &OutcomeParams, seed: u64) -> Result<(Vec<bool>, Vec<f64>)> {
    params.validate()?;
    let g = &gg.graph;
    let n = g.n();
    let mut rng = rng::rng(seed);
    let coin = Bernoulli::new(params.p_treat).map_err(|e| Error::input(e.to_string()))?;
    let treatments: Vec<bool> = (0..n).map(|_| coin.sample(&mut rng)).collect();
    let nu: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let d: Vec<f64> = treatments.iter().map(|&t| f64::from(u8::from(t))).collect();
    let gd = neighbor_average(g, &d);
    let shift = |i: usize| match (&gg.positions, params.homophily) {
        (Some(pos), true) => pos[i][0] - 0.5,
        _ => 0.0,
    };
    let index = (0..n)
        .map(|i| params.alpha + params.delta * gd[i] + params.gamma * d[i] + params.nu_scale * nu[i] + shift(i))
        .collect();
    Ok((treatments, index))
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Linear-in-means outcomes: the solution of `Y = c + β G Y`, where
/// `c = α + δ GD + γ D + ε` and `G` is the row-normalized adjacency.
///
/// Solved by fixed-point iteration, a contraction for `|β| < 1`, until the
/// sup-norm residual is below [`LIM_TOLERANCE`].
pub fn design2_lim_outcomes(gg: &GeneratedGraph, params: &OutcomeParams, seed: u64) -> Result<Design2Draw> {
    if params.beta.abs() >= 1.0 {
        return Err(Error::input(format!("linear-in-means needs |beta| < 1, got {}", params.beta)));
    }
    let (treatments, c) = primitives(gg, params, seed)?;
    let g = &gg.graph;
    let mut y = c.clone();
    for iteration in 1..=MAX_LIM_ITERATIONS {
        let gy = neighbor_average(g, &y);
        let next: Vec<f64> = c.iter().zip(&gy).map(|(ci, v)| ci + params.beta * v).collect();
        let residual = sup_distance(&y, &next);
        if residual < LIM_TOLERANCE {
            return Ok(Design2Draw {
                outcomes: y,
                treatments,
                residual,
                iterations: iteration,
            });
        }
        y = next;
    }
    Err(Error::NonConvergence {
        iterations: MAX_LIM_ITERATIONS,
    })
}

/// Binary game outcomes `Y_i = 1{c_i + β (G Y)_i > 0}`: the least
/// equilibrium, reached by simultaneous best responses from `Y = 0`.
pub fn design2_bg_outcomes(gg: &GeneratedGraph, params: &OutcomeParams, seed: u64) -> Result<Design2Draw> {
    if params.beta < 0.0 {
        return Err(Error::input(format!("binary game needs beta >= 0, got {}", params.beta)));
    }
    let (treatments, c) = primitives(gg, params, seed)?;
    let g = &gg.graph;
    let mut y = vec![0.0; g.n()];
    for sweep in 1..=MAX_BEST_RESPONSE_SWEEPS {
        let next = best_response(g, &c, params.beta, &y);
        if next == y {
            return Ok(Design2Draw {
                outcomes: y,
                treatments,
                residual: 0.0,
                iterations: sweep,
            });
        }
        y = next;
    }
    Err(Error::NonConvergence {
        iterations: MAX_BEST_RESPONSE_SWEEPS,
    })
}

/// One simultaneous best-response sweep of the binary game.
pub fn best_response(g: &Graph, index: &[f64], beta: f64, y: &[f64]) -> Vec<f64> {
    let gy = neighbor_average(g, y);
    index
        .iter()
        .zip(&gy)
        .map(|(c, v)| if c + beta * v > 0.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Exposure propensity `P(T_i = 1) = 1 - (1 - p)^{deg_i}`.
pub fn exposure_probability(neighbors: usize, p_treat: f64) -> f64 {
    1.0 - (1.0 - p_treat).powi(neighbors as i32)
}

/// Per-node IPW terms `Y_i (T_i / P_i - (1 - T_i) / (1 - P_i))` for `nodes`,
/// where `T_i` indicates a treated neighbor.
pub fn ipw_contributions(
    outcomes: &[f64],
    treatments: &[bool],
    g: &Graph,
    p_treat: f64,
    nodes: &[usize],
) -> Result<Vec<f64>> {
    if !(p_treat > 0.0 && p_treat < 1.0) {
        return Err(Error::input(format!("p_treat must lie in (0, 1), got {p_treat}")));
    }
    if outcomes.len() != g.n() || treatments.len() != g.n() {
        return Err(Error::input("outcomes and treatments must cover every node"));
    }
    nodes
        .iter()
        .map(|&i| {
            if i >= g.n() {
                return Err(Error::NodeOutOfRange { node: i, n: g.n() });
            }
            let deg = g.neighbor_count(i);
            if deg == 0 {
                return Err(Error::domain(format!("node {i} is isolated and has no exposure propensity")));
            }
            let p = exposure_probability(deg, p_treat);
            let exposed = g.neighbors(i).iter().any(|&j| treatments[j]);
            let w = if exposed { 1.0 / p } else { -1.0 / (1.0 - p) };
            Ok(outcomes[i] * w)
        })
        .collect()
}

/// Average of [`ipw_contributions`] over `nodes`.
pub fn ipw_estimator(
    outcomes: &[f64],
    treatments: &[bool],
    g: &Graph,
    p_treat: f64,
    nodes: &[usize],
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::input("IPW estimator over an empty node set"));
    }
    let terms = ipw_contributions(outcomes, treatments, g, p_treat, nodes)?;
    Ok(terms.iter().sum::<f64>() / nodes.len() as f64)
}
