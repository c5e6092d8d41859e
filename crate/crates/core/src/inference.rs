//! Cluster-level estimates, the sign-flip randomization test, and network
//! HAC and i.i.d. t-tests.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{BallScratch, Graph};
use crate::linalg;
use crate::partition::Partition;

/// Largest cluster count for which all sign vectors are enumerated.
pub const MAX_RANDOMIZATION_CLUSTERS: usize = 20;

/// Per-node moment values `g(W_i, θ)`, one row of dimension `d` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSample {
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl MomentSample {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let dim = values.first().map_or(0, Vec::len);
        if values.is_empty() || dim == 0 {
            return Err(Error::input("moment sample must be nonempty"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::input(format!("node {i} has dimension {} not {dim}", row.len())));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::input(format!("node {i} has a non-finite moment value")));
            }
        }
        Ok(MomentSample { values, dim })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// First coordinate of every row.
    pub fn first_coordinate(&self) -> Vec<f64> {
        self.values.iter().map(|r| r[0]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in &self.values {
            for (a, x) in m.iter_mut().zip(row) {
                *a += x;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n() as f64);
        m
    }

    fn require_scalar(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::input(format!("t-tests need a scalar moment, got dimension {}", self.dim)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEstimate {
    /// Cluster label in the partition.
    pub cluster: usize,
    pub size: usize,
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEstimates {
    pub per_cluster: Vec<ClusterEstimate>,
    /// `√n`, with `n` the sample size.
    pub scale: f64,
}

impl ClusterEstimates {
    pub fn len(&self) -> usize {
        self.per_cluster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_cluster.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.per_cluster.first().map_or(0, |c| c.estimate.len())
    }

    /// Scaled deviations `√n (θ̂_ℓ - θ)`.
    pub fn deviations(&self, theta_null: &[f64]) -> Result<Vec<Vec<f64>>> {
        if theta_null.len() != self.dim() {
            return Err(Error::input(format!(
                "null has dimension {} but estimates have {}",
                theta_null.len(),
                self.dim()
            )));
        }
        Ok(self
            .per_cluster
            .iter()
            .map(|c| c.estimate.iter().zip(theta_null).map(|(e, t)| self.scale * (e - t)).collect())
            .collect())
    }
}

/// Within-cluster means of the moment values over retained clusters.
pub fn cluster_means(values: &MomentSample, p: &Partition) -> Result<ClusterEstimates> {
    if p.n() != values.n() {
        return Err(Error::input(format!(
            "partition covers {} nodes but the sample has {}",
            p.n(),
            values.n()
        )));
    }
    let members = p.members();
    let mut per_cluster = Vec::new();
    for c in p.retained() {
        if members[c].is_empty() {
            return Err(Error::domain(format!("retained cluster {c} is empty")));
        }
        let mut est = vec![0.0; values.dim()];
        for &i in &members[c] {
            for (a, x) in est.iter_mut().zip(values.row(i)) {
                *a += x;
            }
        }
        est.iter_mut().for_each(|a| *a /= members[c].len() as f64);
        per_cluster.push(ClusterEstimate {
            cluster: c,
            size: members[c].len(),
            estimate: est,
        });
    }
    Ok(ClusterEstimates {
        per_cluster,
        scale: (values.n() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rand,
    Hac,
    Iid,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rand, Method::Hac, Method::Iid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rand => "rand",
            Method::Hac => "hac",
            Method::Iid => "iid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rand" => Ok(Method::Rand),
            "hac" => Ok(Method::Hac),
            "iid" => Ok(Method::Iid),
            other => Err(Error::input(format!("unknown test method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestDetails {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    /// Order-statistic index of the critical value among the flipped
    /// statistics, counted from the smallest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign_vectors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_repaired: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    /// Wald statistic for `rand`; signed t statistic otherwise.
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub details: TestDetails,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Whitened deviations `C^{-1} s_ℓ`, where `C C' = (1/L) Σ s_ℓ s_ℓ'`.
fn whiten(dev: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let l = dev.len();
    let d = dev[0].len();
    let mut middle = vec![vec![0.0; d]; d];
    for s in dev {
        for a in 0..d {
            for b in 0..d {
                middle[a][b] += s[a] * s[b];
            }
        }
    }
    middle.iter_mut().flatten().for_each(|m| *m /= l as f64);
    let chol = linalg::cholesky(&middle)
        .ok_or_else(|| Error::numeric("Wald middle matrix is singular"))?;
    Ok(dev.iter().map(|s| linalg::forward_substitute(&chol, s)).collect())
}

fn check_signs(signs: &[i8], l: usize) -> Result<()> {
    if signs.len() != l || signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::input(format!("need {l} signs, each +1 or -1")));
    }
    Ok(())
}

/// Wald statistic of the sign-flipped cluster deviations `π_ℓ √n (θ̂_ℓ - θ)`.
///
/// The middle matrix `(1/L) Σ s_ℓ s_ℓ'` does not depend on the signs.
pub fn wald_statistic(est: &ClusterEstimates, theta_null: &[f64], signs: &[i8]) -> Result<f64> {
    if est.len() < 2 {
        return Err(Error::domain(format!("Wald statistic needs L >= 2, got {}", est.len())));
    }
    check_signs(signs, est.len())?;
    let white = whiten(&est.deviations(theta_null)?)?;
    let mut u = vec![0.0; white[0].len()];
    for (z, &s) in white.iter().zip(signs) {
        for (a, x) in u.iter_mut().zip(z) {
            *a += f64::from(s) * x;
        }
    }
    Ok(u.iter().map(|x| x * x).sum::<f64>() / est.len() as f64)
}

/// `⌈2^L (1 - α)⌉`, guarded against representation error in `α`.
pub fn critical_index(clusters: usize, alpha: f64) -> usize {
    let total = (1u64 << clusters) as f64;
    ((total * (1.0 - alpha) - 1e-9).ceil() as usize).clamp(1, 1 << clusters)
}

/// Statistic for every sign vector, in Gray-code order starting from all
/// `+1`; entry 0 is the observed statistic.
pub fn flipped_statistics(est: &ClusterEstimates, theta_null: &[f64]) -> Result<Vec<f64>> {
    let l = est.len();
    if l < 2 {
        return Err(Error::domain(format!("randomization test needs L >= 2, got {l}")));
    }
    if l > MAX_RANDOMIZATION_CLUSTERS {
        return Err(Error::Capacity(format!(
            "{l} clusters need 2^{l} sign vectors; at most {MAX_RANDOMIZATION_CLUSTERS} supported, merge or discard clusters"
        )));
    }
    let white = whiten(&est.deviations(theta_null)?)?;
    let d = white[0].len();
    let mut u = vec![0.0; d];
    for z in &white {
        for (a, x) in u.iter_mut().zip(z) {
            *a += x;
        }
    }
    let mut signs = vec![1.0f64; l];
    let total = 1usize << l;
    let mut out = Vec::with_capacity(total);
    let norm = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>() / l as f64;
    out.push(norm(&u));
    for step in 1..total {
        let flip = step.trailing_zeros() as usize;
        let s = signs[flip];
        for (a, x) in u.iter_mut().zip(&white[flip]) {
            *a -= 2.0 * s * x;
        }
        signs[flip] = -s;
        out.push(norm(&u));
    }
    Ok(out)
}

/// Sign-flip randomization test: rejects when the observed statistic
/// strictly exceeds the `k`-th order statistic of all `2^L` flipped values,
/// `k = ⌈2^L (1 - α)⌉` counted from the smallest.
pub fn randomization_test(est: &ClusterEstimates, theta_null: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let mut stats = flipped_statistics(est, theta_null)?;
    let observed = stats[0];
    let l = est.len();
    let k = critical_index(l, alpha);
    let (_, &mut critical, _) = stats.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(TestResult {
        method: Method::Rand,
        statistic: observed,
        critical_value: critical,
        reject: observed > critical,
        alpha,
        details: TestDetails {
            n: est.per_cluster.iter().map(|c| c.size).sum(),
            clusters: Some(l),
            k_index: Some(k),
            sign_vectors: Some(1u64 << l),
            ..TestDetails::default()
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HacVariance {
    /// `d x d` rows.
    pub matrix: Vec<Vec<f64>>,
    pub bandwidth: usize,
    /// Whether negative eigenvalues were clipped to zero.
    pub repaired: bool,
}

/// Network HAC estimate with a uniform kernel over path distance:
/// `(1/n) Σ_i Σ_j 1{dist(i,j) <= bandwidth} (g_i - ḡ)(g_j - ḡ)'`.
pub fn hac_variance(values: &MomentSample, g: &Graph, bandwidth: usize) -> Result<HacVariance> {
    let n = values.n();
    if g.n() != n {
        return Err(Error::input(format!("graph has {} nodes but the sample has {n}", g.n())));
    }
    let d = values.dim();
    let mean = values.mean();
    let centered: Vec<Vec<f64>> = values
        .rows()
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let mut sum = vec![vec![0.0; d]; d];
    let mut scratch = BallScratch::new(n);
    let mut local = vec![0.0; d];
    for i in 0..n {
        local.iter_mut().for_each(|x| *x = 0.0);
        for &j in scratch.ball(g, i, bandwidth) {
            for (a, x) in local.iter_mut().zip(&centered[j]) {
                *a += x;
            }
        }
        for a in 0..d {
            for b in 0..d {
                sum[a][b] += centered[i][a] * local[b];
            }
        }
    }
    let mut matrix: Vec<Vec<f64>> = sum
        .iter()
        .map(|row| row.iter().map(|x| x / n as f64).collect())
        .collect();
    for a in 0..d {
        for b in 0..a {
            let avg = 0.5 * (matrix[a][b] + matrix[b][a]);
            matrix[a][b] = avg;
            matrix[b][a] = avg;
        }
    }
    let repaired = clip_to_psd(&mut matrix)?;
    Ok(HacVariance {
        matrix,
        bandwidth,
        repaired,
    })
}

/// Clips negative eigenvalues to zero in place; reports whether any were.
fn clip_to_psd(m: &mut [Vec<f64>]) -> Result<bool> {
    let d = m.len();
    if d == 1 {
        if m[0][0] < 0.0 {
            m[0][0] = 0.0;
            return Ok(true);
        }
        return Ok(false);
    }
    let a = Mat::from_fn(d, d, |i, j| m[i][j]);
    let (vals, vecs) = linalg::symmetric_eigen(&a)?;
    if vals.iter().all(|&v| v >= 0.0) {
        return Ok(false);
    }
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = (0..d).map(|k| vals[k].max(0.0) * vecs[(i, k)] * vecs[(j, k)]).sum();
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(true)
}

/// `max(1, ⌊ln n / ln max(2, average degree)⌋)`.
pub fn default_bandwidth(g: &Graph) -> Result<usize> {
    let n = g.n() as f64;
    let delta = g.average_degree()?.max(2.0);
    Ok(((n.ln() / delta.ln()).floor() as usize).max(1))
}

fn normal_critical(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

fn t_result(method: Method, t: f64, alpha: f64, details: TestDetails) -> TestResult {
    let critical = normal_critical(alpha);
    TestResult {
        method,
        statistic: t,
        critical_value: critical,
        reject: t.abs() > critical,
        alpha,
        details,
    }
}

/// Two-sided t-test of a scalar mean with a network HAC standard error.
pub fn hac_ttest(
    values: &MomentSample,
    g: &Graph,
    theta_null: f64,
    alpha: f64,
    bandwidth: Option<usize>,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    values.require_scalar()?;
    let bandwidth = match bandwidth {
        Some(b) => b,
        None => default_bandwidth(g)?,
    };
    let hac = hac_variance(values, g, bandwidth)?;
    let var = hac.matrix[0][0];
    if !(var > 0.0) {
        return Err(Error::numeric("HAC variance is not positive"));
    }
    let n = values.n();
    let est = values.mean()[0];
    let se = var.sqrt();
    let t = (n as f64).sqrt() * (est - theta_null) / se;
    Ok(t_result(
        Method::Hac,
        t,
        alpha,
        TestDetails {
            n,
            bandwidth: Some(bandwidth),
            psd_repaired: Some(hac.repaired),
            estimate: Some(est),
            std_error: Some(se / (n as f64).sqrt()),
            ..TestDetails::default()
        },
    ))
}

/// Two-sided t-test of a scalar mean with the i.i.d. standard error.
pub fn iid_ttest(values: &MomentSample, theta_null: f64, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    values.require_scalar()?;
    let n = values.n();
    if n < 2 {
        return Err(Error::input("i.i.d. t-test needs at least two observations"));
    }
    let est = values.mean()[0];
    let ss: f64 = values.rows().iter().map(|r| (r[0] - est).powi(2)).sum();
    let var = ss / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::numeric("sample variance is zero"));
    }
    let se = (var / n as f64).sqrt();
    Ok(t_result(
        Method::Iid,
        (est - theta_null) / se,
        alpha,
        TestDetails {
            n,
            estimate: Some(est),
            std_error: Some(se),
            ..TestDetails::default()
        },
    ))
}
