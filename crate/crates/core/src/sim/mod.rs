//! Seeded Monte Carlo harness for the spectra study and the two size
//! designs.
//!
//! Replication `i` draws all of its randomness from
//! `derive_seed(seed, i)`, and results are aggregated in replication order,
//! so output is bit-identical for any worker count.

mod designs;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::diagnostics::{self, choose_num_clusters, PipelineOptions};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphgen::{self, GeneratedGraph, Model};
use crate::inference::{self, cluster_means, Method, MomentSample, MAX_RANDOMIZATION_CLUSTERS};
use crate::rng;
use crate::spectral;

pub use designs::{
    best_response, design1_outcomes, design2_bg_outcomes, design2_lim_outcomes, exposure_probability,
    ipw_contributions, ipw_estimator, neighbor_average, Design2Draw, OutcomeParams, LIM_TOLERANCE,
    MAX_BEST_RESPONSE_SWEEPS,
};

pub const RESULTS_HEADER: &str = "# netclust results v1";
/// Pilot replications used to estimate the Design 2 null value.
pub const PILOT_REPLICATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    #[serde(rename = "SPECTRA", alias = "spectra")]
    Spectra,
    #[serde(rename = "D1", alias = "d1")]
    D1,
    #[serde(rename = "D2_LIM", alias = "d2_lim")]
    D2Lim,
    #[serde(rename = "D2_BG", alias = "d2_bg")]
    D2Bg,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Spectra => "SPECTRA",
            Design::D1 => "D1",
            Design::D2Lim => "D2_LIM",
            Design::D2Bg => "D2_BG",
        }
    }

    fn is_design2(self) -> bool {
        matches!(self, Design::D2Lim | Design::D2Bg)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const PARAM_KEYS: &[&str] = &[
    "kappa",
    "rcm_divisor",
    "blocks",
    "p_in_scale",
    "p_out_scale",
    "deg_min",
    "deg_max",
    "alpha",
    "beta",
    "delta",
    "gamma",
    "p_treat",
    "nu_scale",
    "homophily",
];

fn default_min_size() -> usize {
    diagnostics::DEFAULT_MIN_SIZE
}

fn default_alpha() -> f64 {
    0.05
}

/// `null`, a missing key or `"auto"` select the cluster count from the
/// spectrum.
fn de_l_giant<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Count(usize),
        Word(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Count(l)) => Ok(Some(l)),
        Some(Raw::Word(w)) if w.eq_ignore_ascii_case("auto") => Ok(None),
        Some(Raw::Word(w)) => Err(serde::de::Error::custom(format!("L_giant must be a count or \"auto\", got {w:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: Model,
    pub n: usize,
    pub design: Design,
    pub replications: usize,
    #[serde(rename = "L_giant", default, deserialize_with = "de_l_giant")]
    pub l_giant: Option<usize>,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub dgp_params: BTreeMap<String, f64>,
    /// Design 2 null value; estimated by a pilot run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_null: Option<f64>,
    /// HAC bandwidth; the default rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
}

impl SimulationConfig {
    pub fn new(model: Model, design: Design, n: usize, replications: usize, seed: u64) -> Self {
        SimulationConfig {
            model,
            n,
            design,
            replications,
            l_giant: if design == Design::Spectra { None } else { Some(8) },
            min_size: default_min_size(),
            alpha: default_alpha(),
            seed,
            dgp_params: BTreeMap::new(),
            theta_null: None,
            bandwidth: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulationConfig =
            serde_json::from_str(text).map_err(|e| Error::input(format!("simulation config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::input("replications must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::input(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n < 2 {
            return Err(Error::input("n must be at least 2"));
        }
        if let Some(k) = self.dgp_params.keys().find(|k| !PARAM_KEYS.contains(&k.as_str())) {
            return Err(Error::input(format!("unknown dgp parameter {k:?}")));
        }
        if self.dgp_params.values().any(|v| !v.is_finite()) {
            return Err(Error::input("dgp parameters must be finite"));
        }
        Ok(())
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.dgp_params.get(key).copied().unwrap_or(default)
    }

    fn kappa(&self) -> f64 {
        self.param("kappa", if self.design.is_design2() { 8.0 } else { 5.0 })
    }

    pub fn outcome_params(&self) -> OutcomeParams {
        let base = match self.design {
            Design::D2Bg => OutcomeParams::binary_game(),
            _ => OutcomeParams::linear_in_means(),
        };
        OutcomeParams {
            alpha: self.param("alpha", base.alpha),
            beta: self.param("beta", base.beta),
            delta: self.param("delta", base.delta),
            gamma: self.param("gamma", base.gamma),
            p_treat: self.param("p_treat", base.p_treat),
            nu_scale: self.param("nu_scale", base.nu_scale),
            homophily: self.param("homophily", 1.0) != 0.0,
        }
    }

    /// Draws one network for this configuration.
    pub fn generate(&self, seed: u64) -> Result<GeneratedGraph> {
        let n = self.n;
        let kappa = self.kappa();
        match self.model {
            Model::Rgg => graphgen::gen_rgg(n, kappa, seed),
            Model::Rcm => {
                let divisor = self.param("rcm_divisor", if self.design.is_design2() { 3.0 } else { 3.5 });
                graphgen::gen_rcm_radius(n, graphgen::rcm_radius(n, kappa, divisor), seed)
            }
            Model::Er => graphgen::gen_er(n, kappa, seed),
            Model::Sbm => {
                let blocks = self.param("blocks", 10.0);
                if blocks < 1.0 || blocks.fract() != 0.0 {
                    return Err(Error::input("blocks must be a positive integer"));
                }
                let p_in = self.param("p_in_scale", 10.0) / n as f64;
                let p_out = self.param("p_out_scale", 40.0 / 9.0) / n as f64;
                graphgen::gen_sbm(n, blocks as usize, p_in, p_out, seed)
            }
            Model::Config => {
                let lo = self.param("deg_min", 1.0);
                let hi = self.param("deg_max", 20.0);
                if lo < 0.0 || hi < lo || lo.fract() != 0.0 || hi.fract() != 0.0 {
                    return Err(Error::input("deg_min and deg_max must be integers with 0 <= deg_min <= deg_max"));
                }
                let degrees = truncated_poisson_degrees(n, kappa, lo as usize, hi as usize, seed)?;
                graphgen::gen_configuration(&degrees, rng::derive_seed(seed, 1))
            }
        }
    }
}

/// I.i.d. Poisson(`mean`) degrees truncated to `[lo, hi]` by rejection; the
/// last draw is repeated until the total is even.
pub fn truncated_poisson_degrees(n: usize, mean: f64, lo: usize, hi: usize, seed: u64) -> Result<Vec<usize>> {
    let poisson = Poisson::new(mean).map_err(|e| Error::input(format!("Poisson mean {mean}: {e}")))?;
    if hi >= n {
        return Err(Error::input(format!("maximum degree {hi} needs more than {n} nodes")));
    }
    let mut rng = rng::rng(seed);
    let draw = |rng: &mut rng::Rng| -> Result<usize> {
        for _ in 0..100_000 {
            let d = poisson.sample(rng) as usize;
            if (lo..=hi).contains(&d) {
                return Ok(d);
            }
        }
        Err(Error::domain(format!("Poisson({mean}) rarely lands in [{lo}, {hi}]")))
    };
    let mut degrees = Vec::with_capacity(n);
    for _ in 0..n {
        degrees.push(draw(&mut rng)?);
    }
    let mut tries = 0;
    while degrees.iter().sum::<usize>() % 2 == 1 {
        degrees[n - 1] = draw(&mut rng)?;
        tries += 1;
        if tries > 10_000 {
            return Err(Error::domain("could not make the degree sum even"));
        }
    }
    Ok(degrees)
}

/// Per-replication summary, in the order replications were indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    /// `None` when the randomization test was not run: fewer than two or
    /// more than the enumeration cap of retained clusters.
    pub rand_reject: Option<bool>,
    /// `None` when the HAC variance estimate was not positive.
    pub hac_reject: Option<bool>,
    pub iid_reject: Option<bool>,
    pub max_conductance: f64,
    pub clusters: usize,
    /// Cluster sizes in decreasing order.
    pub cluster_sizes: Vec<usize>,
    pub l_effective: usize,
    pub spectral_gap: Option<f64>,
    pub lambda_l: Option<f64>,
    pub giant: usize,
    pub average_degree: f64,
    pub dropped_stubs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub mc_se: f64,
    pub count: usize,
}

impl Estimate {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let count = v.len();
        let mean = v.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Some(Estimate {
            mean,
            mc_se: (var / count as f64).sqrt(),
            count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub config: SimulationConfig,
    /// Null value the tests were run at.
    pub theta_null: Option<f64>,
    /// Rejection rates over all replications; a skipped randomization test
    /// counts as a non-rejection.
    pub rates: BTreeMap<Method, Estimate>,
    pub rand_skipped: usize,
    /// Replications whose HAC variance was not positive; excluded from the
    /// HAC rate.
    pub hac_degenerate: usize,
    /// Summary statistics keyed by row name.
    pub summaries: BTreeMap<String, Estimate>,
    pub records: Vec<ReplicationRecord>,
}

impl MCResult {
    pub fn rate(&self, method: Method) -> Option<f64> {
        self.rates.get(&method).map(|e| e.mean)
    }

    pub fn summary(&self, key: &str) -> Option<f64> {
        self.summaries.get(key).map(|e| e.mean)
    }

    /// Results table: `method,model,n,value,mc_se`, rates first.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{RESULTS_HEADER} design={}", self.config.design)?;
        writeln!(w, "method,model,n,value,mc_se")?;
        let (model, n) = (self.config.model, self.config.n);
        for method in Method::ALL {
            if let Some(e) = self.rates.get(&method) {
                writeln!(w, "{method},{model},{n},{},{}", e.mean, e.mc_se)?;
            }
        }
        for key in SUMMARY_ORDER {
            if let Some(e) = self.summaries.get(*key) {
                writeln!(w, "{key},{model},{n},{},{}", e.mean, e.mc_se)?;
            }
        }
        Ok(())
    }
}

const SUMMARY_ORDER: &[&str] = &[
    "max_conductance",
    "clusters",
    "gap",
    "lambda_l",
    "median_cluster",
    "first_cluster",
    "second_cluster",
    "last_cluster",
    "giant",
    "degree",
    "dropped_stubs",
];

fn median(sorted_desc: &[usize]) -> f64 {
    let m = sorted_desc.len();
    if m % 2 == 1 {
        sorted_desc[m / 2] as f64
    } else {
        0.5 * (sorted_desc[m / 2 - 1] + sorted_desc[m / 2]) as f64
    }
}

fn spectra_replication(cfg: &SimulationConfig, index: usize, gg: &GeneratedGraph, seed: u64) -> Result<ReplicationRecord> {
    let g = &gg.graph;
    let giant = g.connected_components().giant_members();
    if giant.len() < 2 {
        return Err(Error::domain("giant component has no links"));
    }
    let sub = g.induced_subgraph(&giant)?;
    let report = match cfg.l_giant {
        Some(l) => spectral::spectrum(&sub, Some((l + 1).min(sub.n())))?,
        None => spectral::spectrum(&sub, None)?,
    };
    let l = match cfg.l_giant {
        Some(l) => l,
        None => choose_num_clusters(&report, diagnostics::DEFAULT_EIGEN_THRESHOLD, diagnostics::DEFAULT_MAX_CLUSTERS),
    };
    let partition = spectral::spectral_cluster_from_report(&report, l, rng::derive_seed(seed, 2))?.partition;
    let mut sizes = partition.sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ReplicationRecord {
        index,
        rand_reject: None,
        hac_reject: None,
        iid_reject: None,
        max_conductance: sub.max_conductance(&partition)?,
        clusters: l,
        cluster_sizes: sizes,
        l_effective: l,
        spectral_gap: report.gap_after(l),
        lambda_l: report.eigenvalues.get(l - 1).copied(),
        giant: giant.len(),
        average_degree: g.average_degree()?,
        dropped_stubs: gg.dropped_stubs,
    })
}

/// Moment values and the graph they live on.
struct TestInput {
    values: MomentSample,
    graph: Graph,
    null: f64,
}

fn design_input(cfg: &SimulationConfig, gg: &GeneratedGraph, seed: u64, theta_null: Option<f64>) -> Result<TestInput> {
    match cfg.design {
        Design::D1 => Ok(TestInput {
            values: design1_outcomes(&gg.graph, seed)?,
            graph: gg.graph.clone(),
            null: 0.0,
        }),
        Design::D2Lim | Design::D2Bg => {
            let (nodes, terms) = design2_terms(cfg, gg, seed)?;
            Ok(TestInput {
                values: MomentSample::scalar(terms)?,
                graph: gg.graph.induced_subgraph(&nodes)?,
                null: theta_null.expect("design 2 null resolved before replications"),
            })
        }
        Design::Spectra => unreachable!("spectra replications run no tests"),
    }
}

/// IPW terms over the nodes with at least one neighbor.
fn design2_terms(cfg: &SimulationConfig, gg: &GeneratedGraph, seed: u64) -> Result<(Vec<usize>, Vec<f64>)> {
    let params = cfg.outcome_params();
    let draw = match cfg.design {
        Design::D2Lim => design2_lim_outcomes(gg, &params, seed)?,
        _ => design2_bg_outcomes(gg, &params, seed)?,
    };
    let g = &gg.graph;
    let nodes: Vec<usize> = (0..g.n()).filter(|&i| g.neighbor_count(i) > 0).collect();
    if nodes.len() < 2 {
        return Err(Error::domain("fewer than two nodes have neighbors"));
    }
    let terms = ipw_contributions(&draw.outcomes, &draw.treatments, g, params.p_treat, &nodes)?;
    Ok((nodes, terms))
}

fn test_replication(
    cfg: &SimulationConfig,
    index: usize,
    gg: &GeneratedGraph,
    seed: u64,
    theta_null: Option<f64>,
) -> Result<ReplicationRecord> {
    let input = design_input(cfg, gg, rng::derive_seed(seed, 1), theta_null)?;
    let opts = PipelineOptions {
        l_giant: cfg.l_giant,
        min_size: cfg.min_size,
        seed: rng::derive_seed(seed, 2),
        ..PipelineOptions::default()
    };
    let out = diagnostics::cluster_pipeline(&input.graph, &opts)?;
    let est = cluster_means(&input.values, &out.partition)?;
    let rand_reject = if (2..=MAX_RANDOMIZATION_CLUSTERS).contains(&est.len()) {
        Some(inference::randomization_test(&est, &[input.null], cfg.alpha)?.reject)
    } else {
        None
    };
    // A non-positive HAC variance leaves the t-test undefined for this draw.
    let hac_reject = match inference::hac_ttest(&input.values, &input.graph, input.null, cfg.alpha, cfg.bandwidth) {
        Ok(r) => Some(r.reject),
        Err(Error::Numeric(_)) => None,
        Err(e) => return Err(e),
    };
    let iid = inference::iid_ttest(&input.values, input.null, cfg.alpha)?;
    let mut sizes = out.diagnostics.retained_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ReplicationRecord {
        index,
        rand_reject,
        hac_reject,
        iid_reject: Some(iid.reject),
        max_conductance: out.diagnostics.max_conductance,
        clusters: out.diagnostics.retained_clusters,
        cluster_sizes: sizes,
        l_effective: out.diagnostics.l_effective,
        spectral_gap: out.diagnostics.spectral_gap,
        lambda_l: out.diagnostics.lambda_l,
        giant: out.giant.len(),
        average_degree: gg.graph.average_degree()?,
        dropped_stubs: gg.dropped_stubs,
    })
}

fn replication(cfg: &SimulationConfig, index: usize, theta_null: Option<f64>) -> Result<ReplicationRecord> {
    let seed = rng::derive_seed(cfg.seed, index as u64);
    let gg = cfg.generate(rng::derive_seed(seed, 0))?;
    match cfg.design {
        Design::Spectra => spectra_replication(cfg, index, &gg, seed),
        _ => test_replication(cfg, index, &gg, seed, theta_null),
    }
}

/// Stream offset separating pilot draws from the main replications.
const PILOT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Design 2 null value: the average IPW estimate over
/// [`PILOT_REPLICATIONS`] independent draws at the configured size.
pub fn pilot_theta(cfg: &SimulationConfig) -> Result<f64> {
    if !cfg.design.is_design2() {
        return Err(Error::input("pilot null values apply to design 2 only"));
    }
    let pilot_seed = rng::derive_seed(cfg.seed, PILOT_STREAM);
    let estimates: Vec<Result<f64>> = (0..PILOT_REPLICATIONS)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_seed(pilot_seed, i as u64);
            let gg = cfg.generate(rng::derive_seed(seed, 0))?;
            let (_, terms) = design2_terms(cfg, &gg, rng::derive_seed(seed, 1))?;
            Ok(terms.iter().sum::<f64>() / terms.len() as f64)
        })
        .collect();
    let mut total = 0.0;
    for e in estimates {
        total += e?;
    }
    Ok(total / PILOT_REPLICATIONS as f64)
}

/// Runs every replication on the current rayon pool.
pub fn run_monte_carlo(cfg: &SimulationConfig) -> Result<MCResult> {
    cfg.validate()?;
    let theta_null = match cfg.design {
        Design::Spectra => None,
        Design::D1 => Some(0.0),
        Design::D2Lim | Design::D2Bg => Some(match cfg.theta_null {
            Some(t) => t,
            None => pilot_theta(cfg)?,
        }),
    };
    let outcomes: Vec<Result<ReplicationRecord>> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replication(cfg, i, theta_null))
        .collect();
    let mut records = Vec::with_capacity(cfg.replications);
    for (index, r) in outcomes.into_iter().enumerate() {
        records.push(r.map_err(|e| Error::Replication {
            index,
            source: Box::new(e),
        })?);
    }
    Ok(aggregate(cfg, theta_null, records))
}

/// Runs on a dedicated pool of `threads` workers.
pub fn run_monte_carlo_threads(cfg: &SimulationConfig, threads: usize) -> Result<MCResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    pool.install(|| run_monte_carlo(cfg))
}

fn aggregate(cfg: &SimulationConfig, theta_null: Option<f64>, records: Vec<ReplicationRecord>) -> MCResult {
    let flag = |b: bool| f64::from(u8::from(b));
    let mut rates = BTreeMap::new();
    let mut rand_skipped = 0;
    let mut hac_degenerate = 0;
    if cfg.design != Design::Spectra {
        rand_skipped = records.iter().filter(|r| r.rand_reject.is_none()).count();
        hac_degenerate = records.iter().filter(|r| r.hac_reject.is_none()).count();
        let picks: [(Method, fn(&ReplicationRecord) -> Option<bool>); 3] = [
            (Method::Rand, |r| Some(r.rand_reject.unwrap_or(false))),
            (Method::Hac, |r| r.hac_reject),
            (Method::Iid, |r| r.iid_reject),
        ];
        for (method, pick) in picks {
            if let Some(mut e) = Estimate::of(records.iter().filter_map(pick).map(flag)) {
                e.mc_se = (e.mean * (1.0 - e.mean) / e.count as f64).sqrt();
                rates.insert(method, e);
            }
        }
    }
    let mut summaries = BTreeMap::new();
    let mut put = |key: &str, e: Option<Estimate>| {
        if let Some(e) = e {
            summaries.insert(key.to_string(), e);
        }
    };
    put("max_conductance", Estimate::of(records.iter().map(|r| r.max_conductance)));
    put("clusters", Estimate::of(records.iter().map(|r| r.clusters as f64)));
    put("gap", Estimate::of(records.iter().filter_map(|r| r.spectral_gap)));
    put("lambda_l", Estimate::of(records.iter().filter_map(|r| r.lambda_l)));
    let sized = || records.iter().filter(|r| !r.cluster_sizes.is_empty());
    put("median_cluster", Estimate::of(sized().map(|r| median(&r.cluster_sizes))));
    put("first_cluster", Estimate::of(sized().map(|r| r.cluster_sizes[0] as f64)));
    put(
        "second_cluster",
        Estimate::of(records.iter().filter_map(|r| r.cluster_sizes.get(1)).map(|&s| s as f64)),
    );
    put("last_cluster", Estimate::of(sized().map(|r| *r.cluster_sizes.last().unwrap() as f64)));
    put("giant", Estimate::of(records.iter().map(|r| r.giant as f64)));
    put("degree", Estimate::of(records.iter().map(|r| r.average_degree)));
    if cfg.model == Model::Config {
        put("dropped_stubs", Estimate::of(records.iter().map(|r| r.dropped_stubs as f64)));
    }
    MCResult {
        config: cfg.clone(),
        theta_null,
        rates,
        rand_skipped,
        hac_degenerate,
        summaries,
        records,
    }
}

/// Random sign flips of i.i.d. normal cluster deviations: the fraction of
/// `replications` in which the randomization test rejects at `alpha`.
pub fn randomization_null_rate(clusters: usize, replications: usize, alpha: f64, seed: u64) -> Result<f64> {
    let rejects: Vec<Result<bool>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::rng_from(seed, i as u64);
            let per_cluster = (0..clusters)
                .map(|c| inference::ClusterEstimate {
                    cluster: c,
                    size: 1,
                    estimate: vec![rng.sample(rand_distr::StandardNormal)],
                })
                .collect();
            let est = inference::ClusterEstimates { per_cluster, scale: 1.0 };
            Ok(inference::randomization_test(&est, &[0.0], alpha)?.reject)
        })
        .collect();
    let mut count = 0usize;
    for r in rejects {
        count += usize::from(r?);
    }
    Ok(count as f64 / replications as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"model":"RGG","n":300,"design":"D1","replications":3,"L_giant":8,"min_size":20,"alpha":0.05,"seed":7,"dgp_params":{"kappa":5.0}}"#;
        let cfg = SimulationConfig::from_json(text).unwrap();
        assert_eq!(cfg.model, Model::Rgg);
        assert_eq!(cfg.l_giant, Some(8));
        let back = SimulationConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let auto = r#"{"model":"er","n":300,"design":"SPECTRA","replications":1,"L_giant":"auto","seed":1}"#;
        assert_eq!(SimulationConfig::from_json(auto).unwrap().l_giant, None);
    }

    #[test]
    fn config_rejects_bad_values() {
        let base = r#"{"model":"er","n":300,"design":"D1","replications":0,"seed":1}"#;
        assert!(SimulationConfig::from_json(base).is_err());
        let typo = r#"{"model":"er","n":300,"design":"D1","replications":1,"seed":1,"dgp_params":{"kapa":5}}"#;
        assert!(SimulationConfig::from_json(typo).is_err());
        let alpha = r#"{"model":"er","n":300,"design":"D1","replications":1,"seed":1,"alpha":1.5}"#;
        assert!(SimulationConfig::from_json(alpha).is_err());
        let extra = r#"{"model":"er","n":300,"design":"D1","replications":1,"seed":1,"colour":1}"#;
        assert!(SimulationConfig::from_json(extra).is_err());
    }

    #[test]
    fn truncated_degrees_in_range_and_even() {
        let d = truncated_poisson_degrees(1000, 8.0, 1, 20, 3).unwrap();
        assert!(d.iter().all(|&x| (1..=20).contains(&x)));
        assert_eq!(d.iter().sum::<usize>() % 2, 0);
        let mean = d.iter().sum::<usize>() as f64 / 1000.0;
        assert!((mean - 8.0).abs() < 0.4);
    }

    #[test]
    fn single_replication_is_deterministic() {
        let cfg = SimulationConfig::new(Model::Rgg, Design::D1, 300, 1, 11);
        let a = run_monte_carlo(&cfg).unwrap();
        let b = run_monte_carlo(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 1);
        let sizes = &a.records[0].cluster_sizes;
        assert_eq!(sizes.len(), a.records[0].clusters);
        assert!(sizes.iter().all(|&s| s >= 20));
    }

    #[test]
    fn spectra_on_er_finds_one_cluster() {
        let cfg = SimulationConfig::new(Model::Er, Design::Spectra, 400, 2, 5);
        let r = run_monte_carlo(&cfg).unwrap();
        assert_eq!(r.summary("clusters"), Some(1.0));
        assert_eq!(r.summary("max_conductance"), Some(0.0));
        assert!(r.rates.is_empty());
    }

    #[test]
    fn design2_uses_pilot_or_given_null() {
        let mut cfg = SimulationConfig::new(Model::Rgg, Design::D2Lim, 300, 2, 3);
        cfg.theta_null = Some(0.25);
        let r = run_monte_carlo(&cfg).unwrap();
        assert_eq!(r.theta_null, Some(0.25));
        assert!(r.rates.contains_key(&Method::Hac));
    }

    #[test]
    fn csv_has_schema_header_and_columns() {
        let cfg = SimulationConfig::new(Model::Sbm, Design::D1, 400, 2, 9);
        let r = run_monte_carlo(&cfg).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with(RESULTS_HEADER));
        assert_eq!(lines.next().unwrap(), "method,model,n,value,mc_se");
        assert!(text.contains("\nrand,sbm,400,"));
    }

    #[test]
    fn errors_carry_replication_index() {
        let mut cfg = SimulationConfig::new(Model::Rgg, Design::D1, 300, 2, 1);
        cfg.min_size = 10_000;
        match run_monte_carlo(&cfg) {
            Err(Error::Replication { index, .. }) => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
