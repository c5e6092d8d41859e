//! Acceptance suite. Every test prints one `PASS` or `FAIL` line, then
//! asserts. Monte Carlo checks use master seed 42.

use std::io::Write as _;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand_distr::StandardNormal;

use netclust::graphgen::Model;
use netclust::inference::{self, ClusterEstimate, ClusterEstimates, Method, MomentSample};
use netclust::rng;
use netclust::sim::{self, Design, MCResult, SimulationConfig};
use netclust::spectral::{self, brute_force_cheeger};
use netclust::{Distance, Graph};

const SEED: u64 = 42;

/// Writes to the process stdout directly so the line shows up even when
/// the test harness captures output.
macro_rules! say {
    ($($arg:tt)*) => {{
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, $($arg)*);
        let _ = out.flush();
    }};
}

fn report(name: &str, pass: bool, detail: &str) {
    say!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Connected Erdős–Rényi draws with `min_n..=max_n` nodes.
fn connected_corpus(count: usize, min_n: usize, max_n: usize, seed: u64) -> Vec<Graph> {
    let mut rng = rng::rng(seed);
    let mut graphs = Vec::with_capacity(count);
    while graphs.len() < count {
        let n = rng.random_range(min_n..=max_n);
        let p = rng.random_range(0.2..0.7);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_unweighted_edges(n, edges).unwrap();
        if g.is_connected() {
            graphs.push(g);
        }
    }
    graphs
}

// ---------------------------------------------------------------------------
// Cheeger lower bound

const CHEEGER_GRAPHS: usize = 200;
const CHEEGER_MAX_N: usize = 12;
const CHEEGER_SLACK: f64 = 1e-9;
const CHEEGER_RUNTIME: Duration = Duration::from_secs(120);

#[test]
fn cheeger_lower_bound_on_small_graphs() {
    let start = Instant::now();
    let corpus = connected_corpus(CHEEGER_GRAPHS, 4, CHEEGER_MAX_N, SEED);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for g in &corpus {
        let eig = spectral::spectrum(g, None).unwrap().eigenvalues;
        for k in [2usize, 3] {
            let (h, _) = brute_force_cheeger(g, k).unwrap();
            let margin = h + CHEEGER_SLACK - eig[k - 1] / 2.0;
            tightest = tightest.min(margin);
            if margin < 0.0 {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations == 0 && elapsed < CHEEGER_RUNTIME;
    report(
        "cheeger lower bound",
        pass,
        &format!(
            "{} graphs x k in {{2,3}}, violations {violations}, smallest margin {tightest:.3e}, {:.1}s (limit {}s)",
            corpus.len(),
            elapsed.as_secs_f64(),
            CHEEGER_RUNTIME.as_secs()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Planted components

const PLANTED_INSTANCES: usize = 100;
const ZERO_EIGENVALUE: f64 = 1e-8;
const NONZERO_EIGENVALUE: f64 = 1e-3;
const PLANTED_RUNTIME: Duration = Duration::from_secs(60);

/// Disjoint union of `parts`.
fn disjoint_union(parts: &[Graph]) -> Graph {
    let mut offset = 0;
    let mut edges = Vec::new();
    for g in parts {
        edges.extend(g.edges().map(|(u, v, w)| (u + offset, v + offset, w)));
        offset += g.n();
    }
    Graph::from_edges(offset, edges).unwrap()
}

#[test]
fn planted_components_give_zero_eigenvalues() {
    let start = Instant::now();
    let mut rng = rng::rng(SEED);
    let mut failures = 0;
    let mut largest_zero = 0.0f64;
    let mut smallest_nonzero = f64::INFINITY;
    for instance in 0..PLANTED_INSTANCES {
        let m = rng.random_range(1..=6);
        let parts = connected_corpus(m, 3, 25, rng::derive_seed(SEED, instance as u64));
        let g = disjoint_union(&parts);
        let eig = spectral::spectrum(&g, None).unwrap().eigenvalues;
        let zeros = eig.iter().filter(|&&v| v < ZERO_EIGENVALUE).count();
        largest_zero = eig[..m].iter().fold(largest_zero, |a, &v| a.max(v));
        if let Some(&next) = eig.get(m) {
            smallest_nonzero = smallest_nonzero.min(next);
        }
        if zeros != m || eig[m..].iter().any(|&v| v <= NONZERO_EIGENVALUE) {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed < PLANTED_RUNTIME;
    report(
        "planted components",
        pass,
        &format!(
            "{PLANTED_INSTANCES} instances, failures {failures}, largest zero eigenvalue {largest_zero:.2e}, \
             smallest other {smallest_nonzero:.3e}, {:.1}s (limit {}s)",
            elapsed.as_secs_f64(),
            PLANTED_RUNTIME.as_secs()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Spectra simulation summary

const SPECTRA_N: usize = 1000;
const SPECTRA_REPLICATIONS: usize = 200;
const SPECTRA_RUNTIME: Duration = Duration::from_secs(20 * 60);

struct Band {
    label: &'static str,
    target: f64,
    tolerance: f64,
}

impl Band {
    fn check(&self, value: f64, failures: &mut Vec<String>, lines: &mut Vec<String>) {
        let ok = (value - self.target).abs() <= self.tolerance;
        let line = format!("{} {value:.4} (target {} ± {})", self.label, self.target, self.tolerance);
        if !ok {
            failures.push(line.clone());
        }
        lines.push(line);
    }
}

/// Band of `fraction` around `target`.
fn relative_band(label: &'static str, target: f64, fraction: f64) -> Band {
    Band {
        label,
        target,
        tolerance: target * fraction,
    }
}

const GIANT_RELATIVE: f64 = 0.02;

fn spectra_run(model: Model) -> MCResult {
    let cfg = SimulationConfig::new(model, Design::Spectra, SPECTRA_N, SPECTRA_REPLICATIONS, SEED);
    sim::run_monte_carlo(&cfg).unwrap()
}

fn summary(r: &MCResult, key: &str) -> f64 {
    r.summary(key).unwrap_or(f64::NAN)
}

#[test]
fn spectra_summary_matches_reference_table() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut lines = Vec::new();

    let rgg = spectra_run(Model::Rgg);
    let rgg_bands = [
        ("max_conductance", Band { label: "RGG max conductance", target: 0.158, tolerance: 0.03 }),
        ("clusters", Band { label: "RGG clusters", target: 40.0, tolerance: 6.0 }),
        ("degree", Band { label: "RGG degree", target: 4.83, tolerance: 0.15 }),
        ("giant", relative_band("RGG giant", 758.41, GIANT_RELATIVE)),
    ];
    for (key, band) in &rgg_bands {
        band.check(summary(&rgg, key), &mut failures, &mut lines);
    }

    let rcm = spectra_run(Model::Rcm);
    let rcm_bands = [
        ("clusters", Band { label: "RCM clusters", target: 12.7, tolerance: 3.0 }),
        ("degree", Band { label: "RCM degree", target: 4.98, tolerance: 0.15 }),
        ("giant", relative_band("RCM giant", 983.9, GIANT_RELATIVE)),
    ];
    for (key, band) in &rcm_bands {
        band.check(summary(&rcm, key), &mut failures, &mut lines);
    }

    for (model, label, giant) in [(Model::Er, "ER", 993.1), (Model::Sbm, "SBM", 993.0)] {
        let r = spectra_run(model);
        let clusters = summary(&r, "clusters");
        let line = format!("{label} clusters {clusters} (exactly 1)");
        if clusters != 1.0 {
            failures.push(line.clone());
        }
        lines.push(line);
        Band { label: if model == Model::Er { "ER gap" } else { "SBM gap" }, target: 0.180, tolerance: 0.02 }
            .check(summary(&r, "gap"), &mut failures, &mut lines);
        relative_band(if model == Model::Er { "ER giant" } else { "SBM giant" }, giant, GIANT_RELATIVE)
            .check(summary(&r, "giant"), &mut failures, &mut lines);
    }

    let elapsed = start.elapsed();
    if elapsed >= SPECTRA_RUNTIME {
        failures.push(format!("runtime {:.0}s", elapsed.as_secs_f64()));
    }
    for line in &lines {
        say!("    {line}");
    }
    report(
        "spectra summary",
        failures.is_empty(),
        &format!(
            "{SPECTRA_REPLICATIONS} replications at n={SPECTRA_N}, {:.0}s (limit {}s); out of band: [{}]",
            elapsed.as_secs_f64(),
            SPECTRA_RUNTIME.as_secs(),
            failures.join("; ")
        ),
    );
    assert!(failures.is_empty(), "{failures:?}");
}

// ---------------------------------------------------------------------------
// Design 1 rejection rates

const DESIGN1_N: usize = 1000;
const DESIGN1_REPLICATIONS: usize = 2000;
const DESIGN1_RUNTIME: Duration = Duration::from_secs(45 * 60);

#[test]
fn design_one_rejection_rates() {
    let start = Instant::now();
    let run = |model| {
        let cfg = SimulationConfig::new(model, Design::D1, DESIGN1_N, DESIGN1_REPLICATIONS, SEED);
        sim::run_monte_carlo(&cfg).unwrap()
    };
    let rgg = run(Model::Rgg);
    let sbm = run(Model::Sbm);
    let rate = |r: &MCResult, m| r.rate(m).unwrap_or(f64::NAN);

    let mut failures = Vec::new();
    let mut lines = Vec::new();
    Band { label: "Rand/RGG", target: 0.051, tolerance: 0.012 }.check(rate(&rgg, Method::Rand), &mut failures, &mut lines);
    Band { label: "Rand/SBM", target: 0.101, tolerance: 0.015 }.check(rate(&sbm, Method::Rand), &mut failures, &mut lines);
    Band { label: "HAC/RGG", target: 0.058, tolerance: 0.015 }.check(rate(&rgg, Method::Hac), &mut failures, &mut lines);
    Band { label: "IID/RGG", target: 0.279, tolerance: 0.03 }.check(rate(&rgg, Method::Iid), &mut failures, &mut lines);

    let elapsed = start.elapsed();
    if elapsed >= DESIGN1_RUNTIME {
        failures.push(format!("runtime {:.0}s", elapsed.as_secs_f64()));
    }
    for line in &lines {
        say!("    {line}");
    }
    say!(
        "    skipped randomization draws RGG {} SBM {}; degenerate HAC draws RGG {} SBM {}",
        rgg.rand_skipped, sbm.rand_skipped, rgg.hac_degenerate, sbm.hac_degenerate
    );
    report(
        "design 1 rejection rates",
        failures.is_empty(),
        &format!(
            "{DESIGN1_REPLICATIONS} replications at n={DESIGN1_N}, {:.0}s (limit {}s); out of band: [{}]",
            elapsed.as_secs_f64(),
            DESIGN1_RUNTIME.as_secs(),
            failures.join("; ")
        ),
    );
    assert!(failures.is_empty(), "{failures:?}");
}

// ---------------------------------------------------------------------------
// Design 2 qualitative ordering

const DESIGN2_REPLICATIONS: usize = 400;
const DESIGN2_SIZES: [(Model, usize); 3] = [(Model::Rgg, 1408), (Model::Rcm, 1427), (Model::Config, 1375)];
const CONFIG_RAND_EXCESS: f64 = 0.05;
const RGG_RAND_RANGE: (f64, f64) = (0.03, 0.08);
const ORDERING_SHARE: f64 = 0.95;

#[test]
fn design_two_qualitative_ordering() {
    let start = Instant::now();
    let runs: Vec<MCResult> = DESIGN2_SIZES
        .iter()
        .map(|&(model, n)| {
            let cfg = SimulationConfig::new(model, Design::D2Lim, n, DESIGN2_REPLICATIONS, SEED);
            sim::run_monte_carlo(&cfg).unwrap()
        })
        .collect();
    let (rgg, rcm, config) = (&runs[0], &runs[1], &runs[2]);
    for r in &runs {
        say!(
            "    {} n={}: rand {:.4} hac {:.4} iid {:.4} max conductance {:.3} (skipped rand {}, degenerate hac {})",
            r.config.model,
            r.config.n,
            r.rate(Method::Rand).unwrap_or(f64::NAN),
            r.rate(Method::Hac).unwrap_or(f64::NAN),
            r.rate(Method::Iid).unwrap_or(f64::NAN),
            r.summary("max_conductance").unwrap_or(f64::NAN),
            r.rand_skipped,
            r.hac_degenerate,
        );
    }

    let excess = config.rate(Method::Rand).unwrap_or(f64::NAN) - config.rate(Method::Hac).unwrap_or(f64::NAN);
    let excess_ok = excess >= CONFIG_RAND_EXCESS;
    let rgg_rand = rgg.rate(Method::Rand).unwrap_or(f64::NAN);
    let rgg_ok = (RGG_RAND_RANGE.0..=RGG_RAND_RANGE.1).contains(&rgg_rand);
    let ordered = (0..DESIGN2_REPLICATIONS)
        .filter(|&i| {
            let phi = |r: &MCResult| r.records[i].max_conductance;
            phi(rgg) < phi(rcm) && phi(rcm) < phi(config)
        })
        .count();
    let share = ordered as f64 / DESIGN2_REPLICATIONS as f64;
    let share_ok = share >= ORDERING_SHARE;

    let pass = excess_ok && rgg_ok && share_ok;
    report(
        "design 2 qualitative ordering",
        pass,
        &format!(
            "config rand-hac {excess:.4} (>= {CONFIG_RAND_EXCESS}) {}; RGG rand {rgg_rand:.4} in [{}, {}] {}; \
             ordered share {share:.4} (>= {ORDERING_SHARE}) {}; {:.0}s",
            ok(excess_ok),
            RGG_RAND_RANGE.0,
            RGG_RAND_RANGE.1,
            ok(rgg_ok),
            ok(share_ok),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "missed"
    }
}

// ---------------------------------------------------------------------------
// Randomization test exactness

const EXACT_CLUSTERS: usize = 8;
const EXACT_REPLICATIONS: usize = 10_000;
const EXACT_ALPHA: f64 = 0.05;
const EXACT_SLACK: f64 = 0.007;
const TWO_CLUSTER_TRIALS: usize = 10_000;

#[test]
fn randomization_test_is_exact() {
    let rate = sim::randomization_null_rate(EXACT_CLUSTERS, EXACT_REPLICATIONS, EXACT_ALPHA, SEED).unwrap();
    let size_ok = rate <= EXACT_ALPHA + EXACT_SLACK;

    let k = inference::critical_index(2, EXACT_ALPHA);
    let mut rng = rng::rng(SEED);
    let mut rejections = 0;
    for _ in 0..TWO_CLUSTER_TRIALS {
        let per_cluster = (0..2)
            .map(|c| ClusterEstimate {
                cluster: c,
                size: rng.random_range(1..50),
                estimate: vec![rng.sample::<f64, _>(StandardNormal) * 10f64.powi(rng.random_range(-3..4))],
            })
            .collect();
        let est = ClusterEstimates { per_cluster, scale: 1.0 };
        let null = rng.sample::<f64, _>(StandardNormal);
        if inference::randomization_test(&est, &[null], EXACT_ALPHA).unwrap().reject {
            rejections += 1;
        }
    }
    let two_ok = k == 4 && rejections == 0;

    let pass = size_ok && two_ok;
    report(
        "randomization exactness",
        pass,
        &format!(
            "L={EXACT_CLUSTERS} null rejection {rate:.4} over {EXACT_REPLICATIONS} (<= {}) {}; \
             L=2 k={k}, rejections {rejections}/{TWO_CLUSTER_TRIALS} {}",
            EXACT_ALPHA + EXACT_SLACK,
            ok(size_ok),
            ok(two_ok)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// HAC oracle

const HAC_MAX_N: usize = 10;
const HAC_TOLERANCE: f64 = 1e-12;

/// Double loop over node pairs with BFS distances.
fn hac_oracle(rows: &[Vec<f64>], g: &Graph, bandwidth: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / n as f64).collect();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..n {
        let dist = g.bfs_distances(i).unwrap();
        for j in 0..n {
            let near = matches!(dist[j], Distance::Finite(h) if h <= bandwidth);
            if !near {
                continue;
            }
            for a in 0..d {
                for b in 0..d {
                    out[a][b] += (rows[i][a] - mean[a]) * (rows[j][b] - mean[b]) / n as f64;
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric matrix of size at most two.
fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    if m.len() == 1 {
        return m[0][0];
    }
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
}

/// Nearest PSD matrix of a symmetric matrix of size at most two: negative
/// eigenvalues clipped to zero.
fn psd_projection(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.len() == 1 {
        return vec![vec![m[0][0].max(0.0)]];
    }
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (low, high) = (0.5 * (a + c) - radius, 0.5 * (a + c) + radius);
    if low >= 0.0 {
        return m.to_vec();
    }
    if high <= 0.0 {
        return vec![vec![0.0; 2]; 2];
    }
    let (x, y) = if b != 0.0 { (b, high - a) } else if a >= c { (1.0, 0.0) } else { (0.0, 1.0) };
    let norm = x * x + y * y;
    vec![vec![high * x * x / norm, high * x * y / norm], vec![high * x * y / norm, high * y * y / norm]]
}

#[test]
fn hac_matches_brute_force() {
    let corpus: Vec<Graph> = connected_corpus(CHEEGER_GRAPHS, 4, CHEEGER_MAX_N, SEED)
        .into_iter()
        .filter(|g| g.n() <= HAC_MAX_N)
        .collect();
    let mut rng = rng::rng(rng::derive_seed(SEED, 7));
    let mut worst = 0.0f64;
    let mut comparisons = 0;
    let mut repaired = 0;
    let mut bandwidth_zero_exact = true;
    let mut failures = 0;
    for g in &corpus {
        let n = g.n();
        for dim in [1usize, 2] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let sample = MomentSample::new(rows.clone()).unwrap();
            for bandwidth in 0..=n {
                let got = inference::hac_variance(&sample, g, bandwidth).unwrap();
                let raw = hac_oracle(&rows, g, bandwidth);
                let want = psd_projection(&raw);
                if got.repaired {
                    repaired += 1;
                }
                let lowest = min_eigenvalue(&raw);
                let flag_ok = if got.repaired { lowest <= HAC_TOLERANCE } else { lowest >= -HAC_TOLERANCE };
                if !flag_ok {
                    failures += 1;
                }
                comparisons += 1;
                for a in 0..dim {
                    for b in 0..dim {
                        worst = worst.max((got.matrix[a][b] - want[a][b]).abs());
                    }
                }
            }

            let mean = sample.mean();
            let mut outer = vec![vec![0.0; dim]; dim];
            for r in &rows {
                for a in 0..dim {
                    for b in 0..dim {
                        outer[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
                    }
                }
            }
            outer.iter_mut().flatten().for_each(|x| *x /= n as f64);
            if inference::hac_variance(&sample, g, 0).unwrap().matrix != outer {
                bandwidth_zero_exact = false;
            }
        }
    }
    let pass = worst <= HAC_TOLERANCE && failures == 0 && bandwidth_zero_exact;
    report(
        "hac oracle",
        pass,
        &format!(
            "{} graphs with n <= {HAC_MAX_N}, {comparisons} matrices, max abs error {worst:.2e} (<= {HAC_TOLERANCE:e}), \
             {repaired} repaired ({failures} with a mismatched repair flag), bandwidth 0 exact {bandwidth_zero_exact}",
            corpus.len()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Determinism

#[test]
fn simulate_output_is_byte_identical() {
    let configs = [
        SimulationConfig::new(Model::Rgg, Design::D1, 400, 12, SEED),
        SimulationConfig::new(Model::Config, Design::D2Lim, 400, 6, SEED),
        SimulationConfig::new(Model::Rcm, Design::Spectra, 400, 6, SEED),
    ];
    let csv = |cfg: &SimulationConfig, threads| {
        let mut buf = Vec::new();
        sim::run_monte_carlo_threads(cfg, threads).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    let mut details = Vec::new();
    let mut pass = true;
    for cfg in &configs {
        let first = csv(cfg, 1);
        let second = csv(cfg, 1);
        let parallel = csv(cfg, 8);
        let same = first == second && first == parallel;
        pass &= same;
        details.push(format!("{} {} {}", cfg.design, cfg.model, if same { "identical" } else { "differs" }));
    }
    report("simulate determinism", pass, &format!("runs x2 and 1 vs 8 threads: {}", details.join(", ")));
    assert!(pass);
}
