//! `netclust`: spectrum diagnostics, spectral clustering, cluster-robust
//! tests, random graph generation and Monte Carlo runs from the shell.
//!
//! Exit status: 0 success, 2 invalid input, 3 numeric failure, 10 when
//! clustering succeeded but raised a quality warning.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use netclust::diagnostics::{self, PipelineOptions, Warning};
use netclust::graphgen::Model;
use netclust::inference::{self, Method, MomentSample};
use netclust::io::{self as nio, EdgeList, NodeMap};
use netclust::sim::{self, Design, SimulationConfig};
use netclust::spectral;
use netclust::{Error, ErrorKind, Graph};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_WARNING: u8 = 10;
const THREADS_ENV: &str = "NETCLUST_THREADS";
/// Eigenvalues listed in the spectrum summary.
const SUMMARY_EIGENVALUES: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "netclust", version, about = "Conductance diagnostics and cluster-robust inference for networks")]
struct Cli {
    /// Seed for every random step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `simulate`; NETCLUST_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, or output file for `test` and `simulate`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalized Laplacian spectrum with a suggested cluster count.
    Spectrum(SpectrumArgs),
    /// Spectral clusters of the giant component plus conductance diagnostics.
    Cluster(ClusterArgs),
    /// Randomization, HAC or i.i.d. test of a mean.
    Test(TestArgs),
    /// Draw a random graph.
    Generate(GenerateArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Edge list: `u v [w]` per line.
    edges: PathBuf,
    /// Number of smallest eigenvalues; all when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Eigenvalue cutoff for the suggested cluster count.
    #[arg(long, default_value_t = diagnostics::DEFAULT_EIGEN_THRESHOLD)]
    threshold: f64,
    /// Restrict to the giant component.
    #[arg(long)]
    giant: bool,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    edges: PathBuf,
    /// Clusters in the giant component; chosen from the spectrum when omitted.
    #[arg(long = "L", alias = "clusters")]
    clusters: Option<usize>,
    /// Clusters smaller than this are flagged as discarded.
    #[arg(long, default_value_t = diagnostics::DEFAULT_MIN_SIZE)]
    min_size: usize,
    #[arg(long, default_value_t = diagnostics::DEFAULT_EIGEN_THRESHOLD)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Values CSV with columns `node,value`.
    #[arg(long)]
    values: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    /// Partition CSV with columns `node,cluster[,discarded]`; needed for `rand`.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// HAC bandwidth in hops; the default rule when omitted.
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Null value of the mean.
    #[arg(long = "null", default_value_t = 0.0, allow_negative_numbers = true)]
    null: f64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_model)]
    model: Model,
    #[arg(long)]
    n: usize,
    /// Calibration to use: D1 for mean degree 5, D2_LIM or D2_BG for 8.
    #[arg(long, default_value = "D1", value_parser = parse_design)]
    design: Design,
    /// Model parameter override, `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Full result with per-replication records as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_design(s: &str) -> Result<Design, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown design {s:?}"))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((k.to_string(), v))
}

type CmdResult = Result<u8, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&cli, a),
        Command::Cluster(a) => cmd_cluster(&cli, a),
        Command::Test(a) => cmd_test(&cli, a),
        Command::Generate(a) => cmd_generate(&cli, a),
        Command::Simulate(a) => cmd_simulate(&cli, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Input | ErrorKind::Domain | ErrorKind::Capacity => EXIT_INPUT,
            })
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn out_dir(cli: &Cli) -> Result<PathBuf, Error> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Pretty JSON with sorted keys and a `schema` tag.
fn to_json<T: Serialize>(schema: &str, value: &T) -> Result<String, Error> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Numeric(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), Value::String(format!("netclust {schema} v1")));
    }
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write_json<T: Serialize>(path: &Path, schema: &str, value: &T) -> Result<(), Error> {
    let mut w = create(path)?;
    w.write_all(to_json(schema, value)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_graph(path: &Path) -> Result<EdgeList, Error> {
    nio::read_edge_list(open(path)?)
}

fn cmd_spectrum(cli: &Cli, a: &SpectrumArgs) -> CmdResult {
    let el = read_graph(&a.edges)?;
    let (graph, nodes) = if a.giant {
        let giant = el.graph.connected_components().giant_members();
        (el.graph.induced_subgraph(&giant)?, giant.len())
    } else {
        (el.graph, el.nodes.len())
    };
    let report = spectral::spectrum(&graph, a.k)?;
    let dir = out_dir(cli)?;
    let mut w = create(&dir.join("spectrum.csv"))?;
    nio::write_spectrum(&mut w, &report)?;
    w.flush()?;
    let shown: Vec<f64> = report.eigenvalues.iter().take(SUMMARY_EIGENVALUES).copied().collect();
    let gaps: Vec<f64> = shown.windows(2).map(|p| p[1] - p[0]).collect();
    let suggested = diagnostics::choose_num_clusters(&report, a.threshold, diagnostics::DEFAULT_MAX_CLUSTERS);
    let summary = json!({
        "n": nodes,
        "computed": report.eigenvalues.len(),
        "eigenvalues": shown,
        "gaps": gaps,
        "zero_count": report.zero_count(),
        "threshold": a.threshold,
        "suggested_L": suggested,
        "spectral_gap": report.gap_after(suggested),
    });
    write_json(&dir.join("spectrum.json"), "spectrum", &summary)?;
    Ok(0)
}

fn cmd_cluster(cli: &Cli, a: &ClusterArgs) -> CmdResult {
    let el = read_graph(&a.edges)?;
    let opts = PipelineOptions {
        l_giant: a.clusters,
        min_size: a.min_size,
        eigen_threshold: a.threshold,
        seed: cli.seed.unwrap_or(0),
        ..PipelineOptions::default()
    };
    let out = diagnostics::cluster_pipeline(&el.graph, &opts)?;
    let dir = out_dir(cli)?;
    let mut w = create(&dir.join("partition.csv"))?;
    nio::write_partition(&mut w, &out.partition, &el.nodes)?;
    w.flush()?;
    let mut summary = serde_json::to_value(&out.diagnostics).map_err(|e| Error::Numeric(e.to_string()))?;
    if let Value::Object(map) = &mut summary {
        map.insert("n".into(), json!(el.graph.n()));
        map.insert("giant_size".into(), json!(out.giant.len()));
        map.insert("min_size".into(), json!(a.min_size));
        if let Some(rows) = map.get_mut("zero_embedding_rows") {
            let ids: Vec<u64> = out.diagnostics.zero_embedding_rows.iter().map(|&i| el.nodes.external(i)).collect();
            *rows = json!(ids);
        }
    }
    write_json(&dir.join("diagnostics.json"), "diagnostics", &summary)?;
    let d = &out.diagnostics;
    for warning in &d.warnings {
        eprintln!("warning: {}", serde_json::to_string(warning).unwrap_or_default().trim_matches('"'));
    }
    if d.has_warning(Warning::HighConductance) || d.has_warning(Warning::TooFewClusters) {
        return Ok(EXIT_WARNING);
    }
    Ok(0)
}

fn emit(cli: &Cli, text: &str) -> Result<(), Error> {
    match &cli.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_test(cli: &Cli, a: &TestArgs) -> CmdResult {
    let el = read_graph(&a.edges)?;
    let values = nio::read_values(open(&a.values)?, &el.nodes)?;
    let sample = MomentSample::scalar(values)?;
    let result = match a.method {
        Method::Rand => {
            let path = a
                .partition
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("--partition is required for the randomization test".into()))?;
            let partition = nio::read_partition(open(path)?, &el.nodes)?;
            let est = inference::cluster_means(&sample, &partition)?;
            inference::randomization_test(&est, &[a.null], a.alpha)?
        }
        Method::Hac => inference::hac_ttest(&sample, &el.graph, a.null, a.alpha, a.bandwidth)?,
        Method::Iid => inference::iid_ttest(&sample, a.null, a.alpha)?,
    };
    emit(cli, &to_json("test-result", &result)?)?;
    Ok(0)
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> CmdResult {
    let seed = cli.seed.unwrap_or(0);
    let mut cfg = SimulationConfig::new(a.model, a.design, a.n, 1, seed);
    cfg.dgp_params = a.params.iter().cloned().collect::<BTreeMap<_, _>>();
    cfg.validate()?;
    let gg = cfg.generate(seed)?;
    let dir = out_dir(cli)?;
    let mut w = create(&dir.join("edges.txt"))?;
    nio::write_edge_list(&mut w, &gg.graph, &NodeMap::identity(gg.graph.n()))?;
    w.flush()?;
    if let Some(pos) = &gg.positions {
        let mut w = create(&dir.join("positions.csv"))?;
        nio::write_positions(&mut w, pos)?;
        w.flush()?;
    }
    let meta = json!({
        "model": a.model,
        "design": a.design,
        "n": a.n,
        "seed": seed,
        "dgp_params": cfg.dgp_params,
        "edges": gg.graph.num_edges(),
        "average_degree": average_degree(&gg.graph),
        "dropped_stubs": gg.dropped_stubs,
    });
    write_json(&dir.join("graph.json"), "graph", &meta)?;
    Ok(0)
}

fn average_degree(g: &Graph) -> f64 {
    g.average_degree().unwrap_or(0.0)
}

/// NETCLUST_THREADS, then `--threads`, then every available core.
fn thread_count(cli: &Cli) -> Result<usize, Error> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        return raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")));
    }
    match cli.threads {
        Some(0) => Err(Error::InvalidInput("--threads must be positive".into())),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::InvalidInput(format!("{}: {e}", a.config.display())))?;
    let mut cfg = SimulationConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let result = sim::run_monte_carlo_threads(&cfg, thread_count(cli)?)?;
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
    let mut w = create(&path)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    if let Some(json_path) = &a.json {
        write_json(json_path, "mc-result", &result)?;
    }
    eprintln!(
        "{} replications of {} {} n={} written to {}",
        cfg.replications,
        cfg.design,
        cfg.model,
        cfg.n,
        path.display()
    );
    Ok(0)
}
