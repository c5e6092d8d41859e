use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netclust(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netclust"))
        .args(args)
        .current_dir(dir)
        .env_remove("NETCLUST_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Two 6-cycles joined by one edge.
fn barbell(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from("# two rings\n");
    for ring in [0, 6] {
        for i in 0..6 {
            text.push_str(&format!("{} {}\n", ring + i, ring + (i + 1) % 6));
        }
    }
    text.push_str("0 6\n");
    let path = dir.join("edges.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn spectrum_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    barbell(dir.path());
    let out = netclust(&["spectrum", "edges.txt", "--threshold", "0.25", "--out", "sp"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("sp/spectrum.json"));
    assert_eq!(summary["schema"], "netclust spectrum v1");
    assert_eq!(summary["n"], 12);
    assert_eq!(summary["zero_count"], 1);
    let eig = summary["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 12);
    assert!(eig[0].as_f64().unwrap().abs() < 1e-10);
    assert!(eig[1].as_f64().unwrap() < 0.25 && eig[2].as_f64().unwrap() > 0.25);
    assert_eq!(summary["suggested_L"], 2);
    let csv = fs::read_to_string(dir.path().join("sp/spectrum.csv")).unwrap();
    assert!(csv.lines().count() >= 13);
}

#[test]
fn cluster_splits_the_rings_and_flags_too_few_clusters() {
    let dir = tempfile::tempdir().unwrap();
    barbell(dir.path());
    let out = netclust(&["cluster", "edges.txt", "--L", "2", "--min-size", "3", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(10));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TOO_FEW_CLUSTERS"));
    let diag = json(&dir.path().join("c/diagnostics.json"));
    assert_eq!(diag["retained_clusters"], 2);
    let conductance = diag["max_conductance"].as_f64().unwrap();
    assert!((conductance - 1.0 / 13.0).abs() < 1e-12);

    let part = fs::read_to_string(dir.path().join("c/partition.csv")).unwrap();
    let rows: Vec<(usize, usize)> = part
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("node"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 12);
    let label = |node: usize| rows.iter().find(|r| r.0 == node).unwrap().1;
    for i in 0..6 {
        assert_eq!(label(i), label(0));
        assert_eq!(label(6 + i), label(6));
    }
    assert_ne!(label(0), label(6));
}

#[test]
fn test_subcommand_reports_each_method() {
    let dir = tempfile::tempdir().unwrap();
    barbell(dir.path());
    let mut values = String::from("node,value\n");
    for i in 0..12 {
        values.push_str(&format!("{i},{}\n", if i < 6 { 1.0 } else { 3.0 }));
    }
    fs::write(dir.path().join("values.csv"), values).unwrap();
    let out = netclust(&["cluster", "edges.txt", "--L", "2", "--min-size", "3", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(10));

    let base = ["test", "--values", "values.csv", "--edges", "edges.txt", "--partition", "c/partition.csv"];
    let run = |method: &str| {
        let mut args = base.to_vec();
        args.extend(["--method", method]);
        let out = netclust(&args, dir.path());
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };

    let rand = run("rand");
    assert_eq!(rand["method"], "rand");
    assert_eq!(rand["details"]["clusters"], 2);
    assert_eq!(rand["reject"], false);

    let iid = run("iid");
    assert!((iid["details"]["estimate"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(iid["reject"], true);

    let hac = run("hac");
    assert_eq!(hac["method"], "hac");
    assert!(hac["details"]["bandwidth"].as_u64().unwrap() >= 1);

    let mut args = base.to_vec();
    args.extend(["--method", "iid", "--null", "2", "--out", "res.json"]);
    assert!(netclust(&args, dir.path()).status.success());
    let saved = json(&dir.path().join("res.json"));
    assert_eq!(saved["reject"], false);
    assert_eq!(saved["statistic"].as_f64().unwrap(), 0.0);
}

#[test]
fn rand_without_partition_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    barbell(dir.path());
    fs::write(dir.path().join("values.csv"), (0..12).map(|i| format!("{i},1\n")).collect::<String>()).unwrap();
    let out = netclust(
        &["test", "--values", "values.csv", "--edges", "edges.txt", "--method", "rand"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_edge_list_exits_with_input_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "0 1\n0 1 2 3\n").unwrap();
    let out = netclust(&["spectrum", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn generate_writes_graph_positions_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = netclust(&["generate", "--model", "rgg", "--n", "400", "--seed", "5", "--out", "g"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(&dir.path().join("g/graph.json"));
    assert_eq!(meta["n"], 400);
    assert_eq!(meta["model"], "rgg");
    let degree = meta["average_degree"].as_f64().unwrap();
    assert!((3.5..6.5).contains(&degree), "average degree {degree}");
    let positions = fs::read_to_string(dir.path().join("g/positions.csv")).unwrap();
    assert_eq!(positions.lines().filter(|l| !l.starts_with('#')).count(), 401);

    let er = netclust(&["generate", "--model", "er", "--n", "200", "--param", "kappa=3", "--out", "e"], dir.path());
    assert!(er.status.success());
    assert!(!dir.path().join("e/positions.csv").exists());
    assert_eq!(json(&dir.path().join("e/graph.json"))["dgp_params"]["kappa"], 3.0);

    let again = netclust(&["generate", "--model", "rgg", "--n", "400", "--seed", "5", "--out", "g2"], dir.path());
    assert!(again.status.success());
    assert_eq!(
        fs::read(dir.path().join("g/edges.txt")).unwrap(),
        fs::read(dir.path().join("g2/edges.txt")).unwrap()
    );

    let bad = netclust(&["generate", "--model", "er", "--n", "10", "--param", "bogus=1"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"model": "rgg", "n": 300, "design": "D1", "replications": 6, "seed": 11, "L_giant": 4}"#,
    )
    .unwrap();
    let one = netclust(&["simulate", "--config", "cfg.json", "--threads", "1", "--out", "a.csv", "--json", "a.json"], dir.path());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    let many = Command::new(env!("CARGO_BIN_EXE_netclust"))
        .args(["simulate", "--config", "cfg.json", "--out", "b.csv"])
        .current_dir(dir.path())
        .env("NETCLUST_THREADS", "4")
        .output()
        .unwrap();
    assert!(many.status.success());
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with("# netclust results v1 design=D1\nmethod,model,n,value,mc_se\n"));
    for method in ["rand", "hac", "iid"] {
        assert!(a.contains(&format!("\n{method},rgg,300,")));
    }
    let full = json(&dir.path().join("a.json"));
    assert_eq!(full["records"].as_array().unwrap().len(), 6);

    let reseeded = netclust(&["simulate", "--config", "cfg.json", "--seed", "12", "--out", "c.csv"], dir.path());
    assert!(reseeded.status.success());
    assert_ne!(a, fs::read_to_string(dir.path().join("c.csv")).unwrap());
}

#[test]
fn simulate_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"model": "rgg", "n": 300, "design": "D1", "replications": 2, "seed": 1, "colour": 3}"#,
    )
    .unwrap();
    let out = netclust(&["simulate", "--config", "cfg.json", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
