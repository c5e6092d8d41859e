//! Text formats: edge lists, partition/values/positions CSVs and spectrum
//! and embedding exports.
//!
//! Every file written here starts with a `# netclust <kind> v<N>` comment
//! line. Readers skip `#` comments and blank lines.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::spectral::{Embedding, SpectrumReport};

pub const EDGE_LIST_HEADER: &str = "# netclust edge-list v1";
pub const PARTITION_HEADER: &str = "# netclust partition v1";
pub const POSITIONS_HEADER: &str = "# netclust positions v1";
pub const SPECTRUM_HEADER: &str = "# netclust spectrum v1";
pub const EMBEDDING_HEADER: &str = "# netclust embedding v1";
pub const VALUES_HEADER: &str = "# netclust values v1";

/// Dense relabeling of external node ids. Internal id `k` is the k-th
/// smallest external id, so files already using `0..n` map to themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMap {
    external: Vec<u64>,
    internal: BTreeMap<u64, usize>,
}

impl NodeMap {
    pub fn identity(n: usize) -> Self {
        Self::from_ids((0..n as u64).collect())
    }

    fn from_ids(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        let internal = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        NodeMap {
            external: ids,
            internal,
        }
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn external(&self, internal: usize) -> u64 {
        self.external[internal]
    }

    pub fn internal(&self, external: u64) -> Option<usize> {
        self.internal.get(&external).copied()
    }
}

/// Graph read from an edge-list file together with its id map.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub graph: Graph,
    pub nodes: NodeMap,
}

/// Strips a `#` comment. A comment of the form `# ... nodes=N` declares
/// that ids `0..N` exist even if some of them carry no edges.
fn split_comment(line: &str) -> (&str, Option<&str>) {
    match line.find('#') {
        Some(pos) => (&line[..pos], Some(&line[pos + 1..])),
        None => (line, None),
    }
}

fn parse_nodes_directive(comment: &str, line: usize) -> Result<Option<u64>> {
    for token in comment.split_whitespace() {
        if let Some(value) = token.strip_prefix("nodes=") {
            return value.parse().map(Some).map_err(|_| Error::Parse {
                line,
                message: format!("bad node-count directive {token:?}"),
            });
        }
    }
    Ok(None)
}

fn parse_id(token: &str, line: usize) -> Result<u64> {
    token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a nonnegative integer node id, found {token:?}"),
    })
}

/// Reads `u v` or `u v w` lines, one undirected edge per line.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut raw: Vec<(u64, u64, f64, usize)> = Vec::new();
    let mut declared: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let (body, comment) = split_comment(&line);
        if let Some(c) = comment {
            if let Some(n) = parse_nodes_directive(c, line_no)? {
                declared = Some(n);
            }
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens.len() {
            0 => continue,
            2 | 3 => {
                let u = parse_id(tokens[0], line_no)?;
                let v = parse_id(tokens[1], line_no)?;
                let w = match tokens.get(2) {
                    Some(t) => t.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("expected a numeric weight, found {t:?}"),
                    })?,
                    None => 1.0,
                };
                raw.push((u, v, w, line_no));
            }
            k => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected \"u v\" or \"u v w\", found {k} fields"),
                })
            }
        }
    }
    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v, _, _)| [u, v]).collect();
    if let Some(n) = declared {
        ids.extend(0..n);
    }
    let nodes = NodeMap::from_ids(ids);
    let mut edges = Vec::with_capacity(raw.len());
    let mut seen = std::collections::HashMap::with_capacity(raw.len());
    for &(u, v, w, line) in &raw {
        let (a, b) = (nodes.internal(u).unwrap(), nodes.internal(v).unwrap());
        if a == b {
            return Err(Error::Parse {
                line,
                message: format!("self-link on node {u}"),
            });
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("weight {w} is not positive"),
            });
        }
        if let Some(first) = seen.insert((a.min(b), a.max(b)), line) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate edge ({u}, {v}), first given on line {first}"),
            });
        }
        edges.push((a, b, w));
    }
    let graph = Graph::from_edges(nodes.len(), edges)?;
    Ok(EdgeList { graph, nodes })
}

/// Writes each undirected edge once; the weight column is omitted for
/// binary graphs.
pub fn write_edge_list<W: Write>(mut out: W, g: &Graph, nodes: &NodeMap) -> Result<()> {
    writeln!(out, "{EDGE_LIST_HEADER} nodes={}", g.n())?;
    let binary = g.is_binary();
    for (u, v, w) in g.edges() {
        if binary {
            writeln!(out, "{} {}", nodes.external(u), nodes.external(v))?;
        } else {
            writeln!(out, "{} {} {}", nodes.external(u), nodes.external(v), w)?;
        }
    }
    Ok(())
}

/// Data rows of a CSV with a required column header, as `(line, fields)`.
fn csv_rows<R: BufRead>(reader: R, expected: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = trimmed.split(',').map(|f| f.trim().to_string()).collect();
        if !header_seen {
            if fields.len() < expected.len() || fields.iter().zip(expected).any(|(a, b)| a != b) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header \"{}\"", expected.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if fields.len() < expected.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields", expected.len()),
            });
        }
        rows.push((line_no, fields));
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 0,
            message: format!("missing header \"{}\"", expected.join(",")),
        });
    }
    Ok(rows)
}

fn lookup(nodes: &NodeMap, field: &str, line: usize) -> Result<usize> {
    let id = parse_id(field, line)?;
    nodes.internal(id).ok_or_else(|| Error::Parse {
        line,
        message: format!("node {id} does not appear in the graph"),
    })
}

/// Writes `node,cluster,discarded`.
pub fn write_partition<W: Write>(mut out: W, p: &Partition, nodes: &NodeMap) -> Result<()> {
    writeln!(out, "{PARTITION_HEADER}")?;
    writeln!(out, "node,cluster,discarded")?;
    for (i, &l) in p.labels().iter().enumerate() {
        writeln!(out, "{},{},{}", nodes.external(i), l, u8::from(p.is_discarded(l)))?;
    }
    Ok(())
}

/// Reads `node,cluster[,discarded]`; every graph node must be assigned.
pub fn read_partition<R: BufRead>(reader: R, nodes: &NodeMap) -> Result<Partition> {
    let rows = csv_rows(reader, &["node", "cluster"])?;
    let mut labels = vec![usize::MAX; nodes.len()];
    let mut flags: BTreeMap<usize, bool> = BTreeMap::new();
    for (line, fields) in rows {
        let node = lookup(nodes, &fields[0], line)?;
        let cluster: usize = fields[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad cluster label {:?}", fields[1]),
        })?;
        if labels[node] != usize::MAX {
            return Err(Error::Parse {
                line,
                message: format!("node {} assigned twice", fields[0]),
            });
        }
        labels[node] = cluster;
        if let Some(flag) = fields.get(2) {
            let discarded = match flag.as_str() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("bad discard flag {other:?}"),
                    })
                }
            };
            if *flags.entry(cluster).or_insert(discarded) != discarded {
                return Err(Error::Parse {
                    line,
                    message: format!("inconsistent discard flag for cluster {cluster}"),
                });
            }
        }
    }
    if let Some(missing) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::input(format!(
            "node {} has no cluster assignment",
            nodes.external(missing)
        )));
    }
    let mut p = Partition::new(labels)?;
    for (c, flag) in flags {
        p.set_discarded(c, flag);
    }
    Ok(p)
}

/// Reads `node,value`; every graph node must have a value.
pub fn read_values<R: BufRead>(reader: R, nodes: &NodeMap) -> Result<Vec<f64>> {
    let rows = csv_rows(reader, &["node", "value"])?;
    let mut values = vec![f64::NAN; nodes.len()];
    let mut seen = vec![false; nodes.len()];
    for (line, fields) in rows {
        let node = lookup(nodes, &fields[0], line)?;
        let v: f64 = fields[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad value {:?}", fields[1]),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line,
                message: "values must be finite".into(),
            });
        }
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::Parse {
                line,
                message: format!("node {} given twice", fields[0]),
            });
        }
        values[node] = v;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::input(format!(
            "node {} has no value",
            nodes.external(missing)
        )));
    }
    Ok(values)
}

pub fn write_values<W: Write>(mut out: W, values: &[f64], nodes: &NodeMap) -> Result<()> {
    writeln!(out, "{VALUES_HEADER}")?;
    writeln!(out, "node,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", nodes.external(i), v)?;
    }
    Ok(())
}

pub fn write_positions<W: Write>(mut out: W, positions: &[[f64; 2]]) -> Result<()> {
    writeln!(out, "{POSITIONS_HEADER}")?;
    writeln!(out, "node,x,y")?;
    for (i, p) in positions.iter().enumerate() {
        writeln!(out, "{},{},{}", i, p[0], p[1])?;
    }
    Ok(())
}

/// Writes `index,eigenvalue` with 1-based indices, ascending.
pub fn write_spectrum<W: Write>(mut out: W, report: &SpectrumReport) -> Result<()> {
    writeln!(out, "{SPECTRUM_HEADER}")?;
    writeln!(out, "index,eigenvalue")?;
    for (k, lambda) in report.eigenvalues.iter().enumerate() {
        writeln!(out, "{},{}", k + 1, lambda)?;
    }
    Ok(())
}

/// Writes `node,coord_1..coord_L`.
pub fn write_embedding<W: Write>(mut out: W, emb: &Embedding, nodes: &NodeMap) -> Result<()> {
    writeln!(out, "{EMBEDDING_HEADER}")?;
    let dim = emb.dim();
    let cols: Vec<String> = (1..=dim).map(|k| format!("coord_{k}")).collect();
    writeln!(out, "node,{}", cols.join(","))?;
    for (i, row) in emb.positions.iter().enumerate() {
        let coords: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{},{}", nodes.external(i), coords.join(","))?;
    }
    Ok(())
}
