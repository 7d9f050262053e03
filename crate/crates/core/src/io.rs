//! Dataset and graph files.
//!
//! * fvecs: records of little-endian `i32 d` followed by `d` little-endian f32.
//! * ivecs: same layout with i32 components.
//! * text: one vector per line, whitespace-separated decimals.
//! * KNN graph: little-endian `i32 n`, `i32 k`, then `n * k` i32 neighbor ids
//!   row-major. Distances are recomputed against the dataset on load.
//! * layered graph (SW/HNSW): `i32 n`, `i32 num_layers`, `i32 entry` (-1 if
//!   none), a layer table of `n` i32 node levels, then for each layer `l` in
//!   increasing order and each node with level >= `l` in id order: `i32 degree`
//!   followed by `degree` i32 neighbor ids.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, format_err, Error, Result};
use crate::graph::KnnGraph;
use crate::smallworld::{Edge, LayeredGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    Fvecs,
    Text,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fvecs" => Ok(Self::Fvecs),
            "text" | "txt" => Ok(Self::Text),
            other => arg_err(format!("unknown dataset format '{other}' (expected fvecs or text)")),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    match format {
        DatasetFormat::Fvecs => parse_fvecs(&bytes),
        DatasetFormat::Text => parse_text(&bytes),
    }
}

fn read_i32(bytes: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Splits a `*vecs` buffer into `(record offset, d, payload)` triples.
fn vecs_records(bytes: &[u8]) -> Result<Vec<(usize, usize, &[u8])>> {
    let mut out = Vec::new();
    let mut at = 0usize;
    let mut dim: Option<usize> = None;
    while at < bytes.len() {
        if bytes.len() - at < 4 {
            return format_err(at as u64, "truncated record header");
        }
        let d = read_i32(bytes, at);
        if d <= 0 {
            return format_err(at as u64, format!("invalid dimension {d} in record header"));
        }
        let d = d as usize;
        if let Some(expected) = dim {
            if d != expected {
                return format_err(
                    at as u64,
                    format!("inconsistent dimension: record has d = {d}, earlier records have d = {expected}"),
                );
            }
        }
        dim = Some(d);
        let remaining = (bytes.len() - at - 4) / 4;
        if remaining < d {
            return format_err(
                at as u64,
                format!("truncated record: header d = {d} but only {remaining} components remain"),
            );
        }
        out.push((at, d, &bytes[at + 4..at + 4 + 4 * d]));
        at += 4 + 4 * d;
    }
    Ok(out)
}

pub fn parse_fvecs(bytes: &[u8]) -> Result<Dataset> {
    let records = vecs_records(bytes)?;
    let d = match records.first() {
        Some(r) => r.1,
        None => return format_err(0, "empty fvecs file"),
    };
    let mut values = Vec::with_capacity(records.len() * d);
    for (offset, _, payload) in records {
        for (j, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return format_err((offset + 4 + 4 * j) as u64, format!("non-finite component {v}"));
            }
            values.push(v);
        }
    }
    Dataset::new(d, values).map_err(|e| match e {
        Error::Argument(msg) => Error::Format {
            offset: 0,
            message: msg,
        },
        other => other,
    })
}

pub fn parse_ivecs(bytes: &[u8]) -> Result<Vec<Vec<i32>>> {
    Ok(vecs_records(bytes)?
        .into_iter()
        .map(|(_, _, payload)| {
            payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
        .collect())
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    parse_ivecs(&fs::read(path)?)
}

pub fn fvecs_bytes(data: &Dataset) -> Vec<u8> {
    let d = data.dim();
    let mut out = Vec::with_capacity(data.len() * (4 + 4 * d));
    for u in 0..data.len() as u32 {
        out.extend_from_slice(&(d as i32).to_le_bytes());
        for v in data.point(u) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_fvecs(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    fs::write(path, fvecs_bytes(data))?;
    Ok(())
}

pub fn save_ivecs(path: impl AsRef<Path>, rows: &[Vec<i32>]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        out.extend_from_slice(&(r.len() as i32).to_le_bytes());
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn parse_text(bytes: &[u8]) -> Result<Dataset> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to() as u64,
        message: "text dataset is not valid UTF-8".into(),
    })?;
    let mut values = Vec::new();
    let mut dim: Option<usize> = None;
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut count = 0usize;
        for tok in trimmed.split_whitespace() {
            let v: f32 = tok.parse().map_err(|_| Error::Format {
                offset: start as u64,
                message: format!("cannot parse '{tok}' as a number"),
            })?;
            if !v.is_finite() {
                return format_err(start as u64, format!("non-finite component '{tok}'"));
            }
            values.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return format_err(
                    start as u64,
                    format!("inconsistent dimension: line has {count} values, expected {d}"),
                )
            }
            _ => {}
        }
    }
    let d = dim.ok_or_else(|| Error::Format {
        offset: 0,
        message: "empty text dataset".into(),
    })?;
    Dataset::new(d, values).map_err(|e| match e {
        Error::Argument(msg) => Error::Format {
            offset: 0,
            message: msg,
        },
        other => other,
    })
}

pub fn graph_bytes(graph: &KnnGraph) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + graph.len() * graph.k() * 4);
    out.extend_from_slice(&(graph.len() as i32).to_le_bytes());
    out.extend_from_slice(&(graph.k() as i32).to_le_bytes());
    for row in graph.rows() {
        for e in row {
            out.extend_from_slice(&(e.id as i32).to_le_bytes());
        }
    }
    out
}

pub fn save_graph(path: impl AsRef<Path>, graph: &KnnGraph) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&graph_bytes(graph))?;
    Ok(())
}

/// Parses the id payload of a graph file without touching any dataset.
pub fn parse_graph_ids(bytes: &[u8]) -> Result<(usize, Vec<Vec<u32>>)> {
    if bytes.len() < 8 {
        return format_err(0, "graph file shorter than its 8-byte header");
    }
    let n = read_i32(bytes, 0);
    let k = read_i32(bytes, 4);
    if n < 0 || k < 0 {
        return format_err(0, format!("negative header values n = {n}, k = {k}"));
    }
    let (n, k) = (n as usize, k as usize);
    let need = 8 + n * k * 4;
    if bytes.len() != need {
        return format_err(
            bytes.len().min(need) as u64,
            format!("graph payload is {} bytes, header implies {need}", bytes.len()),
        );
    }
    let mut rows = Vec::with_capacity(n);
    for u in 0..n {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            let at = 8 + (u * k + j) * 4;
            let v = read_i32(bytes, at);
            if v < 0 || v as usize >= n {
                return format_err(at as u64, format!("neighbor id {v} out of range"));
            }
            row.push(v as u32);
        }
        rows.push(row);
    }
    Ok((k, rows))
}

pub fn parse_graph(bytes: &[u8], data: &Dataset) -> Result<KnnGraph> {
    let (k, ids) = parse_graph_ids(bytes)?;
    if ids.len() != data.len() {
        return format_err(
            0,
            format!("graph has n = {} but dataset has {} points", ids.len(), data.len()),
        );
    }
    KnnGraph::from_ids(data, k, &ids).map_err(|e| match e {
        Error::Argument(msg) => Error::Format {
            offset: 8,
            message: msg,
        },
        other => other,
    })
}

pub fn load_graph(path: impl AsRef<Path>, data: &Dataset) -> Result<KnnGraph> {
    parse_graph(&fs::read(path)?, data)
}

pub fn layered_bytes(graph: &LayeredGraph) -> Vec<u8> {
    let mut out = Vec::new();
    let put = |out: &mut Vec<u8>, v: i32| out.extend_from_slice(&v.to_le_bytes());
    put(&mut out, graph.len() as i32);
    put(&mut out, graph.num_layers() as i32);
    put(&mut out, graph.entry().map(|e| e as i32).unwrap_or(-1));
    for &l in graph.levels() {
        put(&mut out, l as i32);
    }
    for layer in 0..graph.num_layers() {
        for u in 0..graph.len() as u32 {
            if graph.level(u) as usize >= layer {
                let adj = graph.adjacency(layer, u);
                put(&mut out, adj.len() as i32);
                for e in adj {
                    put(&mut out, e.id as i32);
                }
            }
        }
    }
    out
}

pub fn save_layered(path: impl AsRef<Path>, graph: &LayeredGraph) -> Result<()> {
    fs::write(path, layered_bytes(graph))?;
    Ok(())
}

pub fn parse_layered(bytes: &[u8], data: &Dataset) -> Result<LayeredGraph> {
    let mut at = 0usize;
    let mut next = |what: &str| -> Result<i32> {
        if bytes.len() < at + 4 {
            return format_err(at as u64, format!("truncated layered graph while reading {what}"));
        }
        let v = read_i32(bytes, at);
        at += 4;
        Ok(v)
    };
    let n = next("n")?;
    let num_layers = next("layer count")?;
    let entry = next("entry point")?;
    if n < 0 || n as usize != data.len() {
        return format_err(0, format!("layered graph has n = {n}, dataset has {}", data.len()));
    }
    if num_layers < 1 {
        return format_err(4, format!("layer count {num_layers} must be positive"));
    }
    let n = n as usize;
    if entry < -1 || entry >= n as i32 {
        return format_err(8, format!("entry point {entry} out of range"));
    }
    let mut levels = Vec::with_capacity(n);
    for _ in 0..n {
        let l = next("layer table")?;
        if l < 0 || l >= num_layers {
            return format_err(0, format!("node level {l} outside 0..{num_layers}"));
        }
        levels.push(l as u32);
    }
    let mut scratch = Counters::new();
    let mut layers = vec![vec![Vec::new(); n]; num_layers as usize];
    for (layer, adj) in layers.iter_mut().enumerate() {
        for u in 0..n {
            if (levels[u] as usize) < layer {
                continue;
            }
            let deg = next("degree")?;
            if deg < 0 {
                return format_err(0, format!("negative degree {deg}"));
            }
            for _ in 0..deg {
                let v = next("neighbor id")?;
                if v < 0 || v as usize >= n {
                    return format_err(0, format!("neighbor id {v} out of range"));
                }
                let dist = data.distance(u as u32, v as u32, &mut scratch);
                adj[u].push(Edge { id: v as u32, dist });
            }
        }
    }
    if at != bytes.len() {
        return format_err(at as u64, "trailing bytes after layered graph");
    }
    let entry = (entry >= 0).then_some(entry as u32);
    Ok(LayeredGraph::from_parts(levels, layers, entry))
}

pub fn load_layered(path: impl AsRef<Path>, data: &Dataset) -> Result<LayeredGraph> {
    parse_layered(&fs::read(path)?, data)
}
