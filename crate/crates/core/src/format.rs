//! Plain-text instance files.
//!
//! ```text
//! n L rho seed
//! layer 0 p_0 q_0
//! i j
//! ...
//! layer 1 p_1 q_1
//! ...
//! z_star +1 -1 ...
//! z_layer 0 +1 -1 ...
//! ```
//!
//! Layers are numbered from 0, edges list 0-based node pairs with `i < j`,
//! and all tokens are whitespace separated. Floats are written in shortest
//! round-trip form so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{Assignment, Layer, ModelParams, MultilayerGraph, SampleRecord};

pub fn write_instance<W: Write>(mut out: W, record: &SampleRecord) -> std::io::Result<()> {
    out.write_all(render_instance(record).as_bytes())
}

pub fn render_instance(record: &SampleRecord) -> String {
    let params = &record.params;
    let mut s = String::new();
    writeln!(s, "{} {} {} {}", params.n, params.num_layers(), params.rho, record.seed).unwrap();
    for (l, layer) in record.graph.layers().iter().enumerate() {
        writeln!(s, "layer {l} {} {}", params.p[l], params.q[l]).unwrap();
        for (i, j) in layer.edges() {
            writeln!(s, "{i} {j}").unwrap();
        }
    }
    s.push_str("z_star");
    push_labels(&mut s, &record.z_star);
    for (l, z) in record.z_layers.iter().enumerate() {
        write!(s, "z_layer {l}").unwrap();
        push_labels(&mut s, z);
    }
    s
}

fn push_labels(s: &mut String, z: &Assignment) {
    for &v in z.labels() {
        s.push_str(if v == 1 { " +1" } else { " -1" });
    }
    s.push('\n');
}

fn format_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Format { line, message: message.into() })
}

fn parse<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::Format { line, message: format!("cannot parse {what} from {token:?}") })
}

/// Reads an instance written by [`write_instance`]. Per-layer flip counts are
/// recomputed from the stored labels.
pub fn read_instance<R: BufRead>(input: R) -> Result<SampleRecord> {
    let mut lines = input.lines().enumerate().map(|(k, r)| (k + 1, r));
    let mut next_line = || -> Result<Option<(usize, String)>> {
        for (k, line) in lines.by_ref() {
            let line = line.map_err(|e| Error::Format { line: k, message: e.to_string() })?;
            if !line.trim().is_empty() {
                return Ok(Some((k, line)));
            }
        }
        Ok(None)
    };

    let Some((k, header)) = next_line()? else {
        return format_err(1, "empty instance file");
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 {
        return format_err(k, "header must be `n L rho seed`");
    }
    let n: usize = parse(tokens[0], k, "n")?;
    let num_layers: usize = parse(tokens[1], k, "L")?;
    let rho: f64 = parse(tokens[2], k, "rho")?;
    let seed: u64 = parse(tokens[3], k, "seed")?;

    let mut p = Vec::with_capacity(num_layers);
    let mut q = Vec::with_capacity(num_layers);
    let mut layers = Vec::with_capacity(num_layers);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut z_star = None;
    let mut z_layers: Vec<Option<Assignment>> = vec![None; num_layers];

    let flush = |edges: &mut Vec<(usize, usize)>, layers: &mut Vec<Layer>, k: usize| -> Result<()> {
        let layer = Layer::from_edges(n, edges).map_err(|e| Error::Format { line: k, message: e.to_string() })?;
        layers.push(layer);
        edges.clear();
        Ok(())
    };

    let mut in_layer = false;
    while let Some((k, line)) = next_line()? {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "layer" => {
                if in_layer {
                    flush(&mut edges, &mut layers, k)?;
                }
                if tokens.len() != 4 {
                    return format_err(k, "layer line must be `layer l p q`");
                }
                let l: usize = parse(tokens[1], k, "layer index")?;
                if l != p.len() {
                    return format_err(k, format!("expected layer {}, found {l}", p.len()));
                }
                p.push(parse(tokens[2], k, "p")?);
                q.push(parse(tokens[3], k, "q")?);
                in_layer = true;
            }
            "z_star" | "z_layer" => {
                if in_layer {
                    flush(&mut edges, &mut layers, k)?;
                    in_layer = false;
                }
                let (slot, rest) = if tokens[0] == "z_star" {
                    (&mut z_star, &tokens[1..])
                } else {
                    let l: usize = parse(*tokens.get(1).unwrap_or(&""), k, "layer index")?;
                    if l >= num_layers {
                        return format_err(k, format!("z_layer index {l} out of range"));
                    }
                    (&mut z_layers[l], &tokens[2..])
                };
                let labels: Vec<i8> =
                    rest.iter().map(|t| parse(t, k, "label")).collect::<Result<_>>()?;
                if labels.len() != n {
                    return format_err(k, format!("expected {n} labels, found {}", labels.len()));
                }
                *slot = Some(Assignment::new(labels).map_err(|e| Error::Format { line: k, message: e.to_string() })?);
            }
            _ => {
                if !in_layer {
                    return format_err(k, format!("unexpected line {line:?}"));
                }
                if tokens.len() != 2 {
                    return format_err(k, "edge line must be `i j`");
                }
                let i: usize = parse(tokens[0], k, "node")?;
                let j: usize = parse(tokens[1], k, "node")?;
                if i >= j {
                    return format_err(k, format!("edge ({i}, {j}) must satisfy i < j"));
                }
                edges.push((i, j));
            }
        }
    }
    if in_layer {
        flush(&mut edges, &mut layers, 0)?;
    }
    if layers.len() != num_layers {
        return format_err(0, format!("header declares {num_layers} layers, found {}", layers.len()));
    }
    let z_star = z_star.ok_or(Error::Format { line: 0, message: "missing z_star line".into() })?;
    let z_layers: Vec<Assignment> = z_layers
        .into_iter()
        .enumerate()
        .map(|(l, z)| z.ok_or(Error::Format { line: 0, message: format!("missing z_layer {l}") }))
        .collect::<Result<_>>()?;
    let params = ModelParams::new(n, rho, p, q)?;
    let flips = z_layers
        .iter()
        .map(|z| z.labels().iter().zip(z_star.labels()).filter(|(a, b)| a != b).count())
        .collect();
    Ok(SampleRecord { params, z_star, z_layers, graph: MultilayerGraph::new(n, layers)?, seed, flips })
}
