//! Plain-text graph file format.
//!
//! One record per line, `#` starts a comment:
//!
//! ```text
//! version 1
//! boundary left <id>
//! boundary right <id>
//! node <id> <round> <x> [<y>]
//! edge <u> <v> prob <p> [weight <w>] [obs]
//! error <p> D<i> [D<j>] [L0]
//! attach D<i> left|right
//! ```
//!
//! `node`/`edge` records describe an explicit graph; `error`/`attach`
//! records are the detector-model shorthand for ingested circuit-level
//! models (detectors are created on first reference; a one-detector error
//! attaches to the spatial boundary declared by a preceding `attach`).
//! Writing always emits the explicit canonical form with probabilities and
//! weights at 12 significant digits, so `save(load(x))` is the identity on
//! canonical files.

use crate::error::{Error, Result};
use crate::fmt::fmt_g12;
use crate::graph::{
    quantize_weight, weight_from_prob, BoundaryClass, DecodingGraph, Edge, Node,
};
use std::collections::HashMap;
use std::fmt::Write as _;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Default)]
struct PendingEdge {
    u: u32,
    v: u32,
    prob: f64,
    weight: Option<f64>,
    obs: bool,
}

/// Parse a graph from its text form.
pub fn load_graph(text: &str) -> Result<DecodingGraph> {
    let mut saw_version = false;
    let mut boundary_left: Option<u32> = None;
    let mut boundary_right: Option<u32> = None;
    let mut declared: HashMap<u32, (i32, [i32; 2], usize)> = HashMap::new();
    let mut max_coords = 1usize;
    let mut referenced_detectors: Vec<u32> = Vec::new();
    let mut attach: HashMap<u32, BoundaryClass> = HashMap::new();
    let mut pending: Vec<PendingEdge> = Vec::new();
    let mut strict_ids: Vec<(u32, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if !saw_version {
            if tokens != ["version", "1"] {
                return Err(parse_err(lineno, "expected `version 1` header"));
            }
            saw_version = true;
            continue;
        }
        match tokens[0] {
            "version" => return Err(parse_err(lineno, "duplicate version line")),
            "boundary" => {
                if tokens.len() != 3 {
                    return Err(parse_err(lineno, "expected `boundary left|right <id>`"));
                }
                let id: u32 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad boundary id"))?;
                match tokens[1] {
                    "left" => boundary_left = Some(id),
                    "right" => boundary_right = Some(id),
                    other => return Err(parse_err(lineno, format!("unknown boundary `{other}`"))),
                }
            }
            "node" => {
                if tokens.len() != 4 && tokens.len() != 5 {
                    return Err(parse_err(lineno, "expected `node <id> <round> <x> [<y>]`"));
                }
                let id: u32 = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad node id"))?;
                let round: i32 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad round"))?;
                let x: i32 = tokens[3]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad coordinate"))?;
                let y: i32 = if tokens.len() == 5 {
                    max_coords = 2;
                    tokens[4]
                        .parse()
                        .map_err(|_| parse_err(lineno, "bad coordinate"))?
                } else {
                    0
                };
                if declared.insert(id, (round, [x, y], lineno)).is_some() {
                    return Err(parse_err(lineno, format!("duplicate node id {id}")));
                }
            }
            "edge" => {
                if tokens.len() < 5 || tokens[3] != "prob" {
                    return Err(parse_err(
                        lineno,
                        "expected `edge <u> <v> prob <p> [weight <w>] [obs]`",
                    ));
                }
                let u: u32 = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad node id"))?;
                let v: u32 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad node id"))?;
                let prob: f64 = tokens[4]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad probability"))?;
                let mut weight = None;
                let mut obs = false;
                let mut rest = &tokens[5..];
                while !rest.is_empty() {
                    match rest[0] {
                        "weight" => {
                            if rest.len() < 2 {
                                return Err(parse_err(lineno, "weight needs a value"));
                            }
                            weight = Some(
                                rest[1]
                                    .parse()
                                    .map_err(|_| parse_err(lineno, "bad weight"))?,
                            );
                            rest = &rest[2..];
                        }
                        "obs" => {
                            obs = true;
                            rest = &rest[1..];
                        }
                        other => {
                            return Err(parse_err(lineno, format!("unknown token `{other}`")))
                        }
                    }
                }
                strict_ids.push((u, lineno));
                strict_ids.push((v, lineno));
                pending.push(PendingEdge {
                    u,
                    v,
                    prob,
                    weight,
                    obs,
                });
            }
            "error" => {
                if tokens.len() < 3 {
                    return Err(parse_err(lineno, "expected `error <p> D<i> [D<j>] [L0]`"));
                }
                let prob: f64 = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad probability"))?;
                let mut dets = Vec::new();
                let mut obs = false;
                for tok in &tokens[2..] {
                    if let Some(rest) = tok.strip_prefix('D') {
                        let id: u32 = rest
                            .parse()
                            .map_err(|_| parse_err(lineno, "bad detector id"))?;
                        dets.push(id);
                    } else if *tok == "L0" {
                        obs = true;
                    } else {
                        return Err(parse_err(lineno, format!("unknown token `{tok}`")));
                    }
                }
                match dets[..] {
                    [a, b] => {
                        referenced_detectors.extend([a, b]);
                        pending.push(PendingEdge {
                            u: a,
                            v: b,
                            prob,
                            weight: None,
                            obs,
                        });
                    }
                    [a] => {
                        let side = attach.get(&a).copied().ok_or_else(|| {
                            parse_err(
                                lineno,
                                format!("single-detector error on D{a} without a preceding attach"),
                            )
                        })?;
                        referenced_detectors.push(a);
                        // boundary ids resolved after all detectors are known
                        pending.push(PendingEdge {
                            u: a,
                            v: match side {
                                BoundaryClass::SpatialLeft => u32::MAX - 1,
                                _ => u32::MAX,
                            },
                            prob,
                            weight: None,
                            obs,
                        });
                    }
                    _ => {
                        return Err(parse_err(
                            lineno,
                            "error must reference one or two detectors",
                        ))
                    }
                }
            }
            "attach" => {
                if tokens.len() != 3 {
                    return Err(parse_err(lineno, "expected `attach D<i> left|right`"));
                }
                let id: u32 = tokens[1]
                    .strip_prefix('D')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(lineno, "bad detector id"))?;
                let class = match tokens[2] {
                    "left" => BoundaryClass::SpatialLeft,
                    "right" => BoundaryClass::SpatialRight,
                    other => return Err(parse_err(lineno, format!("unknown side `{other}`"))),
                };
                referenced_detectors.push(id);
                attach.insert(id, class);
            }
            other => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
        }
    }
    if !saw_version {
        return Err(parse_err(1, "missing `version 1` header"));
    }

    // Assemble the node table: declared nodes plus detectors referenced by
    // error records, then the two spatial boundary nodes.
    let mut bulk_ids: Vec<u32> = declared.keys().copied().collect();
    for &d in &referenced_detectors {
        if !declared.contains_key(&d) {
            bulk_ids.push(d);
        }
    }
    bulk_ids.sort_unstable();
    bulk_ids.dedup();
    let declared_boundaries = boundary_left.is_some() || boundary_right.is_some();
    if declared_boundaries && (boundary_left.is_none() || boundary_right.is_none()) {
        return Err(Error::Validation(
            "both spatial boundaries must be declared together".into(),
        ));
    }
    // ids must be contiguous starting at zero
    let mut all_ids = bulk_ids.clone();
    if let (Some(l), Some(r)) = (boundary_left, boundary_right) {
        all_ids.extend([l, r]);
        all_ids.sort_unstable();
    }
    for (want, &got) in all_ids.iter().enumerate() {
        if got as usize != want {
            return Err(Error::Validation(format!(
                "node ids are not contiguous: expected {want}, found {got}"
            )));
        }
    }
    let (left_id, right_id) = match (boundary_left, boundary_right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            let base = bulk_ids.len() as u32;
            (base, base + 1)
        }
    };
    let n = all_ids.len().max(left_id.max(right_id) as usize + 1);

    // edge records may only reference declared nodes
    {
        let mut valid: std::collections::HashSet<u32> = declared.keys().copied().collect();
        valid.extend(referenced_detectors.iter().copied());
        valid.insert(left_id);
        valid.insert(right_id);
        for (id, line) in strict_ids {
            if !valid.contains(&id) {
                return Err(Error::Validation(format!(
                    "edge at line {line} references undeclared node {id}"
                )));
            }
        }
    }

    let mut nodes: Vec<Node> = (0..n as u32)
        .map(|id| {
            if id == left_id {
                Node::boundary(BoundaryClass::SpatialLeft)
            } else if id == right_id {
                Node::boundary(BoundaryClass::SpatialRight)
            } else if let Some(&(round, pos, _)) = declared.get(&id) {
                Node::bulk(round, pos)
            } else {
                Node::bulk(0, [id as i32, 0])
            }
        })
        .collect();
    // keep declared boundary nodes as boundaries even if also listed as nodes
    if let Some(&(_, _, line)) = declared.get(&left_id) {
        return Err(parse_err(line, "boundary node also declared as bulk node"));
    }
    if let Some(&(_, _, line)) = declared.get(&right_id) {
        return Err(parse_err(line, "boundary node also declared as bulk node"));
    }

    let mut edges: Vec<Edge> = Vec::with_capacity(pending.len());
    for pe in pending {
        let v = match pe.v {
            x if x == u32::MAX - 1 => left_id,
            u32::MAX => right_id,
            x => x,
        };
        let u = pe.u;
        if u as usize >= n || v as usize >= n {
            return Err(Error::Validation(format!(
                "edge references unknown node {}",
                if (u as usize) >= n { u } else { v }
            )));
        }
        if u == v {
            return Err(Error::Validation(format!("self loop on node {u}")));
        }
        let weight = match pe.weight {
            Some(w) => {
                if w < 0.0 {
                    return Err(Error::Validation(format!("negative weight on edge {u}-{v}")));
                }
                w
            }
            None => weight_from_prob(pe.prob)
                .map_err(|e| Error::Validation(format!("edge {u}-{v}: {e}")))?,
        };
        if !(pe.prob > 0.0 && pe.prob < 0.5) {
            return Err(Error::Validation(format!(
                "edge {u}-{v}: probability {} outside (0, 0.5)",
                pe.prob
            )));
        }
        edges.push(Edge {
            u,
            v,
            weight,
            iweight: quantize_weight(weight),
            prob: pe.prob,
            flips_observable: pe.obs,
        });
    }

    // collapse parallel bulk-boundary edges, keeping the smallest weight
    let mut best: HashMap<(u32, u32), usize> = HashMap::new();
    let mut keep = vec![true; edges.len()];
    for (k, e) in edges.iter().enumerate() {
        let ub = nodes[e.u as usize].kind.is_boundary();
        let vb = nodes[e.v as usize].kind.is_boundary();
        if ub == vb {
            continue;
        }
        let key = (e.u.min(e.v), e.u.max(e.v));
        match best.entry(key) {
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(k);
            }
            std::collections::hash_map::Entry::Occupied(mut slot) => {
                let prev = *slot.get();
                if e.iweight < edges[prev].iweight {
                    keep[prev] = false;
                    slot.insert(k);
                } else {
                    keep[k] = false;
                }
            }
        }
    }
    let mut it = keep.iter();
    edges.retain(|_| *it.next().unwrap());

    let rounds = nodes
        .iter()
        .filter(|nd| !nd.kind.is_boundary())
        .map(|nd| nd.round + 1)
        .max()
        .unwrap_or(0)
        .max(0) as u32;
    for nd in nodes.iter_mut() {
        if nd.kind.is_boundary() {
            nd.round = -1;
        }
    }
    let mut g = DecodingGraph {
        nodes,
        edges,
        boundary_left: Some(left_id),
        boundary_right: Some(right_id),
        rounds,
        code_distance: None,
        coord_dims: max_coords as u8,
        ..Default::default()
    };
    g.rebuild_adjacency();
    Ok(g)
}

/// Serialize to canonical text form.
pub fn save_graph(g: &DecodingGraph) -> String {
    let mut out = String::new();
    out.push_str("version 1\n");
    if let Some(l) = g.boundary_left {
        let _ = writeln!(out, "boundary left {l}");
    }
    if let Some(r) = g.boundary_right {
        let _ = writeln!(out, "boundary right {r}");
    }
    for (id, nd) in g.nodes.iter().enumerate() {
        if nd.kind.is_boundary() {
            continue;
        }
        if g.coord_dims >= 2 {
            let _ = writeln!(out, "node {id} {} {} {}", nd.round, nd.pos[0], nd.pos[1]);
        } else {
            let _ = writeln!(out, "node {id} {} {}", nd.round, nd.pos[0]);
        }
    }
    for e in &g.edges {
        let _ = write!(
            out,
            "edge {} {} prob {} weight {}",
            e.u,
            e.v,
            fmt_g12(e.prob),
            fmt_g12(e.weight)
        );
        if e.flips_observable {
            out.push_str(" obs");
        }
        out.push('\n');
    }
    out
}
