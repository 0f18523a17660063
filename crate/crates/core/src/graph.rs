//! Decoding graphs: detectors as nodes, elementary error events as weighted
//! edges, plus typed boundary nodes.
//!
//! Edge weights are kept both as `f64` (log-likelihood units) and as even
//! integers in units of `WEIGHT_UNIT / 2`, so that matching, gap arithmetic
//! and the half-weight penalties of the distance-shifted gaps stay exact.

use crate::error::{Error, Result};

/// Internal integer weight corresponding to a real weight of 1.0.
/// Kept even so that half-unit penalties remain integral.
pub const WEIGHT_UNIT: i64 = 1 << 31;

/// Convert a real weight to internal integer units.
pub fn quantize_weight(w: f64) -> i64 {
    2 * (w * (WEIGHT_UNIT / 2) as f64).round() as i64
}

/// Convert internal integer units back to a real weight.
pub fn weight_to_f64(iw: i64) -> f64 {
    iw as f64 / WEIGHT_UNIT as f64
}

/// Edge weight from an error probability: ln((1-p)/p).
pub fn weight_from_prob(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!(
            "error probability must lie in (0, 0.5), got {p}"
        )));
    }
    Ok(((1.0 - p) / p).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    SpatialLeft,
    SpatialRight,
    VirtualTime,
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Bulk,
    Boundary(BoundaryClass),
}

impl NodeKind {
    pub fn is_boundary(&self) -> bool {
        matches!(self, NodeKind::Boundary(_))
    }
}

/// A detector (bulk) or boundary node. Boundary nodes carry no meaningful
/// spacetime coordinate; `round` is negative for them.
#[derive(Debug, Clone)]
pub struct Node {
    pub round: i32,
    pub pos: [i32; 2],
    pub kind: NodeKind,
}

impl Node {
    pub fn bulk(round: i32, pos: [i32; 2]) -> Self {
        Node {
            round,
            pos,
            kind: NodeKind::Bulk,
        }
    }

    pub fn boundary(class: BoundaryClass) -> Self {
        Node {
            round: -1,
            pos: [0, 0],
            kind: NodeKind::Boundary(class),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub weight: f64,
    pub iweight: i64,
    pub prob: f64,
    pub flips_observable: bool,
}

impl Edge {
    pub fn other(&self, n: u32) -> u32 {
        if self.u == n {
            self.v
        } else {
            self.u
        }
    }
}

/// Weighted decoding graph with adjacency and boundary registry.
#[derive(Debug, Clone, Default)]
pub struct DecodingGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// CSR adjacency; `adj_edge[adj_off[v]..adj_off[v+1]]` lists incident
    /// edge ids in increasing edge-id order.
    pub(crate) adj_off: Vec<u32>,
    pub(crate) adj_edge: Vec<u32>,
    pub boundary_left: Option<u32>,
    pub boundary_right: Option<u32>,
    /// Number of measurement rounds (bulk rounds are 0..rounds).
    pub rounds: u32,
    /// Code distance when the graph came from a builder.
    pub code_distance: Option<u32>,
    /// Number of spatial coordinates carried by bulk nodes (1 or 2).
    pub coord_dims: u8,
}

impl DecodingGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn incident_edges(&self, v: u32) -> &[u32] {
        &self.adj_edge[self.adj_off[v as usize] as usize..self.adj_off[v as usize + 1] as usize]
    }

    pub fn rebuild_adjacency(&mut self) {
        let n = self.nodes.len();
        self.adj_off = vec![0; n + 1];
        for e in &self.edges {
            self.adj_off[e.u as usize + 1] += 1;
            self.adj_off[e.v as usize + 1] += 1;
        }
        for i in 0..n {
            self.adj_off[i + 1] += self.adj_off[i];
        }
        self.adj_edge = vec![0; 2 * self.edges.len()];
        let mut cursor: Vec<u32> = self.adj_off.clone();
        for (k, e) in self.edges.iter().enumerate() {
            self.adj_edge[cursor[e.u as usize] as usize] = k as u32;
            cursor[e.u as usize] += 1;
            self.adj_edge[cursor[e.v as usize] as usize] = k as u32;
            cursor[e.v as usize] += 1;
        }
    }

    /// Structural checks: edge endpoints valid, weights and probabilities in
    /// range, no parallel bulk-boundary edges, boundary registry consistent,
    /// graph connected when boundary nodes are included.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len() as u32;
        for (k, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::Validation(format!(
                    "edge {k} references node out of range"
                )));
            }
            if e.u == e.v {
                return Err(Error::Validation(format!("edge {k} is a self loop")));
            }
            if !(e.weight >= 0.0) {
                return Err(Error::Validation(format!(
                    "edge {k} has negative weight {}",
                    e.weight
                )));
            }
            if !(e.prob > 0.0 && e.prob < 0.5) {
                return Err(Error::Validation(format!(
                    "edge {k} has probability {} outside (0, 0.5)",
                    e.prob
                )));
            }
        }
        for (id, class, name) in [
            (self.boundary_left, BoundaryClass::SpatialLeft, "left"),
            (self.boundary_right, BoundaryClass::SpatialRight, "right"),
        ] {
            if let Some(b) = id {
                if b >= n || self.nodes[b as usize].kind != NodeKind::Boundary(class) {
                    return Err(Error::Validation(format!(
                        "{name} boundary id {b} does not refer to a {name} boundary node"
                    )));
                }
            }
        }
        // exactly one node of each spatial class
        for (class, reg, name) in [
            (BoundaryClass::SpatialLeft, self.boundary_left, "left"),
            (BoundaryClass::SpatialRight, self.boundary_right, "right"),
        ] {
            let count = self
                .nodes
                .iter()
                .filter(|nd| nd.kind == NodeKind::Boundary(class))
                .count();
            if count != usize::from(reg.is_some()) {
                return Err(Error::Validation(format!(
                    "expected {} {name} boundary node(s), found {count}",
                    usize::from(reg.is_some())
                )));
            }
        }
        // at most one edge between a bulk node and a given boundary node
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            let ub = self.nodes[e.u as usize].kind.is_boundary();
            let vb = self.nodes[e.v as usize].kind.is_boundary();
            if ub != vb && !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Validation(format!(
                    "parallel bulk-boundary edge between {} and {}",
                    e.u, e.v
                )));
            }
        }
        // connectivity over the whole graph
        if n > 0 {
            let mut visited = vec![false; n as usize];
            let mut stack = vec![0u32];
            visited[0] = true;
            while let Some(v) = stack.pop() {
                for &k in self.incident_edges(v) {
                    let w = self.edges[k as usize].other(v);
                    if !visited[w as usize] {
                        visited[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            if let Some(v) = visited.iter().position(|&b| !b) {
                return Err(Error::Validation(format!(
                    "graph is disconnected: node {v} unreachable"
                )));
            }
        }
        Ok(())
    }

    /// Parity of observable-flipping edges over an edge set.
    pub fn observable_parity(&self, edge_ids: &[u32]) -> bool {
        let mut p = false;
        for &k in edge_ids {
            p ^= self.edges[k as usize].flips_observable;
        }
        p
    }

    pub fn total_iweight(&self, edge_ids: &[u32]) -> i64 {
        edge_ids.iter().map(|&k| self.edges[k as usize].iweight).sum()
    }

    pub fn total_weight(&self, edge_ids: &[u32]) -> f64 {
        edge_ids.iter().map(|&k| self.edges[k as usize].weight).sum()
    }
}

/// Shortest-path weights from each spatial boundary, in internal units.
#[derive(Debug, Clone)]
pub struct DistanceMaps {
    pub d_left: Vec<i64>,
    pub d_right: Vec<i64>,
}

fn check_code_params(d: u32, rounds: u32) -> Result<()> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::Domain(format!(
            "code distance must be an odd integer >= 3, got {d}"
        )));
    }
    if rounds < 1 {
        return Err(Error::Domain("round count must be >= 1".into()));
    }
    Ok(())
}

/// Repetition-code decoding graph under phenomenological noise: a square
/// lattice with one spatial and one temporal dimension. With `unit_weights`
/// every edge gets weight 1 while keeping its probability.
pub fn build_repetition_graph(
    d: u32,
    rounds: u32,
    p: f64,
    unit_weights: bool,
) -> Result<DecodingGraph> {
    check_code_params(d, rounds)?;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!(
            "error probability must lie in (0, 0.5), got {p}"
        )));
    }
    let w = if unit_weights { 1.0 } else { weight_from_prob(p)? };
    let iw = quantize_weight(w);
    let cols = d - 1;
    let nbulk = cols * rounds;
    let mut g = DecodingGraph {
        coord_dims: 1,
        rounds,
        code_distance: Some(d),
        ..Default::default()
    };
    for r in 0..rounds {
        for x in 0..cols {
            g.nodes.push(Node::bulk(r as i32, [x as i32, 0]));
        }
    }
    let left = nbulk;
    let right = nbulk + 1;
    g.nodes.push(Node::boundary(BoundaryClass::SpatialLeft));
    g.nodes.push(Node::boundary(BoundaryClass::SpatialRight));
    g.boundary_left = Some(left);
    g.boundary_right = Some(right);

    let node = |r: u32, x: u32| r * cols + x;
    let push = |g: &mut DecodingGraph, u: u32, v: u32, obs: bool| {
        g.edges.push(Edge {
            u,
            v,
            weight: w,
            iweight: iw,
            prob: p,
            flips_observable: obs,
        });
    };
    for r in 0..rounds {
        // d spatial data-error edges per round; the left boundary edge
        // carries the logical observable.
        push(&mut g, node(r, 0), left, true);
        for x in 0..cols - 1 {
            push(&mut g, node(r, x), node(r, x + 1), false);
        }
        push(&mut g, node(r, cols - 1), right, false);
    }
    for r in 0..rounds - 1 {
        for x in 0..cols {
            push(&mut g, node(r, x), node(r + 1, x), false);
        }
    }
    g.rebuild_adjacency();
    Ok(g)
}

/// Surface-code decoding graph for a single error type under
/// phenomenological noise: a simple cubic lattice of d rows by (d-1)
/// columns per round, open along the column direction.
pub fn build_surface_graph_phenomenological(
    d: u32,
    rounds: u32,
    p: f64,
    unit_weights: bool,
) -> Result<DecodingGraph> {
    check_code_params(d, rounds)?;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!(
            "error probability must lie in (0, 0.5), got {p}"
        )));
    }
    let w = if unit_weights { 1.0 } else { weight_from_prob(p)? };
    let iw = quantize_weight(w);
    let rows = d;
    let cols = d - 1;
    let per_round = rows * cols;
    let nbulk = per_round * rounds;
    let mut g = DecodingGraph {
        coord_dims: 2,
        rounds,
        code_distance: Some(d),
        ..Default::default()
    };
    for r in 0..rounds {
        for y in 0..rows {
            for x in 0..cols {
                g.nodes.push(Node::bulk(r as i32, [x as i32, y as i32]));
            }
        }
    }
    let left = nbulk;
    let right = nbulk + 1;
    g.nodes.push(Node::boundary(BoundaryClass::SpatialLeft));
    g.nodes.push(Node::boundary(BoundaryClass::SpatialRight));
    g.boundary_left = Some(left);
    g.boundary_right = Some(right);

    let node = |r: u32, y: u32, x: u32| r * per_round + y * cols + x;
    let push = |g: &mut DecodingGraph, u: u32, v: u32, obs: bool| {
        g.edges.push(Edge {
            u,
            v,
            weight: w,
            iweight: iw,
            prob: p,
            flips_observable: obs,
        });
    };
    for r in 0..rounds {
        for y in 0..rows {
            // row chain: open toward both spatial boundaries
            push(&mut g, node(r, y, 0), left, true);
            for x in 0..cols - 1 {
                push(&mut g, node(r, y, x), node(r, y, x + 1), false);
            }
            push(&mut g, node(r, y, cols - 1), right, false);
        }
        // closed direction: no boundary attachment
        for y in 0..rows - 1 {
            for x in 0..cols {
                push(&mut g, node(r, y, x), node(r, y + 1, x), false);
            }
        }
    }
    for r in 0..rounds - 1 {
        for y in 0..rows {
            for x in 0..cols {
                push(&mut g, node(r, y, x), node(r + 1, y, x), false);
            }
        }
    }
    g.rebuild_adjacency();
    Ok(g)
}

/// Exact single-source shortest-path weights from both spatial boundaries.
pub fn compute_boundary_distances(g: &DecodingGraph) -> Result<DistanceMaps> {
    let (Some(left), Some(right)) = (g.boundary_left, g.boundary_right) else {
        return Err(Error::Validation(
            "graph lacks spatial boundary nodes".into(),
        ));
    };
    let csr = crate::dijkstra::Csr::from_graph(g);
    let mut scratch = crate::dijkstra::DijkstraScratch::new();
    let run = |scratch: &mut crate::dijkstra::DijkstraScratch, src: u32| -> Result<Vec<i64>> {
        let (dist, _) = crate::dijkstra::dijkstra(&csr, &[src], scratch, i64::MAX);
        for (v, &dv) in dist.iter().enumerate() {
            if dv == i64::MAX && !g.nodes[v].kind.is_boundary() {
                return Err(Error::Validation(format!(
                    "bulk node {v} unreachable from boundary"
                )));
            }
        }
        Ok(dist)
    };
    let d_left = run(&mut scratch, left)?;
    let d_right = run(&mut scratch, right)?;
    Ok(DistanceMaps { d_left, d_right })
}
