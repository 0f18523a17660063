//! Windowed decoding: carving commit/buffer sub-graphs out of the global
//! decoding graph, the five-boundary-node convention, artificial defects,
//! and the sliding and two-stage parallel schedules.
//!
//! A window covers rounds `[w_start, w_end)` of which `[c_start, c_end)` are
//! committed. Edges leaving the window toward uncommitted rounds are
//! reattached to a virtual boundary node; edges toward already-committed
//! rounds are dropped and accounted for by artificial defects. Spatial
//! boundary edges split into commit-side and buffer-side boundary nodes
//! depending on the round of their bulk endpoint.

use crate::dijkstra::{Apsp, Csr};
use crate::error::{Error, Result};
use crate::graph::{BoundaryClass, DecodingGraph, Edge, Node, NodeKind};
use crate::matcher::{Decoded, ErrorChain, Label, Matcher, SyndromeLabels};
use std::collections::HashMap;
use std::sync::Arc;

pub const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub w_start: u32,
    pub w_end: u32,
    pub c_start: u32,
    pub c_end: u32,
    pub past_virtual: bool,
    pub future_virtual: bool,
}

impl WindowSpec {
    pub fn has_virtual(&self) -> bool {
        self.past_virtual || self.future_virtual
    }
}

/// Local ids of the window boundary nodes.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundarySlots {
    pub com_left: Option<u32>,
    pub com_right: Option<u32>,
    pub buf_left: Option<u32>,
    pub buf_right: Option<u32>,
    pub virt: Option<u32>,
}

impl BoundarySlots {
    pub fn all(&self) -> impl Iterator<Item = u32> {
        [
            self.com_left,
            self.com_right,
            self.buf_left,
            self.buf_right,
            self.virt,
        ]
        .into_iter()
        .flatten()
    }

    pub fn count(&self) -> usize {
        self.all().count()
    }
}

/// Immutable per-geometry data, shared across shots.
pub struct WindowGeometry {
    pub spec: WindowSpec,
    pub graph: DecodingGraph,
    pub csr: Csr,
    pub apsp: Apsp,
    /// local bulk id -> global node id
    pub node_map: Vec<u32>,
    pub n_bulk: usize,
    pub boundary: BoundarySlots,
    /// local edge -> global edge id
    pub edge_global: Vec<u32>,
    /// local edge -> global endpoint replaced by the virtual node, or NO_NODE
    pub virtual_v0: Vec<u32>,
    /// local edge -> owned by this window's commit output
    pub commit_owned: Vec<bool>,
    /// per local node: shortest-path weight to the virtual node inside the
    /// window, with chains through other boundary nodes excluded
    pub dist_to_virtual: Vec<i64>,
}

impl WindowGeometry {
    pub fn is_terminal(&self) -> bool {
        !self.spec.has_virtual()
    }
}

/// Build the local graph for a window specification.
pub fn build_window_geometry(g: &DecodingGraph, spec: WindowSpec) -> Result<WindowGeometry> {
    if spec.c_start < spec.w_start
        || spec.c_end > spec.w_end
        || spec.c_start >= spec.c_end
        || spec.w_end > g.rounds
    {
        return Err(Error::Domain(format!("bad window spec {spec:?}")));
    }
    let in_window = |round: i32| -> bool {
        round >= 0 && (round as u32) >= spec.w_start && (round as u32) < spec.w_end
    };
    let in_commit = |round: i32| -> bool {
        round >= 0 && (round as u32) >= spec.c_start && (round as u32) < spec.c_end
    };

    let mut node_map: Vec<u32> = Vec::new();
    let mut local_of: HashMap<u32, u32> = HashMap::new();
    for (id, nd) in g.nodes.iter().enumerate() {
        if !nd.kind.is_boundary() && in_window(nd.round) {
            local_of.insert(id as u32, node_map.len() as u32);
            node_map.push(id as u32);
        }
    }
    let n_bulk = node_map.len();
    let mut nodes: Vec<Node> = node_map
        .iter()
        .map(|&gid| g.nodes[gid as usize].clone())
        .collect();

    let mut slots = BoundarySlots::default();
    let alloc_slot = |nodes: &mut Vec<Node>, class: BoundaryClass| -> u32 {
        let id = nodes.len() as u32;
        nodes.push(Node::boundary(class));
        id
    };

    // classify global edges
    struct LocalEdge {
        u: u32,
        v: u32,
        weight: f64,
        iweight: i64,
        prob: f64,
        obs: bool,
        global: u32,
        v0: u32,
        commit: bool,
    }
    let mut ledges: Vec<LocalEdge> = Vec::new();
    // candidate virtual attachments per local bulk node
    let mut virt_candidates: HashMap<u32, (i64, u32)> = HashMap::new();
    for (k, e) in g.edges.iter().enumerate() {
        let (nu, nv) = (&g.nodes[e.u as usize], &g.nodes[e.v as usize]);
        let ub = nu.kind.is_boundary();
        let vb = nv.kind.is_boundary();
        if ub && vb {
            continue;
        }
        let commit_edge = (!ub && in_commit(nu.round)) || (!vb && in_commit(nv.round));
        if !ub && !vb {
            match (local_of.get(&e.u), local_of.get(&e.v)) {
                (Some(&lu), Some(&lv)) => ledges.push(LocalEdge {
                    u: lu,
                    v: lv,
                    weight: e.weight,
                    iweight: e.iweight,
                    prob: e.prob,
                    obs: e.flips_observable,
                    global: k as u32,
                    v0: NO_NODE,
                    commit: commit_edge,
                }),
                (Some(&lu), None) | (None, Some(&lu)) => {
                    // cut edge: reattach to the virtual boundary or drop
                    let (inside, outside) = if local_of.contains_key(&e.u) {
                        (lu, e.v)
                    } else {
                        (lu, e.u)
                    };
                    let out_round = g.nodes[outside as usize].round;
                    let toward_future = out_round >= spec.w_end as i32;
                    let attach = if toward_future {
                        spec.future_virtual
                    } else {
                        spec.past_virtual
                    };
                    if attach {
                        let cand = virt_candidates.entry(inside).or_insert((i64::MAX, u32::MAX));
                        if (e.iweight, k as u32) < *cand {
                            *cand = (e.iweight, k as u32);
                        }
                    }
                }
                (None, None) => {}
            }
        } else {
            // spatial boundary edge
            let (bulk, bulk_node, bclass) = if ub {
                (e.v, nv, nu.kind)
            } else {
                (e.u, nu, nv.kind)
            };
            let Some(&lb) = local_of.get(&bulk) else {
                continue;
            };
            let left = matches!(bclass, NodeKind::Boundary(BoundaryClass::SpatialLeft));
            let slot = if in_commit(bulk_node.round) {
                if left {
                    &mut slots.com_left
                } else {
                    &mut slots.com_right
                }
            } else if left {
                &mut slots.buf_left
            } else {
                &mut slots.buf_right
            };
            let target = match slot {
                Some(t) => *t,
                None => {
                    let class = if left {
                        BoundaryClass::SpatialLeft
                    } else {
                        BoundaryClass::SpatialRight
                    };
                    let t = alloc_slot(&mut nodes, class);
                    *slot = Some(t);
                    t
                }
            };
            ledges.push(LocalEdge {
                u: lb,
                v: target,
                weight: e.weight,
                iweight: e.iweight,
                prob: e.prob,
                obs: e.flips_observable,
                global: k as u32,
                v0: NO_NODE,
                commit: commit_edge,
            });
        }
    }
    if spec.has_virtual() {
        let virt = alloc_slot(&mut nodes, BoundaryClass::VirtualTime);
        slots.virt = Some(virt);
        let mut cands: Vec<(u32, i64, u32)> = virt_candidates
            .into_iter()
            .map(|(v, (w, k))| (v, w, k))
            .collect();
        cands.sort_unstable_by_key(|&(v, _, _)| v);
        for (lv, iw, k) in cands {
            let e = &g.edges[k as usize];
            let gv = node_map[lv as usize];
            let v0 = if e.u == gv { e.v } else { e.u };
            ledges.push(LocalEdge {
                u: lv,
                v: virt,
                weight: e.weight,
                iweight: iw,
                prob: e.prob,
                obs: e.flips_observable,
                global: k,
                v0,
                commit: false,
            });
        }
    }

    let mut graph = DecodingGraph {
        nodes,
        rounds: g.rounds,
        code_distance: g.code_distance,
        coord_dims: g.coord_dims,
        ..Default::default()
    };
    let mut edge_global = Vec::with_capacity(ledges.len());
    let mut virtual_v0 = Vec::with_capacity(ledges.len());
    let mut commit_owned = Vec::with_capacity(ledges.len());
    for le in ledges {
        graph.edges.push(Edge {
            u: le.u,
            v: le.v,
            weight: le.weight,
            iweight: le.iweight,
            prob: le.prob,
            flips_observable: le.obs,
        });
        edge_global.push(le.global);
        virtual_v0.push(le.v0);
        commit_owned.push(le.commit);
    }
    graph.rebuild_adjacency();
    let csr = Csr::from_graph(&graph);
    let apsp = Apsp::build(&csr);
    let dist_to_virtual = match slots.virt {
        Some(virt) => virtual_distances(&graph, &csr, virt),
        None => Vec::new(),
    };
    Ok(WindowGeometry {
        spec,
        graph,
        csr,
        apsp,
        node_map,
        n_bulk,
        boundary: slots,
        edge_global,
        virtual_v0,
        commit_owned,
        dist_to_virtual,
    })
}

/// Dijkstra from the virtual node where other boundary nodes absorb (their
/// outgoing edges are never relaxed), so distances follow real error chains.
fn virtual_distances(g: &DecodingGraph, csr: &Csr, virt: u32) -> Vec<i64> {
    use std::cmp::Reverse;
    let mut dist = vec![i64::MAX; g.num_nodes()];
    let mut heap = std::collections::BinaryHeap::new();
    dist[virt as usize] = 0;
    heap.push(Reverse((0i64, virt)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        if v != virt && g.nodes[v as usize].kind.is_boundary() {
            continue;
        }
        for (u, w, _) in csr.neighbors(v) {
            let nd = d + w;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    dist
}

/// Local labels: bulk copied from the global assignment, boundary nodes free.
pub fn window_labels(geo: &WindowGeometry, sigma: &SyndromeLabels) -> SyndromeLabels {
    let mut labels = Vec::with_capacity(geo.graph.num_nodes());
    for &gid in &geo.node_map {
        labels.push(sigma.labels[gid as usize]);
    }
    labels.resize(geo.graph.num_nodes(), Label::Free);
    SyndromeLabels { labels }
}

/// Global ids of the committed edges of a window decode.
pub fn commit_from(geo: &WindowGeometry, decoded: &Decoded) -> Vec<u32> {
    decoded
        .chain
        .edges
        .iter()
        .filter(|&&k| geo.commit_owned[k as usize])
        .map(|&k| geo.edge_global[k as usize])
        .collect()
}

/// Toggle the label of every node at `boundary_round` that is incident to a
/// committed edge with exactly one endpoint at that round. Toggles compose
/// modulo 2.
pub fn apply_artificial_defects(
    g: &DecodingGraph,
    sigma: &mut SyndromeLabels,
    committed: &[u32],
    boundary_round: u32,
) {
    for &k in committed {
        let e = &g.edges[k as usize];
        let ru = g.nodes[e.u as usize].round;
        let rv = g.nodes[e.v as usize].round;
        let at_u = ru == boundary_round as i32;
        let at_v = rv == boundary_round as i32;
        if at_u != at_v {
            sigma.toggle(if at_u { e.u } else { e.v });
        }
    }
}

/// Shared decoding context: global graph plus per-worker scratch. The
/// global tables may be shared across workers; the matcher and geometry
/// cache are worker-local.
pub struct DecodeEnv<'g> {
    pub g: &'g DecodingGraph,
    pub csr: Arc<Csr>,
    pub apsp: Option<Arc<Apsp>>,
    pub matcher: Matcher,
    cache: HashMap<WindowSpec, Arc<WindowGeometry>>,
}

impl<'g> DecodeEnv<'g> {
    /// `with_apsp` precomputes all-pairs shortest paths on the global graph;
    /// worth it when many shots share the graph.
    pub fn new(g: &'g DecodingGraph, with_apsp: bool) -> Self {
        let csr = Arc::new(Csr::from_graph(g));
        let apsp = with_apsp.then(|| Arc::new(Apsp::build(&csr)));
        DecodeEnv {
            g,
            csr,
            apsp,
            matcher: Matcher::new(),
            cache: HashMap::new(),
        }
    }

    /// A worker-local view sharing the prebuilt global tables.
    pub fn fork(&self) -> DecodeEnv<'g> {
        DecodeEnv {
            g: self.g,
            csr: self.csr.clone(),
            apsp: self.apsp.clone(),
            matcher: Matcher::new(),
            cache: HashMap::new(),
        }
    }

    pub fn decode_global(&mut self, sigma: &SyndromeLabels) -> Result<Decoded> {
        self.matcher
            .decode(self.g, &self.csr, sigma, self.apsp.as_deref())
    }

    pub fn geometry(&mut self, spec: WindowSpec) -> Result<Arc<WindowGeometry>> {
        if let Some(geo) = self.cache.get(&spec) {
            return Ok(geo.clone());
        }
        let geo = Arc::new(build_window_geometry(self.g, spec)?);
        self.cache.insert(spec, geo.clone());
        Ok(geo)
    }

    pub fn decode_window(&mut self, geo: &WindowGeometry, labels: &SyndromeLabels) -> Result<Decoded> {
        self.matcher
            .decode(&geo.graph, &geo.csr, labels, Some(&geo.apsp))
    }
}

/// Decision returned by the per-window hook of `sliding_decode_with`.
pub enum HookOutcome {
    Commit,
    /// Re-extract the window with this buffer size, decode, and commit that
    /// result. The hook is not consulted again.
    Redo { r_buf: u32 },
}

#[derive(Debug, Clone)]
pub struct WindowMeta {
    pub index: usize,
    pub start_round: u32,
    pub commit_end: u32,
    pub buffer_used: u32,
    pub switched: bool,
    pub terminal: bool,
}

/// Sequential sliding-window decoding. `buf_for_window` gives the default
/// buffer size per window index; the hook may request a redo with a larger
/// buffer. Returns the committed global chain and per-window metadata.
pub fn sliding_decode_with<B, F>(
    env: &mut DecodeEnv,
    sigma_global: &SyndromeLabels,
    r_com: u32,
    mut buf_for_window: B,
    mut hook: F,
) -> Result<(ErrorChain, Vec<WindowMeta>)>
where
    B: FnMut(usize) -> u32,
    F: FnMut(
        &mut DecodeEnv,
        usize,
        &WindowGeometry,
        &SyndromeLabels,
        &Decoded,
    ) -> Result<HookOutcome>,
{
    if r_com == 0 {
        return Err(Error::Domain("commit size must be at least 1".into()));
    }
    let total = env.g.rounds;
    let mut sigma = sigma_global.clone();
    let mut committed: Vec<u32> = Vec::new();
    let mut metas: Vec<WindowMeta> = Vec::new();
    let mut start = 0u32;
    let mut index = 0usize;
    while start < total {
        let c_end = (start + r_com).min(total);
        let r_buf = buf_for_window(index);
        let w_end = (c_end + r_buf).min(total);
        let future_virtual = w_end < total;
        if future_virtual && r_buf == 0 {
            return Err(Error::Domain(
                "non-terminal sliding window needs a buffer of at least one round".into(),
            ));
        }
        let spec = WindowSpec {
            w_start: start,
            w_end,
            c_start: start,
            c_end,
            past_virtual: false,
            future_virtual,
        };
        let geo = env.geometry(spec)?;
        let labels = window_labels(&geo, &sigma);
        let decoded = env.decode_window(&geo, &labels)?;
        let outcome = hook(env, index, &geo, &labels, &decoded)?;
        let (commit_geo, commit_decoded, buffer_used, switched) = match outcome {
            HookOutcome::Commit => (geo, decoded, w_end - c_end, false),
            HookOutcome::Redo { r_buf: big } => {
                let w_end2 = (c_end + big).min(total);
                let spec2 = WindowSpec {
                    w_start: start,
                    w_end: w_end2,
                    c_start: start,
                    c_end,
                    past_virtual: false,
                    future_virtual: w_end2 < total,
                };
                let geo2 = env.geometry(spec2)?;
                let labels2 = window_labels(&geo2, &sigma);
                let decoded2 = env.decode_window(&geo2, &labels2)?;
                (geo2, decoded2, w_end2 - c_end, true)
            }
        };
        let win_commit = commit_from(&commit_geo, &commit_decoded);
        if c_end < total {
            apply_artificial_defects(env.g, &mut sigma, &win_commit, c_end);
        }
        committed.extend(win_commit);
        metas.push(WindowMeta {
            index,
            start_round: start,
            commit_end: c_end,
            buffer_used,
            switched,
            terminal: !future_virtual,
        });
        start = c_end;
        index += 1;
    }
    Ok((ErrorChain::from_edges(env.g, committed), metas))
}

/// Plain sliding decode with a fixed buffer and no per-window processing.
pub fn sliding_decode(
    env: &mut DecodeEnv,
    sigma_global: &SyndromeLabels,
    r_com: u32,
    r_buf: u32,
) -> Result<(ErrorChain, Vec<WindowMeta>)> {
    sliding_decode_with(env, sigma_global, r_com, |_| r_buf, |_, _, _, _, _| {
        Ok(HookOutcome::Commit)
    })
}

/// Two-stage parallel window decoding. Stage-1 windows commit `r_com` rounds
/// each, spaced `r_com + gap_rounds` apart, with `r_buf`-round buffers and
/// virtual boundaries on both temporal faces. Stage-2 windows fill the gaps
/// without buffers, fed by artificial defects on both faces.
pub fn parallel_decode_with<F>(
    env: &mut DecodeEnv,
    sigma_global: &SyndromeLabels,
    r_com: u32,
    r_buf: u32,
    gap_rounds: u32,
    mut stage1_hook: F,
) -> Result<(ErrorChain, Vec<WindowMeta>)>
where
    F: FnMut(
        &mut DecodeEnv,
        usize,
        &WindowGeometry,
        &SyndromeLabels,
        &Decoded,
    ) -> Result<()>,
{
    if r_com == 0 || gap_rounds == 0 {
        return Err(Error::Domain(
            "parallel windows need commit size and gap of at least 1".into(),
        ));
    }
    if r_buf == 0 {
        return Err(Error::Domain(
            "stage-1 parallel windows need a buffer of at least one round".into(),
        ));
    }
    let total = env.g.rounds;
    let mut committed: Vec<u32> = Vec::new();
    let mut metas: Vec<WindowMeta> = Vec::new();
    let mut stage1_commits: Vec<(u32, u32, Vec<u32>)> = Vec::new();

    let mut c0 = 0u32;
    let mut index = 0usize;
    while c0 < total {
        let c_end = (c0 + r_com).min(total);
        let w_start = c0.saturating_sub(r_buf);
        let w_end = (c_end + r_buf).min(total);
        let spec = WindowSpec {
            w_start,
            w_end,
            c_start: c0,
            c_end,
            past_virtual: w_start > 0,
            future_virtual: w_end < total,
        };
        let geo = env.geometry(spec)?;
        let labels = window_labels(&geo, sigma_global);
        let decoded = env.decode_window(&geo, &labels)?;
        stage1_hook(env, index, &geo, &labels, &decoded)?;
        let win_commit = commit_from(&geo, &decoded);
        stage1_commits.push((c0, c_end, win_commit));
        metas.push(WindowMeta {
            index,
            start_round: c0,
            commit_end: c_end,
            buffer_used: w_end - c_end,
            switched: false,
            terminal: !spec.has_virtual(),
        });
        c0 += r_com + gap_rounds;
        index += 1;
    }

    // Stage 2: decode the gaps with artificial defects on both faces.
    let mut sigma = sigma_global.clone();
    for (_, c_end, win_commit) in &stage1_commits {
        if *c_end < total {
            apply_artificial_defects(env.g, &mut sigma, win_commit, *c_end);
        }
    }
    for (c0, _, win_commit) in &stage1_commits {
        if *c0 > 0 {
            apply_artificial_defects(env.g, &mut sigma, win_commit, *c0 - 1);
        }
    }
    for (i, &(_, prev_end, _)) in stage1_commits.iter().enumerate() {
        let next_start = stage1_commits
            .get(i + 1)
            .map(|&(s, _, _)| s)
            .unwrap_or(total);
        if prev_end >= next_start {
            continue;
        }
        let spec = WindowSpec {
            w_start: prev_end,
            w_end: next_start,
            c_start: prev_end,
            c_end: next_start,
            past_virtual: false,
            future_virtual: false,
        };
        let geo = env.geometry(spec)?;
        let labels = window_labels(&geo, &sigma);
        let decoded = env.decode_window(&geo, &labels)?;
        committed.extend(commit_from(&geo, &decoded));
        metas.push(WindowMeta {
            index,
            start_round: prev_end,
            commit_end: next_start,
            buffer_used: 0,
            switched: false,
            terminal: true,
        });
        index += 1;
    }
    for (_, _, win_commit) in stage1_commits {
        committed.extend(win_commit);
    }
    Ok((ErrorChain::from_edges(env.g, committed), metas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_repetition_graph, WEIGHT_UNIT};
    use crate::matcher::Label;

    fn global_labels(g: &DecodingGraph) -> SyndromeLabels {
        let mut l = SyndromeLabels::all_zero(g.num_nodes());
        l.set(g.boundary_left.unwrap(), Label::Free);
        l.set(g.boundary_right.unwrap(), Label::Free);
        l
    }

    #[test]
    fn window_counts() {
        let g = build_repetition_graph(5, 25, 0.05, true).unwrap();
        let spec = WindowSpec {
            w_start: 0,
            w_end: 4,
            c_start: 0,
            c_end: 2,
            past_virtual: false,
            future_virtual: true,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        assert_eq!(geo.n_bulk, 16);
        assert_eq!(geo.boundary.count(), 5);
        assert!(geo.boundary.virt.is_some());
        // virtual edges: one per node in the last buffer round
        let virt = geo.boundary.virt.unwrap();
        let virt_edges = geo
            .graph
            .edges
            .iter()
            .filter(|e| e.u == virt || e.v == virt)
            .count();
        assert_eq!(virt_edges, 4);
    }

    #[test]
    fn terminal_window_has_no_virtual_node() {
        let g = build_repetition_graph(5, 10, 0.05, true).unwrap();
        let spec = WindowSpec {
            w_start: 8,
            w_end: 10,
            c_start: 8,
            c_end: 10,
            past_virtual: false,
            future_virtual: false,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        assert!(geo.boundary.virt.is_none());
        assert_eq!(geo.boundary.count(), 2); // commit left + right only
    }

    #[test]
    fn full_graph_window_decodes_like_global() {
        let g = build_repetition_graph(5, 6, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, true);
        let mut sigma = global_labels(&g);
        for v in [1u32, 4, 9, 16] {
            sigma.set(v, Label::One);
        }
        let global = env.decode_global(&sigma).unwrap();
        let (chain, metas) = sliding_decode(&mut env, &sigma, 6, 0).unwrap();
        assert_eq!(metas.len(), 1);
        assert!(metas[0].terminal);
        // same edge set, mapped through the identity
        assert_eq!(chain.edges, global.chain.edges);
        // a single window spanning everything via r_buf also matches
        let (chain2, metas2) = sliding_decode(&mut env, &sigma, 3, 3).unwrap();
        assert_eq!(metas2.len(), 2);
        let _ = chain2;
    }

    #[test]
    fn zero_error_shot_commits_nothing() {
        let g = build_repetition_graph(5, 12, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = global_labels(&g);
        let (chain, metas) = sliding_decode(&mut env, &sigma, 2, 2).unwrap();
        assert!(chain.edges.is_empty());
        assert_eq!(metas.len(), 6);
        let (chain, _) = parallel_decode_with(&mut env, &sigma, 2, 2, 2, |_, _, _, _, _| Ok(()))
            .unwrap();
        assert!(chain.edges.is_empty());
    }

    /// The committed chain must reproduce the syndrome at every bulk node.
    fn check_consistency(g: &DecodingGraph, sigma: &SyndromeLabels, chain: &ErrorChain) {
        let mut par = vec![false; g.num_nodes()];
        for &k in &chain.edges {
            let e = &g.edges[k as usize];
            par[e.u as usize] ^= true;
            par[e.v as usize] ^= true;
        }
        for (v, nd) in g.nodes.iter().enumerate() {
            if nd.kind.is_boundary() {
                continue;
            }
            let want = sigma.labels[v] == Label::One;
            assert_eq!(par[v], want, "parity mismatch at node {v}");
        }
    }

    #[test]
    fn committed_chain_satisfies_syndrome() {
        let mut state = 0xabcdef0123456789u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let g = build_repetition_graph(5, 15, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, true);
        for _ in 0..60 {
            let mut sigma = global_labels(&g);
            // sample a random error and take its boundary as the syndrome
            let mut count = 0;
            for e in &g.edges {
                if next() % 100 < 12 {
                    for end in [e.u, e.v] {
                        if !g.nodes[end as usize].kind.is_boundary() {
                            sigma.toggle(end);
                        }
                    }
                    count += 1;
                }
            }
            let _ = count;
            let (chain, _) = sliding_decode(&mut env, &sigma, 2, 2).unwrap();
            check_consistency(&g, &sigma, &chain);
            let (chain, _) = sliding_decode(&mut env, &sigma, 3, 1).unwrap();
            check_consistency(&g, &sigma, &chain);
            let (chain, _) =
                parallel_decode_with(&mut env, &sigma, 3, 2, 3, |_, _, _, _, _| Ok(()))
                    .unwrap();
            check_consistency(&g, &sigma, &chain);
        }
    }

    #[test]
    fn artificial_defect_toggle_is_involution() {
        let g = build_repetition_graph(5, 8, 0.05, true).unwrap();
        let mut sigma = global_labels(&g);
        // one committed temporal edge crossing round 4
        let crossing: Vec<u32> = g
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let ru = g.nodes[e.u as usize].round;
                let rv = g.nodes[e.v as usize].round;
                ru.min(rv) == 3 && ru.max(rv) == 4
            })
            .map(|(k, _)| k as u32)
            .take(1)
            .collect();
        let before = sigma.clone();
        apply_artificial_defects(&g, &mut sigma, &crossing, 4);
        let flipped = sigma
            .labels
            .iter()
            .zip(&before.labels)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(flipped, 1);
        apply_artificial_defects(&g, &mut sigma, &crossing, 4);
        assert_eq!(sigma.labels, before.labels);
        // duplicated edge toggles cancel
        let doubled: Vec<u32> = crossing.iter().chain(crossing.iter()).copied().collect();
        apply_artificial_defects(&g, &mut sigma, &doubled, 4);
        assert_eq!(sigma.labels, before.labels);
    }

    #[test]
    fn windows_partition_rounds() {
        let g = build_repetition_graph(5, 13, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = global_labels(&g);
        // force every edge into some window's commit set exactly once by
        // checking ownership flags across all windows
        let mut owned = vec![0u32; g.num_edges()];
        sliding_decode_with(
            &mut env,
            &sigma,
            3,
            |_| 2,
            |_, _, geo, _, _| {
                for (k, &own) in geo.commit_owned.iter().enumerate() {
                    if own {
                        owned[geo.edge_global[k] as usize] += 1;
                    }
                }
                Ok(HookOutcome::Commit)
            },
        )
        .unwrap();
        assert!(owned.iter().all(|&c| c == 1), "each edge owned exactly once");
    }

    #[test]
    fn commit_edge_count_matches_enumeration() {
        // d=5, r_com=2, r_buf=2 window at the start: the commit region owns
        // every edge with an endpoint in rounds 0..2, including the
        // temporal edges leaving round 1, and nothing attached to the
        // virtual node
        let g = build_repetition_graph(5, 25, 0.05, true).unwrap();
        let spec = WindowSpec {
            w_start: 0,
            w_end: 4,
            c_start: 0,
            c_end: 2,
            past_virtual: false,
            future_virtual: true,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        let commit_count = geo.commit_owned.iter().filter(|&&c| c).count();
        // explicit enumeration: 2 rounds x 5 spatial edges, 4 temporal
        // edges between rounds 0-1, 4 temporal edges leaving round 1
        assert_eq!(commit_count, 10 + 4 + 4);
        // none of the committed edges touches the virtual node
        let virt = geo.boundary.virt.unwrap();
        for (k, e) in geo.graph.edges.iter().enumerate() {
            if geo.commit_owned[k] {
                assert_ne!(e.u, virt);
                assert_ne!(e.v, virt);
            }
        }
    }

    #[test]
    fn rejects_zero_buffer_non_terminal() {
        let g = build_repetition_graph(5, 10, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = global_labels(&g);
        assert!(sliding_decode(&mut env, &sigma, 2, 0).is_err());
    }

    #[test]
    fn virtual_distances_avoid_boundary_hubs() {
        let g = build_repetition_graph(5, 20, 0.05, true).unwrap();
        let spec = WindowSpec {
            w_start: 0,
            w_end: 4,
            c_start: 0,
            c_end: 2,
            past_virtual: false,
            future_virtual: true,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        // node in the last buffer round: one virtual edge away
        let last_round_local = geo
            .node_map
            .iter()
            .position(|&gid| g.nodes[gid as usize].round == 3)
            .unwrap();
        assert_eq!(geo.dist_to_virtual[last_round_local], WEIGHT_UNIT);
        // node in the first round: temporal steps up plus the virtual edge
        assert_eq!(geo.dist_to_virtual[0], 4 * WEIGHT_UNIT);
    }
}
