//! Soft information for window decoding: the spatiotemporal complementary
//! gap (STCG), its distance-shifted and path-selected refinements, and the
//! classic complementary gap of global decoding as the baseline.
//!
//! All three window gaps start from the same construction: decode the
//! window, close the buffer boundary (deleting its edges, but keeping any
//! that carry the minimum-weight error as pendant defects), and re-decode
//! under a complementary parity constraint. The minimum-weight error of the
//! modified window provably keeps the original weight, so the difference of
//! the two decodes is a nonnegative confidence measure.

use crate::dijkstra::Csr;
use crate::error::{Error, Result};
use crate::graph::{
    weight_to_f64, BoundaryClass, DecodingGraph, DistanceMaps, Edge, Node, WEIGHT_UNIT,
};
use crate::matcher::{Decoded, ErrorChain, Label, MatchPair, Matcher, SyndromeLabels};
use crate::window::WindowGeometry;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GapKind {
    Stcg,
    DsStcg,
    PsStcg,
    Complementary,
}

impl GapKind {
    pub fn name(&self) -> &'static str {
        match self {
            GapKind::Stcg => "stcg",
            GapKind::DsStcg => "ds_stcg",
            GapKind::PsStcg => "ps_stcg",
            GapKind::Complementary => "complementary",
        }
    }
}

impl std::str::FromStr for GapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stcg" => Ok(GapKind::Stcg),
            "ds_stcg" => Ok(GapKind::DsStcg),
            "ps_stcg" => Ok(GapKind::PsStcg),
            "complementary" => Ok(GapKind::Complementary),
            other => Err(Error::Config(format!("unknown gap kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSide {
    Left,
    Right,
    Merged,
    NotApplicable,
}

#[derive(Debug, Clone)]
pub struct GapResult {
    pub kind: GapKind,
    /// Gap in weight units.
    pub value: f64,
    /// Exact internal representation of the gap.
    pub value_int: i64,
    pub w_min: f64,
    pub w_alt: f64,
    pub side: GapSide,
    /// For the distance-shifted gap: global exit node and applied penalty.
    pub path_meta: Option<PathMeta>,
}

#[derive(Debug, Clone, Copy)]
pub struct PathMeta {
    pub exit_node: u32,
    pub penalty_int: i64,
}

/// How the t_min penalty is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMode {
    /// Phenomenological unit-weight rule max(ceil(d/2) - s, 0).
    CeilHalfD(u32),
    /// Weighted-graph rule max((d_far - d_near)/2, 0).
    HalfDifference,
}

/// Penalty for an alternative chain that leaves toward the virtual boundary
/// at a point with the given global boundary distances, relative to the
/// commit boundary the chain starts from.
pub fn virtual_exit_penalty(mode: PenaltyMode, side: GapSide, d_left: i64, d_right: i64) -> i64 {
    let (far, near) = match side {
        GapSide::Right => (d_left, d_right),
        GapSide::Left => (d_right, d_left),
        _ => panic!("penalty needs a concrete side"),
    };
    match mode {
        PenaltyMode::CeilHalfD(d) => {
            let half = (d as i64 + 1) / 2;
            (half * WEIGHT_UNIT - near).max(0)
        }
        PenaltyMode::HalfDifference => ((far - near) / 2).max(0),
    }
}

/// Classic complementary gap of global decoding: rerun with both spatial
/// boundary parities flipped relative to their use in the minimum-weight
/// error.
pub fn complementary_gap(
    matcher: &mut Matcher,
    g: &DecodingGraph,
    csr: &Csr,
    apsp: Option<&crate::dijkstra::Apsp>,
    labels: &SyndromeLabels,
) -> Result<GapResult> {
    let (Some(left), Some(right)) = (g.boundary_left, g.boundary_right) else {
        return Err(Error::Refusal(
            "complementary gap needs both spatial boundaries".into(),
        ));
    };
    let emin = matcher.decode(g, csr, labels, apsp)?;
    let mut flipped = labels.clone();
    for b in [left, right] {
        let parity = chain_parity_at(g, &emin.chain, b);
        flipped.set(b, if parity { Label::Zero } else { Label::One });
    }
    let ecomp = matcher.decode(g, csr, &flipped, apsp)?;
    let value_int = ecomp.chain.iweight - emin.chain.iweight;
    Ok(GapResult {
        kind: GapKind::Complementary,
        value: weight_to_f64(value_int),
        value_int,
        w_min: emin.chain.total_weight,
        w_alt: ecomp.chain.total_weight,
        side: GapSide::NotApplicable,
        path_meta: None,
    })
}

fn chain_parity_at(g: &DecodingGraph, chain: &ErrorChain, node: u32) -> bool {
    let mut p = false;
    for &k in &chain.edges {
        let e = &g.edges[k as usize];
        if e.u == node || e.v == node {
            p = !p;
        }
    }
    p
}

/// Where a modified-window edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOrigin {
    /// Window edge, by local window edge id.
    Window(u32),
    /// Pendant edge replacing an occupied buffer-boundary edge at this bulk
    /// node.
    Pendant(u32),
    /// Direct defect-to-virtual edge added by the path-selected rules.
    Direct(u32),
}

/// A window after buffer-boundary closure (and, for the path-selected gap,
/// penalty adjustment).
pub struct ModifiedWindow {
    pub graph: DecodingGraph,
    pub csr: Csr,
    pub labels: SyndromeLabels,
    pub origin: Vec<EdgeOrigin>,
    pub pendant_count: usize,
}

impl ModifiedWindow {
    pub fn rebuild_csr(&mut self) {
        self.csr = Csr::from_graph(&self.graph);
    }
}

/// Remove every buffer-boundary edge; an edge carrying the minimum-weight
/// error is replaced by a pendant defect of the same weight at its bulk
/// endpoint.
pub fn close_buffer_boundary(
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &ErrorChain,
) -> ModifiedWindow {
    let is_buf = |n: u32| -> bool {
        Some(n) == geo.boundary.buf_left || Some(n) == geo.boundary.buf_right
    };
    let mut nodes: Vec<Node> = geo.graph.nodes.clone();
    let mut new_labels: Vec<Label> = labels.labels.clone();
    let mut edges: Vec<Edge> = Vec::with_capacity(geo.graph.num_edges());
    let mut origin: Vec<EdgeOrigin> = Vec::with_capacity(geo.graph.num_edges());
    let mut pendant_count = 0;
    for (k, e) in geo.graph.edges.iter().enumerate() {
        let bu = is_buf(e.u);
        let bv = is_buf(e.v);
        if !bu && !bv {
            edges.push(e.clone());
            origin.push(EdgeOrigin::Window(k as u32));
            continue;
        }
        if emin.contains(k as u32) {
            let bulk = if bu { e.v } else { e.u };
            let pendant = nodes.len() as u32;
            nodes.push(Node::boundary(BoundaryClass::Auxiliary));
            new_labels.push(Label::One);
            edges.push(Edge {
                u: bulk,
                v: pendant,
                weight: e.weight,
                iweight: e.iweight,
                prob: e.prob,
                flips_observable: false,
            });
            origin.push(EdgeOrigin::Pendant(bulk));
            pendant_count += 1;
        }
    }
    // adjacency is never consulted on modified windows; the decoder works
    // from the CSR alone
    let graph = DecodingGraph {
        nodes,
        edges,
        rounds: geo.graph.rounds,
        code_distance: geo.graph.code_distance,
        coord_dims: geo.graph.coord_dims,
        ..Default::default()
    };
    let csr = Csr::from_graph(&graph);
    ModifiedWindow {
        graph,
        csr,
        labels: SyndromeLabels { labels: new_labels },
        origin,
        pendant_count,
    }
}

/// Intermediates kept for the distance-shifted refinement.
pub struct StcgDetail {
    pub modified: ModifiedWindow,
    pub alt: Decoded,
    pub emin_virtual_parity: bool,
}

/// Spatiotemporal complementary gap: close the buffer boundary, flip the
/// virtual-boundary parity relative to the minimum-weight error, re-decode.
pub fn stcg(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
) -> Result<(GapResult, StcgDetail)> {
    let Some(virt) = geo.boundary.virt else {
        return Err(Error::Refusal(
            "gap undefined: window has no virtual boundary".into(),
        ));
    };
    let mut modified = close_buffer_boundary(geo, labels, &emin.chain);
    let parity = chain_parity_at(&geo.graph, &emin.chain, virt);
    modified
        .labels
        .set(virt, if parity { Label::Zero } else { Label::One });
    let alt = matcher.decode(&modified.graph, &modified.csr, &modified.labels, None)?;
    // pendant edges are forced into every feasible solution, so both
    // weights include them and the difference is the pure gap
    let value_int = alt.chain.iweight - emin.chain.iweight;
    Ok((
        GapResult {
            kind: GapKind::Stcg,
            value: weight_to_f64(value_int),
            value_int,
            w_min: emin.chain.total_weight,
            w_alt: alt.chain.total_weight,
            side: GapSide::NotApplicable,
            path_meta: None,
        },
        StcgDetail {
            modified,
            alt,
            emin_virtual_parity: parity,
        },
    ))
}

/// Distance-shifted STCG: the STCG plus the minimum extra weight a future
/// window needs before the committed mistake turns into a logical error,
/// estimated from the exit point of the alternative chain.
pub fn ds_stcg(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    dist: &DistanceMaps,
    mode: PenaltyMode,
) -> Result<GapResult> {
    let (base, detail) = stcg(matcher, geo, labels, emin)?;
    ds_refine(geo, emin, &base, &detail, dist, mode)
}

/// Distance-shifted refinement of an already computed STCG.
pub fn ds_refine(
    geo: &WindowGeometry,
    emin: &Decoded,
    base: &GapResult,
    detail: &StcgDetail,
    dist: &DistanceMaps,
    mode: PenaltyMode,
) -> Result<GapResult> {
    let virt = geo.boundary.virt.expect("checked by stcg");

    // Symmetric difference of the two chains over window plus pendant nodes.
    let mut count: HashMap<(u32, u32, EdgeOrigin), u32> = HashMap::new();
    let push = |u: u32, v: u32, o: EdgeOrigin, count: &mut HashMap<_, u32>| {
        *count.entry((u.min(v), u.max(v), o)).or_insert(0) += 1;
    };
    for &k in &emin.chain.edges {
        let e = &geo.graph.edges[k as usize];
        push(e.u, e.v, EdgeOrigin::Window(k), &mut count);
    }
    for &k in &detail.alt.chain.edges {
        let e = &detail.modified.graph.edges[k as usize];
        push(e.u, e.v, detail.modified.origin[k as usize], &mut count);
    }
    let mut adj: HashMap<u32, Vec<(u32, EdgeOrigin)>> = HashMap::new();
    for (&(u, v, o), &c) in &count {
        if c % 2 == 1 {
            adj.entry(u).or_default().push((v, o));
            adj.entry(v).or_default().push((u, o));
        }
    }
    // component containing the virtual node
    let mut seen: HashMap<u32, bool> = HashMap::new();
    let mut stack = vec![virt];
    seen.insert(virt, true);
    let mut component_nodes: Vec<u32> = Vec::new();
    while let Some(n) = stack.pop() {
        component_nodes.push(n);
        if let Some(nb) = adj.get(&n) {
            for &(m, _) in nb {
                if seen.insert(m, true).is_none() {
                    stack.push(m);
                }
            }
        }
    }
    let degree = |n: u32| adj.get(&n).map_or(0, |v| v.len());
    if degree(virt) % 2 != 1 {
        return Err(Error::Internal(
            "alternative chain does not change the virtual-boundary parity".into(),
        ));
    }
    // v0 candidates: global endpoints of the component's virtual edges
    let mut exits: Vec<u32> = Vec::new();
    for &(m, o) in adj.get(&virt).into_iter().flatten() {
        let _ = m;
        if let EdgeOrigin::Window(k) = o {
            let v0 = geo.virtual_v0[k as usize];
            if v0 != crate::window::NO_NODE {
                exits.push(v0);
            }
        }
    }
    if exits.is_empty() {
        return Err(Error::Internal("no virtual exit edge on the path".into()));
    }
    // u0: odd-degree commit boundary node in the component
    let mut sides: Vec<GapSide> = Vec::new();
    if let Some(cl) = geo.boundary.com_left {
        if component_nodes.contains(&cl) && degree(cl) % 2 == 1 {
            sides.push(GapSide::Left);
        }
    }
    if let Some(cr) = geo.boundary.com_right {
        if component_nodes.contains(&cr) && degree(cr) % 2 == 1 {
            sides.push(GapSide::Right);
        }
    }
    if sides.is_empty() {
        // degenerate topology: no unique commit endpoint; take the most
        // conservative reading over both sides
        sides.extend([GapSide::Left, GapSide::Right]);
    }
    let mut best: Option<(i64, u32, GapSide)> = None;
    for &side in &sides {
        for &v0 in &exits {
            let pen = virtual_exit_penalty(
                mode,
                side,
                dist.d_left[v0 as usize],
                dist.d_right[v0 as usize],
            );
            if best.map_or(true, |(bp, _, _)| pen < bp) {
                best = Some((pen, v0, side));
            }
        }
    }
    let (penalty, exit_node, side) = best.expect("nonempty candidates");
    let value_int = base.value_int + penalty;
    Ok(GapResult {
        kind: GapKind::DsStcg,
        value: weight_to_f64(value_int),
        value_int,
        w_min: base.w_min,
        w_alt: base.w_alt,
        side,
        path_meta: Some(PathMeta {
            exit_node,
            penalty_int: penalty,
        }),
    })
}

/// Path-selected STCG from one commit boundary: penalize alternative chains
/// by their virtual-exit t_min inside the re-decode itself, so the search
/// minimizes weight plus penalty jointly.
pub fn ps_stcg_side(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    dist: &DistanceMaps,
    mode: PenaltyMode,
    side: GapSide,
) -> Result<Option<GapResult>> {
    Ok(ps_stcg_side_detailed(matcher, geo, labels, emin, dist, mode, side)?.map(|(g, _)| g))
}

/// As `ps_stcg_side`, also returning the penalty-modified window so callers
/// can cross-check the re-decode independently.
#[allow(clippy::too_many_arguments)]
pub fn ps_stcg_side_detailed(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    dist: &DistanceMaps,
    mode: PenaltyMode,
    side: GapSide,
) -> Result<Option<(GapResult, ModifiedWindow)>> {
    let Some(virt) = geo.boundary.virt else {
        return Err(Error::Refusal(
            "gap undefined: window has no virtual boundary".into(),
        ));
    };
    let com = match side {
        GapSide::Right => geo.boundary.com_right,
        GapSide::Left => geo.boundary.com_left,
        _ => return Err(Error::Domain("side must be left or right".into())),
    };
    let Some(com) = com else {
        return Ok(None);
    };
    let mut modified = close_buffer_boundary(geo, labels, &emin.chain);

    // penalty on every virtual-boundary edge, keyed to the global node the
    // virtual node replaced
    for k in 0..modified.graph.edges.len() {
        let e = &modified.graph.edges[k];
        if e.u != virt && e.v != virt {
            continue;
        }
        let EdgeOrigin::Window(wk) = modified.origin[k] else {
            continue;
        };
        let v0 = geo.virtual_v0[wk as usize];
        if v0 == crate::window::NO_NODE {
            continue;
        }
        let pen = virtual_exit_penalty(mode, side, dist.d_left[v0 as usize], dist.d_right[v0 as usize]);
        modified.graph.edges[k].iweight += pen;
        modified.graph.edges[k].weight += weight_to_f64(pen);
    }
    // defects matched to the virtual boundary: penalize their incident
    // edges and compensate with a direct edge when the penalty is positive
    let mut matched_defects: Vec<u32> = emin
        .pairing
        .iter()
        .filter_map(|p| match *p {
            MatchPair::Boundary(u, t) if t == virt => Some(u),
            _ => None,
        })
        .collect();
    matched_defects.sort_unstable();
    for &u in &matched_defects {
        let gu = geo.node_map[u as usize];
        let pen = virtual_exit_penalty(mode, side, dist.d_left[gu as usize], dist.d_right[gu as usize]);
        if pen == 0 {
            continue;
        }
        for k in 0..modified.graph.edges.len() {
            let e = &modified.graph.edges[k];
            if e.u == u || e.v == u {
                modified.graph.edges[k].iweight += pen;
                modified.graph.edges[k].weight += weight_to_f64(pen);
            }
        }
        let s_direct = geo.dist_to_virtual[u as usize];
        modified.graph.edges.push(Edge {
            u,
            v: virt,
            weight: weight_to_f64(s_direct),
            iweight: s_direct,
            prob: 0.25,
            flips_observable: false,
        });
        modified.origin.push(EdgeOrigin::Direct(u));
    }
    modified.rebuild_csr();
    let parity = chain_parity_at(&geo.graph, &emin.chain, com);
    modified
        .labels
        .set(com, if parity { Label::Zero } else { Label::One });
    let alt = matcher.decode(&modified.graph, &modified.csr, &modified.labels, None)?;
    let value_int = alt.chain.iweight - emin.chain.iweight;
    Ok(Some((
        GapResult {
            kind: GapKind::PsStcg,
            value: weight_to_f64(value_int),
            value_int,
            w_min: emin.chain.total_weight,
            w_alt: alt.chain.total_weight,
            side,
            path_meta: None,
        },
        modified,
    )))
}

/// Path-selected STCG: the smaller of the two per-side computations.
pub fn ps_stcg(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    dist: &DistanceMaps,
    mode: PenaltyMode,
) -> Result<GapResult> {
    let right = ps_stcg_side(matcher, geo, labels, emin, dist, mode, GapSide::Right)?;
    let left = ps_stcg_side(matcher, geo, labels, emin, dist, mode, GapSide::Left)?;
    match (right, left) {
        (Some(r), Some(l)) => Ok(if r.value_int <= l.value_int { r } else { l }),
        (Some(r), None) => Ok(r),
        (None, Some(l)) => Ok(l),
        (None, None) => Err(Error::Refusal(
            "window has no commit boundary on either side".into(),
        )),
    }
}

/// Path-selected STCG on a parallel stage-1 window whose two temporal faces
/// share a single virtual node. Two matcher calls, one per commit side; the
/// per-edge penalties key off each face's own global exit node.
pub fn ps_stcg_merged(
    matcher: &mut Matcher,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    dist: &DistanceMaps,
    mode: PenaltyMode,
) -> Result<GapResult> {
    let mut out = ps_stcg(matcher, geo, labels, emin, dist, mode)?;
    if geo.spec.past_virtual && geo.spec.future_virtual {
        out.side = GapSide::Merged;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_repetition_graph, compute_boundary_distances, WEIGHT_UNIT};
    use crate::window::{build_window_geometry, window_labels, DecodeEnv, WindowSpec};

    fn sliding_spec(start: u32, r_com: u32, r_buf: u32, total: u32) -> WindowSpec {
        let c_end = (start + r_com).min(total);
        let w_end = (c_end + r_buf).min(total);
        WindowSpec {
            w_start: start,
            w_end,
            c_start: start,
            c_end,
            past_virtual: false,
            future_virtual: w_end < total,
        }
    }

    fn empty_sigma(g: &DecodingGraph) -> SyndromeLabels {
        let mut l = SyndromeLabels::all_zero(g.num_nodes());
        l.set(g.boundary_left.unwrap(), Label::Free);
        l.set(g.boundary_right.unwrap(), Label::Free);
        l
    }

    #[test]
    fn complementary_gap_of_empty_syndrome_is_the_crossing_distance() {
        let g = build_repetition_graph(5, 3, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, true);
        let sigma = empty_sigma(&g);
        let gap = complementary_gap(
            &mut env.matcher,
            &g,
            &env.csr,
            env.apsp.as_deref(),
            &sigma,
        )
        .unwrap();
        assert_eq!(gap.value_int, 5 * WEIGHT_UNIT);
        assert_eq!(gap.value, 5.0);
        assert_eq!(gap.w_min, 0.0);
    }

    #[test]
    fn stcg_of_empty_syndrome() {
        // chain: virtual edge + r_buf temporal edges + commit-boundary edge
        for (r_buf, want) in [(2u32, 4i64), (3, 5)] {
            let g = build_repetition_graph(5, 25, 0.05, true).unwrap();
            let mut env = DecodeEnv::new(&g, false);
            let sigma = empty_sigma(&g);
            let spec = sliding_spec(0, 2, r_buf, g.rounds);
            let geo = build_window_geometry(&g, spec).unwrap();
            let labels = window_labels(&geo, &sigma);
            let emin = env.decode_window(&geo, &labels).unwrap();
            let (gap, _) = stcg(&mut env.matcher, &geo, &labels, &emin).unwrap();
            assert_eq!(gap.value_int, want * WEIGHT_UNIT, "r_buf={r_buf}");
            assert_eq!(gap.w_min, 0.0);
        }
    }

    #[test]
    fn stcg_refuses_terminal_window() {
        let g = build_repetition_graph(5, 4, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = empty_sigma(&g);
        let spec = sliding_spec(0, 4, 0, g.rounds);
        let geo = build_window_geometry(&g, spec).unwrap();
        let labels = window_labels(&geo, &sigma);
        let emin = env.decode_window(&geo, &labels).unwrap();
        assert!(matches!(
            stcg(&mut env.matcher, &geo, &labels, &emin),
            Err(Error::Refusal(_))
        ));
    }

    #[test]
    fn close_buffer_keeps_minimum_weight() {
        // a defect near the buffer boundary is matched through it; closing
        // must keep the optimal weight
        let g = build_repetition_graph(5, 25, 0.05, true).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let mut sigma = empty_sigma(&g);
        // round 2 (buffer), column 0: nearest to the left buffer boundary
        let defect = 2 * 4;
        sigma.set(defect, Label::One);
        let spec = sliding_spec(0, 2, 2, g.rounds);
        let geo = build_window_geometry(&g, spec).unwrap();
        let labels = window_labels(&geo, &sigma);
        let emin = env.decode_window(&geo, &labels).unwrap();
        assert_eq!(emin.chain.iweight, WEIGHT_UNIT);
        let modified = close_buffer_boundary(&geo, &labels, &emin.chain);
        assert_eq!(modified.pendant_count, 1);
        let again = env
            .matcher
            .decode(&modified.graph, &modified.csr, &modified.labels, None)
            .unwrap();
        assert_eq!(again.chain.iweight, emin.chain.iweight);
        // no buffer-boundary edges remain
        for e in &modified.graph.edges {
            for n in [e.u, e.v] {
                assert_ne!(Some(n), geo.boundary.buf_left);
                assert_ne!(Some(n), geo.boundary.buf_right);
            }
        }
    }

    #[test]
    fn close_buffer_pure_deletion_when_unused() {
        let g = build_repetition_graph(5, 25, 0.05, true).unwrap();
        let env = DecodeEnv::new(&g, false);
        let _ = env;
        let sigma = empty_sigma(&g);
        let spec = sliding_spec(0, 2, 2, g.rounds);
        let geo = build_window_geometry(&g, spec).unwrap();
        let labels = window_labels(&geo, &sigma);
        let modified = close_buffer_boundary(&geo, &labels, &ErrorChain::default());
        assert_eq!(modified.pendant_count, 0);
        let removed = geo.graph.num_edges() - modified.graph.num_edges();
        // two buffer rounds, two sides, one edge per round and side
        assert_eq!(removed, 4);
    }

    #[test]
    fn penalty_formulas() {
        // ceil form: d=13, s = 3 -> max(7 - 3, 0) = 4
        let pen = virtual_exit_penalty(
            PenaltyMode::CeilHalfD(13),
            GapSide::Right,
            10 * WEIGHT_UNIT,
            3 * WEIGHT_UNIT,
        );
        assert_eq!(pen, 4 * WEIGHT_UNIT);
        // half-difference form on the same distances: (10-3)/2 = 3.5
        let pen = virtual_exit_penalty(
            PenaltyMode::HalfDifference,
            GapSide::Right,
            10 * WEIGHT_UNIT,
            3 * WEIGHT_UNIT,
        );
        assert_eq!(pen, 7 * WEIGHT_UNIT / 2);
        // equidistant exit point carries no penalty
        let pen = virtual_exit_penalty(
            PenaltyMode::HalfDifference,
            GapSide::Right,
            5 * WEIGHT_UNIT,
            5 * WEIGHT_UNIT,
        );
        assert_eq!(pen, 0);
        // left side mirrors
        let pen = virtual_exit_penalty(
            PenaltyMode::CeilHalfD(13),
            GapSide::Left,
            3 * WEIGHT_UNIT,
            10 * WEIGHT_UNIT,
        );
        assert_eq!(pen, 4 * WEIGHT_UNIT);
    }

    #[test]
    fn ds_stcg_empty_syndrome_exhaustive() {
        // E_alt exits at a boundary-adjacent column (cheapest w_alt); the
        // penalty of that exit applies on top of the plain gap
        for d in [5u32, 7] {
            let g = build_repetition_graph(d, 25, 0.05, true).unwrap();
            let dist = compute_boundary_distances(&g).unwrap();
            let mut env = DecodeEnv::new(&g, false);
            let sigma = empty_sigma(&g);
            let r_com = 2;
            let r_buf = 2;
            let spec = sliding_spec(0, r_com, r_buf, g.rounds);
            let geo = build_window_geometry(&g, spec).unwrap();
            let labels = window_labels(&geo, &sigma);
            let emin = env.decode_window(&geo, &labels).unwrap();
            let gap = ds_stcg(
                &mut env.matcher,
                &geo,
                &labels,
                &emin,
                &dist,
                PenaltyMode::CeilHalfD(d),
            )
            .unwrap();
            // exhaustive oracle: all exits have w_alt = r_buf + 2, and the
            // optimal exits sit next to a boundary where s = 1
            let stcg_val = (r_buf + 2) as i64 * WEIGHT_UNIT;
            let pen = ((d as i64 + 1) / 2 - 1) * WEIGHT_UNIT;
            assert_eq!(gap.value_int, stcg_val + pen, "d={d}");
            assert!(gap.value_int >= stcg_val);
            let meta = gap.path_meta.unwrap();
            assert_eq!(meta.penalty_int, pen);
        }
    }

    #[test]
    fn ps_stcg_empty_syndrome_exhaustive() {
        // oracle: min over (crossing chain of weight d) and (exit chains of
        // weight 1 + climb + 1 + penalty at the exit column)
        for (d, r_com, r_buf) in [(5u32, 2u32, 2u32), (7, 3, 2), (7, 3, 3)] {
            let g = build_repetition_graph(d, 35, 0.05, true).unwrap();
            let dist = compute_boundary_distances(&g).unwrap();
            let mut env = DecodeEnv::new(&g, false);
            let sigma = empty_sigma(&g);
            let spec = sliding_spec(0, r_com, r_buf, g.rounds);
            let geo = build_window_geometry(&g, spec).unwrap();
            let labels = window_labels(&geo, &sigma);
            let emin = env.decode_window(&geo, &labels).unwrap();
            let gap = ps_stcg(
                &mut env.matcher,
                &geo,
                &labels,
                &emin,
                &dist,
                PenaltyMode::CeilHalfD(d),
            )
            .unwrap();
            // exhaustive oracle over the right side (left is symmetric):
            // start at v_com_R, enter at column x of the top commit round
            // (cost 1 + (d-2-x) horizontal from the right edge... walk all
            // columns), climb r_buf rounds, pay the exit penalty; or cross.
            let cols = d - 1;
            let mut best = d as i64 * WEIGHT_UNIT; // crossing
            for x in 0..cols {
                let enter = (cols - 1 - x) as i64 + 1; // boundary edge + horizontal steps
                let climb = r_buf as i64;
                // right-side rule: near distance is the exit's distance to
                // the right boundary
                let d_right = (cols - x) as i64;
                let pen = (((d as i64 + 1) / 2) - d_right).max(0);
                let total = (enter + climb + 1 + pen) * WEIGHT_UNIT;
                best = best.min(total);
            }
            assert_eq!(gap.value_int, best, "d={d} r_com={r_com} r_buf={r_buf}");
            assert!(gap.value_int >= 0);
        }
    }

    #[test]
    fn gaps_are_nonnegative_on_random_shots() {
        let mut state = 0x5eed5eed5eedu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let d = 5;
        let g = build_repetition_graph(d, 20, 0.05, true).unwrap();
        let dist = compute_boundary_distances(&g).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        for _ in 0..40 {
            let mut sigma = empty_sigma(&g);
            for e in &g.edges {
                if next() % 100 < 10 {
                    for end in [e.u, e.v] {
                        if !g.nodes[end as usize].kind.is_boundary() {
                            sigma.toggle(end);
                        }
                    }
                }
            }
            let spec = sliding_spec(0, 2, 2, g.rounds);
            let geo = build_window_geometry(&g, spec).unwrap();
            let labels = window_labels(&geo, &sigma);
            let emin = env.decode_window(&geo, &labels).unwrap();
            let (s, _) = stcg(&mut env.matcher, &geo, &labels, &emin).unwrap();
            assert!(s.value_int >= 0);
            let dsv = ds_stcg(
                &mut env.matcher,
                &geo,
                &labels,
                &emin,
                &dist,
                PenaltyMode::CeilHalfD(d),
            )
            .unwrap();
            assert!(dsv.value_int >= s.value_int, "ds >= stcg");
            let ps = ps_stcg(
                &mut env.matcher,
                &geo,
                &labels,
                &emin,
                &dist,
                PenaltyMode::CeilHalfD(d),
            )
            .unwrap();
            assert!(ps.value_int >= 0);
            // unit weights: gaps are integers or half integers
            assert_eq!(s.value_int % (WEIGHT_UNIT / 2), 0);
            assert_eq!(dsv.value_int % (WEIGHT_UNIT / 2), 0);
            assert_eq!(ps.value_int % (WEIGHT_UNIT / 2), 0);
            // the global complementary gap exists and is nonnegative too
            let cg = complementary_gap(&mut env.matcher, &g, &env.csr, env.apsp.as_deref(), &sigma)
                .unwrap();
            assert!(cg.value_int >= 0);
        }
    }

    #[test]
    fn merged_gap_on_two_faced_window() {
        let d = 5;
        let g = build_repetition_graph(d, 30, 0.05, true).unwrap();
        let dist = compute_boundary_distances(&g).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = empty_sigma(&g);
        // interior stage-1 window: commit [10, 13), buffers on both faces
        let spec = WindowSpec {
            w_start: 8,
            w_end: 15,
            c_start: 10,
            c_end: 13,
            past_virtual: true,
            future_virtual: true,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        let labels = window_labels(&geo, &sigma);
        let emin = env.decode_window(&geo, &labels).unwrap();
        let merged = ps_stcg_merged(
            &mut env.matcher,
            &geo,
            &labels,
            &emin,
            &dist,
            PenaltyMode::CeilHalfD(d),
        )
        .unwrap();
        assert_eq!(merged.side, GapSide::Merged);
        // oracle: single-face windows with the same commit extent
        let mut face_vals = Vec::new();
        for (pv, fv, w_start, w_end) in [(false, true, 10u32, 15u32), (true, false, 8, 13)] {
            let spec1 = WindowSpec {
                w_start,
                w_end,
                c_start: 10,
                c_end: 13,
                past_virtual: pv,
                future_virtual: fv,
            };
            let geo1 = build_window_geometry(&g, spec1).unwrap();
            let labels1 = window_labels(&geo1, &sigma);
            let emin1 = env.decode_window(&geo1, &labels1).unwrap();
            let gap1 = ps_stcg(
                &mut env.matcher,
                &geo1,
                &labels1,
                &emin1,
                &dist,
                PenaltyMode::CeilHalfD(d),
            )
            .unwrap();
            face_vals.push(gap1.value_int);
        }
        // empty syndrome: the merged window takes the better face
        assert_eq!(merged.value_int, *face_vals.iter().min().unwrap());
    }

    #[test]
    fn merged_reduces_to_plain_at_graph_start() {
        let d = 5;
        let g = build_repetition_graph(d, 30, 0.05, true).unwrap();
        let dist = compute_boundary_distances(&g).unwrap();
        let mut env = DecodeEnv::new(&g, false);
        let sigma = empty_sigma(&g);
        let spec = WindowSpec {
            w_start: 0,
            w_end: 5,
            c_start: 0,
            c_end: 3,
            past_virtual: false,
            future_virtual: true,
        };
        let geo = build_window_geometry(&g, spec).unwrap();
        let labels = window_labels(&geo, &sigma);
        let emin = env.decode_window(&geo, &labels).unwrap();
        let merged = ps_stcg_merged(
            &mut env.matcher,
            &geo,
            &labels,
            &emin,
            &dist,
            PenaltyMode::CeilHalfD(d),
        )
        .unwrap();
        let plain = ps_stcg(
            &mut env.matcher,
            &geo,
            &labels,
            &emin,
            &dist,
            PenaltyMode::CeilHalfD(d),
        )
        .unwrap();
        assert_eq!(merged.value_int, plain.value_int);
        assert_ne!(merged.side, GapSide::Merged);
    }
}
