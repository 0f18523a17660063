//! Exact minimum-weight decoding under the ternary label convention.
//!
//! A node label is 0 (even parity required), 1 (odd parity required) or
//! free (either parity accepted; the boundary-node condition). Decoding
//! finds the minimum-weight edge set whose per-node parities satisfy the
//! labels: the classic T-join problem with free vertices, solved by
//! reducing defect pairs to a perfect matching over shortest-path
//! distances.

use crate::blossom::BlossomSolver;
use crate::dijkstra::{Apsp, Csr, DijkstraScratch};
use crate::error::{Error, Result};
use crate::graph::DecodingGraph;

/// Ternary per-node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Zero,
    One,
    Free,
}

/// Per-node syndrome assignment. `Free` marks nodes treated as boundaries.
#[derive(Debug, Clone)]
pub struct SyndromeLabels {
    pub labels: Vec<Label>,
}

impl SyndromeLabels {
    pub fn all_zero(n: usize) -> Self {
        SyndromeLabels {
            labels: vec![Label::Zero; n],
        }
    }

    pub fn set(&mut self, v: u32, l: Label) {
        self.labels[v as usize] = l;
    }

    pub fn get(&self, v: u32) -> Label {
        self.labels[v as usize]
    }

    pub fn toggle(&mut self, v: u32) {
        self.labels[v as usize] = match self.labels[v as usize] {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
            Label::Free => Label::Free,
        };
    }

    /// Flip for complementary decoding: 0 and 1 swap, free becomes 1.
    pub fn parity_flip(&mut self, v: u32) {
        self.labels[v as usize] = match self.labels[v as usize] {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
            Label::Free => Label::One,
        };
    }

    pub fn defects(&self) -> impl Iterator<Item = u32> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Label::One)
            .map(|(v, _)| v as u32)
    }
}

/// An edge subset with its total weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorChain {
    /// Sorted edge ids.
    pub edges: Vec<u32>,
    pub total_weight: f64,
    pub iweight: i64,
}

impl ErrorChain {
    pub fn from_edges(g: &DecodingGraph, mut edges: Vec<u32>) -> Self {
        edges.sort_unstable();
        let total_weight = g.total_weight(&edges);
        let iweight = g.total_iweight(&edges);
        ErrorChain {
            edges,
            total_weight,
            iweight,
        }
    }

    pub fn contains(&self, edge: u32) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    /// Symmetric difference of two chains.
    pub fn xor(&self, g: &DecodingGraph, other: &ErrorChain) -> ErrorChain {
        let mut edges = Vec::with_capacity(self.edges.len() + other.edges.len());
        let (mut i, mut j) = (0, 0);
        while i < self.edges.len() || j < other.edges.len() {
            match (self.edges.get(i), other.edges.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    edges.push(a);
                    i += 1;
                }
                (Some(_), Some(&b)) => {
                    edges.push(b);
                    j += 1;
                }
                (Some(&a), None) => {
                    edges.push(a);
                    i += 1;
                }
                (None, Some(&b)) => {
                    edges.push(b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        ErrorChain::from_edges(g, edges)
    }
}

/// How a defect was matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPair {
    /// Two defects paired through a shortest path.
    Defects(u32, u32),
    /// Defect absorbed by a free node.
    Boundary(u32, u32),
}

#[derive(Debug, Clone, Default)]
pub struct Decoded {
    pub chain: ErrorChain,
    pub pairing: Vec<MatchPair>,
}

impl Decoded {
    /// The free node a defect was matched to, if any.
    pub fn boundary_partner(&self, defect: u32) -> Option<u32> {
        self.pairing.iter().find_map(|p| match *p {
            MatchPair::Boundary(d, t) if d == defect => Some(t),
            _ => None,
        })
    }
}

/// Reusable decoder state. One per worker thread.
pub struct Matcher {
    blossom: BlossomSolver,
    scratch: DijkstraScratch,
    // per-defect Dijkstra rows when no APSP is available
    dist_rows: Vec<Vec<i64>>,
    parent_rows: Vec<Vec<u32>>,
    bdist: Vec<i64>,
    bparent: Vec<u32>,
    in_set: Vec<u64>,
    medges: Vec<(u32, u32, i64)>,
}

impl Default for Matcher {
    fn default() -> Self {
        Self::new()
    }
}

impl Matcher {
    pub fn new() -> Self {
        Matcher {
            blossom: BlossomSolver::new(),
            scratch: DijkstraScratch::new(),
            dist_rows: Vec::new(),
            parent_rows: Vec::new(),
            bdist: Vec::new(),
            bparent: Vec::new(),
            in_set: Vec::new(),
            medges: Vec::new(),
        }
    }

    /// Minimum-weight decoding. `apsp` may carry precomputed shortest paths
    /// for the same graph; otherwise per-defect searches are run.
    pub fn decode(
        &mut self,
        g: &DecodingGraph,
        csr: &Csr,
        labels: &SyndromeLabels,
        apsp: Option<&Apsp>,
    ) -> Result<Decoded> {
        debug_assert_eq!(labels.labels.len(), g.num_nodes());
        let defects: Vec<u32> = labels.defects().collect();
        if defects.is_empty() {
            return Ok(Decoded::default());
        }
        let targets: Vec<u32> = labels
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Label::Free)
            .map(|(v, _)| v as u32)
            .collect();
        if defects.len() % 2 == 1 && targets.is_empty() {
            return Err(Error::Infeasible(
                "odd number of defects with no free node".into(),
            ));
        }

        // Distance from every node to the nearest free node, used both for
        // boundary matches and to prune defect pairs: a pair farther apart
        // than the sum of its boundary distances never helps.
        let mut bdist = std::mem::take(&mut self.bdist);
        let mut bparent = std::mem::take(&mut self.bparent);
        if targets.is_empty() {
            bdist.clear();
            bparent.clear();
        } else {
            crate::dijkstra::dijkstra_into(
                csr,
                &targets,
                &mut self.scratch,
                i64::MAX,
                &mut bdist,
                &mut bparent,
            );
        }
        let k = defects.len();
        let radius = if targets.is_empty() {
            i64::MAX
        } else {
            let dmax = defects
                .iter()
                .map(|&d| bdist[d as usize])
                .max()
                .unwrap_or(i64::MAX);
            dmax // per-defect radius is own boundary distance + dmax
        };

        // Pairwise matching costs: the cheaper of the direct defect-defect
        // path and the two-boundary route. Pairing through the boundary
        // stands for both defects being absorbed there; leftover parity is
        // handled by a phantom vertex when the defect count is odd.
        let bcost = |v: u32| -> i64 {
            if targets.is_empty() {
                i64::MAX
            } else {
                bdist[v as usize]
            }
        };
        let direct = |rows: &[Vec<i64>], i: usize, j: usize| -> i64 {
            if let Some(apsp) = apsp {
                apsp.dist(defects[i], defects[j])
            } else {
                rows[i][defects[j] as usize]
            }
        };
        if apsp.is_none() {
            if self.dist_rows.len() < k {
                self.dist_rows.resize_with(k, Vec::new);
                self.parent_rows.resize_with(k, Vec::new);
            }
            for i in 0..k {
                let limit = if radius == i64::MAX {
                    i64::MAX
                } else {
                    bdist[defects[i] as usize].saturating_add(radius)
                };
                let (mut d, mut p) = (
                    std::mem::take(&mut self.dist_rows[i]),
                    std::mem::take(&mut self.parent_rows[i]),
                );
                crate::dijkstra::dijkstra_into(
                    csr,
                    &[defects[i]],
                    &mut self.scratch,
                    limit,
                    &mut d,
                    &mut p,
                );
                self.dist_rows[i] = d;
                self.parent_rows[i] = p;
            }
        }
        let phantom = k % 2 == 1;
        let nv = k + usize::from(phantom);
        let mut medges = std::mem::take(&mut self.medges);
        medges.clear();
        for i in 0..k {
            for j in (i + 1)..k {
                let d = direct(&self.dist_rows, i, j);
                let via_boundary =
                    bcost(defects[i]).saturating_add(bcost(defects[j]));
                let c = d.min(via_boundary);
                if c != i64::MAX {
                    medges.push((i as u32, j as u32, c));
                }
            }
        }
        if phantom {
            for i in 0..k {
                if bcost(defects[i]) != i64::MAX {
                    medges.push((i as u32, k as u32, bcost(defects[i])));
                }
            }
        }

        let mate = self.blossom.solve_min_perfect(nv, &medges);
        self.medges = medges;
        let mate = mate.ok_or_else(|| {
            Error::Infeasible("defect parity cannot be satisfied on this graph".into())
        })?;

        // Expand matched pairs back to edge sets, cancelling shared edges.
        let nwords = g.num_edges().div_ceil(64);
        let mut in_set = std::mem::take(&mut self.in_set);
        in_set.clear();
        in_set.resize(nwords, 0);
        let mut pairing = Vec::with_capacity(k);
        let mut path_buf: Vec<u32> = Vec::new();
        for i in 0..k {
            let m = mate[i];
            let boundary_pair: [Option<usize>; 2] = if m < k {
                if m <= i {
                    continue;
                }
                let d = direct(&self.dist_rows, i, m);
                if d < bcost(defects[i]).saturating_add(bcost(defects[m])) {
                    path_buf.clear();
                    self.defect_path(g, csr, apsp, &defects, i, m, &mut path_buf);
                    for &e in &path_buf {
                        in_set[e as usize / 64] ^= 1u64 << (e % 64);
                    }
                    pairing.push(MatchPair::Defects(defects[i], defects[m]));
                    continue;
                }
                [Some(i), Some(m)]
            } else {
                debug_assert!(phantom && m == k);
                [Some(i), None]
            };
            for b in boundary_pair.into_iter().flatten() {
                path_buf.clear();
                let target =
                    self.boundary_path(g, csr, &bdist, &bparent, defects[b], &mut path_buf);
                for &e in &path_buf {
                    in_set[e as usize / 64] ^= 1u64 << (e % 64);
                }
                pairing.push(MatchPair::Boundary(defects[b], target));
            }
        }
        self.in_set = in_set;
        self.bdist = bdist;
        self.bparent = bparent;
        let mut edges = Vec::new();
        for (w, &word) in self.in_set.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros();
                edges.push((w * 64) as u32 + b);
                bits &= bits - 1;
            }
        }
        let chain = ErrorChain::from_edges(g, edges);
        Ok(Decoded { chain, pairing })
    }

    fn defect_path(
        &self,
        g: &DecodingGraph,
        _csr: &Csr,
        apsp: Option<&Apsp>,
        defects: &[u32],
        i: usize,
        j: usize,
        out: &mut Vec<u32>,
    ) {
        if let Some(apsp) = apsp {
            apsp.path_into(g, defects[i], defects[j], out);
        } else {
            let parent = &self.parent_rows[i];
            let mut cur = defects[j];
            while cur != defects[i] {
                let k = parent[cur as usize];
                out.push(k);
                cur = g.edges[k as usize].other(cur);
            }
        }
    }

    /// Walk the multi-source boundary search tree from a defect back to the
    /// free node that rooted it.
    fn boundary_path(
        &self,
        g: &DecodingGraph,
        _csr: &Csr,
        bdist: &[i64],
        bparent: &[u32],
        defect: u32,
        out: &mut Vec<u32>,
    ) -> u32 {
        let mut cur = defect;
        while bdist[cur as usize] != 0 {
            let k = bparent[cur as usize];
            out.push(k);
            cur = g.edges[k as usize].other(cur);
        }
        cur
    }
}

/// Decode after flipping the given nodes: 0 and 1 swap, free becomes 1.
pub fn decode_with_parity_flip(
    matcher: &mut Matcher,
    g: &DecodingGraph,
    csr: &Csr,
    labels: &SyndromeLabels,
    apsp: Option<&Apsp>,
    flips: &[u32],
) -> Result<Decoded> {
    let mut flipped = labels.clone();
    for &v in flips {
        flipped.parity_flip(v);
    }
    matcher.decode(g, csr, &flipped, apsp)
}

const BRUTE_FORCE_EDGE_LIMIT: usize = 24;

/// Exhaustive minimum over all edge subsets satisfying the parity
/// constraints. Ties prefer the lexicographically smallest sorted edge-id
/// list. Guarded to small instances; this is the test oracle.
pub fn brute_force_decode(g: &DecodingGraph, labels: &SyndromeLabels) -> Result<ErrorChain> {
    let m = g.num_edges();
    if m > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::Refusal(format!(
            "brute force limited to {BRUTE_FORCE_EDGE_LIMIT} edges, graph has {m}"
        )));
    }
    let n = g.num_nodes();
    // parity[v]: current selected-edge parity; constrained[v]: label 0/1 target
    let mut violated = 0usize;
    let mut parity = vec![false; n];
    let mut target = vec![None; n];
    for (v, &l) in labels.labels.iter().enumerate() {
        match l {
            Label::Zero => target[v] = Some(false),
            Label::One => {
                target[v] = Some(true);
                violated += 1;
            }
            Label::Free => {}
        }
    }
    let mut best: Option<(i64, u32)> = None;
    let mut weight = 0i64;
    let mut mask = 0u32;
    if violated == 0 {
        best = Some((0, 0));
    }
    // Gray-code walk over all subsets; each step toggles one edge.
    for c in 1u64..(1u64 << m) {
        let k = c.trailing_zeros() as usize;
        let e = &g.edges[k];
        let bit = 1u32 << k;
        let added = mask & bit == 0;
        mask ^= bit;
        weight += if added { e.iweight } else { -e.iweight };
        for node in [e.u as usize, e.v as usize] {
            parity[node] = !parity[node];
            if let Some(t) = target[node] {
                if parity[node] == t {
                    violated -= 1;
                } else {
                    violated += 1;
                }
            }
        }
        if violated == 0 {
            let better = match best {
                None => true,
                Some((bw, bm)) => weight < bw || (weight == bw && lex_smaller(mask, bm)),
            };
            if better {
                best = Some((weight, mask));
            }
        }
    }
    let (_, bm) = best.ok_or_else(|| {
        Error::Infeasible("no edge subset satisfies the parity constraints".into())
    })?;
    let edges: Vec<u32> = (0..m as u32).filter(|&k| bm & (1 << k) != 0).collect();
    Ok(ErrorChain::from_edges(g, edges))
}

/// Sorted edge-id list lexicographic order on bit masks.
fn lex_smaller(a: u32, b: u32) -> bool {
    if a == b {
        return false;
    }
    let diff = a ^ b;
    let t = diff.trailing_zeros();
    if a & (1 << t) != 0 {
        // a owns the smallest differing id; a is smaller iff b still has
        // anything beyond the common prefix
        b >> t != 0
    } else {
        a >> t == 0
    }
}
