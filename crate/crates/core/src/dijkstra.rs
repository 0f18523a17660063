//! Shortest paths on decoding graphs.
//!
//! Neighbor order follows edge-id order and heap ties resolve on node index,
//! so path choices are identical across runs and platforms.

use crate::graph::DecodingGraph;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub const NO_EDGE: u32 = u32::MAX;

/// Compressed sparse row view of an undirected weighted graph.
#[derive(Debug, Clone, Default)]
pub struct Csr {
    pub n: usize,
    off: Vec<u32>,
    to: Vec<u32>,
    w: Vec<i64>,
    eid: Vec<u32>,
}

impl Csr {
    pub fn from_graph(g: &DecodingGraph) -> Csr {
        Csr::build(
            g.num_nodes(),
            g.edges
                .iter()
                .enumerate()
                .map(|(k, e)| (e.u, e.v, e.iweight, k as u32)),
        )
    }

    pub fn build(n: usize, edges: impl Iterator<Item = (u32, u32, i64, u32)> + Clone) -> Csr {
        let mut off = vec![0u32; n + 2];
        for (u, v, _, _) in edges.clone() {
            off[u as usize + 1] += 1;
            off[v as usize + 1] += 1;
        }
        for i in 0..=n {
            off[i + 1] += off[i];
        }
        let m = off[n] as usize;
        let mut to = vec![0u32; m];
        let mut w = vec![0i64; m];
        let mut eid = vec![0u32; m];
        let mut cursor = off.clone();
        for (u, v, wt, k) in edges {
            for (a, b) in [(u, v), (v, u)] {
                let c = cursor[a as usize] as usize;
                to[c] = b;
                w[c] = wt;
                eid[c] = k;
                cursor[a as usize] += 1;
            }
        }
        Csr { n, off, to, w, eid }
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, i64, u32)> + '_ {
        let a = self.off[v as usize] as usize;
        let b = self.off[v as usize + 1] as usize;
        (a..b).map(move |i| (self.to[i], self.w[i], self.eid[i]))
    }
}

#[derive(Default)]
pub struct DijkstraScratch {
    heap: BinaryHeap<Reverse<(i64, u32)>>,
}

impl DijkstraScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Multi-source Dijkstra. Returns per-node distance (i64::MAX when
/// unreached) and the incoming edge id along a shortest path (NO_EDGE at
/// sources and unreached nodes). Nodes farther than `limit` are left
/// unreached.
pub fn dijkstra(
    csr: &Csr,
    sources: &[u32],
    scratch: &mut DijkstraScratch,
    limit: i64,
) -> (Vec<i64>, Vec<u32>) {
    let mut dist = Vec::new();
    let mut parent = Vec::new();
    dijkstra_into(csr, sources, scratch, limit, &mut dist, &mut parent);
    (dist, parent)
}

/// As `dijkstra`, reusing caller-owned buffers.
pub fn dijkstra_into(
    csr: &Csr,
    sources: &[u32],
    scratch: &mut DijkstraScratch,
    limit: i64,
    dist: &mut Vec<i64>,
    parent: &mut Vec<u32>,
) {
    dist.clear();
    dist.resize(csr.n, i64::MAX);
    parent.clear();
    parent.resize(csr.n, NO_EDGE);
    scratch.heap.clear();
    for &s in sources {
        dist[s as usize] = 0;
        scratch.heap.push(Reverse((0, s)));
    }
    while let Some(Reverse((d, v))) = scratch.heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for (u, w, k) in csr.neighbors(v) {
            let nd = d + w;
            if nd < dist[u as usize] && nd <= limit {
                dist[u as usize] = nd;
                parent[u as usize] = k;
                scratch.heap.push(Reverse((nd, u)));
            }
        }
    }
}

/// All-pairs shortest paths, one row per source node.
pub struct Apsp {
    pub n: usize,
    dist: Vec<i64>,
    parent: Vec<u32>,
}

impl Apsp {
    pub fn build(csr: &Csr) -> Apsp {
        let mut scratch = DijkstraScratch::new();
        let mut dist = Vec::with_capacity(csr.n * csr.n);
        let mut parent = Vec::with_capacity(csr.n * csr.n);
        for s in 0..csr.n as u32 {
            let (d, p) = dijkstra(csr, &[s], &mut scratch, i64::MAX);
            dist.extend_from_slice(&d);
            parent.extend_from_slice(&p);
        }
        Apsp {
            n: csr.n,
            dist,
            parent,
        }
    }

    #[inline]
    pub fn dist(&self, a: u32, b: u32) -> i64 {
        self.dist[a as usize * self.n + b as usize]
    }

    /// Edge ids of a shortest path from `a` to `b` (appended to `out`).
    pub fn path_into(&self, g: &DecodingGraph, a: u32, b: u32, out: &mut Vec<u32>) {
        let row = a as usize * self.n;
        let mut cur = b;
        while cur != a {
            let k = self.parent[row + cur as usize];
            debug_assert_ne!(k, NO_EDGE, "no path from {a} to {b}");
            out.push(k);
            cur = g.edges[k as usize].other(cur);
        }
    }
}
