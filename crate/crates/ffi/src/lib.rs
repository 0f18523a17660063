//! C ABI for the window-decoding toolkit: opaque graph handles, status
//! codes, and flat buffers, so the decoder and its gap computations can be
//! driven from other languages.
//!
//! Conventions: every fallible call returns a `GapwinStatus`; outputs go
//! through out-pointers. Labels are one byte per node: 0, 1, or 2 for a
//! free (boundary) node. `gapwin_last_error` returns a thread-local message
//! for the most recent failure on the calling thread.

use gapwin::dijkstra::Csr;
use gapwin::error::Error;
use gapwin::gaps::{GapKind, PenaltyMode};
use gapwin::graph::{
    build_repetition_graph, build_surface_graph_phenomenological, compute_boundary_distances,
    DecodingGraph, DistanceMaps,
};
use gapwin::matcher::{Label, Matcher, SyndromeLabels};
use gapwin::window::DecodeEnv;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapwinStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    Infeasible = 3,
    BufferTooSmall = 4,
    IoError = 5,
    InternalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn status_of(e: &Error) -> GapwinStatus {
    match e {
        Error::Domain(_) | Error::Config(_) => GapwinStatus::InvalidArgument,
        Error::Parse { .. } | Error::Validation(_) => GapwinStatus::ParseError,
        Error::Infeasible(_) => GapwinStatus::Infeasible,
        Error::Io(_) => GapwinStatus::IoError,
        Error::Refusal(_) | Error::Internal(_) => GapwinStatus::InternalError,
    }
}

/// Opaque decoding-graph handle.
pub struct GapwinGraph {
    graph: DecodingGraph,
    csr: Csr,
    dist: DistanceMaps,
    mode: PenaltyMode,
}

impl GapwinGraph {
    fn new(graph: DecodingGraph) -> Result<Self, Error> {
        let dist = compute_boundary_distances(&graph)?;
        let csr = Csr::from_graph(&graph);
        let mode = match graph.code_distance {
            Some(d) if graph.edges.iter().all(|e| e.weight == 1.0) => PenaltyMode::CeilHalfD(d),
            _ => PenaltyMode::HalfDifference,
        };
        Ok(GapwinGraph {
            graph,
            csr,
            dist,
            mode,
        })
    }
}

fn graph_out(
    result: Result<DecodingGraph, Error>,
    out: *mut *mut GapwinGraph,
) -> GapwinStatus {
    if out.is_null() {
        set_error("null output pointer");
        return GapwinStatus::InvalidArgument;
    }
    match result.and_then(GapwinGraph::new) {
        Ok(g) => {
            unsafe { *out = Box::into_raw(Box::new(g)) };
            GapwinStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            unsafe { *out = ptr::null_mut() };
            status_of(&e)
        }
    }
}

/// Library version string. Static storage; do not free.
#[no_mangle]
pub extern "C" fn gapwin_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr() as *const c_char
}

/// Message for the most recent error on this thread. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn gapwin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a repetition-code decoding graph under phenomenological noise.
#[no_mangle]
pub extern "C" fn gapwin_graph_repetition(
    distance: u32,
    rounds: u32,
    p: f64,
    unit_weights: bool,
    out: *mut *mut GapwinGraph,
) -> GapwinStatus {
    graph_out(build_repetition_graph(distance, rounds, p, unit_weights), out)
}

/// Build a surface-code decoding graph (one error type) under
/// phenomenological noise.
#[no_mangle]
pub extern "C" fn gapwin_graph_surface(
    distance: u32,
    rounds: u32,
    p: f64,
    unit_weights: bool,
    out: *mut *mut GapwinGraph,
) -> GapwinStatus {
    graph_out(
        build_surface_graph_phenomenological(distance, rounds, p, unit_weights),
        out,
    )
}

/// Parse a graph from its text form (see the file-format documentation).
///
/// # Safety
/// `text` must point to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gapwin_graph_from_text(
    text: *const c_char,
    out: *mut *mut GapwinGraph,
) -> GapwinStatus {
    if text.is_null() {
        set_error("null text pointer");
        return GapwinStatus::InvalidArgument;
    }
    let s = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("text is not valid UTF-8");
            return GapwinStatus::ParseError;
        }
    };
    graph_out(
        gapwin::graph_io::load_graph(s).and_then(|g| {
            g.validate()?;
            Ok(g)
        }),
        out,
    )
}

/// Serialize a graph to its canonical text form. The returned string must
/// be released with `gapwin_string_free`.
#[no_mangle]
pub extern "C" fn gapwin_graph_to_text(
    g: *const GapwinGraph,
    out: *mut *mut c_char,
) -> GapwinStatus {
    let Some(g) = (unsafe { g.as_ref() }) else {
        set_error("null graph handle");
        return GapwinStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return GapwinStatus::InvalidArgument;
    }
    let text = gapwin::graph_io::save_graph(&g.graph);
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            GapwinStatus::Ok
        }
        Err(_) => {
            set_error("serialized text contains NUL");
            GapwinStatus::InternalError
        }
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from a gapwin call and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gapwin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a graph handle.
///
/// # Safety
/// `g` must come from a gapwin constructor and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gapwin_graph_free(g: *mut GapwinGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

#[no_mangle]
pub extern "C" fn gapwin_graph_num_nodes(g: *const GapwinGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.graph.num_nodes())
}

#[no_mangle]
pub extern "C" fn gapwin_graph_num_edges(g: *const GapwinGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.graph.num_edges())
}

fn labels_from(
    g: &GapwinGraph,
    labels: *const u8,
    n_labels: usize,
) -> Result<SyndromeLabels, GapwinStatus> {
    if labels.is_null() {
        set_error("null labels pointer");
        return Err(GapwinStatus::InvalidArgument);
    }
    if n_labels != g.graph.num_nodes() {
        set_error("label count does not match node count");
        return Err(GapwinStatus::InvalidArgument);
    }
    let raw = unsafe { std::slice::from_raw_parts(labels, n_labels) };
    let mut out = Vec::with_capacity(n_labels);
    for &b in raw {
        out.push(match b {
            0 => Label::Zero,
            1 => Label::One,
            2 => Label::Free,
            _ => {
                set_error("labels must be 0, 1, or 2");
                return Err(GapwinStatus::InvalidArgument);
            }
        });
    }
    Ok(SyndromeLabels { labels: out })
}

/// Minimum-weight decode. Fills `edges_out` (capacity `edges_cap`) with the
/// edge ids of the correction chain, stores the count in `edges_len` and
/// the total weight in `weight_out`. Fails with `BufferTooSmall` when the
/// chain does not fit; `edges_len` then holds the required capacity.
///
/// # Safety
/// Pointer arguments must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn gapwin_decode(
    g: *const GapwinGraph,
    labels: *const u8,
    n_labels: usize,
    edges_out: *mut u32,
    edges_cap: usize,
    edges_len: *mut usize,
    weight_out: *mut f64,
) -> GapwinStatus {
    let Some(g) = g.as_ref() else {
        set_error("null graph handle");
        return GapwinStatus::InvalidArgument;
    };
    let sigma = match labels_from(g, labels, n_labels) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let mut matcher = Matcher::new();
    match matcher.decode(&g.graph, &g.csr, &sigma, None) {
        Ok(decoded) => {
            if !edges_len.is_null() {
                *edges_len = decoded.chain.edges.len();
            }
            if decoded.chain.edges.len() > edges_cap {
                set_error("edge buffer too small");
                return GapwinStatus::BufferTooSmall;
            }
            if !edges_out.is_null() {
                ptr::copy_nonoverlapping(
                    decoded.chain.edges.as_ptr(),
                    edges_out,
                    decoded.chain.edges.len(),
                );
            }
            if !weight_out.is_null() {
                *weight_out = decoded.chain.total_weight;
            }
            GapwinStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Complementary gap of global decoding for the given syndrome.
///
/// # Safety
/// Pointer arguments must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn gapwin_complementary_gap(
    g: *const GapwinGraph,
    labels: *const u8,
    n_labels: usize,
    gap_out: *mut f64,
) -> GapwinStatus {
    let Some(g) = g.as_ref() else {
        set_error("null graph handle");
        return GapwinStatus::InvalidArgument;
    };
    let sigma = match labels_from(g, labels, n_labels) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let mut matcher = Matcher::new();
    match gapwin::gaps::complementary_gap(&mut matcher, &g.graph, &g.csr, None, &sigma) {
        Ok(gap) => {
            if !gap_out.is_null() {
                *gap_out = gap.value;
            }
            GapwinStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Per-window soft information of a sliding decode: `gap_kind` 0 is the
/// plain spatiotemporal gap, 1 the distance-shifted and 2 the path-selected
/// variant. One value per non-terminal window lands in `gaps_out`.
///
/// # Safety
/// Pointer arguments must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn gapwin_sliding_gaps(
    g: *const GapwinGraph,
    labels: *const u8,
    n_labels: usize,
    r_com: u32,
    r_buf: u32,
    gap_kind: u8,
    gaps_out: *mut f64,
    gaps_cap: usize,
    gaps_len: *mut usize,
) -> GapwinStatus {
    let Some(g) = g.as_ref() else {
        set_error("null graph handle");
        return GapwinStatus::InvalidArgument;
    };
    let sigma = match labels_from(g, labels, n_labels) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let kind = match gap_kind {
        0 => GapKind::Stcg,
        1 => GapKind::DsStcg,
        2 => GapKind::PsStcg,
        _ => {
            set_error("gap_kind must be 0, 1, or 2");
            return GapwinStatus::InvalidArgument;
        }
    };
    let mut env = DecodeEnv::new(&g.graph, false);
    let mut values: Vec<f64> = Vec::new();
    let result = gapwin::window::sliding_decode_with(
        &mut env,
        &sigma,
        r_com,
        |_| r_buf,
        |env, _idx, geo, labels, emin| {
            if !geo.is_terminal() {
                let gap =
                    gapwin::adaptive::window_gap(env, geo, labels, emin, kind, &g.dist, g.mode)?;
                values.push(gap.value);
            }
            Ok(gapwin::window::HookOutcome::Commit)
        },
    );
    match result {
        Ok(_) => {
            if !gaps_len.is_null() {
                *gaps_len = values.len();
            }
            if values.len() > gaps_cap {
                set_error("gap buffer too small");
                return GapwinStatus::BufferTooSmall;
            }
            if !gaps_out.is_null() {
                ptr::copy_nonoverlapping(values.as_ptr(), gaps_out, values.len());
            }
            GapwinStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(d: u32, rounds: u32) -> *mut GapwinGraph {
        let mut out: *mut GapwinGraph = ptr::null_mut();
        let st = gapwin_graph_repetition(d, rounds, 0.05, true, &mut out);
        assert_eq!(st, GapwinStatus::Ok);
        assert!(!out.is_null());
        out
    }

    #[test]
    fn version_and_errors() {
        let v = gapwin_version();
        assert!(!v.is_null());
        let mut out: *mut GapwinGraph = ptr::null_mut();
        let st = gapwin_graph_repetition(4, 5, 0.05, true, &mut out);
        assert_eq!(st, GapwinStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(gapwin_last_error()) };
        assert!(msg.to_str().unwrap().contains("odd"));
    }

    #[test]
    fn decode_through_the_abi() {
        let g = build(5, 3);
        let n = gapwin_graph_num_nodes(g);
        assert_eq!(n, 14);
        let mut labels = vec![0u8; n];
        labels[12] = 2;
        labels[13] = 2;
        labels[0] = 1;
        labels[1] = 1;
        let mut edges = vec![0u32; 16];
        let mut len = 0usize;
        let mut weight = 0.0f64;
        let st = unsafe {
            gapwin_decode(
                g,
                labels.as_ptr(),
                n,
                edges.as_mut_ptr(),
                edges.len(),
                &mut len,
                &mut weight,
            )
        };
        assert_eq!(st, GapwinStatus::Ok);
        assert_eq!(len, 1);
        assert_eq!(weight, 1.0);
        // infeasible syndrome reports as such
        let mut bad = vec![0u8; n];
        bad[0] = 1;
        let st = unsafe {
            gapwin_decode(g, bad.as_ptr(), n, edges.as_mut_ptr(), edges.len(), &mut len, &mut weight)
        };
        assert_eq!(st, GapwinStatus::Infeasible);
        // buffer too small
        let st = unsafe {
            gapwin_decode(g, labels.as_ptr(), n, edges.as_mut_ptr(), 0, &mut len, &mut weight)
        };
        assert_eq!(st, GapwinStatus::BufferTooSmall);
        assert_eq!(len, 1);
        unsafe { gapwin_graph_free(g) };
    }

    #[test]
    fn gaps_through_the_abi() {
        let g = build(5, 20);
        let n = gapwin_graph_num_nodes(g);
        let mut labels = vec![0u8; n];
        labels[n - 2] = 2;
        labels[n - 1] = 2;
        let mut gaps = vec![0.0f64; 32];
        let mut len = 0usize;
        for kind in [0u8, 1, 2] {
            let st = unsafe {
                gapwin_sliding_gaps(
                    g,
                    labels.as_ptr(),
                    n,
                    2,
                    2,
                    kind,
                    gaps.as_mut_ptr(),
                    gaps.len(),
                    &mut len,
                )
            };
            assert_eq!(st, GapwinStatus::Ok);
            assert_eq!(len, 8, "kind {kind}");
            assert!(gaps[..len].iter().all(|&v| v >= 0.0));
        }
        let mut gap = 0.0f64;
        let st = unsafe { gapwin_complementary_gap(g, labels.as_ptr(), n, &mut gap) };
        assert_eq!(st, GapwinStatus::Ok);
        assert_eq!(gap, 5.0);
        unsafe { gapwin_graph_free(g) };
    }

    #[test]
    fn text_round_trip() {
        let g = build(3, 2);
        let mut text: *mut c_char = ptr::null_mut();
        assert_eq!(gapwin_graph_to_text(g, &mut text), GapwinStatus::Ok);
        let s = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_string();
        let c = CString::new(s.clone()).unwrap();
        let mut g2: *mut GapwinGraph = ptr::null_mut();
        assert_eq!(
            unsafe { gapwin_graph_from_text(c.as_ptr(), &mut g2) },
            GapwinStatus::Ok
        );
        assert_eq!(gapwin_graph_num_edges(g), gapwin_graph_num_edges(g2));
        let mut text2: *mut c_char = ptr::null_mut();
        assert_eq!(gapwin_graph_to_text(g2, &mut text2), GapwinStatus::Ok);
        let s2 = unsafe { CStr::from_ptr(text2) }.to_str().unwrap();
        assert_eq!(s, s2);
        unsafe {
            gapwin_string_free(text);
            gapwin_string_free(text2);
            gapwin_graph_free(g);
            gapwin_graph_free(g2);
        }
    }
}
