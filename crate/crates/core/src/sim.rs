//! Monte Carlo experiments: noise sampling, failure classification, and the
//! per-shot bookkeeping behind logical-error-rate, gap-distribution and
//! switching statistics.
//!
//! Shots are processed in fixed-size blocks; block aggregates merge in
//! block order, so results are byte-identical for any worker count.

use crate::adaptive::AdaptivePolicy;
use crate::error::{Error, Result};
use crate::gaps::{
    ds_refine, ps_stcg, ps_stcg_merged, stcg, GapKind, PenaltyMode,
};
use crate::graph::{weight_to_f64, DecodingGraph, DistanceMaps, WEIGHT_UNIT};
use crate::matcher::{Decoded, ErrorChain, Label, SyndromeLabels};
use crate::window::{
    parallel_decode_with, sliding_decode_with, DecodeEnv, HookOutcome, WindowGeometry,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Wilson score interval for k successes in n trials.
pub fn wilson_bounds(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sigma standard error of a rate, Wilson-based.
pub fn wilson_se(k: u64, n: u64) -> f64 {
    let (lo, hi) = wilson_bounds(k, n, 1.0);
    (hi - lo) / 2.0
}

/// Counter pair for a rate estimate.
#[derive(Debug, Clone, Copy, Default)]
pub struct RateEst {
    pub count: u64,
    pub trials: u64,
}

impl RateEst {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.count as f64 / self.trials as f64
        }
    }

    pub fn se(&self) -> f64 {
        wilson_se(self.count, self.trials)
    }

    pub fn merge(&mut self, other: &RateEst) {
        self.count += other.count;
        self.trials += other.trials;
    }
}

/// Histogram over gap values. Unit-weight runs with the default bin width
/// of 0.5 key exact half-integer values; weighted runs bin by flooring.
#[derive(Debug, Clone)]
pub struct GapHistogram {
    pub bin_int: i64,
    pub counts: BTreeMap<i64, u64>,
    pub total: u64,
}

impl GapHistogram {
    pub fn new(bin_width: f64) -> Self {
        let bin_int = crate::graph::quantize_weight(bin_width).max(1);
        GapHistogram {
            bin_int,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn key_of(&self, gap_int: i64) -> i64 {
        gap_int.div_euclid(self.bin_int)
    }

    pub fn value_of(&self, key: i64) -> f64 {
        weight_to_f64(key * self.bin_int)
    }

    pub fn add(&mut self, gap_int: i64) {
        *self.counts.entry(self.key_of(gap_int)).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &GapHistogram) {
        debug_assert_eq!(self.bin_int, other.bin_int);
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn median(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let mid = self.total.div_ceil(2);
        let mut seen = 0;
        for (&k, &c) in &self.counts {
            seen += c;
            if seen >= mid {
                return Some(self.value_of(k));
            }
        }
        None
    }

    /// Grouped-data median: interpolates the half-count position within the
    /// median bin, so shifts of mass inside a single bin stay visible.
    pub fn median_interpolated(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let half = self.total as f64 / 2.0;
        let mut below = 0u64;
        for (&k, &c) in &self.counts {
            if below as f64 + c as f64 >= half {
                let frac = (half - below as f64) / c as f64;
                return Some(self.value_of(k) + frac * weight_to_f64(self.bin_int));
            }
            below += c;
        }
        None
    }
}

/// Per-bin failure bookkeeping conditioned on a gap value.
#[derive(Debug, Clone, Copy, Default)]
pub struct CondBin {
    pub shots: u64,
    pub window_induced: u64,
    pub reverse: u64,
}

/// Gap statistics for one gap kind within one arm.
#[derive(Debug, Clone)]
pub struct GapStats {
    pub per_window: GapHistogram,
    /// Interior windows only: sliding windows past the first, or two-faced
    /// stage-1 parallel windows.
    pub interior: GapHistogram,
    pub min_gap: GapHistogram,
    /// Conditioned on the per-shot minimum gap.
    pub cond: BTreeMap<i64, CondBin>,
}

impl GapStats {
    fn new(bin_width: f64) -> Self {
        GapStats {
            per_window: GapHistogram::new(bin_width),
            interior: GapHistogram::new(bin_width),
            min_gap: GapHistogram::new(bin_width),
            cond: BTreeMap::new(),
        }
    }

    fn merge(&mut self, other: &GapStats) {
        self.per_window.merge(&other.per_window);
        self.interior.merge(&other.interior);
        self.min_gap.merge(&other.min_gap);
        for (&k, b) in &other.cond {
            let e = self.cond.entry(k).or_default();
            e.shots += b.shots;
            e.window_induced += b.window_induced;
            e.reverse += b.reverse;
        }
    }
}

/// Window scheme evaluated per shot on the shared sampled noise.
#[derive(Debug, Clone)]
pub enum ArmScheme {
    FixedSliding {
        r_buf: u32,
    },
    AdaptiveSliding {
        policy: AdaptivePolicy,
    },
    Parallel {
        r_buf: u32,
        gap_rounds: u32,
    },
    /// One designated small window; every other window uses the large
    /// buffer. Optionally adaptive on the designated window.
    SingleWindow {
        index: usize,
        r_buf_small: u32,
        r_buf_large: u32,
        g_th: Option<f64>,
        gap_kind: GapKind,
    },
    /// Adaptive sliding evaluated at several thresholds at once. Shots
    /// share window decodes and gaps until trajectories diverge, which
    /// makes a sweep barely more expensive than a single run. Produces one
    /// result aggregate per threshold, named `{name}@{g_th}`.
    AdaptiveSweep {
        gap_kind: GapKind,
        r_buf_small: u32,
        r_buf_large: u32,
        thresholds: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Arm {
    pub name: String,
    pub scheme: ArmScheme,
    /// Gap kinds recorded on every non-terminal window (fixed sliding arms).
    pub gap_kinds: Vec<GapKind>,
}

#[derive(Debug, Clone)]
pub struct Experiment<'g> {
    pub graph: &'g DecodingGraph,
    pub dist: DistanceMaps,
    pub mode: PenaltyMode,
    pub r_com: u32,
    pub shots: u64,
    pub seed: u64,
    pub bin_width: f64,
    pub arms: Vec<Arm>,
    pub workers: usize,
    pub record_shots: bool,
}

#[derive(Debug, Clone)]
pub struct ArmAggregate {
    pub name: String,
    pub fail: RateEst,
    pub window_induced: u64,
    pub reverse: u64,
    pub switch_windows: u64,
    pub nonterminal_windows: u64,
    pub total_windows: u64,
    pub buffer_round_sum: u64,
    pub per_kind: BTreeMap<GapKind, GapStats>,
}

impl ArmAggregate {
    fn new(name: &str, kinds: &[GapKind], bin_width: f64) -> Self {
        ArmAggregate {
            name: name.to_string(),
            fail: RateEst::default(),
            window_induced: 0,
            reverse: 0,
            switch_windows: 0,
            nonterminal_windows: 0,
            total_windows: 0,
            buffer_round_sum: 0,
            per_kind: kinds
                .iter()
                .map(|&k| (k, GapStats::new(bin_width)))
                .collect(),
        }
    }

    fn merge(&mut self, other: &ArmAggregate) {
        self.fail.merge(&other.fail);
        self.window_induced += other.window_induced;
        self.reverse += other.reverse;
        self.switch_windows += other.switch_windows;
        self.nonterminal_windows += other.nonterminal_windows;
        self.total_windows += other.total_windows;
        self.buffer_round_sum += other.buffer_round_sum;
        for (k, s) in &other.per_kind {
            self.per_kind
                .entry(*k)
                .or_insert_with(|| GapStats::new(weight_to_f64(s.per_window.bin_int)))
                .merge(s);
        }
    }

    pub fn avg_buffer(&self) -> f64 {
        if self.nonterminal_windows == 0 {
            0.0
        } else {
            self.buffer_round_sum as f64 / self.nonterminal_windows as f64
        }
    }

    pub fn switch_rate(&self) -> f64 {
        if self.nonterminal_windows == 0 {
            0.0
        } else {
            self.switch_windows as f64 / self.nonterminal_windows as f64
        }
    }
}

/// Per-shot record, kept when `record_shots` is set (first arm only).
#[derive(Debug, Clone)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub global_fail: bool,
    pub window_fail: bool,
    pub min_gap: Option<f64>,
    pub window_gaps: Vec<Option<f64>>,
    pub switch_count: u32,
    pub avg_buffer: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub shots: u64,
    pub global_fail: RateEst,
    pub arms: Vec<ArmAggregate>,
    pub records: Vec<ShotRecord>,
}

/// Deterministic per-shot generator: one independent stream per shot index.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Sample an error chain edge by edge and return it with its syndrome.
pub fn sample_error(
    g: &DecodingGraph,
    base: &SyndromeLabels,
    rng: &mut ChaCha8Rng,
) -> (ErrorChain, SyndromeLabels) {
    let mut sigma = base.clone();
    let mut edges: Vec<u32> = Vec::new();
    for (k, e) in g.edges.iter().enumerate() {
        if rng.random::<f64>() < e.prob {
            edges.push(k as u32);
            for end in [e.u, e.v] {
                if !g.nodes[end as usize].kind.is_boundary() {
                    sigma.toggle(end);
                }
            }
        }
    }
    (ErrorChain::from_edges(g, edges), sigma)
}

/// Labels with every bulk detector at zero and boundary nodes free.
pub fn base_labels(g: &DecodingGraph) -> SyndromeLabels {
    let mut l = SyndromeLabels::all_zero(g.num_nodes());
    for (v, nd) in g.nodes.iter().enumerate() {
        if nd.kind.is_boundary() {
            l.set(v as u32, Label::Free);
        }
    }
    l
}

/// A logical error flips the observable: the parity of observable-crossing
/// edges in the symmetric difference of truth and estimate.
pub fn logical_fail(g: &DecodingGraph, truth: &ErrorChain, estimate: &ErrorChain) -> bool {
    g.observable_parity(&truth.edges) != g.observable_parity(&estimate.edges)
}

struct ArmShot {
    fail: bool,
    switch_windows: u64,
    nonterminal_windows: u64,
    total_windows: u64,
    buffer_round_sum: u64,
    /// (kind, gap_int, interior) per evaluated window
    gaps: Vec<(GapKind, i64, bool)>,
}

#[allow(clippy::too_many_arguments)]
fn gaps_for_window(
    env: &mut DecodeEnv,
    geo: &WindowGeometry,
    labels: &SyndromeLabels,
    emin: &Decoded,
    kinds: &[GapKind],
    dist: &DistanceMaps,
    mode: PenaltyMode,
    interior: bool,
    out: &mut Vec<(GapKind, i64, bool)>,
) -> Result<()> {
    let want_stcg = kinds.contains(&GapKind::Stcg);
    let want_ds = kinds.contains(&GapKind::DsStcg);
    let want_ps = kinds.contains(&GapKind::PsStcg);
    if want_stcg || want_ds {
        let (base, detail) = stcg(&mut env.matcher, geo, labels, emin)?;
        if want_stcg {
            out.push((GapKind::Stcg, base.value_int, interior));
        }
        if want_ds {
            let dsv = ds_refine(geo, emin, &base, &detail, dist, mode)?;
            out.push((GapKind::DsStcg, dsv.value_int, interior));
        }
    }
    if want_ps {
        let ps = ps_stcg(&mut env.matcher, geo, labels, emin, dist, mode)?;
        out.push((GapKind::PsStcg, ps.value_int, interior));
    }
    Ok(())
}

fn run_arm(
    env: &mut DecodeEnv,
    exp: &Experiment,
    arm: &Arm,
    sigma: &SyndromeLabels,
    truth: &ErrorChain,
) -> Result<ArmShot> {
    let mut shot = ArmShot {
        fail: false,
        switch_windows: 0,
        nonterminal_windows: 0,
        total_windows: 0,
        buffer_round_sum: 0,
        gaps: Vec::new(),
    };
    let dist = &exp.dist;
    let mode = exp.mode;
    let chain = match &arm.scheme {
        ArmScheme::AdaptiveSweep { .. } => {
            return Err(Error::Internal(
                "sweep arms are expanded by the block runner".into(),
            ))
        }
        ArmScheme::FixedSliding { r_buf } => {
            let mut gaps = Vec::new();
            let (chain, metas) = sliding_decode_with(
                env,
                sigma,
                exp.r_com,
                |_| *r_buf,
                |env, _idx, geo, labels, emin| {
                    if !geo.is_terminal() {
                        gaps_for_window(
                            env,
                            geo,
                            labels,
                            emin,
                            &arm.gap_kinds,
                            dist,
                            mode,
                            geo.spec.w_start > 0,
                            &mut gaps,
                        )?;
                    }
                    Ok(HookOutcome::Commit)
                },
            )?;
            shot.gaps = gaps;
            for m in &metas {
                shot.total_windows += 1;
                if !m.terminal {
                    shot.nonterminal_windows += 1;
                    shot.buffer_round_sum += m.buffer_used as u64;
                }
            }
            chain
        }
        ArmScheme::AdaptiveSliding { policy } => {
            let mut gaps = Vec::new();
            let policy = *policy;
            let (chain, metas) = sliding_decode_with(
                env,
                sigma,
                exp.r_com,
                |_| policy.r_buf_small,
                |env, _idx, geo, labels, emin| {
                    if geo.is_terminal() {
                        return Ok(HookOutcome::Commit);
                    }
                    let gap = crate::adaptive::window_gap(
                        env,
                        geo,
                        labels,
                        emin,
                        policy.gap_kind,
                        dist,
                        mode,
                    )?;
                    gaps.push((policy.gap_kind, gap.value_int, geo.spec.w_start > 0));
                    if gap.value < policy.g_th {
                        Ok(HookOutcome::Redo {
                            r_buf: policy.r_buf_large,
                        })
                    } else {
                        Ok(HookOutcome::Commit)
                    }
                },
            )?;
            shot.gaps = gaps;
            for m in &metas {
                shot.total_windows += 1;
                if !m.terminal {
                    shot.nonterminal_windows += 1;
                    shot.buffer_round_sum += m.buffer_used as u64;
                    if m.switched {
                        shot.switch_windows += 1;
                    }
                }
            }
            chain
        }
        ArmScheme::Parallel { r_buf, gap_rounds } => {
            let mut gaps = Vec::new();
            let (chain, metas) = parallel_decode_with(
                env,
                sigma,
                exp.r_com,
                *r_buf,
                *gap_rounds,
                |env, _idx, geo, labels, emin| {
                    if geo.spec.has_virtual() {
                        let two_faced = geo.spec.past_virtual && geo.spec.future_virtual;
                        let ps = ps_stcg_merged(&mut env.matcher, geo, labels, emin, dist, mode)?;
                        gaps.push((GapKind::PsStcg, ps.value_int, two_faced));
                    }
                    Ok(())
                },
            )?;
            shot.gaps = gaps;
            for m in &metas {
                shot.total_windows += 1;
                if !m.terminal {
                    shot.nonterminal_windows += 1;
                    shot.buffer_round_sum += m.buffer_used as u64;
                }
            }
            chain
        }
        ArmScheme::SingleWindow {
            index,
            r_buf_small,
            r_buf_large,
            g_th,
            gap_kind,
        } => {
            let mut gaps = Vec::new();
            let (index, r_buf_small, r_buf_large, g_th, gap_kind) =
                (*index, *r_buf_small, *r_buf_large, *g_th, *gap_kind);
            let (chain, metas) = sliding_decode_with(
                env,
                sigma,
                exp.r_com,
                |i| if i == index { r_buf_small } else { r_buf_large },
                |env, idx, geo, labels, emin| {
                    if idx != index || geo.is_terminal() {
                        return Ok(HookOutcome::Commit);
                    }
                    let gap =
                        crate::adaptive::window_gap(env, geo, labels, emin, gap_kind, dist, mode)?;
                    gaps.push((gap_kind, gap.value_int, true));
                    match g_th {
                        Some(th) if gap.value < th => Ok(HookOutcome::Redo { r_buf: r_buf_large }),
                        _ => Ok(HookOutcome::Commit),
                    }
                },
            )?;
            shot.gaps = gaps;
            for m in &metas {
                shot.total_windows += 1;
                if m.index == index && !m.terminal {
                    shot.nonterminal_windows += 1;
                    shot.buffer_round_sum += m.buffer_used as u64;
                    if m.switched {
                        shot.switch_windows += 1;
                    }
                }
            }
            chain
        }
    };
    shot.fail = logical_fail(env.g, truth, &chain);
    Ok(shot)
}



struct BlockResult {
    global_fail: RateEst,
    arms: Vec<ArmAggregate>,
    records: Vec<ShotRecord>,
}

fn process_block(
    env: &mut DecodeEnv,
    exp: &Experiment,
    base: &SyndromeLabels,
    range: std::ops::Range<u64>,
) -> Result<BlockResult> {
    let slots = expanded_arm_slots(&exp.arms);
    let mut out = BlockResult {
        global_fail: RateEst::default(),
        arms: slots
            .iter()
            .map(|(name, kinds, _)| ArmAggregate::new(name, kinds, exp.bin_width))
            .collect(),
        records: Vec::new(),
    };
    for shot in range {
        let mut rng = shot_rng(exp.seed, shot);
        let (truth, sigma) = sample_error(env.g, base, &mut rng);
        let global = env.decode_global(&sigma)?;
        let gfail = logical_fail(env.g, &truth, &global.chain);
        out.global_fail.trials += 1;
        out.global_fail.count += gfail as u64;
        let mut slot = 0usize;
        for arm in exp.arms.iter() {
            let shot_results: Vec<ArmShot> = match &arm.scheme {
                ArmScheme::AdaptiveSweep {
                    gap_kind,
                    r_buf_small,
                    r_buf_large,
                    thresholds,
                } => run_sweep(
                    env,
                    exp,
                    *gap_kind,
                    *r_buf_small,
                    *r_buf_large,
                    thresholds,
                    &sigma,
                    &truth,
                )
                .map_err(|e| Error::Internal(format!("shot {shot} arm {}: {e}", arm.name)))?,
                _ => vec![run_arm(env, exp, arm, &sigma, &truth).map_err(|e| {
                    Error::Internal(format!("shot {shot} arm {}: {e}", arm.name))
                })?],
            };
            for s in shot_results {
                let ai = slot;
                slot += 1;
                let agg = &mut out.arms[ai];
                agg.fail.trials += 1;
                agg.fail.count += s.fail as u64;
                agg.window_induced += (s.fail && !gfail) as u64;
                agg.reverse += (!s.fail && gfail) as u64;
                agg.switch_windows += s.switch_windows;
                agg.nonterminal_windows += s.nonterminal_windows;
                agg.total_windows += s.total_windows;
                agg.buffer_round_sum += s.buffer_round_sum;
                let mut mins: BTreeMap<GapKind, i64> = BTreeMap::new();
                for &(kind, gap, interior) in &s.gaps {
                    let st = agg
                        .per_kind
                        .entry(kind)
                        .or_insert_with(|| GapStats::new(exp.bin_width));
                    st.per_window.add(gap);
                    if interior {
                        st.interior.add(gap);
                    }
                    mins.entry(kind)
                        .and_modify(|m| *m = (*m).min(gap))
                        .or_insert(gap);
                }
                for (kind, min_gap) in &mins {
                    let st = agg.per_kind.get_mut(kind).expect("kind present");
                    st.min_gap.add(*min_gap);
                    let key = st.min_gap.key_of(*min_gap);
                    let bin = st.cond.entry(key).or_default();
                    bin.shots += 1;
                    bin.window_induced += (s.fail && !gfail) as u64;
                    bin.reverse += (!s.fail && gfail) as u64;
                }
                if exp.record_shots && ai == 0 {
                    let window_gaps: Vec<Option<f64>> = s
                        .gaps
                        .iter()
                        .map(|&(_, g, _)| Some(weight_to_f64(g)))
                        .collect();
                    out.records.push(ShotRecord {
                        shot_index: shot,
                        global_fail: gfail,
                        window_fail: s.fail,
                        min_gap: mins.values().next().map(|&g| weight_to_f64(g)),
                        window_gaps,
                        switch_count: s.switch_windows as u32,
                        avg_buffer: if s.nonterminal_windows == 0 {
                            0.0
                        } else {
                            s.buffer_round_sum as f64 / s.nonterminal_windows as f64
                        },
                    });
                }
            }
        }
    }
    Ok(out)
}

fn arm_kinds(arm: &Arm) -> Vec<GapKind> {
    match &arm.scheme {
        ArmScheme::FixedSliding { .. } => arm.gap_kinds.clone(),
        ArmScheme::AdaptiveSliding { policy } => vec![policy.gap_kind],
        ArmScheme::Parallel { .. } => vec![GapKind::PsStcg],
        ArmScheme::SingleWindow { gap_kind, .. } => vec![*gap_kind],
        ArmScheme::AdaptiveSweep { gap_kind, .. } => vec![*gap_kind],
    }
}

/// Result-aggregate names: sweeps expand to one slot per threshold.
fn expanded_arm_slots(arms: &[Arm]) -> Vec<(String, Vec<GapKind>, f64)> {
    let mut out = Vec::new();
    for arm in arms {
        match &arm.scheme {
            ArmScheme::AdaptiveSweep { thresholds, .. } => {
                for &th in thresholds {
                    out.push((
                        format!("{}@{}", arm.name, crate::fmt::fmt_g12(th)),
                        arm_kinds(arm),
                        th,
                    ));
                }
            }
            _ => out.push((arm.name.clone(), arm_kinds(arm), f64::NAN)),
        }
    }
    out
}

/// Threshold-sweep runner: one trajectory group per distinct history.
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    env: &mut DecodeEnv,
    exp: &Experiment,
    gap_kind: GapKind,
    r_buf_small: u32,
    r_buf_large: u32,
    thresholds: &[f64],
    sigma0: &SyndromeLabels,
    truth: &ErrorChain,
) -> Result<Vec<ArmShot>> {
    use crate::window::{apply_artificial_defects, commit_from, WindowSpec};
    struct Group {
        thr: Vec<usize>,
        sigma: SyndromeLabels,
        committed: Vec<u32>,
        gaps: Vec<(GapKind, i64, bool)>,
        switch_windows: u64,
        nonterminal: u64,
        total: u64,
        buffer_sum: u64,
    }
    let total = env.g.rounds;
    let r_com = exp.r_com;
    let mut groups = vec![Group {
        thr: (0..thresholds.len()).collect(),
        sigma: sigma0.clone(),
        committed: Vec::new(),
        gaps: Vec::new(),
        switch_windows: 0,
        nonterminal: 0,
        total: 0,
        buffer_sum: 0,
    }];
    let mut start = 0u32;
    while start < total {
        let c_end = (start + r_com).min(total);
        let mut next: Vec<Group> = Vec::with_capacity(groups.len());
        for mut grp in groups {
            let w_end = (c_end + r_buf_small).min(total);
            let future_virtual = w_end < total;
            if future_virtual && r_buf_small == 0 {
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
            let labels = crate::window::window_labels(&geo, &grp.sigma);
            let emin = env.decode_window(&geo, &labels)?;
            grp.total += 1;
            if !future_virtual {
                let wc = commit_from(&geo, &emin);
                if c_end < total {
                    apply_artificial_defects(env.g, &mut grp.sigma, &wc, c_end);
                }
                grp.committed.extend(wc);
                next.push(grp);
                continue;
            }
            grp.nonterminal += 1;
            grp.buffer_sum += (w_end - c_end) as u64;
            let gap = crate::adaptive::window_gap(
                env,
                &geo,
                &labels,
                &emin,
                gap_kind,
                &exp.dist,
                exp.mode,
            )?;
            grp.gaps.push((gap_kind, gap.value_int, spec.w_start > 0));
            let (switching, staying): (Vec<usize>, Vec<usize>) = grp
                .thr
                .iter()
                .partition(|&&t| gap.value < thresholds[t]);
            let push_branch = |env: &mut DecodeEnv,
                                   thr: Vec<usize>,
                                   mut sigma: SyndromeLabels,
                                   mut committed: Vec<u32>,
                                   gaps: Vec<(GapKind, i64, bool)>,
                                   counters: (u64, u64, u64, u64),
                                   switched: bool|
             -> Result<Group> {
                let (geo_c, emin_c) = if switched {
                    let w_end2 = (c_end + r_buf_large).min(total);
                    let spec2 = WindowSpec {
                        w_start: start,
                        w_end: w_end2,
                        c_start: start,
                        c_end,
                        past_virtual: false,
                        future_virtual: w_end2 < total,
                    };
                    let geo2 = env.geometry(spec2)?;
                    let labels2 = crate::window::window_labels(&geo2, &sigma);
                    let emin2 = env.decode_window(&geo2, &labels2)?;
                    (geo2, emin2)
                } else {
                    (geo.clone(), emin.clone())
                };
                let wc = commit_from(&geo_c, &emin_c);
                if c_end < total {
                    apply_artificial_defects(env.g, &mut sigma, &wc, c_end);
                }
                committed.extend(wc);
                let (mut sw, nt, tot, mut bs) = counters;
                if switched {
                    sw += 1;
                    bs += (geo_c.spec.w_end - c_end) as u64 - (w_end - c_end) as u64;
                }
                Ok(Group {
                    thr,
                    sigma,
                    committed,
                    gaps,
                    switch_windows: sw,
                    nonterminal: nt,
                    total: tot,
                    buffer_sum: bs,
                })
            };
            let counters = (
                grp.switch_windows,
                grp.nonterminal,
                grp.total,
                grp.buffer_sum,
            );
            match (staying.is_empty(), switching.is_empty()) {
                (false, true) => {
                    next.push(push_branch(
                        env,
                        staying,
                        grp.sigma,
                        grp.committed,
                        grp.gaps,
                        counters,
                        false,
                    )?);
                }
                (true, false) => {
                    next.push(push_branch(
                        env,
                        switching,
                        grp.sigma,
                        grp.committed,
                        grp.gaps,
                        counters,
                        true,
                    )?);
                }
                (false, false) => {
                    next.push(push_branch(
                        env,
                        staying,
                        grp.sigma.clone(),
                        grp.committed.clone(),
                        grp.gaps.clone(),
                        counters,
                        false,
                    )?);
                    next.push(push_branch(
                        env,
                        switching,
                        grp.sigma,
                        grp.committed,
                        grp.gaps,
                        counters,
                        true,
                    )?);
                }
                (true, true) => unreachable!("thresholds vanished"),
            }
        }
        groups = next;
        start = c_end;
    }
    let mut shots: Vec<Option<ArmShot>> = (0..thresholds.len()).map(|_| None).collect();
    for grp in groups {
        let chain = ErrorChain::from_edges(env.g, grp.committed);
        let fail = logical_fail(env.g, truth, &chain);
        for &t in &grp.thr {
            shots[t] = Some(ArmShot {
                fail,
                switch_windows: grp.switch_windows,
                nonterminal_windows: grp.nonterminal,
                total_windows: grp.total,
                buffer_round_sum: grp.buffer_sum,
                gaps: grp.gaps.clone(),
            });
        }
    }
    Ok(shots.into_iter().map(|s| s.expect("all thresholds assigned")).collect())
}

const BLOCK_SHOTS: u64 = 2048;

/// Run the experiment. The same seed and configuration reproduce identical
/// aggregates for any worker count.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    if exp.shots == 0 {
        return Err(Error::Domain("shot count must be at least 1".into()));
    }
    if exp.graph.rounds < exp.r_com {
        return Err(Error::Domain(
            "graph must cover at least one commit region".into(),
        ));
    }
    let base = base_labels(exp.graph);
    let shared = DecodeEnv::new(exp.graph, true);
    let blocks: Vec<std::ops::Range<u64>> = (0..exp.shots)
        .step_by(BLOCK_SHOTS as usize)
        .map(|s| s..(s + BLOCK_SHOTS).min(exp.shots))
        .collect();

    let block_results: Vec<Result<BlockResult>> = if exp.workers <= 1 {
        let mut env = shared.fork();
        blocks
            .iter()
            .map(|r| process_block(&mut env, exp, &base, r.clone()))
            .collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(exp.workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        pool.install(|| {
            blocks
                .par_iter()
                .map_init(
                    || shared.fork(),
                    |env, r| process_block(env, exp, &base, r.clone()),
                )
                .collect()
        })
    };

    let mut global_fail = RateEst::default();
    let mut arms: Vec<ArmAggregate> = expanded_arm_slots(&exp.arms)
        .iter()
        .map(|(name, kinds, _)| ArmAggregate::new(name, kinds, exp.bin_width))
        .collect();
    let mut records = Vec::new();
    for br in block_results {
        let br = br?;
        global_fail.merge(&br.global_fail);
        for (a, b) in arms.iter_mut().zip(&br.arms) {
            a.merge(b);
        }
        records.extend(br.records);
    }
    Ok(ExperimentResult {
        shots: exp.shots,
        global_fail,
        arms,
        records,
    })
}

/// Half-unit helper for tests and analysis code.
pub fn gap_units(v: f64) -> i64 {
    (v * WEIGHT_UNIT as f64).round() as i64
}
