//! Prediction and extrapolation machinery: minimum-of-n gap distributions
//! under the independence assumption, multi-window conditional failure
//! rates, the logical-error-rate versus switching-rate trade-off, power-law
//! extrapolation of the global rate, and universality checks across
//! physical error rates.
//!
//! Distributions are discrete: support points come from measured histograms
//! and sums replace the integrals of the continuous formulation.

use crate::error::{Error, Result};
use crate::graph::weight_to_f64;
use crate::sim::{wilson_se, CondBin, GapHistogram};
use std::collections::BTreeMap;

/// Empirical gap distribution on a discrete support.
#[derive(Debug, Clone)]
pub struct GapDistribution {
    pub bin_int: i64,
    pub keys: Vec<i64>,
    pub pmf: Vec<f64>,
    pub shots: u64,
}

impl GapDistribution {
    pub fn from_histogram(h: &GapHistogram) -> Result<Self> {
        if h.total == 0 {
            return Err(Error::Domain("empty histogram".into()));
        }
        let keys: Vec<i64> = h.counts.keys().copied().collect();
        let pmf: Vec<f64> = h
            .counts
            .values()
            .map(|&c| c as f64 / h.total as f64)
            .collect();
        Ok(GapDistribution {
            bin_int: h.bin_int,
            keys,
            pmf,
            shots: h.total,
        })
    }

    pub fn value(&self, idx: usize) -> f64 {
        weight_to_f64(self.keys[idx] * self.bin_int)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "probability mass sums to {sum}, not 1"
            )));
        }
        if self.pmf.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation("negative probability mass".into()));
        }
        Ok(())
    }

    /// Survival values S_i = P(X >= key_i).
    fn survival(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.keys.len() + 1];
        for i in (0..self.keys.len()).rev() {
            s[i] = s[i + 1] + self.pmf[i];
        }
        s
    }
}

/// Joint distribution P(fail and g) on the same binning.
#[derive(Debug, Clone)]
pub struct JointFailDistribution {
    pub bin_int: i64,
    pub map: BTreeMap<i64, f64>,
}

impl JointFailDistribution {
    pub fn from_cond(cond: &BTreeMap<i64, CondBin>, bin_int: i64, shots: u64) -> Self {
        let map = cond
            .iter()
            .map(|(&k, b)| (k, b.window_induced as f64 / shots as f64))
            .collect();
        JointFailDistribution { bin_int, map }
    }
}

/// Conditional window-induced failure rate per gap bin, with an optional
/// exponential fit for bins without support.
#[derive(Debug, Clone)]
pub struct ConditionalRateCurve {
    pub bin_int: i64,
    pub keys: Vec<i64>,
    pub shots: Vec<u64>,
    pub failures: Vec<u64>,
    /// ln(rate) = intercept + slope * gap, fitted over well-supported bins.
    pub fit: Option<(f64, f64)>,
}

pub const FIT_MIN_FAILURES: u64 = 30;

impl ConditionalRateCurve {
    pub fn from_cond(cond: &BTreeMap<i64, CondBin>, bin_int: i64) -> Self {
        let keys: Vec<i64> = cond.keys().copied().collect();
        let shots: Vec<u64> = cond.values().map(|b| b.shots).collect();
        let failures: Vec<u64> = cond.values().map(|b| b.window_induced).collect();
        ConditionalRateCurve {
            bin_int,
            keys,
            shots,
            failures,
            fit: None,
        }
    }

    pub fn value(&self, idx: usize) -> f64 {
        weight_to_f64(self.keys[idx] * self.bin_int)
    }

    pub fn rate(&self, idx: usize) -> f64 {
        if self.shots[idx] == 0 {
            0.0
        } else {
            self.failures[idx] as f64 / self.shots[idx] as f64
        }
    }

    /// Least squares of ln(rate) against the gap over bins with at least
    /// `min_failures` failures. Returns (intercept, slope) and stores it.
    pub fn fit_exponential(&mut self, min_failures: u64) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = (0..self.keys.len())
            .filter(|&i| self.failures[i] >= min_failures && self.rate(i) > 0.0)
            .map(|i| (self.value(i), self.rate(i).ln()))
            .collect();
        if pts.len() < 2 {
            self.fit = None;
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-300 {
            self.fit = None;
            return None;
        }
        let slope = (n * sxy - sx * sy) / denom;
        let intercept = (sy - slope * sx) / n;
        self.fit = Some((intercept, slope));
        self.fit
    }

    /// Pearson correlation of ln(rate) vs gap over the fitted bins.
    pub fn log_rate_correlation(&self, min_failures: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = (0..self.keys.len())
            .filter(|&i| self.failures[i] >= min_failures && self.rate(i) > 0.0)
            .map(|i| (self.value(i), self.rate(i).ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let vx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let vy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        if vx <= 0.0 || vy <= 0.0 {
            return None;
        }
        Some(cov / (vx * vy).sqrt())
    }

    fn rate_for_key(&self, key: i64, use_fit: bool) -> Option<f64> {
        if let Ok(idx) = self.keys.binary_search(&key) {
            if self.shots[idx] > 0 {
                return Some(self.rate(idx));
            }
        }
        if use_fit {
            if let Some((a, b)) = self.fit {
                let g = weight_to_f64(key * self.bin_int);
                return Some((a + b * g).exp());
            }
        }
        None
    }
}

/// Distribution of the minimum of n independent draws.
pub fn min_of_n_distribution(p: &GapDistribution, n: u32) -> Result<GapDistribution> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    p.validate()?;
    let s = p.survival();
    let pmf: Vec<f64> = (0..p.keys.len())
        .map(|i| s[i].powi(n as i32) - s[i + 1].powi(n as i32))
        .collect();
    Ok(GapDistribution {
        bin_int: p.bin_int,
        keys: p.keys.clone(),
        pmf,
        shots: p.shots,
    })
}

/// Multi-window conditional failure rate at a given minimum gap, from
/// single-window data under the independence assumption: the window that
/// attains the minimum plus (n-1) tail contributions.
pub fn combine_multiwindow_rate(
    p: &GapDistribution,
    joint: &JointFailDistribution,
    n: u32,
    g_min_key: i64,
) -> Result<f64> {
    let idx = p
        .keys
        .binary_search(&g_min_key)
        .map_err(|_| Error::Domain(format!("key {g_min_key} not in support")))?;
    if p.pmf[idx] <= 0.0 {
        return Err(Error::Domain("zero mass at the conditioning point".into()));
    }
    let joint_at = joint.map.get(&g_min_key).copied().unwrap_or(0.0);
    let first = joint_at / p.pmf[idx];
    let tail_p: f64 = p.pmf[idx..].iter().sum();
    if tail_p <= 0.0 {
        return Err(Error::Domain("empty tail above the conditioning point".into()));
    }
    let tail_joint: f64 = joint
        .map
        .range(g_min_key..)
        .map(|(_, &v)| v)
        .sum();
    Ok(first + (n as f64 - 1.0) * tail_joint / tail_p)
}

#[derive(Debug, Clone, Copy)]
pub struct TradeoffPoint {
    pub g_th: f64,
    pub p_l: f64,
    pub p_switch: f64,
    /// Support bins with no conditional-rate estimate (fit not available).
    pub missing_bins: usize,
}

/// Predicted logical error rate and switching rate at a threshold. The
/// switching convention is strict (gap < threshold switches), so failures
/// accumulate over gaps at or above it.
pub fn predict_tradeoff(
    p: &GapDistribution,
    cond: &ConditionalRateCurve,
    p_l_global: f64,
    g_th: f64,
) -> Result<TradeoffPoint> {
    p.validate()?;
    let mut p_l = p_l_global;
    let mut p_switch = 0.0;
    let mut missing = 0;
    for i in 0..p.keys.len() {
        let g = p.value(i);
        if g < g_th {
            p_switch += p.pmf[i];
        } else {
            match cond.rate_for_key(p.keys[i], true) {
                Some(r) => p_l += r * p.pmf[i],
                None => missing += 1,
            }
        }
    }
    Ok(TradeoffPoint {
        g_th,
        p_l,
        p_switch,
        missing_bins: missing,
    })
}

/// Trade-off with the reverse term subtracted: conditional probability of
/// the window decoder succeeding where the global decoder fails.
pub fn predict_tradeoff_exact(
    p: &GapDistribution,
    cond_fail: &ConditionalRateCurve,
    cond_reverse: &ConditionalRateCurve,
    p_l_global: f64,
    g_th: f64,
) -> Result<TradeoffPoint> {
    let approx = predict_tradeoff(p, cond_fail, p_l_global, g_th)?;
    let mut correction = 0.0;
    for i in 0..p.keys.len() {
        let g = p.value(i);
        if g >= g_th {
            if let Some(r) = cond_reverse.rate_for_key(p.keys[i], false) {
                correction += r * p.pmf[i];
            }
        }
    }
    Ok(TradeoffPoint {
        p_l: approx.p_l - correction,
        ..approx
    })
}

/// Power-law extrapolation of the global logical error rate.
pub fn extrapolate_global_ler(
    p_l_ref: f64,
    p_ref: f64,
    p_target: f64,
    d: u32,
    p_th: f64,
) -> Result<f64> {
    if !(p_ref > 0.0 && p_ref < p_th && p_target > 0.0 && p_target < p_th) {
        return Err(Error::Domain(format!(
            "error rates must lie in (0, p_th = {p_th}); got ref {p_ref}, target {p_target}"
        )));
    }
    let exponent = (d as f64 + 1.0) / 2.0;
    Ok(p_l_ref * (p_target / p_ref).powf(exponent))
}

#[derive(Debug, Clone)]
pub struct UniversalityBin {
    pub value: f64,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct UniversalityReport {
    pub comparable: bool,
    pub max_abs_z: f64,
    pub bins: Vec<UniversalityBin>,
    pub pass: bool,
}

/// Compare conditional curves measured at different physical error rates:
/// per-bin z-scores on all pairings over bins with adequate counts.
pub fn universality_check(
    curves: &[ConditionalRateCurve],
    z_bound: f64,
    min_failures: u64,
) -> UniversalityReport {
    let mut bins: Vec<UniversalityBin> = Vec::new();
    let mut comparable = false;
    for a in 0..curves.len() {
        for b in (a + 1)..curves.len() {
            let (ca, cb) = (&curves[a], &curves[b]);
            for (i, &key) in ca.keys.iter().enumerate() {
                let Ok(j) = cb.keys.binary_search(&key) else {
                    continue;
                };
                if ca.failures[i] < min_failures || cb.failures[j] < min_failures {
                    continue;
                }
                comparable = true;
                let (ra, rb) = (ca.rate(i), cb.rate(j));
                let se = (wilson_se(ca.failures[i], ca.shots[i]).powi(2)
                    + wilson_se(cb.failures[j], cb.shots[j]).powi(2))
                .sqrt();
                let z = if se > 0.0 { (ra - rb) / se } else { 0.0 };
                bins.push(UniversalityBin {
                    value: ca.value(i),
                    z,
                });
            }
        }
    }
    let max_abs_z = bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    UniversalityReport {
        comparable,
        max_abs_z,
        pass: comparable && max_abs_z <= z_bound,
        bins,
    }
}

/// Total variation distance between two distributions on the same binning.
pub fn total_variation(p: &GapDistribution, q: &GapDistribution) -> f64 {
    let mut keys: Vec<i64> = p.keys.iter().chain(q.keys.iter()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let lookup = |d: &GapDistribution, k: i64| -> f64 {
        d.keys.binary_search(&k).map(|i| d.pmf[i]).unwrap_or(0.0)
    };
    0.5 * keys
        .iter()
        .map(|&k| (lookup(p, k) - lookup(q, k)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WEIGHT_UNIT;

    fn dist(pairs: &[(i64, f64)], shots: u64) -> GapDistribution {
        GapDistribution {
            bin_int: WEIGHT_UNIT / 2,
            keys: pairs.iter().map(|p| p.0).collect(),
            pmf: pairs.iter().map(|p| p.1).collect(),
            shots,
        }
    }

    #[test]
    fn min_of_one_is_identity() {
        let p = dist(&[(4, 0.25), (8, 0.5), (12, 0.25)], 100);
        let q = min_of_n_distribution(&p, 1).unwrap();
        assert_eq!(p.keys, q.keys);
        for (a, b) in p.pmf.iter().zip(&q.pmf) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn min_of_n_degenerate() {
        let p = dist(&[(6, 1.0)], 10);
        for n in [1u32, 2, 7] {
            let q = min_of_n_distribution(&p, n).unwrap();
            assert_eq!(q.keys, vec![6]);
            assert!((q.pmf[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn min_of_two_two_point() {
        // keys 4 and 8 in half units = gaps 2 and 4
        let p = dist(&[(4, 0.5), (8, 0.5)], 100);
        let q = min_of_n_distribution(&p, 2).unwrap();
        assert!((q.pmf[0] - 0.75).abs() < 1e-15);
        assert!((q.pmf[1] - 0.25).abs() < 1e-15);
        // mass preserved
        assert!((q.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // stochastically decreasing: survival pointwise no larger
        let s1 = min_of_n_distribution(&p, 1).unwrap();
        let sum_tail =
            |d: &GapDistribution, i: usize| -> f64 { d.pmf[i..].iter().sum::<f64>() };
        for i in 0..p.keys.len() {
            assert!(sum_tail(&q, i) <= sum_tail(&s1, i) + 1e-12);
        }
    }

    fn cond_curve(entries: &[(i64, u64, u64)]) -> ConditionalRateCurve {
        ConditionalRateCurve {
            bin_int: WEIGHT_UNIT / 2,
            keys: entries.iter().map(|e| e.0).collect(),
            shots: entries.iter().map(|e| e.1).collect(),
            failures: entries.iter().map(|e| e.2).collect(),
            fit: None,
        }
    }

    #[test]
    fn combine_reduces_for_single_window() {
        let p = dist(&[(2, 0.5), (4, 0.3), (6, 0.2)], 1000);
        let mut cond = BTreeMap::new();
        for (k, shots, fails) in [(2i64, 500u64, 50u64), (4, 300, 9), (6, 200, 2)] {
            cond.insert(
                k,
                CondBin {
                    shots,
                    window_induced: fails,
                    reverse: 0,
                },
            );
        }
        let joint = JointFailDistribution::from_cond(&cond, WEIGHT_UNIT / 2, 1000);
        let r = combine_multiwindow_rate(&p, &joint, 1, 4).unwrap();
        assert!((r - 9.0 / 300.0).abs() < 1e-12);
        // zero joint gives zero rate for any n
        let zero = JointFailDistribution {
            bin_int: WEIGHT_UNIT / 2,
            map: BTreeMap::new(),
        };
        for n in [1, 2, 8] {
            assert_eq!(combine_multiwindow_rate(&p, &zero, n, 2).unwrap(), 0.0);
        }
        // missing key errors
        assert!(combine_multiwindow_rate(&p, &joint, 2, 5).is_err());
    }

    #[test]
    fn tradeoff_boundaries() {
        let p = dist(&[(2, 0.6), (4, 0.4)], 1000);
        let cond = cond_curve(&[(2, 600, 60), (4, 400, 4)]);
        let global = 1e-3;
        // below all support: nothing switches, all failure mass counts
        let t = predict_tradeoff(&p, &cond, global, 0.0).unwrap();
        assert!((t.p_switch - 0.0).abs() < 1e-15);
        let want = global + 0.6 * 0.1 + 0.4 * 0.01;
        assert!((t.p_l - want).abs() < 1e-12);
        // above all support: everything switches, only the global rate is left
        let t = predict_tradeoff(&p, &cond, global, 10.0).unwrap();
        assert!((t.p_switch - 1.0).abs() < 1e-12);
        assert!((t.p_l - global).abs() < 1e-15);
        // monotone in the threshold
        let mut prev = None;
        for th in [0.0, 1.0, 2.0, 3.0, 10.0] {
            let t = predict_tradeoff(&p, &cond, global, th).unwrap();
            if let Some((pl, ps)) = prev {
                assert!(t.p_l <= pl + 1e-12);
                assert!(t.p_switch >= ps - 1e-12);
            }
            prev = Some((t.p_l, t.p_switch));
        }
    }

    #[test]
    fn exact_tradeoff_subtraction() {
        let p = dist(&[(2, 0.6), (4, 0.4)], 1000);
        let cond = cond_curve(&[(2, 600, 60), (4, 400, 4)]);
        let zero = cond_curve(&[(2, 600, 0), (4, 400, 0)]);
        let global = 1e-3;
        let approx = predict_tradeoff(&p, &cond, global, 0.0).unwrap();
        let exact = predict_tradeoff_exact(&p, &cond, &zero, global, 0.0).unwrap();
        assert!((approx.p_l - exact.p_l).abs() < 1e-15);
        // reverse equal to forward cancels back to the global rate
        let cancel = predict_tradeoff_exact(&p, &cond, &cond, global, 0.0).unwrap();
        assert!((cancel.p_l - global).abs() < 1e-15);
        // nonnegative reverse never increases the estimate
        assert!(cancel.p_l <= approx.p_l);
    }

    #[test]
    fn extrapolation_power_law() {
        let base = 1e-3;
        assert_eq!(
            extrapolate_global_ler(base, 0.004, 0.004, 11, 0.01).unwrap(),
            base
        );
        let quarter = extrapolate_global_ler(base, 0.004, 0.001, 11, 0.01).unwrap();
        assert!((quarter - base * 0.25f64.powi(6)).abs() < 1e-18);
        // composition equals the direct jump
        let ab = extrapolate_global_ler(base, 0.008, 0.004, 7, 0.01).unwrap();
        let abc = extrapolate_global_ler(ab, 0.004, 0.002, 7, 0.01).unwrap();
        let direct = extrapolate_global_ler(base, 0.008, 0.002, 7, 0.01).unwrap();
        assert!((abc - direct).abs() < 1e-15 * direct.abs().max(1.0));
        assert!(extrapolate_global_ler(base, 0.02, 0.001, 7, 0.01).is_err());
    }

    #[test]
    fn universality_identical_and_subsampled() {
        let a = cond_curve(&[(2, 10_000, 900), (4, 10_000, 100), (6, 10_000, 10)]);
        let report = universality_check(&[a.clone(), a.clone()], 3.0, 50);
        assert!(report.comparable);
        assert!(report.pass);
        assert!(report.max_abs_z < 1e-12);
        // a subsample of the same process stays within bounds
        let b = cond_curve(&[(2, 5_000, 463), (4, 5_000, 48)]);
        let report = universality_check(&[a, b], 3.0, 40);
        assert!(report.comparable);
        assert!(report.pass, "max z {}", report.max_abs_z);
        // disjoint support is incomparable
        let c = cond_curve(&[(20, 1000, 100)]);
        let d = cond_curve(&[(30, 1000, 100)]);
        let report = universality_check(&[c, d], 3.0, 10);
        assert!(!report.comparable);
        assert!(!report.pass);
    }

    #[test]
    fn exponential_fit_recovers_slope() {
        // rates follow exp(1 - 0.8 g) exactly
        let entries: Vec<(i64, u64, u64)> = (1..=6)
            .map(|g| {
                let rate = (1.0 - 0.8 * g as f64).exp();
                let shots = 4_000_000u64;
                ((2 * g) as i64, shots, (rate * shots as f64).round() as u64)
            })
            .collect();
        let mut c = cond_curve(&entries);
        let (intercept, slope) = c.fit_exponential(FIT_MIN_FAILURES).unwrap();
        assert!((slope + 0.8).abs() < 1e-3, "slope {slope}");
        assert!((intercept - 1.0).abs() < 1e-2);
        let corr = c.log_rate_correlation(FIT_MIN_FAILURES).unwrap();
        assert!(corr < -0.999);
    }

    #[test]
    fn total_variation_basics() {
        let p = dist(&[(2, 0.5), (4, 0.5)], 10);
        let q = dist(&[(2, 0.25), (4, 0.75)], 10);
        assert!((total_variation(&p, &p)).abs() < 1e-15);
        assert!((total_variation(&p, &q) - 0.25).abs() < 1e-15);
        let r = dist(&[(8, 1.0)], 10);
        assert!((total_variation(&p, &r) - 1.0).abs() < 1e-15);
    }
}
