//! Experiment configuration: a strict TOML schema that expands into one or
//! more concrete experiments (one per swept code distance and error rate).

use crate::adaptive::AdaptivePolicy;
use crate::error::{Error, Result};
use crate::gaps::{GapKind, PenaltyMode};
use crate::graph::{
    build_repetition_graph, build_surface_graph_phenomenological, DecodingGraph,
};
use crate::sim::{Arm, ArmScheme};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_bin_width() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub shots: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default)]
    pub record_shots: bool,
    pub code: CodeConfig,
    pub decode: DecodeConfig,
    #[serde(rename = "arms")]
    pub arms: Vec<ArmConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// `repetition`, `surface`, or `file`.
    pub kind: String,
    #[serde(default)]
    pub distance: Option<OneOrMany<u32>>,
    /// 0 means the 5d memory-experiment default.
    #[serde(default)]
    pub rounds: u32,
    #[serde(default)]
    pub p: Option<OneOrMany<f64>>,
    #[serde(default)]
    pub unit_weights: bool,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    /// 0 means floor(d/2).
    #[serde(default)]
    pub r_com: u32,
    /// `auto` (ceil rule on unit-weight builders, half-difference
    /// otherwise), `ceil`, or `half`.
    #[serde(default)]
    pub penalty: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub name: String,
    /// `fixed`, `adaptive`, `sweep`, `parallel`, or `single_window`.
    pub kind: String,
    #[serde(default)]
    pub r_buf: Option<OneOrMany<u32>>,
    /// 0 means the code distance.
    #[serde(default)]
    pub r_buf_large: u32,
    #[serde(default)]
    pub gap: Option<String>,
    #[serde(default)]
    pub gaps: Vec<String>,
    #[serde(default)]
    pub g_th: Option<f64>,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    /// parallel arms: spacing between stage-1 commits; 0 means r_com.
    #[serde(default)]
    pub gap_rounds: u32,
    /// single-window arms: designated window index.
    #[serde(default)]
    pub index: usize,
}

/// One fully concrete experiment after sweep expansion.
pub struct SubRun {
    pub label: String,
    pub d: u32,
    pub p: f64,
    pub rounds: u32,
    pub r_com: u32,
    pub graph: DecodingGraph,
    pub mode: PenaltyMode,
    pub arms: Vec<Arm>,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config schema: {e}")))?;
    if cfg.shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    if cfg.arms.is_empty() {
        return Err(Error::Config("at least one arm is required".into()));
    }
    for arm in &cfg.arms {
        if arm.name.contains(',') || arm.name.contains('@') {
            return Err(Error::Config(format!(
                "arm name `{}` must not contain ',' or '@'",
                arm.name
            )));
        }
    }
    Ok(cfg)
}

fn gap_kind(name: &str) -> Result<GapKind> {
    name.parse()
}

fn build_arms(cfg: &RunConfig, d: u32) -> Result<Vec<Arm>> {
    let large = |v: u32| if v == 0 { d } else { v };
    let mut arms = Vec::new();
    for ac in &cfg.arms {
        match ac.kind.as_str() {
            "fixed" => {
                let kinds: Result<Vec<GapKind>> = ac.gaps.iter().map(|s| gap_kind(s)).collect();
                let kinds = kinds?;
                let bufs = ac
                    .r_buf
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("arm {}: r_buf required", ac.name)))?
                    .values();
                for r_buf in bufs {
                    let name = if ac.r_buf.as_ref().map(|b| b.values().len()).unwrap_or(1) > 1 {
                        format!("{}{r_buf}", ac.name)
                    } else {
                        ac.name.clone()
                    };
                    arms.push(Arm {
                        name,
                        scheme: ArmScheme::FixedSliding { r_buf },
                        gap_kinds: kinds.clone(),
                    });
                }
            }
            "adaptive" => {
                let kind = gap_kind(
                    ac.gap
                        .as_deref()
                        .ok_or_else(|| Error::Config(format!("arm {}: gap required", ac.name)))?,
                )?;
                let r_buf = one_buf(ac)?;
                arms.push(Arm {
                    name: ac.name.clone(),
                    scheme: ArmScheme::AdaptiveSliding {
                        policy: AdaptivePolicy {
                            gap_kind: kind,
                            g_th: ac.g_th.ok_or_else(|| {
                                Error::Config(format!("arm {}: g_th required", ac.name))
                            })?,
                            r_buf_small: r_buf,
                            r_buf_large: large(ac.r_buf_large),
                        },
                    },
                    gap_kinds: vec![],
                });
            }
            "sweep" => {
                let kind = gap_kind(
                    ac.gap
                        .as_deref()
                        .ok_or_else(|| Error::Config(format!("arm {}: gap required", ac.name)))?,
                )?;
                if ac.thresholds.is_empty() {
                    return Err(Error::Config(format!(
                        "arm {}: thresholds required",
                        ac.name
                    )));
                }
                arms.push(Arm {
                    name: ac.name.clone(),
                    scheme: ArmScheme::AdaptiveSweep {
                        gap_kind: kind,
                        r_buf_small: one_buf(ac)?,
                        r_buf_large: large(ac.r_buf_large),
                        thresholds: ac.thresholds.clone(),
                    },
                    gap_kinds: vec![],
                });
            }
            "parallel" => {
                arms.push(Arm {
                    name: ac.name.clone(),
                    scheme: ArmScheme::Parallel {
                        r_buf: one_buf(ac)?,
                        gap_rounds: ac.gap_rounds,
                    },
                    gap_kinds: vec![],
                });
            }
            "single_window" => {
                let kind = gap_kind(ac.gap.as_deref().unwrap_or("ps_stcg"))?;
                arms.push(Arm {
                    name: ac.name.clone(),
                    scheme: ArmScheme::SingleWindow {
                        index: ac.index,
                        r_buf_small: one_buf(ac)?,
                        r_buf_large: large(ac.r_buf_large),
                        g_th: ac.g_th,
                        gap_kind: kind,
                    },
                    gap_kinds: vec![],
                });
            }
            other => {
                return Err(Error::Config(format!(
                    "arm {}: unknown kind `{other}`",
                    ac.name
                )))
            }
        }
    }
    Ok(arms)
}

fn one_buf(ac: &ArmConfig) -> Result<u32> {
    let bufs = ac
        .r_buf
        .as_ref()
        .ok_or_else(|| Error::Config(format!("arm {}: r_buf required", ac.name)))?
        .values();
    if bufs.len() != 1 {
        return Err(Error::Config(format!(
            "arm {}: exactly one r_buf expected",
            ac.name
        )));
    }
    Ok(bufs[0])
}

/// Expand sweeps over distance and error rate into concrete experiments.
pub fn expand(cfg: &RunConfig) -> Result<Vec<SubRun>> {
    let mut subs = Vec::new();
    match cfg.code.kind.as_str() {
        "repetition" | "surface" => {
            let ds = cfg
                .code
                .distance
                .as_ref()
                .ok_or_else(|| Error::Config("code.distance required".into()))?
                .values();
            let ps = cfg
                .code
                .p
                .as_ref()
                .ok_or_else(|| Error::Config("code.p required".into()))?
                .values();
            for &d in &ds {
                for &p in &ps {
                    let rounds = if cfg.code.rounds == 0 {
                        5 * d
                    } else {
                        cfg.code.rounds
                    };
                    let graph = match cfg.code.kind.as_str() {
                        "repetition" => {
                            build_repetition_graph(d, rounds, p, cfg.code.unit_weights)?
                        }
                        _ => build_surface_graph_phenomenological(
                            d,
                            rounds,
                            p,
                            cfg.code.unit_weights,
                        )?,
                    };
                    let r_com = if cfg.decode.r_com == 0 {
                        (d / 2).max(1)
                    } else {
                        cfg.decode.r_com
                    };
                    let mode = penalty_mode(cfg, &graph, d)?;
                    let label = format!("d{d}_p{}", crate::fmt::fmt_g12(p));
                    subs.push(SubRun {
                        label,
                        d,
                        p,
                        rounds,
                        r_com,
                        arms: build_arms(cfg, d)?,
                        graph,
                        mode,
                    });
                }
            }
        }
        "file" => {
            let path = cfg
                .code
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("code.path required for file kind".into()))?;
            let text = std::fs::read_to_string(path)?;
            let graph = crate::graph_io::load_graph(&text)?;
            graph.validate()?;
            let d = cfg
                .code
                .distance
                .as_ref()
                .map(|d| d.values()[0])
                .unwrap_or(0);
            let r_com = if cfg.decode.r_com == 0 {
                return Err(Error::Config(
                    "decode.r_com required for ingested models".into(),
                ));
            } else {
                cfg.decode.r_com
            };
            let mode = penalty_mode(cfg, &graph, d)?;
            subs.push(SubRun {
                label: "ingested".into(),
                d,
                p: 0.0,
                rounds: graph.rounds,
                r_com,
                arms: build_arms(cfg, if d == 0 { u32::MAX } else { d })?,
                graph,
                mode,
            });
        }
        other => return Err(Error::Config(format!("unknown code kind `{other}`"))),
    }
    Ok(subs)
}

fn penalty_mode(cfg: &RunConfig, graph: &DecodingGraph, d: u32) -> Result<PenaltyMode> {
    match cfg.decode.penalty.as_deref() {
        None | Some("auto") => {
            if cfg.code.unit_weights && graph.code_distance.is_some() {
                Ok(PenaltyMode::CeilHalfD(d))
            } else {
                Ok(PenaltyMode::HalfDifference)
            }
        }
        Some("ceil") => {
            if d == 0 {
                return Err(Error::Config(
                    "ceil penalty needs a code distance".into(),
                ));
            }
            Ok(PenaltyMode::CeilHalfD(d))
        }
        Some("half") => Ok(PenaltyMode::HalfDifference),
        Some(other) => Err(Error::Config(format!("unknown penalty rule `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
shots = 100

[code]
kind = "repetition"
distance = [5, 7]
p = 0.05
unit_weights = true

[decode]
r_com = 0

[[arms]]
name = "fixed"
kind = "fixed"
r_buf = [1, 2]
gaps = ["ps_stcg"]

[[arms]]
name = "sweep"
kind = "sweep"
gap = "ps_stcg"
r_buf = 2
thresholds = [2.0, 4.0]
"#;

    #[test]
    fn parses_and_expands() {
        let cfg = parse_config(SAMPLE).unwrap();
        let subs = expand(&cfg).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].d, 5);
        assert_eq!(subs[0].r_com, 2);
        assert_eq!(subs[1].r_com, 3);
        assert_eq!(subs[0].arms.len(), 3); // fixed1, fixed2, sweep
        assert_eq!(subs[0].arms[0].name, "fixed1");
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = SAMPLE.replace("seed = 7", "seed = 7\nbogus_field = 1");
        let err = parse_config(&bad).unwrap_err();
        assert!(format!("{err}").contains("bogus_field"));
    }

    #[test]
    fn rejects_zero_shots_and_empty_arms() {
        let bad = SAMPLE.replace("shots = 100", "shots = 0");
        assert!(parse_config(&bad).is_err());
        let cfg = parse_config(SAMPLE).unwrap();
        let mut none = cfg.clone();
        none.arms.clear();
        // reparse path used for validation; emulate by toml round trip
        let text = toml::to_string(&none).unwrap();
        assert!(parse_config(&text).is_err());
    }
}
