//! Command-line front end: graph construction and validation, Monte Carlo
//! runs, prediction tables, and the self-test oracle suite.

use clap::{Args, Parser, Subcommand};
use gapwin::analysis::{
    min_of_n_distribution, predict_tradeoff, predict_tradeoff_exact, total_variation,
    universality_check, ConditionalRateCurve, GapDistribution, FIT_MIN_FAILURES,
};
use gapwin::config::{expand, parse_config, RunConfig, SubRun};
use gapwin::error::{Error, Result};
use gapwin::fmt::fmt_g12;
use gapwin::gaps::GapKind;
use gapwin::graph::{
    build_repetition_graph, build_surface_graph_phenomenological, compute_boundary_distances,
};
use gapwin::graph_io::{load_graph, save_graph};
use gapwin::sim::{run_experiment, CondBin, Experiment, GapHistogram};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "+",
    env!("GAPWIN_GIT_DESCRIBE")
);

#[derive(Parser)]
#[command(name = "gapwin", version = VERSION, about = "window decoding with gap-driven adaptive buffers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build, ingest, or validate decoding graph files.
    Graph(GraphArgs),
    /// Run a Monte Carlo experiment from a config file.
    Run(RunArgs),
    /// Produce prediction tables from a prior run.
    Predict(PredictArgs),
    /// Run the built-in oracle suites.
    Selftest {
        /// Smaller instance counts.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Code family to construct: repetition or surface.
    #[arg(long)]
    code: Option<String>,
    #[arg(short = 'd', long)]
    distance: Option<u32>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(short = 'p', long)]
    prob: Option<f64>,
    #[arg(long)]
    unit_weights: bool,
    /// Ingest a detector-model or graph file instead of constructing.
    #[arg(long)]
    ingest: Option<PathBuf>,
    /// Validate a graph file and exit.
    #[arg(long)]
    validate: Option<PathBuf>,
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the configured shot count.
    #[arg(long)]
    shots: Option<u64>,
    /// Override the configured seed (GAPWIN_SEED also overrides).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Output is identical either way.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    /// Run directory produced by `gapwin run`.
    #[arg(long)]
    from: PathBuf,
    /// Additional run directories for the universality comparison.
    #[arg(long)]
    compare: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Arm to read the gap distribution from.
    #[arg(long)]
    arm: String,
    #[arg(long, default_value = "ps_stcg")]
    kind: String,
    /// Histogram scope: window, interior, or min.
    #[arg(long, default_value = "window")]
    scope: String,
    /// Sub-run label when the config swept d or p.
    #[arg(long)]
    label: Option<String>,
    /// Windows per shot for the minimum-of-n prediction.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Override the measured global logical error rate.
    #[arg(long)]
    global_ler: Option<f64>,
    /// Extrapolation request `p_ref:p_target:d:p_th`.
    #[arg(long)]
    extrapolate: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Graph(a) => cmd_graph(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Selftest { quick } => cmd_selftest(quick),
    }
}

fn cmd_graph(a: GraphArgs) -> Result<()> {
    if let Some(path) = &a.validate {
        let text = std::fs::read_to_string(path)?;
        let g = load_graph(&text)?;
        g.validate()?;
        println!(
            "ok: {} nodes, {} edges, {} rounds",
            g.num_nodes(),
            g.num_edges(),
            g.rounds
        );
        return Ok(());
    }
    let g = if let Some(path) = &a.ingest {
        let text = std::fs::read_to_string(path)?;
        let g = load_graph(&text)?;
        g.validate()?;
        g
    } else {
        let code = a
            .code
            .as_deref()
            .ok_or_else(|| Error::Domain("--code or --ingest required".into()))?;
        let d = a
            .distance
            .ok_or_else(|| Error::Domain("--distance required".into()))?;
        let rounds = a.rounds.unwrap_or(5 * d);
        let p = a.prob.ok_or_else(|| Error::Domain("--prob required".into()))?;
        match code {
            "repetition" => build_repetition_graph(d, rounds, p, a.unit_weights)?,
            "surface" => build_surface_graph_phenomenological(d, rounds, p, a.unit_weights)?,
            other => return Err(Error::Domain(format!("unknown code `{other}`"))),
        }
    };
    let text = save_graph(&g);
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

struct CsvSink {
    out_dir: PathBuf,
    files: Vec<String>,
}

impl CsvSink {
    fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(CsvSink {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.out_dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn manifest(&self, config: serde_json::Value, seed: u64, wall: f64) -> Result<()> {
        let path = self.out_dir.join("manifest.json");
        let mut entries: Vec<serde_json::Value> = if path.exists() {
            serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|e| Error::Internal(format!("manifest: {e}")))?
        } else {
            Vec::new()
        };
        entries.push(serde_json::json!({
            "version": VERSION,
            "seed": seed,
            "wall_clock_seconds": wall,
            "config": config,
            "outputs": self.files,
        }));
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&entries).map_err(|e| Error::Internal(e.to_string()))?,
        )?;
        Ok(())
    }
}

fn hist_rows(
    rows: &mut String,
    prefix: &str,
    arm: &str,
    kind: GapKind,
    scope: &str,
    h: &GapHistogram,
) {
    for (&key, &count) in &h.counts {
        let _ = writeln!(
            rows,
            "{prefix},{arm},{},{scope},{},{count},{}",
            kind.name(),
            fmt_g12(h.value_of(key)),
            fmt_g12(count as f64 / h.total.max(1) as f64)
        );
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&a.config)?;
    let mut cfg: RunConfig = parse_config(&text)?;
    if let Some(shots) = a.shots {
        cfg.shots = shots;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Ok(env_seed) = std::env::var("GAPWIN_SEED") {
        cfg.seed = env_seed
            .parse()
            .map_err(|_| Error::Config("GAPWIN_SEED must be an integer".into()))?;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if cfg.workers == 0 {
        cfg.workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
    }
    if cfg.shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }

    let subs = expand(&cfg)?;
    let mut aggregates = String::from(
        "label,d,p,arm,shots,fails,ler,ler_se,global_fails,global_ler,global_se,\
         window_induced,reverse,switch_windows,nonterminal_windows,total_windows,\
         switch_rate,avg_buffer\n",
    );
    let mut gap_hist = String::from("label,d,p,arm,kind,scope,gap,count,prob\n");
    let mut cond_rate =
        String::from("label,d,p,arm,kind,gap,shots,window_induced,reverse,rate,se\n");
    let mut records =
        String::from("label,shot,global_fail,window_fail,min_gap,switch_count,avg_buffer\n");
    for sub in &subs {
        run_sub(&cfg, sub, &mut aggregates, &mut gap_hist, &mut cond_rate, &mut records)?;
    }
    let mut sink = CsvSink::new(&a.out)?;
    sink.write("aggregates.csv", &aggregates)?;
    sink.write("gap_hist.csv", &gap_hist)?;
    sink.write("cond_rate.csv", &cond_rate)?;
    if cfg.record_shots {
        sink.write("records.csv", &records)?;
    }
    let config_json = serde_json::to_value(&cfg).map_err(|e| Error::Internal(e.to_string()))?;
    sink.manifest(config_json, cfg.seed, start.elapsed().as_secs_f64())?;
    println!("wrote {} tables to {}", sink.files.len(), a.out.display());
    Ok(())
}

fn run_sub(
    cfg: &RunConfig,
    sub: &SubRun,
    aggregates: &mut String,
    gap_hist: &mut String,
    cond_rate: &mut String,
    records: &mut String,
) -> Result<()> {
    let dist = compute_boundary_distances(&sub.graph)?;
    let exp = Experiment {
        graph: &sub.graph,
        dist,
        mode: sub.mode,
        r_com: sub.r_com,
        shots: cfg.shots,
        seed: cfg.seed,
        bin_width: cfg.bin_width,
        arms: sub.arms.clone(),
        workers: cfg.workers,
        record_shots: cfg.record_shots,
    };
    let res = run_experiment(&exp)?;
    let prefix = format!("{},{},{}", sub.label, sub.d, fmt_g12(sub.p));
    for arm in &res.arms {
        let _ = writeln!(
            aggregates,
            "{prefix},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            arm.name,
            res.shots,
            arm.fail.count,
            fmt_g12(arm.fail.rate()),
            fmt_g12(arm.fail.se()),
            res.global_fail.count,
            fmt_g12(res.global_fail.rate()),
            fmt_g12(res.global_fail.se()),
            arm.window_induced,
            arm.reverse,
            arm.switch_windows,
            arm.nonterminal_windows,
            arm.total_windows,
            fmt_g12(arm.switch_rate()),
            fmt_g12(arm.avg_buffer())
        );
        for (kind, stats) in &arm.per_kind {
            hist_rows(gap_hist, &prefix, &arm.name, *kind, "window", &stats.per_window);
            hist_rows(gap_hist, &prefix, &arm.name, *kind, "interior", &stats.interior);
            hist_rows(gap_hist, &prefix, &arm.name, *kind, "min", &stats.min_gap);
            for (&key, bin) in &stats.cond {
                let rate = if bin.shots == 0 {
                    0.0
                } else {
                    bin.window_induced as f64 / bin.shots as f64
                };
                let _ = writeln!(
                    cond_rate,
                    "{prefix},{},{},{},{},{},{},{},{}",
                    arm.name,
                    kind.name(),
                    fmt_g12(stats.min_gap.value_of(key)),
                    bin.shots,
                    bin.window_induced,
                    bin.reverse,
                    fmt_g12(rate),
                    fmt_g12(gapwin::sim::wilson_se(bin.window_induced, bin.shots.max(1)))
                );
            }
        }
    }
    for r in &res.records {
        let _ = writeln!(
            records,
            "{},{},{},{},{},{},{}",
            sub.label,
            r.shot_index,
            r.global_fail as u8,
            r.window_fail as u8,
            r.min_gap.map(fmt_g12).unwrap_or_default(),
            r.switch_count,
            fmt_g12(r.avg_buffer)
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// predict

struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Validation(format!("{}: empty csv", path.display())))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        Ok(CsvTable { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("missing column `{name}`")))
    }
}

struct LoadedRun {
    dist_hist: BTreeMap<i64, u64>,
    cond: BTreeMap<i64, CondBin>,
    global_ler: f64,
    bin_int: i64,
}

fn load_run(
    dir: &Path,
    label: Option<&str>,
    arm: &str,
    kind: &str,
    scope: &str,
    bin_width: f64,
) -> Result<LoadedRun> {
    let bin_int = gapwin::graph::quantize_weight(bin_width).max(1);
    let key_of = |gap: f64| -> i64 { gapwin::graph::quantize_weight(gap).div_euclid(bin_int) };

    let hist = CsvTable::read(&dir.join("gap_hist.csv"))?;
    let (lc, ac, kc, sc, gc, cc) = (
        hist.col("label")?,
        hist.col("arm")?,
        hist.col("kind")?,
        hist.col("scope")?,
        hist.col("gap")?,
        hist.col("count")?,
    );
    let mut dist_hist: BTreeMap<i64, u64> = BTreeMap::new();
    for row in &hist.rows {
        if row.len() <= cc {
            continue;
        }
        if row[ac] != arm || row[kc] != kind || row[sc] != scope {
            continue;
        }
        if let Some(l) = label {
            if row[lc] != l {
                continue;
            }
        }
        let gap: f64 = row[gc]
            .parse()
            .map_err(|_| Error::Validation("bad gap value".into()))?;
        let count: u64 = row[cc]
            .parse()
            .map_err(|_| Error::Validation("bad count".into()))?;
        *dist_hist.entry(key_of(gap)).or_insert(0) += count;
    }
    if dist_hist.is_empty() {
        return Err(Error::Validation(format!(
            "no gap histogram rows for arm `{arm}` kind `{kind}` scope `{scope}`"
        )));
    }

    let cond_table = CsvTable::read(&dir.join("cond_rate.csv"))?;
    let (lc, ac, kc, gc, shc, wic, rvc) = (
        cond_table.col("label")?,
        cond_table.col("arm")?,
        cond_table.col("kind")?,
        cond_table.col("gap")?,
        cond_table.col("shots")?,
        cond_table.col("window_induced")?,
        cond_table.col("reverse")?,
    );
    let mut cond: BTreeMap<i64, CondBin> = BTreeMap::new();
    for row in &cond_table.rows {
        if row.len() <= rvc {
            continue;
        }
        if row[ac] != arm || row[kc] != kind {
            continue;
        }
        if let Some(l) = label {
            if row[lc] != l {
                continue;
            }
        }
        let gap: f64 = row[gc]
            .parse()
            .map_err(|_| Error::Validation("bad gap".into()))?;
        let e = cond.entry(key_of(gap)).or_default();
        e.shots += row[shc]
            .parse::<u64>()
            .map_err(|_| Error::Validation("bad shots".into()))?;
        e.window_induced += row[wic]
            .parse::<u64>()
            .map_err(|_| Error::Validation("bad window_induced".into()))?;
        e.reverse += row[rvc]
            .parse::<u64>()
            .map_err(|_| Error::Validation("bad reverse".into()))?;
    }

    let agg = CsvTable::read(&dir.join("aggregates.csv"))?;
    let (lc, ac, glc) = (agg.col("label")?, agg.col("arm")?, agg.col("global_ler")?);
    let mut global_ler = None;
    for row in &agg.rows {
        if row.len() <= glc || row[ac] != arm {
            continue;
        }
        if let Some(l) = label {
            if row[lc] != l {
                continue;
            }
        }
        global_ler = Some(
            row[glc]
                .parse::<f64>()
                .map_err(|_| Error::Validation("bad global_ler".into()))?,
        );
    }
    let global_ler = global_ler
        .ok_or_else(|| Error::Validation(format!("arm `{arm}` not found in aggregates.csv")))?;
    Ok(LoadedRun {
        dist_hist,
        cond,
        global_ler,
        bin_int,
    })
}

fn distribution_of(run: &LoadedRun) -> GapDistribution {
    let total: u64 = run.dist_hist.values().sum();
    GapDistribution {
        bin_int: run.bin_int,
        keys: run.dist_hist.keys().copied().collect(),
        pmf: run
            .dist_hist
            .values()
            .map(|&c| c as f64 / total as f64)
            .collect(),
        shots: total,
    }
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let start = Instant::now();
    let bin_width = 0.5;
    let run = load_run(
        &a.from,
        a.label.as_deref(),
        &a.arm,
        &a.kind,
        &a.scope,
        bin_width,
    )?;
    let p = distribution_of(&run);
    p.validate()?;
    let global = a.global_ler.unwrap_or(run.global_ler);

    let mut sink = CsvSink::new(&a.out)?;

    // minimum over n windows
    let min_n = min_of_n_distribution(&p, a.n)?;
    let mut min_csv = String::from("n,gap,prob\n");
    for i in 0..min_n.keys.len() {
        let _ = writeln!(
            min_csv,
            "{},{},{}",
            a.n,
            fmt_g12(min_n.value(i)),
            fmt_g12(min_n.pmf[i])
        );
    }
    sink.write("min_of_n.csv", &min_csv)?;

    // trade-off sweep over the support plus a point beyond it
    let mut cond_fail = ConditionalRateCurve::from_cond(&run.cond, run.bin_int);
    cond_fail.fit_exponential(FIT_MIN_FAILURES);
    let cond_nofit = ConditionalRateCurve::from_cond(&run.cond, run.bin_int);
    let reverse_cond: BTreeMap<i64, CondBin> = run
        .cond
        .iter()
        .map(|(&k, b)| {
            (
                k,
                CondBin {
                    shots: b.shots,
                    window_induced: b.reverse,
                    reverse: 0,
                },
            )
        })
        .collect();
    let cond_reverse = ConditionalRateCurve::from_cond(&reverse_cond, run.bin_int);
    let mut thresholds: Vec<f64> = p
        .keys
        .iter()
        .map(|&k| gapwin::graph::weight_to_f64(k * p.bin_int))
        .collect();
    thresholds.push(thresholds.last().copied().unwrap_or(0.0) + bin_width);
    let mut tr_csv = String::from("g_th,variant,p_l,p_switch,missing_bins\n");
    for &th in &thresholds {
        for (variant, point) in [
            ("approx", predict_tradeoff(&p, &cond_fail, global, th)?),
            ("approx_nofit", predict_tradeoff(&p, &cond_nofit, global, th)?),
            (
                "exact",
                predict_tradeoff_exact(&p, &cond_fail, &cond_reverse, global, th)?,
            ),
        ] {
            let _ = writeln!(
                tr_csv,
                "{},{variant},{},{},{}",
                fmt_g12(th),
                fmt_g12(point.p_l),
                fmt_g12(point.p_switch),
                point.missing_bins
            );
        }
    }
    sink.write("tradeoff.csv", &tr_csv)?;

    // universality across runs
    let mut uni_csv = String::from("gap,z\n");
    if !a.compare.is_empty() {
        let mut curves = vec![cond_nofit.clone()];
        for dir in &a.compare {
            let other = load_run(
                dir,
                a.label.as_deref(),
                &a.arm,
                &a.kind,
                &a.scope,
                bin_width,
            )?;
            curves.push(ConditionalRateCurve::from_cond(&other.cond, other.bin_int));
        }
        let report = universality_check(&curves, 3.0, 50);
        for b in &report.bins {
            let _ = writeln!(uni_csv, "{},{}", fmt_g12(b.value), fmt_g12(b.z));
        }
        println!(
            "universality: comparable={} max|z|={} pass={}",
            report.comparable,
            fmt_g12(report.max_abs_z),
            report.pass
        );
    }
    sink.write("universality.csv", &uni_csv)?;

    // extrapolation
    let mut ex_csv = String::from("p_ref,p_target,d,p_th,p_l_ref,p_l_target\n");
    if let Some(spec) = &a.extrapolate {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Config(
                "--extrapolate expects p_ref:p_target:d:p_th".into(),
            ));
        }
        let p_ref: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Config("bad p_ref".into()))?;
        let p_target: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config("bad p_target".into()))?;
        let d: u32 = parts[2].parse().map_err(|_| Error::Config("bad d".into()))?;
        let p_th: f64 = parts[3]
            .parse()
            .map_err(|_| Error::Config("bad p_th".into()))?;
        let target = gapwin::analysis::extrapolate_global_ler(global, p_ref, p_target, d, p_th)?;
        let _ = writeln!(
            ex_csv,
            "{},{},{d},{},{},{}",
            fmt_g12(p_ref),
            fmt_g12(p_target),
            fmt_g12(p_th),
            fmt_g12(global),
            fmt_g12(target)
        );
    }
    sink.write("extrapolation.csv", &ex_csv)?;

    // self-consistency: with n = 1 the prediction echoes the input
    if a.n == 1 {
        let tv = total_variation(&p, &min_n);
        if tv > 1e-12 {
            return Err(Error::Internal(format!(
                "n=1 prediction drifted from input (tv {tv})"
            )));
        }
    }
    sink.manifest(
        serde_json::json!({
            "from": a.from.display().to_string(),
            "arm": a.arm, "kind": a.kind, "scope": a.scope, "n": a.n,
        }),
        0,
        start.elapsed().as_secs_f64(),
    )?;
    println!("wrote prediction tables to {}", a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// selftest

fn cmd_selftest(quick: bool) -> Result<()> {
    use gapwin::dijkstra::Csr;
    use gapwin::matcher::{brute_force_decode, Label, Matcher, SyndromeLabels};

    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // graph construction invariants
    let mut counts_ok = true;
    for d in [3u32, 5, 7] {
        for rounds in 1..=6u32 {
            let g = build_repetition_graph(d, rounds, 0.05, true)?;
            let bulk = g.nodes.iter().filter(|n| !n.kind.is_boundary()).count();
            counts_ok &= bulk == ((d - 1) * rounds) as usize
                && g.num_edges() == (d * rounds + (d - 1) * (rounds - 1)) as usize;
            counts_ok &= g.validate().is_ok();
        }
    }
    check("construction counts match closed forms", counts_ok);

    // distance maps
    let g = build_repetition_graph(7, 10, 0.05, true)?;
    let dm = compute_boundary_distances(&g)?;
    let mut dist_ok = true;
    for (v, nd) in g.nodes.iter().enumerate() {
        if !nd.kind.is_boundary() {
            dist_ok &= dm.d_left[v] + dm.d_right[v] == 7 * gapwin::graph::WEIGHT_UNIT;
        }
    }
    for e in &g.edges {
        dist_ok &= (dm.d_left[e.u as usize] - dm.d_left[e.v as usize]).abs() <= e.iweight;
    }
    check("distance maps satisfy lattice identities", dist_ok);

    // matcher vs brute force on random instances
    let instances = if quick { 60 } else { 300 };
    let mut state = 0x00c0ffee1234u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut matcher = Matcher::new();
    let mut agree = true;
    for round in 0..instances {
        let d = [3u32, 5][(next() % 2) as usize];
        let rounds = 1 + (next() % 3) as u32;
        let g = build_repetition_graph(d, rounds, 0.05, true)?;
        if g.num_edges() > 20 {
            continue;
        }
        let csr = Csr::from_graph(&g);
        let mut labels = SyndromeLabels::all_zero(g.num_nodes());
        labels.set(g.boundary_left.unwrap(), Label::Free);
        labels.set(g.boundary_right.unwrap(), Label::Free);
        for v in 0..g.num_nodes() as u32 {
            if !g.nodes[v as usize].kind.is_boundary() && next() % 100 < 35 {
                labels.set(v, Label::One);
            }
        }
        if round % 4 == 0 {
            labels.parity_flip(g.boundary_left.unwrap());
            labels.parity_flip(g.boundary_right.unwrap());
        }
        match (
            matcher.decode(&g, &csr, &labels, None),
            brute_force_decode(&g, &labels),
        ) {
            (Ok(fast), Ok(slow)) => agree &= fast.chain.iweight == slow.iweight,
            (Err(_), Err(_)) => {}
            _ => agree = false,
        }
    }
    check("decode agrees with the exhaustive oracle", agree);

    // gap sanity on a block of random shots
    let d = 5;
    let g = build_repetition_graph(d, 15, 0.05, true)?;
    let dist = compute_boundary_distances(&g)?;
    let mode = gapwin::gaps::PenaltyMode::CeilHalfD(d);
    let base = gapwin::sim::base_labels(&g);
    let mut env = gapwin::window::DecodeEnv::new(&g, true);
    let shots = if quick { 50 } else { 400 };
    let mut gap_ok = true;
    for s in 0..shots {
        let (_, sigma) = gapwin::sim::sample_error(&g, &base, &mut gapwin::sim::shot_rng(31, s));
        let spec = gapwin::window::WindowSpec {
            w_start: 0,
            w_end: 4,
            c_start: 0,
            c_end: 2,
            past_virtual: false,
            future_virtual: true,
        };
        let geo = env.geometry(spec)?;
        let labels = gapwin::window::window_labels(&geo, &sigma);
        let emin = env.decode_window(&geo, &labels)?;
        let (sg, _) = gapwin::gaps::stcg(&mut env.matcher, &geo, &labels, &emin)?;
        let dsg = gapwin::gaps::ds_stcg(&mut env.matcher, &geo, &labels, &emin, &dist, mode)?;
        let psg = gapwin::gaps::ps_stcg(&mut env.matcher, &geo, &labels, &emin, &dist, mode)?;
        gap_ok &= sg.value_int >= 0 && dsg.value_int >= sg.value_int && psg.value_int >= 0;
    }
    check("window gaps nonnegative and ordered", gap_ok);

    // windowed decoding reproduces the syndrome
    let mut consist_ok = true;
    for s in 0..shots {
        let (_, sigma) = gapwin::sim::sample_error(&g, &base, &mut gapwin::sim::shot_rng(77, s));
        let (chain, _) = gapwin::window::sliding_decode(&mut env, &sigma, 2, 2)?;
        let mut par = vec![false; g.num_nodes()];
        for &k in &chain.edges {
            let e = &g.edges[k as usize];
            par[e.u as usize] ^= true;
            par[e.v as usize] ^= true;
        }
        for (v, nd) in g.nodes.iter().enumerate() {
            if !nd.kind.is_boundary() {
                consist_ok &= par[v] == (sigma.labels[v] == Label::One);
            }
        }
    }
    check("sliding commits reproduce the syndrome", consist_ok);

    if failures > 0 {
        return Err(Error::Validation(format!(
            "{failures} selftest group(s) failed"
        )));
    }
    println!("selftest passed");
    Ok(())
}
