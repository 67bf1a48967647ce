//! Command-line driver: compute slices of message-passing computations with
//! respect to regular predicates, compare the algorithms against each other,
//! and benchmark the distributed variants against the centralized slicer.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slicing::cut::Cut;
use slicing::dot;
use slicing::gen::{generate_trace, GenParams};
use slicing::oracle;
use slicing::predicate::PredicateSpec;
use slicing::sim::{run_simulation, Algorithm, RunMetrics};
use slicing::trace::Trace;
use slicing::tracefile;
use slicing::EventId;

#[derive(Parser)]
#[command(
    name = "slicing",
    about = "Online computation slicing for regular predicates",
    long_about = "Computes the slice of a distributed computation: the set of least \
consistent cuts satisfying a regular predicate, one per event where it exists. \
Predicate grammar: `conj x1>=1 x3<=3` (conjunction of per-process clauses, \
operators < <= = >= >), `channels-empty`, `in-transit FROM TO <=K`; terms may \
be combined with `&&`."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TraceSource {
    /// Trace file to load.
    #[arg(long, conflicts_with = "gen")]
    trace: Option<PathBuf>,
    /// Generator parameters, e.g. n=4,bound=20,p=0.8,seed=1
    #[arg(long)]
    gen: Option<String>,
}

impl TraceSource {
    fn load(&self) -> Result<Trace> {
        match (&self.trace, &self.gen) {
            (Some(path), None) => {
                tracefile::load_trace(path).with_context(|| format!("loading {}", path.display()))
            }
            (None, Some(params)) => {
                let params = parse_gen(params)?;
                Ok(generate_trace(&params)?)
            }
            _ => bail!("exactly one of --trace and --gen is required"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute and print a slice.
    Slice {
        #[command(flatten)]
        source: TraceSource,
        /// Predicate text.
        #[arg(long)]
        pred: String,
        /// oracle, central, dist or dist-opt.
        #[arg(long, default_value = "oracle")]
        algo: String,
        /// Scheduler seed for the simulated algorithms.
        #[arg(long, default_value = "1")]
        seeds: String,
        /// Print each cut once.
        #[arg(long)]
        dedupe: bool,
        /// Write computation and slice graphs into this directory.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write run metrics as key=value lines.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Generate a random trace file.
    Generate {
        /// Generator parameters, e.g. n=4,bound=20,p=0.8,seed=1
        #[arg(long)]
        gen: String,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several algorithms and verify they produce the same slice.
    Compare {
        #[command(flatten)]
        source: TraceSource,
        #[arg(long)]
        pred: String,
        /// Comma-separated algorithms (oracle,central,dist,dist-opt).
        #[arg(long, default_value = "oracle,central,dist,dist-opt")]
        algos: String,
        /// Comma-separated scheduler seeds.
        #[arg(long, default_value = "1")]
        seeds: String,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Sweep process counts and compare centralized and distributed costs.
    Bench {
        #[arg(long, default_value = "2")]
        n_min: usize,
        #[arg(long, default_value = "10")]
        n_max: usize,
        #[arg(long, default_value = "100")]
        bound: u32,
        #[arg(long, default_value = "0.8")]
        p: f64,
        /// conj or channels-empty.
        #[arg(long, default_value = "conj")]
        pred_kind: String,
        /// Comma-separated generator seeds.
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Slice {
            source,
            pred,
            algo,
            seeds,
            dedupe,
            dot,
            metrics,
        } => cmd_slice(&source, &pred, &algo, &seeds, dedupe, dot, metrics),
        Command::Generate { gen, out } => {
            let params = parse_gen(&gen)?;
            let trace = generate_trace(&params)?;
            tracefile::save_trace(&trace, &out)?;
            println!(
                "wrote {} events on {} processes to {}",
                trace.total_events(),
                trace.n(),
                out.display()
            );
            Ok(0)
        }
        Command::Compare {
            source,
            pred,
            algos,
            seeds,
            metrics,
        } => cmd_compare(&source, &pred, &algos, &seeds, metrics),
        Command::Bench {
            n_min,
            n_max,
            bound,
            p,
            pred_kind,
            seeds,
            metrics,
        } => cmd_bench(n_min, n_max, bound, p, &pred_kind, &seeds, metrics),
    }
}

fn parse_gen(s: &str) -> Result<GenParams> {
    let mut n = None;
    let mut bound = None;
    let mut p = None;
    let mut seed = 1u64;
    let mut var_range = (-2i64, 5i64);
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("bad generator parameter {part}"))?;
        match k.trim() {
            "n" => n = Some(v.parse()?),
            "bound" => bound = Some(v.parse()?),
            "p" => p = Some(v.parse()?),
            "seed" => seed = v.parse()?,
            "vmin" => var_range.0 = v.parse()?,
            "vmax" => var_range.1 = v.parse()?,
            other => bail!("unknown generator parameter {other}"),
        }
    }
    let mut params = GenParams::new(
        n.ok_or_else(|| anyhow!("generator needs n=..."))?,
        bound.ok_or_else(|| anyhow!("generator needs bound=..."))?,
        p.ok_or_else(|| anyhow!("generator needs p=..."))?,
        seed,
    );
    params.var_range = var_range;
    Ok(params)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| anyhow!("bad seed {t}: {e}")))
        .collect()
}

/// One slice view, regardless of which algorithm produced it.
struct SliceView {
    /// Emission-ordered records (owner, generator, cut).
    records: Vec<(u32, EventId, Cut)>,
    unique: BTreeSet<Cut>,
    metrics: Option<RunMetrics>,
}

fn compute_slice(trace: &Trace, spec: &PredicateSpec, algo: &str, seed: u64) -> Result<SliceView> {
    if algo == "oracle" {
        let slice = oracle::slice_bruteforce(trace, spec)?;
        let records = slice
            .defined_pairs()
            .map(|(e, c)| (e.pid.get(), e, c.clone()))
            .collect();
        return Ok(SliceView {
            records,
            unique: slice.unique_cuts,
            metrics: None,
        });
    }
    let algorithm = Algorithm::parse(algo).ok_or_else(|| anyhow!("unknown algorithm {algo}"))?;
    let out = run_simulation(trace, spec, algorithm, seed)?;
    Ok(SliceView {
        records: out
            .records
            .iter()
            .map(|r| (r.owner.get(), r.event, r.cut.clone()))
            .collect(),
        unique: out.unique_cuts(),
        metrics: Some(out.metrics),
    })
}

fn cmd_slice(
    source: &TraceSource,
    pred: &str,
    algo: &str,
    seeds: &str,
    dedupe: bool,
    dot_dir: Option<PathBuf>,
    metrics_path: Option<PathBuf>,
) -> Result<i32> {
    let trace = source.load()?;
    let spec = PredicateSpec::parse(pred, &trace)?;
    let seed = *parse_seeds(seeds)?.first().unwrap_or(&1);
    let view = compute_slice(&trace, &spec, algo, seed)?;
    let mut seen = BTreeSet::new();
    for (owner, event, cut) in &view.records {
        if dedupe && !seen.insert(cut.clone()) {
            continue;
        }
        println!("owner={owner} event={event} cut={cut}");
    }
    println!("unique cuts: {}", view.unique.len());
    for cut in &view.unique {
        println!("  {cut}");
    }
    if let Some(dir) = dot_dir {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("computation.dot"), dot::computation_dot(&trace))?;
        let slice = oracle::slice_bruteforce(&trace, &spec)?;
        std::fs::write(dir.join("slice.dot"), dot::slice_dot(&slice))?;
        println!("wrote graphs to {}", dir.display());
    }
    if let Some(path) = metrics_path {
        let text = match &view.metrics {
            Some(m) => metrics_kv(algo, m),
            None => format!("algo={algo}\nunique_cuts={}\n", view.unique.len()),
        };
        std::fs::write(&path, text)?;
    }
    Ok(0)
}

fn metrics_kv(algo: &str, m: &RunMetrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "algo={algo}");
    let _ = writeln!(out, "scheduler_steps={}", m.scheduler_steps);
    let _ = writeln!(out, "total_messages={}", m.total_messages);
    for (i, s) in m.per_slicer.iter().enumerate() {
        let _ = writeln!(
            out,
            "slicer{}.messages={} slicer{}.peak_storage={} slicer{}.outputs={}",
            i + 1,
            s.messages_received(),
            i + 1,
            s.peak_storage,
            i + 1,
            s.outputs
        );
    }
    out
}

fn cmd_compare(
    source: &TraceSource,
    pred: &str,
    algos: &str,
    seeds: &str,
    metrics_path: Option<PathBuf>,
) -> Result<i32> {
    let trace = source.load()?;
    let spec = PredicateSpec::parse(pred, &trace)?;
    let algos: Vec<&str> = algos.split(',').map(str::trim).collect();
    if algos.len() < 2 {
        bail!("compare needs at least two algorithms");
    }
    let seeds = parse_seeds(seeds)?;
    let mut reference: Option<(String, BTreeSet<Cut>)> = None;
    let mut table = String::from("algorithm\tseed\tmessages\tmax_msgs_per_slicer\tmax_peak_storage\toutputs\tunique_cuts\n");
    let mut all_match = true;
    let mut first_diff = String::new();
    for algo in &algos {
        let algo_seeds: &[u64] = if *algo == "oracle" { &seeds[..1] } else { &seeds };
        for &seed in algo_seeds {
            let view = compute_slice(&trace, &spec, algo, seed)?;
            let (msgs, maxm, maxs, outs) = match &view.metrics {
                Some(m) => (
                    m.total_messages.to_string(),
                    m.max_messages_per_slicer().to_string(),
                    m.max_peak_storage().to_string(),
                    m.per_slicer.iter().map(|s| s.outputs).sum::<u64>().to_string(),
                ),
                None => ("-".into(), "-".into(), "-".into(), view.records.len().to_string()),
            };
            let _ = writeln!(
                table,
                "{algo}\t{seed}\t{msgs}\t{maxm}\t{maxs}\t{outs}\t{}",
                view.unique.len()
            );
            match &reference {
                None => reference = Some((algo.to_string(), view.unique.clone())),
                Some((ref_name, ref_cuts)) => {
                    if *ref_cuts != view.unique && all_match {
                        all_match = false;
                        let missing = ref_cuts.difference(&view.unique).next();
                        let extra = view.unique.difference(ref_cuts).next();
                        let diff = missing.or(extra).cloned();
                        first_diff = format!(
                            "{algo} (seed {seed}) disagrees with {ref_name}: first differing cut {}",
                            diff.map(|c| c.to_string()).unwrap_or_default()
                        );
                    }
                }
            }
        }
    }
    print!("{table}");
    if let Some(path) = metrics_path {
        std::fs::write(&path, &table)?;
    }
    if all_match {
        println!("result: identical slices across {} algorithms", algos.len());
        Ok(0)
    } else {
        println!("result: MISMATCH — {first_diff}");
        Ok(1)
    }
}

fn cmd_bench(
    n_min: usize,
    n_max: usize,
    bound: u32,
    p: f64,
    pred_kind: &str,
    seeds: &str,
    metrics_path: Option<PathBuf>,
) -> Result<i32> {
    let seeds = parse_seeds(seeds)?;
    let mut table =
        String::from("n\tevents\tspace_ratio\tcentral_msgs\tdistopt_max_msgs_per_slicer\n");
    for n in n_min..=n_max {
        let mut ratios = Vec::new();
        let mut central_msgs = Vec::new();
        let mut dist_msgs = Vec::new();
        let mut events = Vec::new();
        for &seed in &seeds {
            let trace = generate_trace(&GenParams::new(n, bound, p, seed))?;
            let spec = match pred_kind {
                "conj" => {
                    let clauses: Vec<String> =
                        (1..=n).map(|i| format!("x{i}>=-1")).collect();
                    PredicateSpec::parse(&format!("conj {}", clauses.join(" ")), &trace)?
                }
                "channels-empty" => PredicateSpec::AllChannelsEmpty,
                other => bail!("unknown predicate kind {other}"),
            };
            let central = run_simulation(&trace, &spec, Algorithm::Central, seed)?;
            let dist = run_simulation(&trace, &spec, Algorithm::DistOpt, seed)?;
            let c_peak = central.metrics.max_peak_storage() as f64;
            let d_peak = dist.metrics.max_peak_storage() as f64;
            ratios.push(d_peak / c_peak);
            central_msgs.push(central.metrics.total_messages as f64);
            dist_msgs.push(dist.metrics.max_messages_per_slicer() as f64);
            events.push(trace.total_events() as f64);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(
            table,
            "{n}\t{:.0}\t{:.4}\t{:.0}\t{:.0}",
            mean(&events),
            mean(&ratios),
            mean(&central_msgs),
            mean(&dist_msgs)
        );
    }
    print!("{table}");
    if let Some(path) = metrics_path {
        std::fs::write(&path, &table)?;
    }
    Ok(0)
}
