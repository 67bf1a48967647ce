//! Wide randomized sweep cross-checking all algorithms against the oracle.
//! Usage: stress [n_max] [bound_max] [gen_seeds] [sched_seeds]

use slicing::gen::{generate_trace, GenParams};
use slicing::oracle;
use slicing::predicate::PredicateSpec;
use slicing::sim::{run_simulation, Algorithm};
use slicing::SliceError;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_max: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let bound_max: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let gen_seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(20);
    let sched_seeds: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mut checked = 0u64;
    let mut skipped = 0u64;
    let mut failures = 0u64;
    for n in 2..=n_max {
        for bound in [2, bound_max / 2, bound_max] {
            for p in [0.2, 0.5, 0.8] {
                for gs in 0..gen_seeds {
                    let seed = (n as u64) * 1_000_003 + bound as u64 * 10_007 + (p * 100.0) as u64 * 101 + gs;
                    let trace = generate_trace(&GenParams::new(n, bound.max(1), p, seed)).unwrap();
                    let mut preds = vec![
                        ("channels-empty".to_string(), PredicateSpec::AllChannelsEmpty),
                    ];
                    if let Ok(sp) = PredicateSpec::parse("conj x1>=1", &trace) {
                        preds.push(("conj x1>=1".into(), sp));
                    }
                    if let Ok(sp) = PredicateSpec::parse("conj x1>=0 x2<=2", &trace) {
                        preds.push(("conj x1>=0 x2<=2".into(), sp));
                    }
                    if let Ok(sp) = PredicateSpec::parse("in-transit 1 2 <=1", &trace) {
                        preds.push(("in-transit".into(), sp));
                    }
                    for (name, spec) in &preds {
                        let truth = match oracle::slice_bruteforce(&trace, spec) {
                            Ok(t) => t,
                            Err(SliceError::LatticeBudget { .. }) => {
                                skipped += 1;
                                continue;
                            }
                            Err(e) => panic!("oracle: {e}"),
                        };
                        for ss in 0..sched_seeds {
                            let mut base_msgs = None;
                            for algo in [Algorithm::Central, Algorithm::Dist, Algorithm::DistOpt] {
                                checked += 1;
                                match run_simulation(&trace, spec, algo, ss) {
                                    Ok(out) => {
                                        if out.per_event != truth.per_event {
                                            failures += 1;
                                            println!("DIVERGED {algo:?} n={n} bound={bound} p={p} gen={seed} sched={ss} pred={name}");
                                        }
                                        match algo {
                                            Algorithm::Dist => base_msgs = Some(out.metrics.total_messages),
                                            Algorithm::DistOpt => {
                                                if out.has_duplicate_emissions() {
                                                    failures += 1;
                                                    println!("DUPLICATE n={n} bound={bound} p={p} gen={seed} sched={ss} pred={name}");
                                                }
                                                if name.starts_with("conj") {
                                                    if let Some(b) = base_msgs {
                                                        if out.metrics.total_messages > b {
                                                            failures += 1;
                                                            println!("MSG-REGRESSION n={n} bound={bound} p={p} gen={seed} sched={ss} pred={name}: opt {} > base {b}", out.metrics.total_messages);
                                                        }
                                                    }
                                                }
                                            }
                                            Algorithm::Central => {}
                                        }
                                    }
                                    Err(e) => {
                                        failures += 1;
                                        println!("ERROR {algo:?} n={n} bound={bound} p={p} gen={seed} sched={ss} pred={name}: {e}");
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    println!("checked {checked} runs, {skipped} oracle skips, {failures} failures");
    if failures > 0 {
        std::process::exit(1);
    }
}
