//! Scratch harness for replaying one simulated run with full logging.

use slicing::gen::{generate_trace, GenParams};
use slicing::predicate::PredicateSpec;
use slicing::sim::{run_simulation, Algorithm};
use slicing::tracefile::format_trace;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let bound: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let p: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.6);
    let gen_seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
    let sched_seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0);
    let pred = args
        .get(6)
        .cloned()
        .unwrap_or_else(|| "channels-empty".into());

    let trace = generate_trace(&GenParams::new(n, bound, p, gen_seed)).unwrap();
    println!("=== trace ===\n{}", format_trace(&trace));
    let spec = PredicateSpec::parse(&pred, &trace).unwrap();
    let truth = slicing::oracle::slice_bruteforce(&trace, &spec).unwrap();
    println!("=== oracle ===");
    for (e, c) in &truth.per_event {
        println!("  jb({e:?}) = {c:?}");
    }
    for algo in [Algorithm::Dist, Algorithm::DistOpt] {
        println!("=== {algo:?} seed {sched_seed} ===");
        match run_simulation(&trace, &spec, algo, sched_seed) {
            Ok(out) => {
                for r in &out.records {
                    println!("  output owner={} event={:?} cut={}", r.owner, r.event, r.cut);
                }
                println!(
                    "  messages={} steps={}",
                    out.metrics.total_messages, out.metrics.scheduler_steps
                );
                if out.per_event != truth.per_event {
                    println!("  !! per-event map diverged:");
                    for (e, want) in &truth.per_event {
                        let got = out.per_event.get(e);
                        if got != Some(want) {
                            println!("     {e:?}: got {got:?}, oracle {want:?}");
                        }
                    }
                    for (e, got) in &out.per_event {
                        if !truth.per_event.contains_key(e) {
                            println!("     {e:?}: extra entry {got:?}");
                        }
                    }
                }
            }
            Err(e) => println!("  !! {e}"),
        }
    }
}
