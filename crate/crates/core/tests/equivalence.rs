//! Randomized cross-checks of every slicing algorithm against the
//! brute-force lattice oracle, across generator and scheduler seeds.

use std::collections::BTreeSet;

use slicing::cut::Cut;
use slicing::gen::{generate_trace, GenParams};
use slicing::oracle;
use slicing::predicate::PredicateSpec;
use slicing::sim::{run_simulation, Algorithm};
use slicing::trace::Trace;
use slicing::SliceError;

fn predicates_for(trace: &Trace) -> Vec<PredicateSpec> {
    let mut preds = vec![PredicateSpec::AllChannelsEmpty];
    if let Ok(p) = PredicateSpec::parse("conj x1>=1", trace) {
        preds.push(p);
    }
    if trace.n() >= 2 {
        if let Ok(p) = PredicateSpec::parse("conj x1>=0 x2<=3", trace) {
            preds.push(p);
        }
    }
    preds
}

fn check_trace(trace: &Trace, scheduler_seeds: &[u64]) {
    for spec in predicates_for(trace) {
        let truth = match oracle::slice_bruteforce(trace, &spec) {
            Ok(s) => s,
            Err(SliceError::LatticeBudget { .. }) => continue,
            Err(e) => panic!("oracle failed: {e}"),
        };
        let truth_cuts: BTreeSet<Cut> = truth.unique_cuts.clone();
        for &seed in scheduler_seeds {
            for algo in [Algorithm::Central, Algorithm::Dist, Algorithm::DistOpt] {
                let out = run_simulation(trace, &spec, algo, seed)
                    .unwrap_or_else(|e| panic!("{algo:?} seed {seed}: {e}\n{spec:?}"));
                assert_eq!(
                    out.per_event, truth.per_event,
                    "{algo:?} seed {seed} per-event map diverged\n{spec:?}"
                );
                assert_eq!(
                    out.unique_cuts(),
                    truth_cuts,
                    "{algo:?} seed {seed} cut set diverged\n{spec:?}"
                );
                if algo == Algorithm::DistOpt {
                    assert!(
                        !out.has_duplicate_emissions(),
                        "duplicate emission, seed {seed}\n{spec:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn random_small_traces_match_the_oracle() {
    let scheduler_seeds: Vec<u64> = (0..4).collect();
    for n in 2..=4usize {
        for gen_seed in 0..12u64 {
            let params = GenParams::new(n, 4, 0.6, 1000 * n as u64 + gen_seed);
            let trace = generate_trace(&params).unwrap();
            check_trace(&trace, &scheduler_seeds);
        }
    }
}

#[test]
fn random_medium_traces_match_the_oracle() {
    let scheduler_seeds: Vec<u64> = (0..3).collect();
    for n in [2, 3, 5] {
        for gen_seed in 0..6u64 {
            let params = GenParams::new(n, 8, 0.8, 77 * n as u64 + gen_seed);
            let trace = generate_trace(&params).unwrap();
            check_trace(&trace, &scheduler_seeds);
        }
    }
}

#[test]
fn sparse_messaging_traces_match_the_oracle() {
    let scheduler_seeds: Vec<u64> = (0..3).collect();
    for gen_seed in 0..8u64 {
        let params = GenParams::new(3, 6, 0.2, 31 + gen_seed);
        let trace = generate_trace(&params).unwrap();
        check_trace(&trace, &scheduler_seeds);
    }
}
