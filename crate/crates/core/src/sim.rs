//! Deterministic simulation substrate: a seeded scheduler drives event
//! reports into slicers in an arbitrary order respecting per-process
//! sequence, delivers slicer-to-slicer messages per-channel FIFO, runs the
//! stop protocol to quiescence, and collects output and metrics.
//!
//! Identical `(trace, predicate, algorithm, seed)` always produces the
//! identical message log, outputs and metrics.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::central::CentralSlicer;
use crate::cut::Cut;
use crate::error::{Result, SliceError};
use crate::event::{EventId, EventKind, ProcessId};
use crate::predicate::PredicateSpec;
use crate::slicer::{
    SliceRecord, Slicer, SlicerInput, SlicerMode, SlicerMsg, SlicerSink, Token,
};
use crate::trace::Trace;

/// Which slicing algorithm a simulation runs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Algorithm {
    /// Single slicer process receiving every event report.
    Central,
    /// Token-passing distributed slicers.
    Dist,
    /// Distributed slicers with borrowing, stalling and notices.
    DistOpt,
}

impl Algorithm {
    pub fn parse(s: &str) -> Option<Algorithm> {
        match s {
            "central" => Some(Algorithm::Central),
            "dist" => Some(Algorithm::Dist),
            "dist-opt" => Some(Algorithm::DistOpt),
            _ => None,
        }
    }
}

/// Per-slicer message and storage accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlicerMetrics {
    pub tokens_received: u64,
    pub notices_received: u64,
    pub control_received: u64,
    pub reports_received: u64,
    pub peak_storage: u64,
    pub outputs: u64,
}

impl SlicerMetrics {
    pub fn messages_received(&self) -> u64 {
        self.tokens_received + self.notices_received + self.control_received
            + self.reports_received
    }
}

/// Whole-run accounting. Totals equal the sums of the per-slicer counts.
#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    pub per_slicer: Vec<SlicerMetrics>,
    pub scheduler_steps: u64,
    pub total_messages: u64,
}

impl RunMetrics {
    pub fn max_messages_per_slicer(&self) -> u64 {
        self.per_slicer
            .iter()
            .map(SlicerMetrics::messages_received)
            .max()
            .unwrap_or(0)
    }

    pub fn max_peak_storage(&self) -> u64 {
        self.per_slicer
            .iter()
            .map(|m| m.peak_storage)
            .max()
            .unwrap_or(0)
    }
}

/// Result of one simulated run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Emitted records in global emission order (duplicates possible for
    /// the base distributed algorithm).
    pub records: Vec<SliceRecord>,
    /// Per event: its least satisfying cut, or `None` where none exists.
    pub per_event: BTreeMap<EventId, Option<Cut>>,
    pub metrics: RunMetrics,
}

impl RunOutput {
    /// Deduplicated emitted cut set.
    pub fn unique_cuts(&self) -> std::collections::BTreeSet<Cut> {
        self.records.iter().map(|r| r.cut.clone()).collect()
    }

    /// Whether some cut was emitted more than once across the entire run.
    pub fn has_duplicate_emissions(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.records.iter().any(|r| !seen.insert(r.cut.clone()))
    }
}

pub fn run_simulation(
    trace: &Trace,
    spec: &PredicateSpec,
    algorithm: Algorithm,
    seed: u64,
) -> Result<RunOutput> {
    run_simulation_with(trace, spec, algorithm, seed, None, &mut |_| {})
}

/// Full-control entry point: optional step budget override and an observer
/// called after every token state change (for invariant instrumentation).
pub fn run_simulation_with(
    trace: &Trace,
    spec: &PredicateSpec,
    algorithm: Algorithm,
    seed: u64,
    step_budget: Option<u64>,
    observer: &mut dyn FnMut(&Token),
) -> Result<RunOutput> {
    spec.validate(trace)?;
    let budget = step_budget.unwrap_or_else(|| default_step_budget(trace));
    match algorithm {
        Algorithm::Central => run_central(trace, spec, seed, budget),
        Algorithm::Dist => run_dist(trace, spec, SlicerMode::Base, seed, budget, observer),
        Algorithm::DistOpt => {
            run_dist(trace, spec, SlicerMode::Optimized, seed, budget, observer)
        }
    }
}

/// Quiescence bound used by the liveness checks.
pub fn default_step_budget(trace: &Trace) -> u64 {
    let n = trace.n() as u64;
    let e = trace.total_events() as u64;
    (10 * n * n * e).max(1_000)
}

struct StepSink<'a> {
    src: ProcessId,
    outbox: Vec<(ProcessId, SlicerMsg)>,
    outputs: &'a mut Vec<SliceRecord>,
    observer: &'a mut dyn FnMut(&Token),
}

impl SlicerSink for StepSink<'_> {
    fn send(&mut self, dst: ProcessId, msg: SlicerMsg) {
        debug_assert_ne!(dst, self.src, "self-sends must be local hand-offs");
        self.outbox.push((dst, msg));
    }
    fn output(&mut self, record: SliceRecord) {
        self.outputs.push(record);
    }
    fn token_step(&mut self, token: &Token) {
        (self.observer)(token);
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Action {
    App(usize),
    Deliver(u32, u32),
}

fn run_dist(
    trace: &Trace,
    spec: &PredicateSpec,
    mode: SlicerMode,
    seed: u64,
    budget: u64,
    observer: &mut dyn FnMut(&Token),
) -> Result<RunOutput> {
    let n = trace.n();
    let initial: Vec<_> = trace
        .process_ids()
        .map(|p| trace.initial_state(p).clone())
        .collect();
    let mut slicers: Vec<Slicer> = (0..n)
        .map(|i| {
            Slicer::new(
                ProcessId::from_index(i),
                n,
                mode,
                spec.clone(),
                initial.clone(),
            )
        })
        .collect();
    let mut channels: BTreeMap<(u32, u32), VecDeque<SlicerMsg>> = BTreeMap::new();
    let mut app_next: Vec<usize> = vec![0; n];
    let mut executed: Vec<u32> = vec![0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outputs: Vec<SliceRecord> = Vec::new();
    let mut metrics = RunMetrics {
        per_slicer: vec![SlicerMetrics::default(); n],
        ..Default::default()
    };
    let mut steps: u64 = 0;

    // Processes with no events at all report completion immediately.
    for i in 0..n {
        if trace.len_of(ProcessId::from_index(i)) == 0 {
            let mut sink = StepSink {
                src: ProcessId::from_index(i),
                outbox: Vec::new(),
                outputs: &mut outputs,
                observer,
            };
            slicers[i].handle(SlicerInput::Done, &mut sink);
            let outbox = sink.outbox;
            route(&mut channels, ProcessId::from_index(i), outbox);
        }
        metrics.per_slicer[i].peak_storage = slicers[i].storage_units();
    }

    loop {
        let mut actions: Vec<Action> = Vec::new();
        for i in 0..n {
            let pid = ProcessId::from_index(i);
            if (app_next[i] as u32) < trace.len_of(pid) {
                let e = &trace.events_of(pid)[app_next[i]];
                let enabled = match e.kind {
                    EventKind::Recv { sender, .. } => executed[sender.pid.index()] >= sender.eid,
                    _ => true,
                };
                if enabled {
                    actions.push(Action::App(i));
                }
            }
        }
        for (&(src, dst), q) in &channels {
            if !q.is_empty() {
                actions.push(Action::Deliver(src, dst));
            }
        }
        if actions.is_empty() {
            break;
        }
        steps += 1;
        if steps > budget {
            return Err(SliceError::Liveness(format!(
                "no quiescence after {budget} scheduler steps"
            )));
        }
        let action = actions[rng.gen_range(0..actions.len())];
        match action {
            Action::App(i) => {
                let pid = ProcessId::from_index(i);
                let e = trace.events_of(pid)[app_next[i]].clone();
                app_next[i] += 1;
                executed[i] = e.eid();
                let done = app_next[i] as u32 == trace.len_of(pid);
                let mut sink = StepSink {
                    src: pid,
                    outbox: Vec::new(),
                    outputs: &mut outputs,
                    observer,
                };
                slicers[i].handle(SlicerInput::Event(e), &mut sink);
                if done {
                    slicers[i].handle(SlicerInput::Done, &mut sink);
                }
                let outbox = sink.outbox;
                route(&mut channels, pid, outbox);
                let units = slicers[i].storage_units();
                let m = &mut metrics.per_slicer[i];
                m.peak_storage = m.peak_storage.max(units);
            }
            Action::Deliver(src, dst) => {
                let msg = channels
                    .get_mut(&(src, dst))
                    .and_then(VecDeque::pop_front)
                    .expect("scheduled delivery from an empty channel");
                let d = (dst - 1) as usize;
                {
                    let m = &mut metrics.per_slicer[d];
                    match &msg {
                        SlicerMsg::Token(_) => m.tokens_received += 1,
                        SlicerMsg::Notice(_) => m.notices_received += 1,
                        SlicerMsg::StopToken | SlicerMsg::StopBroadcast => {
                            m.control_received += 1
                        }
                    }
                }
                metrics.total_messages += 1;
                let mut sink = StepSink {
                    src: ProcessId::new(dst),
                    outbox: Vec::new(),
                    outputs: &mut outputs,
                    observer,
                };
                slicers[d].handle(SlicerInput::Msg(msg), &mut sink);
                let outbox = sink.outbox;
                route(&mut channels, ProcessId::new(dst), outbox);
                let units = slicers[d].storage_units();
                let m = &mut metrics.per_slicer[d];
                m.peak_storage = m.peak_storage.max(units);
            }
        }
    }

    // No executable action left: this must be clean quiescence, not a
    // stall. Any unsettled slicer here means the protocol deadlocked.
    for s in &slicers {
        if !s.settled() {
            return Err(SliceError::Liveness(format!(
                "system idle but slicer {} is not settled (stall or lost token)",
                s.pid
            )));
        }
    }

    let mut per_event = BTreeMap::new();
    for s in &slicers {
        for (eid, cut) in s.jb_map() {
            per_event.insert(EventId::new(s.pid, *eid), cut.clone());
        }
        metrics.per_slicer[s.pid.index()].outputs = s.outputs_emitted;
    }
    metrics.scheduler_steps = steps;
    Ok(RunOutput {
        records: outputs,
        per_event,
        metrics,
    })
}

fn route(
    channels: &mut BTreeMap<(u32, u32), VecDeque<SlicerMsg>>,
    src: ProcessId,
    outbox: Vec<(ProcessId, SlicerMsg)>,
) {
    for (dst, msg) in outbox {
        channels
            .entry((src.get(), dst.get()))
            .or_default()
            .push_back(msg);
    }
}

/// The centralized run: the slicer is co-located with process 1, so P1's
/// reports are local hand-offs while every other process's report crosses a
/// channel and counts as a received message.
fn run_central(trace: &Trace, spec: &PredicateSpec, seed: u64, budget: u64) -> Result<RunOutput> {
    let n = trace.n();
    let initial: Vec<_> = trace
        .process_ids()
        .map(|p| trace.initial_state(p).clone())
        .collect();
    let mut central = CentralSlicer::new(n, spec.clone(), initial);
    let mut channels: BTreeMap<u32, VecDeque<crate::event::Event>> = BTreeMap::new();
    let mut app_next: Vec<usize> = vec![0; n];
    let mut executed: Vec<u32> = vec![0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut metrics = RunMetrics {
        per_slicer: vec![SlicerMetrics::default(); 1],
        ..Default::default()
    };
    metrics.per_slicer[0].peak_storage = central.storage_units();
    let mut steps = 0u64;
    loop {
        let mut actions: Vec<Action> = Vec::new();
        for i in 0..n {
            let pid = ProcessId::from_index(i);
            if (app_next[i] as u32) < trace.len_of(pid) {
                let e = &trace.events_of(pid)[app_next[i]];
                let enabled = match e.kind {
                    EventKind::Recv { sender, .. } => executed[sender.pid.index()] >= sender.eid,
                    _ => true,
                };
                if enabled {
                    actions.push(Action::App(i));
                }
            }
        }
        for (&src, q) in &channels {
            if !q.is_empty() {
                actions.push(Action::Deliver(src, 1));
            }
        }
        if actions.is_empty() {
            break;
        }
        steps += 1;
        if steps > budget {
            return Err(SliceError::Liveness(format!(
                "no quiescence after {budget} scheduler steps"
            )));
        }
        match actions[rng.gen_range(0..actions.len())] {
            Action::App(i) => {
                let pid = ProcessId::from_index(i);
                let e = trace.events_of(pid)[app_next[i]].clone();
                app_next[i] += 1;
                executed[i] = e.eid();
                if i == 0 {
                    central.push_event(e);
                    let units = central.storage_units();
                    let m = &mut metrics.per_slicer[0];
                    m.peak_storage = m.peak_storage.max(units);
                } else {
                    channels.entry(pid.get()).or_default().push_back(e);
                }
            }
            Action::Deliver(src, _) => {
                let e = channels
                    .get_mut(&src)
                    .and_then(VecDeque::pop_front)
                    .expect("scheduled delivery from an empty channel");
                metrics.per_slicer[0].reports_received += 1;
                metrics.total_messages += 1;
                central.push_event(e);
                let units = central.storage_units();
                let m = &mut metrics.per_slicer[0];
                m.peak_storage = m.peak_storage.max(units);
            }
        }
    }
    central.finish();
    metrics.per_slicer[0].outputs = central.outputs().len() as u64;
    metrics.scheduler_steps = steps;
    let records = central
        .outputs()
        .iter()
        .map(|(event, cut)| SliceRecord {
            owner: event.pid,
            event: *event,
            cut: cut.clone(),
        })
        .collect();
    Ok(RunOutput {
        records,
        per_event: central.per_event().clone(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::trace::{two_process_demo, TraceBuilder};

    #[test]
    fn dist_run_matches_oracle_on_the_demo() {
        let t = two_process_demo();
        let spec = PredicateSpec::AllChannelsEmpty;
        let oracle_slice = oracle::slice_bruteforce(&t, &spec).unwrap();
        for seed in 0..10 {
            let out = run_simulation(&t, &spec, Algorithm::Dist, seed).unwrap();
            assert_eq!(
                out.unique_cuts().into_iter().collect::<Vec<_>>(),
                oracle_slice.unique_cuts.iter().cloned().collect::<Vec<_>>(),
                "seed {seed}"
            );
            assert_eq!(out.per_event, oracle_slice.per_event, "seed {seed}");
        }
    }

    #[test]
    fn opt_run_matches_oracle_without_duplicates() {
        let t = two_process_demo();
        let spec = PredicateSpec::AllChannelsEmpty;
        let oracle_slice = oracle::slice_bruteforce(&t, &spec).unwrap();
        for seed in 0..10 {
            let out = run_simulation(&t, &spec, Algorithm::DistOpt, seed).unwrap();
            assert_eq!(out.unique_cuts(), oracle_slice.unique_cuts, "seed {seed}");
            assert_eq!(out.per_event, oracle_slice.per_event, "seed {seed}");
            assert!(!out.has_duplicate_emissions(), "seed {seed}");
        }
    }

    #[test]
    fn central_run_matches_oracle() {
        let t = two_process_demo();
        let spec = PredicateSpec::AllChannelsEmpty;
        let oracle_slice = oracle::slice_bruteforce(&t, &spec).unwrap();
        for seed in 0..5 {
            let out = run_simulation(&t, &spec, Algorithm::Central, seed).unwrap();
            assert_eq!(out.per_event, oracle_slice.per_event, "seed {seed}");
        }
    }

    #[test]
    fn same_seed_same_run() {
        let t = two_process_demo();
        let spec = PredicateSpec::AllChannelsEmpty;
        let a = run_simulation(&t, &spec, Algorithm::Dist, 7).unwrap();
        let b = run_simulation(&t, &spec, Algorithm::Dist, 7).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.metrics.total_messages, b.metrics.total_messages);
        assert_eq!(a.metrics.scheduler_steps, b.metrics.scheduler_steps);
        assert_eq!(a.metrics.per_slicer, b.metrics.per_slicer);
    }

    #[test]
    fn empty_trace_reaches_quiescence_immediately() {
        let t = TraceBuilder::new(3).finish();
        let spec = PredicateSpec::AllChannelsEmpty;
        for algo in [Algorithm::Central, Algorithm::Dist, Algorithm::DistOpt] {
            let out = run_simulation(&t, &spec, algo, 1).unwrap();
            assert!(out.records.is_empty(), "{algo:?}");
            assert!(out.per_event.is_empty());
        }
    }

    #[test]
    fn single_process_trace() {
        let mut b = TraceBuilder::new(1);
        let p = ProcessId::new(1);
        b.internal(p, Some(("x1", 1)));
        b.internal(p, Some(("x1", 0)));
        b.internal(p, Some(("x1", 2)));
        let t = b.finish();
        let spec = PredicateSpec::parse("conj x1>=1", &t).unwrap();
        let oracle_slice = oracle::slice_bruteforce(&t, &spec).unwrap();
        for algo in [Algorithm::Central, Algorithm::Dist, Algorithm::DistOpt] {
            let out = run_simulation(&t, &spec, algo, 3).unwrap();
            assert_eq!(out.per_event, oracle_slice.per_event, "{algo:?}");
            // No channels: the distributed runs exchange at most the stop
            // control messages, and a 1-ring needs none.
            assert_eq!(out.metrics.total_messages, 0, "{algo:?}");
        }
    }
}
