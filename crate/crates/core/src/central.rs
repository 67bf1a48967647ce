//! The centralized online slicer: a single process receives every event
//! report and computes the least satisfying cut per event incrementally,
//! using the forbidden-process search. Ground-truth-equivalent but with all
//! storage and message load on one process.

use std::collections::BTreeMap;

use crate::cut::{is_consistent, Cut};
use crate::event::{Event, EventId, LocalState, ProcessId};
use crate::oracle::Slice;
use crate::predicate::PredicateSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Phase {
    /// Waiting for local event `eid` of this search's process to arrive so
    /// its computation can start.
    AwaitStart(u32),
    /// Mid-computation; progress needs this event, which has not arrived.
    Blocked(EventId),
    /// Ready to run (used transiently).
    Runnable,
    Retired,
}

#[derive(Clone, Debug)]
struct Search {
    pid: ProcessId,
    phase: Phase,
    /// Event whose least satisfying cut is being computed.
    event: Option<EventId>,
    gcut: Vec<u32>,
    depend: Vec<u32>,
}

/// Online slicer consuming a single stream of event reports. Events may
/// interleave arbitrarily across processes but must respect each process's
/// local order.
pub struct CentralSlicer {
    n: usize,
    spec: PredicateSpec,
    initial: Vec<LocalState>,
    events: Vec<Vec<Event>>,
    searches: Vec<Search>,
    outputs: Vec<(EventId, Cut)>,
    per_event: BTreeMap<EventId, Option<Cut>>,
    next_uncomputed: Vec<u32>,
    finished: bool,
}

impl CentralSlicer {
    pub fn new(n: usize, spec: PredicateSpec, initial: Vec<LocalState>) -> Self {
        assert_eq!(initial.len(), n);
        let searches = (0..n)
            .map(|i| Search {
                pid: ProcessId::from_index(i),
                phase: Phase::AwaitStart(1),
                event: None,
                gcut: vec![0; n],
                depend: vec![0; n],
            })
            .collect();
        CentralSlicer {
            n,
            spec,
            initial,
            events: vec![Vec::new(); n],
            searches,
            outputs: Vec::new(),
            per_event: BTreeMap::new(),
            next_uncomputed: vec![1; n],
            finished: false,
        }
    }

    fn stored(&self, id: EventId) -> Option<&Event> {
        self.events[id.pid.index()].get(id.eid as usize - 1)
    }

    fn states_at(&self, gcut: &[u32]) -> Vec<&LocalState> {
        (0..self.n)
            .map(|i| {
                if gcut[i] == 0 {
                    &self.initial[i]
                } else {
                    &self.events[i][gcut[i] as usize - 1].state
                }
            })
            .collect()
    }

    /// Feed one event report. Wakes and runs every search this unblocks.
    pub fn push_event(&mut self, e: Event) {
        assert!(!self.finished, "push after finish");
        let i = e.pid().index();
        assert_eq!(
            e.eid() as usize,
            self.events[i].len() + 1,
            "event reports must respect per-process order"
        );
        self.events[i].push(e);
        self.run_searches();
    }

    /// Declare the stream complete: searches still blocked can never finish,
    /// so their remaining events have no satisfying cut.
    pub fn finish(&mut self) {
        self.finished = true;
        for s in 0..self.n {
            let pid = self.searches[s].pid;
            let last = self.events[pid.index()].len() as u32;
            match self.searches[s].phase {
                Phase::Blocked(_) => {
                    for m in self.next_uncomputed[pid.index()]..=last {
                        self.per_event.insert(EventId::new(pid, m), None);
                    }
                }
                Phase::AwaitStart(_) | Phase::Runnable | Phase::Retired => {}
            }
            self.searches[s].phase = Phase::Retired;
        }
    }

    pub fn outputs(&self) -> &[(EventId, Cut)] {
        &self.outputs
    }

    pub fn per_event(&self) -> &BTreeMap<EventId, Option<Cut>> {
        &self.per_event
    }

    pub fn slice(&self) -> Slice {
        let unique_cuts = self
            .per_event
            .values()
            .flatten()
            .cloned()
            .collect();
        let empty_satisfies = {
            let states = self.states_at(&vec![0; self.n]);
            self.spec.evaluate(&states).holds()
        };
        Slice {
            per_event: self.per_event.clone(),
            unique_cuts,
            empty_satisfies,
        }
    }

    /// Abstract record units currently held: every stored event and state,
    /// the per-search cursors, and the recorded cuts.
    pub fn storage_units(&self) -> u64 {
        let events: u64 = self
            .events
            .iter()
            .flatten()
            .map(|e| 1 + e.state.encoded_size())
            .sum();
        let searches: u64 = (self.searches.len() as u64) * (2 * self.n as u64 + 2);
        let records: u64 = self
            .per_event
            .values()
            .map(|c| if c.is_some() { self.n as u64 + 1 } else { 1 })
            .sum();
        events + searches + records
    }

    fn run_searches(&mut self) {
        // Keep running until nothing can progress; n is small.
        let mut progressed = true;
        while progressed {
            progressed = false;
            for s in 0..self.searches.len() {
                if self.try_wake(s) {
                    self.run_one(s);
                    progressed = true;
                }
            }
        }
    }

    fn try_wake(&mut self, s: usize) -> bool {
        match self.searches[s].phase.clone() {
            Phase::AwaitStart(eid) => {
                let pid = self.searches[s].pid;
                if self.stored(EventId::new(pid, eid)).is_some() {
                    // Start computing from the previous completed cut.
                    let sr = &mut self.searches[s];
                    sr.event = Some(EventId::new(pid, eid));
                    sr.phase = Phase::Runnable;
                    self.absorb(s, EventId::new(pid, eid));
                    true
                } else {
                    false
                }
            }
            Phase::Blocked(target) => {
                if self.stored(target).is_some() {
                    self.searches[s].phase = Phase::Runnable;
                    self.absorb(s, target);
                    true
                } else {
                    false
                }
            }
            Phase::Runnable => true,
            Phase::Retired => false,
        }
    }

    fn absorb(&mut self, s: usize, id: EventId) {
        let clock = self.stored(id).unwrap().clock.clone();
        let sr = &mut self.searches[s];
        sr.gcut[id.pid.index()] = id.eid;
        for (d, c) in sr.depend.iter_mut().zip(&clock.0) {
            *d = (*d).max(*c);
        }
    }

    /// Advance search `s` until it blocks or completes one cut.
    fn run_one(&mut self, s: usize) {
        loop {
            let (gcut, depend) = {
                let sr = &self.searches[s];
                (sr.gcut.clone(), sr.depend.clone())
            };
            if !is_consistent(&gcut, &depend) {
                let k = (0..self.n).find(|&k| gcut[k] < depend[k]).unwrap();
                let target = EventId::new(ProcessId::from_index(k), gcut[k] + 1);
                if self.stored(target).is_some() {
                    self.absorb(s, target);
                    continue;
                }
                self.searches[s].phase = Phase::Blocked(target);
                return;
            }
            let verdict = {
                let states = self.states_at(&gcut);
                self.spec.evaluate(&states)
            };
            if verdict.holds() {
                self.complete(s, Cut(gcut));
                return;
            }
            let k = {
                let states = self.states_at(&gcut);
                self.spec.forbidden_process(&states, None)
            };
            let target = EventId::new(k, gcut[k.index()] + 1);
            if self.stored(target).is_some() {
                self.absorb(s, target);
            } else {
                self.searches[s].phase = Phase::Blocked(target);
                return;
            }
        }
    }

    fn complete(&mut self, s: usize, cut: Cut) {
        let pid = self.searches[s].pid;
        let i = pid.index();
        let generator = self.searches[s].event.unwrap();
        self.outputs.push((generator, cut.clone()));
        // Later local events inside the cut share it as their least
        // satisfying cut, so the next computation starts past the frontier.
        for m in self.next_uncomputed[i]..=cut.0[i] {
            self.per_event.insert(EventId::new(pid, m), Some(cut.clone()));
        }
        self.next_uncomputed[i] = cut.0[i] + 1;
        let sr = &mut self.searches[s];
        sr.depend = cut.0.clone();
        sr.gcut = cut.0.clone();
        sr.phase = Phase::AwaitStart(cut.0[i] + 1);
        sr.event = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::trace::{two_process_demo, TraceBuilder};
    use crate::Trace;

    fn feed_in_order(trace: &Trace, order: &[(u32, u32)]) -> CentralSlicer {
        let spec = PredicateSpec::AllChannelsEmpty;
        let initial = trace
            .process_ids()
            .map(|p| trace.initial_state(p).clone())
            .collect();
        let mut cs = CentralSlicer::new(trace.n(), spec, initial);
        for &(p, e) in order {
            let ev = trace
                .event(EventId::new(ProcessId::new(p), e))
                .unwrap()
                .clone();
            cs.push_event(ev);
        }
        cs.finish();
        cs
    }

    #[test]
    fn first_event_emits_immediately() {
        let t = two_process_demo();
        let spec = PredicateSpec::AllChannelsEmpty;
        let initial = t.process_ids().map(|p| t.initial_state(p).clone()).collect();
        let mut cs = CentralSlicer::new(2, spec, initial);
        cs.push_event(t.event(EventId::new(ProcessId::new(1), 1)).unwrap().clone());
        assert_eq!(
            cs.outputs(),
            &[(EventId::new(ProcessId::new(1), 1), Cut(vec![1, 0]))]
        );
    }

    #[test]
    fn matches_bruteforce_on_any_interleaving() {
        let t = two_process_demo();
        let oracle_slice = oracle::slice_bruteforce(&t, &PredicateSpec::AllChannelsEmpty).unwrap();
        let interleavings: &[&[(u32, u32)]] = &[
            &[(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)],
            &[(2, 1), (2, 2), (2, 3), (1, 1), (1, 2), (1, 3)],
            &[(1, 1), (2, 1), (1, 2), (2, 2), (1, 3), (2, 3)],
            &[(2, 1), (1, 1), (2, 2), (2, 3), (1, 2), (1, 3)],
        ];
        for order in interleavings {
            let cs = feed_in_order(&t, order);
            assert_eq!(cs.per_event(), &oracle_slice.per_event, "order {order:?}");
            assert_eq!(cs.slice().unique_cuts, oracle_slice.unique_cuts);
        }
    }

    #[test]
    fn unfinished_search_reports_no_cut() {
        // Trailing unmatched send: its computation blocks forever.
        let mut b = TraceBuilder::new(2);
        let p1 = ProcessId::new(1);
        let p2 = ProcessId::new(2);
        b.internal(p1, Some(("x1", 1)));
        b.send(p1, p2);
        b.internal(p2, Some(("x2", 1)));
        let t = b.finish();
        let order: &[(u32, u32)] = &[(1, 1), (2, 1), (1, 2)];
        let cs = feed_in_order(&t, order);
        assert_eq!(cs.per_event()[&EventId::new(p1, 2)], None);
        assert_eq!(
            cs.per_event()[&EventId::new(p1, 1)],
            Some(Cut(vec![1, 0]))
        );
    }
}
