//! Ground truth: exhaustive consistent-cut lattice enumeration and the
//! brute-force slice. Everything here is exact; the enumerator refuses to
//! run past its budget rather than degrade.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::cut::Cut;
use crate::error::{Result, SliceError};
use crate::event::{EventId, LocalState, ProcessId};
use crate::predicate::PredicateSpec;
use crate::trace::Trace;

pub const DEFAULT_CUT_BUDGET: usize = 200_000;

/// The full lattice of consistent cuts of a trace.
#[derive(Clone, Debug)]
pub struct CutLattice {
    n: usize,
    cuts: BTreeSet<Cut>,
}

impl CutLattice {
    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> impl Iterator<Item = &Cut> {
        self.cuts.iter()
    }

    pub fn contains(&self, cut: &Cut) -> bool {
        self.cuts.contains(cut)
    }

    /// Covering edges `(C, C + one event)` of the lattice diagram.
    pub fn covering_edges(&self) -> impl Iterator<Item = (&Cut, Cut)> {
        self.cuts.iter().flat_map(move |c| {
            (0..self.n).filter_map(move |i| {
                let mut ext = c.clone();
                ext.0[i] += 1;
                self.cuts.contains(&ext).then_some((c, ext))
            })
        })
    }
}

/// Breadth-first generation by single-event extension with consistency
/// filtering. Every consistent cut appears exactly once. Fails once more
/// than `budget` cuts exist.
pub fn enumerate_lattice(trace: &Trace, budget: usize) -> Result<CutLattice> {
    let n = trace.n();
    let empty = Cut::empty(n);
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut queue: VecDeque<Cut> = VecDeque::new();
    seen.insert(empty.0.clone());
    queue.push_back(empty);
    let mut cuts = BTreeSet::new();
    while let Some(cut) = queue.pop_front() {
        cuts.insert(cut.clone());
        for i in 0..n {
            let pid = ProcessId::from_index(i);
            let next_eid = cut.0[i] + 1;
            if next_eid > trace.len_of(pid) {
                continue;
            }
            let mut ext = cut.clone();
            ext.0[i] = next_eid;
            // The extension is consistent iff the one new event's causal
            // past lies inside it; everything else was already closed.
            let ev = trace.event(EventId::new(pid, next_eid)).unwrap();
            if !ev.clock.dominated_by(&ext.as_clock()) {
                continue;
            }
            if seen.insert(ext.0.clone()) {
                if seen.len() > budget {
                    return Err(SliceError::LatticeBudget { budget });
                }
                queue.push_back(ext);
            }
        }
    }
    Ok(CutLattice { n, cuts })
}

/// All consistent cuts satisfying `pred`, by exhaustive evaluation.
pub fn satisfying_cuts<F>(trace: &Trace, budget: usize, pred: F) -> Result<BTreeSet<Cut>>
where
    F: Fn(&[&LocalState]) -> bool,
{
    let lattice = enumerate_lattice(trace, budget)?;
    Ok(lattice
        .cuts()
        .filter(|c| pred(&trace.states_at(c)))
        .cloned()
        .collect())
}

/// Whether the satisfying cut set is closed under join and meet, i.e. the
/// predicate behaves regularly on this trace.
pub fn closed_under_join_meet<F>(trace: &Trace, budget: usize, pred: F) -> Result<bool>
where
    F: Fn(&[&LocalState]) -> bool,
{
    let sat = satisfying_cuts(trace, budget, pred)?;
    let cuts: Vec<&Cut> = sat.iter().collect();
    for (i, a) in cuts.iter().enumerate() {
        for b in &cuts[i + 1..] {
            if !sat.contains(&a.join(b)) || !sat.contains(&a.meet(b)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The slice of a computation: the least satisfying cut per event, plus the
/// deduplicated set of those cuts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slice {
    /// For every event, its least satisfying cut, or `None` when no
    /// satisfying cut contains the event.
    pub per_event: BTreeMap<EventId, Option<Cut>>,
    /// Deduplicated join-irreducible cuts.
    pub unique_cuts: BTreeSet<Cut>,
    /// Whether the empty cut satisfies the predicate (needed to regenerate
    /// the full satisfying set, since the empty cut is never join-irreducible).
    pub empty_satisfies: bool,
}

impl Slice {
    pub fn defined_pairs(&self) -> impl Iterator<Item = (EventId, &Cut)> {
        self.per_event
            .iter()
            .filter_map(|(e, c)| c.as_ref().map(|c| (*e, c)))
    }
}

/// The least satisfying consistent cut containing `e`, or `None`. Exists
/// and is unique for regular predicates because their satisfying sets are
/// meet-closed.
pub fn jb_of_event(trace: &Trace, spec: &PredicateSpec, e: EventId) -> Result<Option<Cut>> {
    let slice = slice_bruteforce_with_budget(trace, spec, DEFAULT_CUT_BUDGET)?;
    Ok(slice.per_event.get(&e).cloned().flatten())
}

pub fn slice_bruteforce(trace: &Trace, spec: &PredicateSpec) -> Result<Slice> {
    slice_bruteforce_with_budget(trace, spec, DEFAULT_CUT_BUDGET)
}

pub fn slice_bruteforce_with_budget(
    trace: &Trace,
    spec: &PredicateSpec,
    budget: usize,
) -> Result<Slice> {
    let sat = satisfying_cuts(trace, budget, |states| spec.evaluate(states).holds())?;
    Ok(slice_from_satisfying(trace, &sat))
}

/// Builds the slice given the satisfying cut set. The least satisfying cut
/// containing event `<i,m>` is the meet of all satisfying cuts whose
/// frontier on `i` is at least `m`; suffix meets make this one pass over
/// the satisfying set.
pub fn slice_from_satisfying(trace: &Trace, sat: &BTreeSet<Cut>) -> Slice {
    let n = trace.n();
    let empty_satisfies = sat.contains(&Cut::empty(n));
    let mut per_event = BTreeMap::new();
    let mut unique_cuts = BTreeSet::new();
    for pid in trace.process_ids() {
        let len = trace.len_of(pid) as usize;
        // meet_at[v] = meet of satisfying cuts with frontier exactly v on pid
        let mut meet_at: Vec<Option<Cut>> = vec![None; len + 1];
        for c in sat {
            let v = c.frontier(pid) as usize;
            meet_at[v] = Some(match meet_at[v].take() {
                None => c.clone(),
                Some(acc) => acc.meet(c),
            });
        }
        // suffix meets: least satisfying cut with frontier >= m on pid
        let mut acc: Option<Cut> = None;
        let mut least_from: Vec<Option<Cut>> = vec![None; len + 1];
        for v in (0..=len).rev() {
            if let Some(m) = &meet_at[v] {
                acc = Some(match acc.take() {
                    None => m.clone(),
                    Some(a) => a.meet(m),
                });
            }
            least_from[v] = acc.clone();
        }
        for m in 1..=len {
            let e = EventId::new(pid, m as u32);
            let jb = least_from[m].clone();
            if let Some(c) = &jb {
                debug_assert!(
                    sat.contains(c),
                    "meet of satisfying cuts left the satisfying set; predicate not regular on this trace"
                );
                unique_cuts.insert(c.clone());
            }
            per_event.insert(e, jb);
        }
    }
    Slice {
        per_event,
        unique_cuts,
        empty_satisfies,
    }
}

/// Regenerates the full satisfying cut set from a slice: all joins of
/// nonempty subsets of the join-irreducible cuts, plus the empty cut when
/// it satisfies the predicate.
pub fn satisfying_cuts_from_slice(slice: &Slice) -> BTreeSet<Cut> {
    let mut all: BTreeSet<Cut> = slice.unique_cuts.clone();
    let mut frontier: Vec<Cut> = all.iter().cloned().collect();
    while let Some(c) = frontier.pop() {
        let joins: Vec<Cut> = all
            .iter()
            .map(|d| c.join(d))
            .filter(|j| !all.contains(j))
            .collect();
        for j in joins {
            if all.insert(j.clone()) {
                frontier.push(j);
            }
        }
    }
    if slice.empty_satisfies {
        if let Some(n) = slice
            .unique_cuts
            .iter()
            .next()
            .map(Cut::len)
            .or_else(|| slice.per_event.keys().next().map(|e| e.pid.get() as usize))
        {
            all.insert(Cut::empty(n));
        }
    }
    all
}

/// Exhaustive join-irreducibility check: a cut is join-irreducible in the
/// satisfying sublattice iff it is not the join of two strictly smaller
/// satisfying cuts.
pub fn is_join_irreducible(sat: &BTreeSet<Cut>, cut: &Cut) -> bool {
    if !sat.contains(cut) {
        return false;
    }
    let below: Vec<&Cut> = sat
        .iter()
        .filter(|c| c.subset_of(cut) && *c != cut)
        .collect();
    for (i, a) in below.iter().enumerate() {
        for b in &below[i..] {
            if a.join(b) == *cut {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{three_process_demo, two_process_demo, TraceBuilder};

    #[test]
    fn two_process_demo_has_twelve_cuts() {
        let t = two_process_demo();
        let l = enumerate_lattice(&t, DEFAULT_CUT_BUDGET).unwrap();
        assert_eq!(l.len(), 12);
    }

    #[test]
    fn chain_of_three_events_has_four_cuts() {
        let mut b = TraceBuilder::new(1);
        let p = ProcessId::new(1);
        b.internal(p, Some(("x1", 1)));
        b.internal(p, Some(("x1", 2)));
        b.internal(p, Some(("x1", 3)));
        let t = b.finish();
        let l = enumerate_lattice(&t, 100).unwrap();
        assert_eq!(l.len(), 4);
    }

    #[test]
    fn budget_is_enforced() {
        let t = three_process_demo();
        match enumerate_lattice(&t, 10) {
            Err(SliceError::LatticeBudget { budget: 10 }) => {}
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn jb_values_on_two_process_demo() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        let p1 = ProcessId::new(1);
        let p2 = ProcessId::new(2);
        let jb = |pid, eid| jb_of_event(&t, &b, EventId::new(pid, eid)).unwrap();
        assert_eq!(jb(p1, 1), Some(Cut(vec![1, 0]))); // a
        assert_eq!(jb(p1, 2), Some(Cut(vec![2, 2]))); // b
        assert_eq!(jb(p1, 3), Some(Cut(vec![3, 2]))); // c
        assert_eq!(jb(p2, 1), Some(Cut(vec![0, 1]))); // e
        assert_eq!(jb(p2, 2), Some(Cut(vec![2, 2]))); // f
        assert_eq!(jb(p2, 3), Some(Cut(vec![2, 3]))); // g
    }

    #[test]
    fn slice_of_two_process_demo() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        let slice = slice_bruteforce(&t, &b).unwrap();
        let want: BTreeSet<Cut> = [
            Cut(vec![1, 0]),
            Cut(vec![0, 1]),
            Cut(vec![2, 2]),
            Cut(vec![3, 2]),
            Cut(vec![2, 3]),
        ]
        .into_iter()
        .collect();
        assert_eq!(slice.unique_cuts, want);
        // Regenerating all satisfying cuts gives the 8 satisfying rows.
        let sat = satisfying_cuts_from_slice(&slice);
        let truth = satisfying_cuts(&t, 1000, |s| b.evaluate(s).holds()).unwrap();
        assert_eq!(sat, truth);
        assert_eq!(truth.len(), 8);
    }

    #[test]
    fn jb_absent_when_no_satisfying_cut_contains_the_event() {
        // One unmatched send at the end of P1 keeps every cut containing it
        // from having empty channels.
        let mut bld = TraceBuilder::new(2);
        let p1 = ProcessId::new(1);
        let p2 = ProcessId::new(2);
        bld.internal(p1, Some(("x1", 1)));
        bld.send(p1, p2);
        bld.internal(p2, Some(("x2", 1)));
        let t = bld.finish();
        let b = PredicateSpec::AllChannelsEmpty;
        assert_eq!(
            jb_of_event(&t, &b, EventId::new(p1, 2)).unwrap(),
            None
        );
        assert_eq!(
            jb_of_event(&t, &b, EventId::new(p1, 1)).unwrap(),
            Some(Cut(vec![1, 0]))
        );
    }

    #[test]
    fn false_predicate_gives_empty_slice() {
        let t = two_process_demo();
        // x1 never reaches 99.
        let spec = PredicateSpec::parse("conj x1>=99", &t).unwrap();
        let slice = slice_bruteforce(&t, &spec).unwrap();
        assert!(slice.unique_cuts.is_empty());
        assert!(slice.defined_pairs().next().is_none());
        assert!(satisfying_cuts_from_slice(&slice).is_empty());
    }

    #[test]
    fn join_irreducibility_of_slice_cuts() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        let sat = satisfying_cuts(&t, 1000, |s| b.evaluate(s).holds()).unwrap();
        let slice = slice_from_satisfying(&t, &sat);
        for c in &slice.unique_cuts {
            assert!(is_join_irreducible(&sat, c), "{c} is reducible");
        }
        // And the satisfying-but-reducible cuts are not in the slice.
        for c in &sat {
            if !slice.unique_cuts.contains(c) && !c.is_empty_cut() {
                assert!(!is_join_irreducible(&sat, c), "{c} missing from slice");
            }
        }
    }
}
