//! Cuts (global states) named by their per-process frontiers, and the
//! lattice operations on them.

use std::fmt;

use crate::clock::VectorClock;
use crate::event::{EventId, ProcessId};

/// A cut named by the latest event id per process; 0 means the process has
/// executed nothing. For a *consistent* cut the frontier coincides with the
/// cut's vector clock, so a single vector serves as both.
///
/// `join` and `meet` are set union and intersection of the underlying event
/// sets, which on frontiers are the componentwise max and min.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cut(pub Vec<u32>);

impl Cut {
    pub fn empty(n: usize) -> Self {
        Cut(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty_cut(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn frontier(&self, pid: ProcessId) -> u32 {
        self.0[pid.index()]
    }

    /// Whether the event belongs to the cut.
    pub fn contains(&self, event: EventId) -> bool {
        self.frontier(event.pid) >= event.eid
    }

    /// Set inclusion of cuts.
    pub fn subset_of(&self, other: &Cut) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn join(&self, other: &Cut) -> Cut {
        debug_assert_eq!(self.len(), other.len());
        Cut(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| *a.max(b))
            .collect())
    }

    pub fn meet(&self, other: &Cut) -> Cut {
        debug_assert_eq!(self.len(), other.len());
        Cut(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| *a.min(b))
            .collect())
    }

    pub fn as_clock(&self) -> VectorClock {
        VectorClock(self.0.clone())
    }
}

/// A frontier vector `gcut` names a consistent cut exactly when every
/// recorded causal dependency is inside it: `depend[i] <= gcut[i]` for all
/// `i`.
pub fn is_consistent(gcut: &[u32], depend: &[u32]) -> bool {
    debug_assert_eq!(gcut.len(), depend.len());
    depend.iter().zip(gcut).all(|(d, g)| d <= g)
}

/// Componentwise max of the clocks of a set of events; the clock of the cut
/// they generate. Empty input gives the all-zero clock.
pub fn cut_clock<'a>(n: usize, clocks: impl IntoIterator<Item = &'a VectorClock>) -> VectorClock {
    let mut out = VectorClock::zero(n);
    for c in clocks {
        out.merge_in_place(c);
    }
    out
}

impl fmt::Debug for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(v: &[u32]) -> Cut {
        Cut(v.to_vec())
    }

    #[test]
    fn join_meet_are_componentwise() {
        let a = cut(&[3, 2]);
        let b = cut(&[2, 3]);
        assert_eq!(a.join(&b), cut(&[3, 3]));
        assert_eq!(a.meet(&b), cut(&[2, 2]));
        assert_eq!(a.join(&a), a);
        assert_eq!(a.meet(&a), a);
    }

    #[test]
    fn consistency_is_dependency_coverage() {
        // [a,f] misses b although f depends on it.
        assert!(!is_consistent(&[1, 2], &[2, 2]));
        assert!(is_consistent(&[3, 1], &[3, 1]));
        assert!(is_consistent(&[0, 0], &[0, 0]));
    }

    #[test]
    fn clock_of_event_set() {
        use crate::clock::VectorClock;
        let a = VectorClock(vec![1, 0]);
        let b = VectorClock(vec![2, 0]);
        let e = VectorClock(vec![0, 1]);
        assert_eq!(cut_clock(2, [&a, &b, &e]), VectorClock(vec![2, 1]));
        assert_eq!(cut_clock(2, []), VectorClock(vec![0, 0]));
    }
}
