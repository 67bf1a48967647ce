//! Vector clocks and the happened-before relation.

use std::cmp::Ordering;
use std::fmt;

/// An `n`-component logical clock. For an event `e` on process `i`,
/// `components[i]` equals `e`'s local sequence number, and `e -> f`
/// holds exactly when `e`'s clock is componentwise below `f`'s with at
/// least one strict inequality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VectorClock(pub Vec<u32>);

impl VectorClock {
    pub fn zero(n: usize) -> Self {
        VectorClock(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Strict happened-before: `self < other` componentwise with at least one
    /// strict component.
    pub fn happened_before(&self, other: &VectorClock) -> bool {
        debug_assert_eq!(self.len(), other.len());
        let mut strict = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            if a > b {
                return false;
            }
            if a < b {
                strict = true;
            }
        }
        strict
    }

    pub fn concurrent(&self, other: &VectorClock) -> bool {
        !self.happened_before(other) && !other.happened_before(self) && self != other
    }

    /// Componentwise `<=`, the lattice order used for consistency checks.
    pub fn dominated_by(&self, other: &VectorClock) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn merge_in_place(&mut self, other: &VectorClock) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }

    pub fn merged(&self, other: &VectorClock) -> VectorClock {
        let mut out = self.clone();
        out.merge_in_place(other);
        out
    }
}

/// Partial order of the causal relation: `Less` means happened-before.
impl PartialOrd for VectorClock {
    fn partial_cmp(&self, other: &VectorClock) -> Option<Ordering> {
        if self == other {
            Some(Ordering::Equal)
        } else if self.happened_before(other) {
            Some(Ordering::Less)
        } else if other.happened_before(self) {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

impl fmt::Debug for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vc(v: &[u32]) -> VectorClock {
        VectorClock(v.to_vec())
    }

    #[test]
    fn happened_before_on_two_process_clocks() {
        // b -> f via the message between them; a and e are concurrent.
        assert!(vc(&[2, 0]).happened_before(&vc(&[2, 2])));
        assert!(!vc(&[1, 0]).happened_before(&vc(&[0, 1])));
        assert!(!vc(&[0, 1]).happened_before(&vc(&[1, 0])));
        assert!(vc(&[1, 0]).concurrent(&vc(&[0, 1])));
        assert!(!vc(&[2, 0]).concurrent(&vc(&[2, 2])));
    }

    #[test]
    fn irreflexive() {
        let e = vc(&[3, 1]);
        assert!(!e.happened_before(&e));
        assert!(!e.concurrent(&e));
    }

    #[test]
    fn merge_is_componentwise_max() {
        assert_eq!(vc(&[3, 2]).merged(&vc(&[2, 3])), vc(&[3, 3]));
        let c = vc(&[1, 4]);
        assert_eq!(c.merged(&c), c);
    }
}
