//! Online computation slicing for regular predicates.
//!
//! A distributed computation is a partial order of process events related by
//! Lamport's happened-before relation. Its consistent cuts (causally closed
//! event sets) form a distributive lattice; for a *regular* predicate the
//! satisfying cuts form a sublattice, fully determined by its join-irreducible
//! elements. The *slice* is the set of those join-irreducible cuts: the least
//! satisfying cut containing each event, where one exists.
//!
//! This crate provides four ways to compute a slice, all over the same trace
//! model:
//!
//! - [`oracle`]: brute-force lattice enumeration, the ground truth.
//! - [`central`]: a single online slicer consuming event reports.
//! - [`slicer`]: `n` cooperating slicer processes, one token each, computing
//!   the slice by token passing ([`SlicerMode::Base`]).
//! - [`slicer`] with [`SlicerMode::Optimized`]: token borrowing, speculative
//!   stalling and cut notices, eliminating duplicate cut computations.
//!
//! The distributed variants run on the deterministic message-passing
//! simulator in [`sim`]; [`gen`] produces seeded random traces and
//! [`tracefile`] reads and writes the line-oriented trace format.

pub mod central;
pub mod clock;
pub mod cut;
pub mod dot;
pub mod error;
pub mod event;
pub mod gen;
pub mod oracle;
pub mod predicate;
pub mod sim;
pub mod slicer;
pub mod trace;
pub mod tracefile;

pub use central::CentralSlicer;
pub use clock::VectorClock;
pub use cut::Cut;
pub use error::SliceError;
pub use event::{Event, EventId, EventKind, LocalState, ProcessId};
pub use gen::GenParams;
pub use oracle::{CutLattice, Slice};
pub use predicate::{PredicateSpec, Verdict};
pub use sim::{Algorithm, RunMetrics, RunOutput};
pub use slicer::{SliceRecord, SlicerMode};
pub use trace::Trace;
