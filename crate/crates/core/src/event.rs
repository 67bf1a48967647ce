//! Process, event and local-state types shared by every slicing algorithm.

use std::collections::BTreeMap;
use std::fmt;

use crate::clock::VectorClock;

/// 1-based process identifier. Index 0 is never a valid process.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(u32);

impl ProcessId {
    pub fn new(value: u32) -> Self {
        assert!(value >= 1, "process ids are 1-based");
        ProcessId(value)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based index into per-process arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_index(index: usize) -> Self {
        ProcessId(index as u32 + 1)
    }
}

impl fmt::Debug for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(pid, eid)` pair identifying one event; `eid` is the 1-based local
/// sequence number on its process.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub pid: ProcessId,
    pub eid: u32,
}

impl EventId {
    pub fn new(pid: ProcessId, eid: u32) -> Self {
        EventId { pid, eid }
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.pid, self.eid)
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pid, self.eid)
    }
}

/// What an event did: a purely local step, a message send, or a message
/// receive. Message linkage uses per-channel sequence numbers, which are
/// FIFO by construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EventKind {
    Internal,
    /// Sent message number `seq` on the channel to `to`.
    Send { to: ProcessId, seq: u64 },
    /// Received message number `seq` on the channel from `from`; `sender` is
    /// the matching send event.
    Recv { from: ProcessId, seq: u64, sender: EventId },
}

impl EventKind {
    pub fn is_recv(&self) -> bool {
        matches!(self, EventKind::Recv { .. })
    }

    pub fn is_send(&self) -> bool {
        matches!(self, EventKind::Send { .. })
    }
}

/// Snapshot of one process's state immediately after an event: named
/// variables plus cumulative per-peer send and receive counters. The
/// counters encode channel contents: messages in transit from `i` to `j`
/// equal `i.sent[j] - j.recvd[i]` within any consistent cut.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LocalState {
    pub vars: BTreeMap<String, i64>,
    pub sent: Vec<u64>,
    pub recvd: Vec<u64>,
}

impl LocalState {
    pub fn initial(n: usize) -> Self {
        LocalState {
            vars: BTreeMap::new(),
            sent: vec![0; n],
            recvd: vec![0; n],
        }
    }

    /// Variables default to 0 until first assigned.
    pub fn var(&self, name: &str) -> i64 {
        self.vars.get(name).copied().unwrap_or(0)
    }

    /// Abstract record units used by the storage metrics.
    pub fn encoded_size(&self) -> u64 {
        (self.vars.len() + self.sent.len() + self.recvd.len()) as u64
    }
}

/// One local step of a process, with its vector clock and the local state
/// left behind by it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    pub id: EventId,
    pub clock: VectorClock,
    pub kind: EventKind,
    pub state: LocalState,
}

impl Event {
    pub fn pid(&self) -> ProcessId {
        self.id.pid
    }

    pub fn eid(&self) -> u32 {
        self.id.eid
    }

    pub fn happened_before(&self, other: &Event) -> bool {
        self.clock.happened_before(&other.clock)
    }

    pub fn concurrent(&self, other: &Event) -> bool {
        self.clock.concurrent(&other.clock)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn process_ids_are_one_based() {
        let p = ProcessId::new(3);
        assert_eq!(p.index(), 2);
        assert_eq!(ProcessId::from_index(2), p);
    }

    #[test]
    fn unset_variables_read_zero() {
        let s = LocalState::initial(2);
        assert_eq!(s.var("x1"), 0);
    }
}
