//! The trace model: per-process event sequences with message pairing, plus a
//! builder that derives vector clocks and channel counters from structure.

use std::collections::BTreeMap;

use crate::clock::VectorClock;
use crate::cut::Cut;
use crate::error::{Result, SliceError};
use crate::event::{Event, EventId, EventKind, LocalState, ProcessId};

/// A finite distributed computation: `n` processes, each with an ordered
/// event list, FIFO loss-less channels, and optional non-zero initial
/// variable values.
#[derive(Clone, Debug)]
pub struct Trace {
    n: usize,
    events: Vec<Vec<Event>>,
    initial: Vec<LocalState>,
}

impl Trace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.n as u32).map(ProcessId::new)
    }

    pub fn events_of(&self, pid: ProcessId) -> &[Event] {
        &self.events[pid.index()]
    }

    pub fn len_of(&self, pid: ProcessId) -> u32 {
        self.events[pid.index()].len() as u32
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events[id.pid.index()].get(id.eid as usize - 1)
    }

    pub fn all_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().flatten()
    }

    /// The final cut containing every event.
    pub fn final_cut(&self) -> Cut {
        Cut(self.events.iter().map(|evs| evs.len() as u32).collect())
    }

    /// The state of `pid` after executing its first `eid` events; `eid = 0`
    /// gives the initial state.
    pub fn state_at(&self, pid: ProcessId, eid: u32) -> &LocalState {
        if eid == 0 {
            &self.initial[pid.index()]
        } else {
            &self.events[pid.index()][eid as usize - 1].state
        }
    }

    /// The per-process states at a frontier.
    pub fn states_at(&self, cut: &Cut) -> Vec<&LocalState> {
        self.process_ids()
            .map(|p| self.state_at(p, cut.frontier(p)))
            .collect()
    }

    pub fn initial_state(&self, pid: ProcessId) -> &LocalState {
        &self.initial[pid.index()]
    }

    /// All variable names that ever appear on `pid`, including initial ones.
    pub fn variables_of(&self, pid: ProcessId) -> impl Iterator<Item = &str> {
        let mut names: Vec<&str> = self.initial[pid.index()]
            .vars
            .keys()
            .map(String::as_str)
            .collect();
        for e in &self.events[pid.index()] {
            for k in e.state.vars.keys() {
                names.push(k);
            }
        }
        names.sort_unstable();
        names.dedup();
        names.into_iter()
    }

    /// Whether a frontier is causally closed, i.e. a consistent cut.
    pub fn frontier_consistent(&self, cut: &Cut) -> bool {
        for pid in self.process_ids() {
            let k = cut.frontier(pid);
            if k > self.len_of(pid) {
                return false;
            }
            if k > 0 {
                let clock = &self.events[pid.index()][k as usize - 1].clock;
                if !clock.dominated_by(&cut.as_clock()) {
                    return false;
                }
            }
        }
        true
    }

    /// Checks every structural invariant: gap-free 1-based event ids, FIFO
    /// message pairing, receives after their sends (acyclic causality), and
    /// vector clocks equal to the recomputed ones.
    pub fn validate(&self) -> Result<()> {
        for (i, evs) in self.events.iter().enumerate() {
            let pid = ProcessId::from_index(i);
            for (j, e) in evs.iter().enumerate() {
                if e.id != EventId::new(pid, j as u32 + 1) {
                    return Err(SliceError::InvalidTrace(format!(
                        "event at position {} on {} has id {:?}",
                        j + 1,
                        pid,
                        e.id
                    )));
                }
                if e.clock.len() != self.n {
                    return Err(SliceError::InvalidTrace(format!(
                        "event {:?} has a clock of length {}",
                        e.id,
                        e.clock.len()
                    )));
                }
            }
        }
        self.check_pairing()?;
        let recomputed = self.recompute_clocks()?;
        for e in self.all_events() {
            let want = &recomputed[e.pid().index()][e.eid() as usize - 1];
            if &e.clock != want {
                return Err(SliceError::InvalidTrace(format!(
                    "event {:?} carries clock {} but structure implies {}",
                    e.id, e.clock, want
                )));
            }
        }
        self.check_counters()?;
        Ok(())
    }

    fn check_pairing(&self) -> Result<()> {
        // Per channel, receive order must match send order and sequence
        // numbers must be 1-based and dense.
        let mut sends: BTreeMap<(ProcessId, ProcessId), Vec<(u64, EventId)>> = BTreeMap::new();
        let mut recvs: BTreeMap<(ProcessId, ProcessId), Vec<(u64, EventId, EventId)>> =
            BTreeMap::new();
        for e in self.all_events() {
            match e.kind {
                EventKind::Internal => {}
                EventKind::Send { to, seq } => {
                    if to == e.pid() {
                        return Err(SliceError::InvalidTrace(format!(
                            "event {:?} sends to its own process",
                            e.id
                        )));
                    }
                    sends.entry((e.pid(), to)).or_default().push((seq, e.id));
                }
                EventKind::Recv { from, seq, sender } => {
                    recvs
                        .entry((from, e.pid()))
                        .or_default()
                        .push((seq, e.id, sender));
                }
            }
        }
        for (chan, list) in &sends {
            for (k, (seq, id)) in list.iter().enumerate() {
                if *seq != k as u64 + 1 {
                    return Err(SliceError::InvalidTrace(format!(
                        "send {:?} on channel {}->{} has sequence {} (want {})",
                        id,
                        chan.0,
                        chan.1,
                        seq,
                        k + 1
                    )));
                }
            }
        }
        for (chan, list) in &recvs {
            let sent = sends.get(chan).map(Vec::as_slice).unwrap_or(&[]);
            for (k, (seq, id, sender)) in list.iter().enumerate() {
                if *seq != k as u64 + 1 {
                    return Err(SliceError::InvalidTrace(format!(
                        "receive {:?} on channel {}->{} has sequence {} (want {})",
                        id,
                        chan.0,
                        chan.1,
                        seq,
                        k + 1
                    )));
                }
                match sent.get(k) {
                    Some((_, send_id)) if send_id == sender => {}
                    Some((_, send_id)) => {
                        return Err(SliceError::InvalidTrace(format!(
                            "receive {:?} names sender {:?} but FIFO order pairs it with {:?}",
                            id, sender, send_id
                        )));
                    }
                    None => {
                        return Err(SliceError::InvalidTrace(format!(
                            "receive {:?} has no matching send on channel {}->{}",
                            id, chan.0, chan.1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Replays the structure with the standard clock protocol: every event
    /// increments its own component; a receive additionally merges the
    /// piggybacked send clock. Fails if some receive can never be scheduled
    /// after its send.
    pub fn recompute_clocks(&self) -> Result<Vec<Vec<VectorClock>>> {
        let n = self.n;
        let mut done: Vec<usize> = vec![0; n];
        let mut clocks: Vec<Vec<VectorClock>> = vec![Vec::new(); n];
        let total = self.total_events();
        let mut progressed = true;
        while progressed {
            progressed = false;
            for i in 0..n {
                while done[i] < self.events[i].len() {
                    let e = &self.events[i][done[i]];
                    let mut clock = if done[i] == 0 {
                        VectorClock::zero(n)
                    } else {
                        clocks[i][done[i] - 1].clone()
                    };
                    clock.0[i] += 1;
                    if let EventKind::Recv { sender, .. } = e.kind {
                        let sp = sender.pid.index();
                        if sender.eid as usize > done[sp]
                            || (sp == i && sender.eid as usize > done[i])
                        {
                            break; // sender not replayed yet
                        }
                        clock.merge_in_place(&clocks[sp][sender.eid as usize - 1]);
                    }
                    clocks[i].push(clock);
                    done[i] += 1;
                    progressed = true;
                }
            }
        }
        if done.iter().sum::<usize>() != total {
            return Err(SliceError::InvalidTrace(
                "causality cycle: some receive precedes its send".into(),
            ));
        }
        Ok(clocks)
    }

    fn check_counters(&self) -> Result<()> {
        for i in 0..self.n {
            let mut sent = vec![0u64; self.n];
            let mut recvd = vec![0u64; self.n];
            for e in &self.events[i] {
                match e.kind {
                    EventKind::Internal => {}
                    EventKind::Send { to, .. } => sent[to.index()] += 1,
                    EventKind::Recv { from, .. } => recvd[from.index()] += 1,
                }
                if e.state.sent != sent || e.state.recvd != recvd {
                    return Err(SliceError::InvalidTrace(format!(
                        "event {:?} carries channel counters inconsistent with the structure",
                        e.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds traces event by event, deriving clocks, channel sequence numbers
/// and cumulative counters. Variables persist between events until
/// reassigned.
pub struct TraceBuilder {
    n: usize,
    events: Vec<Vec<Event>>,
    initial: Vec<LocalState>,
    vars: Vec<BTreeMap<String, i64>>,
    sent: Vec<Vec<u64>>,
    recvd: Vec<Vec<u64>>,
    clocks: Vec<VectorClock>,
    send_seq: BTreeMap<(ProcessId, ProcessId), u64>,
    recv_seq: BTreeMap<(ProcessId, ProcessId), u64>,
    send_ids: BTreeMap<(ProcessId, ProcessId), Vec<EventId>>,
}

impl TraceBuilder {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        TraceBuilder {
            n,
            events: vec![Vec::new(); n],
            initial: vec![LocalState::initial(n); n],
            vars: vec![BTreeMap::new(); n],
            sent: vec![vec![0; n]; n],
            recvd: vec![vec![0; n]; n],
            clocks: vec![VectorClock::zero(n); n],
            send_seq: BTreeMap::new(),
            recv_seq: BTreeMap::new(),
            send_ids: BTreeMap::new(),
        }
    }

    /// Sets an initial (pre-first-event) variable value on a process.
    pub fn initial_var(&mut self, pid: ProcessId, name: &str, value: i64) -> &mut Self {
        self.initial[pid.index()].vars.insert(name.into(), value);
        self.vars[pid.index()].insert(name.into(), value);
        self
    }

    fn push(&mut self, pid: ProcessId, kind: EventKind, assign: Option<(&str, i64)>) -> EventId {
        let i = pid.index();
        if let Some((name, value)) = assign {
            self.vars[i].insert(name.to_string(), value);
        }
        self.clocks[i].0[i] += 1;
        if let EventKind::Recv { sender, .. } = kind {
            let sender_clock = self.events[sender.pid.index()][sender.eid as usize - 1]
                .clock
                .clone();
            self.clocks[i].merge_in_place(&sender_clock);
        }
        match kind {
            EventKind::Send { to, .. } => self.sent[i][to.index()] += 1,
            EventKind::Recv { from, .. } => self.recvd[i][from.index()] += 1,
            EventKind::Internal => {}
        }
        let id = EventId::new(pid, self.events[i].len() as u32 + 1);
        self.events[i].push(Event {
            id,
            clock: self.clocks[i].clone(),
            kind,
            state: LocalState {
                vars: self.vars[i].clone(),
                sent: self.sent[i].clone(),
                recvd: self.recvd[i].clone(),
            },
        });
        id
    }

    /// Internal step; optionally assigns one variable.
    pub fn internal(&mut self, pid: ProcessId, assign: Option<(&str, i64)>) -> EventId {
        self.push(pid, EventKind::Internal, assign)
    }

    /// Send event on the FIFO channel `pid -> to`; may also assign a
    /// variable (message activity is an event of its own, but the model lets
    /// it change local state).
    pub fn send(&mut self, pid: ProcessId, to: ProcessId) -> EventId {
        self.send_assign(pid, to, None)
    }

    pub fn send_assign(
        &mut self,
        pid: ProcessId,
        to: ProcessId,
        assign: Option<(&str, i64)>,
    ) -> EventId {
        assert_ne!(pid, to, "no self channels");
        let seq = self.send_seq.entry((pid, to)).or_insert(0);
        *seq += 1;
        let seq = *seq;
        let id = self.push(pid, EventKind::Send { to, seq }, assign);
        self.send_ids.entry((pid, to)).or_default().push(id);
        id
    }

    /// Receive of the next undelivered message on the channel `from -> pid`.
    /// The matching send must already exist.
    pub fn recv(&mut self, pid: ProcessId, from: ProcessId) -> EventId {
        self.recv_assign(pid, from, None)
    }

    pub fn recv_assign(
        &mut self,
        pid: ProcessId,
        from: ProcessId,
        assign: Option<(&str, i64)>,
    ) -> EventId {
        let seq = self.recv_seq.entry((from, pid)).or_insert(0);
        *seq += 1;
        let seq = *seq;
        let sender = self
            .send_ids
            .get(&(from, pid))
            .and_then(|v| v.get(seq as usize - 1));
        let sender = *sender.unwrap_or_else(|| {
            panic!("receive on {from}->{pid} has no matching send (seq {seq})")
        });
        self.push(pid, EventKind::Recv { from, seq, sender }, assign)
    }

    pub fn finish(self) -> Trace {
        let t = Trace {
            n: self.n,
            events: self.events,
            initial: self.initial,
        };
        debug_assert!(t.validate().is_ok(), "builder produced an invalid trace");
        t
    }
}

/// Assembles a trace from raw parts; used by the file loader. Validates
/// everything.
pub fn from_parts(n: usize, events: Vec<Vec<Event>>, initial: Vec<LocalState>) -> Result<Trace> {
    if events.len() != n || initial.len() != n {
        return Err(SliceError::InvalidTrace(
            "event lists and initial states must both have length n".into(),
        ));
    }
    let t = Trace { n, events, initial };
    t.validate()?;
    Ok(t)
}

/// The two-process demo computation used throughout the tests: P1 runs
/// `a b c`, P2 runs `e f g`, with one message from `b` to `f`.
pub fn two_process_demo() -> Trace {
    let p1 = ProcessId::new(1);
    let p2 = ProcessId::new(2);
    let mut b = TraceBuilder::new(2);
    b.internal(p1, Some(("x1", 1))); // a [1,0]
    b.send(p1, p2); // b [2,0]
    b.internal(p1, Some(("x1", 2))); // c [3,0]
    b.internal(p2, Some(("x2", 1))); // e [0,1]
    b.recv(p2, p1); // f [2,2]
    b.internal(p2, Some(("x2", 2))); // g [2,3]
    b.finish()
}

/// The three-process demo computation: four events per process
/// (`a b c d` / `e f g h` / `u v w x`), messages c->h, f->v and w->g,
/// variables x1/x2/x3 with x3 initially 4.
pub fn three_process_demo() -> Trace {
    let p1 = ProcessId::new(1);
    let p2 = ProcessId::new(2);
    let p3 = ProcessId::new(3);
    let mut b = TraceBuilder::new(3);
    b.initial_var(p3, "x3", 4);
    b.internal(p1, Some(("x1", 1))); // a [1,0,0]
    b.internal(p1, Some(("x1", 2))); // b [2,0,0]
    b.send_assign(p1, p2, Some(("x1", -1))); // c [3,0,0]
    b.internal(p1, Some(("x1", 0))); // d [4,0,0]
    b.internal(p2, Some(("x2", 0))); // e [0,1,0]
    b.send_assign(p2, p3, Some(("x2", 2))); // f [0,2,0]
    b.internal(p3, Some(("x3", 4))); // u [0,0,1]
    b.recv_assign(p3, p2, Some(("x3", 1))); // v [0,2,2]
    b.send_assign(p3, p2, Some(("x3", 2))); // w [0,2,3]
    b.recv_assign(p2, p3, Some(("x2", 1))); // g [0,3,3]
    b.recv_assign(p2, p1, Some(("x2", 3))); // h [3,4,3]
    b.internal(p3, Some(("x3", 4))); // x [0,2,4]
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_reproduces_known_clocks() {
        let t = two_process_demo();
        let clocks: Vec<Vec<u32>> = t
            .all_events()
            .map(|e| e.clock.0.clone())
            .collect();
        assert_eq!(
            clocks,
            vec![
                vec![1, 0],
                vec![2, 0],
                vec![3, 0],
                vec![0, 1],
                vec![2, 2],
                vec![2, 3],
            ]
        );
        t.validate().unwrap();
    }

    #[test]
    fn frontier_consistency() {
        let t = two_process_demo();
        assert!(t.frontier_consistent(&Cut(vec![2, 1])));
        assert!(!t.frontier_consistent(&Cut(vec![1, 2]))); // f without b
        assert!(t.frontier_consistent(&Cut(vec![0, 0])));
        assert!(!t.frontier_consistent(&Cut(vec![4, 0]))); // beyond the trace
    }
}
