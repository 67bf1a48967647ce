//! Optimized slicer routines: satisfying a token's need from co-located
//! tokens instead of sending it, speculatively stalling tokens whose
//! computation is suspected to duplicate another's, and cut notices that
//! resolve those stalls.
//!
//! Two facts make the speculation sound. If an event `f` lies inside the
//! least satisfying cut of `e`, then `f`'s least cut is contained in `e`'s;
//! and a token needing process `i` to advance to event `m` can only finish
//! at a cut containing the least cut of `<i,m>`. So when the awaited cut
//! turns out to contain the stalled token's event, the two cuts are equal
//! and one token adopts the other's result silently.

use crate::cut::Cut;
use crate::event::{EventId, EventKind, LocalState, ProcessId};
use crate::predicate::Verdict;

use super::{CutNotice, NoticeCut, Slicer, SlicerSink, Token};

impl Slicer {
    /// Inconsistent-cut handling with the receive-event shortcut: an own
    /// token at a receive event waits (stalled) for the sender's finished
    /// cut instead of walking there; a foreign one jumps straight to the
    /// full causal dependency.
    pub(crate) fn process_inconsistent_opt(&mut self, mut t: Token, sink: &mut dyn SlicerSink) {
        let ev = t.event.clone().expect("processing a token that never absorbed an event");
        if let EventKind::Recv { sender, .. } = ev.kind {
            // Waiting for the sender's finished cut is only safe toward
            // smaller process ids; two computations stalled on each other's
            // pending notices would otherwise wait forever. Toward larger
            // ids the token walks instead, and the symmetry rule at the
            // sender's slicer catches the duplicate-cut case.
            if t.pid == self.pid && sender.pid < self.pid {
                t.target = sender;
                if let Some(body) = self.notice_cache.get(&sender).cloned() {
                    // The sender's cut already came past; never stall on it
                    // again.
                    self.resolve_stalled(t, &body, sink);
                } else {
                    self.log(format_args!("recv-stall owner={} awaiting {sender:?}", t.pid));
                    t.stalled = true;
                    t.waiting = false;
                    self.park(t);
                }
                return;
            }
            if t.pid == self.pid {
                self.repair_inconsistent(t, sink);
                return;
            }
            let k = t
                .gcut
                .iter()
                .zip(&t.depend)
                .position(|(g, d)| g < d)
                .unwrap();
            t.target = EventId::new(ProcessId::from_index(k), t.depend[k]);
            self.send_if_needed(t, sink);
            return;
        }
        // Not a receive event: base repair, routed through the borrowing
        // send path by dispatch().
        self.repair_inconsistent(t, sink);
    }

    /// Before physically sending a token toward its target, satisfy the
    /// need from any co-located token that has already absorbed exactly the
    /// wanted event. Loops as long as copying keeps resolving new needs.
    pub(crate) fn send_if_needed(&mut self, mut t: Token, sink: &mut dyn SlicerSink) {
        loop {
            let k = t.target.pid;
            if k == self.pid {
                break;
            }
            let Some(tk) = self.held.get(&k) else { break };
            let Some(tk_ev) = tk.event.clone() else { break };
            if tk_ev.id != t.target {
                break; // the co-located token has no info on the wanted event
            }
            let kk = k.index();
            debug_assert_eq!(tk.gcut[kk], tk_ev.id.eid);
            t.gcut[kk] = tk.gcut[kk];
            t.gstate[kk] = tk.gstate[kk].clone();
            for (d, c) in t.depend.iter_mut().zip(&tk_ev.clock.0) {
                *d = (*d).max(*c);
            }
            sink.token_step(&t);
            if let Some(j) = t
                .gcut
                .iter()
                .zip(&t.depend)
                .position(|(g, d)| g < d)
            {
                t.target = EventId::new(ProcessId::from_index(j), t.gcut[j] + 1);
                continue;
            }
            self.evaluate_token(t, sink);
            return;
        }
        if t.target.pid == self.pid {
            self.deliver_local(t);
        } else {
            let dst = t.target.pid;
            self.send_token(t, dst, sink);
        }
    }

    /// Arrival-time decision for a foreign token: resolve against an
    /// already-recorded local cut, or stall it behind the own computation
    /// when their results are suspected equal. Returns the token when the
    /// normal continuation should proceed.
    pub(crate) fn stall_or_resolve(
        &mut self,
        mut t: Token,
        sink: &mut dyn SlicerSink,
    ) -> Option<Token> {
        let newid = t.target;
        if newid.eid < self.next_uncomputed {
            // This event's least cut is already decided here.
            let known = self.jb.get(&newid.eid).cloned().unwrap_or(None);
            return match known {
                Some(cut) => {
                    let ev = t.event.as_ref().expect("traveling token without an event");
                    if cut.contains(ev.id) {
                        t.adopted = Some(cut);
                        t.waiting = false;
                        t.stalled = false;
                        let owner = t.pid;
                        self.send_token(t, owner, sink);
                        None
                    } else {
                        Some(t)
                    }
                }
                None => {
                    // No satisfying cut contains <i,newid>, so none contains
                    // whatever this token is computing either.
                    self.log(format_args!("exhaust-by-jb owner={} newid={newid:?}", t.pid));
                    t.exhausted = true;
                    t.waiting = false;
                    t.stalled = false;
                    let owner = t.pid;
                    self.send_token(t, owner, sink);
                    None
                }
            };
        }
        // Speculative stall: our own live computation will reach newid
        // first and its completed cut resolves this token, either exactly
        // (the cuts coincide and the token adopts silently) or as a sound
        // lower bound to resume from.
        //
        // The tie-break pauses the larger-id owner's token behind a
        // smaller-id host. Together with the sender-id rule for receive
        // waits, every wait in the system points toward a smaller process
        // id, so waits cannot form cycles and process 1's token can never
        // be paused at all.
        if self.own_live && self.pid < t.pid {
            self.log(format_args!("symmetry-stall owner={} target={:?}", t.pid, t.target));
            t.stalled = true;
            t.waiting = false;
            self.park(t);
            return None;
        }
        Some(t)
    }

    /// A stalled token hears the cut it was waiting on (or that no cut is
    /// coming). With states in hand this is the full copy; without, the
    /// token either adopts the cut identity-only or resumes from its own
    /// accurate state.
    pub(crate) fn resolve_stalled(
        &mut self,
        mut t: Token,
        body: &Option<NoticeCut>,
        sink: &mut dyn SlicerSink,
    ) {
        t.stalled = false;
        t.waiting = false;
        t.eval = Verdict::False;
        let Some(nc) = body else {
            // The awaited computation retired: this token's current event
            // has no satisfying cut either.
            if t.pid == self.pid {
                self.retire_own(t, sink);
            } else {
                t.exhausted = true;
                let owner = t.pid;
                self.send_token(t, owner, sink);
            }
            return;
        };
        let stateful = nc.states.is_some();
        if let Some(states) = &nc.states {
            for j in 0..self.n {
                if nc.cut.0[j] > t.gcut[j] {
                    t.gcut[j] = nc.cut.0[j];
                    t.gstate[j] = states[j].clone();
                }
                t.depend[j] = t.depend[j].max(nc.cut.0[j]);
            }
            sink.token_step(&t);
        }
        let ev = t.event.as_ref().expect("stalled token without an event");
        if nc.cut.contains(ev.id) {
            // Same least cut; complete silently, never emitting it twice.
            if t.pid == self.pid {
                let cut = nc.cut.clone();
                self.complete_own(t, cut, false, sink);
            } else {
                t.adopted = Some(nc.cut.clone());
                let owner = t.pid;
                self.send_token(t, owner, sink);
            }
        } else if stateful {
            self.process_token(t, sink);
        } else {
            // Without states the token keeps its own accurate cut; plain
            // repair avoids re-stalling on the already-answered sender.
            if t.consistent() {
                self.evaluate_token(t, sink);
            } else {
                self.repair_inconsistent(t, sink);
            }
        }
    }

    pub(crate) fn on_notice_opt(&mut self, notice: CutNotice, sink: &mut dyn SlicerSink) {
        // Keep the body; a token may only reach its stall point later.
        self.notice_cache.insert(notice.event, notice.body.clone());
        let matching: Vec<ProcessId> = self
            .held
            .iter()
            .filter(|(_, t)| t.stalled && t.target == notice.event)
            .map(|(owner, _)| *owner)
            .collect();
        for owner in matching {
            let t = self.held.remove(&owner).unwrap();
            debug_assert_eq!(t.pid, self.pid, "only own tokens stall on remote events");
            self.resolve_stalled(t, &notice.body, sink);
        }
    }

    /// After recording a completed cut covering local events
    /// `first..=last`: wake the stalled tokens it answers and notify the
    /// recipients of every covered send event.
    pub(crate) fn after_completion_opt(
        &mut self,
        first: u32,
        last: u32,
        cut: &Cut,
        states: Option<&[Option<LocalState>]>,
        sink: &mut dyn SlicerSink,
    ) {
        let matching: Vec<ProcessId> = self
            .held
            .iter()
            .filter(|(_, t)| {
                t.stalled
                    && t.target.pid == self.pid
                    && t.target.eid >= first
                    && t.target.eid <= last
            })
            .map(|(owner, _)| *owner)
            .collect();
        let body = Some(NoticeCut {
            cut: cut.clone(),
            states: states.map(<[_]>::to_vec),
        });
        for owner in matching {
            let t = self.held.remove(&owner).unwrap();
            self.resolve_stalled(t, &body, sink);
        }
        let arrived = self.local_events.len() as u32;
        for m in first..=last.min(arrived) {
            if let EventKind::Send { to, .. } = self.local_events[m as usize - 1].kind {
                sink.send(
                    to,
                    super::SlicerMsg::Notice(CutNotice {
                        event: EventId::new(self.pid, m),
                        body: body.clone(),
                    }),
                );
            }
        }
    }

    /// After the own token retires: recipients of our unresolved send
    /// events learn no cut is coming, and tokens stalled behind our
    /// computation are sent home the same way.
    pub(crate) fn after_retirement_opt(&mut self, first: u32, last: u32, sink: &mut dyn SlicerSink) {
        for m in first..=last {
            if let EventKind::Send { to, .. } = self.local_events[m as usize - 1].kind {
                sink.send(
                    to,
                    super::SlicerMsg::Notice(CutNotice {
                        event: EventId::new(self.pid, m),
                        body: None,
                    }),
                );
            }
        }
        let stalled: Vec<ProcessId> = self
            .held
            .iter()
            .filter(|(owner, t)| t.stalled && **owner != self.pid)
            .map(|(owner, _)| *owner)
            .collect();
        for owner in stalled {
            let mut t = self.held.remove(&owner).unwrap();
            t.stalled = false;
            t.exhausted = true;
            self.send_token(t, owner, sink);
        }
    }

    /// An event report that arrived after its position was already decided
    /// (covered by an adopted cut, or after retirement): recipients of a
    /// send still need their notice, which could not be sent before the
    /// event's kind was known.
    pub(crate) fn on_late_event_opt(&mut self, eid: u32, sink: &mut dyn SlicerSink) {
        let e = &self.local_events[eid as usize - 1];
        if let EventKind::Send { to, .. } = e.kind {
            let body = self
                .jb
                .get(&eid)
                .cloned()
                .unwrap_or(None)
                .map(|cut| NoticeCut { cut, states: None });
            sink.send(
                to,
                super::SlicerMsg::Notice(CutNotice {
                    event: EventId::new(self.pid, eid),
                    body,
                }),
            );
        }
    }
}
