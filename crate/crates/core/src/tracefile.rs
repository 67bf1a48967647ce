//! Line-oriented trace files.
//!
//! ```text
//! n=2
//! init 2 vars{x2=4}
//! 1 1 internal vc=[1,0] vars{x1=1}
//! 1 2 send vc=[2,0] vars{x1=1} send->2#1
//! 2 1 recv vc=[2,1] vars{} recv<-1#1
//! ```
//!
//! Header first; optional `init` lines give non-zero initial variable
//! values; then one event per line: `pid eid kind vc=[..] vars{..}` plus
//! the message linkage for sends and receives. The loader validates
//! everything (dense event ids, FIFO pairing, causality, vector clocks
//! recomputed from structure) and reports the first offending line.

use std::collections::BTreeMap;
use std::path::Path;

use crate::clock::VectorClock;
use crate::error::{Result, SliceError};
use crate::event::{Event, EventId, EventKind, LocalState, ProcessId};
use crate::trace::Trace;

pub fn save_trace(trace: &Trace, path: &Path) -> Result<()> {
    std::fs::write(path, format_trace(trace))?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    let text = std::fs::read_to_string(path)?;
    parse_trace(&text)
}

pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(&format!("n={}\n", trace.n()));
    for pid in trace.process_ids() {
        let init = trace.initial_state(pid);
        if !init.vars.is_empty() {
            out.push_str(&format!("init {} {}\n", pid, fmt_vars(&init.vars)));
        }
    }
    for pid in trace.process_ids() {
        for e in trace.events_of(pid) {
            let kind = match e.kind {
                EventKind::Internal => "internal".to_string(),
                EventKind::Send { .. } => "send".to_string(),
                EventKind::Recv { .. } => "recv".to_string(),
            };
            out.push_str(&format!(
                "{} {} {} vc={} {}",
                pid,
                e.eid(),
                kind,
                e.clock,
                fmt_vars(&e.state.vars)
            ));
            match e.kind {
                EventKind::Internal => {}
                EventKind::Send { to, seq } => out.push_str(&format!(" send->{to}#{seq}")),
                EventKind::Recv { from, seq, .. } => out.push_str(&format!(" recv<-{from}#{seq}")),
            }
            out.push('\n');
        }
    }
    out
}

fn fmt_vars(vars: &BTreeMap<String, i64>) -> String {
    let body: Vec<String> = vars.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("vars{{{}}}", body.join(","))
}

struct RawEvent {
    line: usize,
    id: EventId,
    clock: VectorClock,
    vars: BTreeMap<String, i64>,
    kind: RawKind,
}

enum RawKind {
    Internal,
    Send { to: ProcessId, seq: u64 },
    Recv { from: ProcessId, seq: u64 },
}

fn err(line: usize, msg: impl Into<String>) -> SliceError {
    SliceError::TraceParse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<Trace> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut n: Option<usize> = None;
    let mut initial: Vec<LocalState> = Vec::new();
    let mut raw: Vec<RawEvent> = Vec::new();
    for (lineno, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(v) = line.strip_prefix("n=") {
            if n.is_some() {
                return Err(err(lineno, "duplicate header"));
            }
            let count: usize = v
                .parse()
                .map_err(|_| err(lineno, format!("bad process count {v}")))?;
            if count == 0 {
                return Err(err(lineno, "need at least one process"));
            }
            n = Some(count);
            initial = vec![LocalState::initial(count); count];
            continue;
        }
        let n = n.ok_or_else(|| err(lineno, "missing n=<count> header"))?;
        if let Some(rest) = line.strip_prefix("init ") {
            let (pid_tok, vars_tok) = rest
                .split_once(' ')
                .ok_or_else(|| err(lineno, "init needs: init PID vars{..}"))?;
            let pid = parse_pid(pid_tok, n, lineno)?;
            initial[pid.index()].vars = parse_vars(vars_tok.trim(), lineno)?;
            continue;
        }
        raw.push(parse_event_line(line, n, lineno)?);
    }
    let n = n.ok_or_else(|| err(0, "empty file: missing n=<count> header"))?;

    // Dense 1-based ids per process, in any file order.
    let mut per_proc: Vec<Vec<Option<RawEvent>>> = (0..n).map(|_| Vec::new()).collect();
    for ev in raw {
        let i = ev.id.pid.index();
        let idx = ev.id.eid as usize - 1;
        if per_proc[i].len() <= idx {
            per_proc[i].resize_with(idx + 1, || None);
        }
        if per_proc[i][idx].is_some() {
            return Err(err(ev.line, format!("duplicate event {:?}", ev.id)));
        }
        per_proc[i][idx] = Some(ev);
    }
    let mut events: Vec<Vec<RawEvent>> = Vec::with_capacity(n);
    for (i, list) in per_proc.into_iter().enumerate() {
        let mut out = Vec::with_capacity(list.len());
        for (idx, slot) in list.into_iter().enumerate() {
            match slot {
                Some(ev) => out.push(ev),
                None => {
                    return Err(err(
                        0,
                        format!("process {} is missing event {}", i + 1, idx + 1),
                    ))
                }
            }
        }
        events.push(out);
    }

    // FIFO pairing: the k-th receive on a channel pairs the k-th send.
    let mut send_ids: BTreeMap<(ProcessId, ProcessId), Vec<EventId>> = BTreeMap::new();
    for evs in &events {
        for ev in evs {
            if let RawKind::Send { to, seq } = ev.kind {
                let list = send_ids.entry((ev.id.pid, to)).or_default();
                if seq != list.len() as u64 + 1 {
                    return Err(err(
                        ev.line,
                        format!("send sequence {seq} out of order on channel"),
                    ));
                }
                list.push(ev.id);
            }
        }
    }
    let mut built: Vec<Vec<Event>> = Vec::with_capacity(n);
    let mut lineno_of: BTreeMap<EventId, usize> = BTreeMap::new();
    for evs in &events {
        let mut out = Vec::with_capacity(evs.len());
        let mut vars = initial[evs.first().map(|e| e.id.pid.index()).unwrap_or(0)]
            .vars
            .clone();
        let mut sent = vec![0u64; n];
        let mut recvd = vec![0u64; n];
        let mut recv_seq: Vec<u64> = vec![0; n];
        for ev in evs {
            lineno_of.insert(ev.id, ev.line);
            let kind = match ev.kind {
                RawKind::Internal => EventKind::Internal,
                RawKind::Send { to, seq } => {
                    sent[to.index()] += 1;
                    EventKind::Send { to, seq }
                }
                RawKind::Recv { from, seq } => {
                    recv_seq[from.index()] += 1;
                    if seq != recv_seq[from.index()] {
                        return Err(err(
                            ev.line,
                            format!("receive sequence {seq} breaks FIFO order"),
                        ));
                    }
                    let sender = send_ids
                        .get(&(from, ev.id.pid))
                        .and_then(|v| v.get(seq as usize - 1))
                        .copied()
                        .ok_or_else(|| {
                            err(ev.line, format!("no matching send #{seq} from {from}"))
                        })?;
                    recvd[from.index()] += 1;
                    EventKind::Recv { from, seq, sender }
                }
            };
            vars = merge_vars(vars, &ev.vars);
            out.push(Event {
                id: ev.id,
                clock: ev.clock.clone(),
                kind,
                state: LocalState {
                    vars: vars.clone(),
                    sent: sent.clone(),
                    recvd: recvd.clone(),
                },
            });
        }
        built.push(out);
    }

    let trace = crate::trace::from_parts(n, built, initial).map_err(|e| match e {
        SliceError::InvalidTrace(msg) => locate(&msg, &lineno_of),
        other => other,
    })?;
    Ok(trace)
}

/// An event line carries the full variable snapshot after the event; values
/// omitted on a line persist from the previous event.
fn merge_vars(
    mut acc: BTreeMap<String, i64>,
    update: &BTreeMap<String, i64>,
) -> BTreeMap<String, i64> {
    for (k, v) in update {
        acc.insert(k.clone(), *v);
    }
    acc
}

/// Structural validation errors name events; translate back to lines.
fn locate(msg: &str, lineno_of: &BTreeMap<EventId, usize>) -> SliceError {
    for (id, line) in lineno_of {
        if msg.contains(&format!("{:?}", id)) {
            return SliceError::TraceParse {
                line: *line,
                msg: msg.to_string(),
            };
        }
    }
    SliceError::TraceParse {
        line: 0,
        msg: msg.to_string(),
    }
}

fn parse_pid(tok: &str, n: usize, lineno: usize) -> Result<ProcessId> {
    let v: u32 = tok
        .parse()
        .map_err(|_| err(lineno, format!("bad process id {tok}")))?;
    if v == 0 || v as usize > n {
        return Err(err(lineno, format!("process id {v} out of range 1..{n}")));
    }
    Ok(ProcessId::new(v))
}

fn parse_vars(tok: &str, lineno: usize) -> Result<BTreeMap<String, i64>> {
    let body = tok
        .strip_prefix("vars{")
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| err(lineno, format!("expected vars{{..}}, got {tok}")))?;
    let mut out = BTreeMap::new();
    if body.is_empty() {
        return Ok(out);
    }
    for pair in body.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("bad variable binding {pair}")))?;
        let value: i64 = v
            .parse()
            .map_err(|_| err(lineno, format!("bad value in {pair}")))?;
        out.insert(k.to_string(), value);
    }
    Ok(out)
}

fn parse_clock(tok: &str, n: usize, lineno: usize) -> Result<VectorClock> {
    let body = tok
        .strip_prefix("vc=[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(lineno, format!("expected vc=[..], got {tok}")))?;
    let comps: Vec<u32> = body
        .split(',')
        .map(|c| c.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(lineno, format!("bad clock {tok}")))?;
    if comps.len() != n {
        return Err(err(
            lineno,
            format!("clock has {} components, expected {n}", comps.len()),
        ));
    }
    Ok(VectorClock(comps))
}

fn parse_event_line(line: &str, n: usize, lineno: usize) -> Result<RawEvent> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 5 {
        return Err(err(
            lineno,
            "expected: pid eid kind vc=[..] vars{..} [linkage]",
        ));
    }
    let pid = parse_pid(toks[0], n, lineno)?;
    let eid: u32 = toks[1]
        .parse()
        .map_err(|_| err(lineno, format!("bad event id {}", toks[1])))?;
    if eid == 0 {
        return Err(err(lineno, "event ids are 1-based"));
    }
    let clock = parse_clock(toks[3], n, lineno)?;
    let vars = parse_vars(toks[4], lineno)?;
    let kind = match toks[2] {
        "internal" => {
            if toks.len() != 5 {
                return Err(err(lineno, "internal events take no linkage"));
            }
            RawKind::Internal
        }
        "send" => {
            let link = toks
                .get(5)
                .and_then(|t| t.strip_prefix("send->"))
                .ok_or_else(|| err(lineno, "send events need send->PID#SEQ"))?;
            let (to, seq) = parse_link(link, n, lineno)?;
            if to == pid {
                return Err(err(lineno, "send to own process"));
            }
            RawKind::Send { to, seq }
        }
        "recv" => {
            let link = toks
                .get(5)
                .and_then(|t| t.strip_prefix("recv<-"))
                .ok_or_else(|| err(lineno, "recv events need recv<-PID#SEQ"))?;
            let (from, seq) = parse_link(link, n, lineno)?;
            RawKind::Recv { from, seq }
        }
        other => return Err(err(lineno, format!("unknown event kind {other}"))),
    };
    Ok(RawEvent {
        line: lineno,
        id: EventId::new(pid, eid),
        clock,
        vars,
        kind,
    })
}

fn parse_link(tok: &str, n: usize, lineno: usize) -> Result<(ProcessId, u64)> {
    let (pid_tok, seq_tok) = tok
        .split_once('#')
        .ok_or_else(|| err(lineno, format!("bad message linkage {tok}")))?;
    let pid = parse_pid(pid_tok, n, lineno)?;
    let seq: u64 = seq_tok
        .parse()
        .map_err(|_| err(lineno, format!("bad message sequence {seq_tok}")))?;
    if seq == 0 {
        return Err(err(lineno, "message sequences are 1-based"));
    }
    Ok((pid, seq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{three_process_demo, two_process_demo};

    #[test]
    fn round_trip_identity() {
        for t in [two_process_demo(), three_process_demo()] {
            let text = format_trace(&t);
            let back = parse_trace(&text).unwrap();
            assert_eq!(back.n(), t.n());
            assert_eq!(back.total_events(), t.total_events());
            for (a, b) in t.all_events().zip(back.all_events()) {
                assert_eq!(a, b);
            }
            for p in t.process_ids() {
                assert_eq!(t.initial_state(p), back.initial_state(p));
            }
        }
    }

    #[test]
    fn receive_before_send_is_rejected() {
        let text = "n=2\n\
                    1 1 recv vc=[1,1] vars{} recv<-2#1\n\
                    2 1 send vc=[1,1] vars{} send->1#1\n";
        // Structurally every receive pairs a send, but the clocks force the
        // receive causally before its own send: no replay order exists.
        match parse_trace(text) {
            Err(SliceError::TraceParse { .. }) => {}
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn clock_mismatch_names_the_line() {
        let text = "n=2\n\
                    1 1 internal vc=[1,1] vars{x1=1}\n\
                    2 1 internal vc=[0,1] vars{x2=1}\n";
        match parse_trace(text) {
            Err(SliceError::TraceParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a clock error, got {other:?}"),
        }
    }

    #[test]
    fn missing_pairing_is_rejected() {
        let text = "n=2\n\
                    2 1 recv vc=[0,1] vars{} recv<-1#1\n";
        assert!(parse_trace(text).is_err());
    }
}
