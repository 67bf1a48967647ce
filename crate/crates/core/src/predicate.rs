//! Declarative regular predicates, their evaluation on global states, and
//! the forbidden-process search behind the linearity property.

use std::fmt;

use crate::error::{Result, SliceError};
use crate::event::{LocalState, ProcessId};
use crate::trace::Trace;

/// Binary predicate verdict.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    True,
    False,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::True
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        };
        f.write_str(s)
    }
}

/// One local clause of a conjunctive predicate: a comparison on a single
/// process's variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    pub pid: ProcessId,
    pub var: String,
    pub cmp: Cmp,
    pub constant: i64,
}

/// A regular predicate over a computation's global states.
///
/// Conjunctions of local clauses and monotonic channel predicates are both
/// closed under join and meet of satisfying cuts, which is what the slicing
/// algorithms require.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PredicateSpec {
    /// Conjunction of per-process local clauses.
    Conjunctive(Vec<Clause>),
    /// Every channel has delivered everything sent on it.
    AllChannelsEmpty,
    /// At most `k` messages in transit on the channel `from -> to`.
    AtMostKInTransit {
        from: ProcessId,
        to: ProcessId,
        k: u64,
    },
    /// Conjunction of the above.
    ConjunctionOf(Vec<PredicateSpec>),
}

impl PredicateSpec {
    /// Parses the predicate text grammar:
    ///
    /// ```text
    /// pred      := term ( '&&' term )*
    /// term      := 'conj' clause+                e.g. conj x1>=1 x3<=3
    ///            | 'channels-empty'
    ///            | 'in-transit' FROM TO '<='K    e.g. in-transit 1 2 <=0
    /// clause    := VAR (< | <= | = | == | >= | >) INT
    /// ```
    ///
    /// Clause variables are bound to processes by name against the trace;
    /// a variable must belong to exactly one process.
    pub fn parse(text: &str, trace: &Trace) -> Result<PredicateSpec> {
        let mut terms = Vec::new();
        for part in text.split("&&") {
            let part = part.trim();
            if part.is_empty() {
                return Err(SliceError::PredicateParse("empty predicate term".into()));
            }
            terms.push(parse_term(part, trace)?);
        }
        let spec = if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            PredicateSpec::ConjunctionOf(terms)
        };
        spec.validate(trace)?;
        Ok(spec)
    }

    /// Checks process ids are in range and every clause variable belongs to
    /// the process it is bound to.
    pub fn validate(&self, trace: &Trace) -> Result<()> {
        let n = trace.n() as u32;
        match self {
            PredicateSpec::Conjunctive(clauses) => {
                if clauses.is_empty() {
                    return Err(SliceError::Predicate(
                        "conjunction needs at least one clause".into(),
                    ));
                }
                for c in clauses {
                    if c.pid.get() > n {
                        return Err(SliceError::Predicate(format!(
                            "clause on {} but the trace has {} processes",
                            c.pid, n
                        )));
                    }
                    if !trace.variables_of(c.pid).any(|v| v == c.var) {
                        return Err(SliceError::Predicate(format!(
                            "unknown variable {} on {}",
                            c.var, c.pid
                        )));
                    }
                }
                Ok(())
            }
            PredicateSpec::AllChannelsEmpty => Ok(()),
            PredicateSpec::AtMostKInTransit { from, to, .. } => {
                if from.get() > n || to.get() > n || from == to {
                    return Err(SliceError::Predicate(format!(
                        "bad channel {from}->{to} for an {n}-process trace"
                    )));
                }
                Ok(())
            }
            PredicateSpec::ConjunctionOf(members) => {
                if members.is_empty() {
                    return Err(SliceError::Predicate(
                        "composite conjunction needs at least one member".into(),
                    ));
                }
                members.iter().try_for_each(|m| m.validate(trace))
            }
        }
    }

    /// Evaluates the predicate on a global state given as one local state
    /// per process.
    pub fn evaluate(&self, states: &[&LocalState]) -> Verdict {
        self.holds_on(states).into()
    }

    fn holds_on(&self, states: &[&LocalState]) -> bool {
        match self {
            PredicateSpec::Conjunctive(clauses) => clauses
                .iter()
                .all(|c| c.cmp.eval(states[c.pid.index()].var(&c.var), c.constant)),
            PredicateSpec::AllChannelsEmpty => in_transit_channels(states)
                .all(|(_, _, count)| count == 0),
            PredicateSpec::AtMostKInTransit { from, to, k } => {
                transit_count(states, *from, *to) <= *k
            }
            PredicateSpec::ConjunctionOf(members) => {
                members.iter().all(|m| m.holds_on(states))
            }
        }
    }

    /// The forbidden process of a falsifying global state: a process that
    /// must advance before any satisfying cut can be reached. Checks `this`
    /// first, then processes in ascending id order.
    ///
    /// Must only be called when `evaluate` is false; panics otherwise.
    pub fn forbidden_process(
        &self,
        states: &[&LocalState],
        this: Option<ProcessId>,
    ) -> ProcessId {
        match self.find_forbidden(states, this) {
            Some(p) => p,
            None => panic!("forbidden_process called on a satisfying state"),
        }
    }

    fn find_forbidden(&self, states: &[&LocalState], this: Option<ProcessId>) -> Option<ProcessId> {
        match self {
            PredicateSpec::Conjunctive(clauses) => {
                let false_on = |p: ProcessId| {
                    clauses
                        .iter()
                        .any(|c| c.pid == p && !c.cmp.eval(states[p.index()].var(&c.var), c.constant))
                };
                if let Some(me) = this {
                    if false_on(me) {
                        return Some(me);
                    }
                }
                (1..=states.len() as u32)
                    .map(ProcessId::new)
                    .find(|&p| false_on(p))
            }
            PredicateSpec::AllChannelsEmpty => {
                let pending: Vec<(ProcessId, ProcessId)> = in_transit_channels(states)
                    .filter(|&(_, _, count)| count > 0)
                    .map(|(from, to, _)| (from, to))
                    .collect();
                if pending.is_empty() {
                    return None;
                }
                // A channel empties only when its receiver advances.
                if let Some(me) = this {
                    if pending.iter().any(|&(_, to)| to == me) {
                        return Some(me);
                    }
                }
                pending.iter().min().map(|&(_, to)| to)
            }
            PredicateSpec::AtMostKInTransit { from, to, k } => {
                (transit_count(states, *from, *to) > *k).then_some(*to)
            }
            PredicateSpec::ConjunctionOf(members) => {
                let falsified: Vec<ProcessId> = members
                    .iter()
                    .filter_map(|m| m.find_forbidden(states, this))
                    .collect();
                if let Some(me) = this {
                    if falsified.contains(&me) {
                        return Some(me);
                    }
                }
                falsified.first().copied()
            }
        }
    }
}

fn transit_count(states: &[&LocalState], from: ProcessId, to: ProcessId) -> u64 {
    let sent = states[from.index()].sent[to.index()];
    let recvd = states[to.index()].recvd[from.index()];
    sent.saturating_sub(recvd)
}

fn in_transit_channels<'a>(
    states: &'a [&LocalState],
) -> impl Iterator<Item = (ProcessId, ProcessId, u64)> + 'a {
    let n = states.len();
    (0..n).flat_map(move |i| {
        (0..n).filter_map(move |j| {
            if i == j {
                return None;
            }
            let from = ProcessId::from_index(i);
            let to = ProcessId::from_index(j);
            Some((from, to, transit_count(states, from, to)))
        })
    })
}

fn parse_term(part: &str, trace: &Trace) -> Result<PredicateSpec> {
    let tokens: Vec<&str> = part.split_whitespace().collect();
    match tokens[0] {
        "channels-empty" => {
            if tokens.len() != 1 {
                return Err(SliceError::PredicateParse(
                    "channels-empty takes no arguments".into(),
                ));
            }
            Ok(PredicateSpec::AllChannelsEmpty)
        }
        "in-transit" => {
            if tokens.len() != 4 {
                return Err(SliceError::PredicateParse(
                    "expected: in-transit FROM TO <=K".into(),
                ));
            }
            let from = parse_pid(tokens[1])?;
            let to = parse_pid(tokens[2])?;
            let bound = tokens[3].strip_prefix("<=").ok_or_else(|| {
                SliceError::PredicateParse(format!(
                    "in-transit bound must look like <=K, got {}",
                    tokens[3]
                ))
            })?;
            let k: u64 = bound
                .parse()
                .map_err(|_| SliceError::PredicateParse(format!("bad bound {bound}")))?;
            Ok(PredicateSpec::AtMostKInTransit { from, to, k })
        }
        "conj" => {
            if tokens.len() < 2 {
                return Err(SliceError::PredicateParse(
                    "conj needs at least one clause".into(),
                ));
            }
            let clauses = tokens[1..]
                .iter()
                .map(|t| parse_clause(t, trace))
                .collect::<Result<Vec<_>>>()?;
            Ok(PredicateSpec::Conjunctive(clauses))
        }
        other => Err(SliceError::PredicateParse(format!(
            "unknown predicate term {other}"
        ))),
    }
}

fn parse_pid(tok: &str) -> Result<ProcessId> {
    let v: u32 = tok
        .parse()
        .map_err(|_| SliceError::PredicateParse(format!("bad process id {tok}")))?;
    if v == 0 {
        return Err(SliceError::PredicateParse("process ids are 1-based".into()));
    }
    Ok(ProcessId::new(v))
}

fn parse_clause(tok: &str, trace: &Trace) -> Result<Clause> {
    let ops = [
        ("<=", Cmp::Le),
        (">=", Cmp::Ge),
        ("==", Cmp::Eq),
        ("=", Cmp::Eq),
        ("<", Cmp::Lt),
        (">", Cmp::Gt),
    ];
    for (sym, cmp) in ops {
        if let Some(pos) = tok.find(sym) {
            // Longest operators listed first, so a '<' inside '<=' never
            // matches early.
            let var = &tok[..pos];
            let num = &tok[pos + sym.len()..];
            if var.is_empty() {
                break;
            }
            let constant: i64 = num
                .parse()
                .map_err(|_| SliceError::PredicateParse(format!("bad constant in {tok}")))?;
            let owners: Vec<ProcessId> = trace
                .process_ids()
                .filter(|&p| trace.variables_of(p).any(|v| v == var))
                .collect();
            let pid = match owners.as_slice() {
                [p] => *p,
                [] => {
                    return Err(SliceError::Predicate(format!(
                        "variable {var} does not appear in the trace"
                    )))
                }
                _ => {
                    return Err(SliceError::Predicate(format!(
                        "variable {var} appears on more than one process"
                    )))
                }
            };
            return Ok(Clause {
                pid,
                var: var.to_string(),
                cmp,
                constant,
            });
        }
    }
    Err(SliceError::PredicateParse(format!(
        "clause {tok} is not VAR op INT"
    )))
}

/// Trace-level regularity check: true iff the set of satisfying consistent
/// cuts is closed under join and meet. A test utility for validating that a
/// configured predicate is regular on a given trace.
pub fn is_regular_witness(spec: &PredicateSpec, trace: &Trace) -> Result<bool> {
    crate::oracle::closed_under_join_meet(trace, usize::MAX, |states| {
        spec.evaluate(states).holds()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{two_process_demo, TraceBuilder};

    fn states_of(trace: &Trace, frontier: &[u32]) -> Vec<LocalState> {
        let cut = crate::cut::Cut(frontier.to_vec());
        trace.states_at(&cut).into_iter().cloned().collect()
    }

    fn eval(spec: &PredicateSpec, trace: &Trace, frontier: &[u32]) -> Verdict {
        let states = states_of(trace, frontier);
        let refs: Vec<&LocalState> = states.iter().collect();
        spec.evaluate(&refs)
    }

    #[test]
    fn channels_empty_on_demo_cuts() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        assert_eq!(eval(&b, &t, &[2, 1]), Verdict::False); // send b undelivered
        assert_eq!(eval(&b, &t, &[2, 2]), Verdict::True); // f received it
        assert_eq!(eval(&b, &t, &[0, 0]), Verdict::True); // nothing sent
    }

    #[test]
    fn forbidden_process_points_at_the_receiver() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        let states = states_of(&t, &[2, 1]);
        let refs: Vec<&LocalState> = states.iter().collect();
        assert_eq!(b.forbidden_process(&refs, None), ProcessId::new(2));

        let states = states_of(&t, &[2, 0]);
        let refs: Vec<&LocalState> = states.iter().collect();
        assert_eq!(b.forbidden_process(&refs, None), ProcessId::new(2));
    }

    #[test]
    fn conjunctive_forbidden_checks_self_first() {
        let mut bld = TraceBuilder::new(2);
        let p1 = ProcessId::new(1);
        let p2 = ProcessId::new(2);
        bld.internal(p1, Some(("x1", 0)));
        bld.internal(p2, Some(("x2", 5)));
        let t = bld.finish();
        let spec = PredicateSpec::parse("conj x1>=1 x2>=1", &t).unwrap();
        let states = states_of(&t, &[1, 1]);
        let refs: Vec<&LocalState> = states.iter().collect();
        // x1=0 falsifies its clause; self is P1, so P1 is forbidden.
        assert_eq!(spec.forbidden_process(&refs, Some(p1)), p1);
        // From P2's viewpoint P2's clause holds, so ascending order gives P1.
        assert_eq!(spec.forbidden_process(&refs, Some(p2)), p1);
    }

    #[test]
    #[should_panic(expected = "satisfying state")]
    fn forbidden_on_satisfying_state_is_a_contract_violation() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        let states = states_of(&t, &[2, 2]);
        let refs: Vec<&LocalState> = states.iter().collect();
        b.forbidden_process(&refs, None);
    }

    #[test]
    fn parse_and_validate() {
        let t = two_process_demo();
        assert!(PredicateSpec::parse("channels-empty", &t).is_ok());
        assert!(PredicateSpec::parse("conj x1>=1 x2<=3", &t).is_ok());
        assert!(PredicateSpec::parse("in-transit 1 2 <=0", &t).is_ok());
        assert!(PredicateSpec::parse("conj x9>=1", &t).is_err());
        assert!(PredicateSpec::parse("in-transit 1 1 <=0", &t).is_err());
        assert!(PredicateSpec::parse("nonsense", &t).is_err());
        let composite = PredicateSpec::parse("conj x1>=1 && channels-empty", &t).unwrap();
        assert!(matches!(composite, PredicateSpec::ConjunctionOf(ref m) if m.len() == 2));
    }

    #[test]
    fn evaluate_is_pure() {
        let t = two_process_demo();
        let b = PredicateSpec::AllChannelsEmpty;
        for f in [[0, 0], [2, 1], [2, 2], [3, 2]] {
            assert_eq!(eval(&b, &t, &f), eval(&b, &t, &f));
        }
    }
}
