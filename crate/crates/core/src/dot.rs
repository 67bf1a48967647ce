//! DOT rendering of computations and slices.

use std::collections::BTreeSet;

use crate::cut::Cut;
use crate::event::EventKind;
use crate::oracle::Slice;
use crate::trace::Trace;

/// The computation as a space-time diagram: one row per process, arrows for
/// messages.
pub fn computation_dot(trace: &Trace) -> String {
    let mut out = String::from("digraph computation {\n  rankdir=LR;\n  node [shape=circle];\n");
    for pid in trace.process_ids() {
        let evs = trace.events_of(pid);
        let names: Vec<String> = evs.iter().map(|e| format!("p{}e{}", pid, e.eid())).collect();
        for (e, name) in evs.iter().zip(&names) {
            let label: Vec<String> = e
                .state
                .vars
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            out.push_str(&format!(
                "  {name} [label=\"{},{}\\n{}\"];\n",
                pid,
                e.eid(),
                label.join(",")
            ));
        }
        for pair in names.windows(2) {
            out.push_str(&format!("  {} -> {};\n", pair[0], pair[1]));
        }
        out.push_str(&format!(
            "  {{ rank=same; {} }}\n",
            names.join("; ")
        ));
    }
    for e in trace.all_events() {
        if let EventKind::Recv { sender, .. } = e.kind {
            out.push_str(&format!(
                "  p{}e{} -> p{}e{} [constraint=false, style=dashed];\n",
                sender.pid,
                sender.eid,
                e.pid(),
                e.eid()
            ));
        }
    }
    out.push_str("}\n");
    out
}

/// The slice as the diagram of its join-irreducible cuts ordered by
/// inclusion (covering edges only).
pub fn slice_dot(slice: &Slice) -> String {
    let cuts: Vec<&Cut> = slice.unique_cuts.iter().collect();
    let mut out = String::from("digraph slice {\n  rankdir=BT;\n  node [shape=box];\n");
    let name = |c: &Cut| format!("c{}", format!("{c}").replace(['[', ']', ','], "_"));
    for c in &cuts {
        let generators: Vec<String> = slice
            .per_event
            .iter()
            .filter(|(_, jb)| jb.as_ref() == Some(*c))
            .map(|(e, _)| format!("{e}"))
            .collect();
        out.push_str(&format!(
            "  {} [label=\"{}\\n{{{}}}\"];\n",
            name(c),
            c,
            generators.join(" ")
        ));
    }
    let set: BTreeSet<&Cut> = cuts.iter().copied().collect();
    for a in &cuts {
        for b in &cuts {
            if a != b && a.subset_of(b) {
                let covered = set
                    .iter()
                    .any(|m| **a != **m && **m != **b && a.subset_of(m) && m.subset_of(b));
                if !covered {
                    out.push_str(&format!("  {} -> {};\n", name(a), name(b)));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::predicate::PredicateSpec;
    use crate::trace::two_process_demo;

    #[test]
    fn dot_outputs_are_wellformed() {
        let t = two_process_demo();
        let comp = computation_dot(&t);
        assert!(comp.starts_with("digraph"));
        assert!(comp.contains("p1e2 -> p2e2"), "message edge missing");
        let slice = oracle::slice_bruteforce(&t, &PredicateSpec::AllChannelsEmpty).unwrap();
        let dot = slice_dot(&slice);
        assert!(dot.contains("digraph slice"));
        assert_eq!(dot.matches("->").count() >= 4, true);
    }
}
