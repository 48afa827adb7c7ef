//! Rational operations: composition with epsilon filtering, trimming,
//! epsilon removal, arc sorting, union and concatenation. All operations
//! leave their inputs untouched and return new machines.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::fst::{Arc, Wfst};
use crate::symbol::EPSILON;
use crate::{StateId, Weight, WfstError};

/// Epsilon-sequencing filter states. Between two real matches the filter
/// admits exactly one interleaving of epsilon moves: all of `b`'s
/// input-epsilon arcs fire first, then `a`'s output-epsilon arcs drain.
/// Keeping `b`'s side first means structural arcs spliced into a grammar
/// (tags, markers) stay on pure input-epsilon arcs after composition
/// instead of pairing with unrelated input.
const FILTER_NONE: u8 = 0;
const FILTER_A_ONLY: u8 = 1;

/// Relational composition: pairs `a`'s output tape with `b`'s input tape.
/// Requires `a.osyms == b.isyms` (by content). The result is trimmed.
pub fn compose(a: &Wfst, b: &Wfst) -> Result<Wfst, WfstError> {
    if a.osyms() != b.isyms() {
        return Err(WfstError::SymbolTableMismatch(
            "compose: left output symbols differ from right input symbols".into(),
        ));
    }
    let mut out = Wfst::new(a.isyms().clone(), b.osyms().clone());
    let (a_start, b_start) = match (a.start(), b.start()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Ok(out),
    };

    // b's arcs grouped per state and sorted by ilabel for range matching.
    let b_sorted: Vec<Vec<Arc>> = (0..b.num_states() as StateId)
        .map(|s| {
            let mut arcs = b.arcs(s).to_vec();
            arcs.sort_by_key(|x| x.sort_key());
            arcs
        })
        .collect();

    let mut ids: HashMap<(StateId, StateId, u8), StateId> = HashMap::new();
    let mut queue: VecDeque<(StateId, StateId, u8)> = VecDeque::new();
    let root = (a_start, b_start, FILTER_NONE);
    ids.insert(root, out.add_state());
    out.set_start(0);
    queue.push_back(root);

    while let Some(key @ (sa, sb, filter)) = queue.pop_front() {
        let sid = ids[&key];
        if let (Some(fa), Some(fb)) = (a.final_weight(sa), b.final_weight(sb)) {
            out.set_final(sid, fa.times(fb));
        }
        let mut intern = |out: &mut Wfst, k: (StateId, StateId, u8)| -> StateId {
            if let Some(&id) = ids.get(&k) {
                id
            } else {
                let id = out.add_state();
                ids.insert(k, id);
                queue.push_back(k);
                id
            }
        };

        for arc_a in a.arcs(sa) {
            if arc_a.olabel == EPSILON {
                // a advances alone, emitting nothing on the shared tape.
                let next = intern(&mut out, (arc_a.nextstate, sb, FILTER_A_ONLY));
                out.add_arc(sid, Arc::new(arc_a.ilabel, EPSILON, arc_a.weight, next));
            } else {
                // Real match on a shared label.
                for arc_b in matching_arcs(&b_sorted[sb as usize], arc_a.olabel) {
                    let next = intern(&mut out, (arc_a.nextstate, arc_b.nextstate, FILTER_NONE));
                    out.add_arc(
                        sid,
                        Arc::new(
                            arc_a.ilabel,
                            arc_b.olabel,
                            arc_a.weight.times(arc_b.weight),
                            next,
                        ),
                    );
                }
            }
        }
        // b advances alone on an input-epsilon arc; blocked once a has
        // started draining, which pins the canonical order.
        if filter == FILTER_NONE {
            for arc_b in eps_arcs(&b_sorted[sb as usize]) {
                let next = intern(&mut out, (sa, arc_b.nextstate, FILTER_NONE));
                out.add_arc(sid, Arc::new(EPSILON, arc_b.olabel, arc_b.weight, next));
            }
        }
    }

    Ok(connect(&out))
}

fn matching_arcs(sorted: &[Arc], label: crate::Label) -> &[Arc] {
    let lo = sorted.partition_point(|a| a.ilabel < label);
    let hi = sorted.partition_point(|a| a.ilabel <= label);
    &sorted[lo..hi]
}

fn eps_arcs(sorted: &[Arc]) -> &[Arc] {
    matching_arcs(sorted, EPSILON)
}

/// Removes states that are not on some start-to-final path.
pub fn connect(f: &Wfst) -> Wfst {
    let mut out = Wfst::new(f.isyms().clone(), f.osyms().clone());
    let start = match f.start() {
        Some(s) => s,
        None => return out,
    };
    let n = f.num_states();

    // Forward reachability from the start state.
    let mut fwd = vec![false; n];
    let mut stack = vec![start];
    fwd[start as usize] = true;
    while let Some(s) = stack.pop() {
        for a in f.arcs(s) {
            if !fwd[a.nextstate as usize] {
                fwd[a.nextstate as usize] = true;
                stack.push(a.nextstate);
            }
        }
    }

    // Backward reachability from final states over reversed arcs.
    let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n as StateId {
        for a in f.arcs(s) {
            rev[a.nextstate as usize].push(s);
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<StateId> = f.finals().map(|(s, _)| s).collect();
    for &s in &stack {
        bwd[s as usize] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &rev[s as usize] {
            if !bwd[p as usize] {
                bwd[p as usize] = true;
                stack.push(p);
            }
        }
    }

    let keep: Vec<bool> = (0..n).map(|s| fwd[s] && bwd[s]).collect();
    let mut remap = vec![StateId::MAX; n];
    for s in 0..n {
        if keep[s] {
            remap[s] = out.add_state();
        }
    }
    if !keep[start as usize] {
        // No accepting path at all: keep a lone start state so the result
        // still has a well-defined start.
        let s = out.add_state();
        out.set_start(s);
        return out;
    }
    out.set_start(remap[start as usize]);
    for s in 0..n {
        if !keep[s] {
            continue;
        }
        for a in f.arcs(s as StateId) {
            if keep[a.nextstate as usize] {
                out.add_arc(
                    remap[s],
                    Arc::new(a.ilabel, a.olabel, a.weight, remap[a.nextstate as usize]),
                );
            }
        }
        if let Some(w) = f.final_weight(s as StateId) {
            out.set_final(remap[s], w);
        }
    }
    out
}

/// Removes arcs that are epsilon on both tapes, preserving the weighted
/// relation. Arcs that are epsilon on only one tape are kept.
pub fn rm_epsilon(f: &Wfst) -> Wfst {
    let mut out = Wfst::new(f.isyms().clone(), f.osyms().clone());
    let start = match f.start() {
        Some(s) => s,
        None => return out,
    };
    let n = f.num_states();
    out.add_states(n);
    out.set_start(start);

    for s in 0..n as StateId {
        // Min-cost epsilon closure of s over two-sided epsilon arcs.
        let closure = eps_closure(f, s);
        for (&t, &w) in &closure {
            for a in f.arcs(t) {
                if !a.is_epsilon() {
                    out.add_arc(s, Arc::new(a.ilabel, a.olabel, w.times(a.weight), a.nextstate));
                }
            }
            if let Some(fw) = f.final_weight(t) {
                let total = w.times(fw);
                let current = out.final_weight(s).unwrap_or(Weight::zero());
                out.set_final(s, current.plus(total));
            }
        }
    }
    connect(&out)
}

fn eps_closure(f: &Wfst, s: StateId) -> HashMap<StateId, Weight> {
    let mut dist: HashMap<StateId, Weight> = HashMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<(Weight, StateId)>> = BinaryHeap::new();
    dist.insert(s, Weight::one());
    heap.push(std::cmp::Reverse((Weight::one(), s)));
    while let Some(std::cmp::Reverse((w, t))) = heap.pop() {
        if dist.get(&t).is_some_and(|&best| w > best) {
            continue;
        }
        for a in f.arcs(t) {
            if a.is_epsilon() {
                let nw = w.times(a.weight);
                let entry = dist.entry(a.nextstate).or_insert(Weight::zero());
                if nw < *entry {
                    *entry = nw;
                    heap.push(std::cmp::Reverse((nw, a.nextstate)));
                }
            }
        }
    }
    dist
}

/// Orders every state's arcs by input label (then output label, weight and
/// target) so composition can match by range.
pub fn arc_sort(f: &Wfst) -> Wfst {
    let mut out = Wfst::new(f.isyms().clone(), f.osyms().clone());
    out.add_states(f.num_states());
    if let Some(s) = f.start() {
        out.set_start(s);
    }
    for s in 0..f.num_states() as StateId {
        let mut arcs = f.arcs(s).to_vec();
        arcs.sort_by_key(|a| a.sort_key());
        for a in arcs {
            out.add_arc(s, a);
        }
        if let Some(w) = f.final_weight(s) {
            out.set_final(s, w);
        }
    }
    out
}

/// Union of the weighted relations of `a` and `b`.
pub fn union(a: &Wfst, b: &Wfst) -> Result<Wfst, WfstError> {
    check_same_tables(a, b, "union")?;
    let mut out = Wfst::new(a.isyms().clone(), a.osyms().clone());
    let start = out.add_state();
    out.set_start(start);
    let a_off = copy_states(&mut out, a);
    let b_off = copy_states(&mut out, b);
    if let Some(s) = a.start() {
        out.add_arc(start, Arc::epsilon(Weight::one(), a_off + s));
    }
    if let Some(s) = b.start() {
        out.add_arc(start, Arc::epsilon(Weight::one(), b_off + s));
    }
    Ok(out)
}

/// Concatenation: every final of `a` continues into `b`'s start, paying the
/// final weight on the connecting arc.
pub fn concat(a: &Wfst, b: &Wfst) -> Result<Wfst, WfstError> {
    check_same_tables(a, b, "concat")?;
    let mut out = Wfst::new(a.isyms().clone(), a.osyms().clone());
    let a_off = copy_states(&mut out, a);
    let b_off = copy_states(&mut out, b);
    if let Some(s) = a.start() {
        out.set_start(a_off + s);
    }
    // a's finals become plain states feeding b.
    for (s, w) in a.finals() {
        out.set_final(a_off + s, Weight::infinity());
        if let Some(bs) = b.start() {
            out.add_arc(a_off + s, Arc::epsilon(w, b_off + bs));
        }
    }
    Ok(out)
}

fn check_same_tables(a: &Wfst, b: &Wfst, op: &str) -> Result<(), WfstError> {
    if a.isyms() != b.isyms() || a.osyms() != b.osyms() {
        return Err(WfstError::SymbolTableMismatch(format!(
            "{op}: operands use different symbol tables"
        )));
    }
    Ok(())
}

/// Copies all of `src`'s states, arcs and finals into `dst`, returning the
/// offset of the first copied state.
fn copy_states(dst: &mut Wfst, src: &Wfst) -> StateId {
    let off = dst.add_states(src.num_states());
    for s in 0..src.num_states() as StateId {
        for a in src.arcs(s) {
            dst.add_arc(off + s, Arc::new(a.ilabel, a.olabel, a.weight, off + a.nextstate));
        }
        if let Some(w) = src.final_weight(s) {
            dst.set_final(off + s, w);
        }
    }
    off
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SymbolTable;
    use std::sync::Arc as Shared;

    fn table(syms: &[&str]) -> crate::TableRef {
        Shared::new(SymbolTable::from_symbols(syms.to_vec()))
    }

    /// Linear acceptor over `labels` with unit weights.
    fn chain(t: &crate::TableRef, labels: &[crate::Label]) -> Wfst {
        let mut f = Wfst::new(t.clone(), t.clone());
        let s0 = f.add_state();
        f.set_start(s0);
        let mut cur = s0;
        for &l in labels {
            let nxt = f.add_state();
            f.add_arc(cur, Arc::new(l, l, Weight::one(), nxt));
            cur = nxt;
        }
        f.set_final(cur, Weight::one());
        f
    }

    #[test]
    fn compose_table_mismatch() {
        let t1 = table(&["a"]);
        let t2 = table(&["b"]);
        let f1 = chain(&t1, &[1]);
        let f2 = chain(&t2, &[1]);
        assert!(matches!(
            compose(&f1, &f2),
            Err(WfstError::SymbolTableMismatch(_))
        ));
    }

    #[test]
    fn compose_identity() {
        // Composing with an identity acceptor keeps the relation.
        let t = table(&["a", "b"]);
        let f = chain(&t, &[1, 2, 1]);
        let mut id = Wfst::new(t.clone(), t.clone());
        let s = id.add_state();
        id.set_start(s);
        id.set_final(s, Weight::one());
        for l in 1..=2 {
            id.add_arc(s, Arc::new(l, l, Weight::one(), s));
        }
        let c = compose(&f, &id).unwrap();
        let acc = c.accepts(&[1, 2, 1]).unwrap().expect("accepted");
        assert_eq!(acc.olabels, vec![1, 2, 1]);
        assert!(c.accepts(&[1, 2]).unwrap().is_none());
    }

    #[test]
    fn connect_drops_unreachable() {
        let t = table(&["a"]);
        let mut f = chain(&t, &[1]);
        f.add_state(); // unreachable
        assert_eq!(f.num_states(), 3);
        let g = connect(&f);
        assert_eq!(g.num_states(), 2);
        assert!(g.accepts(&[1]).unwrap().is_some());
    }

    #[test]
    fn connect_no_path() {
        let t = table(&["a"]);
        let mut f = Wfst::new(t.clone(), t.clone());
        let s0 = f.add_state();
        let s1 = f.add_state();
        f.set_start(s0);
        f.add_arc(s0, Arc::new(1, 1, Weight::one(), s1));
        // no finals
        let g = connect(&f);
        assert_eq!(g.num_states(), 1);
        assert_eq!(g.num_arcs(), 0);
        assert!(g.accepts(&[1]).unwrap().is_none());
    }

    #[test]
    fn union_accepts_both() {
        let t = table(&["a", "b"]);
        let f = union(&chain(&t, &[1]), &chain(&t, &[2, 2])).unwrap();
        assert!(f.accepts(&[1]).unwrap().is_some());
        assert!(f.accepts(&[2, 2]).unwrap().is_some());
        assert!(f.accepts(&[2]).unwrap().is_none());
    }

    #[test]
    fn concat_joins() {
        let t = table(&["a", "b"]);
        let f = concat(&chain(&t, &[1]), &chain(&t, &[2])).unwrap();
        assert!(f.accepts(&[1, 2]).unwrap().is_some());
        assert!(f.accepts(&[1]).unwrap().is_none());
        assert!(f.accepts(&[2]).unwrap().is_none());
    }

    #[test]
    fn rm_epsilon_removes_two_sided_only() {
        let t = table(&["a", "tag"]);
        let mut f = Wfst::new(t.clone(), t.clone());
        let s0 = f.add_state();
        let s1 = f.add_state();
        let s2 = f.add_state();
        let s3 = f.add_state();
        f.set_start(s0);
        f.add_arc(s0, Arc::epsilon(Weight::new(0.25), s1));
        f.add_arc(s1, Arc::new(1, 1, Weight::new(1.0), s2));
        // input-epsilon arc emitting a tag: must survive
        f.add_arc(s2, Arc::new(EPSILON, 2, Weight::new(0.5), s3));
        f.set_final(s3, Weight::one());
        let g = rm_epsilon(&f);
        assert!(g
            .arcs_iter()
            .all(|a| !(a.ilabel == EPSILON && a.olabel == EPSILON)));
        let acc = g.accepts(&[1]).unwrap().expect("still accepted");
        assert_eq!(acc.olabels, vec![1, 2]);
        assert!((acc.cost.value() - 1.75).abs() < 1e-9);
    }

    #[test]
    fn arc_sort_orders_by_ilabel() {
        let t = table(&["a", "b", "c"]);
        let mut f = Wfst::new(t.clone(), t.clone());
        let s0 = f.add_state();
        let s1 = f.add_state();
        f.set_start(s0);
        f.set_final(s1, Weight::one());
        f.add_arc(s0, Arc::new(3, 3, Weight::one(), s1));
        f.add_arc(s0, Arc::new(1, 1, Weight::one(), s1));
        f.add_arc(s0, Arc::new(2, 2, Weight::one(), s1));
        let g = arc_sort(&f);
        let labels: Vec<_> = g.arcs(0).iter().map(|a| a.ilabel).collect();
        assert_eq!(labels, vec![1, 2, 3]);
    }
}
