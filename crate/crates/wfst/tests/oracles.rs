//! Exhaustive cross-checks against brute-force path enumeration. The
//! machines generated here are acyclic (arcs only go to higher state ids),
//! so every complete path can be enumerated and the full weighted relation
//! compared.

use std::collections::HashMap;
use std::sync::Arc as Shared;

use proptest::prelude::*;
use wfst::{arc_sort, compose, concat, connect, rm_epsilon, union};
use wfst::{Arc, Label, StateId, SymbolTable, TableRef, Weight, Wfst, EPSILON};

const TOL: f64 = 1e-9;

fn table() -> TableRef {
    Shared::new(SymbolTable::from_symbols(["x", "y", "z"]))
}

/// Every complete start-to-final path as (input labels, output labels,
/// cost), epsilons dropped from the label sequences.
fn enumerate_paths(f: &Wfst) -> Vec<(Vec<Label>, Vec<Label>, f64)> {
    let mut out = Vec::new();
    let start = match f.start() {
        Some(s) => s,
        None => return out,
    };
    let mut stack: Vec<(StateId, Vec<Label>, Vec<Label>, f64)> =
        vec![(start, Vec::new(), Vec::new(), 0.0)];
    while let Some((s, ins, outs, cost)) = stack.pop() {
        if let Some(w) = f.final_weight(s) {
            out.push((ins.clone(), outs.clone(), cost + w.value()));
        }
        for a in f.arcs(s) {
            let mut ins = ins.clone();
            let mut outs = outs.clone();
            if a.ilabel != EPSILON {
                ins.push(a.ilabel);
            }
            if a.olabel != EPSILON {
                outs.push(a.olabel);
            }
            stack.push((a.nextstate, ins, outs, cost + a.weight.value()));
        }
    }
    out
}

/// The weighted relation: minimum cost per (input, output) string pair.
fn relation(f: &Wfst) -> HashMap<(Vec<Label>, Vec<Label>), f64> {
    let mut rel: HashMap<(Vec<Label>, Vec<Label>), f64> = HashMap::new();
    for (ins, outs, cost) in enumerate_paths(f) {
        rel.entry((ins, outs))
            .and_modify(|c| *c = c.min(cost))
            .or_insert(cost);
    }
    rel
}

fn assert_relations_equal(
    got: &HashMap<(Vec<Label>, Vec<Label>), f64>,
    want: &HashMap<(Vec<Label>, Vec<Label>), f64>,
) {
    assert_eq!(
        got.keys().count(),
        want.keys().count(),
        "relation sizes differ: got {:?} want {:?}",
        got,
        want
    );
    for (k, wc) in want {
        let gc = got.get(k).unwrap_or_else(|| panic!("missing pair {k:?}"));
        assert!(
            (gc - wc).abs() <= TOL,
            "cost mismatch for {k:?}: got {gc} want {wc}"
        );
    }
}

/// Raw material for a random acyclic machine.
#[derive(Debug, Clone)]
struct FstSpec {
    states: usize,
    arcs: Vec<(usize, usize, u32, u32, f64)>,
    finals: Vec<(usize, f64)>,
}

fn arb_fst_spec(max_states: usize, max_arcs: usize) -> impl Strategy<Value = FstSpec> {
    (2..=max_states).prop_flat_map(move |n| {
        let arcs = proptest::collection::vec(
            (0..n - 1, 1..n, 0u32..=3, 0u32..=3, 0.0..2.0f64),
            0..=max_arcs,
        );
        let finals = proptest::collection::vec((0..n, 0.0..1.0f64), 1..=2);
        (Just(n), arcs, finals).prop_map(|(states, raw, finals)| {
            let arcs = raw
                .into_iter()
                .map(|(from, jump, il, ol, w)| {
                    // force forward arcs: target strictly above the source
                    let to = from + 1 + (jump - 1) % (states - from - 1).max(1);
                    (from, to.min(states - 1), il, ol, w)
                })
                .collect();
            FstSpec {
                states,
                arcs,
                finals,
            }
        })
    })
}

fn build(spec: &FstSpec, t: &TableRef) -> Wfst {
    let mut f = Wfst::new(t.clone(), t.clone());
    f.add_states(spec.states);
    f.set_start(0);
    for &(from, to, il, ol, w) in &spec.arcs {
        f.add_arc(
            from as StateId,
            Arc::new(il, ol, Weight::new(w), to as StateId),
        );
    }
    for &(s, w) in &spec.finals {
        f.set_final(s as StateId, Weight::new(w));
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Composition equals the brute-force join of the operands' path sets.
    #[test]
    fn compose_matches_brute_force_join(a in arb_fst_spec(5, 10), b in arb_fst_spec(5, 10)) {
        let t = table();
        let fa = build(&a, &t);
        let fb = build(&b, &t);
        let composed = compose(&fa, &fb).unwrap();

        let mut want: HashMap<(Vec<Label>, Vec<Label>), f64> = HashMap::new();
        for (x, y, c1) in enumerate_paths(&fa) {
            for (y2, z, c2) in enumerate_paths(&fb) {
                if y == y2 {
                    want.entry((x.clone(), z))
                        .and_modify(|c| *c = c.min(c1 + c2))
                        .or_insert(c1 + c2);
                }
            }
        }
        assert_relations_equal(&relation(&composed), &want);
    }

    /// Shortest path equals the exhaustive minimum over all complete paths.
    #[test]
    fn shortest_path_matches_exhaustive_min(spec in arb_fst_spec(8, 16)) {
        let t = table();
        let f = build(&spec, &t);
        let paths = enumerate_paths(&f);
        let best = paths.iter().map(|(_, _, c)| *c).fold(f64::INFINITY, f64::min);
        match f.shortest_path() {
            Some(p) => {
                prop_assert!((p.cost.value() - best).abs() <= TOL,
                    "cost {} vs exhaustive {}", p.cost.value(), best);
                // the returned labels must belong to some minimum-cost path
                let key = (p.input(), p.output());
                let found = paths.iter().any(|(i, o, c)| {
                    (i.clone(), o.clone()) == key && (c - best).abs() <= TOL
                });
                prop_assert!(found, "returned path not among minimum-cost paths");
            }
            None => prop_assert!(best.is_infinite(), "missed an accepting path"),
        }
    }

    /// Trimming, epsilon removal and arc sorting preserve the relation.
    #[test]
    fn cleanup_ops_preserve_relation(spec in arb_fst_spec(5, 12)) {
        let t = table();
        let f = build(&spec, &t);
        let want = relation(&f);
        assert_relations_equal(&relation(&connect(&f)), &want);
        assert_relations_equal(&relation(&arc_sort(&f)), &want);
        let no_eps = rm_epsilon(&f);
        assert_relations_equal(&relation(&no_eps), &want);
        prop_assert!(no_eps.arcs_iter().all(|a| !a.is_epsilon()));
    }

    /// Union and concatenation against their set-level definitions.
    #[test]
    fn union_concat_match_definitions(a in arb_fst_spec(4, 8), b in arb_fst_spec(4, 8)) {
        let t = table();
        let fa = build(&a, &t);
        let fb = build(&b, &t);

        let ra = relation(&fa);
        let rb = relation(&fb);

        let mut want_union = ra.clone();
        for (k, c) in &rb {
            want_union
                .entry(k.clone())
                .and_modify(|x| *x = x.min(*c))
                .or_insert(*c);
        }
        assert_relations_equal(&relation(&union(&fa, &fb).unwrap()), &want_union);

        let mut want_concat: HashMap<(Vec<Label>, Vec<Label>), f64> = HashMap::new();
        for ((xi, xo), c1) in &ra {
            for ((yi, yo), c2) in &rb {
                let mut i = xi.clone();
                i.extend(yi);
                let mut o = xo.clone();
                o.extend(yo);
                want_concat
                    .entry((i, o))
                    .and_modify(|x| *x = x.min(c1 + c2))
                    .or_insert(c1 + c2);
            }
        }
        assert_relations_equal(&relation(&concat(&fa, &fb).unwrap()), &want_concat);
    }

    /// Serialization round-trips structurally.
    #[test]
    fn serialization_round_trip(spec in arb_fst_spec(6, 12)) {
        let t = table();
        let f = build(&spec, &t);
        let mut bytes = Vec::new();
        f.write(&mut bytes).unwrap();
        let g = Wfst::read(&mut bytes.as_slice()).unwrap();
        prop_assert!(f == g);
    }
}

/// The epsilon filter must represent each interleaving of epsilon moves
/// exactly once: one output-epsilon path against one input-epsilon path
/// yields a single composed path, not three.
#[test]
fn compose_epsilon_paths_not_duplicated() {
    let t = table();
    let mut a = Wfst::new(t.clone(), t.clone());
    let s0 = a.add_state();
    let s1 = a.add_state();
    let s2 = a.add_state();
    a.set_start(s0);
    a.set_final(s2, Weight::one());
    a.add_arc(s0, Arc::new(1, 1, Weight::one(), s1));
    a.add_arc(s1, Arc::new(2, EPSILON, Weight::one(), s2));

    let mut b = Wfst::new(t.clone(), t.clone());
    let t0 = b.add_state();
    let t1 = b.add_state();
    let t2 = b.add_state();
    b.set_start(t0);
    b.set_final(t2, Weight::one());
    b.add_arc(t0, Arc::new(1, 1, Weight::one(), t1));
    b.add_arc(t1, Arc::new(EPSILON, 3, Weight::one(), t2));

    let c = compose(&a, &b).unwrap();
    let paths = enumerate_paths(&c);
    assert_eq!(paths.len(), 1, "duplicated epsilon interleavings: {paths:?}");
    assert_eq!(paths[0].0, vec![1, 2]);
    assert_eq!(paths[0].1, vec![1, 3]);
}

/// Same, with several pending epsilon moves on both sides.
#[test]
fn compose_epsilon_stacks_not_duplicated() {
    let t = table();
    let mut a = Wfst::new(t.clone(), t.clone());
    let states: Vec<_> = (0..4).map(|_| a.add_state()).collect();
    a.set_start(states[0]);
    a.set_final(states[3], Weight::one());
    a.add_arc(states[0], Arc::new(1, 1, Weight::one(), states[1]));
    a.add_arc(states[1], Arc::new(2, EPSILON, Weight::one(), states[2]));
    a.add_arc(states[2], Arc::new(3, EPSILON, Weight::one(), states[3]));

    let mut b = Wfst::new(t.clone(), t.clone());
    let states: Vec<_> = (0..4).map(|_| b.add_state()).collect();
    b.set_start(states[0]);
    b.set_final(states[3], Weight::one());
    b.add_arc(states[0], Arc::new(1, 1, Weight::one(), states[1]));
    b.add_arc(states[1], Arc::new(EPSILON, 2, Weight::one(), states[2]));
    b.add_arc(states[2], Arc::new(EPSILON, 3, Weight::one(), states[3]));

    let c = compose(&a, &b).unwrap();
    let paths = enumerate_paths(&c);
    assert_eq!(paths.len(), 1, "duplicated epsilon interleavings: {paths:?}");
    assert_eq!(paths[0].0, vec![1, 2, 3]);
    assert_eq!(paths[0].1, vec![1, 2, 3]);
}
