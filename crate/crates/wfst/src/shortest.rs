//! Single shortest path over the tropical semiring, with deterministic
//! tie-breaking: among equal-cost paths the one with the lexicographically
//! smallest output-label sequence wins.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::fst::{Arc, Wfst};
use crate::symbol::EPSILON;
use crate::{Label, StateId, Weight, WfstError};

/// Tolerance for deciding whether an arc lies on an optimal path. Far below
/// any weight difference the tests care about (1e-9).
const TIGHT_TOL: f64 = 1e-12;

/// The minimum-cost accepting path, as a linear-chain machine plus its label
/// sequences. `ilabels[i]` and `olabels[i]` belong to the i-th arc of the
/// path; epsilon entries are kept so the two tapes stay aligned.
#[derive(Debug, Clone)]
pub struct BestPath {
    pub fst: Wfst,
    pub cost: Weight,
    pub ilabels: Vec<Label>,
    pub olabels: Vec<Label>,
}

impl BestPath {
    /// Output labels with epsilons dropped.
    pub fn output(&self) -> Vec<Label> {
        self.olabels.iter().copied().filter(|&l| l != EPSILON).collect()
    }

    /// Input labels with epsilons dropped.
    pub fn input(&self) -> Vec<Label> {
        self.ilabels.iter().copied().filter(|&l| l != EPSILON).collect()
    }
}

/// Result of [`Wfst::accepts`]: the cheapest transduction of an input
/// sequence.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub cost: Weight,
    pub olabels: Vec<Label>,
}

impl Wfst {
    /// Finds the minimum-cost path from the start state to a final state,
    /// or `None` when no such path exists.
    pub fn shortest_path(&self) -> Option<BestPath> {
        let start = self.start()?;
        let dist = self.backward_distances();
        let total = dist[start as usize];
        if !total.is_finite() {
            return None;
        }

        // Walk the subgraph of arcs that lie on optimal paths, always taking
        // the smallest available output label. All states reached after the
        // same number of steps share the same emitted prefix, and on optimal
        // paths the accumulated cost at a state is pinned to
        // total - dist[state], so a set per step suffices.
        let tight = |have: Weight, need: Weight| -> bool {
            (have.value() - need.value()).abs() <= TIGHT_TOL * (1.0 + need.value().abs())
        };

        let mut frontier: Vec<StateId> = vec![start];
        // Per step: state -> (predecessor, arc taken into it).
        let mut trail: Vec<HashMap<StateId, (StateId, Arc)>> = Vec::new();
        let cap = (self.num_states() as u64 + 2) * (self.num_arcs() as u64 + 2) + 64;
        let mut steps: u64 = 0;

        let stop_state = loop {
            if let Some(&s) = frontier
                .iter()
                .find(|&&s| self.final_weight(s).is_some_and(|w| tight(w, dist[s as usize])))
            {
                break s;
            }
            steps += 1;
            assert!(
                steps <= cap,
                "shortest_path: zero-cost cycle on an optimal path"
            );

            let mut best_label: Option<Label> = None;
            for &s in &frontier {
                for a in self.arcs(s) {
                    if tight(a.weight.times(dist[a.nextstate as usize]), dist[s as usize])
                        && best_label.is_none_or(|l| a.olabel < l)
                    {
                        best_label = Some(a.olabel);
                    }
                }
            }
            let label = best_label.expect("non-final optimal state must have an optimal arc");

            let mut next: HashMap<StateId, (StateId, Arc)> = HashMap::new();
            for &s in &frontier {
                for a in self.arcs(s) {
                    if a.olabel != label
                        || !tight(a.weight.times(dist[a.nextstate as usize]), dist[s as usize])
                    {
                        continue;
                    }
                    let cand = (s, *a);
                    next.entry(a.nextstate)
                        .and_modify(|cur| {
                            if pred_key(&cand) < pred_key(cur) {
                                *cur = cand;
                            }
                        })
                        .or_insert(cand);
                }
            }
            let mut states: Vec<StateId> = next.keys().copied().collect();
            states.sort_unstable();
            frontier = states;
            trail.push(next);
        };

        // Reconstruct the arc sequence back from the stop state.
        let mut rev: Vec<Arc> = Vec::new();
        let mut cur = stop_state;
        for step in trail.iter().rev() {
            let (prev, arc) = step[&cur];
            rev.push(arc);
            cur = prev;
        }
        rev.reverse();

        let final_weight = self.final_weight(stop_state).expect("stop state is final");
        let mut chain = Wfst::new(self.isyms().clone(), self.osyms().clone());
        let mut cur = chain.add_state();
        chain.set_start(cur);
        let mut cost = Weight::one();
        let mut ilabels = Vec::with_capacity(rev.len());
        let mut olabels = Vec::with_capacity(rev.len());
        for a in &rev {
            let nxt = chain.add_state();
            chain.add_arc(cur, Arc::new(a.ilabel, a.olabel, a.weight, nxt));
            cost = cost.times(a.weight);
            ilabels.push(a.ilabel);
            olabels.push(a.olabel);
            cur = nxt;
        }
        chain.set_final(cur, final_weight);
        cost = cost.times(final_weight);

        Some(BestPath {
            fst: chain,
            cost,
            ilabels,
            olabels,
        })
    }

    /// Minimum cost from every state to a final state, final weights
    /// included.
    fn backward_distances(&self) -> Vec<Weight> {
        let n = self.num_states();
        let mut rev: Vec<Vec<(StateId, Weight)>> = vec![Vec::new(); n];
        for s in 0..n as StateId {
            for a in self.arcs(s) {
                rev[a.nextstate as usize].push((s, a.weight));
            }
        }
        let mut dist = vec![Weight::zero(); n];
        let mut heap: BinaryHeap<Reverse<(Weight, StateId)>> = BinaryHeap::new();
        for (s, w) in self.finals() {
            dist[s as usize] = w;
            heap.push(Reverse((w, s)));
        }
        while let Some(Reverse((w, s))) = heap.pop() {
            if w > dist[s as usize] {
                continue;
            }
            for &(p, aw) in &rev[s as usize] {
                let nw = aw.times(w);
                if nw < dist[p as usize] {
                    dist[p as usize] = nw;
                    heap.push(Reverse((nw, p)));
                }
            }
        }
        dist
    }

    /// Tests whether the machine accepts `input` on its input tape, and if
    /// so returns the cheapest cost and the matching output labels.
    pub fn accepts(&self, input: &[Label]) -> Result<Option<Accepted>, WfstError> {
        self.check_input_labels(input)?;
        let mut chain = Wfst::new(self.isyms().clone(), self.isyms().clone());
        let mut cur = chain.add_state();
        chain.set_start(cur);
        for &l in input {
            let nxt = chain.add_state();
            chain.add_arc(cur, Arc::new(l, l, Weight::one(), nxt));
            cur = nxt;
        }
        chain.set_final(cur, Weight::one());
        let composed = crate::ops::compose(&chain, self)?;
        Ok(composed.shortest_path().map(|p| Accepted {
            cost: p.cost,
            olabels: p.output(),
        }))
    }
}

/// Deterministic choice among predecessors reaching the same state with the
/// same output label.
fn pred_key(cand: &(StateId, Arc)) -> (Label, u64, StateId, StateId) {
    (
        cand.1.ilabel,
        cand.1.weight.value().to_bits(),
        cand.0,
        cand.1.nextstate,
    )
}
