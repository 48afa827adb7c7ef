//! The transducer itself: states, weighted arcs, a start state and final
//! weights. Values are immutable once built; every operation returns a new
//! machine.

use std::collections::BTreeMap;

use crate::symbol::EPSILON;
use crate::{Label, StateId, TableRef, Weight, WfstError};

/// A single transition: consume `ilabel`, emit `olabel`, pay `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: Weight,
    pub nextstate: StateId,
}

impl Arc {
    pub fn new(ilabel: Label, olabel: Label, weight: Weight, nextstate: StateId) -> Self {
        Arc {
            ilabel,
            olabel,
            weight,
            nextstate,
        }
    }

    /// Arc that consumes and emits nothing.
    pub fn epsilon(weight: Weight, nextstate: StateId) -> Self {
        Arc::new(EPSILON, EPSILON, weight, nextstate)
    }

    pub fn is_epsilon(&self) -> bool {
        self.ilabel == EPSILON && self.olabel == EPSILON
    }

    /// Sort key used by `arc_sort` and for deterministic tie-breaking.
    pub(crate) fn sort_key(&self) -> (Label, Label, u64, StateId) {
        (
            self.ilabel,
            self.olabel,
            self.weight.value().to_bits(),
            self.nextstate,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Wfst {
    arcs: Vec<Vec<Arc>>,
    start: Option<StateId>,
    finals: BTreeMap<StateId, Weight>,
    isyms: TableRef,
    osyms: TableRef,
}

impl Wfst {
    pub fn new(isyms: TableRef, osyms: TableRef) -> Self {
        Wfst {
            arcs: Vec::new(),
            start: None,
            finals: BTreeMap::new(),
            isyms,
            osyms,
        }
    }

    pub fn add_state(&mut self) -> StateId {
        self.arcs.push(Vec::new());
        (self.arcs.len() - 1) as StateId
    }

    pub fn add_states(&mut self, n: usize) -> StateId {
        let first = self.arcs.len() as StateId;
        for _ in 0..n {
            self.arcs.push(Vec::new());
        }
        first
    }

    pub fn set_start(&mut self, s: StateId) {
        debug_assert!((s as usize) < self.arcs.len());
        self.start = Some(s);
    }

    pub fn set_final(&mut self, s: StateId, weight: Weight) {
        debug_assert!((s as usize) < self.arcs.len());
        if weight.is_finite() {
            self.finals.insert(s, weight);
        } else {
            self.finals.remove(&s);
        }
    }

    pub fn add_arc(&mut self, from: StateId, arc: Arc) {
        debug_assert!((arc.nextstate as usize) < self.arcs.len());
        debug_assert!(self.isyms.is_valid(arc.ilabel), "bad ilabel {}", arc.ilabel);
        debug_assert!(self.osyms.is_valid(arc.olabel), "bad olabel {}", arc.olabel);
        debug_assert!(arc.weight.is_finite());
        self.arcs[from as usize].push(arc);
    }

    pub fn start(&self) -> Option<StateId> {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(|a| a.len()).sum()
    }

    pub fn arcs(&self, s: StateId) -> &[Arc] {
        &self.arcs[s as usize]
    }

    /// All arcs of all states, in state order.
    pub fn arcs_iter(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().flatten()
    }

    pub fn final_weight(&self, s: StateId) -> Option<Weight> {
        self.finals.get(&s).copied()
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains_key(&s)
    }

    /// Final states with their weights, in state-id order.
    pub fn finals(&self) -> impl Iterator<Item = (StateId, Weight)> + '_ {
        self.finals.iter().map(|(&s, &w)| (s, w))
    }

    pub fn num_finals(&self) -> usize {
        self.finals.len()
    }

    pub fn isyms(&self) -> &TableRef {
        &self.isyms
    }

    pub fn osyms(&self) -> &TableRef {
        &self.osyms
    }

    /// Checks that the input sequence uses only known, non-epsilon labels.
    pub(crate) fn check_input_labels(&self, input: &[Label]) -> Result<(), WfstError> {
        for &l in input {
            if l == EPSILON || !self.isyms.is_valid(l) {
                return Err(WfstError::InvalidLabel(l));
            }
        }
        Ok(())
    }
}

/// Structural equality: same states, arcs, start, finals and tables.
impl PartialEq for Wfst {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start
            && self.arcs == other.arcs
            && self.finals == other.finals
            && self.isyms == other.isyms
            && self.osyms == other.osyms
    }
}
