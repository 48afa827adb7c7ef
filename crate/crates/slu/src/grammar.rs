//! Word-level grammar construction. Intent graphs accept the expanded
//! template sentences (exactly, or generalized through a bigram model) and
//! emit an intent tag behind the last word. Slot graphs wrap each lookup
//! entry in marker tags, consuming the spoken words and emitting the
//! canonical ones. Slot graphs are spliced into the intent graphs in place
//! of their placeholder arcs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use wfst::{connect, Arc, Label, StateId, TableRef, Weight, Wfst, EPSILON};

use crate::spec::{LookupEntry, SentenceToken};
use crate::{tags, SluError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GrammarMode {
    #[serde(rename = "fixed")]
    Fixed,
    #[serde(rename = "2gram")]
    Bigram,
}

impl FromStr for GrammarMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(GrammarMode::Fixed),
            "2gram" => Ok(GrammarMode::Bigram),
            other => Err(format!("unknown grammar mode {other:?}, expected fixed|2gram")),
        }
    }
}

impl fmt::Display for GrammarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrammarMode::Fixed => "fixed",
            GrammarMode::Bigram => "2gram",
        })
    }
}

fn token_label(tok: &SentenceToken, words: &TableRef) -> Result<Label, SluError> {
    let sym = match tok {
        SentenceToken::Word(w) => w.clone(),
        SentenceToken::Placeholder(p) => tags::placeholder(p),
    };
    words
        .label(&sym)
        .ok_or_else(|| SluError::Build(format!("symbol {sym:?} missing from word table")))
}

/// Word-level acceptor for one intent. Every sentence ends in an
/// input-epsilon arc that emits `#intent:<name>` into the single final
/// state.
pub fn build_intent_fst(
    sentences: &[Vec<SentenceToken>],
    mode: GrammarMode,
    intent: &str,
    words: &TableRef,
) -> Result<Wfst, SluError> {
    if sentences.is_empty() {
        return Err(SluError::Build(format!("intent {intent:?} has no sentences")));
    }
    let tag = words
        .label(&tags::intent(intent))
        .ok_or_else(|| SluError::Build(format!("intent tag for {intent:?} not in word table")))?;
    match mode {
        GrammarMode::Fixed => build_fixed(sentences, tag, words),
        GrammarMode::Bigram => build_bigram(sentences, tag, words),
    }
}

fn build_fixed(
    sentences: &[Vec<SentenceToken>],
    tag: Label,
    words: &TableRef,
) -> Result<Wfst, SluError> {
    let mut f = Wfst::new(words.clone(), words.clone());
    let start = f.add_state();
    f.set_start(start);
    let mut ends = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let mut cur = start;
        for tok in sentence {
            let l = token_label(tok, words)?;
            let next = f.add_state();
            f.add_arc(cur, Arc::new(l, l, Weight::one(), next));
            cur = next;
        }
        ends.push(cur);
    }
    let done = f.add_state();
    f.set_final(done, Weight::one());
    for e in ends {
        f.add_arc(e, Arc::new(EPSILON, tag, Weight::one(), done));
    }
    Ok(f)
}

/// Bigram context: sentence start or a specific token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Start,
    Token(Label),
}

/// Successor of a context: a token or the sentence end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Next {
    Token(Label),
    End,
}

/// Bigram estimate over the expanded sentences, sentence boundaries
/// included. Only observed context/successor pairs get arcs; add-one
/// smoothing is applied within each context's observed successor set, so
/// outgoing probabilities still sum to one.
fn build_bigram(
    sentences: &[Vec<SentenceToken>],
    tag: Label,
    words: &TableRef,
) -> Result<Wfst, SluError> {
    let mut counts: BTreeMap<Ctx, BTreeMap<Next, usize>> = BTreeMap::new();
    for sentence in sentences {
        let mut ctx = Ctx::Start;
        for tok in sentence {
            let l = token_label(tok, words)?;
            *counts.entry(ctx).or_default().entry(Next::Token(l)).or_insert(0) += 1;
            ctx = Ctx::Token(l);
        }
        *counts.entry(ctx).or_default().entry(Next::End).or_insert(0) += 1;
    }

    let mut f = Wfst::new(words.clone(), words.clone());
    let start = f.add_state();
    f.set_start(start);
    let mut state_of: BTreeMap<Label, StateId> = BTreeMap::new();
    for (ctx, succs) in &counts {
        if let Ctx::Token(l) = ctx {
            state_of.entry(*l).or_insert_with(|| f.add_state());
        }
        for next in succs.keys() {
            if let Next::Token(l) = next {
                state_of.entry(*l).or_insert_with(|| f.add_state());
            }
        }
    }
    let done = f.add_state();
    f.set_final(done, Weight::one());

    for (ctx, succs) in &counts {
        let from = match ctx {
            Ctx::Start => start,
            Ctx::Token(l) => state_of[l],
        };
        let total: usize = succs.values().sum();
        let k = succs.len();
        for (next, &c) in succs {
            let p = (c + 1) as f64 / (total + k) as f64;
            let cost = Weight::new(-p.ln());
            match next {
                Next::Token(l) => f.add_arc(from, Arc::new(*l, *l, cost, state_of[l])),
                Next::End => f.add_arc(from, Arc::new(EPSILON, tag, cost, done)),
            }
        }
    }
    Ok(connect(&f))
}

/// Word-level transducer for one slot. The opening arc emits
/// `#slot:<name>`, each entry consumes its spoken words (emitting nothing)
/// and then emits its canonical words (consuming nothing), and the closing
/// arc emits `#/slot`.
pub fn build_slot_fst(
    slot: &str,
    entries: &[LookupEntry],
    words: &TableRef,
) -> Result<Wfst, SluError> {
    if entries.is_empty() {
        return Err(SluError::Build(format!("slot {slot:?} has no entries")));
    }
    let open = words
        .label(&tags::slot_open(slot))
        .ok_or_else(|| SluError::Build(format!("slot marker for {slot:?} not in word table")))?;
    let close = words
        .label(tags::SLOT_CLOSE)
        .ok_or_else(|| SluError::Build("slot close marker not in word table".into()))?;
    let word_label = |w: &str| {
        words
            .label(w)
            .ok_or_else(|| SluError::Build(format!("slot word {w:?} not in word table")))
    };

    let mut f = Wfst::new(words.clone(), words.clone());
    let start = f.add_state();
    f.set_start(start);
    let entry_start = f.add_state();
    let entry_end = f.add_state();
    let done = f.add_state();
    f.set_final(done, Weight::one());
    f.add_arc(start, Arc::new(EPSILON, open, Weight::one(), entry_start));
    f.add_arc(entry_end, Arc::new(EPSILON, close, Weight::one(), done));

    for entry in entries {
        let mut cur = entry_start;
        for w in &entry.raw {
            let next = f.add_state();
            f.add_arc(cur, Arc::new(word_label(w)?, EPSILON, Weight::one(), next));
            cur = next;
        }
        let last = entry.canonical.len() - 1;
        for (i, w) in entry.canonical.iter().enumerate() {
            let next = if i == last { entry_end } else { f.add_state() };
            f.add_arc(cur, Arc::new(EPSILON, word_label(w)?, Weight::one(), next));
            cur = next;
        }
    }
    Ok(f)
}

/// Replaces every placeholder arc by a copy of its slot graph, followed by
/// an input-epsilon arc that re-emits the placeholder token and carries the
/// original arc's weight.
pub fn insert_slots(intent_fst: &Wfst, slots: &BTreeMap<String, Wfst>) -> Result<Wfst, SluError> {
    let words = intent_fst.osyms();
    let mut by_label: BTreeMap<Label, &Wfst> = BTreeMap::new();
    for (name, sub) in slots {
        let l = words
            .label(&tags::placeholder(name))
            .ok_or_else(|| SluError::Build(format!("placeholder for {name:?} not in table")))?;
        by_label.insert(l, sub);
    }

    let mut out = Wfst::new(intent_fst.isyms().clone(), intent_fst.osyms().clone());
    out.add_states(intent_fst.num_states());
    if let Some(s) = intent_fst.start() {
        out.set_start(s);
    }
    for (s, w) in intent_fst.finals() {
        out.set_final(s, w);
    }

    for s in 0..intent_fst.num_states() as StateId {
        for a in intent_fst.arcs(s) {
            let is_placeholder = intent_fst
                .isyms()
                .symbol(a.ilabel)
                .is_some_and(|sym| tags::as_placeholder(sym).is_some());
            if !is_placeholder {
                out.add_arc(s, *a);
                continue;
            }
            let sub = by_label.get(&a.ilabel).copied().ok_or_else(|| {
                SluError::Build(format!(
                    "no slot graph for placeholder {:?}",
                    intent_fst.isyms().symbol(a.ilabel).unwrap_or("?")
                ))
            })?;
            let sub_start = sub
                .start()
                .ok_or_else(|| SluError::Build("slot graph has no start state".into()))?;
            // copy the slot graph
            let off = out.add_states(sub.num_states());
            for t in 0..sub.num_states() as StateId {
                for sa in sub.arcs(t) {
                    out.add_arc(
                        off + t,
                        Arc::new(sa.ilabel, sa.olabel, sa.weight, off + sa.nextstate),
                    );
                }
            }
            // graft its start arcs onto the placeholder's source state
            for sa in sub.arcs(sub_start) {
                out.add_arc(
                    s,
                    Arc::new(sa.ilabel, sa.olabel, sa.weight, off + sa.nextstate),
                );
            }
            // each slot final exits through the kept placeholder token,
            // which inherits the replaced arc's weight
            for (fs, fw) in sub.finals() {
                out.add_arc(
                    off + fs,
                    Arc::new(EPSILON, a.ilabel, fw.times(a.weight), a.nextstate),
                );
            }
        }
    }
    Ok(connect(&out))
}
