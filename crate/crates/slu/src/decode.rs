//! Decoding: probability matrix in, structured result out. The matrix
//! becomes a linear input graph (scaled, pruned, with a synthetic trailing
//! space frame), is composed with the token graph once, then with each
//! intent's lexicon-grammar graph; the cheapest accepting path overall
//! carries the transcript, the intent tag and the slot values.

use std::collections::BTreeSet;

use serde::Serialize;
use wfst::{compose, Arc, BestPath, Label, SymbolTable, TableRef, Weight, Wfst, EPSILON};

use crate::logits::LogitMatrix;
use crate::model::ModelBundle;
use crate::token::collapse_labels;
use crate::{tags, SluError};

/// Probability mass the synthetic final frame puts on the space label; the
/// remainder is spread uniformly over the other labels.
const SPACE_FRAME_HIT: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeParams {
    /// Labels kept per frame, by descending probability. Clamped to the
    /// matrix width.
    pub top_k: usize,
    /// Rank whose per-frame probability is averaged over all frames to set
    /// the global pruning threshold. Clamped to the matrix width.
    pub mean_k: usize,
    /// Exponent applied to each frame's probabilities (then renormalized);
    /// values above 1 sharpen the distribution, below 1 flatten it.
    pub gamma: f64,
    /// Linear factor on input costs relative to the grammar costs.
    pub acoustic_scale: f64,
    /// Decode only these intents; `None` decodes all.
    pub intent_filter: Option<BTreeSet<String>>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            top_k: 8,
            mean_k: 21,
            gamma: 1.0,
            acoustic_scale: 1.0,
            intent_filter: None,
        }
    }
}

impl DecodeParams {
    fn validate(&self) -> Result<(), SluError> {
        if self.top_k == 0 {
            return Err(SluError::Input("top_k must be positive".into()));
        }
        if self.mean_k == 0 {
            return Err(SluError::Input("mean_k must be positive".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(SluError::Input(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.acoustic_scale.is_finite() && self.acoustic_scale >= 0.0) {
            return Err(SluError::Input(format!(
                "acoustic_scale must be non-negative, got {}",
                self.acoustic_scale
            )));
        }
        if let Some(filter) = &self.intent_filter {
            if filter.is_empty() {
                return Err(SluError::Input("intent filter is empty".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotValue {
    pub name: String,
    /// Canonical value, synonyms resolved.
    pub value: String,
    /// Words as they appeared on the input side.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseResult {
    /// Canonical words, slot values included, in spoken order.
    pub transcript: Vec<String>,
    pub intent: String,
    /// Slots in transcript order.
    pub slots: Vec<SlotValue>,
    pub cost: f64,
}

impl ParseResult {
    pub fn text(&self) -> String {
        self.transcript.join(" ")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "text": self.text(),
            "intent": self.intent,
            "slots": self.slots,
            "cost": self.cost,
        })
    }
}

/// Which pipeline stage produced no surviving path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStage {
    /// Input and token graphs composed to nothing.
    TokenCompose,
    /// Every intent's grammar composition was empty.
    GrammarCompose,
}

impl DecodeStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecodeStage::TokenCompose => "token-compose",
            DecodeStage::GrammarCompose => "grammar-compose",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoMatch {
    pub stage: DecodeStage,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub enum Decoded {
    Match(ParseResult),
    NoMatch(NoMatch),
}

impl Decoded {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Decoded::Match(r) => r.to_json(),
            Decoded::NoMatch(n) => serde_json::json!({
                "no_match": true,
                "stage": n.stage.as_str(),
                "detail": n.detail,
            }),
        }
    }

    pub fn as_match(&self) -> Option<&ParseResult> {
        match self {
            Decoded::Match(r) => Some(r),
            Decoded::NoMatch(_) => None,
        }
    }
}

/// Builds the linear input graph from a probability matrix: one state per
/// timestep boundary, one arc per surviving label, cost
/// `acoustic_scale * -ln(p)` where `p` is the probability after exponential
/// scaling and per-frame renormalization. A synthetic final frame dominated
/// by the space label is appended so the last word can close.
pub fn build_input_fst(
    m: &LogitMatrix,
    labels: &TableRef,
    space_label: Label,
    p: &DecodeParams,
) -> Result<Wfst, SluError> {
    p.validate()?;
    let v = m.num_labels();
    let col_ids = map_columns(m, labels)?;
    let top_k = p.top_k.min(v);
    let mean_k = p.mean_k.min(v);

    // exponential scaling + renormalization; if gamma is so large the whole
    // row underflows, use its limit: uniform mass on the row's maxima
    let scaled: Vec<Vec<f64>> = m
        .rows()
        .iter()
        .map(|row| {
            let powed: Vec<f64> = row.iter().map(|&x| x.powf(p.gamma)).collect();
            let sum: f64 = powed.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                powed.into_iter().map(|x| x / sum).collect()
            } else {
                let max = row.iter().copied().fold(0.0, f64::max);
                let hits = row.iter().filter(|&&x| x == max).count() as f64;
                row.iter()
                    .map(|&x| if x == max { 1.0 / hits } else { 0.0 })
                    .collect()
            }
        })
        .collect();

    // global threshold: average over frames of each frame's mean_k-th
    // ranked probability
    let threshold = scaled
        .iter()
        .map(|row| {
            let mut sorted: Vec<f64> = row.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are not NaN"));
            sorted[mean_k - 1]
        })
        .sum::<f64>()
        / scaled.len() as f64;

    let mut f = Wfst::new(labels.clone(), labels.clone());
    let mut cur = f.add_state();
    f.set_start(cur);
    for row in &scaled {
        // rank columns by probability, ties to the lower column
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        // the threshold comparison carries a tiny slack so labels sitting
        // exactly at the threshold never flicker out on rounding
        let mut keep: Vec<usize> = order[..top_k]
            .iter()
            .copied()
            .filter(|&c| row[c] + 1e-12 >= threshold && row[c] > 0.0)
            .collect();
        if keep.is_empty() {
            // never emit an empty frame: keep the single best label
            keep.push(order[0]);
        }
        keep.sort_unstable();
        let next = f.add_state();
        for c in keep {
            let cost = Weight::new(p.acoustic_scale * -row[c].ln());
            f.add_arc(cur, Arc::new(col_ids[c], col_ids[c], cost, next));
        }
        cur = next;
    }

    // synthetic closing frame: space-dominant over the observed labels
    let has_space = col_ids.contains(&space_label);
    let others = if has_space { v - 1 } else { v };
    let floor = (1.0 - SPACE_FRAME_HIT) / others.max(1) as f64;
    let next = f.add_state();
    f.add_arc(
        cur,
        Arc::new(
            space_label,
            space_label,
            Weight::new(p.acoustic_scale * -SPACE_FRAME_HIT.ln()),
            next,
        ),
    );
    for &id in col_ids.iter().filter(|&&id| id != space_label) {
        f.add_arc(
            cur,
            Arc::new(id, id, Weight::new(p.acoustic_scale * -floor.ln()), next),
        );
    }
    f.set_final(next, Weight::one());
    Ok(f)
}

fn map_columns(m: &LogitMatrix, labels: &TableRef) -> Result<Vec<Label>, SluError> {
    let mut unknown = Vec::new();
    let mut ids = Vec::with_capacity(m.num_labels());
    for s in m.symbols() {
        match labels.label(s) {
            Some(id) => ids.push(id),
            None => unknown.push(format!("{s:?}")),
        }
    }
    if !unknown.is_empty() {
        return Err(SluError::Input(format!(
            "matrix labels not in the model alphabet: {}",
            unknown.join(", ")
        )));
    }
    Ok(ids)
}

/// Full pipeline: input graph, composed with the token graph, composed with
/// each (possibly filtered) intent graph, overall shortest path parsed into
/// a result. Cost ties go to the alphabetically first intent.
pub fn decode(
    m: &LogitMatrix,
    model: &ModelBundle,
    p: &DecodeParams,
) -> Result<Decoded, SluError> {
    p.validate()?;
    if let Some(filter) = &p.intent_filter {
        for name in filter {
            if !model.intents.contains_key(name) {
                return Err(SluError::Input(format!("unknown intent {name:?} in filter")));
            }
        }
    }
    let space_label = model.space_label()?;
    let input = build_input_fst(m, &model.labels, space_label, p)?;
    let it = compose(&input, &model.token)?;
    if it.num_finals() == 0 {
        return Ok(Decoded::NoMatch(NoMatch {
            stage: DecodeStage::TokenCompose,
            detail: "input and token graphs share no path".into(),
        }));
    }

    let mut tried = Vec::new();
    let mut best: Option<(String, BestPath)> = None;
    for (name, lg) in &model.intents {
        if p.intent_filter
            .as_ref()
            .is_some_and(|filter| !filter.contains(name))
        {
            continue;
        }
        tried.push(name.as_str());
        let full = compose(&it, lg)?;
        if let Some(path) = full.shortest_path() {
            if best.as_ref().is_none_or(|(_, b)| path.cost < b.cost) {
                best = Some((name.clone(), path));
            }
        }
    }

    match best {
        Some((_, path)) => Ok(Decoded::Match(parse_best_path(&path, model)?)),
        None => Ok(Decoded::NoMatch(NoMatch {
            stage: DecodeStage::GrammarCompose,
            detail: format!(
                "no intent accepted the pruned input (tried: {})",
                tried.join(", ")
            ),
        })),
    }
}

/// Turns a winning path into a result, reading canonical words off the
/// output tape and slot raw values off the input tape.
fn parse_best_path(path: &BestPath, model: &ModelBundle) -> Result<ParseResult, SluError> {
    let mut parsed = parse_sequence(&path.olabels, &model.words, |from, to| {
        let span = &path.ilabels[from..to];
        let text = model.labels_to_text(span);
        Some(text.split_whitespace().collect::<Vec<_>>().join(" "))
    })?;
    parsed.cost = path.cost.value();
    Ok(parsed)
}

impl ModelBundle {
    /// Collapses a consumed label sequence back into text: epsilons out,
    /// repeats merged, blanks dropped, pieces expanded.
    pub fn labels_to_text(&self, labels: &[Label]) -> String {
        let consumed: Vec<Label> = labels.iter().copied().filter(|&l| l != EPSILON).collect();
        let collapsed = collapse_labels(&consumed, self.blank);
        let mut out = String::new();
        for l in collapsed {
            let sym = self.labels.symbol(l).unwrap_or("");
            match self.label_kind {
                crate::alphabet::LabelKind::Chars => out.push_str(sym),
                crate::alphabet::LabelKind::Pieces => {
                    let boundary = self
                        .boundary
                        .as_deref()
                        .unwrap_or(crate::alphabet::DEFAULT_BOUNDARY);
                    for ch in sym.chars() {
                        if ch.to_string() == boundary {
                            out.push(' ');
                        } else {
                            out.push(ch);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Parses an output label sequence: plain words build the transcript,
/// `#slot:` ... `#/slot` spans become slot values, the placeholder after a
/// span confirms the slot type, and the trailing `#intent:` tag names the
/// intent. Raw slot values come from `raw_for_span(open_idx + 1, close_idx)`
/// when it yields one, otherwise they fall back to the canonical words.
pub fn parse_output_labels(
    olabels: &[Label],
    words: &TableRef,
) -> Result<ParseResult, SluError> {
    parse_sequence(olabels, words, |_, _| None)
}

fn parse_sequence(
    olabels: &[Label],
    words: &SymbolTable,
    mut raw_for_span: impl FnMut(usize, usize) -> Option<String>,
) -> Result<ParseResult, SluError> {
    let mut transcript: Vec<String> = Vec::new();
    let mut slots: Vec<SlotValue> = Vec::new();
    let mut intent: Option<String> = None;
    let mut open: Option<(String, usize, Vec<String>)> = None;
    let mut awaiting_placeholder = false;

    for (i, &l) in olabels.iter().enumerate() {
        if l == EPSILON {
            continue;
        }
        let sym = words
            .symbol(l)
            .ok_or_else(|| SluError::Invariant(format!("output label {l} not in word table")))?;
        if intent.is_some() {
            return Err(SluError::Invariant(format!(
                "output {sym:?} after the intent tag"
            )));
        }
        if let Some(slot) = tags::as_slot_open(sym) {
            if open.is_some() {
                return Err(SluError::Invariant(format!("nested slot marker {sym:?}")));
            }
            open = Some((slot.to_string(), i, Vec::new()));
        } else if sym == tags::SLOT_CLOSE {
            let (name, open_idx, value_words) = open
                .take()
                .ok_or_else(|| SluError::Invariant("unmatched closing slot marker".into()))?;
            let value = value_words.join(" ");
            let raw = raw_for_span(open_idx + 1, i)
                .filter(|r| !r.is_empty())
                .unwrap_or_else(|| value.clone());
            transcript.extend(value_words);
            slots.push(SlotValue { name, value, raw });
            awaiting_placeholder = true;
        } else if let Some(slot) = tags::as_placeholder(sym) {
            let matches = awaiting_placeholder
                && slots.last().is_some_and(|s| s.name == slot);
            if !matches {
                return Err(SluError::Invariant(format!(
                    "placeholder {sym:?} without a preceding {slot:?} slot"
                )));
            }
            awaiting_placeholder = false;
        } else if let Some(name) = tags::as_intent(sym) {
            intent = Some(name.to_string());
        } else {
            // a plain word
            match &mut open {
                Some((_, _, value_words)) => value_words.push(sym.to_string()),
                None => transcript.push(sym.to_string()),
            }
        }
    }

    if open.is_some() {
        return Err(SluError::Invariant("slot marker never closed".into()));
    }
    let intent = intent.ok_or_else(|| SluError::Invariant("path has no intent tag".into()))?;
    Ok(ParseResult {
        transcript,
        intent,
        slots,
        cost: 0.0,
    })
}
