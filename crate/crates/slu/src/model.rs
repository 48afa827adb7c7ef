//! Model building and the on-disk model directory. A built model holds one
//! composed lexicon-grammar graph per intent (characters in, tagged words
//! out), the token graph, and the shared symbol tables. Builds are
//! deterministic: the same spec, alphabet and mode produce byte-identical
//! directories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc as Shared;

use serde::{Deserialize, Serialize};
use wfst::{arc_sort, compose, Label, SymbolTable, TableRef, Wfst};

use crate::alphabet::{Alphabet, LabelKind};
use crate::grammar::{build_intent_fst, build_slot_fst, insert_slots, GrammarMode};
use crate::lexicon::build_lexicon_fst;
use crate::spec::{DialogSpec, SentenceToken};
use crate::token::{build_token_fst, build_token_fst_pieces};
use crate::{tags, SluError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SYMBOLS_FILE: &str = "symbols.json";
pub const TOKENS_FILE: &str = "tokens.fwf";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeDefaults {
    pub top_k: usize,
    pub mean_k: usize,
    pub gamma: f64,
    pub acoustic_scale: f64,
}

impl Default for DecodeDefaults {
    fn default() -> Self {
        DecodeDefaults {
            top_k: 8,
            mean_k: 21,
            gamma: 1.0,
            acoustic_scale: 1.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    mode: GrammarMode,
    label_kind: LabelKind,
    blank: String,
    #[serde(default)]
    boundary: Option<String>,
    intents: Vec<String>,
    vocabulary: Vec<String>,
    defaults: DecodeDefaults,
}

#[derive(Serialize)]
struct SymbolsFile<'a> {
    labels: Vec<&'a str>,
    chars: Vec<&'a str>,
    words: Vec<&'a str>,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub mode: GrammarMode,
    pub label_kind: LabelKind,
    /// Token-graph input tape: the acoustic model's CTC labels.
    pub labels: TableRef,
    /// Character tape between token graph and lexicon.
    pub chars: TableRef,
    /// Word tape: vocabulary plus structural tags.
    pub words: TableRef,
    /// Blank id in the `labels` table.
    pub blank: Label,
    /// Space id in the `chars` table.
    pub space: Label,
    pub token: Wfst,
    /// Per-intent composed lexicon-grammar graphs.
    pub intents: BTreeMap<String, Wfst>,
    pub vocabulary: Vec<String>,
    pub boundary: Option<String>,
    pub defaults: DecodeDefaults,
}

impl ModelBundle {
    /// Slot names the model can report, recovered from its marker symbols.
    pub fn slot_names(&self) -> std::collections::BTreeSet<String> {
        self.words
            .symbols()
            .filter_map(crate::tags::as_slot_open)
            .map(String::from)
            .collect()
    }

    /// Label id in the `labels` table whose collapsed text is a single
    /// space: the space character itself, or the pure boundary piece.
    pub fn space_label(&self) -> Result<Label, SluError> {
        match self.label_kind {
            LabelKind::Chars => Ok(self.labels.label(" ").ok_or_else(|| {
                SluError::Model("character alphabet lost its space entry".into())
            })?),
            LabelKind::Pieces => {
                let boundary = self.boundary.as_deref().unwrap_or(crate::alphabet::DEFAULT_BOUNDARY);
                self.labels.label(boundary).ok_or_else(|| {
                    SluError::Input(format!(
                        "piece vocabulary has no pure word-boundary piece {boundary:?}"
                    ))
                })
            }
        }
    }
}

pub fn build_model(
    spec: &DialogSpec,
    alphabet: &Alphabet,
    mode: GrammarMode,
) -> Result<ModelBundle, SluError> {
    // tape 1: CTC labels, and the character tape derived from them
    let labels = Shared::new(SymbolTable::from_symbols(&alphabet.labels));
    let blank = labels
        .label(&alphabet.blank)
        .expect("alphabet validation guarantees the blank");
    let (chars, boundary) = match alphabet.kind {
        LabelKind::Chars => (labels.clone(), None),
        LabelKind::Pieces => {
            let mut set: BTreeSet<String> = BTreeSet::new();
            for piece in &alphabet.labels {
                if piece == &alphabet.blank {
                    continue;
                }
                for ch in piece.chars() {
                    let s = ch.to_string();
                    set.insert(if s == alphabet.boundary { " ".into() } else { s });
                }
            }
            set.insert(" ".into());
            (
                Shared::new(SymbolTable::from_symbols(set.iter())),
                Some(alphabet.boundary.clone()),
            )
        }
    };
    let space = chars
        .label(" ")
        .expect("character table always contains the space");

    // tape 2: words and structural tags, in a deterministic order
    let referenced = spec.referenced_slots();
    let mut all_words: BTreeSet<String> = BTreeSet::new();
    let mut per_intent_words: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut expanded: BTreeMap<&str, Vec<Vec<SentenceToken>>> = BTreeMap::new();
    for (intent, templates) in &spec.intents {
        let sentences: Vec<Vec<SentenceToken>> =
            templates.iter().flat_map(|t| t.expand()).collect();
        let mut vocab = BTreeSet::new();
        for sentence in &sentences {
            for tok in sentence {
                match tok {
                    SentenceToken::Word(w) => {
                        vocab.insert(w.clone());
                    }
                    SentenceToken::Placeholder(slot) => {
                        for entry in &spec.lookups[slot] {
                            vocab.extend(entry.raw.iter().cloned());
                            all_words.extend(entry.canonical.iter().cloned());
                        }
                    }
                }
            }
        }
        all_words.extend(vocab.iter().cloned());
        per_intent_words.insert(intent, vocab);
        expanded.insert(intent, sentences);
    }

    let mut words_table = SymbolTable::new();
    for w in &all_words {
        words_table.add_symbol(w);
    }
    words_table.add_symbol(tags::SLOT_CLOSE);
    for slot in &referenced {
        words_table.add_symbol(&tags::slot_open(slot));
        words_table.add_symbol(&tags::placeholder(slot));
    }
    for intent in spec.intents.keys() {
        words_table.add_symbol(&tags::intent(intent));
    }
    let words = Shared::new(words_table);

    // slot graphs, one per referenced slot
    let mut slot_fsts: BTreeMap<String, Wfst> = BTreeMap::new();
    for slot in &referenced {
        slot_fsts.insert(
            slot.clone(),
            build_slot_fst(slot, &spec.lookups[slot], &words)?,
        );
    }

    // per-intent lexicon-grammar composition; the blank to keep out of the
    // lexicon lives in the character table, which only has one in char mode
    let lexicon_blank = match alphabet.kind {
        LabelKind::Chars => Some(blank),
        LabelKind::Pieces => chars.label(&alphabet.blank),
    };
    let mut intents: BTreeMap<String, Wfst> = BTreeMap::new();
    for (intent, sentences) in &expanded {
        let g = build_intent_fst(sentences, mode, intent, &words)?;
        let g = insert_slots(&g, &slot_fsts)?;
        let vocab = &per_intent_words[intent];
        let lexicon = build_lexicon_fst(vocab, &chars, &words, space, lexicon_blank)
            .map_err(|e| SluError::Build(format!("intent {intent:?}: {e}")))?;
        let lg = compose(&lexicon, &g)?;
        if lg.num_finals() == 0 {
            return Err(SluError::Build(format!(
                "intent {intent:?} composed to an empty graph"
            )));
        }
        intents.insert(intent.to_string(), arc_sort(&lg));
    }

    let token = match alphabet.kind {
        LabelKind::Chars => build_token_fst(&chars, blank),
        LabelKind::Pieces => {
            build_token_fst_pieces(&labels, &chars, blank, &alphabet.boundary, space)?
        }
    };

    Ok(ModelBundle {
        mode,
        label_kind: alphabet.kind,
        labels,
        chars,
        words,
        blank,
        space,
        token,
        intents,
        vocabulary: all_words.into_iter().collect(),
        boundary,
        defaults: DecodeDefaults::default(),
    })
}

impl ModelBundle {
    pub fn save<P: AsRef<Path>>(&self, dir: P) -> Result<(), SluError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format_version: 1,
            mode: self.mode,
            label_kind: self.label_kind,
            blank: self
                .labels
                .symbol(self.blank)
                .expect("blank id valid")
                .to_string(),
            boundary: self.boundary.clone(),
            intents: self.intents.keys().cloned().collect(),
            vocabulary: self.vocabulary.clone(),
            defaults: self.defaults,
        };
        let mut manifest_json = serde_json::to_string_pretty(&manifest)?;
        manifest_json.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), manifest_json)?;

        let symbols = SymbolsFile {
            labels: self.labels.symbols().collect(),
            chars: self.chars.symbols().collect(),
            words: self.words.symbols().collect(),
        };
        let mut symbols_json = serde_json::to_string_pretty(&symbols)?;
        symbols_json.push('\n');
        std::fs::write(dir.join(SYMBOLS_FILE), symbols_json)?;

        self.token.save(dir.join(TOKENS_FILE))?;
        for (name, fst) in &self.intents {
            fst.save(dir.join(format!("intent-{name}.fwf")))?;
        }
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(dir: P) -> Result<ModelBundle, SluError> {
        let dir = dir.as_ref();
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        if manifest.format_version != 1 {
            return Err(SluError::Model(format!(
                "unsupported model format version {}",
                manifest.format_version
            )));
        }
        if manifest.intents.is_empty() {
            return Err(SluError::Model("model has no intents".into()));
        }
        let token = Wfst::load(dir.join(TOKENS_FILE))
            .map_err(|e| SluError::Model(format!("tokens graph: {e}")))?;
        let labels = token.isyms().clone();
        let chars = token.osyms().clone();

        let mut intents = BTreeMap::new();
        let mut words: Option<TableRef> = None;
        for name in &manifest.intents {
            let fst = Wfst::load(dir.join(format!("intent-{name}.fwf")))
                .map_err(|e| SluError::Model(format!("intent {name:?}: {e}")))?;
            if fst.isyms() != &chars {
                return Err(SluError::Model(format!(
                    "intent {name:?} disagrees with the token graph's character table"
                )));
            }
            match &words {
                None => words = Some(fst.osyms().clone()),
                Some(w) if w == fst.osyms() => {}
                Some(_) => {
                    return Err(SluError::Model(format!(
                        "intent {name:?} uses a different word table"
                    )))
                }
            }
            intents.insert(name.clone(), fst);
        }
        let words = words.expect("at least one intent");

        let blank = labels.label(&manifest.blank).ok_or_else(|| {
            SluError::Model(format!("blank {:?} missing from label table", manifest.blank))
        })?;
        let space = chars
            .label(" ")
            .ok_or_else(|| SluError::Model("character table has no space".into()))?;

        Ok(ModelBundle {
            mode: manifest.mode,
            label_kind: manifest.label_kind,
            labels,
            chars,
            words,
            blank,
            space,
            token,
            intents,
            vocabulary: manifest.vocabulary,
            boundary: manifest.boundary,
            defaults: manifest.defaults,
        })
    }
}
