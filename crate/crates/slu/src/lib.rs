//! Training-free spoken language understanding.
//!
//! A dialog specification (intents with sentence templates, lookup slots
//! with optional synonyms) is compiled into decoding graphs: per-intent
//! grammar acceptors with embedded intent tags and slot sub-graphs, a
//! character-to-word lexicon, and a token graph that collapses CTC label
//! sequences. Decoding turns a per-frame label probability matrix into an
//! input graph, composes it through the token graph and each intent graph,
//! and reads transcript, intent and slot values off the overall shortest
//! path. A text frontend fabricates pseudo label matrices so the same
//! decoder doubles as a plain-text parser.

pub mod alphabet;
pub mod decode;
pub mod grammar;
pub mod lexicon;
pub mod logits;
pub mod model;
pub mod spec;
pub mod tags;
pub mod text;
pub mod token;

pub use alphabet::{Alphabet, LabelKind};
pub use decode::{
    build_input_fst, decode, parse_output_labels, DecodeParams, DecodeStage, Decoded, NoMatch,
    ParseResult, SlotValue,
};
pub use grammar::{build_intent_fst, build_slot_fst, insert_slots, GrammarMode};
pub use lexicon::build_lexicon_fst;
pub use logits::LogitMatrix;
pub use model::{build_model, ModelBundle};
pub use spec::{parse_dialog_spec, DialogSpec, LookupEntry, SentenceToken, Template};
pub use text::{text_to_logits, TextEncodeParams};
pub use token::{build_token_fst, build_token_fst_pieces};

#[derive(Debug, thiserror::Error)]
pub enum SluError {
    /// Problems in the dialog specification itself.
    #[error("dialog spec: {0}")]
    Spec(String),
    /// Failures while compiling the model graphs.
    #[error("build: {0}")]
    Build(String),
    /// Bad runtime inputs: logit files, parameters, out-of-alphabet text.
    #[error("input: {0}")]
    Input(String),
    /// Inconsistent or unreadable model directories.
    #[error("model: {0}")]
    Model(String),
    /// A structural guarantee was violated; this is a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Wfst(#[from] wfst::WfstError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
