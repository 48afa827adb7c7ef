//! Model alphabet description. A JSON file listing the acoustic model's
//! output labels in CTC column order:
//!
//! ```json
//! { "labels": [" ", "a", "b", "-"], "blank": "-" }
//! ```
//!
//! or, for piece vocabularies,
//!
//! ```json
//! { "kind": "pieces", "labels": ["▁", "ab", "b", "-"], "blank": "-",
//!   "boundary_marker": "▁" }
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::SluError;

pub const DEFAULT_BOUNDARY: &str = "\u{2581}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Chars,
    Pieces,
}

#[derive(Debug, Clone)]
pub struct Alphabet {
    pub kind: LabelKind,
    /// Labels in CTC output order, blank included.
    pub labels: Vec<String>,
    pub blank: String,
    /// Word-boundary marker character for piece vocabularies.
    pub boundary: String,
}

#[derive(Deserialize)]
struct AlphabetFile {
    #[serde(default)]
    kind: Option<LabelKind>,
    labels: Vec<String>,
    blank: String,
    #[serde(default)]
    boundary_marker: Option<String>,
}

impl Alphabet {
    pub fn parse(text: &str) -> Result<Alphabet, SluError> {
        let raw: AlphabetFile = serde_json::from_str(text)?;
        let kind = raw.kind.unwrap_or(LabelKind::Chars);
        if raw.labels.len() < 2 {
            return Err(SluError::Input("alphabet needs at least two labels".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &raw.labels {
            if l.is_empty() {
                return Err(SluError::Input("empty label in alphabet".into()));
            }
            if !seen.insert(l.clone()) {
                return Err(SluError::Input(format!("duplicate label {l:?}")));
            }
        }
        if !raw.labels.iter().any(|l| l == &raw.blank) {
            return Err(SluError::Input(format!(
                "blank {:?} is not among the labels",
                raw.blank
            )));
        }
        let boundary = raw
            .boundary_marker
            .unwrap_or_else(|| DEFAULT_BOUNDARY.to_string());
        match kind {
            LabelKind::Chars => {
                for l in &raw.labels {
                    if l != &raw.blank && l.chars().count() != 1 {
                        return Err(SluError::Input(format!(
                            "character alphabets need single-character labels, got {l:?}"
                        )));
                    }
                }
                if !raw.labels.iter().any(|l| l == " ") {
                    return Err(SluError::Input(
                        "character alphabet must contain the space character".into(),
                    ));
                }
            }
            LabelKind::Pieces => {
                if boundary.chars().count() != 1 {
                    return Err(SluError::Input(
                        "boundary_marker must be a single character".into(),
                    ));
                }
            }
        }
        Ok(Alphabet {
            kind,
            labels: raw.labels,
            blank: raw.blank,
            boundary,
        })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Alphabet, SluError> {
        Alphabet::parse(&std::fs::read_to_string(path)?)
    }
}
