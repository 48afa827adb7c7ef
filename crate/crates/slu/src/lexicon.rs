//! Character-to-word lexicon. A shared-prefix trie over the vocabulary's
//! characters; every word path ends in a space arc that carries the word
//! label, so a character sequence is accepted exactly when it reads
//! `word1 word2 ... wordN ` with every word in the vocabulary. The trailing
//! space doubles as the disambiguation symbol: without it, "ab" would also
//! match a prefix of "abab".

use std::collections::{BTreeSet, HashMap};

use wfst::{Arc, Label, StateId, TableRef, Weight, Wfst, EPSILON};

use crate::SluError;

pub fn build_lexicon_fst(
    vocabulary: &BTreeSet<String>,
    chars: &TableRef,
    words: &TableRef,
    space: Label,
    blank: Option<Label>,
) -> Result<Wfst, SluError> {
    if vocabulary.is_empty() {
        return Err(SluError::Build("lexicon vocabulary is empty".into()));
    }
    let mut f = Wfst::new(chars.clone(), words.clone());
    let root = f.add_state();
    f.set_start(root);
    f.set_final(root, Weight::one());

    let mut children: HashMap<(StateId, Label), StateId> = HashMap::new();
    for word in vocabulary {
        if word.is_empty() {
            return Err(SluError::Build("empty word in vocabulary".into()));
        }
        let word_label = words
            .label(word)
            .ok_or_else(|| SluError::Build(format!("word {word:?} missing from word table")))?;
        let mut cur = root;
        for ch in word.chars() {
            let ch_str = ch.to_string();
            let c = chars.label(&ch_str).ok_or_else(|| {
                SluError::Build(format!(
                    "word {word:?}: character {ch:?} is not in the alphabet"
                ))
            })?;
            if c == space {
                return Err(SluError::Build(format!(
                    "word {word:?} contains a space"
                )));
            }
            if blank == Some(c) {
                return Err(SluError::Build(format!(
                    "word {word:?} contains the blank symbol"
                )));
            }
            cur = match children.get(&(cur, c)) {
                Some(&next) => next,
                None => {
                    let next = f.add_state();
                    f.add_arc(cur, Arc::new(c, EPSILON, Weight::one(), next));
                    children.insert((cur, c), next);
                    next
                }
            };
        }
        // word label on the trailing space arc, back to the root
        f.add_arc(cur, Arc::new(space, word_label, Weight::one(), root));
    }
    Ok(f)
}
