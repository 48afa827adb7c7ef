//! Token graphs: transducers that collapse frame-level CTC labels into
//! text. Repeated labels merge into one unless separated by the blank
//! label, and blanks themselves disappear. The piece variant additionally
//! splits each piece into its characters, the word-boundary marker becoming
//! a space.

use std::collections::BTreeMap;

use wfst::{Arc, Label, StateId, TableRef, Weight, Wfst, EPSILON};

use crate::SluError;

/// CTC collapse over a character alphabet. Every state is accepting; state
/// 0 is "just saw a blank (or nothing)", and each character has a state
/// remembering it as the last emitted label so repeats can be swallowed.
pub fn build_token_fst(chars: &TableRef, blank: Label) -> Wfst {
    let mut f = Wfst::new(chars.clone(), chars.clone());
    let start = f.add_state();
    f.set_start(start);
    f.set_final(start, Weight::one());

    let labels: Vec<Label> = (1..chars.len() as Label).filter(|&l| l != blank).collect();
    let mut state_of: BTreeMap<Label, StateId> = BTreeMap::new();
    for &l in &labels {
        let s = f.add_state();
        f.set_final(s, Weight::one());
        state_of.insert(l, s);
    }

    f.add_arc(start, Arc::new(blank, EPSILON, Weight::one(), start));
    for &l in &labels {
        f.add_arc(start, Arc::new(l, l, Weight::one(), state_of[&l]));
    }
    for &l in &labels {
        let s = state_of[&l];
        f.add_arc(s, Arc::new(l, EPSILON, Weight::one(), s));
        f.add_arc(s, Arc::new(blank, EPSILON, Weight::one(), start));
        for &m in &labels {
            if m != l {
                f.add_arc(s, Arc::new(m, m, Weight::one(), state_of[&m]));
            }
        }
    }
    f
}

/// CTC collapse over a piece vocabulary, emitting the pieces' characters.
/// The boundary marker character maps to the space character.
pub fn build_token_fst_pieces(
    pieces: &TableRef,
    chars: &TableRef,
    blank: Label,
    boundary: &str,
    space: Label,
) -> Result<Wfst, SluError> {
    let mut f = Wfst::new(pieces.clone(), chars.clone());
    let start = f.add_state();
    f.set_start(start);
    f.set_final(start, Weight::one());

    let labels: Vec<Label> = (1..pieces.len() as Label).filter(|&l| l != blank).collect();

    // character expansion of every piece
    let mut expansion: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
    for &p in &labels {
        let piece = pieces.symbol(p).expect("piece id in table");
        let mut out = Vec::new();
        for ch in piece.chars() {
            let s = ch.to_string();
            let c = if s == boundary {
                space
            } else {
                chars.label(&s).ok_or_else(|| {
                    SluError::Build(format!(
                        "piece {piece:?}: character {ch:?} missing from character table"
                    ))
                })?
            };
            out.push(c);
        }
        if out.is_empty() {
            return Err(SluError::Build(format!("piece {piece:?} is empty")));
        }
        expansion.insert(p, out);
    }

    let mut state_of: BTreeMap<Label, StateId> = BTreeMap::new();
    for &p in &labels {
        let s = f.add_state();
        f.set_final(s, Weight::one());
        state_of.insert(p, s);
    }

    // shared emission chain per piece: the entry arc consumes the piece and
    // emits its first character, the rest of the characters follow on
    // input-epsilon arcs
    let mut chain_entry: BTreeMap<Label, (Label, StateId)> = BTreeMap::new();
    for &p in &labels {
        let exp = &expansion[&p];
        let mut target = state_of[&p];
        // build the suffix backwards so each intermediate state is shared
        for &c in exp[1..].iter().rev() {
            let mid = f.add_state();
            f.add_arc(mid, Arc::new(EPSILON, c, Weight::one(), target));
            target = mid;
        }
        chain_entry.insert(p, (exp[0], target));
    }

    f.add_arc(start, Arc::new(blank, EPSILON, Weight::one(), start));
    for &p in &labels {
        let (first, entry) = chain_entry[&p];
        f.add_arc(start, Arc::new(p, first, Weight::one(), entry));
    }
    for &p in &labels {
        let s = state_of[&p];
        f.add_arc(s, Arc::new(p, EPSILON, Weight::one(), s));
        f.add_arc(s, Arc::new(blank, EPSILON, Weight::one(), start));
        for &q in &labels {
            if q != p {
                let (first, entry) = chain_entry[&q];
                f.add_arc(s, Arc::new(q, first, Weight::one(), entry));
            }
        }
    }
    Ok(f)
}

/// Procedural CTC collapse, the reference for what the token graphs do.
pub fn collapse_labels(labels: &[Label], blank: Label) -> Vec<Label> {
    let mut out = Vec::new();
    let mut prev: Option<Label> = None;
    for &l in labels {
        if Some(l) != prev && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc as Shared;
    use wfst::SymbolTable;

    fn char_table() -> TableRef {
        Shared::new(SymbolTable::from_symbols([" ", "a", "b", "-"]))
    }

    fn seq(t: &TableRef, s: &str) -> Vec<Label> {
        s.chars().map(|c| t.label(&c.to_string()).unwrap()).collect()
    }

    fn to_string(t: &TableRef, labels: &[Label]) -> String {
        labels.iter().map(|&l| t.symbol(l).unwrap()).collect()
    }

    #[test]
    fn collapses_the_figure_example() {
        let t = char_table();
        let blank = t.label("-").unwrap();
        let f = build_token_fst(&t, blank);
        let acc = f.accepts(&seq(&t, "aaab ab-b")).unwrap().expect("accepted");
        assert_eq!(to_string(&t, &acc.olabels), "ab abb");
        assert_eq!(acc.cost.value(), 0.0);
    }

    #[test]
    fn all_blanks_collapse_to_nothing() {
        let t = char_table();
        let blank = t.label("-").unwrap();
        let f = build_token_fst(&t, blank);
        let acc = f.accepts(&seq(&t, "---")).unwrap().expect("accepted");
        assert!(acc.olabels.is_empty());
    }

    #[test]
    fn matches_procedural_collapse_on_all_short_strings() {
        // every label string of length <= 6 over the 4-label alphabet
        let t = char_table();
        let blank = t.label("-").unwrap();
        let f = build_token_fst(&t, blank);
        let labels: Vec<Label> = (1..t.len() as Label).collect();
        let mut inputs: Vec<Vec<Label>> = vec![Vec::new()];
        for len in 1..=6 {
            let mut batch: Vec<Vec<Label>> = vec![Vec::new()];
            for _ in 0..len {
                let mut next = Vec::new();
                for prefix in &batch {
                    for &l in &labels {
                        let mut p = prefix.clone();
                        p.push(l);
                        next.push(p);
                    }
                }
                batch = next;
            }
            inputs.extend(batch);
        }
        for input in inputs {
            let expected = collapse_labels(&input, blank);
            let acc = f.accepts(&input).unwrap().unwrap_or_else(|| {
                panic!("token graph rejected {input:?}")
            });
            assert_eq!(acc.olabels, expected, "input {input:?}");
        }
    }

    #[test]
    fn pieces_expand_to_characters() {
        let pieces = Shared::new(SymbolTable::from_symbols(["\u{2581}", "ab", "b", "-"]));
        let chars = char_table();
        let blank = pieces.label("-").unwrap();
        let space = chars.label(" ").unwrap();
        let f = build_token_fst_pieces(&pieces, &chars, blank, "\u{2581}", space).unwrap();

        let p = |s: &str| pieces.label(s).unwrap();
        // "ab ab | ab - b" at the piece level: repeated pieces merge, blank
        // separates, the boundary piece becomes a space
        let input = vec![p("ab"), p("ab"), p("\u{2581}"), p("ab"), p("-"), p("b")];
        let acc = f.accepts(&input).unwrap().expect("accepted");
        assert_eq!(to_string(&chars, &acc.olabels), "ab abb");
    }

    #[test]
    fn piece_with_unknown_character_errors() {
        let pieces = Shared::new(SymbolTable::from_symbols(["xy", "-"]));
        let chars = char_table();
        let err = build_token_fst_pieces(
            &pieces,
            &chars,
            pieces.label("-").unwrap(),
            "\u{2581}",
            chars.label(" ").unwrap(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }
}
