//! Dialog specification parsing. The input is a JSON document with two
//! maps:
//!
//! ```json
//! {
//!   "intents": { "get-looks": ["(is a|are) [---](animal) cute"] },
//!   "lookups": { "animal": ["aye aye", "(hairy frogfish)->striated frogfish"] }
//! }
//! ```
//!
//! Template constructs: `(a|b c)` alternation over word sequences (an empty
//! alternative `(word|)` makes the group optional), `[---](name)` slot
//! placeholder. Lookup entries may map a spoken phrase onto a canonical one
//! with `(raw phrase)->canonical phrase`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::SluError;

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateToken {
    Word(String),
    /// Alternation over word sequences; an alternative may be empty.
    Group(Vec<Vec<String>>),
    Placeholder(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceToken {
    Word(String),
    Placeholder(String),
}

#[derive(Debug, Clone)]
pub struct Template {
    pub source: String,
    pub tokens: Vec<TemplateToken>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupEntry {
    /// Words as spoken.
    pub raw: Vec<String>,
    /// Words reported to the caller; equals `raw` unless the entry is a
    /// synonym mapping.
    pub canonical: Vec<String>,
}

impl LookupEntry {
    pub fn is_synonym(&self) -> bool {
        self.raw != self.canonical
    }
}

#[derive(Debug, Clone)]
pub struct DialogSpec {
    pub intents: BTreeMap<String, Vec<Template>>,
    pub lookups: BTreeMap<String, Vec<LookupEntry>>,
}

#[derive(Deserialize)]
struct RawSpec {
    intents: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    lookups: BTreeMap<String, Vec<String>>,
}

pub fn parse_dialog_spec(text: &str) -> Result<DialogSpec, SluError> {
    let raw: RawSpec = serde_json::from_str(text)?;
    if raw.intents.is_empty() {
        return Err(SluError::Spec("no intents defined".into()));
    }

    let mut lookups: BTreeMap<String, Vec<LookupEntry>> = BTreeMap::new();
    for (name, entries) in &raw.lookups {
        check_name(name, "slot")?;
        let parsed = entries
            .iter()
            .map(|e| parse_entry(e).map_err(|m| SluError::Spec(format!("slot {name:?}: {m}"))))
            .collect::<Result<Vec<_>, _>>()?;
        lookups.insert(name.clone(), parsed);
    }

    let mut intents: BTreeMap<String, Vec<Template>> = BTreeMap::new();
    for (name, templates) in &raw.intents {
        check_name(name, "intent")?;
        if templates.is_empty() {
            return Err(SluError::Spec(format!("intent {name:?} has no templates")));
        }
        let mut parsed = Vec::with_capacity(templates.len());
        for (i, t) in templates.iter().enumerate() {
            let tokens = parse_template(t).map_err(|m| {
                SluError::Spec(format!("intent {name:?}, template {}: {m}", i + 1))
            })?;
            if tokens.is_empty() {
                return Err(SluError::Spec(format!(
                    "intent {name:?}, template {}: empty template",
                    i + 1
                )));
            }
            // every placeholder must refer to a known, non-empty lookup
            for tok in &tokens {
                if let TemplateToken::Placeholder(slot) = tok {
                    match lookups.get(slot) {
                        None => {
                            return Err(SluError::Spec(format!(
                                "intent {name:?}, template {}: unknown slot {slot:?}",
                                i + 1
                            )))
                        }
                        Some(entries) if entries.is_empty() => {
                            return Err(SluError::Spec(format!(
                                "slot {slot:?} referenced by intent {name:?} has no entries"
                            )))
                        }
                        Some(_) => {}
                    }
                }
            }
            parsed.push(Template {
                source: t.clone(),
                tokens,
            });
        }
        intents.insert(name.clone(), parsed);
    }

    Ok(DialogSpec { intents, lookups })
}

impl Template {
    /// Cartesian expansion of the alternation groups, leftmost group
    /// varying slowest, alternatives in written order. Placeholders stay
    /// single opaque tokens.
    pub fn expand(&self) -> Vec<Vec<SentenceToken>> {
        let mut acc: Vec<Vec<SentenceToken>> = vec![Vec::new()];
        for tok in &self.tokens {
            match tok {
                TemplateToken::Word(w) => {
                    for s in &mut acc {
                        s.push(SentenceToken::Word(w.clone()));
                    }
                }
                TemplateToken::Placeholder(p) => {
                    for s in &mut acc {
                        s.push(SentenceToken::Placeholder(p.clone()));
                    }
                }
                TemplateToken::Group(alts) => {
                    let mut next = Vec::with_capacity(acc.len() * alts.len());
                    for prefix in &acc {
                        for alt in alts {
                            let mut s = prefix.clone();
                            s.extend(alt.iter().cloned().map(SentenceToken::Word));
                            next.push(s);
                        }
                    }
                    acc = next;
                }
            }
        }
        acc
    }
}

impl DialogSpec {
    /// Slot names actually referenced by some template.
    pub fn referenced_slots(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        for templates in self.intents.values() {
            for t in templates {
                for tok in &t.tokens {
                    if let TemplateToken::Placeholder(p) = tok {
                        out.insert(p.clone());
                    }
                }
            }
        }
        out
    }
}

/// Intent and slot names end up in file names and tags; keep them tame.
fn check_name(name: &str, what: &str) -> Result<(), SluError> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(SluError::Spec(format!(
            "{what} name {name:?} must be non-empty and use only [A-Za-z0-9._-]"
        )))
    }
}

fn words_of(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_lowercase()).collect()
}

/// Characters that would collide with marker and tag symbols.
fn check_reserved(word: &str) -> Result<(), String> {
    if word.starts_with('#') || word.contains('\u{27e8}') || word.contains('\u{27e9}') {
        Err(format!("word {word:?} uses reserved characters"))
    } else {
        Ok(())
    }
}

fn parse_entry(entry: &str) -> Result<LookupEntry, String> {
    let (raw, canonical) = match entry.find("->") {
        Some(idx) => {
            let mut lhs = entry[..idx].trim();
            let rhs = entry[idx + 2..].trim();
            if lhs.starts_with('(') && lhs.ends_with(')') {
                lhs = lhs[1..lhs.len() - 1].trim();
            }
            (words_of(lhs), words_of(rhs))
        }
        None => {
            let w = words_of(entry);
            (w.clone(), w)
        }
    };
    if raw.is_empty() || canonical.is_empty() {
        return Err(format!("entry {entry:?} has an empty side"));
    }
    for w in raw.iter().chain(&canonical) {
        if w.chars().any(|c| "()[]|".contains(c)) {
            return Err(format!("entry {entry:?} contains reserved characters"));
        }
        check_reserved(w)?;
    }
    Ok(LookupEntry { raw, canonical })
}

fn parse_template(src: &str) -> Result<Vec<TemplateToken>, String> {
    let mut tokens = Vec::new();
    let mut rest = src.trim_start();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix("[---]") {
            let inner = after
                .strip_prefix('(')
                .ok_or("placeholder must be written [---](slot-name)")?;
            let end = inner.find(')').ok_or("unclosed placeholder name")?;
            let name = inner[..end].trim();
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(format!("bad placeholder name {:?}", &inner[..end]));
            }
            tokens.push(TemplateToken::Placeholder(name.to_string()));
            rest = &inner[end + 1..];
        } else if let Some(inner) = rest.strip_prefix('(') {
            let end = inner.find(')').ok_or("unclosed alternation group")?;
            let body = &inner[..end];
            if body.contains('(') {
                return Err("nested alternation groups are not supported".into());
            }
            if body.contains('[') {
                return Err("placeholders inside alternation groups are not supported".into());
            }
            let alts: Vec<Vec<String>> = body.split('|').map(words_of).collect();
            for w in alts.iter().flatten() {
                check_reserved(w)?;
            }
            tokens.push(TemplateToken::Group(alts));
            rest = &inner[end + 1..];
        } else if rest.starts_with(')') || rest.starts_with('|') || rest.starts_with(']') {
            return Err(format!("unexpected {:?}", &rest[..1]));
        } else {
            let end = rest
                .find(char::is_whitespace)
                .unwrap_or(rest.len());
            let word = &rest[..end];
            if word.chars().any(|c| "()[]|".contains(c)) {
                return Err(format!("malformed token {word:?}"));
            }
            check_reserved(word)?;
            tokens.push(TemplateToken::Word(word.to_lowercase()));
            rest = &rest[end..];
        }
        rest = rest.trim_start();
    }
    Ok(tokens)
}
