//! Bidirectional label/id tables. Id 0 is always the reserved epsilon.

use std::collections::HashMap;

use crate::Label;

/// Reserved epsilon label, present in every table at id 0.
pub const EPSILON: Label = 0;

/// Text used for the epsilon entry.
pub const EPSILON_SYM: &str = "<eps>";

#[derive(Debug, Clone)]
pub struct SymbolTable {
    syms: Vec<String>,
    ids: HashMap<String, Label>,
}

impl SymbolTable {
    /// New table containing only the reserved epsilon at id 0.
    pub fn new() -> Self {
        let mut t = SymbolTable {
            syms: Vec::new(),
            ids: HashMap::new(),
        };
        t.add_symbol(EPSILON_SYM);
        t
    }

    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut t = SymbolTable::new();
        for s in symbols {
            t.add_symbol(s.as_ref());
        }
        t
    }

    /// Adds a symbol (idempotent) and returns its id.
    pub fn add_symbol(&mut self, sym: &str) -> Label {
        if let Some(&id) = self.ids.get(sym) {
            return id;
        }
        let id = self.syms.len() as Label;
        self.syms.push(sym.to_string());
        self.ids.insert(sym.to_string(), id);
        id
    }

    pub fn label(&self, sym: &str) -> Option<Label> {
        self.ids.get(sym).copied()
    }

    pub fn symbol(&self, id: Label) -> Option<&str> {
        self.syms.get(id as usize).map(|s| s.as_str())
    }

    pub fn contains(&self, sym: &str) -> bool {
        self.ids.contains_key(sym)
    }

    /// Number of entries including epsilon.
    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    /// Symbols in id order, starting with epsilon.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.syms.iter().map(|s| s.as_str())
    }

    pub fn is_valid(&self, id: Label) -> bool {
        (id as usize) < self.syms.len()
    }
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}

impl PartialEq for SymbolTable {
    fn eq(&self, other: &Self) -> bool {
        self.syms == other.syms
    }
}

impl Eq for SymbolTable {}
