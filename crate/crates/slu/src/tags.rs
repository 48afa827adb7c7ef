//! Structural output symbols. Slot markers, intent tags and placeholders
//! are dedicated symbol-table entries that can never collide with spoken
//! vocabulary.

/// Marker emitted before a slot's words.
pub fn slot_open(name: &str) -> String {
    format!("#slot:{name}")
}

/// Marker emitted after a slot's words.
pub const SLOT_CLOSE: &str = "#/slot";

/// Tag appended after the last word of every accepted sentence.
pub fn intent(name: &str) -> String {
    format!("#intent:{name}")
}

/// Placeholder token kept in the grammar so the decoder can report the slot
/// type.
pub fn placeholder(slot: &str) -> String {
    format!("\u{27e8}{slot}\u{27e9}")
}

pub fn as_slot_open(sym: &str) -> Option<&str> {
    sym.strip_prefix("#slot:")
}

pub fn as_intent(sym: &str) -> Option<&str> {
    sym.strip_prefix("#intent:")
}

pub fn as_placeholder(sym: &str) -> Option<&str> {
    sym.strip_prefix('\u{27e8}')?.strip_suffix('\u{27e9}')
}
