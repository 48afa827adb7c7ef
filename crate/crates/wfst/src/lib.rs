//! Weighted finite-state transducers over the tropical semiring.
//!
//! Everything needed to build decoding graphs by hand: construction,
//! composition with proper epsilon filtering, trimming, epsilon removal,
//! arc sorting, union, concatenation, single shortest path with
//! deterministic tie-breaking, acceptance queries, a compact binary format
//! and Graphviz export. Machines are immutable once built and cheap to
//! share across threads.

mod dot;
mod fst;
mod io;
mod ops;
mod shortest;
mod symbol;
mod weight;

pub use fst::{Arc, Wfst};
pub use ops::{arc_sort, compose, concat, connect, rm_epsilon, union};
pub use shortest::{Accepted, BestPath};
pub use symbol::{SymbolTable, EPSILON, EPSILON_SYM};
pub use weight::Weight;

/// State identifier within a single machine.
pub type StateId = u32;

/// Symbol identifier within a [`SymbolTable`]. 0 is always epsilon.
pub type Label = u32;

/// Shared handle to a symbol table; machines that are composed together
/// must agree on the shared tape's table by content.
pub type TableRef = std::sync::Arc<SymbolTable>;

#[derive(Debug, thiserror::Error)]
pub enum WfstError {
    #[error("symbol table mismatch: {0}")]
    SymbolTableMismatch(String),
    #[error("invalid input label {0}")]
    InvalidLabel(Label),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
