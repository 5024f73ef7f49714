//! Minimal RDF substrate: terms, triples, graphs, basic graph pattern
//! matching, simple entailment and template-based updates.
//!
//! Graphs are immutable value types with set semantics; every operation
//! that changes a graph returns a new one. Blank nodes are label-scoped
//! per document and behave as existentials in entailment and as
//! match-scoped variables in patterns.

mod entailment;
mod graph;
mod matching;
mod term;
mod update;

pub use entailment::{entails, entailment_witness};
pub use graph::{union, Graph};
pub use matching::{match_pattern, solve_pattern, Binding};
pub(crate) use term::escape_literal;
pub use term::{Literal, LiteralKind, Term, Triple};
pub use update::apply_update;

use thiserror::Error;

/// Errors raised by graph construction, pattern matching and updates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RdfError {
    #[error("invalid IRI `{0}`: must be non-empty and contain no whitespace")]
    InvalidIri(String),
    #[error("invalid numeric literal `{0}`")]
    InvalidNumber(String),
    #[error("literal in {0} position")]
    LiteralPosition(&'static str),
    #[error("variable not allowed in a stored graph")]
    VariableInGraph,
    #[error("empty pattern")]
    EmptyPattern,
    #[error("pattern data graph contains variables")]
    VariableInData,
    #[error("blank node `_:{0}` in delete template")]
    BlankInDelete(String),
}
