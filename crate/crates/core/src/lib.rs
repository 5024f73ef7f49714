//! Goal-driven Web of Things orchestration.
//!
//! The crate turns Thing Descriptions into uniformly usable runtime
//! artifacts and plans sequences of operation invocations whose semantic
//! postconditions entail a desired goal context.
//!
//! Layering, bottom up:
//!
//! - [`rdf`] — terms, triples, graphs, pattern matching, simple
//!   entailment and template-based graph updates.
//! - [`turtle`] / [`ntriples`] — the concrete document syntax used by
//!   usage, context and topology files.
//! - [`fetch`] / [`httpio`] — document retrieval and the minimal HTTP
//!   transport shared by the protocol binding and the simulator facade.
//! - [`td`] — the typed Thing Description model, parsing and validation.
//! - [`binding`] — protocol bindings: form resolution, request dispatch,
//!   HTTP and in-process simulator transports.
//! - [`artifact`] — the generic artifact runtime: registry, observable
//!   properties, uniform `act`, runtime replacement, context export.
//! - [`kb`] — the usage knowledge base: usages with pre/postcondition
//!   context graphs, topology, grounding of blank nodes to instances.
//! - [`planner`] — achievability checks and staged plan search.
//! - [`sim`] — the simulated smart home used as the execution oracle.
//! - [`scenario`] — script-driven sessions tying everything together.

pub mod fetch;
pub mod httpio;
pub mod ntriples;
pub mod artifact;
pub mod binding;
pub mod kb;
pub mod planner;
pub mod predicates;
pub mod rdf;
pub mod scenario;
pub mod sim;
pub mod td;
pub mod turtle;
