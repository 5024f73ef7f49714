use std::collections::BTreeMap;

use super::graph::Graph;
use super::matching::{blank_key, solve_pattern};
use super::term::{Term, Triple};

/// RDF simple entailment: `premise` entails `conclusion` iff some mapping
/// of the conclusion's blank nodes into the premise's terms makes every
/// mapped conclusion triple a triple of the premise.
///
/// Both graphs must be variable-free, which graph construction already
/// guarantees.
pub fn entails(premise: &Graph, conclusion: &Graph) -> bool {
    entailment_witness(premise, conclusion).is_some()
}

/// Like [`entails`] but returns one witness mapping from conclusion blank
/// labels to premise terms when the entailment holds. Blank-free
/// conclusions yield an empty witness.
pub fn entailment_witness(
    premise: &Graph,
    conclusion: &Graph,
) -> Option<BTreeMap<String, Term>> {
    if conclusion.is_empty() {
        return Some(BTreeMap::new());
    }
    // Fast path: without blanks, entailment is plain subgraph inclusion.
    let labels = conclusion.blank_labels();
    if labels.is_empty() {
        return conclusion
            .is_subgraph_of(premise)
            .then(BTreeMap::new);
    }

    let pattern: Vec<Triple> = conclusion.iter().cloned().collect();
    let solutions = solve_pattern(&pattern, premise);
    let first = solutions.into_iter().next()?;

    let mut witness = BTreeMap::new();
    for label in labels {
        if let Some(term) = first.get(&blank_key(&label)) {
            witness.insert(label, term.clone());
        }
    }
    Some(witness)
}
