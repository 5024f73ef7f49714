use std::collections::BTreeMap;

use super::graph::Graph;
use super::term::{Term, Triple};
use super::RdfError;

/// A solution mapping produced by pattern matching. Variables are keyed
/// by name; blank nodes in the pattern act as match-scoped variables and
/// are keyed as `_:label`, so substituting a binding into the pattern
/// reproduces concrete data triples.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding {
    map: BTreeMap<String, Term>,
}

impl Binding {
    pub fn new() -> Binding {
        Binding::default()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.map.get(name)
    }

    /// Value bound for variable `name` (without the `?`).
    pub fn variable(&self, name: &str) -> Option<&Term> {
        self.map.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn bind(&mut self, key: String, value: Term) {
        self.map.insert(key, value);
    }

    /// Applies the binding to one template term. Pattern blanks are
    /// substituted only when `substitute_blanks` is set.
    pub(crate) fn apply(&self, term: &Term, substitute_blanks: bool) -> Term {
        match term {
            Term::Variable(name) => self.map.get(name).cloned().unwrap_or_else(|| term.clone()),
            Term::Blank(label) if substitute_blanks => self
                .map
                .get(&blank_key(label))
                .cloned()
                .unwrap_or_else(|| term.clone()),
            other => other.clone(),
        }
    }
}

pub(crate) fn blank_key(label: &str) -> String {
    format!("_:{label}")
}

fn slot_key(term: &Term) -> Option<String> {
    match term {
        Term::Variable(name) => Some(name.clone()),
        Term::Blank(label) => Some(blank_key(label)),
        _ => None,
    }
}

/// Matches a basic graph pattern against `data`, returning every
/// solution in a deterministic order (bindings sorted by their
/// name/value pairs).
///
/// The pattern must be non-empty and free of literals in subject or
/// predicate position; the data graph must be variable-free.
pub fn match_pattern(pattern: &[Triple], data: &Graph) -> Result<Vec<Binding>, RdfError> {
    if pattern.is_empty() {
        return Err(RdfError::EmptyPattern);
    }
    validate_pattern(pattern)?;
    if data.has_variables() {
        return Err(RdfError::VariableInData);
    }
    Ok(solve_pattern(pattern, data))
}

fn validate_pattern(pattern: &[Triple]) -> Result<(), RdfError> {
    for t in pattern {
        if t.subject.is_literal() {
            return Err(RdfError::LiteralPosition("subject"));
        }
        if t.predicate.is_literal() {
            return Err(RdfError::LiteralPosition("predicate"));
        }
    }
    Ok(())
}

/// Core join without the public preconditions: an empty pattern yields
/// exactly one empty solution, which is what template-update semantics
/// need for usages without preconditions.
pub fn solve_pattern(pattern: &[Triple], data: &Graph) -> Vec<Binding> {
    let mut results = Vec::new();
    let mut binding = Binding::new();
    extend(pattern, 0, data, &mut binding, &mut results);
    results.sort();
    results.dedup();
    results
}

fn extend(
    pattern: &[Triple],
    index: usize,
    data: &Graph,
    binding: &mut Binding,
    results: &mut Vec<Binding>,
) {
    if index == pattern.len() {
        results.push(binding.clone());
        return;
    }
    let wanted = &pattern[index];
    // Candidate pruning: when the predicate is already concrete under the
    // current binding, only data triples with that predicate can match.
    let bound_pred = concrete(&wanted.predicate, binding);
    for candidate in data.iter() {
        if let Some(p) = &bound_pred {
            if &candidate.predicate != p {
                continue;
            }
        }
        let mut trial = binding.clone();
        if unify(wanted, candidate, &mut trial) {
            extend(pattern, index + 1, data, &mut trial, results);
        }
    }
}

fn concrete(term: &Term, binding: &Binding) -> Option<Term> {
    match slot_key(term) {
        Some(key) => binding.get(&key).cloned(),
        None => Some(term.clone()),
    }
}

fn unify(pattern: &Triple, data: &Triple, binding: &mut Binding) -> bool {
    unify_term(&pattern.subject, &data.subject, binding)
        && unify_term(&pattern.predicate, &data.predicate, binding)
        && unify_term(&pattern.object, &data.object, binding)
}

fn unify_term(pattern: &Term, data: &Term, binding: &mut Binding) -> bool {
    match slot_key(pattern) {
        Some(key) => match binding.get(&key) {
            Some(bound) => bound == data,
            None => {
                binding.bind(key, data.clone());
                true
            }
        },
        None => pattern == data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(v: &str) -> Term {
        Term::iri_unchecked(format!("http://e/{v}"))
    }

    fn t(s: Term, p: Term, o: Term) -> Triple {
        Triple::new(s, p, o).unwrap()
    }

    fn sample_data() -> Graph {
        let status = iri("switchstatus");
        Graph::from_triples([
            t(iri("ceilingLight"), status.clone(), Term::text("off")),
            t(iri("emergencyLight"), status.clone(), Term::text("off")),
            t(iri("diningLight"), status, Term::text("on")),
            t(iri("curtains"), iri("currentStatus"), Term::text("closed")),
        ])
        .unwrap()
    }

    #[test]
    fn single_variable_pattern_finds_all_offs() {
        let data = sample_data();
        let pattern = [t(Term::variable("x"), iri("switchstatus"), Term::text("off"))];
        let solutions = match_pattern(&pattern, &data).unwrap();
        assert_eq!(solutions.len(), 2);
        let subjects: Vec<_> = solutions
            .iter()
            .map(|b| b.variable("x").unwrap().clone())
            .collect();
        assert_eq!(subjects, vec![iri("ceilingLight"), iri("emergencyLight")]);
    }

    #[test]
    fn empty_data_has_no_solutions() {
        let pattern = [t(Term::variable("x"), iri("p"), Term::text("v"))];
        assert!(match_pattern(&pattern, &Graph::new()).unwrap().is_empty());
    }

    #[test]
    fn ground_pattern_present_yields_one_empty_binding() {
        let data = sample_data();
        let pattern = [t(iri("curtains"), iri("currentStatus"), Term::text("closed"))];
        let solutions = match_pattern(&pattern, &data).unwrap();
        assert_eq!(solutions.len(), 1);
        assert!(solutions[0].is_empty());
    }

    #[test]
    fn blanks_act_as_variables() {
        let data = sample_data();
        let pattern = [t(Term::blank("who"), iri("switchstatus"), Term::variable("v"))];
        let solutions = match_pattern(&pattern, &data).unwrap();
        assert_eq!(solutions.len(), 3);
        assert!(solutions.iter().all(|b| b.get("_:who").is_some()));
    }

    #[test]
    fn join_across_two_triples() {
        let mut data = sample_data();
        data.insert(t(iri("ceilingLight"), iri("in"), iri("kitchen"))).unwrap();
        data.insert(t(iri("diningLight"), iri("in"), iri("dining"))).unwrap();
        let pattern = [
            t(Term::variable("x"), iri("switchstatus"), Term::text("off")),
            t(Term::variable("x"), iri("in"), Term::variable("z")),
        ];
        let solutions = match_pattern(&pattern, &data).unwrap();
        assert_eq!(solutions.len(), 1);
        assert_eq!(solutions[0].variable("z"), Some(&iri("kitchen")));
    }

    #[test]
    fn literal_in_pattern_subject_is_an_error() {
        let pattern = [Triple {
            subject: Term::text("bad"),
            predicate: iri("p"),
            object: iri("o"),
        }];
        assert!(matches!(
            match_pattern(&pattern, &sample_data()),
            Err(RdfError::LiteralPosition("subject"))
        ));
    }

    #[test]
    fn empty_pattern_is_rejected_publicly() {
        assert!(matches!(
            match_pattern(&[], &sample_data()),
            Err(RdfError::EmptyPattern)
        ));
        // ...but the internal solver treats it as the unit solution.
        assert_eq!(solve_pattern(&[], &sample_data()).len(), 1);
    }
}
