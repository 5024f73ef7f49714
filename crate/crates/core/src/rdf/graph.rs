use std::collections::BTreeSet;

use super::term::{Term, Triple};
use super::RdfError;

/// An immutable set of triples, optionally named by an IRI.
///
/// Iteration order is the total order on triples, which makes every
/// derived artifact (serializations, match results, search expansions)
/// deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    name: Option<String>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    pub fn named(name: impl Into<String>) -> Graph {
        Graph { triples: BTreeSet::new(), name: Some(name.into()) }
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Graph, RdfError> {
        let mut g = Graph::new();
        for t in triples {
            g.insert(t)?;
        }
        Ok(g)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Graph {
        self.name = Some(name.into());
        self
    }

    /// Inserts one triple; stored graphs never contain variables.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, RdfError> {
        if triple.has_variable() {
            return Err(RdfError::VariableInGraph);
        }
        Ok(self.triples.insert(triple))
    }

    pub(crate) fn insert_unchecked(&mut self, triple: Triple) {
        debug_assert!(!triple.has_variable());
        self.triples.insert(triple);
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.triples.remove(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn has_variables(&self) -> bool {
        self.triples.iter().any(Triple::has_variable)
    }

    /// Labels of every blank node occurring anywhere in the graph, in
    /// sorted order.
    pub fn blank_labels(&self) -> BTreeSet<String> {
        let mut labels = BTreeSet::new();
        for t in &self.triples {
            for term in t.terms() {
                if let Term::Blank(l) = term {
                    labels.insert(l.clone());
                }
            }
        }
        labels
    }

    /// Every distinct term of the graph, from all three positions.
    pub fn terms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            for term in t.terms() {
                out.insert(term.clone());
            }
        }
        out
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.triples.is_subset(&other.triples)
    }

    /// Rewrites blank nodes through `f`, leaving other terms untouched.
    pub fn map_blanks(&self, mut f: impl FnMut(&str) -> Term) -> Graph {
        let mut out = Graph { triples: BTreeSet::new(), name: self.name.clone() };
        for t in &self.triples {
            out.insert_unchecked(t.map_terms(|term| match term {
                Term::Blank(l) => f(l),
                other => other.clone(),
            }));
        }
        out
    }
}

impl IntoIterator for Graph {
    type Item = Triple;
    type IntoIter = std::collections::btree_set::IntoIter<Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

/// Set union. Blank labels of `g2` that collide with labels already used
/// in `g1` are relabeled so the two documents' scopes stay disjoint;
/// non-colliding labels pass through unchanged.
pub fn union(g1: &Graph, g2: &Graph) -> Graph {
    let left_labels = g1.blank_labels();
    let mut taken = left_labels.clone();
    taken.extend(g2.blank_labels());

    let mut out = g1.clone();
    let relabeled = g2.map_blanks(|label| {
        if !left_labels.contains(label) {
            return Term::blank(label);
        }
        let mut n = 2usize;
        loop {
            let candidate = format!("{label}_u{n}");
            if !taken.contains(&candidate) {
                return Term::blank(candidate);
            }
            n += 1;
        }
    });
    for t in relabeled {
        out.insert_unchecked(t);
    }
    out
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

    #[test]
    fn set_semantics_dedupes() {
        let mut g = Graph::new();
        let tr = t(iri("s"), iri("p"), Term::text("x"));
        assert!(g.insert(tr.clone()).unwrap());
        assert!(!g.insert(tr).unwrap());
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn variables_are_rejected() {
        let mut g = Graph::new();
        let tr = t(Term::variable("x"), iri("p"), Term::text("x"));
        assert!(matches!(g.insert(tr), Err(RdfError::VariableInGraph)));
    }

    #[test]
    fn union_with_empty_is_identity() {
        let mut g = Graph::new();
        g.insert(t(iri("s"), iri("p"), iri("o"))).unwrap();
        assert_eq!(union(&g, &Graph::new()), g);
        assert_eq!(union(&Graph::new(), &g).triples(), g.triples());
    }

    #[test]
    fn union_relabels_colliding_blanks() {
        let mut g1 = Graph::new();
        g1.insert(t(Term::blank("x"), iri("p"), Term::text("a"))).unwrap();
        let mut g2 = Graph::new();
        g2.insert(t(Term::blank("x"), iri("p"), Term::text("b"))).unwrap();
        g2.insert(t(Term::blank("y"), iri("p"), Term::text("c"))).unwrap();

        let u = union(&g1, &g2);
        assert_eq!(u.len(), 3);
        let labels = u.blank_labels();
        assert!(labels.contains("x"));
        assert!(labels.contains("x_u2"));
        assert!(labels.contains("y"));
    }

    #[test]
    fn union_keeps_shared_ground_triples_once() {
        let shared = t(iri("s"), iri("p"), iri("o"));
        let mut g1 = Graph::new();
        g1.insert(shared.clone()).unwrap();
        let mut g2 = Graph::new();
        g2.insert(shared).unwrap();
        g2.insert(t(iri("s2"), iri("p"), iri("o"))).unwrap();
        assert_eq!(union(&g1, &g2).len(), 2);
    }
}
