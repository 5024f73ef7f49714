use super::graph::Graph;
use super::matching::{solve_pattern, Binding};
use super::term::{Term, Triple};
use super::RdfError;

/// Template-based graph update with all-solutions semantics.
///
/// Every solution of `where_template` against `state` is substituted
/// first into `delete_template` (those triples are removed) and then into
/// `insert_template` (those triples are added). An instantiated triple
/// that still carries an unbound variable, or that ends up with a literal
/// in subject or predicate position, is skipped rather than applied.
///
/// Blank nodes are forbidden in the delete template. Blank nodes in the
/// insert template denote fresh nodes, one per solution, labeled
/// `label#sN` for the N-th solution in the deterministic solution order.
/// An empty where template has exactly one empty solution, so concrete
/// insert/delete templates apply once.
///
/// The input graph is untouched; a new graph is returned.
pub fn apply_update(
    state: &Graph,
    delete_template: &[Triple],
    insert_template: &[Triple],
    where_template: &[Triple],
) -> Result<Graph, RdfError> {
    for t in delete_template {
        for term in t.terms() {
            if let Term::Blank(label) = term {
                return Err(RdfError::BlankInDelete(label.clone()));
            }
        }
    }

    let solutions = solve_pattern(where_template, state);

    let mut result = state.clone();
    for solution in &solutions {
        for t in delete_template {
            if let Some(instance) = instantiate(t, solution, None) {
                result.remove(&instance);
            }
        }
    }
    for (index, solution) in solutions.iter().enumerate() {
        for t in insert_template {
            if let Some(instance) = instantiate(t, solution, Some(index)) {
                result.insert_unchecked(instance);
            }
        }
    }
    Ok(result)
}

/// Substitutes one template triple under a solution. Returns `None` when
/// the instantiated triple must be skipped (unbound variable or illegal
/// term position). `fresh_index` is set for insert templates, where blank
/// labels mint fresh per-solution nodes.
fn instantiate(template: &Triple, solution: &Binding, fresh_index: Option<usize>) -> Option<Triple> {
    let subst = |term: &Term| -> Term {
        match term {
            Term::Blank(label) => match fresh_index {
                Some(i) => Term::blank(format!("{label}#s{i}")),
                None => term.clone(),
            },
            other => solution.apply(other, true),
        }
    };
    let triple = template.map_terms(subst);
    if triple.has_variable() {
        return None;
    }
    Triple::new(triple.subject, triple.predicate, triple.object).ok()
}
