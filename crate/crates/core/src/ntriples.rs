//! Canonical line-based serialization of graphs, used for diffing,
//! duplicate-state detection in the planner, and goal files.
//!
//! One triple per line, IRIs fully expanded, lines sorted
//! lexicographically. Blank nodes are renumbered `_:b0`, `_:b1`, ... by
//! first appearance in the sorted triple order, so isomorphic inputs
//! that differ only in label choice serialize identically whenever the
//! relabeling preserves triple order. String literals are quoted and
//! escaped; booleans and numbers are emitted bare, which keeps the
//! output inside the Turtle subset accepted by [`crate::turtle`].

use std::collections::BTreeMap;

use crate::rdf::{Graph, LiteralKind, Term};
use crate::rdf::Literal;

/// Serializes a graph to sorted canonical lines. Graphs never contain
/// variables, so every term is renderable.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut numbering: BTreeMap<&str, usize> = BTreeMap::new();
    for triple in graph.iter() {
        for term in triple.terms() {
            if let Term::Blank(label) = term {
                let next = numbering.len();
                numbering.entry(label.as_str()).or_insert(next);
            }
        }
    }

    let mut lines: Vec<String> = graph
        .iter()
        .map(|t| {
            format!(
                "{} {} {} .",
                render(&t.subject, &numbering),
                render(&t.predicate, &numbering),
                render(&t.object, &numbering),
            )
        })
        .collect();
    lines.sort();

    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn render(term: &Term, numbering: &BTreeMap<&str, usize>) -> String {
    match term {
        Term::Iri(v) => format!("<{v}>"),
        Term::Blank(label) => format!("_:b{}", numbering[label.as_str()]),
        Term::Literal(Literal { lexical, kind }) => match kind {
            LiteralKind::Text => format!("\"{}\"", crate::rdf::escape_literal(lexical)),
            LiteralKind::Boolean | LiteralKind::Number => lexical.clone(),
        },
        Term::Variable(name) => format!("?{name}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Triple;
    use crate::turtle::parse_turtle;

    #[test]
    fn single_triple_is_one_terminated_line() {
        let g = Graph::from_triples([Triple::new(
            Term::iri_unchecked("http://localhost/TD/smart_home/kitchen/ceilingLight.jsonld"),
            Term::iri_unchecked("http://iotschema.org/switchstatus"),
            Term::text("on"),
        )
        .unwrap()])
        .unwrap();
        let out = serialize_ntriples(&g);
        assert_eq!(
            out,
            "<http://localhost/TD/smart_home/kitchen/ceilingLight.jsonld> <http://iotschema.org/switchstatus> \"on\" .\n"
        );
    }

    #[test]
    fn empty_graph_is_empty_string() {
        assert_eq!(serialize_ntriples(&Graph::new()), "");
    }

    #[test]
    fn lines_are_sorted_and_blanks_renumbered() {
        let doc = r#"
@prefix e: <http://e/>.
_:zulu e:p "1".
e:a e:p _:zulu.
_:alpha e:q true.
"#;
        let (g, _) = parse_turtle(doc).unwrap();
        let out = serialize_ntriples(&g);
        let lines: Vec<&str> = out.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(out.contains("_:b0"));
        assert!(out.contains("_:b1"));
    }

    #[test]
    fn output_reparses_to_isomorphic_graph() {
        let doc = r#"
@prefix iot: <http://iotschema.org/>.
_:lightArtifact iot:switchstatus "off".
_:other iot:brightness 3.5.
<http://e/k> _:amb true.
"#;
        let (g, _) = parse_turtle(doc).unwrap();
        let (back, _) = parse_turtle(&serialize_ntriples(&g)).unwrap();
        assert_eq!(g.len(), back.len());
        // Canonical form is a fixed point modulo relabeling.
        assert_eq!(serialize_ntriples(&g), serialize_ntriples(&back));
    }
}
