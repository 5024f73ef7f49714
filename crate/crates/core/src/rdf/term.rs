use std::fmt;

use super::RdfError;

/// Datatype hint carried by a literal. Literal equality is exact lexical
/// match plus kind equality, so `"on"` and `"On"` differ, and the string
/// `"true"` never equals the boolean `true`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LiteralKind {
    Text,
    Boolean,
    Number,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub kind: LiteralKind,
}

impl Literal {
    pub fn text(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), kind: LiteralKind::Text }
    }

    pub fn boolean(value: bool) -> Self {
        Literal { lexical: if value { "true" } else { "false" }.into(), kind: LiteralKind::Boolean }
    }

    /// Numeric literal keeping the lexical form as written, so `18` and
    /// `18.0` stay distinct.
    pub fn number(lexical: impl Into<String>) -> Result<Self, RdfError> {
        let lexical = lexical.into();
        if lexical.parse::<f64>().is_err() {
            return Err(RdfError::InvalidNumber(lexical));
        }
        Ok(Literal { lexical, kind: LiteralKind::Number })
    }
}

/// One RDF term. Variables appear only in templates and patterns, never
/// in stored graphs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
    Variable(String),
}

impl Term {
    /// IRI constructor; rejects empty values and embedded whitespace.
    pub fn iri(value: impl Into<String>) -> Result<Term, RdfError> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(RdfError::InvalidIri(value));
        }
        Ok(Term::Iri(value))
    }

    /// IRI constructor for values known to be well formed (namespace
    /// constants and the like). Panics on malformed input.
    pub fn iri_unchecked(value: impl Into<String>) -> Term {
        Term::iri(value).expect("well-formed IRI")
    }

    pub fn blank(label: impl Into<String>) -> Term {
        Term::Blank(label.into())
    }

    pub fn variable(name: impl Into<String>) -> Term {
        Term::Variable(name.into())
    }

    pub fn text(lexical: impl Into<String>) -> Term {
        Term::Literal(Literal::text(lexical))
    }

    pub fn boolean(value: bool) -> Term {
        Term::Literal(Literal::boolean(value))
    }

    pub fn number(lexical: impl Into<String>) -> Result<Term, RdfError> {
        Ok(Term::Literal(Literal::number(lexical)?))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(v) => Some(v),
            _ => None,
        }
    }

    pub fn blank_label(&self) -> Option<&str> {
        match self {
            Term::Blank(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(v) => write!(f, "<{v}>"),
            Term::Blank(l) => write!(f, "_:{l}"),
            Term::Literal(lit) => match lit.kind {
                LiteralKind::Text => {
                    write!(f, "\"{}\"", escape_literal(&lit.lexical))
                }
                LiteralKind::Boolean | LiteralKind::Number => write!(f, "{}", lit.lexical),
            },
            Term::Variable(n) => write!(f, "?{n}"),
        }
    }
}

pub(crate) fn escape_literal(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// One RDF statement. Literals are rejected in subject and predicate
/// position; blank nodes are accepted anywhere, which covers the
/// generalized statements ambient context documents use.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, RdfError> {
        if subject.is_literal() {
            return Err(RdfError::LiteralPosition("subject"));
        }
        if predicate.is_literal() {
            return Err(RdfError::LiteralPosition("predicate"));
        }
        Ok(Triple { subject, predicate, object })
    }

    pub fn has_variable(&self) -> bool {
        self.subject.is_variable() || self.predicate.is_variable() || self.object.is_variable()
    }

    pub fn has_blank(&self) -> bool {
        self.subject.is_blank() || self.predicate.is_blank() || self.object.is_blank()
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Applies `f` to each position, rebuilding the triple.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Triple {
        Triple {
            subject: f(&self.subject),
            predicate: f(&self.predicate),
            object: f(&self.object),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_rejects_whitespace_and_empty() {
        assert!(Term::iri("http://example.org/a").is_ok());
        assert!(matches!(Term::iri(""), Err(RdfError::InvalidIri(_))));
        assert!(matches!(Term::iri("http://a b"), Err(RdfError::InvalidIri(_))));
    }

    #[test]
    fn literal_equality_is_exact() {
        assert_ne!(Literal::text("on"), Literal::text("On"));
        assert_ne!(Term::text("true"), Term::boolean(true));
        assert_ne!(
            Term::number("18").unwrap(),
            Term::number("18.0").unwrap()
        );
    }

    #[test]
    fn triple_rejects_literals_up_front() {
        let lit = Term::text("off");
        let iri = Term::iri_unchecked("http://example.org/p");
        assert!(matches!(
            Triple::new(lit.clone(), iri.clone(), iri.clone()),
            Err(RdfError::LiteralPosition("subject"))
        ));
        assert!(matches!(
            Triple::new(iri.clone(), lit, iri),
            Err(RdfError::LiteralPosition("predicate"))
        ));
    }

    #[test]
    fn blank_predicate_is_allowed() {
        let t = Triple::new(
            Term::iri_unchecked("http://example.org/kitchen"),
            Term::blank("light_outside"),
            Term::boolean(true),
        );
        assert!(t.is_ok());
    }

    #[test]
    fn display_matches_ntriples_shape() {
        let t = Triple::new(
            Term::iri_unchecked("http://e/s"),
            Term::iri_unchecked("http://e/p"),
            Term::text("a \"b\""),
        )
        .unwrap();
        assert_eq!(t.to_string(), "<http://e/s> <http://e/p> \"a \\\"b\\\"\" .");
    }
}
