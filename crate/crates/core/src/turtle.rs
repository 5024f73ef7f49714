//! Parser for the Turtle subset used by usage, context and topology
//! documents.
//!
//! Supported constructs: `@prefix` directives, subject-predicate-object
//! statements terminated by `.`, `;` predicate continuation, `,` object
//! lists, `a` for rdf:type, `_:label` blank nodes, `<IRI>` references,
//! prefixed names, double-quoted string literals, bare `true`/`false`
//! and bare integers/decimals. `#` starts a comment through end of line.
//! Anything else (collections, anonymous nodes, language tags, `^^`
//! datatypes, multiline literals) is a hard parse error carrying the
//! offending line and column.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rdf::{Graph, Term, Triple};

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// Prefix label to namespace IRI map. `rdf:` is pre-registered so the
/// `a` keyword always expands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixTable {
    map: BTreeMap<String, String>,
}

impl Default for PrefixTable {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert("rdf".to_string(), RDF_NS.to_string());
        PrefixTable { map }
    }
}

impl PrefixTable {
    pub fn new() -> PrefixTable {
        PrefixTable::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, namespace: impl Into<String>) {
        self.map.insert(label.into(), namespace.into());
    }

    pub fn namespace(&self, label: &str) -> Option<&str> {
        self.map.get(label).map(String::as_str)
    }

    pub fn expand(&self, label: &str, local: &str) -> Option<String> {
        self.map.get(label).map(|ns| format!("{ns}{local}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    IriRef(String),
    Pname { prefix: String, local: String },
    Blank(String),
    Str(String),
    Bool(bool),
    Number(String),
    A,
    PrefixDirective,
    Dot,
    Semicolon,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::IriRef(v) => write!(f, "<{v}>"),
            TokenKind::Pname { prefix, local } => write!(f, "{prefix}:{local}"),
            TokenKind::Blank(l) => write!(f, "_:{l}"),
            TokenKind::Str(_) => write!(f, "string literal"),
            TokenKind::Bool(b) => write!(f, "{b}"),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::A => write!(f, "a"),
            TokenKind::PrefixDirective => write!(f, "@prefix"),
            TokenKind::Dot => write!(f, "."),
            TokenKind::Semicolon => write!(f, ";"),
            TokenKind::Comma => write!(f, ","),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Lexer<'a> {
        Lexer { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column, message)
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            if self.peek() == Some('#') {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.bump();
                }
                continue;
            }
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else { break };
            let kind = match c {
                '<' => self.lex_iri()?,
                '"' => self.lex_string()?,
                '.' => {
                    self.bump();
                    TokenKind::Dot
                }
                ';' => {
                    self.bump();
                    TokenKind::Semicolon
                }
                ',' => {
                    self.bump();
                    TokenKind::Comma
                }
                '@' => self.lex_directive()?,
                '_' => self.lex_blank()?,
                '^' => return Err(self.error("datatype annotations (`^^`) are not supported")),
                '(' | ')' => return Err(self.error("collections are not supported")),
                '[' | ']' => return Err(self.error("anonymous blank nodes are not supported")),
                c if c.is_ascii_digit() || c == '+' || c == '-' => self.lex_number()?,
                c if is_name_start(c) => self.lex_word()?,
                other => return Err(self.error(format!("unexpected character `{other}`"))),
            };
            out.push(Token { kind, line, column });
        }
        Ok(out)
    }

    fn lex_iri(&mut self) -> Result<TokenKind, ParseError> {
        self.bump(); // consume '<'
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c.is_whitespace() => {
                    return Err(self.error("whitespace inside IRI reference"))
                }
                Some(c) => value.push(c),
                None => return Err(self.error("unterminated IRI reference")),
            }
        }
        if value.is_empty() {
            return Err(self.error("empty IRI reference"));
        }
        Ok(TokenKind::IriRef(value))
    }

    fn lex_string(&mut self) -> Result<TokenKind, ParseError> {
        self.bump(); // consume opening quote
        if self.peek() == Some('"') {
            // Either the empty string or a `"""` long literal.
            self.bump();
            if self.peek() == Some('"') {
                return Err(self.error("multiline string literals are not supported"));
            }
            return Ok(TokenKind::Str(String::new()));
        }
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some('n') => value.push('\n'),
                    Some('r') => value.push('\r'),
                    Some('t') => value.push('\t'),
                    Some(other) => {
                        return Err(self.error(format!("unsupported escape `\\{other}`")))
                    }
                    None => return Err(self.error("unterminated string literal")),
                },
                Some('\n') => return Err(self.error("newline inside string literal")),
                Some(c) => value.push(c),
                None => return Err(self.error("unterminated string literal")),
            }
        }
        if self.peek() == Some('@') {
            return Err(self.error("language tags are not supported"));
        }
        Ok(TokenKind::Str(value))
    }

    fn lex_directive(&mut self) -> Result<TokenKind, ParseError> {
        let mut word = String::new();
        self.bump(); // consume '@'
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            word.push(self.bump().unwrap());
        }
        match word.as_str() {
            "prefix" => Ok(TokenKind::PrefixDirective),
            other => Err(self.error(format!("unsupported directive `@{other}`"))),
        }
    }

    fn lex_blank(&mut self) -> Result<TokenKind, ParseError> {
        self.bump(); // consume '_'
        if self.bump() != Some(':') {
            return Err(self.error("expected `:` after `_` in blank node label"));
        }
        let mut label = String::new();
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            label.push(self.bump().unwrap());
        }
        if label.is_empty() {
            return Err(self.error("empty blank node label"));
        }
        Ok(TokenKind::Blank(label))
    }

    fn lex_number(&mut self) -> Result<TokenKind, ParseError> {
        let mut lexical = String::new();
        if matches!(self.peek(), Some('+') | Some('-')) {
            lexical.push(self.bump().unwrap());
        }
        let mut saw_digit = false;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            lexical.push(self.bump().unwrap());
            saw_digit = true;
        }
        // A trailing `.` is the statement terminator, not a decimal
        // point; only consume it when a digit follows.
        if self.peek() == Some('.') {
            let mut clone = self.chars.clone();
            clone.next();
            if matches!(clone.peek(), Some(c) if c.is_ascii_digit()) {
                lexical.push(self.bump().unwrap());
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    lexical.push(self.bump().unwrap());
                }
            }
        }
        if !saw_digit {
            return Err(self.error("malformed numeric literal"));
        }
        Ok(TokenKind::Number(lexical))
    }

    fn lex_word(&mut self) -> Result<TokenKind, ParseError> {
        let mut word = String::new();
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            word.push(self.bump().unwrap());
        }
        match self.peek() {
            Some(':') => {
                self.bump();
                let mut local = String::new();
                while matches!(self.peek(), Some(c) if is_name_char(c)) {
                    local.push(self.bump().unwrap());
                }
                Ok(TokenKind::Pname { prefix: word, local })
            }
            _ => match word.as_str() {
                "a" => Ok(TokenKind::A),
                "true" => Ok(TokenKind::Bool(true)),
                "false" => Ok(TokenKind::Bool(false)),
                other => Err(self.error(format!("unexpected bare word `{other}`"))),
            },
        }
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

struct Parser {
    tokens: Vec<Token>,
    position: usize,
    prefixes: PrefixTable,
    graph: Graph,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.position)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.position).cloned();
        if t.is_some() {
            self.position += 1;
        }
        t
    }

    fn error_at(&self, token: Option<&Token>, message: impl Into<String>) -> ParseError {
        match token {
            Some(t) => ParseError::new(t.line, t.column, message),
            None => {
                let (line, column) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column))
                    .unwrap_or((1, 1));
                ParseError::new(line, column, message)
            }
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some(t) if &t.kind == kind => Ok(()),
            other => Err(self.error_at(other.as_ref(), format!("expected {what}"))),
        }
    }

    fn parse_document(&mut self) -> Result<(), ParseError> {
        while let Some(token) = self.peek() {
            if token.kind == TokenKind::PrefixDirective {
                self.parse_prefix()?;
            } else {
                self.parse_statement()?;
            }
        }
        Ok(())
    }

    fn parse_prefix(&mut self) -> Result<(), ParseError> {
        self.bump(); // @prefix
        let label = match self.bump() {
            Some(Token { kind: TokenKind::Pname { prefix, local }, .. }) if local.is_empty() => {
                prefix
            }
            other => {
                return Err(self.error_at(other.as_ref(), "expected prefix label ending in `:`"))
            }
        };
        let namespace = match self.bump() {
            Some(Token { kind: TokenKind::IriRef(iri), .. }) => iri,
            other => return Err(self.error_at(other.as_ref(), "expected namespace IRI")),
        };
        self.expect(&TokenKind::Dot, "`.` after @prefix directive")?;
        self.prefixes.insert(label, namespace);
        Ok(())
    }

    fn parse_statement(&mut self) -> Result<(), ParseError> {
        let subject = self.parse_node("subject")?;
        if subject.is_literal() {
            return Err(self.error_at(
                self.tokens.get(self.position - 1),
                "literal in subject position",
            ));
        }
        loop {
            let predicate = self.parse_predicate()?;
            loop {
                let object = self.parse_node("object")?;
                let triple = Triple::new(subject.clone(), predicate.clone(), object)
                    .map_err(|e| self.error_at(self.tokens.get(self.position - 1), e.to_string()))?;
                self.graph
                    .insert(triple)
                    .expect("turtle grammar cannot produce variables");
                match self.peek().map(|t| &t.kind) {
                    Some(TokenKind::Comma) => {
                        self.bump();
                    }
                    _ => break,
                }
            }
            match self.bump() {
                Some(Token { kind: TokenKind::Semicolon, .. }) => {
                    // Trailing `;` directly before `.` is tolerated.
                    if self.peek().map(|t| &t.kind) == Some(&TokenKind::Dot) {
                        self.bump();
                        return Ok(());
                    }
                }
                Some(Token { kind: TokenKind::Dot, .. }) => return Ok(()),
                other => {
                    return Err(self.error_at(other.as_ref(), "expected `;`, `,` or `.`"))
                }
            }
        }
    }

    fn parse_predicate(&mut self) -> Result<Term, ParseError> {
        let token = self.bump();
        match token {
            Some(Token { kind: TokenKind::A, .. }) => Ok(Term::iri_unchecked(RDF_TYPE)),
            Some(Token { kind: TokenKind::IriRef(iri), line, column }) => {
                Term::iri(iri).map_err(|e| ParseError::new(line, column, e.to_string()))
            }
            Some(Token { kind: TokenKind::Pname { prefix, local }, line, column }) => {
                self.expand(&prefix, &local, line, column)
            }
            Some(Token { kind: TokenKind::Blank(label), .. }) => Ok(Term::blank(label)),
            other => Err(self.error_at(other.as_ref(), "expected predicate")),
        }
    }

    fn parse_node(&mut self, what: &str) -> Result<Term, ParseError> {
        let token = self.bump();
        match token {
            Some(Token { kind: TokenKind::IriRef(iri), line, column }) => {
                Term::iri(iri).map_err(|e| ParseError::new(line, column, e.to_string()))
            }
            Some(Token { kind: TokenKind::Pname { prefix, local }, line, column }) => {
                self.expand(&prefix, &local, line, column)
            }
            Some(Token { kind: TokenKind::Blank(label), .. }) => Ok(Term::blank(label)),
            Some(Token { kind: TokenKind::Str(value), .. }) => Ok(Term::text(value)),
            Some(Token { kind: TokenKind::Bool(value), .. }) => Ok(Term::boolean(value)),
            Some(Token { kind: TokenKind::Number(lexical), line, column }) => {
                Term::number(lexical).map_err(|e| ParseError::new(line, column, e.to_string()))
            }
            other => Err(self.error_at(other.as_ref(), format!("expected {what}"))),
        }
    }

    fn expand(
        &self,
        prefix: &str,
        local: &str,
        line: usize,
        column: usize,
    ) -> Result<Term, ParseError> {
        match self.prefixes.expand(prefix, local) {
            Some(iri) => {
                Term::iri(iri).map_err(|e| ParseError::new(line, column, e.to_string()))
            }
            None => Err(ParseError::new(
                line,
                column,
                format!("undeclared prefix `{prefix}:`"),
            )),
        }
    }
}

/// Parses a Turtle-subset document into a graph plus the prefix table it
/// declared. Blank node labels are scoped to the document.
pub fn parse_turtle(text: &str) -> Result<(Graph, PrefixTable), ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser {
        tokens,
        position: 0,
        prefixes: PrefixTable::new(),
        graph: Graph::new(),
    };
    parser.parse_document()?;
    Ok((parser.graph, parser.prefixes))
}
