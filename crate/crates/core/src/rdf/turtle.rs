//! Reader and writer for the Turtle subset used by graphs, shapes and
//! fixtures: prefixed names, IRIs, quoted and numeric literals, `;` and `,`
//! abbreviations and the `a` keyword.
//!
//! Graph documents may not contain blank nodes. Shape documents are read
//! through [`read_document`] with blank nodes enabled so that
//! `sh:property [ ... ]` blocks parse.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Graph, Iri, Literal, PrefixMap, Term, Triple};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TurtleError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Node {
    Iri(Iri),
    Blank(usize),
    Literal(Literal),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RawTriple {
    pub subject: Node,
    pub predicate: Iri,
    pub object: Node,
}

#[derive(Debug)]
pub(crate) struct Document {
    pub triples: Vec<RawTriple>,
}

/// Parse a graph document. Prefixes declared in the text extend `prefixes`.
pub fn parse_turtle(text: &str, prefixes: &PrefixMap) -> Result<Graph, TurtleError> {
    let doc = read_document(text, prefixes, false)?;
    let triples = doc.triples.into_iter().map(|raw| {
        let subject = match raw.subject {
            Node::Iri(i) => i,
            _ => unreachable!("subject is an IRI when blank nodes are disabled"),
        };
        let object = match raw.object {
            Node::Iri(i) => Term::Iri(i),
            Node::Literal(l) => Term::Literal(l),
            Node::Blank(_) => unreachable!("blank nodes are disabled"),
        };
        Triple { subject, predicate: raw.predicate, object }
    });
    Ok(Graph::from_triples(triples))
}

pub(crate) fn read_document(
    text: &str,
    prefixes: &PrefixMap,
    allow_blank_nodes: bool,
) -> Result<Document, TurtleError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        prefixes: prefixes.clone(),
        allow_blank_nodes,
        next_blank: 0,
        blank_labels: Vec::new(),
        triples: Vec::new(),
    };
    parser.document()?;
    Ok(Document { triples: parser.triples })
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    prefixes: PrefixMap,
    allow_blank_nodes: bool,
    next_blank: usize,
    blank_labels: Vec<(String, usize)>,
    triples: Vec<RawTriple>,
}

pub(crate) const LOCAL_ESCAPES: &str = "_~.-!$&'()*+,;=/?#@%";

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn starts_with_keyword_ci(&self, kw: &str) -> bool {
        kw.chars().enumerate().all(|(i, c)| self.peek_at(i).is_some_and(|p| p.eq_ignore_ascii_case(&c)))
            && self.peek_at(kw.len()).is_some_and(char::is_whitespace)
    }

    fn error(&self, message: impl Into<String>) -> TurtleError {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        TurtleError::Syntax { line, col, message: message.into() }
    }

    fn unexpected(&self, expected: &str) -> TurtleError {
        match self.peek() {
            Some(c) => self.error(format!("expected {expected}, found `{c}`")),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TurtleError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn document(&mut self) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with("@prefix") {
                self.pos += "@prefix".len();
                self.prefix_declaration()?;
                self.skip_ws();
                self.expect('.')?;
            } else if self.starts_with_keyword_ci("PREFIX") {
                self.pos += "PREFIX".len();
                self.prefix_declaration()?;
            } else if self.starts_with("@base") || self.starts_with_keyword_ci("BASE") {
                return Err(self.error("base declarations are not supported"));
            } else {
                self.statement()?;
            }
        }
    }

    fn prefix_declaration(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                label.push(c);
                self.pos += 1;
            } else {
                return Err(self.unexpected("a prefix label followed by `:`"));
            }
        }
        self.expect(':')?;
        self.skip_ws();
        let ns = self.iri_ref()?;
        self.prefixes.insert(label, ns.as_str());
        Ok(())
    }

    fn statement(&mut self) -> Result<(), TurtleError> {
        let subject = self.subject()?;
        self.skip_ws();
        let bare_blank_subject = matches!(subject, Node::Blank(_)) && self.peek() == Some('.');
        if !bare_blank_subject {
            self.predicate_object_list(&subject)?;
            self.skip_ws();
        }
        self.expect('.')?;
        Ok(())
    }

    fn subject(&mut self) -> Result<Node, TurtleError> {
        match self.peek() {
            Some('<') => Ok(Node::Iri(self.iri_ref()?)),
            Some('[') | Some('_') if self.peek() == Some('[') || self.peek_at(1) == Some(':') => self.blank_node(),
            Some('"') | Some('\'') => Err(self.error("a literal cannot be a subject")),
            Some('(') => Err(self.error("collections are not supported")),
            Some(_) => Ok(Node::Iri(self.prefixed_name()?)),
            None => Err(self.unexpected("a subject")),
        }
    }

    fn predicate_object_list(&mut self, subject: &Node) -> Result<(), TurtleError> {
        loop {
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.pos += 1;
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Iri, TurtleError> {
        self.skip_ws();
        if self.peek() == Some('a')
            && self.peek_at(1).is_none_or(|c| c.is_whitespace() || matches!(c, '<' | '"' | '[' | '_'))
        {
            self.pos += 1;
            return Ok(super::iri(vocab::RDF_TYPE));
        }
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some('[') | Some('"') | Some('\'') => Err(self.unexpected("a predicate")),
            Some(_) => self.prefixed_name(),
            None => Err(self.unexpected("a predicate")),
        }
    }

    fn object_list(&mut self, subject: &Node, predicate: &Iri) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            let object = self.object()?;
            self.triples.push(RawTriple { subject: subject.clone(), predicate: predicate.clone(), object });
            self.skip_ws();
            if self.peek() == Some(',') {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Node, TurtleError> {
        match self.peek() {
            Some('<') => Ok(Node::Iri(self.iri_ref()?)),
            Some('"') | Some('\'') => Ok(Node::Literal(self.quoted_literal()?)),
            Some('[') => self.blank_node(),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_node(),
            Some('(') => Err(self.error("collections are not supported")),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-') => Ok(Node::Literal(self.numeric_literal()?)),
            Some('.') if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                Ok(Node::Literal(self.numeric_literal()?))
            }
            Some(c) if c == '.' || c == ';' || c == ',' || c == ']' => Err(self.unexpected("an object")),
            Some(_) => {
                for keyword in ["true", "false"] {
                    if self.starts_with(keyword)
                        && self.peek_at(keyword.len()).is_none_or(|c| !(c.is_alphanumeric() || c == ':' || c == '_'))
                    {
                        self.pos += keyword.len();
                        return Ok(Node::Literal(Literal::typed(keyword, super::iri(vocab::XSD_BOOLEAN))));
                    }
                }
                Ok(Node::Iri(self.prefixed_name()?))
            }
            None => Err(self.unexpected("an object")),
        }
    }

    fn blank_node(&mut self) -> Result<Node, TurtleError> {
        if !self.allow_blank_nodes {
            return Err(self.error("blank nodes are not supported"));
        }
        if self.peek() == Some('_') {
            self.pos += 2;
            let mut label = String::new();
            while let Some(c) = self.peek() {
                if c.is_alphanumeric() || matches!(c, '_' | '-') {
                    label.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if label.is_empty() {
                return Err(self.unexpected("a blank node label"));
            }
            if let Some((_, id)) = self.blank_labels.iter().find(|(l, _)| *l == label) {
                return Ok(Node::Blank(*id));
            }
            let id = self.fresh_blank();
            self.blank_labels.push((label, id));
            return Ok(Node::Blank(id));
        }
        self.expect('[')?;
        let node = Node::Blank(self.fresh_blank());
        self.skip_ws();
        if self.peek() != Some(']') {
            self.predicate_object_list(&node)?;
            self.skip_ws();
        }
        self.expect(']')?;
        Ok(node)
    }

    fn fresh_blank(&mut self) -> usize {
        self.next_blank += 1;
        self.next_blank
    }

    fn iri_ref(&mut self) -> Result<Iri, TurtleError> {
        self.expect('<')?;
        let start = self.pos;
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') => {
                    self.pos -= 1;
                    return Err(self.error(format!("invalid character `{c}` in IRI")));
                }
                Some(c) => value.push(c),
                None => {
                    self.pos = start;
                    return Err(self.error("unterminated IRI"));
                }
            }
        }
        Iri::new(value).map_err(|e| self.error(e.to_string()))
    }

    fn prefixed_name(&mut self) -> Result<Iri, TurtleError> {
        let start = self.pos;
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                label.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.peek() != Some(':') {
            self.pos = start;
            return Err(self.unexpected("an IRI or prefixed name"));
        }
        self.pos += 1;
        let mut local = String::new();
        let mut trailing_raw_dot = false;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':') {
                local.push(c);
                self.pos += 1;
                trailing_raw_dot = false;
            } else if c == '.' {
                // A dot ends the name unless more name characters follow.
                match self.peek_at(1) {
                    Some(n) if n.is_alphanumeric() || matches!(n, '_' | '-' | ':' | '.' | '%' | '\\') => {
                        local.push(c);
                        self.pos += 1;
                        trailing_raw_dot = true;
                    }
                    _ => break,
                }
            } else if c == '%' {
                let hex: String = (1..3).filter_map(|i| self.peek_at(i)).collect();
                if hex.len() != 2 || !hex.chars().all(|h| h.is_ascii_hexdigit()) {
                    return Err(self.error("invalid percent escape in local name"));
                }
                local.push('%');
                local.push_str(&hex);
                self.pos += 3;
                trailing_raw_dot = false;
            } else if c == '\\' {
                match self.peek_at(1) {
                    Some(e) if LOCAL_ESCAPES.contains(e) => {
                        local.push(e);
                        self.pos += 2;
                        trailing_raw_dot = false;
                    }
                    _ => return Err(self.error("invalid escape in local name")),
                }
            } else {
                break;
            }
        }
        if trailing_raw_dot {
            return Err(self.error("local name cannot end with `.`"));
        }
        let expanded = self.prefixes.expand(&label, &local).ok_or(TurtleError::UnknownPrefix(label))?;
        Iri::new(expanded).map_err(|e| self.error(e.to_string()))
    }

    fn quoted_literal(&mut self) -> Result<Literal, TurtleError> {
        let quote = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.pos += 2;
        }
        let start = self.pos;
        let mut lexical = String::new();
        loop {
            let Some(c) = self.bump() else {
                self.pos = start;
                return Err(self.error("unterminated string literal"));
            };
            match c {
                c if c == quote && !long => break,
                c if c == quote && long && self.peek() == Some(quote) && self.peek_at(1) == Some(quote) => {
                    self.pos += 2;
                    break;
                }
                '\n' | '\r' if !long => {
                    self.pos -= 1;
                    return Err(self.error("newline in string literal"));
                }
                '\\' => lexical.push(self.string_escape()?),
                c => lexical.push(c),
            }
        }
        if self.peek() == Some('@') {
            self.pos += 1;
            let mut tag = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || (c == '-' && !tag.is_empty()) {
                    tag.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if tag.is_empty() || tag.ends_with('-') {
                return Err(self.error("invalid language tag"));
            }
            return Ok(Literal::lang(lexical, tag));
        }
        if self.starts_with("^^") {
            self.pos += 2;
            let datatype = if self.peek() == Some('<') { self.iri_ref()? } else { self.prefixed_name()? };
            return Ok(Literal::typed(lexical, datatype));
        }
        Ok(Literal::plain(lexical))
    }

    fn string_escape(&mut self) -> Result<char, TurtleError> {
        let c = self.bump().ok_or_else(|| self.error("unterminated escape"))?;
        Ok(match c {
            't' => '\t',
            'b' => '\u{8}',
            'n' => '\n',
            'r' => '\r',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            'u' | 'U' => {
                let width = if c == 'u' { 4 } else { 8 };
                let hex: String = (0..width).filter_map(|i| self.peek_at(i)).collect();
                let code = (hex.len() == width)
                    .then(|| u32::from_str_radix(&hex, 16).ok())
                    .flatten()
                    .and_then(char::from_u32)
                    .ok_or_else(|| self.error("invalid unicode escape"))?;
                self.pos += width;
                code
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("invalid escape `\\{other}`")));
            }
        })
    }

    fn numeric_literal(&mut self) -> Result<Literal, TurtleError> {
        let mut lexical = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            lexical.push(c);
            self.pos += 1;
        }
        let digits = |p: &mut Parser, out: &mut String| {
            let mut n = 0;
            while let Some(c) = p.peek().filter(char::is_ascii_digit) {
                out.push(c);
                p.pos += 1;
                n += 1;
            }
            n
        };
        let int_digits = digits(self, &mut lexical);
        let mut datatype = vocab::XSD_INTEGER;
        let mut frac_digits = 0;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            lexical.push('.');
            self.pos += 1;
            frac_digits = digits(self, &mut lexical);
            datatype = vocab::XSD_DECIMAL;
        }
        if int_digits + frac_digits == 0 {
            return Err(self.unexpected("a number"));
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            lexical.push(e);
            self.pos += 1;
            if let Some(s @ ('+' | '-')) = self.peek() {
                lexical.push(s);
                self.pos += 1;
            }
            if digits(self, &mut lexical) == 0 {
                return Err(self.unexpected("exponent digits"));
            }
            datatype = vocab::XSD_DOUBLE;
        }
        Ok(Literal::typed(lexical, super::iri(datatype)))
    }
}

/// Serialize `g` deterministically: prefix header, then one statement per
/// subject with predicates sorted by IRI and objects by lexical form.
pub fn serialize_turtle(g: &Graph, prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    for (label, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {label}: <{ns}> .");
    }
    if !g.is_empty() && !prefixes.is_empty() {
        out.push('\n');
    }
    out.push_str(&serialize_statements(g, prefixes));
    out
}

/// The statements of [`serialize_turtle`] without the prefix header; read
/// back with [`parse_turtle`] given the same prefix map.
pub fn serialize_statements(g: &Graph, prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    let mut current_subject: Option<&Iri> = None;
    let mut current_predicate: Option<&Iri> = None;
    for triple in g.iter() {
        if current_subject != Some(&triple.subject) {
            if current_subject.is_some() {
                out.push_str(" .\n");
            }
            write_iri(&mut out, &triple.subject, prefixes);
            out.push(' ');
            write_iri(&mut out, &triple.predicate, prefixes);
            current_subject = Some(&triple.subject);
            current_predicate = Some(&triple.predicate);
        } else if current_predicate != Some(&triple.predicate) {
            out.push_str(" ;\n    ");
            write_iri(&mut out, &triple.predicate, prefixes);
            current_predicate = Some(&triple.predicate);
        } else {
            out.push(',');
        }
        out.push(' ');
        write_term(&mut out, &triple.object, prefixes);
    }
    if current_subject.is_some() {
        out.push_str(" .\n");
    }
    out
}

pub(crate) fn write_iri(out: &mut String, iri: &Iri, prefixes: &PrefixMap) {
    match prefixes.compact(iri) {
        Some(curie) => out.push_str(&curie),
        None => {
            out.push('<');
            out.push_str(iri.as_str());
            out.push('>');
        }
    }
}

pub(crate) fn write_term(out: &mut String, term: &Term, prefixes: &PrefixMap) {
    match term {
        Term::Iri(i) => write_iri(out, i, prefixes),
        Term::Literal(l) => write_literal(out, l, prefixes),
    }
}

pub(crate) fn write_literal(out: &mut String, literal: &Literal, prefixes: &PrefixMap) {
    write_quoted(out, literal.lexical());
    if let Some(tag) = literal.language() {
        out.push('@');
        out.push_str(tag);
    } else if let Some(dt) = literal.datatype() {
        out.push_str("^^");
        write_iri(out, dt, prefixes);
    }
}

/// A short string literal body with `"`, `\\` and line breaks escaped.
pub(crate) fn write_quoted(out: &mut String, text: &str) {
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}
