//! Lexer and parser for the protocol description language.
//!
//! A document is a sequence of lines. Header lines (`name`, `qubits`,
//! `param`) come first, followed by bracketed sections whose bodies are
//! instruction lines. `#` starts a comment. Explicit matrices may span
//! several lines; every other statement ends at a newline.

use std::collections::BTreeMap;

use crate::qcore::{CMatrix, GateKind, GateOp, StateError, C64};

use super::{Actor, ParseError, ProtocolError, ResultBit};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Equals,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (li, raw_line) in source.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let single = |tok: Tok| Token {
                tok,
                text: c.to_string(),
                line,
                column,
            };
            match c {
                '#' => break,
                ' ' | '\t' | '\r' => i += 1,
                '[' => {
                    out.push(single(Tok::LBracket));
                    i += 1;
                }
                ']' => {
                    out.push(single(Tok::RBracket));
                    i += 1;
                }
                '(' => {
                    out.push(single(Tok::LParen));
                    i += 1;
                }
                ')' => {
                    out.push(single(Tok::RParen));
                    i += 1;
                }
                ',' => {
                    out.push(single(Tok::Comma));
                    i += 1;
                }
                '=' => {
                    out.push(single(Tok::Equals));
                    i += 1;
                }
                '+' => {
                    out.push(single(Tok::Plus));
                    i += 1;
                }
                '*' => {
                    out.push(single(Tok::Star));
                    i += 1;
                }
                '/' => {
                    out.push(single(Tok::Slash));
                    i += 1;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    out.push(Token {
                        tok: Tok::Arrow,
                        text: "->".into(),
                        line,
                        column,
                    });
                    i += 2;
                }
                '-' => {
                    out.push(single(Tok::Minus));
                    i += 1;
                }
                c if c.is_ascii_digit()
                    || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                        let mut j = i + 1;
                        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                            j += 1;
                        }
                        if j < chars.len() && chars[j].is_ascii_digit() {
                            i = j;
                            while i < chars.len() && chars[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text: String = chars[start..i].iter().collect();
                    let value = text.parse::<f64>().map_err(|_| {
                        ParseError::new(line, column, format!("malformed number '{text}'"))
                    })?;
                    out.push(Token {
                        tok: Tok::Number(value),
                        text,
                        line,
                        column,
                    });
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    out.push(Token {
                        tok: Tok::Ident(text.clone()),
                        text,
                        line,
                        column,
                    });
                }
                other => {
                    return Err(ParseError::new(
                        line,
                        column,
                        format!("unexpected character '{other}'"),
                    ))
                }
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            text: "\n".into(),
            line,
            column: chars.len() + 1,
        });
    }
    let line = source.lines().count() + 1;
    out.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        line,
        column: 1,
    });
    Ok(out)
}

/// Label of a coin-toss outcome rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeLabel {
    Zero,
    One,
    Invalid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionKind {
    /// Alice's preparation; `Some(b)` for a bit commitment, `None` for coin tossing.
    PrepareAlice(Option<u8>),
    PrepareBob,
    Commit(Actor),
    Open(Actor),
    Verify(u8),
    Round(Actor),
    Outcome(Actor, OutcomeLabel),
    Invalid(Actor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Gate {
        op: GateOp,
        condition: Option<ResultBit>,
        line: usize,
    },
    Measure {
        qubits: Vec<usize>,
        id: String,
        line: usize,
    },
    /// Computational-basis patterns on `qubits`, each as an index with the
    /// first listed qubit most significant.
    Expect {
        qubits: Vec<usize>,
        patterns: Vec<usize>,
        line: usize,
    },
    Projector {
        qubits: Vec<usize>,
        matrix: CMatrix,
        line: usize,
    },
}

impl Statement {
    pub fn line(&self) -> usize {
        match self {
            Statement::Gate { line, .. }
            | Statement::Measure { line, .. }
            | Statement::Expect { line, .. }
            | Statement::Projector { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: SectionKind,
    pub repeat: bool,
    pub line: usize,
    pub statements: Vec<Statement>,
}

/// Register sizes declared by the `qubits` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Sizes {
    pub alice: usize,
    pub bob: usize,
    pub channel: usize,
}

impl Sizes {
    /// Document name of register index `q`, such as `b0`.
    pub fn label(&self, q: usize) -> String {
        if q < self.alice {
            format!("a{q}")
        } else if q < self.alice + self.bob {
            format!("b{}", q - self.alice)
        } else if q < self.total() {
            format!("c{}", q - self.alice - self.bob)
        } else {
            format!("ancilla {q}")
        }
    }

    pub fn total(&self) -> usize {
        self.alice + self.bob + self.channel
    }
}

/// A parsed document with parameters already substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub name: String,
    pub sizes: Sizes,
    pub params: BTreeMap<String, f64>,
    pub sections: Vec<Section>,
}

/// Parses `source`, replacing declared parameter defaults by `overrides`.
/// Overriding a parameter the document does not declare is an error.
pub fn parse_document(
    source: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<Document, ProtocolError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        source_lines: source.lines().collect(),
        overrides,
        params: BTreeMap::new(),
        sizes: None,
    };
    let doc = parser.document()?;
    if let Some(unknown) = overrides.keys().find(|k| !doc.params.contains_key(*k)) {
        return Err(ProtocolError::Validation(format!(
            "document declares no parameter '{unknown}'"
        )));
    }
    Ok(doc)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    source_lines: Vec<&'a str>,
    overrides: &'a BTreeMap<String, f64>,
    params: BTreeMap<String, f64>,
    sizes: Option<Sizes>,
}

const KEYWORDS: &[&str] = &[
    "name",
    "qubits",
    "param",
    "measure",
    "expect",
    "projector",
    "raw",
    "if",
    "in",
    "pi",
];

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, tok: &Token, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(tok.line, tok.column, message))
    }

    fn describe(tok: &Token) -> String {
        match tok.tok {
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            _ => format!("'{}'", tok.text),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            self.err(&t, format!("expected {what}, found {}", Self::describe(&t)))
        }
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => self.err(
                &t,
                format!("expected end of line, found {}", Self::describe(&t)),
            ),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => self.err(&t, format!("expected {what}, found {}", Self::describe(&t))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) if v.fract() == 0.0 && v >= 0.0 && !t.text.contains(['.', 'e', 'E']) => {
                Ok(v as usize)
            }
            _ => self.err(&t, format!("expected {what}, found {}", Self::describe(&t))),
        }
    }

    fn document(&mut self) -> Result<Document, ParseError> {
        let mut name = None;
        let mut sections: Vec<Section> = Vec::new();
        loop {
            self.skip_newlines();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::LBracket => {
                    if self.sizes.is_none() {
                        return self.err(&t, "the 'qubits' line must precede the first section");
                    }
                    let section = self.section()?;
                    sections.push(section);
                }
                Tok::Ident(_) if !sections.is_empty() => {
                    let stmt = self.statement()?;
                    sections.last_mut().expect("nonempty").statements.push(stmt);
                }
                Tok::Ident(word) if word == "name" => {
                    if name.is_some() {
                        return self.err(&t, "duplicate 'name' line");
                    }
                    let line_text = self.source_lines[t.line - 1];
                    let after = &line_text[t.column - 1 + 4..];
                    let value = after.split('#').next().unwrap_or("").trim().to_string();
                    if value.is_empty() {
                        return self.err(&t, "empty protocol name");
                    }
                    while !matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
                        self.next();
                    }
                    name = Some(value);
                }
                Tok::Ident(word) if word == "qubits" => self.qubits_line()?,
                Tok::Ident(word) if word == "param" => self.param_line()?,
                _ => {
                    return self.err(
                        &t,
                        format!(
                            "expected a header line or section, found {}",
                            Self::describe(&t)
                        ),
                    )
                }
            }
        }
        let Some(sizes) = self.sizes else {
            let t = self.peek().clone();
            return self.err(&t, "missing 'qubits' line");
        };
        let Some(name) = name else {
            return Err(ParseError::new(1, 1, "missing 'name' line"));
        };
        Ok(Document {
            name,
            sizes,
            params: self.params.clone(),
            sections,
        })
    }

    fn qubits_line(&mut self) -> Result<(), ParseError> {
        let kw = self.next();
        if self.sizes.is_some() {
            return self.err(&kw, "duplicate 'qubits' line");
        }
        let mut sizes = Sizes::default();
        let mut seen = [false; 3];
        while !matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
            let (who, t) = self.ident("'alice', 'bob' or 'channel'")?;
            let slot = match who.as_str() {
                "alice" => 0,
                "bob" => 1,
                "channel" => 2,
                _ => return self.err(&t, format!("unknown register '{who}'")),
            };
            if seen[slot] {
                return self.err(&t, format!("register '{who}' declared twice"));
            }
            seen[slot] = true;
            let n = self.count("a qubit count")?;
            match slot {
                0 => sizes.alice = n,
                1 => sizes.bob = n,
                _ => sizes.channel = n,
            }
        }
        if sizes.total() == 0 {
            return self.err(&kw, "protocol declares no qubits");
        }
        if sizes.total() > crate::qcore::MAX_QUBITS {
            return self.err(
                &kw,
                format!(
                    "{} qubits exceed the {}-qubit register cap",
                    sizes.total(),
                    crate::qcore::MAX_QUBITS
                ),
            );
        }
        self.sizes = Some(sizes);
        self.end_of_line()
    }

    fn param_line(&mut self) -> Result<(), ParseError> {
        self.next();
        let (name, t) = self.ident("a parameter name")?;
        if KEYWORDS.contains(&name.as_str())
            || FUNCTIONS.contains(&name.as_str())
            || qubit_ref_shape(&name)
        {
            return self.err(&t, format!("'{name}' cannot be used as a parameter name"));
        }
        if self.params.contains_key(&name) {
            return self.err(&t, format!("parameter '{name}' declared twice"));
        }
        let default = self.expr()?;
        let value = self.overrides.get(&name).copied().unwrap_or(default);
        if !value.is_finite() {
            return self.err(&t, format!("parameter '{name}' is not finite"));
        }
        self.params.insert(name, value);
        self.end_of_line()
    }

    fn actor(&mut self) -> Result<Actor, ParseError> {
        let (who, t) = self.ident("'alice' or 'bob'")?;
        match who.as_str() {
            "alice" => Ok(Actor::Alice),
            "bob" => Ok(Actor::Bob),
            _ => self.err(&t, format!("expected 'alice' or 'bob', found '{who}'")),
        }
    }

    fn bit_label(&mut self) -> Result<u8, ParseError> {
        let t = self.next();
        match (&t.tok, t.text.as_str()) {
            (Tok::Number(_), "0") => Ok(0),
            (Tok::Number(_), "1") => Ok(1),
            _ => self.err(&t, format!("expected 0 or 1, found {}", Self::describe(&t))),
        }
    }

    fn section(&mut self) -> Result<Section, ParseError> {
        let open = self.next();
        let (word, t) = self.ident("a section name")?;
        let kind = match word.as_str() {
            "prepare" => match self.actor()? {
                Actor::Alice => {
                    if self.peek().tok == Tok::RBracket {
                        SectionKind::PrepareAlice(None)
                    } else {
                        SectionKind::PrepareAlice(Some(self.bit_label()?))
                    }
                }
                Actor::Bob => SectionKind::PrepareBob,
            },
            "commit" => SectionKind::Commit(self.actor()?),
            "open" => SectionKind::Open(self.actor()?),
            "round" => SectionKind::Round(self.actor()?),
            "verify" => SectionKind::Verify(self.bit_label()?),
            "outcome" => {
                let actor = self.actor()?;
                let label = match &self.peek().tok {
                    Tok::Ident(s) if s == "invalid" => {
                        self.next();
                        OutcomeLabel::Invalid
                    }
                    _ => match self.bit_label()? {
                        0 => OutcomeLabel::Zero,
                        _ => OutcomeLabel::One,
                    },
                };
                SectionKind::Outcome(actor, label)
            }
            "invalid" => SectionKind::Invalid(self.actor()?),
            _ => return self.err(&t, format!("unknown section '{word}'")),
        };
        let mut repeat = false;
        if let Tok::Ident(s) = &self.peek().tok {
            if s == "repeat" && matches!(kind, SectionKind::Commit(_) | SectionKind::Open(_)) {
                self.next();
                repeat = true;
            }
        }
        self.expect(Tok::RBracket, "']'")?;
        self.end_of_line()?;
        Ok(Section {
            kind,
            repeat,
            line: open.line,
            statements: Vec::new(),
        })
    }

    fn qubit(&self, t: &Token) -> Result<usize, ParseError> {
        let sizes = self.sizes.expect("sizes parsed before sections");
        let Tok::Ident(s) = &t.tok else {
            return self.err(t, format!("expected a qubit, found {}", Self::describe(t)));
        };
        if !qubit_ref_shape(s) {
            return self.err(
                t,
                format!("expected a qubit such as a0, b1 or c0, found '{s}'"),
            );
        }
        let index: usize = s[1..]
            .parse()
            .map_err(|_| ParseError::new(t.line, t.column, format!("bad qubit index in '{s}'")))?;
        let (offset, size, register) = match &s[..1] {
            "a" => (0, sizes.alice, "alice"),
            "b" => (sizes.alice, sizes.bob, "bob"),
            _ => (sizes.alice + sizes.bob, sizes.channel, "channel"),
        };
        if index >= size {
            return self.err(
                t,
                format!("qubit '{s}' is out of range: {register} has {size} qubit(s)"),
            );
        }
        Ok(offset + index)
    }

    /// Qubit references up to (not including) a token that is not one.
    fn qubit_list(&mut self, min: usize) -> Result<Vec<usize>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Ident(s) = &self.peek().tok {
            if !qubit_ref_shape(s) {
                break;
            }
            let t = self.next();
            let q = self.qubit(&t)?;
            if out.contains(&q) {
                return self.err(&t, format!("qubit '{}' listed twice", t.text));
            }
            out.push(q);
        }
        if out.len() < min {
            let t = self.peek().clone();
            return self.err(
                &t,
                format!("expected a qubit, found {}", Self::describe(&t)),
            );
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let (word, t) = self.ident("an instruction")?;
        let stmt = match word.as_str() {
            "measure" => {
                let qubits = self.qubit_list(1)?;
                self.expect(Tok::Arrow, "'->'")?;
                let (id, idt) = self.ident("a result name")?;
                if KEYWORDS.contains(&id.as_str()) || qubit_ref_shape(&id) {
                    return self.err(&idt, format!("'{id}' cannot be used as a result name"));
                }
                Statement::Measure {
                    qubits,
                    id,
                    line: t.line,
                }
            }
            "expect" => {
                let qubits = self.qubit_list(1)?;
                let sep = self.next();
                let many = match (&sep.tok, sep.text.as_str()) {
                    (Tok::Equals, _) => false,
                    (Tok::Ident(_), "in") => true,
                    _ => {
                        return self.err(
                            &sep,
                            format!("expected '=' or 'in', found {}", Self::describe(&sep)),
                        )
                    }
                };
                let mut patterns = Vec::new();
                loop {
                    let b = self.peek().clone();
                    if !matches!(b.tok, Tok::Number(_)) {
                        break;
                    }
                    self.next();
                    if b.text.len() != qubits.len() || !b.text.chars().all(|c| c == '0' || c == '1')
                    {
                        return self.err(
                            &b,
                            format!(
                                "expected {} bit(s) of 0/1, found '{}'",
                                qubits.len(),
                                b.text
                            ),
                        );
                    }
                    let value = usize::from_str_radix(&b.text, 2).expect("checked binary");
                    if patterns.contains(&value) {
                        return self.err(&b, format!("pattern '{}' listed twice", b.text));
                    }
                    patterns.push(value);
                    if !many {
                        break;
                    }
                }
                if patterns.is_empty() {
                    let b = self.peek().clone();
                    return self.err(
                        &b,
                        format!("expected a bit pattern, found {}", Self::describe(&b)),
                    );
                }
                Statement::Expect {
                    qubits,
                    patterns,
                    line: t.line,
                }
            }
            "projector" => {
                let qubits = self.qubit_list(1)?;
                let matrix = self.matrix(qubits.len())?;
                Statement::Projector {
                    qubits,
                    matrix,
                    line: t.line,
                }
            }
            _ => {
                let (op, condition) = self.gate(&word, &t)?;
                Statement::Gate {
                    op,
                    condition,
                    line: t.line,
                }
            }
        };
        self.end_of_line()?;
        Ok(stmt)
    }

    fn gate(&mut self, word: &str, t: &Token) -> Result<(GateOp, Option<ResultBit>), ParseError> {
        let needs_angle = matches!(word, "ry" | "rz");
        let angle = if self.peek().tok == Tok::LParen {
            let p = self.next();
            if !needs_angle {
                return self.err(&p, format!("gate '{word}' takes no parameter"));
            }
            let v = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            Some(v)
        } else {
            None
        };
        let kind = match (word, angle) {
            ("h", _) => GateKind::H,
            ("x", _) => GateKind::X,
            ("y", _) => GateKind::Y,
            ("z", _) => GateKind::Z,
            ("s", _) => GateKind::S,
            ("t", _) => GateKind::T,
            ("cx", _) => GateKind::Cx,
            ("cz", _) => GateKind::Cz,
            ("swap", _) => GateKind::Swap,
            ("ry", Some(a)) => GateKind::Ry(a),
            ("rz", Some(a)) => GateKind::Rz(a),
            ("ry" | "rz", None) => {
                return self.err(
                    t,
                    format!("gate '{word}' needs an angle, as in {word}(pi/2)"),
                )
            }
            ("raw", _) => GateKind::Raw(CMatrix::zeros(0, 0)),
            _ => return self.err(t, format!("unknown gate '{word}'")),
        };
        let targets = self.qubit_list(1)?;
        let kind = if word == "raw" {
            GateKind::Raw(self.matrix(targets.len())?)
        } else {
            kind
        };
        let op = GateOp::new(kind, targets)
            .map_err(|e| ParseError::new(t.line, t.column, gate_error(word, e)))?;
        let mut condition = None;
        if let Tok::Ident(s) = &self.peek().tok {
            if s == "if" {
                self.next();
                let (id, _) = self.ident("a result name")?;
                let mut bit = 0;
                if self.peek().tok == Tok::LBracket {
                    self.next();
                    bit = self.count("a bit index")?;
                    self.expect(Tok::RBracket, "']'")?;
                }
                condition = Some(ResultBit { id, bit });
            }
        }
        Ok((op, condition))
    }

    /// `[e, e, …]` with `4^k` entries in row-major order. An entry is an
    /// expression (real) or a pair `[re, im]`. Line breaks are allowed inside.
    fn matrix(&mut self, qubits: usize) -> Result<CMatrix, ParseError> {
        let open = self.expect(Tok::LBracket, "'[' starting a matrix")?;
        let mut entries = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::RBracket {
                self.next();
                break;
            }
            if !entries.is_empty() {
                self.expect(Tok::Comma, "',' between matrix entries")?;
                self.skip_newlines();
            }
            if self.peek().tok == Tok::LBracket {
                self.next();
                self.skip_newlines();
                let re = self.expr()?;
                self.skip_newlines();
                self.expect(Tok::Comma, "',' between real and imaginary parts")?;
                self.skip_newlines();
                let im = self.expr()?;
                self.skip_newlines();
                self.expect(Tok::RBracket, "']'")?;
                entries.push(C64::new(re, im));
            } else {
                entries.push(C64::new(self.expr()?, 0.0));
            }
        }
        let dim = 1usize << qubits;
        if entries.len() != dim * dim {
            return self.err(
                &open,
                format!(
                    "matrix on {qubits} qubit(s) needs {} entries, found {}",
                    dim * dim,
                    entries.len()
                ),
            );
        }
        Ok(CMatrix::from_row_slice(dim, dim, &entries))
    }

    fn expr(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc += self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    acc *= self.unary()?;
                }
                Tok::Slash => {
                    let t = self.next();
                    let d = self.unary()?;
                    if d == 0.0 {
                        return self.err(&t, "division by zero");
                    }
                    acc /= d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(-self.unary()?);
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<f64, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Number(v) => Ok(*v),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(v)
            }
            Tok::Ident(s) if s == "pi" => Ok(std::f64::consts::PI),
            Tok::Ident(s) if FUNCTIONS.contains(&s.as_str()) => {
                self.expect(Tok::LParen, "'('")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let v = match s.as_str() {
                    "sqrt" if arg < 0.0 => return self.err(&t, "square root of a negative number"),
                    "sqrt" => arg.sqrt(),
                    "sin" => arg.sin(),
                    _ => arg.cos(),
                };
                Ok(v)
            }
            Tok::Ident(s) => match self.params.get(s) {
                Some(v) => Ok(*v),
                None => self.err(&t, format!("unknown parameter '{s}'")),
            },
            _ => self.err(
                &t,
                format!("expected an expression, found {}", Self::describe(&t)),
            ),
        }
    }
}

const FUNCTIONS: &[&str] = &["sqrt", "sin", "cos"];

fn qubit_ref_shape(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a' | 'b' | 'c'))
        && s.len() > 1
        && chars.all(|c| c.is_ascii_digit())
}

fn gate_error(word: &str, e: StateError) -> String {
    match e {
        StateError::NotUnitary(dev) => {
            format!("matrix for '{word}' is not unitary (deviation {dev:.3e})")
        }
        other => other.to_string(),
    }
}
