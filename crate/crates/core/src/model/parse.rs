//! Text formats for networks and evidence.
//!
//! Network documents are sequences of statements:
//!
//! ```text
//! # comment
//! var A { a1 a2 }
//! var B { b1 b2 }
//! cpt A { 0.3 0.7 }
//! cpt B | A { 1 0  0 1 }
//! ```
//!
//! CPT entries are row-major over parent configurations (parents in the
//! listed order, last parent fastest) with the child state innermost. A
//! statement may wrap across lines inside its braces.
//!
//! Evidence documents hold one finding per line, either a hard finding
//! `A = "a1"` or a likelihood vector `A ~ (0.2, 1)`.

use std::collections::HashMap;

use thiserror::Error;

use super::{evidence::Evidence, Cpt, ModelError, Network, VarId, Variable};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {error}")]
    Invalid { line: usize, error: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {message}")]
    Evidence { line: usize, message: String },
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Invalid { line, .. } | ParseError::Evidence { line, .. } => {
                Some(*line)
            }
            ParseError::Model(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: &str = "{}|=~(),";

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !SYMBOLS.contains(c) && c != '#' && c != '"'
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if SYMBOLS.contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, column });
                i += 1;
            } else if c == '"' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(ParseError::Syntax { line, column, message: "unterminated string".into() });
                }
                out.push(Token { tok: Tok::Quoted(chars[start..j].iter().collect()), line, column });
                i = j + 1;
            } else {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), line, column });
            }
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Cursor {
    fn new(toks: Vec<Token>, text: &str) -> Self {
        let eof_line = text.lines().count().max(1);
        Cursor { toks, pos: 0, eof_line }
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        match self.toks.get(self.pos) {
            Some(t) => ParseError::Syntax { line: t.line, column: t.column, message: message.into() },
            None => ParseError::Syntax { line: self.eof_line, column: 1, message: message.into() },
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Word(w), line, .. }) => {
                let out = (w.clone(), *line);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(s), .. }) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(format!("expected `{c}`"))),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    /// Words up to the closing brace.
    fn braced_words(&mut self) -> Result<Vec<(String, usize, usize)>, ParseError> {
        self.sym('{')?;
        let mut out = Vec::new();
        loop {
            match self.next() {
                Some(Token { tok: Tok::Sym('}'), .. }) => return Ok(out),
                Some(Token { tok: Tok::Word(w), line, column }) => out.push((w, line, column)),
                Some(t) => {
                    return Err(ParseError::Syntax {
                        line: t.line,
                        column: t.column,
                        message: "unexpected token inside braces".into(),
                    })
                }
                None => return Err(self.error_here("missing `}`")),
            }
        }
    }
}

struct RawCpt {
    child: (String, usize),
    parents: Vec<(String, usize)>,
    values: Vec<f64>,
    line: usize,
}

/// Parses and validates a network document.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut cur = Cursor::new(lex(text)?, text);
    let mut variables: Vec<Variable> = Vec::new();
    let mut decl_line: HashMap<String, usize> = HashMap::new();
    let mut raw_cpts = Vec::new();

    while cur.peek().is_some() {
        let (kw, line) = cur.word("`var` or `cpt`")?;
        match kw.as_str() {
            "var" => {
                let (name, _) = cur.word("variable name")?;
                let states = cur.braced_words()?.into_iter().map(|(s, ..)| s).collect();
                if decl_line.insert(name.clone(), line).is_some() {
                    return Err(ParseError::Invalid { line, error: ModelError::DuplicateVariable(name) });
                }
                let v = Variable { name, states };
                if v.states.len() < 2 {
                    return Err(ParseError::Invalid { line, error: ModelError::TooFewStates(v.name) });
                }
                variables.push(v);
            }
            "cpt" => {
                let child = cur.word("child variable")?;
                let mut parents = Vec::new();
                if cur.at_sym('|') {
                    cur.sym('|')?;
                    while !cur.at_sym('{') {
                        parents.push(cur.word("parent variable or `{`")?);
                    }
                }
                let mut values = Vec::new();
                for (w, l, c) in cur.braced_words()? {
                    let x: f64 = w.parse().map_err(|_| ParseError::Syntax {
                        line: l,
                        column: c,
                        message: format!("`{w}` is not a number"),
                    })?;
                    values.push(x);
                }
                raw_cpts.push(RawCpt { child, parents, values, line });
            }
            other => {
                cur.pos -= 1;
                return Err(cur.error_here(format!("unknown statement `{other}`")));
            }
        }
    }

    let index: HashMap<&str, usize> = variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let resolve = |(name, line): &(String, usize)| {
        index
            .get(name.as_str())
            .map(|&i| VarId(i))
            .ok_or_else(|| ParseError::Invalid { line: *line, error: ModelError::UnknownVariable(name.clone()) })
    };
    let mut cpt_line: HashMap<String, usize> = HashMap::new();
    let mut cpts = Vec::with_capacity(raw_cpts.len());
    for raw in &raw_cpts {
        let child = resolve(&raw.child)?;
        let parents = raw.parents.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
        if cpt_line.insert(raw.child.0.clone(), raw.line).is_some() {
            return Err(ParseError::Invalid { line: raw.line, error: ModelError::DuplicateCpt(raw.child.0.clone()) });
        }
        cpts.push(Cpt { child, parents, table: raw.values.clone() });
    }

    Network::new(variables, cpts).map_err(|e| {
        let var = match &e {
            ModelError::DuplicateParent { var, .. }
            | ModelError::TableLength { var, .. }
            | ModelError::InvalidProbability { var, .. }
            | ModelError::RowSum { var, .. } => cpt_line.get(var),
            ModelError::MissingCpt(v) => decl_line.get(v),
            _ => None,
        };
        match var {
            Some(&line) => ParseError::Invalid { line, error: e },
            None => ParseError::Model(e),
        }
    })
}

/// Parses an evidence document against `net`.
pub fn parse_evidence(text: &str, net: &Network) -> Result<Evidence, ParseError> {
    let mut cur = Cursor::new(lex(text)?, text);
    let mut ev = Evidence::new();
    let mut seen = HashMap::new();
    while cur.peek().is_some() {
        let (name, line) = cur.word("variable name")?;
        let id = net
            .id_of(&name)
            .ok_or_else(|| ParseError::Evidence { line, message: format!("unknown variable `{name}`") })?;
        if seen.insert(id, line).is_some() {
            return Err(ParseError::Evidence { line, message: format!("duplicate finding for `{name}`") });
        }
        let var = net.variable(id);
        match cur.next() {
            Some(Token { tok: Tok::Sym('='), .. }) => {
                let label = match cur.next() {
                    Some(Token { tok: Tok::Quoted(s), .. }) => s,
                    _ => {
                        cur.pos -= 1;
                        return Err(cur.error_here("expected quoted state label"));
                    }
                };
                let state = var.state_index(&label).ok_or_else(|| ParseError::Evidence {
                    line,
                    message: format!("variable `{name}` has no state `{label}`"),
                })?;
                ev.hard(id, state, var.cardinality());
            }
            Some(Token { tok: Tok::Sym('~'), .. }) => {
                cur.sym('(')?;
                let mut weights = Vec::new();
                loop {
                    let (w, _) = cur.word("likelihood value")?;
                    let x: f64 =
                        w.parse().ok().filter(|x: &f64| x.is_finite() && *x >= 0.0).ok_or_else(|| {
                            ParseError::Evidence { line, message: format!("invalid likelihood `{w}`") }
                        })?;
                    weights.push(x);
                    if cur.at_sym(',') {
                        cur.sym(',')?;
                    } else {
                        break;
                    }
                }
                cur.sym(')')?;
                if weights.len() != var.cardinality() {
                    return Err(ParseError::Evidence {
                        line,
                        message: format!(
                            "likelihood for `{name}` has {} entries, expected {}",
                            weights.len(),
                            var.cardinality()
                        ),
                    });
                }
                if weights.iter().all(|&w| w == 0.0) {
                    return Err(ParseError::Evidence { line, message: format!("likelihood for `{name}` is all zero") });
                }
                ev.insert(id, weights);
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.error_here("expected `=` or `~`"));
            }
        }
    }
    Ok(ev)
}
