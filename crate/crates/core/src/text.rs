//! Plain-text proof documents.
//!
//! ```text
//! gke-1
//! ; comments run to the end of the line
//! (discharge x "F p ^f |- F p"
//!   (rule ev-l "F p ^f |- F p"
//!     (rule weak-r "<> F p ^f |- F p" ...)
//!     ...))
//! ```
//!
//! Nodes are `(rule NAME "SEQUENT" CHILD...)`, `(ax "SEQUENT")`,
//! `(discharge TOKEN "SEQUENT" CHILD)` and `(leaf TOKEN "SEQUENT")`.

use std::fmt::Write as _;

use crate::proof::{ProofTree, Rule, Token};
use crate::sequent::parse_sequent;

pub const HEADER: &str = "gke-1";
pub const MAX_NESTING: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct DocumentError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Word(String),
    Str(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> DocumentError {
        let before = &self.src[..at.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        DocumentError { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, DocumentError> {
        let bytes = self.src.as_bytes();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos] == b';' {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else { return Ok(None) };
        let tok = match b {
            b'(' => {
                self.pos += 1;
                Tok::Open
            }
            b')' => {
                self.pos += 1;
                Tok::Close
            }
            b'"' => {
                self.pos += 1;
                let mut s = String::new();
                let mut chars = self.src[self.pos..].char_indices();
                loop {
                    let Some((i, c)) = chars.next() else {
                        return Err(self.err(start, "unterminated string"));
                    };
                    match c {
                        '"' => {
                            self.pos += i + 1;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => s.push(e),
                            _ => return Err(self.err(self.pos + i, "bad escape in string")),
                        },
                        c => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            _ => {
                let rest = &self.src[self.pos..];
                let len = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';')
                    .unwrap_or(rest.len());
                self.pos += len;
                Tok::Word(rest[..len].to_string())
            }
        };
        Ok(Some((start, tok)))
    }
}

struct Frame {
    at: usize,
    rule: Rule,
    sequent: crate::sequent::Sequent,
    premises: Vec<ProofTree>,
}

/// Parses a proof document (header line followed by one proof).
pub fn parse_proof_document(src: &str) -> Result<ProofTree, DocumentError> {
    let mut lx = Lexer { src, pos: 0 };
    match lx.next()? {
        Some((_, Tok::Word(w))) if w == HEADER => {}
        Some((at, _)) => return Err(lx.err(at, format!("expected header `{HEADER}`"))),
        None => return Err(lx.err(0, "empty document")),
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut result: Option<ProofTree> = None;
    loop {
        let Some((at, tok)) = lx.next()? else {
            if stack.is_empty() {
                break;
            }
            return Err(lx.err(src.len(), "unexpected end of document"));
        };
        match tok {
            Tok::Open => {
                if result.is_some() && stack.is_empty() {
                    return Err(lx.err(at, "trailing content after the proof"));
                }
                if stack.len() >= MAX_NESTING {
                    return Err(lx.err(at, "proof nested too deeply"));
                }
                let head = match lx.next()? {
                    Some((_, Tok::Word(w))) => w,
                    _ => return Err(lx.err(at, "expected a node kind after '('")),
                };
                let mut word = |what: &str| -> Result<String, DocumentError> {
                    match lx.next()? {
                        Some((_, Tok::Word(w))) => Ok(w),
                        Some((p, _)) => Err(lx.err(p, format!("expected {what}"))),
                        None => Err(lx.err(src.len(), format!("expected {what}"))),
                    }
                };
                let rule = match head.as_str() {
                    "rule" => {
                        let name = word("a rule name")?;
                        match Rule::from_name(&name) {
                            Some(Rule::Ax) | None => return Err(lx.err(at, format!("unknown rule `{name}`"))),
                            Some(r) => r,
                        }
                    }
                    "ax" => Rule::Ax,
                    "discharge" => Rule::Discharge(Token(word("a token")?)),
                    "leaf" => Rule::Repeat(Token(word("a token")?)),
                    other => return Err(lx.err(at, format!("unknown node kind `{other}`"))),
                };
                if let Rule::Discharge(Token(t)) | Rule::Repeat(Token(t)) = &rule {
                    if !t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                        return Err(lx.err(at, format!("invalid token `{t}`")));
                    }
                }
                let (sat, text) = match lx.next()? {
                    Some((p, Tok::Str(s))) => (p, s),
                    Some((p, _)) => return Err(lx.err(p, "expected a quoted sequent")),
                    None => return Err(lx.err(src.len(), "expected a quoted sequent")),
                };
                let sequent = parse_sequent(&text).map_err(|e| {
                    let mut de = lx.err(sat + 1, format!("in sequent: {}", e.msg));
                    de.col += e.pos;
                    de
                })?;
                stack.push(Frame { at, rule, sequent, premises: vec![] });
            }
            Tok::Close => {
                let Some(f) = stack.pop() else { return Err(lx.err(at, "unbalanced ')'")) };
                if f.premises.len() != f.rule.arity() {
                    return Err(lx.err(
                        f.at,
                        format!("{} node needs {} children, found {}", f.rule.name(), f.rule.arity(), f.premises.len()),
                    ));
                }
                let t = ProofTree::new(f.sequent, f.rule, f.premises);
                match stack.last_mut() {
                    Some(parent) => parent.premises.push(t),
                    None => result = Some(t),
                }
            }
            Tok::Word(w) => return Err(lx.err(at, format!("unexpected `{w}`"))),
            Tok::Str(_) => return Err(lx.err(at, "unexpected string")),
        }
    }
    result.ok_or_else(|| lx.err(src.len(), "document contains no proof"))
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn print_node(t: &ProofTree, indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
    let seq = quote(&t.sequent.to_string());
    match &t.rule {
        Rule::Ax => write!(out, "(ax {seq}").unwrap(),
        Rule::Discharge(tok) => write!(out, "(discharge {tok} {seq}").unwrap(),
        Rule::Repeat(tok) => write!(out, "(leaf {tok} {seq}").unwrap(),
        r => write!(out, "(rule {} {seq}", r.name()).unwrap(),
    }
    for p in &t.premises {
        out.push('\n');
        print_node(p, indent + 1, out);
    }
    out.push(')');
}

/// Proof without the header line.
pub fn print_proof(t: &ProofTree) -> String {
    let mut out = String::new();
    print_node(t, 0, &mut out);
    out
}

pub fn print_proof_document(t: &ProofTree) -> String {
    format!("{HEADER}\n{}\n", print_proof(t))
}
