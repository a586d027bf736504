//! Formulas of modal logic with the eventually operator.
//!
//! The kernel only knows five connectives: atoms, negation, conjunction,
//! diamond and `F` (eventually). Disjunction, implication and box are
//! accepted by the parser and rewritten on the spot.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Arc<str>),
    Neg(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Dia(Arc<Formula>),
    Ev(Arc<Formula>),
}

/// Nesting depth of `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Rank(pub u32);

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    name != "F" && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Formula {
    /// Panics on names the printer could not round-trip (see [`is_valid_atom_name`]).
    pub fn atom(name: &str) -> Formula {
        assert!(is_valid_atom_name(name), "invalid proposition name {name:?}");
        Formula::Atom(Arc::from(name))
    }

    pub fn neg(self) -> Formula {
        Formula::Neg(Arc::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Arc::new(self), Arc::new(other))
    }

    pub fn dia(self) -> Formula {
        Formula::Dia(Arc::new(self))
    }

    pub fn ev(self) -> Formula {
        Formula::Ev(Arc::new(self))
    }

    pub fn or(self, other: Formula) -> Formula {
        self.neg().and(other.neg()).neg()
    }

    pub fn implies(self, other: Formula) -> Formula {
        self.and(other.neg()).neg()
    }

    pub fn boxed(self) -> Formula {
        self.neg().dia().neg()
    }

    pub fn as_ev(&self) -> Option<&Formula> {
        match self {
            Formula::Ev(inner) => Some(inner),
            _ => None,
        }
    }

    pub fn as_dia(&self) -> Option<&Formula> {
        match self {
            Formula::Dia(inner) => Some(inner),
            _ => None,
        }
    }

    pub fn is_ev(&self) -> bool {
        matches!(self, Formula::Ev(_))
    }

    /// `Fφ` or `◇Fφ`: the only shapes allowed to carry focus.
    pub fn is_focusable(&self) -> bool {
        match self {
            Formula::Ev(_) => true,
            Formula::Dia(inner) => inner.is_ev(),
            _ => false,
        }
    }

    pub fn rank(&self) -> Rank {
        fn go(f: &Formula) -> u32 {
            match f {
                Formula::Atom(_) => 0,
                Formula::Neg(a) | Formula::Dia(a) => go(a),
                Formula::And(a, b) => go(a).max(go(b)),
                Formula::Ev(a) => 1 + go(a),
            }
        }
        Rank(go(self))
    }

    /// Number of symbols.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Neg(a) | Formula::Dia(a) | Formula::Ev(a) => 1 + a.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn direct_subformulas(&self) -> Vec<Formula> {
        match self {
            Formula::Atom(_) => vec![],
            Formula::Neg(a) | Formula::Dia(a) | Formula::Ev(a) => vec![(**a).clone()],
            Formula::And(a, b) => vec![(**a).clone(), (**b).clone()],
        }
    }

    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            if out.insert(f.clone()) {
                stack.extend(f.direct_subformulas());
            }
        }
        out
    }

    pub fn atoms(&self) -> BTreeSet<Arc<str>> {
        self.subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Atom(name) => Some(name),
                _ => None,
            })
            .collect()
    }
}

/// One step of the trace relation: direct subformulas, plus `◇Fχ` for `Fχ`.
pub fn trace_step(f: &Formula) -> BTreeSet<Formula> {
    let mut out: BTreeSet<Formula> = f.direct_subformulas().into_iter().collect();
    if f.is_ev() {
        out.insert(f.clone().dia());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureSet {
    pub formulas: BTreeSet<Formula>,
}

impl ClosureSet {
    pub fn size(&self) -> usize {
        self.formulas.len()
    }
}

/// Least superset of `gamma ∪ delta` closed under [`trace_step`].
pub fn closure<'a>(
    gamma: impl IntoIterator<Item = &'a Formula>,
    delta: impl IntoIterator<Item = &'a Formula>,
) -> ClosureSet {
    let mut formulas = BTreeSet::new();
    let mut work: Vec<Formula> = gamma.into_iter().chain(delta).cloned().collect();
    while let Some(f) = work.pop() {
        if formulas.contains(&f) {
            continue;
        }
        work.extend(trace_step(&f).into_iter().filter(|g| !formulas.contains(g)));
        formulas.insert(f);
    }
    ClosureSet { formulas }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(name) => write!(f, "{name}"),
            Formula::Neg(a) => write!(f, "~{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Dia(a) => write!(f, "<> {a}"),
            Formula::Ev(a) => write!(f, "F {a}"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct SyntaxError {
    pub pos: usize,
    pub msg: String,
}

impl SyntaxError {
    pub(crate) fn new(pos: usize, msg: impl Into<String>) -> Self {
        SyntaxError { pos, msg: msg.into() }
    }

    pub(crate) fn shifted(mut self, by: usize) -> Self {
        self.pos += by;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Diamond,
    Box,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => {
                i += 1;
                Tok::Not
            }
            b'&' => {
                i += 1;
                Tok::And
            }
            b'|' => {
                i += 1;
                Tok::Or
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Implies
            }
            b'<' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Diamond
            }
            b'[' if bytes.get(i + 1) == Some(&b']') => {
                i += 2;
                Tok::Box
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError::new(i, format!("unexpected character {ch:?}")));
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        tok
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn formula(&mut self, depth: usize) -> Result<Formula, SyntaxError> {
        if depth > 512 {
            return Err(SyntaxError::new(self.pos(), "formula nested too deeply"));
        }
        let pos = self.pos();
        match self.next() {
            Some(Tok::Ident(name)) if name == "F" => Ok(self.formula(depth + 1)?.ev()),
            Some(Tok::Ident(name)) => Ok(Formula::Atom(Arc::from(name.as_str()))),
            Some(Tok::Not) => Ok(self.formula(depth + 1)?.neg()),
            Some(Tok::Diamond) => Ok(self.formula(depth + 1)?.dia()),
            Some(Tok::Box) => Ok(self.formula(depth + 1)?.boxed()),
            Some(Tok::LParen) => {
                let left = self.formula(depth + 1)?;
                let op_pos = self.pos();
                let result = match self.next() {
                    Some(Tok::RParen) => return Ok(left),
                    Some(Tok::And) => left.and(self.formula(depth + 1)?),
                    Some(Tok::Or) => left.or(self.formula(depth + 1)?),
                    Some(Tok::Implies) => left.implies(self.formula(depth + 1)?),
                    _ => return Err(SyntaxError::new(op_pos, "expected '&', '|', '->' or ')'")),
                };
                let close = self.pos();
                match self.next() {
                    Some(Tok::RParen) => Ok(result),
                    _ => Err(SyntaxError::new(close, "expected ')'")),
                }
            }
            Some(_) => Err(SyntaxError::new(pos, "expected a formula")),
            None => Err(SyntaxError::new(pos, "unexpected end of input")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0, end: text.len() };
    let f = p.formula(0)?;
    if p.peek().is_some() {
        return Err(SyntaxError::new(p.pos(), "trailing input after formula"));
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parses_examples() {
        assert_eq!(f("F <> p"), p().dia().ev());
        assert_eq!(f("(p & ~q)"), p().and(Formula::atom("q").neg()));
        assert_eq!(f("[] p"), p().neg().dia().neg());
        assert_eq!(f("(p | q)"), p().neg().and(Formula::atom("q").neg()).neg());
        assert_eq!(f("(p -> q)"), p().and(Formula::atom("q").neg()).neg());
        assert_eq!(f("Fp"), Formula::atom("Fp"));
        assert_eq!(f("  F\tF  p "), p().ev().ev());
    }

    #[test]
    fn prints_examples() {
        assert_eq!(p().dia().ev().to_string(), "F <> p");
        assert_eq!(p().to_string(), "p");
        assert_eq!(p().and(p()).to_string(), "(p & p)");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_formula("(p & q").unwrap_err();
        assert_eq!(err.pos, 6);
        let err = parse_formula("p q").unwrap_err();
        assert_eq!(err.pos, 2);
        assert!(parse_formula("").is_err());
        assert!(parse_formula("F").is_err());
        assert_eq!(parse_formula("p $").unwrap_err().pos, 2);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(f("F (<> F p & F ~<> F p)").rank(), Rank(3));
        assert_eq!(p().rank(), Rank(0));
        assert_eq!(f("F <> p").rank(), Rank(1));
    }

    #[test]
    fn trace_step_examples() {
        assert_eq!(trace_step(&f("F p")), [p(), f("<> F p")].into_iter().collect());
        assert_eq!(trace_step(&f("<> F p")), [f("F p")].into_iter().collect());
        assert!(trace_step(&p()).is_empty());
    }

    /// Independent saturation: iterate the step relation over the whole set
    /// until the set stops growing.
    fn saturate(seed: &[Formula]) -> BTreeSet<Formula> {
        let mut set: BTreeSet<Formula> = seed.iter().cloned().collect();
        loop {
            let next: BTreeSet<Formula> =
                set.iter().flat_map(trace_step).chain(set.iter().cloned()).collect();
            if next == set {
                return set;
            }
            set = next;
        }
    }

    #[test]
    fn closure_examples() {
        let c = closure(&[f("F p")], &[]);
        assert_eq!(c.size(), 3);
        assert_eq!(c.formulas, saturate(&[f("F p")]));

        let c = closure(&[], &[p()]);
        assert_eq!(c.size(), 1);

        let c = closure(&[f("F <> <> p")], &[f("F p")]);
        assert_eq!(c.size(), 7);
        for s in ["F <> <> p", "<> F <> <> p", "<> <> p", "<> p", "p", "F p", "<> F p"] {
            assert!(c.formulas.contains(&f(s)), "{s}");
        }
        assert_eq!(c.formulas, saturate(&[f("F <> <> p"), f("F p")]));
    }
}
