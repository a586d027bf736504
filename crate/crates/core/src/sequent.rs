//! Annotated sequents `Γ ⊢ Δ`.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{parse_formula, Formula, SyntaxError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Annotation {
    Focused,
    Unfocused,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnFormula {
    pub formula: Formula,
    pub ann: Annotation,
}

impl AnnFormula {
    pub fn new(formula: Formula, ann: Annotation) -> Self {
        AnnFormula { formula, ann }
    }

    pub fn u(formula: Formula) -> Self {
        AnnFormula::new(formula, Annotation::Unfocused)
    }

    pub fn f(formula: Formula) -> Self {
        AnnFormula::new(formula, Annotation::Focused)
    }

    pub fn is_focused(&self) -> bool {
        self.ann == Annotation::Focused
    }

    pub fn unfocused(&self) -> AnnFormula {
        AnnFormula::u(self.formula.clone())
    }
}

impl fmt::Display for AnnFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ann {
            Annotation::Focused => write!(f, "{} ^f", self.formula),
            Annotation::Unfocused => write!(f, "{}", self.formula),
        }
    }
}

impl fmt::Debug for AnnFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Left side carries annotations, right side is always out of focus.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub left: BTreeSet<AnnFormula>,
    pub right: BTreeSet<Formula>,
}

impl Sequent {
    pub fn new(
        left: impl IntoIterator<Item = AnnFormula>,
        right: impl IntoIterator<Item = Formula>,
    ) -> Self {
        Sequent { left: left.into_iter().collect(), right: right.into_iter().collect() }
    }

    pub fn focus(&self) -> Option<&AnnFormula> {
        self.left.iter().find(|a| a.is_focused())
    }

    pub fn has_focus(&self) -> bool {
        self.focus().is_some()
    }

    pub fn focus_count(&self) -> usize {
        self.left.iter().filter(|a| a.is_focused()).count()
    }

    pub fn unfocused(&self) -> Sequent {
        Sequent { left: self.left.iter().map(AnnFormula::unfocused).collect(), right: self.right.clone() }
    }

    /// `None` when the annotated-sequent invariants hold.
    pub fn shape_violation(&self) -> Option<String> {
        let foci: Vec<_> = self.left.iter().filter(|a| a.is_focused()).collect();
        if foci.len() > 1 {
            return Some(format!("{} formulas in focus", foci.len()));
        }
        if let Some(a) = foci.first() {
            if !a.formula.is_focusable() {
                return Some(format!("focused formula {} is not of shape F φ or <> F φ", a.formula));
            }
        }
        None
    }

    pub fn left_formulas(&self) -> BTreeSet<Formula> {
        self.left.iter().map(|a| a.formula.clone()).collect()
    }

    pub fn has_left(&self, f: &Formula) -> bool {
        self.left.iter().any(|a| &a.formula == f)
    }

    pub fn with_left(mut self, a: AnnFormula) -> Self {
        self.left.insert(a);
        self
    }

    pub fn with_right(mut self, f: Formula) -> Self {
        self.right.insert(f);
        self
    }

    /// Every formula of `self` (left annotated, right plain) also occurs in `other`.
    pub fn is_subsequent_of(&self, other: &Sequent) -> bool {
        self.left.is_subset(&other.left) && self.right.is_subset(&other.right)
    }

    pub fn union(&self, other: &Sequent) -> Sequent {
        Sequent {
            left: self.left.union(&other.left).cloned().collect(),
            right: self.right.union(&other.right).cloned().collect(),
        }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.left.iter().map(|a| &a.formula).chain(self.right.iter())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left: Vec<String> = self.left.iter().map(|a| a.to_string()).collect();
        let right: Vec<String> = self.right.iter().map(|a| a.to_string()).collect();
        match (left.is_empty(), right.is_empty()) {
            (true, true) => write!(f, "|-"),
            (true, false) => write!(f, "|- {}", right.join(", ")),
            (false, true) => write!(f, "{} |-", left.join(", ")),
            (false, false) => write!(f, "{} |- {}", left.join(", "), right.join(", ")),
        }
    }
}

impl fmt::Debug for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn split_items(text: &str, offset: usize) -> Vec<(usize, &str)> {
    if text.trim().is_empty() {
        return vec![];
    }
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if c == ',' {
            out.push((offset + start, &text[start..i]));
            start = i + 1;
        }
    }
    out.push((offset + start, &text[start..]));
    out
}

fn parse_item(item: &str, at: usize) -> Result<(Formula, Option<Annotation>), SyntaxError> {
    if item.trim().is_empty() {
        return Err(SyntaxError::new(at, "empty formula in sequent"));
    }
    let (body, ann) = match item.rfind('^') {
        Some(i) => {
            let mark = item[i + 1..].trim();
            let ann = match mark {
                "f" => Annotation::Focused,
                "u" => Annotation::Unfocused,
                _ => return Err(SyntaxError::new(at + i, "annotation must be ^f or ^u")),
            };
            (&item[..i], Some(ann))
        }
        None => (item, None),
    };
    let f = parse_formula(body).map_err(|e| e.shifted(at))?;
    Ok((f, ann))
}

/// Parses `A ^f, B |- C, D`. Only the left side may carry annotations.
pub fn parse_sequent(text: &str) -> Result<Sequent, SyntaxError> {
    let Some(turnstile) = text.find("|-") else {
        return Err(SyntaxError::new(text.len(), "missing '|-'"));
    };
    if text[turnstile + 2..].contains("|-") {
        return Err(SyntaxError::new(turnstile + 2, "more than one '|-'"));
    }
    let mut seq = Sequent::default();
    for (at, item) in split_items(&text[..turnstile], 0) {
        let (f, ann) = parse_item(item, at)?;
        seq.left.insert(AnnFormula::new(f, ann.unwrap_or(Annotation::Unfocused)));
    }
    for (at, item) in split_items(&text[turnstile + 2..], turnstile + 2) {
        let (f, ann) = parse_item(item, at)?;
        if ann == Some(Annotation::Focused) {
            return Err(SyntaxError::new(at, "right-hand formulas cannot be in focus"));
        }
        seq.right.insert(f);
    }
    Ok(seq)
}

impl std::str::FromStr for Sequent {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sequent(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let s = parse_sequent("F <> p ^f |- F p").unwrap();
        assert_eq!(s.focus().unwrap().formula, parse_formula("F <> p").unwrap());
        assert_eq!(s.to_string(), "F <> p ^f |- F p");
        assert_eq!(parse_sequent("|- <> p").unwrap().to_string(), "|- <> p");
        assert_eq!(parse_sequent("p, q ^u |-").unwrap().to_string(), "p, q |-");
        assert_eq!(parse_sequent(" |- ").unwrap(), Sequent::default());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_sequent("p").is_err());
        assert!(parse_sequent("p |- q |- r").is_err());
        assert!(parse_sequent("p, |- q").is_err());
        assert!(parse_sequent("|- F p ^f").is_err());
        assert!(parse_sequent("p ^x |- q").is_err());
    }

    #[test]
    fn shape_checks() {
        assert!(parse_sequent("F p ^f |- p").unwrap().shape_violation().is_none());
        assert!(parse_sequent("<> F p ^f |- p").unwrap().shape_violation().is_none());
        assert!(parse_sequent("p ^f |- p").unwrap().shape_violation().is_some());
        assert!(parse_sequent("F p ^f, F q ^f |-").unwrap().shape_violation().is_some());
    }
}
