//! Global correctness: local rule checks, companions, successful paths and
//! guardedness.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::proof::{Derivation, NodeId, ProofTree, Rule};
use crate::rules;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub node: NodeId,
    pub rule: String,
    pub sequent: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node {} ({}) at `{}`: {}", self.node.0, self.rule, self.sequent, self.message)
    }
}

fn diag(d: &Derivation, v: NodeId, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        node: v,
        rule: d.rule(v).to_string(),
        sequent: d.sequent(v).to_string(),
        message: message.into(),
    }
}

/// Local check of the rule applied at `v`.
pub fn validate_rule_instance(d: &Derivation, v: NodeId) -> Result<(), Diagnostic> {
    let prems: Vec<_> = d.children(v).iter().map(|&c| d.sequent(c)).collect();
    rules::check_rule(d.rule(v), d.sequent(v), &prems).map(|_| ()).map_err(|m| diag(d, v, m))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepeatStatus {
    Discharged { companion: NodeId },
    Unbound,
    SequentMismatch { companion: NodeId },
    UnsuccessfulPath { companion: NodeId },
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofReport {
    pub accepted: bool,
    pub nodes: usize,
    pub violations: Vec<Diagnostic>,
    pub repeats: BTreeMap<usize, RepeatStatus>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathError {
    Empty,
    NotAnEdge(NodeId, NodeId),
    UnknownNode(NodeId),
}

/// A path (consecutive nodes joined by tree or back edges) is successful if
/// every sequent on it has a formula in focus and it passes, before its last
/// node, an `ev-l` step whose principal formula is in focus.
pub fn is_successful_path(d: &Derivation, path: &[NodeId]) -> Result<bool, PathError> {
    if path.is_empty() {
        return Err(PathError::Empty);
    }
    for &v in path {
        if !d.contains(v) {
            return Err(PathError::UnknownNode(v));
        }
    }
    for w in path.windows(2) {
        if !d.successors(w[0]).contains(&w[1]) {
            return Err(PathError::NotAnEdge(w[0], w[1]));
        }
    }
    if !path.iter().all(|&v| d.sequent(v).has_focus()) {
        return Ok(false);
    }
    Ok(path[..path.len() - 1].iter().any(|&v| focused_ev_l(d, v)))
}

pub fn focused_ev_l(d: &Derivation, v: NodeId) -> bool {
    let prems: Vec<_> = d.children(v).iter().map(|&c| d.sequent(c)).collect();
    rules::is_focused_ev_l(d.rule(v), d.sequent(v), &prems)
}

/// Tree path from the companion of a repeat leaf up to the leaf.
pub fn repeat_path(d: &Derivation, leaf: NodeId) -> Option<Vec<NodeId>> {
    d.tree_path(d.companion(leaf)?, leaf)
}

pub fn repeat_status(d: &Derivation, leaf: NodeId) -> RepeatStatus {
    let Some(companion) = d.companion(leaf) else { return RepeatStatus::Unbound };
    if d.sequent(companion) != d.sequent(leaf) {
        return RepeatStatus::SequentMismatch { companion };
    }
    let path = d.tree_path(companion, leaf).expect("companion is an ancestor");
    if is_successful_path(d, &path) == Ok(true) {
        RepeatStatus::Discharged { companion }
    } else {
        RepeatStatus::UnsuccessfulPath { companion }
    }
}

pub fn check_derivation(d: &Derivation) -> ProofReport {
    let mut violations = Vec::new();
    let mut repeats = BTreeMap::new();
    let mut seen_tokens: HashMap<&crate::proof::Token, NodeId> = HashMap::new();
    for v in d.ids() {
        if let Err(e) = validate_rule_instance(d, v) {
            violations.push(e);
        }
        match d.rule(v) {
            Rule::Discharge(t) => {
                if let Some(prev) = seen_tokens.insert(t, v) {
                    violations.push(diag(d, v, format!("discharge token {t} already used at node {}", prev.0)));
                }
            }
            Rule::Repeat(_) => {
                let st = repeat_status(d, v);
                let msg = match &st {
                    RepeatStatus::Discharged { .. } => None,
                    RepeatStatus::Unbound => Some("repeat leaf has no companion".to_string()),
                    RepeatStatus::SequentMismatch { companion } => {
                        Some(format!("repeat leaf differs from its companion at node {}", companion.0))
                    }
                    RepeatStatus::UnsuccessfulPath { companion } => {
                        Some(format!("path from companion {} to the repeat leaf is not successful", companion.0))
                    }
                };
                if let Some(m) = msg {
                    violations.push(diag(d, v, m));
                }
                repeats.insert(v.0, st);
            }
            _ => {}
        }
    }
    ProofReport { accepted: violations.is_empty(), nodes: d.len(), violations, repeats }
}

pub fn check_proof(tree: &ProofTree) -> ProofReport {
    check_derivation(&Derivation::from_tree(tree))
}

/// Every discharged leaf has a modal step on the path from its companion.
pub fn guardedness_check(d: &Derivation) -> bool {
    d.repeat_leaves().all(|leaf| match repeat_path(d, leaf) {
        Some(path) => path[..path.len() - 1].iter().any(|&v| d.rule(v) == &Rule::Dia),
        None => false,
    })
}

/// Open repeat leaves (no companion in the tree).
pub fn open_leaves(d: &Derivation) -> Vec<NodeId> {
    d.repeat_leaves().filter(|&v| d.companion(v).is_none()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_proof_document;

    fn pi0() -> Derivation {
        Derivation::from_tree(&parse_proof_document(include_str!("../../../fixtures/ex32_pi0.gke")).unwrap())
    }

    #[test]
    fn successful_paths() {
        let d = pi0();
        let ids = |v: &[usize]| v.iter().map(|&i| NodeId(i)).collect::<Vec<_>>();
        assert_eq!(is_successful_path(&d, &ids(&[1, 2, 3, 4, 5, 6])), Ok(true));
        assert_eq!(is_successful_path(&d, &ids(&[3, 4, 5, 6, 1])), Ok(true));
        assert_eq!(is_successful_path(&d, &ids(&[4, 5, 6, 1, 2])), Ok(false));
        assert_eq!(is_successful_path(&d, &ids(&[0, 1, 2, 3, 4])), Ok(false));
        assert_eq!(is_successful_path(&d, &[]), Err(PathError::Empty));
        assert_eq!(is_successful_path(&d, &ids(&[1, 3])), Err(PathError::NotAnEdge(NodeId(1), NodeId(3))));
    }

    #[test]
    fn repeat_and_guardedness() {
        let d = pi0();
        assert_eq!(repeat_status(&d, NodeId(6)), RepeatStatus::Discharged { companion: NodeId(1) });
        assert!(guardedness_check(&d));
        assert!(open_leaves(&d).is_empty());
        assert!(check_derivation(&d).accepted);
    }

    #[test]
    fn mutant_diagnostics() {
        let t = parse_proof_document(include_str!("../../../fixtures/mutants/pi0_focus_flip_discharge.gke")).unwrap();
        let report = check_proof(&t);
        assert!(!report.accepted);
        assert!(!report.violations.is_empty());
        let t = parse_proof_document(include_str!("../../../fixtures/mutants/pi1_unbound_leaf.gke")).unwrap();
        let d = Derivation::from_tree(&t);
        assert!(d.repeat_leaves().any(|l| repeat_status(&d, l) == RepeatStatus::Unbound));
    }
}
