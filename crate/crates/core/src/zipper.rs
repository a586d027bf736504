//! Elimination of a critical cut by traversing both premises in lockstep.
//!
//! A traversed proof is a partial proof whose open leaves carry a triple
//! `(u0, psi, u1)`: a node of the left premise, the cut formula and a node of
//! the right premise. The leftmost open leaf is rewritten until none is left.

use std::collections::BTreeSet;

use crate::formula::Formula;
use crate::proof::{Derivation, NodeId, ProofTree, Rule, Token, TokenSupply, subproof_at};
use crate::reductions::adapt;
use crate::rules;
use crate::sequent::{AnnFormula, Sequent};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ZipError {
    #[error("root is not a cut on an eventuality with an unfocused conclusion")]
    NotCritical,
    #[error("open leaf at height {height} exceeds the bound {bound}")]
    HeightBound { height: usize, bound: usize },
    #[error("step budget of {0} exhausted")]
    Budget(u64),
    #[error("cannot build `{rule}` at `{sequent}`: {msg}")]
    Construction { rule: String, sequent: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeTriple {
    pub u0: NodeId,
    pub psi: Formula,
    pub u1: NodeId,
}

#[derive(Clone, Debug)]
enum Body {
    Open(MergeTriple),
    Rule(Rule, Vec<usize>),
    Closed(ProofTree),
}

#[derive(Clone, Debug)]
struct RhoNode {
    sequent: Sequent,
    body: Body,
    parent: Option<usize>,
    height: usize,
    mark: Option<Token>,
    focused_ev_l: bool,
}

/// A partially built proof together with the two premises being merged.
#[derive(Clone, Debug)]
pub struct TraversedProof {
    d0: Derivation,
    d1: Derivation,
    nodes: Vec<RhoNode>,
    open: Vec<usize>,
    supply: TokenSupply,
    pub n0: usize,
    pub n1: usize,
    pub max_height: usize,
    pub steps: u64,
    /// Cut formulas introduced so far, in order.
    pub introduced_cuts: Vec<Formula>,
    /// Number of repeat leaves closed by inserting a discharge.
    pub closed_repeats: usize,
    target: Sequent,
}

fn err(rule: &Rule, s: &Sequent, msg: impl Into<String>) -> ZipError {
    ZipError::Construction { rule: rule.to_string(), sequent: s.to_string(), msg: msg.into() }
}

impl TraversedProof {
    /// Starts from a cut `pi0 / pi1` on `Fphi` whose conclusion is unfocused.
    pub fn new(cut: &ProofTree, supply: TokenSupply) -> Result<Self, ZipError> {
        let psi = cut.cut_formula().ok_or(ZipError::NotCritical)?;
        if !psi.is_ev() || cut.sequent.has_focus() {
            return Err(ZipError::NotCritical);
        }
        let d0 = Derivation::from_tree(&cut.premises[0]);
        let d1 = Derivation::from_tree(&cut.premises[1]);
        let (n0, n1) = (d0.len(), d1.len());
        let mut t = TraversedProof {
            nodes: vec![],
            open: vec![],
            supply,
            n0,
            n1,
            max_height: 0,
            steps: 0,
            introduced_cuts: vec![],
            closed_repeats: 0,
            target: cut.sequent.clone(),
            d0,
            d1,
        };
        let triple = MergeTriple { u0: t.d0.root(), psi, u1: t.d1.root() };
        let s = t.leaf_sequent(&triple);
        t.nodes.push(RhoNode { sequent: s, body: Body::Open(triple), parent: None, height: 0, mark: None, focused_ev_l: false });
        t.open.push(0);
        Ok(t)
    }

    /// `4 n0^2 n1^2`.
    pub fn height_bound(&self) -> usize {
        4usize.saturating_mul(self.n0.pow(2)).saturating_mul(self.n1.pow(2))
    }

    pub fn open_leaves(&self) -> usize {
        self.open.len()
    }

    fn resolve(d: &Derivation, v: NodeId) -> NodeId {
        match d.rule(v) {
            Rule::Repeat(_) => d.companion(v).unwrap_or(v),
            _ => v,
        }
    }

    fn leaf_sequent(&self, t: &MergeTriple) -> Sequent {
        let s0 = self.d0.sequent(t.u0);
        let s1 = self.d1.sequent(t.u1);
        let left = s0
            .left
            .iter()
            .cloned()
            .chain(s1.left.iter().filter(|a| a.formula != t.psi).map(AnnFormula::unfocused))
            .collect();
        let right = s0.right.iter().filter(|f| **f != t.psi).chain(s1.right.iter()).cloned().collect();
        Sequent { left, right }
    }

    fn push_node(&mut self, parent: usize, sequent: Sequent, body: Body) -> usize {
        let height = self.nodes[parent].height + 1;
        self.max_height = self.max_height.max(height);
        self.nodes.push(RhoNode { sequent, body, parent: Some(parent), height, mark: None, focused_ev_l: false });
        self.nodes.len() - 1
    }

    fn open_child(&mut self, parent: usize, t: MergeTriple) -> usize {
        let s = self.leaf_sequent(&t);
        self.push_node(parent, s, Body::Open(t))
    }

    fn closed_child(&mut self, parent: usize, tree: ProofTree) -> usize {
        let s = tree.sequent.clone();
        self.push_node(parent, s, Body::Closed(tree))
    }

    /// Turns the open leaf `v` into an inner node with `rule` and the given
    /// children, then checks the rule instance.
    fn set_rule(&mut self, v: usize, rule: Rule, children: Vec<usize>) -> Result<(), ZipError> {
        let prems: Vec<&Sequent> = children.iter().map(|&c| &self.nodes[c].sequent).collect();
        let s = &self.nodes[v].sequent;
        rules::check_rule(&rule, s, &prems).map_err(|m| err(&rule, s, m))?;
        let focused_ev_l = rules::is_focused_ev_l(&rule, s, &prems);
        let cut = if rule == Rule::Cut { rules::principal(&rule, s, &prems) } else { None };
        self.nodes[v].focused_ev_l = focused_ev_l;
        self.introduced_cuts.extend(cut);
        self.nodes[v].body = Body::Rule(rule, children.clone());
        for &c in children.iter().rev() {
            if matches!(self.nodes[c].body, Body::Open(_)) {
                self.open.push(c);
            }
        }
        Ok(())
    }

    /// Nearest proper ancestor of `v` with the same sequent such that the
    /// path to `v` stays in focus and passes a focused `ev-l`.
    fn repeat_companion(&self, v: usize) -> Option<usize> {
        let s = &self.nodes[v].sequent;
        if !s.has_focus() {
            return None;
        }
        let mut seen_ev = false;
        let mut cur = self.nodes[v].parent;
        while let Some(c) = cur {
            let n = &self.nodes[c];
            if !n.sequent.has_focus() {
                return None;
            }
            seen_ev |= n.focused_ev_l;
            if seen_ev && &n.sequent == s {
                return Some(c);
            }
            cur = n.parent;
        }
        None
    }

    fn close_from(&mut self, v: usize, d_is_left: bool, u: NodeId) -> Result<(), ZipError> {
        let d = if d_is_left { &self.d0 } else { &self.d1 };
        let tree = subproof_at(d, u, &mut self.supply);
        let target = self.nodes[v].sequent.clone();
        let t = adapt(tree, &target).ok_or_else(|| err(&Rule::WeakL, &target, "premise does not fit"))?;
        self.nodes[v].body = Body::Closed(t);
        Ok(())
    }

    /// One step on the leftmost open leaf. Returns `false` if none is left.
    pub fn step(&mut self) -> Result<bool, ZipError> {
        let Some(v) = self.open.pop() else { return Ok(false) };
        self.steps += 1;
        let height = self.nodes[v].height;
        if height > self.height_bound() {
            return Err(ZipError::HeightBound { height, bound: self.height_bound() });
        }
        let Body::Open(t) = self.nodes[v].body.clone() else { unreachable!("open list holds open leaves") };
        let u0 = Self::resolve(&self.d0, t.u0);
        let u1 = Self::resolve(&self.d1, t.u1);
        let psi = t.psi.clone();
        let r0 = self.d0.rule(u0).clone();
        let r1 = self.d1.rule(u1).clone();
        let s_v = self.nodes[v].sequent.clone();
        let kids0 = self.d0.children(u0).to_vec();
        let kids1 = self.d1.children(u1).to_vec();

        match &r0 {
            Rule::Discharge(_) => {
                if let Some(c) = self.repeat_companion(v) {
                    let tok = match &self.nodes[c].mark {
                        Some(tok) => tok.clone(),
                        None => {
                            let tok = self.supply.fresh();
                            self.nodes[c].mark = Some(tok.clone());
                            tok
                        }
                    };
                    self.nodes[v].body = Body::Rule(Rule::Repeat(tok), vec![]);
                    self.closed_repeats += 1;
                } else {
                    self.nodes[v].body = Body::Open(MergeTriple { u0: kids0[0], psi, u1 });
                    self.open.push(v);
                }
                return Ok(true);
            }
            Rule::Unfocus | Rule::Focus => {
                let c = self.open_child(v, MergeTriple { u0: kids0[0], psi, u1 });
                self.set_rule(v, r0, vec![c])?;
                return Ok(true);
            }
            Rule::WeakR if !self.d0.sequent(kids0[0]).right.contains(&psi) => {
                self.close_from(v, true, kids0[0])?;
                return Ok(true);
            }
            _ => {}
        }

        let s0 = self.d0.sequent(u0).clone();
        let prems0: Vec<&Sequent> = kids0.iter().map(|&c| self.d0.sequent(c)).collect();
        let left_principal = match &r0 {
            Rule::EvR => rules::admits_principal(&r0, &s0, &prems0, &psi) && !prems0[0].right.contains(&psi),
            Rule::Dia => true,
            _ => false,
        };

        if left_principal {
            match &r1 {
                Rule::Discharge(_) | Rule::Unfocus | Rule::Focus => {
                    self.nodes[v].body = Body::Open(MergeTriple { u0, psi, u1: kids1[0] });
                    self.open.push(v);
                    return Ok(true);
                }
                Rule::WeakL if !self.d1.sequent(kids1[0]).has_left(&psi) => {
                    self.close_from(v, false, kids1[0])?;
                    return Ok(true);
                }
                Rule::EvL if psi.is_ev() && self.principal_ev_l(u1, &psi) => {
                    let chi = psi.as_ev().expect("eventuality").clone();
                    let step = psi.clone().dia();
                    let a = self.open_child(v, MergeTriple { u0: kids0[0], psi: step, u1: kids1[0] });
                    let right = subproof_at(&self.d1, kids1[1], &mut self.supply);
                    let target = right.sequent.unfocused();
                    let right = adapt(right, &target).ok_or_else(|| err(&Rule::Cut, &s_v, "right premise"))?;
                    let b = self.closed_child(v, right);
                    let l_seq = self.nodes[a].sequent.clone();
                    if !l_seq.right.contains(&chi) {
                        return Err(err(&Rule::Cut, &s_v, format!("{chi} missing on the left")));
                    }
                    self.set_rule(v, Rule::Cut, vec![a, b])?;
                    return Ok(true);
                }
                Rule::Dia if psi.as_dia().is_some() => {
                    let chi = psi.as_dia().expect("diamond").clone();
                    let c = self.open_child(v, MergeTriple { u0: kids0[0], psi: chi, u1: kids1[0] });
                    self.set_rule(v, Rule::Dia, vec![c])?;
                    return Ok(true);
                }
                _ => {
                    let mut children = Vec::with_capacity(kids1.len());
                    for &c1 in &kids1 {
                        let cs = self.d1.sequent(c1).clone();
                        let id = if cs.has_left(&psi) {
                            self.open_child(v, MergeTriple { u0, psi: psi.clone(), u1: c1 })
                        } else {
                            let target = Sequent {
                                left: s0.left.iter().cloned().chain(cs.left.iter().map(AnnFormula::unfocused)).collect(),
                                right: s0.right.iter().filter(|f| **f != psi).chain(cs.right.iter()).cloned().collect(),
                            };
                            let tree = subproof_at(&self.d1, c1, &mut self.supply);
                            let tree = adapt(tree, &target).ok_or_else(|| err(&r1, &target, "premise does not fit"))?;
                            self.closed_child(v, tree)
                        };
                        children.push(id);
                    }
                    self.set_rule(v, r1, children)?;
                    return Ok(true);
                }
            }
        }

        let s1 = self.d1.sequent(u1).clone();
        let mut children = Vec::with_capacity(kids0.len());
        for &c0 in &kids0 {
            let cs = self.d0.sequent(c0).clone();
            let id = if cs.right.contains(&psi) {
                self.open_child(v, MergeTriple { u0: c0, psi: psi.clone(), u1 })
            } else {
                let target = Sequent {
                    left: cs
                        .left
                        .iter()
                        .cloned()
                        .chain(s1.left.iter().filter(|a| a.formula != psi).map(AnnFormula::unfocused))
                        .collect(),
                    right: cs.right.union(&s1.right).cloned().collect(),
                };
                let tree = subproof_at(&self.d0, c0, &mut self.supply);
                let tree = adapt(tree, &target).ok_or_else(|| err(&r0, &target, "premise does not fit"))?;
                self.closed_child(v, tree)
            };
            children.push(id);
        }
        self.set_rule(v, r0, children)?;
        Ok(true)
    }

    fn principal_ev_l(&self, u1: NodeId, psi: &Formula) -> bool {
        let s1 = self.d1.sequent(u1);
        let prems: Vec<&Sequent> = self.d1.children(u1).iter().map(|&c| self.d1.sequent(c)).collect();
        rules::admits_principal(&Rule::EvL, s1, &prems, psi) && !prems.iter().any(|p| p.has_left(psi))
    }

    /// The current partial proof. Open leaves are shown as leaves with
    /// tokens `open0, open1, ...`.
    pub fn snapshot(&self) -> ProofTree {
        self.build(0, &mut 0)
    }

    fn build(&self, v: usize, open_count: &mut usize) -> ProofTree {
        let n = &self.nodes[v];
        let t = match &n.body {
            Body::Open(_) => {
                let tok = Token(format!("open{open_count}"));
                *open_count += 1;
                ProofTree::leaf(n.sequent.clone(), tok)
            }
            Body::Closed(t) => t.clone(),
            Body::Rule(r, kids) => {
                ProofTree::new(n.sequent.clone(), r.clone(), kids.iter().map(|&c| self.build(c, open_count)).collect())
            }
        };
        match &n.mark {
            Some(tok) => ProofTree::discharge(tok.clone(), t),
            None => t,
        }
    }

    /// Finished proof, adapted to the conclusion of the original cut.
    pub fn finish(self) -> Result<ProofTree, ZipError> {
        if !self.open.is_empty() {
            return Err(err(&Rule::Cut, &self.target, "open leaves remain"));
        }
        let t = self.snapshot();
        adapt(t, &self.target).ok_or_else(|| err(&Rule::Cut, &self.target, "result does not fit the conclusion"))
    }

    pub fn supply(&self) -> &TokenSupply {
        &self.supply
    }
}

/// Eliminates the critical cut at the root of `cut`. `observe` sees the
/// traversed proof after every step.
pub fn zip_with(
    cut: &ProofTree,
    supply: TokenSupply,
    budget: u64,
    mut observe: impl FnMut(&TraversedProof),
) -> Result<(ProofTree, TokenSupply, ZipStats), ZipError> {
    let mut t = TraversedProof::new(cut, supply)?;
    while t.step()? {
        observe(&t);
        if t.steps > budget {
            return Err(ZipError::Budget(budget));
        }
    }
    let stats = ZipStats {
        steps: t.steps,
        max_height: t.max_height,
        height_bound: t.height_bound(),
        introduced_cuts: t.introduced_cuts.iter().map(|f| f.to_string()).collect::<BTreeSet<_>>().into_iter().collect(),
        closed_repeats: t.closed_repeats,
    };
    let supply = t.supply.clone();
    Ok((t.finish()?, supply, stats))
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct ZipStats {
    pub steps: u64,
    pub max_height: usize,
    pub height_bound: usize,
    pub introduced_cuts: Vec<String>,
    pub closed_repeats: usize,
}

pub fn zip_eliminate_critical(cut: &ProofTree) -> Result<ProofTree, ZipError> {
    let supply = TokenSupply::for_tree(cut);
    zip_with(cut, supply, u64::MAX, |_| {}).map(|(t, _, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::check_proof;
    use crate::text::parse_proof_document;

    fn ex32() -> ProofTree {
        parse_proof_document(include_str!("../../../fixtures/ex32_full.gke")).unwrap()
    }

    #[test]
    fn rejects_non_critical_cuts() {
        let ex33 = parse_proof_document(include_str!("../../../fixtures/ex33_full.gke")).unwrap();
        let inner = ex33.premises[0].premises[0].clone();
        assert_eq!(inner.rule, Rule::Cut);
        assert!(matches!(TraversedProof::new(&inner, TokenSupply::for_tree(&inner)), Err(ZipError::NotCritical)));
        let pi0 = ex32().premises[0].clone();
        assert!(matches!(TraversedProof::new(&pi0, TokenSupply::for_tree(&pi0)), Err(ZipError::NotCritical)));
    }

    #[test]
    fn steps_stay_below_the_height_bound() {
        let cut = ex32();
        let mut t = TraversedProof::new(&cut, TokenSupply::for_tree(&cut)).unwrap();
        assert_eq!(t.open_leaves(), 1);
        assert_eq!(t.height_bound(), 4 * t.n0.pow(2) * t.n1.pow(2));
        let mut snapshots = 0;
        while t.step().unwrap() {
            assert!(t.max_height <= t.height_bound());
            let snap = t.snapshot();
            assert_eq!(snap.sequent.unfocused(), cut.sequent);
            snapshots += 1;
        }
        assert!(snapshots > 0);
        assert_eq!(t.open_leaves(), 0);
        assert!(t.introduced_cuts.iter().any(|f| f.to_string() == "<> p"));
        assert_eq!(t.closed_repeats, 1);
        let out = t.finish().unwrap();
        assert!(check_proof(&out).accepted);
        assert_eq!(out.sequent, cut.sequent);
    }

    #[test]
    fn budget_is_enforced() {
        let cut = ex32();
        let r = zip_with(&cut, TokenSupply::for_tree(&cut), 2, |_| {});
        assert_eq!(r.err(), Some(ZipError::Budget(2)));
    }

    #[test]
    fn no_critical_cut_is_left() {
        let out = zip_eliminate_critical(&ex32()).unwrap();
        let mut critical = 0;
        out.walk(&mut |n| {
            if n.cut_formula().is_some_and(|f| f.is_ev()) && !n.sequent.has_focus() {
                critical += 1;
            }
        });
        assert_eq!(critical, 0);
    }
}
