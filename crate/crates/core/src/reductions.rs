//! Single-step cut reductions.
//!
//! Every reduction is built and then validated locally; when a construction
//! does not fit (set-semantics overlap between the premises), the next
//! reduction in dispatch order is tried.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::analysis::{compute_clusters, component_of};
use crate::formula::Formula;
use crate::proof::{freshen_tokens, Derivation, NodeId, ProofTree, Rule, Token, TokenSupply};
use crate::rules;
use crate::sequent::{AnnFormula, Sequent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ReductionKind {
    PrincipalEv,
    PrincipalDia,
    PrincipalAnd,
    PrincipalNeg,
    TrivialAxRight,
    TrivialAxLeft,
    TrivialWeakRight,
    TrivialWeakLeft,
    DischargeUnfoldLeft,
    DischargeUnfoldRight,
    FocusPushLeft,
    FocusPushRight,
    NonPrincipalLeft,
    NonPrincipalRight,
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("node {0} is not a cut")]
    NotACut(usize),
    #[error("no reduction applies to the cut on {formula} at `{sequent}`")]
    NoReduction { formula: String, sequent: String },
}

#[derive(Clone, Debug)]
pub struct ReductionStep {
    pub kind: ReductionKind,
    pub at: NodeId,
    pub after: ProofTree,
    pub fresh_tokens: Vec<Token>,
}

/// Extends a proof to a larger sequent with weakening and focus changes.
/// Returns `None` when the target does not contain the proved sequent.
pub fn adapt(t: ProofTree, target: &Sequent) -> Option<ProofTree> {
    if &t.sequent == target {
        return Some(t);
    }
    let src = &t.sequent;
    if !src.right.is_subset(&target.right) || !src.left.iter().all(|a| target.has_left(&a.formula)) {
        return None;
    }
    let tf = target.focus().cloned();
    let mut cur = t;
    if cur.sequent.focus().is_some() && cur.sequent.focus() != tf.as_ref() {
        cur = ProofTree::new(cur.sequent.unfocused(), Rule::Unfocus, vec![cur]);
    }
    for a in &target.left {
        let need = if a.is_focused() {
            if cur.sequent.left.contains(a) {
                continue;
            }
            a.unfocused()
        } else {
            a.clone()
        };
        if !cur.sequent.left.contains(&need) {
            let s = cur.sequent.clone().with_left(need);
            cur = ProofTree::new(s, Rule::WeakL, vec![cur]);
        }
    }
    for f in &target.right {
        if !cur.sequent.right.contains(f) {
            let s = cur.sequent.clone().with_right(f.clone());
            cur = ProofTree::new(s, Rule::WeakR, vec![cur]);
        }
    }
    if let Some(focus) = &tf {
        if !cur.sequent.left.contains(focus) {
            if cur.sequent.has_focus() {
                return None;
            }
            let mut s = cur.sequent.clone();
            if !target.left.contains(&focus.unfocused()) {
                s.left.remove(&focus.unfocused());
            }
            s.left.insert(focus.clone());
            cur = ProofTree::new(s, Rule::Focus, vec![cur]);
        }
    }
    (&cur.sequent == target).then_some(cur)
}

/// Replaces the repeat leaves bound to the root `Discharge(x)` by copies of
/// the whole tree: one step of unfolding.
pub fn unfold_discharge(t: &ProofTree) -> ProofTree {
    let Rule::Discharge(x) = &t.rule else { return t.clone() };
    replace_leaves(&t.premises[0], x, t)
}

/// Replaces leaves `[..]^x` that are not shadowed by an inner `Discharge(x)`.
pub fn replace_leaves(t: &ProofTree, x: &Token, with: &ProofTree) -> ProofTree {
    match &t.rule {
        Rule::Repeat(y) if y == x => with.clone(),
        Rule::Discharge(y) if y == x => t.clone(),
        _ => ProofTree::new(
            t.sequent.clone(),
            t.rule.clone(),
            t.premises.iter().map(|p| replace_leaves(p, x, with)).collect(),
        ),
    }
}

/// Removes focus from a proof up to discharge rules and `unfocus` rules.
/// Focused discharges and leaves are kept and wrapped in `unfocus`.
pub fn unfocus_region(t: &ProofTree) -> ProofTree {
    if !t.sequent.has_focus() {
        return t.clone();
    }
    match &t.rule {
        Rule::Focus => unfocus_region(&t.premises[0]),
        Rule::Discharge(_) | Rule::Repeat(_) => ProofTree::new(t.sequent.unfocused(), Rule::Unfocus, vec![t.clone()]),
        _ => ProofTree::new(t.sequent.unfocused(), t.rule.clone(), t.premises.iter().map(unfocus_region).collect()),
    }
}

/// For `t = unfocus(X)`: a proof of the same (unfocused) sequent in which the
/// discharge directly above is unfolded and the region above it unfocused.
pub fn unfocus_unfold(t: &ProofTree) -> ProofTree {
    debug_assert_eq!(t.rule, Rule::Unfocus);
    let x = &t.premises[0];
    let base = match &x.rule {
        Rule::Discharge(tok) => replace_leaves(&x.premises[0], tok, t),
        _ => x.clone(),
    };
    unfocus_region(&base)
}

pub fn natural_cut(l: ProofTree, r: ProofTree, phi: &Formula) -> ProofTree {
    let fu = AnnFormula::u(phi.clone());
    let left = l.sequent.left.iter().cloned().chain(r.sequent.left.iter().filter(|a| **a != fu).cloned()).collect();
    let right = l.sequent.right.iter().filter(|f| *f != phi).cloned().chain(r.sequent.right.iter().cloned()).collect();
    ProofTree::new(Sequent { left, right }, Rule::Cut, vec![l, r])
}

const CHECK_DEPTH: usize = 24;

/// Local rule check of the nodes within a bounded distance from the root.
pub fn check_local(t: &ProofTree, max_depth: usize) -> Result<(), String> {
    let mut stack = vec![(t, 0usize)];
    while let Some((n, depth)) = stack.pop() {
        let prems: Vec<&Sequent> = n.premises.iter().map(|p| &p.sequent).collect();
        rules::check_rule(&n.rule, &n.sequent, &prems).map_err(|e| format!("{} at `{}`: {e}", n.rule, n.sequent))?;
        if depth < max_depth {
            stack.extend(n.premises.iter().map(|p| (p, depth + 1)));
        }
    }
    Ok(())
}

fn accept(t: ProofTree, concl: &Sequent) -> Option<ProofTree> {
    let t = adapt(t, concl)?;
    check_local(&t, CHECK_DEPTH).ok()?;
    Some(t)
}

fn principal_is(t: &ProofTree, phi: &Formula) -> bool {
    let prems: Vec<&Sequent> = t.premises.iter().map(|p| &p.sequent).collect();
    rules::admits_principal(&t.rule, &t.sequent, &prems, phi)
}

fn focus_target(p: &Sequent, chi: &Formula) -> Option<Sequent> {
    if p.has_focus() {
        return None;
    }
    let mut cands = vec![chi.clone()];
    if chi.is_ev() {
        cands.push(chi.clone().dia());
    }
    if let Some(g) = chi.as_dia() {
        cands.push(g.clone());
    }
    for c in cands {
        let u = AnnFormula::u(c.clone());
        if c.is_focusable() && p.left.contains(&u) {
            let mut s = p.clone();
            s.left.remove(&u);
            s.left.insert(AnnFormula::f(c));
            return Some(s);
        }
    }
    None
}

/// For `focus` directly over a weakening of the focused formula: the proof
/// above the weakening.
fn focused_weakening(t: &ProofTree) -> Option<&ProofTree> {
    let chi = t.sequent.focus()?.unfocused();
    let w = t.premises.first()?;
    (t.rule == Rule::Focus && w.rule == Rule::WeakL && !w.premises[0].sequent.left.contains(&chi)).then(|| &w.premises[0])
}

/// Moves a `focus` rule at the root of `t` one step up.
fn push_focus_up(t: &ProofTree) -> Option<ProofTree> {
    let inner = &t.premises[0];
    let chi = t.sequent.focus()?.formula.clone();
    let new_inner = match &inner.rule {
        Rule::Unfocus => unfocus_unfold(inner),
        Rule::Discharge(_) => unfold_discharge(inner),
        Rule::Ax | Rule::Repeat(_) | Rule::Focus => return None,
        rule => {
            let prems = inner
                .premises
                .iter()
                .map(|p| match focus_target(&p.sequent, &chi) {
                    Some(s) => ProofTree::new(s, Rule::Focus, vec![p.clone()]),
                    None => p.clone(),
                })
                .collect();
            return Some(ProofTree::new(t.sequent.clone(), rule.clone(), prems));
        }
    };
    Some(ProofTree::new(t.sequent.clone(), Rule::Focus, vec![new_inner]))
}

fn try_trivial(l: &ProofTree, r: &ProofTree, phi: &Formula, c: &Sequent) -> Option<(ReductionKind, ProofTree)> {
    use ReductionKind::*;
    if r.rule == Rule::Ax {
        if let Some(t) = accept(l.clone(), c) {
            return Some((TrivialAxLeft, t));
        }
    }
    if l.rule == Rule::Ax {
        if let Some(t) = accept(r.clone(), c) {
            return Some((TrivialAxRight, t));
        }
    }
    if l.rule == Rule::WeakR && !l.premises[0].sequent.right.contains(phi) {
        if let Some(t) = accept(l.premises[0].clone(), c) {
            return Some((TrivialWeakRight, t));
        }
    }
    if r.rule == Rule::WeakL && !r.premises[0].sequent.left.contains(&AnnFormula::u(phi.clone())) {
        if let Some(t) = accept(r.premises[0].clone(), c) {
            return Some((TrivialWeakLeft, t));
        }
    }
    None
}

fn try_structural_left(l: &ProofTree, r: &ProofTree, phi: &Formula, c: &Sequent) -> Option<(ReductionKind, ProofTree)> {
    use ReductionKind::*;
    match &l.rule {
        Rule::Discharge(_) => accept(natural_cut(unfold_discharge(l), r.clone(), phi), c).map(|t| (DischargeUnfoldLeft, t)),
        Rule::Unfocus => accept(natural_cut(unfocus_unfold(l), r.clone(), phi), c).map(|t| (DischargeUnfoldLeft, t)),
        Rule::Focus => {
            let l0 = l.premises[0].clone();
            let attempt = if r.rule == Rule::Focus {
                accept(natural_cut(l0, r.premises[0].clone(), phi), c)
            } else if !r.sequent.has_focus() {
                accept(natural_cut(l0, r.clone(), phi), c)
            } else {
                None
            };
            attempt
                .or_else(|| accept(natural_cut(focused_weakening(l)?.clone(), r.clone(), phi), c))
                .or_else(|| accept(natural_cut(push_focus_up(l)?, r.clone(), phi), c))
                .map(|t| (FocusPushLeft, t))
        }
        _ => None,
    }
}

fn try_structural_right(l: &ProofTree, r: &ProofTree, phi: &Formula, c: &Sequent) -> Option<(ReductionKind, ProofTree)> {
    use ReductionKind::*;
    match &r.rule {
        Rule::Discharge(_) => accept(natural_cut(l.clone(), unfold_discharge(r), phi), c).map(|t| (DischargeUnfoldRight, t)),
        Rule::Unfocus => accept(natural_cut(l.clone(), unfocus_unfold(r), phi), c).map(|t| (DischargeUnfoldRight, t)),
        Rule::Focus => {
            let r0 = r.premises[0].clone();
            let attempt = if l.rule == Rule::Focus {
                accept(natural_cut(l.premises[0].clone(), r0, phi), c)
            } else if !l.sequent.has_focus() {
                accept(natural_cut(l.clone(), r0, phi), c)
            } else {
                None
            };
            attempt
                .or_else(|| accept(natural_cut(l.clone(), focused_weakening(r)?.clone(), phi), c))
                .or_else(|| accept(natural_cut(l.clone(), push_focus_up(r)?, phi), c))
                .map(|t| (FocusPushRight, t))
        }
        _ => None,
    }
}

fn try_principal(l: &ProofTree, r: &ProofTree, phi: &Formula, c: &Sequent) -> Option<(ReductionKind, ProofTree)> {
    use ReductionKind::*;
    match (&l.rule, &r.rule, phi) {
        (Rule::EvR, Rule::EvL, Formula::Ev(inner)) if principal_is(l, phi) && principal_is(r, phi) => {
            let step = phi.clone().dia();
            let first = natural_cut(l.premises[0].clone(), r.premises[0].clone(), &step);
            let t = natural_cut(first, r.premises[1].clone(), inner);
            accept(t, c).map(|t| (PrincipalEv, t))
        }
        (Rule::Dia, Rule::Dia, Formula::Dia(inner)) if r.sequent.left.len() == 1 => {
            let cut = natural_cut(l.premises[0].clone(), r.premises[0].clone(), inner);
            let boxed = Sequent {
                left: cut.sequent.left.iter().map(|a| AnnFormula::new(a.formula.clone().dia(), a.ann)).collect(),
                right: cut.sequent.right.iter().map(|f| f.clone().dia()).collect(),
            };
            accept(ProofTree::new(boxed, Rule::Dia, vec![cut]), c).map(|t| (PrincipalDia, t))
        }
        (Rule::AndR, Rule::AndL, Formula::And(a, b)) if principal_is(l, phi) && principal_is(r, phi) => {
            let inner = natural_cut(l.premises[1].clone(), r.premises[0].clone(), b);
            let t = natural_cut(l.premises[0].clone(), inner, a);
            accept(t, c).map(|t| (PrincipalAnd, t))
        }
        (Rule::NegR, Rule::NegL, Formula::Neg(a)) if principal_is(l, phi) && principal_is(r, phi) => {
            let t = natural_cut(r.premises[0].clone(), l.premises[0].clone(), a);
            accept(t, c).map(|t| (PrincipalNeg, t))
        }
        _ => None,
    }
}

fn pushable(rule: &Rule) -> bool {
    !matches!(rule, Rule::Dia | Rule::Unfocus | Rule::Focus | Rule::Discharge(_) | Rule::Repeat(_) | Rule::Ax)
}

fn try_non_principal(l: &ProofTree, r: &ProofTree, phi: &Formula, c: &Sequent) -> Option<(ReductionKind, ProofTree)> {
    let fu = AnnFormula::u(phi.clone());
    // Below a cut on the same formula, one premise holds the inner cut formula.
    let inner_cut_on = |t: &ProofTree| t.rule == Rule::Cut && t.cut_formula().as_ref() == Some(phi);
    if pushable(&l.rule) {
        let skip = inner_cut_on(l).then_some(0);
        let prems: Option<Vec<ProofTree>> = l
            .premises
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if skip != Some(i) && p.sequent.right.contains(phi) {
                    Some(natural_cut(p.clone(), r.clone(), phi))
                } else {
                    let target = Sequent {
                        left: p.sequent.left.iter().chain(r.sequent.left.iter().filter(|a| **a != fu)).cloned().collect(),
                        right: p.sequent.right.union(&r.sequent.right).cloned().collect(),
                    };
                    adapt(p.clone(), &target)
                }
            })
            .collect();
        if let Some(prems) = prems {
            let t = ProofTree::new(c.clone(), l.rule.clone(), prems);
            if check_local(&t, CHECK_DEPTH).is_ok() {
                return Some((ReductionKind::NonPrincipalLeft, t));
            }
        }
    }
    if pushable(&r.rule) {
        let skip = inner_cut_on(r).then_some(1);
        let prems: Option<Vec<ProofTree>> = r
            .premises
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if skip != Some(i) && p.sequent.left.contains(&fu) {
                    Some(natural_cut(l.clone(), p.clone(), phi))
                } else {
                    let target = Sequent {
                        left: l.sequent.left.union(&p.sequent.left).cloned().collect(),
                        right: l.sequent.right.iter().filter(|f| *f != phi).chain(p.sequent.right.iter()).cloned().collect(),
                    };
                    adapt(p.clone(), &target)
                }
            })
            .collect();
        if let Some(prems) = prems {
            let t = ProofTree::new(c.clone(), r.rule.clone(), prems);
            if check_local(&t, CHECK_DEPTH).is_ok() {
                return Some((ReductionKind::NonPrincipalRight, t));
            }
        }
    }
    None
}

/// Applies one reduction to the cut at the root of `t`. Dispatch order:
/// trivial, discharge/unfocus/focus on the left, then on the right,
/// principal, non-principal left, non-principal right.
pub fn reduce_cut_tree(t: &ProofTree) -> Result<(ReductionKind, ProofTree), ReductionError> {
    if t.rule != Rule::Cut || t.premises.len() != 2 {
        return Err(ReductionError::NotACut(0));
    }
    let no_reduction = || ReductionError::NoReduction { formula: "?".into(), sequent: t.sequent.to_string() };
    let phi = t.cut_formula().ok_or_else(no_reduction)?;
    let (l, r, c) = (&t.premises[0], &t.premises[1], &t.sequent);
    try_trivial(l, r, &phi, c)
        .or_else(|| try_structural_left(l, r, &phi, c))
        .or_else(|| try_structural_right(l, r, &phi, c))
        .or_else(|| try_principal(l, r, &phi, c))
        .or_else(|| try_non_principal(l, r, &phi, c))
        .ok_or_else(|| ReductionError::NoReduction { formula: phi.to_string(), sequent: c.to_string() })
}

/// Reduces the cut at node `v` of `d` and returns the whole rewritten proof.
pub fn reduce_cut_once(d: &Derivation, v: NodeId) -> Result<ReductionStep, ReductionError> {
    if !d.rule(v).is_cut() {
        return Err(ReductionError::NotACut(v.0));
    }
    let (kind, replacement) = reduce_cut_tree(&d.subtree(v))?;
    let mut after = d.to_tree();
    *after.at_mut(&d.address(v)) = replacement;
    let mut supply = TokenSupply::for_tree(&after);
    let fresh_tokens = freshen_tokens(&mut after, &mut supply);
    Ok(ReductionStep { kind, at: v, after, fresh_tokens })
}

/// Realises the unfolding of the component of `v` up to `height_budget`
/// levels above `v`: repeat leaves in the component are replaced by copies
/// of their companions. Beyond the budget, a leaf refers back to the nearest
/// copy of its companion. Discharges left without leaves are dropped.
pub fn unfold_component(d: &Derivation, v: NodeId, height_budget: usize) -> Result<ProofTree, String> {
    if height_budget == 0 {
        return Err("height budget must be positive".into());
    }
    let info = compute_clusters(d);
    let comp = component_of(d, &info, v);
    let mut supply = TokenSupply::for_tree(&d.to_tree());
    struct Env {
        copies: HashMap<NodeId, Vec<(Token, bool)>>,
    }
    fn go(
        d: &Derivation,
        comp: &std::collections::BTreeSet<NodeId>,
        u: NodeId,
        height: usize,
        budget: usize,
        env: &mut Env,
        supply: &mut TokenSupply,
    ) -> ProofTree {
        match d.rule(u) {
            Rule::Repeat(_) => {
                let c = d.companion(u);
                if let Some(c) = c {
                    let in_comp = comp.contains(&u);
                    let bound = env.copies.get_mut(&c).and_then(|v| v.last_mut());
                    match bound {
                        Some(slot) if !in_comp || height >= budget => {
                            slot.1 = true;
                            return ProofTree::leaf(d.sequent(u).clone(), slot.0.clone());
                        }
                        _ => return go(d, comp, c, height, budget, env, supply),
                    }
                }
                d.subtree(u)
            }
            Rule::Discharge(_) => {
                let tok = supply.fresh();
                env.copies.entry(u).or_default().push((tok.clone(), false));
                let child = go(d, comp, d.children(u)[0], height + 1, budget, env, supply);
                let (tok, used) = env.copies.get_mut(&u).and_then(|v| v.pop()).expect("pushed above");
                if used {
                    ProofTree::discharge(tok, child)
                } else {
                    child
                }
            }
            rule => {
                let prems =
                    d.children(u).iter().map(|&c| go(d, comp, c, height + 1, budget, env, supply)).collect();
                ProofTree::new(d.sequent(u).clone(), rule.clone(), prems)
            }
        }
    }
    let mut env = Env { copies: HashMap::new() };
    Ok(go(d, &comp, v, 0, height_budget, &mut env, &mut supply))
}
