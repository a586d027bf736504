//! Local correctness of a single rule application.
//!
//! Sequents are sets, so a formula of the context may coincide with a
//! principal or designated formula. The check therefore works on sets: every
//! formula that has to be carried over is present on both sides, and nothing
//! else appears. The principal formula is not stored in the proof; it is
//! inferred by trying every candidate.

use std::collections::BTreeSet;

use crate::formula::Formula;
use crate::proof::Rule;
use crate::sequent::{AnnFormula, Sequent};

/// Principal formula of a rule application, if the application is valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Principal {
    None,
    Left(AnnFormula),
    Right(Formula),
    Cut(Formula),
}

fn context<T: Ord + Clone + std::fmt::Display>(
    concl: &BTreeSet<T>,
    principal: &[T],
    prems: &[(&BTreeSet<T>, Vec<T>)],
) -> Result<(), String> {
    for p in principal {
        if !concl.contains(p) {
            return Err(format!("principal formula {p} missing from conclusion"));
        }
    }
    for (i, (pr, des)) in prems.iter().enumerate() {
        for d in des {
            if !pr.contains(d) {
                return Err(format!("formula {d} missing from premise {}", i + 1));
            }
        }
    }
    let mut lower: BTreeSet<&T> = concl.iter().filter(|x| !principal.contains(x)).collect();
    for (pr, des) in prems {
        lower.extend(pr.iter().filter(|x| !des.contains(x)));
    }
    for x in lower {
        if !concl.contains(x) {
            return Err(format!("formula {x} of a premise missing from conclusion"));
        }
        for (i, (pr, _)) in prems.iter().enumerate() {
            if !pr.contains(x) {
                return Err(format!("side formula {x} missing from premise {}", i + 1));
            }
        }
    }
    Ok(())
}

fn same_right(c: &Sequent, prems: &[&Sequent]) -> Result<(), String> {
    let ps: Vec<_> = prems.iter().map(|p| (&p.right, vec![])).collect();
    context(&c.right, &[], &ps)
}

fn same_left(c: &Sequent, prems: &[&Sequent]) -> Result<(), String> {
    let ps: Vec<_> = prems.iter().map(|p| (&p.left, vec![])).collect();
    context(&c.left, &[], &ps)
}

fn candidates(rule: &Rule, c: &Sequent, prems: &[&Sequent]) -> Vec<Principal> {
    let left = |pred: &dyn Fn(&AnnFormula) -> bool| -> Vec<Principal> {
        c.left.iter().filter(|a| pred(a)).cloned().map(Principal::Left).collect()
    };
    let right = |pred: &dyn Fn(&Formula) -> bool| -> Vec<Principal> {
        c.right.iter().filter(|f| pred(f)).cloned().map(Principal::Right).collect()
    };
    match rule {
        Rule::AndL => left(&|a| !a.is_focused() && matches!(a.formula, Formula::And(..))),
        Rule::AndR => right(&|f| matches!(f, Formula::And(..))),
        Rule::EvL => {
            let mut out = left(&|a| a.is_focused() && a.formula.is_ev());
            out.extend(left(&|a| !a.is_focused() && a.formula.is_ev()));
            out
        }
        Rule::EvR => right(&|f| f.is_ev()),
        Rule::NegL => left(&|a| !a.is_focused() && matches!(a.formula, Formula::Neg(_))),
        Rule::NegR => right(&|f| matches!(f, Formula::Neg(_))),
        Rule::WeakL => {
            let mut out = left(&|a| !a.is_focused() && !prems.first().is_some_and(|p| p.left.contains(a)));
            out.extend(left(&|a| !a.is_focused() && prems.first().is_some_and(|p| p.left.contains(a))));
            out
        }
        Rule::WeakR => {
            let mut out = right(&|f| !prems.first().is_some_and(|p| p.right.contains(f)));
            out.extend(right(&|f| prems.first().is_some_and(|p| p.right.contains(f))));
            out
        }
        Rule::Focus => left(&|a| a.is_focused()),
        Rule::Unfocus => left(&|a| !a.is_focused() && a.formula.is_focusable()),
        Rule::Cut => match prems {
            [l, r] => l
                .right
                .iter()
                .filter(|f| r.left.contains(&AnnFormula::u((*f).clone())))
                .cloned()
                .map(Principal::Cut)
                .collect(),
            _ => vec![],
        },
        Rule::Dia => c.left.iter().take(1).cloned().map(Principal::Left).collect(),
        Rule::Ax | Rule::Discharge(_) | Rule::Repeat(_) => vec![Principal::None],
    }
}

/// Checks one application of `rule` with the given principal formula.
pub fn check_with(rule: &Rule, c: &Sequent, prems: &[&Sequent], principal: &Principal) -> Result<(), String> {
    if prems.len() != rule.arity() {
        return Err(format!("rule {} expects {} premises, found {}", rule.name(), rule.arity(), prems.len()));
    }
    use Principal as P;
    match (rule, principal) {
        (Rule::Ax, P::None) => {
            let ok = c.left.len() == 1
                && c.right.len() == 1
                && matches!(c.right.first(), Some(Formula::Atom(_)))
                && c.left.first() == Some(&AnnFormula::u(c.right.first().unwrap().clone()));
            if ok {
                Ok(())
            } else {
                Err("axiom must have the shape p |- p for an atom p".into())
            }
        }
        (Rule::Dia, P::Left(a)) => {
            let Some(inner) = a.formula.as_dia() else {
                return Err(format!("left formula {} of a modal step is not a diamond", a.formula));
            };
            if c.left.len() != 1 {
                return Err("modal step needs exactly one formula on the left of the conclusion".into());
            }
            let p = prems[0];
            let expect_left: BTreeSet<_> = [AnnFormula::new(inner.clone(), a.ann)].into();
            if p.left != expect_left {
                return Err(format!("premise left side must be exactly {}", AnnFormula::new(inner.clone(), a.ann)));
            }
            let expect_right: BTreeSet<_> = p.right.iter().map(|f| f.clone().dia()).collect();
            if c.right != expect_right {
                return Err("conclusion right side must be the diamonds of the premise right side".into());
            }
            Ok(())
        }
        (Rule::AndL, P::Left(a)) => {
            let Formula::And(x, y) = &a.formula else { return Err("not a conjunction".into()) };
            context(&c.left, std::slice::from_ref(a), &[(&prems[0].left, vec![AnnFormula::u((**x).clone()), AnnFormula::u((**y).clone())])])?;
            same_right(c, prems)
        }
        (Rule::AndR, P::Right(f)) => {
            let Formula::And(x, y) = f else { return Err("not a conjunction".into()) };
            same_left(c, prems)?;
            context(&c.right, std::slice::from_ref(f), &[(&prems[0].right, vec![(**x).clone()]), (&prems[1].right, vec![(**y).clone()])])
        }
        (Rule::EvL, P::Left(a)) => {
            let Some(inner) = a.formula.as_ev() else { return Err("not an eventuality".into()) };
            let step = AnnFormula::new(a.formula.clone().dia(), a.ann);
            context(
                &c.left,
                std::slice::from_ref(a),
                &[(&prems[0].left, vec![step]), (&prems[1].left, vec![AnnFormula::u(inner.clone())])],
            )?;
            same_right(c, prems)
        }
        (Rule::EvR, P::Right(f)) => {
            let Some(inner) = f.as_ev() else { return Err("not an eventuality".into()) };
            same_left(c, prems)?;
            context(&c.right, std::slice::from_ref(f), &[(&prems[0].right, vec![inner.clone(), f.clone().dia()])])
        }
        (Rule::NegL, P::Left(a)) => {
            let Formula::Neg(x) = &a.formula else { return Err("not a negation".into()) };
            context(&c.left, std::slice::from_ref(a), &[(&prems[0].left, vec![])])?;
            context(&c.right, &[], &[(&prems[0].right, vec![(**x).clone()])])
        }
        (Rule::NegR, P::Right(f)) => {
            let Formula::Neg(x) = f else { return Err("not a negation".into()) };
            context(&c.left, &[], &[(&prems[0].left, vec![AnnFormula::u((**x).clone())])])?;
            context(&c.right, std::slice::from_ref(f), &[(&prems[0].right, vec![])])
        }
        (Rule::WeakL, P::Left(a)) => {
            context(&c.left, std::slice::from_ref(a), &[(&prems[0].left, vec![])])?;
            same_right(c, prems)
        }
        (Rule::WeakR, P::Right(f)) => {
            same_left(c, prems)?;
            context(&c.right, std::slice::from_ref(f), &[(&prems[0].right, vec![])])
        }
        (Rule::Focus, P::Left(a)) => {
            if prems[0].has_focus() {
                return Err("premise of a focus step must have no formula in focus".into());
            }
            context(&c.left, std::slice::from_ref(a), &[(&prems[0].left, vec![a.unfocused()])])?;
            same_right(c, prems)
        }
        (Rule::Unfocus, P::Left(a)) => {
            let focused = AnnFormula::f(a.formula.clone());
            context(&c.left, std::slice::from_ref(a), &[(&prems[0].left, vec![focused])])?;
            same_right(c, prems)
        }
        (Rule::Cut, P::Cut(f)) => {
            let (l, r) = (prems[0], prems[1]);
            let fu = AnnFormula::u(f.clone());
            if !l.right.contains(f) || !r.left.contains(&fu) {
                return Err(format!("cut formula {f} not found in the premises"));
            }
            let lower_l: BTreeSet<_> = l.left.iter().chain(r.left.iter().filter(|x| **x != fu)).cloned().collect();
            let upper_l: BTreeSet<_> = l.left.union(&r.left).cloned().collect();
            let lower_r: BTreeSet<_> = l.right.iter().filter(|x| *x != f).chain(r.right.iter()).cloned().collect();
            let upper_r: BTreeSet<_> = l.right.union(&r.right).cloned().collect();
            if !lower_l.is_subset(&c.left) || !c.left.is_subset(&upper_l) {
                return Err("left side of the conclusion does not match the cut premises".into());
            }
            if !lower_r.is_subset(&c.right) || !c.right.is_subset(&upper_r) {
                return Err("right side of the conclusion does not match the cut premises".into());
            }
            Ok(())
        }
        (Rule::Discharge(_), P::None) => {
            if prems[0] != c {
                return Err("discharge premise must equal its conclusion".into());
            }
            Ok(())
        }
        (Rule::Repeat(_), P::None) => Ok(()),
        _ => Err("principal formula does not fit the rule".into()),
    }
}

/// Validates one rule application and returns the inferred principal.
pub fn check_rule(rule: &Rule, c: &Sequent, prems: &[&Sequent]) -> Result<Principal, String> {
    if let Some(v) = c.shape_violation() {
        return Err(v);
    }
    if prems.len() != rule.arity() {
        return Err(format!("rule {} expects {} premises, found {}", rule.name(), rule.arity(), prems.len()));
    }
    let cands = candidates(rule, c, prems);
    let mut first_err = None;
    for cand in cands {
        match check_with(rule, c, prems, &cand) {
            Ok(()) => return Ok(cand),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| format!("no principal formula fits rule {}", rule.name())))
}

/// Principal formula (plain) of a valid application.
pub fn principal(rule: &Rule, c: &Sequent, prems: &[&Sequent]) -> Option<Formula> {
    match check_rule(rule, c, prems).ok()? {
        Principal::None => None,
        Principal::Left(a) => Some(a.formula),
        Principal::Right(f) | Principal::Cut(f) => Some(f),
    }
}

/// `true` if the application is a valid `ev-l` step with a focused principal.
pub fn is_focused_ev_l(rule: &Rule, c: &Sequent, prems: &[&Sequent]) -> bool {
    rule == &Rule::EvL
        && candidates(rule, c, prems).into_iter().any(|cand| {
            matches!(&cand, Principal::Left(a) if a.is_focused()) && check_with(rule, c, prems, &cand).is_ok()
        })
}

/// Whether `principal` is an admissible reading of the application.
pub fn admits_principal(rule: &Rule, c: &Sequent, prems: &[&Sequent], principal: &Formula) -> bool {
    candidates(rule, c, prems).into_iter().any(|cand| {
        let f = match &cand {
            Principal::None => return false,
            Principal::Left(a) => &a.formula,
            Principal::Right(f) | Principal::Cut(f) => f,
        };
        f == principal && check_with(rule, c, prems, &cand).is_ok()
    })
}
