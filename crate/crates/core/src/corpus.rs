//! Generic cut-free lemmas and proofs composed from them with cuts.
//!
//! Lemmas prove single-formula sequents `A |- B`; composition cuts chains
//! `A |- B`, `B |- C`, ... on the shared formulas, and lifting puts whole
//! compositions under `<>` or `F`.

use std::collections::BTreeMap;

use crate::formula::{parse_formula, Formula};
use crate::proof::{freshen_tokens, ProofTree, Rule, Token, TokenSupply};
use crate::reductions::natural_cut;
use crate::sequent::{AnnFormula, Sequent};

fn s(left: &[AnnFormula], right: &[Formula]) -> Sequent {
    Sequent::new(left.iter().cloned(), right.iter().cloned())
}

fn u(f: &Formula) -> AnnFormula {
    AnnFormula::u(f.clone())
}

fn node(seq: Sequent, rule: Rule, premises: Vec<ProofTree>) -> ProofTree {
    ProofTree::new(seq, rule, premises)
}

/// Adds `extra` to the right of a proof with one weakening.
fn weak_r(t: ProofTree, extra: &Formula) -> ProofTree {
    let seq = t.sequent.clone().with_right(extra.clone());
    node(seq, Rule::WeakR, vec![t])
}

fn weak_l(t: ProofTree, extra: &Formula) -> ProofTree {
    let seq = t.sequent.clone().with_left(u(extra));
    node(seq, Rule::WeakL, vec![t])
}

/// `phi |- phi`.
pub fn identity(phi: &Formula) -> ProofTree {
    match phi {
        Formula::Atom(_) => node(s(&[u(phi)], std::slice::from_ref(phi)), Rule::Ax, vec![]),
        Formula::Neg(a) => {
            let inner = identity(a);
            let l = node(s(&[u(phi), u(a)], &[]), Rule::NegL, vec![inner]);
            node(s(&[u(phi)], std::slice::from_ref(phi)), Rule::NegR, vec![l])
        }
        Formula::And(a, b) => {
            let ia = weak_l(identity(a), b);
            let ib = weak_l(identity(b), a);
            let r = node(s(&[u(a), u(b)], std::slice::from_ref(phi)), Rule::AndR, vec![ia, ib]);
            node(s(&[u(phi)], std::slice::from_ref(phi)), Rule::AndL, vec![r])
        }
        Formula::Dia(a) => node(s(&[u(phi)], std::slice::from_ref(phi)), Rule::Dia, vec![identity(a)]),
        Formula::Ev(a) => f_lift(&identity(a)).expect("identity has one formula on each side"),
    }
}

fn single(t: &ProofTree) -> Option<(Formula, Formula)> {
    if t.sequent.left.len() != 1 || t.sequent.right.len() != 1 || t.sequent.has_focus() {
        return None;
    }
    let a = t.sequent.left.iter().next()?.formula.clone();
    let b = t.sequent.right.iter().next()?.clone();
    Some((a, b))
}

/// From `phi |- psi` build `F phi |- F psi` with a cycle through the
/// eventuality on the left.
pub fn f_lift(lemma: &ProofTree) -> Option<ProofTree> {
    let (phi, psi) = single(lemma)?;
    let (fphi, fpsi) = (phi.clone().ev(), psi.clone().ev());
    let (dfphi, dfpsi) = (fphi.clone().dia(), fpsi.clone().dia());
    let x = Token::new("x");
    let top = s(&[AnnFormula::f(fphi.clone())], std::slice::from_ref(&fpsi));
    let leaf = ProofTree::leaf(top.clone(), x.clone());
    let dia = node(s(&[AnnFormula::f(dfphi.clone())], std::slice::from_ref(&dfpsi)), Rule::Dia, vec![leaf]);
    let w = weak_r(dia, &psi);
    let step = node(s(&[AnnFormula::f(dfphi.clone())], std::slice::from_ref(&fpsi)), Rule::EvR, vec![w]);
    let base = weak_r(lemma.clone(), &dfpsi);
    let base = node(s(&[u(&phi)], std::slice::from_ref(&fpsi)), Rule::EvR, vec![base]);
    let ev = node(top, Rule::EvL, vec![step, base]);
    let d = ProofTree::discharge(x, ev);
    Some(node(s(&[u(&fphi)], &[fpsi]), Rule::Unfocus, vec![d]))
}

/// From `phi |- psi` build `<> phi |- <> psi`.
pub fn dia_lift(lemma: &ProofTree) -> Option<ProofTree> {
    let (phi, psi) = single(lemma)?;
    Some(node(s(&[u(&phi.dia())], &[psi.dia()]), Rule::Dia, vec![lemma.clone()]))
}

/// `phi |- F phi`.
pub fn ev_intro(phi: &Formula) -> ProofTree {
    let fphi = phi.clone().ev();
    let w = weak_r(identity(phi), &fphi.clone().dia());
    node(s(&[u(phi)], &[fphi]), Rule::EvR, vec![w])
}

/// `<> F phi |- F phi`.
pub fn ev_step(phi: &Formula) -> ProofTree {
    let fphi = phi.clone().ev();
    let dfphi = fphi.clone().dia();
    let w = weak_r(identity(&dfphi), phi);
    node(s(&[u(&dfphi)], &[fphi]), Rule::EvR, vec![w])
}

/// `F F phi |- F phi`.
pub fn ev_idem(phi: &Formula) -> ProofTree {
    let fphi = phi.clone().ev();
    let ffphi = fphi.clone().ev();
    let (dffphi, dfphi) = (ffphi.clone().dia(), fphi.clone().dia());
    let x = Token::new("x");
    let top = s(&[AnnFormula::f(ffphi.clone())], std::slice::from_ref(&fphi));
    let leaf = ProofTree::leaf(top.clone(), x.clone());
    let dia = node(s(&[AnnFormula::f(dffphi.clone())], std::slice::from_ref(&dfphi)), Rule::Dia, vec![leaf]);
    let w = weak_r(dia, phi);
    let step = node(s(&[AnnFormula::f(dffphi)], std::slice::from_ref(&fphi)), Rule::EvR, vec![w]);
    let ev = node(top, Rule::EvL, vec![step, identity(&fphi)]);
    let d = ProofTree::discharge(x, ev);
    node(s(&[u(&ffphi)], &[fphi]), Rule::Unfocus, vec![d])
}

/// `phi |- ~~phi`.
pub fn dneg_intro(phi: &Formula) -> ProofTree {
    let n = phi.clone().neg();
    let l = node(s(&[u(&n), u(phi)], &[]), Rule::NegL, vec![identity(phi)]);
    node(s(&[u(phi)], &[n.neg()]), Rule::NegR, vec![l])
}

/// `~~phi |- phi`.
pub fn dneg_elim(phi: &Formula) -> ProofTree {
    let n = phi.clone().neg();
    let r = node(s(&[], &[phi.clone(), n.clone()]), Rule::NegR, vec![identity(phi)]);
    node(s(&[u(&n.neg())], std::slice::from_ref(phi)), Rule::NegL, vec![r])
}

/// `(a & b) |- a`.
pub fn and_elim(a: &Formula, b: &Formula) -> ProofTree {
    let w = weak_l(identity(a), b);
    node(s(&[u(&a.clone().and(b.clone()))], std::slice::from_ref(a)), Rule::AndL, vec![w])
}

/// `(a & b) |- (b & a)`.
pub fn and_comm(a: &Formula, b: &Formula) -> ProofTree {
    let ba = b.clone().and(a.clone());
    let r = node(s(&[u(a), u(b)], std::slice::from_ref(&ba)), Rule::AndR, vec![weak_l(identity(b), a), weak_l(identity(a), b)]);
    node(s(&[u(&a.clone().and(b.clone()))], &[ba]), Rule::AndL, vec![r])
}

/// From `chi |- <> F psi` build `F chi |- F psi` whose cycle runs through
/// a cut on `<> F psi`.
pub fn cyclic_cut_lift(lemma: &ProofTree, psi: &Formula) -> Option<ProofTree> {
    let (chi, dfpsi) = single(lemma)?;
    let fpsi = psi.clone().ev();
    if dfpsi != fpsi.clone().dia() {
        return None;
    }
    let fchi = chi.clone().ev();
    let dfchi = fchi.clone().dia();
    let x = Token::new("x");
    let top = s(&[AnnFormula::f(fchi.clone())], std::slice::from_ref(&fpsi));
    let leaf = ProofTree::leaf(top.clone(), x.clone());
    let dia = node(s(&[AnnFormula::f(dfchi)], std::slice::from_ref(&dfpsi)), Rule::Dia, vec![leaf]);
    let left = node(s(&[AnnFormula::f(fchi.clone())], std::slice::from_ref(&dfpsi)), Rule::EvL, vec![dia, lemma.clone()]);
    let cut = node(top, Rule::Cut, vec![left, ev_step(psi)]);
    let d = ProofTree::discharge(x, cut);
    Some(node(s(&[u(&fchi)], &[fpsi]), Rule::Unfocus, vec![d]))
}

fn f(text: &str) -> Formula {
    parse_formula(text).expect("library formula")
}

fn fixed(name: &str, doc: &str) -> (String, ProofTree) {
    (name.to_string(), crate::text::parse_proof_document(doc).expect("library proof"))
}

const SHIFT_DIA: &str = r#"gke-1
(rule unfocus "F <> <> p |- F <> p"
  (discharge x "F <> <> p ^f |- F <> p"
    (rule ev-r "F <> <> p ^f |- F <> p"
      (rule ev-l "F <> <> p ^f |- <> p, <> F <> p"
        (rule weak-r "<> F <> <> p ^f |- <> p, <> F <> p"
          (rule dia "<> F <> <> p ^f |- <> F <> p"
            (leaf x "F <> <> p ^f |- F <> p")))
        (rule weak-r "<> <> p |- <> p, <> F <> p"
          (rule dia "<> <> p |- <> F <> p"
            (rule ev-r "<> p |- F <> p"
              (rule weak-r "<> p |- <> p, <> F <> p"
                (rule dia "<> p |- <> p"
                  (ax "p |- p"))))))))))
"#;

const DROP_DIA: &str = r#"gke-1
(rule unfocus "F <> p |- F p"
  (discharge y "F <> p ^f |- F p"
    (rule ev-r "F <> p ^f |- F p"
      (rule ev-l "F <> p ^f |- p, <> F p"
        (rule weak-r "<> F <> p ^f |- p, <> F p"
          (rule dia "<> F <> p ^f |- <> F p"
            (leaf y "F <> p ^f |- F p")))
        (rule weak-r "<> p |- p, <> F p"
          (rule dia "<> p |- <> F p"
            (rule ev-r "p |- F p"
              (rule weak-r "p |- p, <> F p"
                (ax "p |- p")))))))))
"#;

/// Cut-free lemmas with one formula on each side.
pub fn lemma_library() -> Vec<(String, ProofTree)> {
    let (p, q) = (f("p"), f("q"));
    let fp = f("F p");
    let mut lib = vec![
        ("id_p".to_string(), identity(&p)),
        ("id_Fp".to_string(), identity(&fp)),
        ("id_F<>p".to_string(), identity(&f("F <> p"))),
        ("ev_intro_p".to_string(), ev_intro(&p)),
        ("ev_intro_Fp".to_string(), ev_intro(&fp)),
        ("ev_intro_<>p".to_string(), ev_intro(&f("<> p"))),
        ("ev_step_p".to_string(), ev_step(&p)),
        ("ev_idem_p".to_string(), ev_idem(&p)),
        ("dneg_intro_p".to_string(), dneg_intro(&p)),
        ("dneg_elim_p".to_string(), dneg_elim(&p)),
        ("dneg_intro_Fp".to_string(), dneg_intro(&fp)),
        ("dneg_elim_Fp".to_string(), dneg_elim(&fp)),
        ("and_elim_pq".to_string(), and_elim(&p, &q)),
        ("and_comm_pq".to_string(), and_comm(&p, &q)),
        ("and_elim_qp".to_string(), and_elim(&q, &p)),
        ("and_elim_Fpq".to_string(), and_elim(&fp, &q)),
    ];
    lib.push(fixed("shift_dia", SHIFT_DIA));
    lib.push(fixed("drop_dia", DROP_DIA));
    let lifted: Vec<(String, ProofTree)> = [
        ("ev_intro_p", ev_intro(&p)),
        ("dneg_intro_p", dneg_intro(&p)),
        ("dneg_elim_p", dneg_elim(&p)),
        ("and_elim_pq", and_elim(&p, &q)),
    ]
    .into_iter()
    .flat_map(|(name, t)| {
        [
            (format!("F({name})"), f_lift(&t).expect("single")),
            (format!("<>({name})"), dia_lift(&t).expect("single")),
        ]
    })
    .collect();
    lib.extend(lifted);
    lib.push(("<>(ev_idem_p)".to_string(), dia_lift(&ev_idem(&p)).expect("single")));
    lib.push(("<>(ev_step_p)".to_string(), dia_lift(&ev_step(&p)).expect("single")));
    lib.into_iter().map(|(n, t)| (n, finish(t))).collect()
}

/// Cuts `l |- b` and `b |- r` on `b`.
pub fn compose(l: &ProofTree, r: &ProofTree) -> Option<ProofTree> {
    let (_, b) = single(l)?;
    let (b2, _) = single(r)?;
    (b == b2).then(|| natural_cut(l.clone(), r.clone(), &b))
}

fn finish(mut t: ProofTree) -> ProofTree {
    let mut supply = TokenSupply::for_tree(&t);
    freshen_tokens(&mut t, &mut supply);
    t
}

/// Deterministic corpus of proofs containing cuts.
pub fn composed_corpus() -> Vec<(String, ProofTree)> {
    let lib = lemma_library();
    let mut by_left: BTreeMap<Formula, Vec<usize>> = BTreeMap::new();
    for (i, (_, t)) in lib.iter().enumerate() {
        if let Some((a, _)) = single(t) {
            by_left.entry(a).or_default().push(i);
        }
    }
    let next = |t: &ProofTree| -> Vec<usize> {
        single(t).and_then(|(_, b)| by_left.get(&b).cloned()).unwrap_or_default()
    };
    let mut out: Vec<(String, ProofTree)> = Vec::new();
    let p = f("p");
    for (i, (ni, ti)) in lib.iter().enumerate() {
        if let Some(t) = cyclic_cut_lift(&dia_lift(ti).unwrap_or_else(|| ti.clone()), &p) {
            out.push((format!("cyc[{ni}]"), finish(t)));
        }
        for j in next(ti) {
            let (nj, tj) = &lib[j];
            let Some(c2) = compose(ti, tj) else { continue };
            out.push((format!("{ni};{nj}"), finish(c2.clone())));
            if i % 3 == 0 {
                if let Some(t) = f_lift(&c2) {
                    out.push((format!("F({ni};{nj})"), finish(t)));
                }
            }
            if i % 3 == 1 {
                if let Some(t) = dia_lift(&c2) {
                    out.push((format!("<>({ni};{nj})"), finish(t)));
                }
            }
            for k in next(tj) {
                let (nk, tk) = &lib[k];
                let name = format!("{ni};{nj};{nk}");
                let t = if (i + j + k) % 2 == 0 {
                    compose(&c2, tk)
                } else {
                    compose(tj, tk).and_then(|r| compose(ti, &r))
                };
                if let Some(t) = t {
                    out.push((name, finish(t)));
                }
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|(n, _)| seen.insert(n.clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::check_proof;

    #[test]
    fn library_is_accepted_and_cut_free() {
        let lib = lemma_library();
        assert!(lib.len() >= 12);
        for (name, t) in &lib {
            let r = check_proof(t);
            assert!(r.accepted, "{name}: {:?}", r.violations);
            assert_eq!(t.cut_count(), 0, "{name}");
        }
    }

    #[test]
    fn corpus_is_accepted() {
        let corpus = composed_corpus();
        assert!(corpus.len() >= 100, "only {} proofs", corpus.len());
        for (name, t) in &corpus {
            let r = check_proof(t);
            assert!(r.accepted, "{name}: {:?}", r.violations);
            assert!(t.cut_count() > 0, "{name}");
        }
    }
}
