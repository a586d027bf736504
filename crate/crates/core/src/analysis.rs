//! Analyses on the proof tree with back edges: clusters, depth, components,
//! minimal focus, descendants and cut classification.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::formula::{Formula, Rank};
use crate::proof::{Derivation, NodeId, ProofTree, Rule};
use crate::rules::{self, Principal};
use crate::sequent::{AnnFormula, Annotation, Sequent};

#[derive(Clone, Debug)]
pub struct GraphInfo {
    /// Cluster id of every node. Ids are ordered by smallest member.
    pub cluster_of: Vec<usize>,
    pub clusters: Vec<Vec<NodeId>>,
    /// Cluster ids in the order Tarjan's algorithm closes them: every
    /// cluster appears after all clusters reachable from it.
    pub sink_first: Vec<usize>,
    /// Depth of each nontrivial cluster (0 for trivial ones).
    pub cluster_depth: Vec<u32>,
    pub depth_of: Vec<u32>,
}

impl GraphInfo {
    pub fn is_nontrivial(&self, c: usize) -> bool {
        self.clusters[c].len() > 1
    }

    pub fn in_nontrivial(&self, v: NodeId) -> bool {
        self.is_nontrivial(self.cluster_of[v.0])
    }

    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth_of[v.0]
    }

    pub fn nontrivial_count(&self) -> usize {
        (0..self.clusters.len()).filter(|&c| self.is_nontrivial(c)).count()
    }

    /// Lowest (root-most) node of a cluster.
    pub fn cluster_root(&self, c: usize) -> NodeId {
        self.clusters[c][0]
    }
}

/// Strongly connected components of the proof tree with back edges,
/// computed with an iterative Tarjan search.
pub fn compute_clusters(d: &Derivation) -> GraphInfo {
    let n = d.len();
    let succ: Vec<Vec<usize>> = d.ids().map(|v| d.successors(v).into_iter().map(|u| u.0).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        index[start] = counter;
        low[start] = counter;
        counter += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    // renumber by smallest member
    let mut by_min: Vec<usize> = (0..comps.len()).collect();
    by_min.sort_by_key(|&i| comps[i][0]);
    let mut rename = vec![0; comps.len()];
    for (new, &old) in by_min.iter().enumerate() {
        rename[old] = new;
    }
    let sink_first: Vec<usize> = (0..comps.len()).map(|i| rename[i]).collect();
    let clusters: Vec<Vec<NodeId>> = by_min.iter().map(|&i| comps[i].iter().map(|&v| NodeId(v)).collect()).collect();
    let mut cluster_of = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for v in members {
            cluster_of[v.0] = c;
        }
    }
    let k = clusters.len();
    let mut reach = vec![0u32; k];
    let mut cluster_depth = vec![0u32; k];
    for &c in &sink_first {
        let mut below = 0;
        for v in &clusters[c] {
            for &w in &succ[v.0] {
                let cw = cluster_of[w];
                if cw != c {
                    below = below.max(reach[cw]);
                }
            }
        }
        if clusters[c].len() > 1 {
            cluster_depth[c] = below + 1;
            reach[c] = below + 1;
        } else {
            reach[c] = below;
        }
    }
    let depth_of = cluster_of.iter().map(|&c| reach[c]).collect();
    GraphInfo { cluster_of, clusters, sink_first, cluster_depth, depth_of }
}

/// Nodes reachable from `v` with the same depth as `v`.
pub fn component_of(d: &Derivation, info: &GraphInfo, v: NodeId) -> BTreeSet<NodeId> {
    let dv = info.depth(v);
    let mut seen = BTreeSet::from([v]);
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        for w in d.successors(u) {
            if info.depth(w) == dv && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

fn connect(expected: &Sequent, actual: ProofTree, boundary: bool) -> ProofTree {
    let mut t = actual;
    let exp_focus = expected.focus().cloned();
    let act_focus = t.sequent.focus().cloned();
    if !boundary && exp_focus == act_focus {
        return t;
    }
    if act_focus.is_some() && (exp_focus.is_none() || exp_focus != act_focus || boundary) {
        t = ProofTree::new(t.sequent.unfocused(), Rule::Unfocus, vec![t]);
    }
    if exp_focus.is_some() && !t.sequent.has_focus() {
        t = ProofTree::new(expected.clone(), Rule::Focus, vec![t]);
    }
    t
}

/// Rebuilds a proof so that focus is confined to nontrivial clusters, with
/// `focus` rules where a focused premise leaves a cluster and `unfocus`
/// rules only directly above discharge rules.
pub fn minimally_focus(d: &Derivation) -> ProofTree {
    let info = compute_clusters(d);
    fn skip(d: &Derivation, mut v: NodeId) -> NodeId {
        while matches!(d.rule(v), Rule::Focus | Rule::Unfocus) {
            v = d.children(v)[0];
        }
        v
    }
    fn build(d: &Derivation, info: &GraphInfo, v: NodeId) -> ProofTree {
        let keep = info.in_nontrivial(v);
        let seq = if keep { d.sequent(v).clone() } else { d.sequent(v).unfocused() };
        let premises = d
            .children(v)
            .iter()
            .map(|&c| {
                let top = d.sequent(c);
                let expected = if keep { top.clone() } else { top.unfocused() };
                let core = skip(d, c);
                let boundary = expected.has_focus() && info.depth(core) < info.depth(v);
                connect(&expected, build(d, info, core), boundary)
            })
            .collect();
        ProofTree::new(seq, d.rule(v).clone(), premises)
    }
    let root = d.root();
    let core = skip(d, root);
    let body = build(d, &info, core);
    connect(d.sequent(root), body, false)
}

/// Violations of the minimal-focus clauses: an `unfocus` whose premise is not
/// a discharge, or a focused child of smaller depth that is not `focus`.
pub fn minimal_focus_violations(d: &Derivation) -> Vec<String> {
    let info = compute_clusters(d);
    let mut out = Vec::new();
    for v in d.ids() {
        if d.rule(v) == &Rule::Unfocus && !matches!(d.rule(d.children(v)[0]), Rule::Discharge(_)) {
            out.push(format!("unfocus at node {} is not directly below a discharge", v.0));
        }
        for &c in d.children(v) {
            if info.depth(c) < info.depth(v) && d.sequent(c).has_focus() && d.rule(c) != &Rule::Focus {
                out.push(format!("node {} leaves the component of node {} in focus", c.0, v.0));
            }
        }
    }
    out
}

pub fn is_minimally_focused(d: &Derivation) -> bool {
    minimal_focus_violations(d).is_empty()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub node: NodeId,
    pub side: Side,
    pub formula: Formula,
    /// Annotation of a left occurrence; right occurrences are always `Unfocused`.
    pub ann: Annotation,
}

impl Occurrence {
    pub fn left(node: NodeId, a: &AnnFormula) -> Self {
        Occurrence { node, side: Side::Left, formula: a.formula.clone(), ann: a.ann }
    }

    pub fn right(node: NodeId, f: &Formula) -> Self {
        Occurrence { node, side: Side::Right, formula: f.clone(), ann: Annotation::Unfocused }
    }

    pub fn is_present(&self, d: &Derivation) -> bool {
        let s = d.sequent(self.node);
        match self.side {
            Side::Left => s.left.contains(&AnnFormula::new(self.formula.clone(), self.ann)),
            Side::Right => s.right.contains(&self.formula),
        }
    }
}

fn principal_at(d: &Derivation, v: NodeId) -> Principal {
    let prems: Vec<_> = d.children(v).iter().map(|&c| d.sequent(c)).collect();
    rules::check_rule(d.rule(v), d.sequent(v), &prems).unwrap_or(Principal::None)
}

/// Designated formulas in premise `i` for a principal occurrence.
fn designated(rule: &Rule, occ: &Occurrence, i: usize, child: NodeId) -> Vec<Occurrence> {
    let f = &occ.formula;
    let l = |g: Formula, ann: Annotation| Occurrence { node: child, side: Side::Left, formula: g, ann };
    let r = |g: Formula| Occurrence::right(child, &g);
    match (rule, f, occ.side) {
        (Rule::AndL, Formula::And(a, b), Side::Left) => {
            vec![l((**a).clone(), Annotation::Unfocused), l((**b).clone(), Annotation::Unfocused)]
        }
        (Rule::AndR, Formula::And(a, b), Side::Right) => vec![r(if i == 0 { (**a).clone() } else { (**b).clone() })],
        (Rule::EvL, Formula::Ev(a), Side::Left) => {
            if i == 0 {
                vec![l(f.clone().dia(), occ.ann)]
            } else {
                vec![l((**a).clone(), Annotation::Unfocused)]
            }
        }
        (Rule::EvR, Formula::Ev(a), Side::Right) => vec![r((**a).clone()), r(f.clone().dia())],
        (Rule::NegL, Formula::Neg(a), Side::Left) => vec![r((**a).clone())],
        (Rule::NegR, Formula::Neg(a), Side::Right) => vec![l((**a).clone(), Annotation::Unfocused)],
        (Rule::Dia, Formula::Dia(a), Side::Left) => vec![l((**a).clone(), occ.ann)],
        (Rule::Dia, Formula::Dia(a), Side::Right) => vec![r((**a).clone())],
        (Rule::Focus, _, Side::Left) => vec![l(f.clone(), Annotation::Unfocused)],
        (Rule::Unfocus, _, Side::Left) => vec![l(f.clone(), Annotation::Focused)],
        _ => vec![],
    }
}

/// Immediate descendants of an occurrence in the premises of its node.
/// A principal occurrence only continues into its designated formulas.
pub fn immediate_descendants(d: &Derivation, occ: &Occurrence) -> Vec<Occurrence> {
    let v = occ.node;
    let rule = d.rule(v);
    let is_principal = match (principal_at(d, v), occ.side) {
        (Principal::Left(a), Side::Left) => a.formula == occ.formula && a.ann == occ.ann,
        (Principal::Right(f), Side::Right) => f == occ.formula,
        _ => rule == &Rule::Dia,
    };
    let mut out = Vec::new();
    for (i, &c) in d.children(v).iter().enumerate() {
        if is_principal {
            out.extend(designated(rule, occ, i, c).into_iter().filter(|o| o.is_present(d)));
        } else {
            let same = Occurrence { node: c, ..occ.clone() };
            if same.is_present(d) {
                out.push(same);
            }
        }
    }
    out
}

/// All descendants (including the occurrence itself) along tree edges.
pub fn descendants(d: &Derivation, occ: &Occurrence) -> BTreeSet<Occurrence> {
    let mut seen = BTreeSet::from([occ.clone()]);
    let mut queue = VecDeque::from([occ.clone()]);
    while let Some(o) = queue.pop_front() {
        for next in immediate_descendants(d, &o) {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

pub fn component_descendants(d: &Derivation, info: &GraphInfo, occ: &Occurrence) -> BTreeSet<Occurrence> {
    let comp = component_of(d, info, occ.node);
    descendants(d, occ).into_iter().filter(|o| comp.contains(&o.node)).collect()
}

/// Occurrences of the cut formula in the two premises of a cut.
pub fn cut_formula_occurrences(d: &Derivation, v: NodeId) -> Vec<Occurrence> {
    let Some(f) = d.cut_formula(v) else { return vec![] };
    let [l, r] = [d.children(v)[0], d.children(v)[1]];
    vec![Occurrence::right(l, &f), Occurrence { node: r, side: Side::Left, formula: f, ann: Annotation::Unfocused }]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutClass {
    Important,
    Unimportant,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("node {0} is not a cut")]
    NotACut(usize),
    #[error("cut at node {0} is not important")]
    NotImportant(usize),
}

pub fn classify_cut(d: &Derivation, v: NodeId) -> Result<CutClass, AnalysisError> {
    if !d.rule(v).is_cut() {
        return Err(AnalysisError::NotACut(v.0));
    }
    Ok(if d.sequent(v).has_focus() { CutClass::Unimportant } else { CutClass::Important })
}

pub fn is_critical(d: &Derivation, v: NodeId) -> Result<bool, AnalysisError> {
    if classify_cut(d, v)? != CutClass::Important {
        return Err(AnalysisError::NotImportant(v.0));
    }
    Ok(d.cut_formula(v).is_some_and(|f| f.is_ev()))
}

pub fn cut_rank_at(d: &Derivation, v: NodeId) -> Option<Rank> {
    d.cut_formula(v).map(|f| f.rank())
}

/// `None` for a cut-free derivation.
pub fn cut_rank_of(d: &Derivation) -> Option<Rank> {
    d.cut_nodes().into_iter().filter_map(|v| cut_rank_at(d, v)).max()
}

pub fn tree_cut_rank(t: &ProofTree) -> Option<Rank> {
    cut_rank_of(&Derivation::from_tree(t))
}

#[derive(Clone, Debug, Serialize)]
pub struct CutInfo {
    pub node: usize,
    pub formula: String,
    pub rank: u32,
    pub class: CutClass,
    pub critical: bool,
    pub cluster: usize,
    pub depth: u32,
}

pub fn cut_infos(d: &Derivation, info: &GraphInfo) -> Vec<CutInfo> {
    d.cut_nodes()
        .into_iter()
        .map(|v| {
            let class = classify_cut(d, v).expect("cut node");
            let formula = d.cut_formula(v);
            CutInfo {
                node: v.0,
                formula: formula.as_ref().map_or_else(|| "?".into(), |f| f.to_string()),
                rank: formula.as_ref().map_or(0, |f| f.rank().0),
                class,
                critical: class == CutClass::Important && formula.as_ref().is_some_and(|f| f.is_ev()),
                cluster: info.cluster_of[v.0],
                depth: info.depth(v),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_proof_document;

    const CYCLE: &str = r#"gke-1
(rule unfocus "F p |- F p"
  (discharge x "F p ^f |- F p"
    (rule ev-l "F p ^f |- F p"
      (rule ev-r "<> F p ^f |- F p"
        (rule weak-r "<> F p ^f |- p, <> F p"
          (rule dia "<> F p ^f |- <> F p" (leaf x "F p ^f |- F p"))))
      (rule ev-r "p |- F p" (rule weak-r "p |- p, <> F p" (ax "p |- p"))))))
"#;

    #[test]
    fn clusters_and_depth() {
        let d = Derivation::from_tree(&parse_proof_document(CYCLE).unwrap());
        let info = compute_clusters(&d);
        assert_eq!(info.nontrivial_count(), 1);
        let c = info.cluster_of[1];
        assert_eq!(info.clusters[c], (1..=6).map(NodeId).collect::<Vec<_>>());
        assert_eq!(info.depth(NodeId(0)), 1);
        assert_eq!(info.depth(NodeId(1)), 1);
        assert_eq!(info.depth(NodeId(7)), 0);
        assert!(component_of(&d, &info, NodeId(0)).contains(&NodeId(6)));
        assert!(!component_of(&d, &info, NodeId(0)).contains(&NodeId(7)));
    }

    #[test]
    fn minimal_focus_is_stable_here() {
        let t = parse_proof_document(CYCLE).unwrap();
        let d = Derivation::from_tree(&t);
        assert!(is_minimally_focused(&d));
        assert_eq!(minimally_focus(&d), t);
    }

    #[test]
    fn gratuitous_unfocus_removed() {
        let src = r#"gke-1
(rule unfocus "F q, p |- p" (rule focus "F q ^f, p |- p" (rule weak-l "F q, p |- p" (ax "p |- p"))))
"#;
        let t = parse_proof_document(src).unwrap();
        let m = minimally_focus(&Derivation::from_tree(&t));
        assert_eq!(m.rule, Rule::WeakL);
        assert_eq!(m.size(), 2);
    }

    #[test]
    fn descendants_follow_designated_formulas() {
        let d = Derivation::from_tree(&parse_proof_document(CYCLE).unwrap());
        // ev-r at node 8 on F p
        let occ = Occurrence::right(NodeId(7), &Formula::atom("p").ev());
        let desc = descendants(&d, &occ);
        assert!(desc.contains(&Occurrence::right(NodeId(8), &Formula::atom("p"))));
        assert!(desc.contains(&Occurrence::right(NodeId(8), &Formula::atom("p").ev().dia())));
        assert!(!desc.contains(&Occurrence::right(NodeId(8), &Formula::atom("p").ev())));
    }
}
