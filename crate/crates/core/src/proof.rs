//! Derivations: a recursive [`ProofTree`] for building and rewriting, and an
//! indexed [`Derivation`] arena for checking and graph analyses.
//!
//! A repeat leaf `[S]^x` is bound to the nearest ancestor labelled
//! `Discharge(x)`. Binding is lexical, so two copies of the same subproof in
//! different branches never capture each other's leaves; [`freshen_tokens`]
//! restores global uniqueness after a rewrite duplicated a subproof.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::formula::Formula;
use crate::sequent::Sequent;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(pub String);

impl Token {
    pub fn new(name: impl Into<String>) -> Self {
        Token(name.into())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Ax,
    Dia,
    AndL,
    AndR,
    EvL,
    EvR,
    NegL,
    NegR,
    Cut,
    WeakL,
    WeakR,
    /// `F`: puts a formula into focus (conclusion focused, premise not).
    Focus,
    /// `U`: takes the focused formula out of focus (premise focused, conclusion not).
    Unfocus,
    Discharge(Token),
    Repeat(Token),
}

impl Rule {
    /// Name used by the proof text format.
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::Dia => "dia",
            Rule::AndL => "and-l",
            Rule::AndR => "and-r",
            Rule::EvL => "ev-l",
            Rule::EvR => "ev-r",
            Rule::NegL => "neg-l",
            Rule::NegR => "neg-r",
            Rule::Cut => "cut",
            Rule::WeakL => "weak-l",
            Rule::WeakR => "weak-r",
            Rule::Focus => "focus",
            Rule::Unfocus => "unfocus",
            Rule::Discharge(_) => "discharge",
            Rule::Repeat(_) => "leaf",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Some(match name {
            "ax" => Rule::Ax,
            "dia" => Rule::Dia,
            "and-l" => Rule::AndL,
            "and-r" => Rule::AndR,
            "ev-l" => Rule::EvL,
            "ev-r" => Rule::EvR,
            "neg-l" => Rule::NegL,
            "neg-r" => Rule::NegR,
            "cut" => Rule::Cut,
            "weak-l" => Rule::WeakL,
            "weak-r" => Rule::WeakR,
            "focus" => Rule::Focus,
            "unfocus" => Rule::Unfocus,
            _ => return None,
        })
    }

    pub fn arity(&self) -> usize {
        match self {
            Rule::Ax | Rule::Repeat(_) => 0,
            Rule::AndR | Rule::EvL | Rule::Cut => 2,
            _ => 1,
        }
    }

    pub fn token(&self) -> Option<&Token> {
        match self {
            Rule::Discharge(t) | Rule::Repeat(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, Rule::Cut)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Discharge(t) => write!(f, "discharge {t}"),
            Rule::Repeat(t) => write!(f, "leaf {t}"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProofTree {
    pub sequent: Sequent,
    pub rule: Rule,
    pub premises: Vec<ProofTree>,
}

impl fmt::Debug for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::text::print_proof(self))
    }
}

impl ProofTree {
    pub fn new(sequent: Sequent, rule: Rule, premises: Vec<ProofTree>) -> Self {
        ProofTree { sequent, rule, premises }
    }

    pub fn leaf(sequent: Sequent, token: Token) -> Self {
        ProofTree::new(sequent, Rule::Repeat(token), vec![])
    }

    pub fn discharge(token: Token, premise: ProofTree) -> Self {
        ProofTree::new(premise.sequent.clone(), Rule::Discharge(token), vec![premise])
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(|p| p.height()).max().unwrap_or(0)
    }

    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a ProofTree)) {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            visit(t);
            stack.extend(t.premises.iter().rev());
        }
    }

    pub fn cut_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |t| {
            if t.rule.is_cut() {
                n += 1
            }
        });
        n
    }

    pub fn tokens(&self) -> BTreeSet<Token> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Some(tok) = t.rule.token() {
                out.insert(tok.clone());
            }
        });
        out
    }

    pub fn at(&self, path: &[usize]) -> &ProofTree {
        path.iter().fold(self, |t, &i| &t.premises[i])
    }

    pub fn at_mut(&mut self, path: &[usize]) -> &mut ProofTree {
        path.iter().fold(self, |t, &i| &mut t.premises[i])
    }

    /// Cut formula read off the premises: the right formula of the left
    /// premise that occurs out of focus on the left of the right premise.
    pub fn cut_formula(&self) -> Option<Formula> {
        if !self.rule.is_cut() || self.premises.len() != 2 {
            return None;
        }
        crate::rules::principal(&self.rule, &self.sequent, &[&self.premises[0].sequent, &self.premises[1].sequent])
    }
}

/// Hands out discharge tokens `t0, t1, ...` that do not clash with tokens
/// already present in a proof.
#[derive(Clone, Debug)]
pub struct TokenSupply {
    next: u64,
}

impl TokenSupply {
    pub fn for_tree(tree: &ProofTree) -> Self {
        let mut supply = TokenSupply { next: 0 };
        supply.reserve(tree);
        supply
    }

    pub fn reserve(&mut self, tree: &ProofTree) {
        for tok in tree.tokens() {
            if let Some(n) = tok.0.strip_prefix('t').and_then(|s| s.parse::<u64>().ok()) {
                self.next = self.next.max(n + 1);
            }
        }
    }

    pub fn fresh(&mut self) -> Token {
        let t = Token(format!("t{}", self.next));
        self.next += 1;
        t
    }
}

/// Renames discharge tokens so every `Discharge` in the tree carries a
/// distinct token. Repeat leaves follow their (lexically nearest) companion.
/// Returns the tokens that were introduced.
pub fn freshen_tokens(tree: &mut ProofTree, supply: &mut TokenSupply) -> Vec<Token> {
    fn go(
        t: &mut ProofTree,
        seen: &mut HashSet<Token>,
        scope: &mut Vec<(Token, Token)>,
        supply: &mut TokenSupply,
        introduced: &mut Vec<Token>,
    ) {
        match &mut t.rule {
            Rule::Repeat(tok) => {
                if let Some((_, new)) = scope.iter().rev().find(|(old, _)| old == tok) {
                    *tok = new.clone();
                }
            }
            Rule::Discharge(tok) => {
                let old = tok.clone();
                let new = if seen.contains(&old) {
                    let fresh = supply.fresh();
                    introduced.push(fresh.clone());
                    fresh
                } else {
                    old.clone()
                };
                seen.insert(new.clone());
                *tok = new.clone();
                scope.push((old, new));
                for p in &mut t.premises {
                    go(p, seen, scope, supply, introduced);
                }
                scope.pop();
                return;
            }
            _ => {}
        }
        for p in &mut t.premises {
            go(p, seen, scope, supply, introduced);
        }
    }
    let mut introduced = Vec::new();
    go(tree, &mut HashSet::new(), &mut Vec::new(), supply, &mut introduced);
    introduced
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, serde::Serialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub sequent: Sequent,
    pub rule: Rule,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// Immutable arena view of a derivation. Node ids are preorder positions,
/// the root is `NodeId(0)`.
#[derive(Clone, Debug)]
pub struct Derivation {
    nodes: Vec<Node>,
}

impl Derivation {
    pub fn from_tree(tree: &ProofTree) -> Self {
        let mut nodes: Vec<Node> = Vec::new();
        let mut stack: Vec<(&ProofTree, Option<NodeId>)> = vec![(tree, None)];
        while let Some((t, parent)) = stack.pop() {
            let id = NodeId(nodes.len());
            nodes.push(Node { sequent: t.sequent.clone(), rule: t.rule.clone(), children: vec![], parent });
            if let Some(p) = parent {
                nodes[p.0].children.push(id);
            }
            for p in t.premises.iter().rev() {
                stack.push((p, Some(id)));
            }
        }
        Derivation { nodes }
    }

    pub fn to_tree(&self) -> ProofTree {
        self.subtree(self.root())
    }

    /// Plain copy of the subtree at `v`; leaves bound below `v` stay open.
    pub fn subtree(&self, v: NodeId) -> ProofTree {
        // children have larger preorder ids than their parents
        let mut built: HashMap<usize, ProofTree> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(self.nodes[u.0].children.iter().copied());
        }
        for u in order.into_iter().rev() {
            let n = &self.nodes[u.0];
            let premises = n.children.iter().map(|c| built.remove(&c.0).expect("child built")).collect();
            built.insert(u.0, ProofTree::new(n.sequent.clone(), n.rule.clone(), premises));
        }
        built.remove(&v.0).expect("root built")
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v.0]
    }

    pub fn sequent(&self, v: NodeId) -> &Sequent {
        &self.nodes[v.0].sequent
    }

    pub fn rule(&self, v: NodeId) -> &Rule {
        &self.nodes[v.0].rule
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v.0].children
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.nodes[v.0].parent
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.nodes.len()
    }

    pub fn ancestors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(v), move |&u| self.parent(u))
    }

    /// `true` if `a` is `v` or lies below `v` on its root path.
    pub fn is_ancestor_or_self(&self, a: NodeId, v: NodeId) -> bool {
        a == v || self.ancestors(v).any(|u| u == a)
    }

    /// Nearest proper ancestor labelled `Discharge(x)` of a repeat leaf `[..]^x`.
    pub fn companion(&self, v: NodeId) -> Option<NodeId> {
        let Rule::Repeat(tok) = self.rule(v) else { return None };
        self.ancestors(v).find(|&u| matches!(self.rule(u), Rule::Discharge(t) if t == tok))
    }

    pub fn repeat_leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&v| matches!(self.rule(v), Rule::Repeat(_)))
    }

    /// Successors in the proof tree with back edges: children, plus the
    /// companion of a repeat leaf.
    pub fn successors(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = self.children(v).to_vec();
        if let Some(c) = self.companion(v) {
            out.push(c);
        }
        out
    }

    /// Tree path from `from` up to `to`; `from` must be an ancestor of `to`.
    pub fn tree_path(&self, from: NodeId, to: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = self.parent(cur)?;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    pub fn cut_nodes(&self) -> Vec<NodeId> {
        self.ids().filter(|&v| self.rule(v).is_cut()).collect()
    }

    pub fn cut_formula(&self, v: NodeId) -> Option<Formula> {
        if !self.rule(v).is_cut() || self.children(v).len() != 2 {
            return None;
        }
        let [l, r] = [self.children(v)[0], self.children(v)[1]];
        crate::rules::principal(&Rule::Cut, self.sequent(v), &[self.sequent(l), self.sequent(r)])
    }

    /// Path of child indices from the root to `v`.
    pub fn address(&self, v: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            let idx = self.children(p).iter().position(|&c| c == cur).expect("child of parent");
            out.push(idx);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn node_at(&self, address: &[usize]) -> Option<NodeId> {
        let mut cur = self.root();
        for &i in address {
            cur = *self.children(cur).get(i)?;
        }
        Some(cur)
    }
}

/// The subproof rooted at `v` with every repeat leaf whose companion lies
/// below `v` replaced by the (recursively closed) subproof at that companion.
/// Duplicated `Discharge` rules receive fresh tokens.
pub fn subproof_at(d: &Derivation, v: NodeId, supply: &mut TokenSupply) -> ProofTree {
    let mut memo: HashMap<NodeId, ProofTree> = HashMap::new();
    let mut t = closed_copy(d, v, &mut memo);
    freshen_tokens(&mut t, supply);
    t
}

fn closed_copy(d: &Derivation, v: NodeId, memo: &mut HashMap<NodeId, ProofTree>) -> ProofTree {
    if let Some(t) = memo.get(&v) {
        return t.clone();
    }
    let mut outer: Vec<(NodeId, NodeId)> = Vec::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        if let Some(c) = d.companion(u) {
            if !d.is_ancestor_or_self(v, c) {
                outer.push((u, c));
            }
        }
        stack.extend(d.children(u).iter().copied());
    }
    let mut tree = d.subtree(v);
    for (leaf, comp) in outer {
        let replacement = closed_copy(d, comp, memo);
        let mut addr = d.address(leaf);
        let base = d.address(v);
        addr.drain(..base.len());
        *tree.at_mut(&addr) = replacement;
    }
    memo.insert(v, tree.clone());
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequent::parse_sequent;

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn arena_roundtrip_and_companions() {
        let s = seq("F p ^f |- F p");
        let tree = ProofTree::discharge(
            Token::new("x"),
            ProofTree::new(s.clone(), Rule::WeakR, vec![ProofTree::leaf(s.clone(), Token::new("x"))]),
        );
        let d = Derivation::from_tree(&tree);
        assert_eq!(d.len(), 3);
        assert_eq!(d.to_tree(), tree);
        assert_eq!(d.companion(NodeId(2)), Some(NodeId(0)));
        assert_eq!(d.successors(NodeId(2)), vec![NodeId(0)]);
        assert_eq!(d.tree_path(NodeId(0), NodeId(2)), Some(vec![NodeId(0), NodeId(1), NodeId(2)]));
        assert_eq!(d.address(NodeId(2)), vec![0, 0]);

        let mut supply = TokenSupply::for_tree(&tree);
        let sub = subproof_at(&d, NodeId(1), &mut supply);
        // the open leaf is replaced by a copy of the companion's subproof
        assert_eq!(sub.size(), 4);
        assert!(matches!(sub.premises[0].rule, Rule::Discharge(_)));
    }

    #[test]
    fn freshen_renames_duplicates_lexically() {
        let s = seq("F p ^f |- F p");
        let cyc = ProofTree::discharge(Token::new("x"), ProofTree::leaf(s.clone(), Token::new("x")));
        let mut t = ProofTree::new(seq("|-"), Rule::AndR, vec![cyc.clone(), cyc]);
        let mut supply = TokenSupply::for_tree(&t);
        let fresh = freshen_tokens(&mut t, &mut supply);
        assert_eq!(fresh.len(), 1);
        let a = t.premises[0].rule.token().unwrap().clone();
        let b = t.premises[1].rule.token().unwrap().clone();
        assert_ne!(a, b);
        assert_eq!(t.premises[1].premises[0].rule, Rule::Repeat(b));
    }
}
