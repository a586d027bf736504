//! Kripke semantics and a bounded countermodel search.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::formula::Formula;

pub type State = u32;

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct KripkeModel {
    pub states: BTreeSet<State>,
    pub rel: BTreeSet<(State, State)>,
    pub valuation: BTreeMap<State, BTreeSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleVerdict {
    ValidUpTo(usize),
    Countermodel { model: KripkeModel, state: State },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("unknown state {0}")]
    UnknownState(State),
    #[error("state bound must be between 1 and {MAX_STATES}, got {0}")]
    BadBound(usize),
    #[error("model enumeration exceeded the budget of {0} models")]
    BudgetExceeded(u64),
}

pub const MAX_STATES: usize = 6;
pub const DEFAULT_MODEL_BUDGET: u64 = 20_000_000;

impl fmt::Display for KripkeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<String> = self.states.iter().map(|s| format!("s{s}")).collect();
        writeln!(f, "states: {}", states.join(" "))?;
        let edges: Vec<String> = self.rel.iter().map(|(a, b)| format!("s{a}->s{b}")).collect();
        writeln!(f, "edges: {}", if edges.is_empty() { "none".to_string() } else { edges.join(" ") })?;
        for s in &self.states {
            let props: Vec<&str> = self.valuation.get(s).into_iter().flatten().map(String::as_str).collect();
            writeln!(f, "V(s{s}) = {{{}}}", props.join(", "))?;
        }
        Ok(())
    }
}

/// Least reflexive and transitive relation on `states` containing `rel`.
pub fn rt_closure(rel: &BTreeSet<(State, State)>, states: &BTreeSet<State>) -> BTreeSet<(State, State)> {
    let mut succ: BTreeMap<State, Vec<State>> = BTreeMap::new();
    for &(a, b) in rel {
        succ.entry(a).or_default().push(b);
    }
    let mut out = BTreeSet::new();
    for &s in states {
        let mut seen = BTreeSet::from([s]);
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in succ.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        out.extend(seen.into_iter().map(|t| (s, t)));
    }
    out
}

pub fn eval(model: &KripkeModel, state: State, f: &Formula) -> Result<bool, SemanticsError> {
    if !model.states.contains(&state) {
        return Err(SemanticsError::UnknownState(state));
    }
    let star = rt_closure(&model.rel, &model.states);
    Ok(eval_in(model, &star, state, f))
}

fn eval_in(m: &KripkeModel, star: &BTreeSet<(State, State)>, s: State, f: &Formula) -> bool {
    match f {
        Formula::Atom(p) => m.valuation.get(&s).is_some_and(|v| v.contains(&**p)),
        Formula::Neg(a) => !eval_in(m, star, s, a),
        Formula::And(a, b) => eval_in(m, star, s, a) && eval_in(m, star, s, b),
        Formula::Dia(a) => m.rel.iter().any(|&(x, t)| x == s && eval_in(m, star, t, a)),
        Formula::Ev(a) => star.iter().any(|&(x, t)| x == s && eval_in(m, star, t, a)),
    }
}

/// Subformulas in evaluation order (children before parents).
struct Plan {
    nodes: Vec<Op>,
    gamma: Vec<usize>,
    delta: Vec<usize>,
    atoms: Vec<Arc<str>>,
}

enum Op {
    Atom(usize),
    Neg(usize),
    And(usize, usize),
    Dia(usize),
    Ev(usize),
}

impl Plan {
    fn new(gamma: &[Formula], delta: &[Formula]) -> Plan {
        let atoms: Vec<Arc<str>> =
            gamma.iter().chain(delta).flat_map(|f| f.atoms()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut plan = Plan { nodes: vec![], gamma: vec![], delta: vec![], atoms };
        let mut index = HashMap::new();
        plan.gamma = gamma.iter().map(|f| plan.add(f, &mut index)).collect();
        plan.delta = delta.iter().map(|f| plan.add(f, &mut index)).collect();
        plan
    }

    fn add(&mut self, f: &Formula, index: &mut HashMap<Formula, usize>) -> usize {
        if let Some(&i) = index.get(f) {
            return i;
        }
        let op = match f {
            Formula::Atom(p) => Op::Atom(self.atoms.iter().position(|a| a == p).expect("atom collected")),
            Formula::Neg(a) => Op::Neg(self.add(a, index)),
            Formula::And(a, b) => {
                let (a, b) = (self.add(a, index), self.add(b, index));
                Op::And(a, b)
            }
            Formula::Dia(a) => Op::Dia(self.add(a, index)),
            Formula::Ev(a) => Op::Ev(self.add(a, index)),
        };
        self.nodes.push(op);
        index.insert(f.clone(), self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    /// Truth sets as state bitmasks. `succ[s]` is the successor mask of `s`,
    /// `val[a]` the mask of states where atom `a` holds.
    fn run(&self, n: usize, succ: &[u64], val: &[u64], out: &mut Vec<u64>) {
        let all = (1u64 << n) - 1;
        let pre = |m: u64| (0..n).filter(|&s| succ[s] & m != 0).fold(0u64, |acc, s| acc | 1 << s);
        out.clear();
        for op in &self.nodes {
            let m = match *op {
                Op::Atom(a) => val[a],
                Op::Neg(a) => all & !out[a],
                Op::And(a, b) => out[a] & out[b],
                Op::Dia(a) => pre(out[a]),
                Op::Ev(a) => {
                    let mut m = out[a];
                    loop {
                        let next = m | pre(m);
                        if next == m {
                            break m;
                        }
                        m = next;
                    }
                }
            };
            out.push(m);
        }
    }
}

/// Searches all models with at most `max_states` states for one where the
/// conjunction of `gamma` holds and every formula in `delta` fails.
pub fn check_sequent_bounded(
    gamma: &[Formula],
    delta: &[Formula],
    max_states: usize,
) -> Result<OracleVerdict, SemanticsError> {
    check_sequent_with_budget(gamma, delta, max_states, DEFAULT_MODEL_BUDGET)
}

pub fn check_sequent_with_budget(
    gamma: &[Formula],
    delta: &[Formula],
    max_states: usize,
    budget: u64,
) -> Result<OracleVerdict, SemanticsError> {
    if max_states == 0 || max_states > MAX_STATES {
        return Err(SemanticsError::BadBound(max_states));
    }
    let plan = Plan::new(gamma, delta);
    let k = plan.atoms.len();
    let mut visited = 0u64;
    let mut truth = Vec::with_capacity(plan.nodes.len());
    for n in 1..=max_states {
        let edge_bits = n * n;
        let val_bits = n * k;
        if val_bits >= 64 {
            return Err(SemanticsError::BudgetExceeded(budget));
        }
        let all = (1u64 << n) - 1;
        for edges in 0..(1u64 << edge_bits) {
            let succ: Vec<u64> = (0..n).map(|s| (edges >> (s * n)) & all).collect();
            for vals in 0..(1u64 << val_bits) {
                visited += 1;
                if visited > budget {
                    return Err(SemanticsError::BudgetExceeded(budget));
                }
                let val: Vec<u64> = (0..k).map(|a| (vals >> (a * n)) & all).collect();
                plan.run(n, &succ, &val, &mut truth);
                let mut bad = all;
                for &g in &plan.gamma {
                    bad &= truth[g];
                }
                for &d in &plan.delta {
                    bad &= !truth[d];
                }
                if bad != 0 {
                    let state = bad.trailing_zeros();
                    return Ok(OracleVerdict::Countermodel { model: build_model(n, &succ, &val, &plan.atoms), state });
                }
            }
        }
    }
    Ok(OracleVerdict::ValidUpTo(max_states))
}

fn build_model(n: usize, succ: &[u64], val: &[u64], atoms: &[Arc<str>]) -> KripkeModel {
    let states = (0..n as State).collect();
    let rel = (0..n)
        .flat_map(|s| (0..n).filter(move |&t| succ[s] >> t & 1 == 1).map(move |t| (s as State, t as State)))
        .collect();
    let valuation = (0..n)
        .map(|s| {
            let props = atoms.iter().zip(val).filter(|(_, m)| *m >> s & 1 == 1).map(|(a, _)| a.to_string()).collect();
            (s as State, props)
        })
        .collect();
    KripkeModel { states, rel, valuation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn chain() -> KripkeModel {
        KripkeModel {
            states: BTreeSet::from([0, 1]),
            rel: BTreeSet::from([(0, 1)]),
            valuation: BTreeMap::from([(1, BTreeSet::from(["p".to_string()]))]),
        }
    }

    #[test]
    fn closure_is_reflexive_and_transitive() {
        let states = BTreeSet::from([0]);
        assert_eq!(rt_closure(&BTreeSet::new(), &states), BTreeSet::from([(0, 0)]));
        let states = BTreeSet::from([0, 1, 2]);
        let star = rt_closure(&BTreeSet::from([(0, 1), (1, 2)]), &states);
        assert!(star.contains(&(0, 2)));
        assert_eq!(rt_closure(&star, &states), star);
    }

    #[test]
    fn evaluation_clauses() {
        let single = KripkeModel {
            states: BTreeSet::from([0]),
            valuation: BTreeMap::from([(0, BTreeSet::from(["p".to_string()]))]),
            ..Default::default()
        };
        assert!(eval(&single, 0, &f("F p")).unwrap());
        assert!(!eval(&single, 0, &f("<> p")).unwrap());
        assert!(eval(&chain(), 0, &f("F p")).unwrap());
        assert!(eval(&chain(), 0, &f("<> p")).unwrap());
        assert!(!eval(&chain(), 0, &f("p")).unwrap());
        assert_eq!(eval(&chain(), 7, &f("p")), Err(SemanticsError::UnknownState(7)));
    }

    #[test]
    fn bounded_search() {
        assert_eq!(check_sequent_bounded(&[f("p")], &[f("p")], 1), Ok(OracleVerdict::ValidUpTo(1)));
        match check_sequent_bounded(&[], &[f("<> p")], 1).unwrap() {
            OracleVerdict::Countermodel { model, state } => {
                assert_eq!(model.states.len(), 1);
                assert!(model.rel.is_empty());
                assert!(!eval(&model, state, &f("<> p")).unwrap());
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(check_sequent_bounded(&[f("F <> <> p")], &[f("F p")], 3), Ok(OracleVerdict::ValidUpTo(3)));
        assert!(matches!(check_sequent_bounded(&[f("F p")], &[f("p")], 2), Ok(OracleVerdict::Countermodel { .. })));
        assert_eq!(check_sequent_bounded(&[], &[], 0), Err(SemanticsError::BadBound(0)));
        assert!(matches!(
            check_sequent_with_budget(&[f("p")], &[f("q")], 3, 1),
            Ok(OracleVerdict::Countermodel { .. }) | Err(SemanticsError::BudgetExceeded(1))
        ));
    }
}
