//! Checks shared by the integration targets. Each returns a one-line summary
//! on success and a list of violations on failure.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gke::analysis::{
    classify_cut, component_of, compute_clusters, descendants, cut_formula_occurrences, is_minimally_focused,
    minimally_focus, tree_cut_rank, CutClass,
};
use gke::corpus::composed_corpus;
use gke::elimination::{eliminate_all, EliminationOptions, EliminationReport};
use gke::kernel::{guardedness_check, is_successful_path, repeat_status, validate_rule_instance, RepeatStatus};
use gke::reductions::{reduce_cut_once, ReductionKind};
use gke::semantics::{check_sequent_bounded, OracleVerdict};
use gke::sequent::Annotation;
use gke::{check_derivation, parse_proof_document, parse_sequent, Derivation, Formula, NodeId, ProofTree, Rule, Token};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, Vec<String>>;

pub const FIXTURES: [&str; 4] = ["ex32_pi0.gke", "ex32_pi1.gke", "ex32_full.gke", "ex33_full.gke"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> ProofTree {
    let path = fixture_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_proof_document(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn corpus() -> &'static [(String, ProofTree)] {
    static CORPUS: OnceLock<Vec<(String, ProofTree)>> = OnceLock::new();
    CORPUS.get_or_init(composed_corpus)
}

/// Elimination reports for the full fixtures and the corpus, with intermediates.
pub fn eliminations() -> &'static [(String, Result<EliminationReport, String>)] {
    static RUNS: OnceLock<Vec<(String, Result<EliminationReport, String>)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let opts = EliminationOptions { keep_intermediate: true, ..Default::default() };
        let inputs = ["ex32_full.gke", "ex33_full.gke"]
            .into_iter()
            .map(|n| (n.to_string(), fixture(n)))
            .chain(corpus().iter().cloned());
        inputs.map(|(name, t)| (name, eliminate_all(&t, &opts).map_err(|e| e.to_string()))).collect()
    })
}

fn verdict(summary: String, violations: Vec<String>) -> Check {
    if violations.is_empty() {
        Ok(summary)
    } else {
        Err(violations)
    }
}

fn cut_formulas(t: &ProofTree) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    t.walk(&mut |n| {
        if let Some(f) = n.cut_formula() {
            out.insert(f);
        }
    });
    out
}

/// Cut formulas a reduction of a cut on `phi` may introduce.
fn allowed_new_cuts(kind: ReductionKind, phi: &Formula) -> Vec<Formula> {
    match (kind, phi) {
        (ReductionKind::PrincipalEv, Formula::Ev(a)) => vec![phi.clone().dia(), (**a).clone()],
        (ReductionKind::PrincipalDia, Formula::Dia(a)) | (ReductionKind::PrincipalNeg, Formula::Neg(a)) => vec![(**a).clone()],
        (ReductionKind::PrincipalAnd, Formula::And(a, b)) => vec![(**a).clone(), (**b).clone()],
        (ReductionKind::PrincipalEv | ReductionKind::PrincipalDia | ReductionKind::PrincipalNeg | ReductionKind::PrincipalAnd, _) => vec![],
        _ => vec![phi.clone()],
    }
}

/// Discharge tokens are unique and every repeat leaf still has a companion
/// with the same sequent.
fn token_hygiene(d: &Derivation) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for v in d.ids() {
        if let Rule::Discharge(x) = d.rule(v) {
            if !seen.insert(x.clone()) {
                return Err(format!("token {x} discharged twice"));
            }
        }
    }
    for l in d.repeat_leaves() {
        match repeat_status(d, l) {
            RepeatStatus::Unbound => return Err(format!("leaf {} unbound", l.0)),
            RepeatStatus::SequentMismatch { .. } => return Err(format!("leaf {} differs from its companion", l.0)),
            _ => {}
        }
    }
    Ok(())
}

fn ranks(t: &ProofTree) -> Vec<u32> {
    let mut out = Vec::new();
    t.walk(&mut |n| {
        if let Some(f) = n.cut_formula() {
            out.push(f.rank().0);
        }
    });
    out
}

/// Random `(proof, cut)` pairs. A proof is a corpus entry after a random
/// number of earlier reduction steps.
pub fn step_soundness(pairs: usize, seed: u64) -> Check {
    let corpus = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut tested = 0;
    let mut attempts = 0;
    while tested < pairs && attempts < pairs * 20 {
        attempts += 1;
        let (name, t) = &corpus[rng.gen_range(0..corpus.len())];
        let mut cur = t.clone();
        for _ in 0..rng.gen_range(0..6) {
            let d = Derivation::from_tree(&cur);
            let cuts = d.cut_nodes();
            if cuts.is_empty() {
                break;
            }
            match reduce_cut_once(&d, cuts[rng.gen_range(0..cuts.len())]) {
                Ok(step) => cur = step.after,
                Err(_) => break,
            }
        }
        let d = Derivation::from_tree(&cur);
        let cuts = d.cut_nodes();
        if cuts.is_empty() {
            continue;
        }
        let v = cuts[rng.gen_range(0..cuts.len())];
        tested += 1;
        let reduced = ranks(&d.subtree(v)).into_iter().max().unwrap_or(0);
        let before_max = tree_cut_rank(&cur).map(|r| r.0);
        let step = match reduce_cut_once(&d, v) {
            Ok(s) => s,
            Err(e) => {
                violations.push(format!("{name}: node {}: {e}", v.0));
                continue;
            }
        };
        let after = Derivation::from_tree(&step.after);
        if step.after.sequent != t.sequent {
            violations.push(format!("{name}: endsequent changed by {}", step.kind));
        }
        for u in after.ids() {
            if let Err(e) = validate_rule_instance(&after, u) {
                violations.push(format!("{name}: {} left an invalid step: {e}", step.kind));
                break;
            }
        }
        if let Err(e) = token_hygiene(&after) {
            violations.push(format!("{name}: {}: {e}", step.kind));
        }
        let replaced = step.after.at(&d.address(v));
        let phi = d.cut_formula(v).expect("cut");
        let mut allowed: BTreeSet<Formula> = d.children(v).iter().flat_map(|&c| cut_formulas(&d.subtree(c))).collect();
        allowed.extend(allowed_new_cuts(step.kind, &phi));
        if let Some(f) = cut_formulas(replaced).difference(&allowed).next() {
            violations.push(format!("{name}: {} on {phi} introduced a cut on {f}", step.kind));
        }
        if let Some(r) = ranks(replaced).into_iter().find(|&r| r > reduced) {
            violations.push(format!("{name}: {} introduced a cut of rank {r} above the local rank {reduced}", step.kind));
        }
        if tree_cut_rank(&step.after).map(|r| r.0) > before_max {
            violations.push(format!("{name}: {} raised the cut rank", step.kind));
        }
    }
    if tested < pairs {
        violations.push(format!("only {tested} pairs found"));
    }
    verdict(format!("{tested} (proof, cut) pairs"), violations)
}

/// Height and distinct-sequent bounds recorded by every elimination round.
pub fn bounds() -> Check {
    let mut violations = Vec::new();
    let (mut zips, mut unimportant) = (0, 0);
    for (name, run) in eliminations() {
        let Ok(rep) = run else {
            violations.push(format!("{name}: {}", run.as_ref().err().unwrap()));
            continue;
        };
        for round in &rep.rounds {
            if let Some(z) = &round.zip {
                zips += 1;
                if z.max_height > z.height_bound {
                    violations.push(format!("{name}: open leaf at height {} > {}", z.max_height, z.height_bound));
                }
            }
            if let Some(u) = &round.unimportant {
                unimportant += 1;
                if u.max_distinct_sequents as u128 > u.sequent_bound {
                    violations.push(format!("{name}: {} distinct sequents > {}", u.max_distinct_sequents, u.sequent_bound));
                }
            }
        }
    }
    if zips == 0 || unimportant == 0 {
        violations.push(format!("vacuous: {zips} zipper runs, {unimportant} unimportant runs"));
    }
    verdict(format!("{zips} zipper runs, {unimportant} unimportant runs"), violations)
}

/// A random tree shape with random discharges and repeat leaves. Sequents
/// are irrelevant to the graph.
pub fn random_derivation(rng: &mut ChaCha8Rng, max_nodes: usize) -> ProofTree {
    fn go(rng: &mut ChaCha8Rng, budget: &mut usize, scope: &mut Vec<Token>, next: &mut usize) -> ProofTree {
        let s = parse_sequent("p |- p").unwrap();
        *budget = budget.saturating_sub(1);
        let pick = if *budget == 0 { 0 } else { rng.gen_range(0..10) };
        match pick {
            0 | 1 if !scope.is_empty() && rng.gen_bool(0.8) => {
                ProofTree::leaf(s, scope[rng.gen_range(0..scope.len())].clone())
            }
            0 => ProofTree::new(s, Rule::Ax, vec![]),
            1 => ProofTree::leaf(s, Token::new(format!("free{}", rng.gen_range(0..3)))),
            2 | 3 => {
                let tok = Token::new(format!("t{next}"));
                *next += 1;
                scope.push(tok.clone());
                let p = go(rng, budget, scope, next);
                scope.pop();
                ProofTree::discharge(tok, p)
            }
            4..=6 => {
                let l = go(rng, budget, scope, next);
                let r = go(rng, budget, scope, next);
                ProofTree::new(s, Rule::Cut, vec![l, r])
            }
            _ => ProofTree::new(s, Rule::Dia, vec![go(rng, budget, scope, next)]),
        }
    }
    let mut budget = rng.gen_range(1..=max_nodes);
    go(rng, &mut budget, &mut Vec::new(), &mut 0)
}

fn naive_scc_mismatch(d: &Derivation) -> Option<String> {
    let n = d.len();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for w in d.successors(NodeId(u)) {
                    if !seen[w.0] {
                        seen[w.0] = true;
                        stack.push(w.0);
                    }
                }
            }
            seen
        })
        .collect();
    let info = compute_clusters(d);
    for u in 0..n {
        for v in 0..n {
            let same = info.cluster_of[u] == info.cluster_of[v];
            if same != (reach[u][v] && reach[v][u]) {
                return Some(format!("nodes {u} and {v}: clustered together = {same}"));
            }
        }
        let cyclic = reach[u].iter().enumerate().any(|(v, &r)| r && v != u && reach[v][u]);
        if info.in_nontrivial(NodeId(u)) != cyclic {
            return Some(format!("node {u}: nontrivial flag differs"));
        }
    }
    for (c, members) in info.clusters.iter().enumerate() {
        if members.iter().any(|v| info.cluster_of[v.0] != c) {
            return Some(format!("cluster {c} lists a foreign node"));
        }
    }
    None
}

pub fn scc_oracle(random: usize, seed: u64) -> Check {
    let mut violations = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixtures = FIXTURES.iter().map(|n| (n.to_string(), fixture(n)));
    let randoms = (0..random).map(|i| (format!("random{i}"), random_derivation(&mut rng, 200)));
    let mut nodes = 0;
    for (name, t) in fixtures.chain(randoms) {
        let d = Derivation::from_tree(&t);
        nodes += d.len();
        if let Some(m) = naive_scc_mismatch(&d) {
            violations.push(format!("{name}: {m}"));
        }
    }
    verdict(format!("{} fixtures and {random} random derivations, {nodes} nodes", FIXTURES.len()), violations)
}

pub fn model_oracle(max_states: usize) -> Check {
    let start = Instant::now();
    let mut seen = BTreeSet::new();
    let mut violations = Vec::new();
    let ends = FIXTURES.into_iter().map(fixture).chain(corpus().iter().map(|(_, t)| t.clone()));
    for t in ends {
        if !check_proof_accepted(&t) || !seen.insert(t.sequent.clone()) {
            continue;
        }
        let gamma: Vec<_> = t.sequent.left_formulas().into_iter().collect();
        let delta: Vec<_> = t.sequent.right.iter().cloned().collect();
        match check_sequent_bounded(&gamma, &delta, max_states) {
            Ok(OracleVerdict::ValidUpTo(_)) => {}
            Ok(OracleVerdict::Countermodel { state, .. }) => {
                violations.push(format!("{}: countermodel at s{state}", t.sequent))
            }
            Err(e) => violations.push(format!("{}: {e}", t.sequent)),
        }
    }
    let el = start.elapsed();
    if el >= Duration::from_secs(30) {
        violations.push(format!("took {el:?}"));
    }
    verdict(format!("{} endsequents valid up to {max_states} states in {el:?}", seen.len()), violations)
}

fn check_proof_accepted(t: &ProofTree) -> bool {
    check_derivation(&Derivation::from_tree(t)).accepted
}

/// Accepted, minimally focused proofs: normalized fixtures and corpus
/// entries, plus every accepted minimally focused elimination intermediate.
pub fn lemma_subjects() -> Vec<(String, ProofTree)> {
    let mut out = Vec::new();
    let inputs = FIXTURES.iter().map(|n| (n.to_string(), fixture(n))).chain(corpus().iter().cloned());
    for (name, t) in inputs {
        out.push((name, minimally_focus(&Derivation::from_tree(&t))));
    }
    for (name, run) in eliminations() {
        if let Ok(rep) = run {
            out.extend(rep.intermediates.iter().map(|(l, t)| (format!("{name}@{l}"), t.clone())));
        }
    }
    out.retain(|(_, t)| {
        let d = Derivation::from_tree(t);
        check_derivation(&d).accepted && is_minimally_focused(&d)
    });
    out
}

const PATH_CAP: usize = 20_000;

/// Paths with `len` edges inside the cluster of `members`, at most
/// `PATH_CAP` of them, in depth-first order.
fn cluster_paths(d: &Derivation, members: &BTreeSet<NodeId>, len: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn go(d: &Derivation, m: &BTreeSet<NodeId>, len: usize, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if out.len() >= PATH_CAP {
            return;
        }
        if path.len() == len + 1 {
            out.push(path.clone());
            return;
        }
        for w in d.successors(*path.last().unwrap()) {
            if m.contains(&w) {
                path.push(w);
                go(d, m, len, path, out);
                path.pop();
            }
        }
    }
    for &s in members {
        path.push(s);
        go(d, members, len, &mut path, &mut out);
        path.pop();
    }
    out
}

pub fn lemmas() -> Check {
    let subjects = lemma_subjects();
    let mut violations = Vec::new();
    let (mut unimportant, mut clusters, mut paths) = (0, 0, 0);
    for (name, t) in &subjects {
        let d = Derivation::from_tree(t);
        if !guardedness_check(&d) {
            violations.push(format!("{name}: a repeat path has no modal step"));
        }
        let info = compute_clusters(&d);
        for v in d.cut_nodes() {
            if classify_cut(&d, v) != Ok(CutClass::Unimportant) {
                continue;
            }
            unimportant += 1;
            // The component is the one of the cut node.
            let comp = component_of(&d, &info, v);
            for occ in cut_formula_occurrences(&d, v) {
                for o in descendants(&d, &occ).into_iter().filter(|o| comp.contains(&o.node)) {
                    if o.ann == Annotation::Focused {
                        violations.push(format!("{name}: cut at {}: descendant {} at {} is in focus", v.0, o.formula, o.node.0));
                    }
                }
            }
        }
        let companions: BTreeSet<NodeId> = d.repeat_leaves().filter_map(|l| d.companion(l)).collect();
        for (c, members) in info.clusters.iter().enumerate() {
            if !info.is_nontrivial(c) {
                continue;
            }
            clusters += 1;
            let members: BTreeSet<NodeId> = members.iter().copied().collect();
            for p in cluster_paths(&d, &members, 4 * members.len()) {
                paths += 1;
                let hits: Vec<usize> = (0..p.len()).filter(|&i| companions.contains(&p[i])).collect();
                if hits.len() < 2 || is_successful_path(&d, &p[hits[0]..=hits[1]]) != Ok(true) {
                    violations.push(format!("{name}: long path from {} lacks two companions", p[0].0));
                }
            }
            for p in cluster_paths(&d, &members, members.len()) {
                paths += 1;
                let show = || p.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join("-");
                if is_successful_path(&d, &p) != Ok(true) {
                    violations.push(format!("{name}: path {} is not successful", show()));
                }
                if !p.iter().any(|v| companions.contains(v)) {
                    violations.push(format!("{name}: path {} has no companion", show()));
                }
                if !p.iter().any(|&v| d.rule(v) == &Rule::Dia) {
                    violations.push(format!("{name}: path {} has no modal step", show()));
                }
            }
        }
    }
    if unimportant == 0 || clusters == 0 {
        violations.push(format!("vacuous: {unimportant} unimportant cuts, {clusters} clusters"));
    }
    violations.truncate(50);
    verdict(
        format!("{} proofs, {unimportant} unimportant cuts, {clusters} clusters, {paths} paths", subjects.len()),
        violations,
    )
}
