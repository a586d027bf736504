//! The cut-elimination driver.
//!
//! Each round normalises focus, picks the topmost cluster that contains a
//! cut of maximal rank and removes those cuts:
//! - a cut outside any cycle of rank `r >= 1` is pushed until every rank-`r`
//!   cut is on an eventuality and then zipped;
//! - a cut outside any cycle of rank 0 is pushed away;
//! - cuts inside a cycle are pushed up through a lazily unfolded copy of the
//!   cluster until only cuts outside the cluster remain.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::analysis::{compute_clusters, minimally_focus};
use crate::formula::{closure, Rank};
use crate::kernel::check_proof;
use crate::proof::{freshen_tokens, subproof_at, Derivation, ProofTree, Rule, Token, TokenSupply};
use crate::reductions::{reduce_cut_tree, unfold_discharge, ReductionError, ReductionKind};
use crate::rules;
use crate::sequent::Sequent;
use crate::zipper::{zip_with, ZipError, ZipStats};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct EliminationOptions {
    pub max_rounds: Option<usize>,
    pub step_budget: u64,
    pub trace: bool,
    pub keep_intermediate: bool,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        EliminationOptions { max_rounds: None, step_budget: DEFAULT_STEP_BUDGET, trace: false, keep_intermediate: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    MakeCritical,
    ZipImportant,
    Unimportant,
    RankZero,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub phase: Phase,
    pub node: usize,
    pub cuts_before: usize,
    pub cuts_after: usize,
    pub rank_before: Option<u32>,
    pub rank_after: Option<u32>,
    pub steps_taken: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zip: Option<ZipStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unimportant: Option<UnimportantStats>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct UnimportantStats {
    pub reductions: u64,
    pub repeats_closed: usize,
    pub max_distinct_sequents: usize,
    /// `8^m`, saturating.
    pub sequent_bound: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct EliminationReport {
    pub rounds: Vec<RoundReport>,
    #[serde(skip)]
    pub final_proof: ProofTree,
    #[serde(skip)]
    pub trace: Vec<String>,
    #[serde(skip)]
    pub intermediates: Vec<(String, ProofTree)>,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EliminationError {
    #[error("input rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Zip(#[from] ZipError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("step budget of {0} exhausted")]
    Budget(u64),
    #[error("round limit of {0} reached with cuts remaining")]
    MaxRounds(usize),
    #[error("bound violated: {0}")]
    Bound(String),
    #[error("intermediate proof rejected after {phase}: {msg}")]
    InvalidResult { phase: Phase, msg: String },
}

impl EliminationError {
    /// Failures that indicate a violated internal bound rather than bad input.
    pub fn is_internal(&self) -> bool {
        !matches!(self, EliminationError::Rejected(_))
    }
}

struct Ctx<'a> {
    opts: &'a EliminationOptions,
    steps: u64,
    trace: Vec<String>,
    intermediates: Vec<(String, ProofTree)>,
}

impl Ctx<'_> {
    fn tick(&mut self) -> Result<(), EliminationError> {
        self.steps += 1;
        if self.steps > self.opts.step_budget {
            return Err(EliminationError::Budget(self.opts.step_budget));
        }
        Ok(())
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if self.opts.trace {
            self.trace.push(line());
        }
    }

    fn keep(&mut self, label: impl FnOnce() -> String, t: &ProofTree) {
        if self.opts.keep_intermediate {
            self.intermediates.push((label(), t.clone()));
        }
    }
}

fn rank_of_cut(t: &ProofTree) -> Option<Rank> {
    t.cut_formula().map(|f| f.rank())
}

/// Addresses of all cuts in preorder.
fn cut_addresses(t: &ProofTree) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(t, Vec::new())];
    while let Some((n, addr)) = stack.pop() {
        if n.rule.is_cut() {
            out.push(addr.clone());
        }
        for (i, p) in n.premises.iter().enumerate().rev() {
            let mut a = addr.clone();
            a.push(i);
            stack.push((p, a));
        }
    }
    out
}

fn has_cut_of_rank(t: &ProofTree, r: Rank) -> bool {
    let mut found = false;
    t.walk(&mut |n| found |= n.rule.is_cut() && rank_of_cut(n) >= Some(r));
    found
}

/// Reduces the cut at `addr` inside `t`, closing the subproof first when the
/// open reduction does not apply.
fn reduce_at(t: &mut ProofTree, addr: &[usize], supply: &mut TokenSupply) -> Result<ReductionKind, EliminationError> {
    let (kind, replacement) = match reduce_cut_tree(t.at(addr)) {
        Ok(r) => r,
        Err(e) => {
            let d = Derivation::from_tree(t);
            let v = d.node_at(addr).expect("address of a node");
            let closed = subproof_at(&d, v, supply);
            if closed == *t.at(addr) {
                return Err(e.into());
            }
            reduce_cut_tree(&closed)?
        }
    };
    *t.at_mut(addr) = replacement;
    freshen_tokens(t, supply);
    Ok(kind)
}

/// Pushes every rank-`r` cut that is not on an eventuality until all rank-`r`
/// cuts in `t` are critical.
pub fn make_cuts_critical(t: &ProofTree, r: Rank) -> Result<ProofTree, EliminationError> {
    let opts = EliminationOptions::default();
    let mut ctx = Ctx { opts: &opts, steps: 0, trace: vec![], intermediates: vec![] };
    let mut supply = TokenSupply::for_tree(t);
    make_critical_in(t.clone(), r, &mut supply, &mut ctx)
}

fn make_critical_in(
    mut t: ProofTree,
    r: Rank,
    supply: &mut TokenSupply,
    ctx: &mut Ctx,
) -> Result<ProofTree, EliminationError> {
    loop {
        let target = cut_addresses(&t).into_iter().find(|a| {
            let n = t.at(a);
            rank_of_cut(n) == Some(r) && !n.cut_formula().is_some_and(|f| f.is_ev())
        });
        let Some(addr) = target else { return Ok(t) };
        ctx.tick()?;
        let kind = reduce_at(&mut t, &addr, supply)?;
        ctx.log(|| format!("  step {kind} at {addr:?} cuts={}", t.cut_count()));
    }
}

/// Topmost cut of rank `r` (no rank-`r` cut above it), leftmost first.
fn topmost_cut_of_rank(t: &ProofTree, r: Rank) -> Option<Vec<usize>> {
    cut_addresses(t).into_iter().rev().find(|a| {
        let n = t.at(a);
        rank_of_cut(n) == Some(r) && n.premises.iter().all(|p| !has_cut_of_rank(p, r))
    })
}

fn zip_all(
    mut t: ProofTree,
    r: Rank,
    supply: &mut TokenSupply,
    ctx: &mut Ctx,
    stats: &mut ZipStats,
) -> Result<ProofTree, EliminationError> {
    let mut zip_index = 0usize;
    while let Some(addr) = topmost_cut_of_rank(&t, r) {
        let cut = t.at(&addr).clone();
        let keep = ctx.opts.keep_intermediate;
        let mut snaps: Vec<(String, ProofTree)> = Vec::new();
        let mut seen_cuts = 0usize;
        let budget = ctx.opts.step_budget.saturating_sub(ctx.steps);
        let (out, new_supply, s) = zip_with(&cut, supply.clone(), budget, |tp| {
            if keep && tp.introduced_cuts.len() > seen_cuts {
                seen_cuts = tp.introduced_cuts.len();
                snaps.push((format!("zip{zip_index}-step{}", tp.steps), tp.snapshot()));
            }
        })?;
        ctx.steps += s.steps;
        *supply = new_supply;
        ctx.intermediates.extend(snaps);
        ctx.log(|| {
            format!(
                "  zip at {addr:?}: steps={} max_height={} bound={} cuts_introduced={:?} repeats={}",
                s.steps, s.max_height, s.height_bound, s.introduced_cuts, s.closed_repeats
            )
        });
        if s.max_height > s.height_bound {
            return Err(EliminationError::Bound(format!("open leaf height {} > {}", s.max_height, s.height_bound)));
        }
        stats.steps += s.steps;
        stats.max_height = stats.max_height.max(s.max_height);
        stats.height_bound = stats.height_bound.max(s.height_bound);
        stats.closed_repeats += s.closed_repeats;
        for c in s.introduced_cuts {
            if !stats.introduced_cuts.contains(&c) {
                stats.introduced_cuts.push(c);
            }
        }
        *t.at_mut(&addr) = out;
        freshen_tokens(&mut t, supply);
        ctx.keep(|| format!("zip{zip_index}-done"), &t);
        zip_index += 1;
    }
    Ok(t)
}

fn push_all(mut t: ProofTree, supply: &mut TokenSupply, ctx: &mut Ctx) -> Result<ProofTree, EliminationError> {
    loop {
        let target = cut_addresses(&t).into_iter().rev().find(|a| t.at(a).premises.iter().all(|p| p.cut_count() == 0));
        let Some(addr) = target else { return Ok(t) };
        ctx.tick()?;
        let kind = reduce_at(&mut t, &addr, supply)?;
        ctx.log(|| format!("  step {kind} at {addr:?} cuts={}", t.cut_count()));
    }
}

/// `8^m`, saturating.
pub fn sequent_bound(m: usize) -> u128 {
    let exp = 3u32.saturating_mul(m as u32);
    if exp >= 128 {
        u128::MAX
    } else {
        1u128 << exp
    }
}

struct ONode {
    sequent: Sequent,
    rule: Option<Rule>,
    closed: Option<ProofTree>,
    children: Vec<usize>,
    parent: Option<usize>,
    mark: Option<Token>,
    focused_ev_l: bool,
}

struct Unimportant<'a, 'b> {
    nodes: Vec<ONode>,
    ctx: &'a mut Ctx<'b>,
    supply: &'a mut TokenSupply,
    bound: u128,
    stats: UnimportantStats,
}

impl Unimportant<'_, '_> {
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

    fn distinct_on_branch(&self, v: usize) -> usize {
        let mut seen = HashSet::new();
        let mut cur = Some(v);
        while let Some(c) = cur {
            seen.insert(&self.nodes[c].sequent);
            cur = self.nodes[c].parent;
        }
        seen.len()
    }

    fn add(&mut self, parent: Option<usize>, sequent: Sequent) -> usize {
        self.nodes.push(ONode {
            sequent,
            rule: None,
            closed: None,
            children: vec![],
            parent,
            mark: None,
            focused_ev_l: false,
        });
        self.nodes.len() - 1
    }

    fn run(&mut self, root: ProofTree, r: Rank) -> Result<(), EliminationError> {
        let slot = self.add(None, root.sequent.clone());
        let mut work = vec![(slot, root)];
        while let Some((v, mut sigma)) = work.pop() {
            loop {
                self.ctx.tick()?;
                let distinct = self.distinct_on_branch(v);
                self.stats.max_distinct_sequents = self.stats.max_distinct_sequents.max(distinct);
                if distinct as u128 > self.bound {
                    return Err(EliminationError::Bound(format!("{distinct} distinct sequents on a branch exceed {}", self.bound)));
                }
                if let Some(c) = self.repeat_companion(v) {
                    let tok = match &self.nodes[c].mark {
                        Some(t) => t.clone(),
                        None => {
                            let t = self.supply.fresh();
                            self.nodes[c].mark = Some(t.clone());
                            t
                        }
                    };
                    self.nodes[v].rule = Some(Rule::Repeat(tok));
                    self.stats.repeats_closed += 1;
                    break;
                }
                if !sigma.sequent.has_focus() || !has_cut_of_rank(&sigma, r) {
                    self.nodes[v].closed = Some(sigma);
                    break;
                }
                match &sigma.rule {
                    Rule::Cut if rank_of_cut(&sigma) >= Some(r) => {
                        let mut addr = Vec::new();
                        loop {
                            let n = sigma.at(&addr);
                            match n.premises.iter().position(|p| p.rule.is_cut()) {
                                Some(i) => addr.push(i),
                                None => break,
                            }
                        }
                        let kind = reduce_at(&mut sigma, &addr, self.supply)?;
                        self.stats.reductions += 1;
                        self.ctx.log(|| format!("  step {kind} at {addr:?} cuts={}", sigma.cut_count()));
                    }
                    Rule::Discharge(_) => sigma = unfold_discharge(&sigma),
                    rule => {
                        let prems: Vec<&Sequent> = sigma.premises.iter().map(|p| &p.sequent).collect();
                        self.nodes[v].focused_ev_l = rules::is_focused_ev_l(rule, &sigma.sequent, &prems);
                        self.nodes[v].rule = Some(rule.clone());
                        let kids: Vec<usize> =
                            sigma.premises.iter().map(|p| self.add(Some(v), p.sequent.clone())).collect();
                        self.nodes[v].children = kids.clone();
                        for (k, p) in kids.into_iter().zip(sigma.premises).rev() {
                            work.push((k, p));
                        }
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    fn build(&self, v: usize) -> ProofTree {
        let n = &self.nodes[v];
        let t = match (&n.closed, &n.rule) {
            (Some(t), _) => t.clone(),
            (None, Some(r)) => ProofTree::new(n.sequent.clone(), r.clone(), n.children.iter().map(|&c| self.build(c)).collect()),
            (None, None) => unreachable!("every slot is filled"),
        };
        match &n.mark {
            Some(tok) => ProofTree::discharge(tok.clone(), t),
            None => t,
        }
    }
}

/// Pushes the rank-`r` cuts of a closed proof whose root lies in a cycle
/// until all remaining rank-`r` cuts are out of focus.
pub fn eliminate_unimportant_cluster(t: &ProofTree, r: Rank) -> Result<ProofTree, EliminationError> {
    let opts = EliminationOptions::default();
    let mut ctx = Ctx { opts: &opts, steps: 0, trace: vec![], intermediates: vec![] };
    let mut supply = TokenSupply::for_tree(t);
    let m = closure(t.sequent.left_formulas().iter(), t.sequent.right.iter()).size();
    unimportant_in(t.clone(), r, m, &mut supply, &mut ctx).map(|(t, _)| t)
}

fn unimportant_in(
    t: ProofTree,
    r: Rank,
    m: usize,
    supply: &mut TokenSupply,
    ctx: &mut Ctx,
) -> Result<(ProofTree, UnimportantStats), EliminationError> {
    let bound = sequent_bound(m);
    let mut u = Unimportant {
        nodes: vec![],
        ctx,
        supply,
        bound,
        stats: UnimportantStats { sequent_bound: bound, ..Default::default() },
    };
    u.run(t, r)?;
    let mut out = u.build(0);
    freshen_tokens(&mut out, u.supply);
    Ok((out, u.stats))
}

/// One cluster step: removes the maximal-rank cuts from the topmost cluster
/// that contains one.
fn cluster_step(t: &ProofTree, ctx: &mut Ctx, round: usize) -> Result<(ProofTree, Vec<RoundReport>), EliminationError> {
    let normal = minimally_focus(&Derivation::from_tree(t));
    let d = Derivation::from_tree(&normal);
    let info = compute_clusters(&d);
    let r = crate::analysis::cut_rank_of(&d).expect("caller checks for cuts");
    let cluster = info
        .sink_first
        .iter()
        .copied()
        .find(|&c| info.clusters[c].iter().any(|&v| d.rule(v).is_cut() && crate::analysis::cut_rank_at(&d, v) == Some(r)))
        .expect("a cut lies in some cluster");
    let c = info.cluster_root(cluster);
    let addr = d.address(c);
    let sub = subproof_at(&d, c, &mut TokenSupply::for_tree(&normal));
    let mut supply = TokenSupply::for_tree(&normal);
    supply.reserve(&sub);
    let cuts_before = normal.cut_count();
    let rank_before = Some(r.0);
    let steps0 = ctx.steps;
    let mut reports = Vec::new();
    let finish = |phase, tree: &ProofTree, steps: u64, zip, unimportant| RoundReport {
        phase,
        node: c.0,
        cuts_before,
        cuts_after: tree.cut_count(),
        rank_before,
        rank_after: crate::analysis::tree_cut_rank(tree).map(|r| r.0),
        steps_taken: steps,
        zip,
        unimportant,
    };
    let graft = |piece: ProofTree, supply: &mut TokenSupply| {
        let mut whole = normal.clone();
        *whole.at_mut(&addr) = piece;
        freshen_tokens(&mut whole, supply);
        whole
    };
    ctx.keep(|| format!("round{round}-input"), &normal);
    let result = if info.is_nontrivial(cluster) {
        let m = closure(d.sequent(c).left_formulas().iter(), d.sequent(c).right.iter()).size();
        ctx.log(|| format!("round {round}: phase=Unimportant node={} rank={} m={m}", c.0, r));
        let (piece, stats) = unimportant_in(sub, r, m, &mut supply, ctx)?;
        let whole = graft(piece, &mut supply);
        ctx.keep(|| format!("round{round}-unimportant"), &whole);
        reports.push(finish(Phase::Unimportant, &whole, ctx.steps - steps0, None, Some(stats)));
        whole
    } else if r.0 == 0 {
        ctx.log(|| format!("round {round}: phase=RankZero node={}", c.0));
        let piece = push_all(sub, &mut supply, ctx)?;
        let whole = graft(piece, &mut supply);
        ctx.keep(|| format!("round{round}-rankzero"), &whole);
        reports.push(finish(Phase::RankZero, &whole, ctx.steps - steps0, None, None));
        whole
    } else {
        ctx.log(|| format!("round {round}: phase=MakeCritical node={} rank={}", c.0, r));
        let critical = make_critical_in(sub, r, &mut supply, ctx)?;
        let mid = graft(critical.clone(), &mut supply);
        ctx.keep(|| format!("round{round}-critical"), &mid);
        let steps1 = ctx.steps;
        reports.push(finish(Phase::MakeCritical, &mid, steps1 - steps0, None, None));
        ctx.log(|| format!("round {round}: phase=ZipImportant node={} rank={}", c.0, r));
        let mut zs = ZipStats::default();
        let piece = zip_all(critical, r, &mut supply, ctx, &mut zs)?;
        let whole = graft(piece, &mut supply);
        ctx.keep(|| format!("round{round}-zipped"), &whole);
        reports.push(finish(Phase::ZipImportant, &whole, ctx.steps - steps1, Some(zs), None));
        whole
    };
    let report = check_proof(&result);
    if !report.accepted {
        let phase = reports.last().map_or(Phase::Unimportant, |r: &RoundReport| r.phase);
        let msg = report.violations.iter().take(3).map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        return Err(EliminationError::InvalidResult { phase, msg });
    }
    if result.sequent != t.sequent {
        return Err(EliminationError::InvalidResult {
            phase: reports.last().map_or(Phase::Unimportant, |r| r.phase),
            msg: format!("endsequent changed to `{}`", result.sequent),
        });
    }
    for rep in &reports {
        ctx.log(|| {
            format!(
                "round {round}: {} cuts {}->{} rank {:?}->{:?} steps={}",
                rep.phase, rep.cuts_before, rep.cuts_after, rep.rank_before, rep.rank_after, rep.steps_taken
            )
        });
    }
    Ok((result, reports))
}

/// Lowers the cut rank of `t` by one (or removes all cuts at rank 0).
pub fn reduction_round(t: &ProofTree) -> Result<ProofTree, EliminationError> {
    let opts = EliminationOptions::default();
    let mut ctx = Ctx { opts: &opts, steps: 0, trace: vec![], intermediates: vec![] };
    let Some(r) = crate::analysis::tree_cut_rank(t) else { return Ok(t.clone()) };
    let mut cur = t.clone();
    let mut round = 0;
    while crate::analysis::tree_cut_rank(&cur) == Some(r) {
        cur = cluster_step(&cur, &mut ctx, round)?.0;
        round += 1;
    }
    Ok(cur)
}

pub fn eliminate_all(t: &ProofTree, opts: &EliminationOptions) -> Result<EliminationReport, EliminationError> {
    let input = check_proof(t);
    if !input.accepted {
        let msg = input.violations.iter().take(3).map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        return Err(EliminationError::Rejected(msg));
    }
    let mut ctx = Ctx { opts, steps: 0, trace: vec![], intermediates: vec![] };
    let mut cur = t.clone();
    let mut rounds = Vec::new();
    let mut round = 0usize;
    while cur.cut_count() > 0 {
        if opts.max_rounds.is_some_and(|k| round >= k) {
            return Err(EliminationError::MaxRounds(round));
        }
        let (next, reports) = cluster_step(&cur, &mut ctx, round)?;
        rounds.extend(reports);
        cur = next;
        round += 1;
    }
    ctx.keep(|| "final".to_string(), &cur);
    Ok(EliminationReport { rounds, final_proof: cur, trace: ctx.trace, intermediates: ctx.intermediates })
}
