//! Computation-tree semantics for gossip protocols.
//!
//! The tree's nodes are call sequences; a node gets a child per call whose
//! guard holds there. Exploration is depth-first and prunes any extension
//! that would repeat an earlier call with the same resulting situation:
//! such an extension can be repeated forever (the run between the two
//! occurrences is stationary and guards are insensitive to removing the
//! repeat), so it is recorded as a lasso witnessing divergence instead of
//! being expanded. Pruned paths carry no information the reduced tree does
//! not: removing the repeated call preserves the truth of every non-nested
//! formula, hence guard truth and the leaf condition. Pruned paths are also
//! finite, which is what makes full exploration terminate.
//!
//! Guard evaluation keeps one incremental indistinguishability frontier per
//! knowledge-owning agent, pushed and popped alongside the search path, so
//! each knowledge guard is decided against a precomputed situation set.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::equivalence::ClassFrontier;
use crate::logic::{eval_propositional, EvalConfig, EvalError, EvalVerdict, Evaluator, Formula};
use crate::model::{
    AgentId, Call, CallSequence, Digraph, GossipSituation, ModelError,
};
use crate::parse::AgentTable;
use crate::protocol::{Protocol, RuleId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("the protocol diverges; computation lengths are undefined")]
    Diverging,
    #[error("exploration exhausted its budget before completing")]
    Truncated,
    #[error("internal error: {0}")]
    Internal(String),
}

/// Budgets and options for exploration.
#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Maximum number of nodes visited before giving up.
    pub node_budget: usize,
    /// Hard depth cap; `None` means the fourth power of the agent count,
    /// beyond which every sequence contains a redundant call anyway.
    pub depth_budget: Option<usize>,
    /// Stop expanding below this sequence length (used for prefix
    /// enumeration); `None` explores to the leaves.
    pub len_bound: Option<usize>,
    /// Collect every visited sequence, not only the leaves.
    pub record_prefixes: bool,
    /// Prune redundant extensions into lassos. Disabled only by the
    /// unreduced cross-check, which must be length-bounded.
    pub prune_redundant: bool,
    /// Quantify knowledge over the protocol digraph instead of the
    /// complete one.
    pub quantify_protocol_graph: bool,
    /// Representative length bound handed to bounded formula evaluation.
    pub rep_bound: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            node_budget: 10_000_000,
            depth_budget: None,
            len_bound: None,
            record_prefixes: false,
            prune_redundant: true,
            quantify_protocol_graph: false,
            rep_bound: crate::logic::DEFAULT_REP_BOUND,
        }
    }
}

impl ExploreConfig {
    pub fn with_len_bound(mut self, bound: usize) -> Self {
        self.len_bound = Some(bound);
        self
    }

    pub fn recording_prefixes(mut self) -> Self {
        self.record_prefixes = true;
        self
    }

    fn knowledge_digraph(&self, p: &Protocol) -> Result<Digraph, ModelError> {
        if self.quantify_protocol_graph {
            Ok(p.digraph().clone())
        } else {
            Digraph::complete(p.agent_count())
        }
    }

    fn eval_config(&self, p: &Protocol) -> Result<EvalConfig, ModelError> {
        Ok(EvalConfig::new(p.agent_count())?
            .with_quantify(self.knowledge_digraph(p)?)
            .with_rep_bound(self.rep_bound))
    }
}

/// A node of the computation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub sequence: CallSequence,
    pub situation: GossipSituation,
}

impl Node {
    pub fn from_sequence(n: usize, sequence: CallSequence) -> Result<Self, ModelError> {
        let situation = GossipSituation::initial(n)?.apply_sequence(&sequence);
        Ok(Node {
            sequence,
            situation,
        })
    }
}

/// A divergence witness: after `stem`, firing `rule` would repeat
/// `repeated_call` with the same situation it produced at `first_pos`.
/// Both `stem.repeated_call^ω` and cycling the whole stationary segment
/// between the occurrences are infinite computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: CallSequence,
    pub repeated_call: Call,
    pub rule: RuleId,
    pub first_pos: usize,
}

impl Lasso {
    /// Position the repeated call would occupy.
    pub fn second_pos(&self) -> usize {
        self.stem.len()
    }

    /// The prefix up to and including the first occurrence.
    pub fn entry(&self) -> CallSequence {
        self.stem.prefix(self.first_pos + 1)
    }

    /// The stationary segment strictly after the first occurrence, ending
    /// with the repeated call; cycling it forever extends the entry into an
    /// infinite computation.
    pub fn period(&self) -> CallSequence {
        let mut calls: Vec<Call> = self.stem.calls()[self.first_pos + 1..].to_vec();
        calls.push(self.repeated_call);
        CallSequence::new(calls)
    }

    /// `stem` extended by the repeated call.
    pub fn full_prefix(&self) -> CallSequence {
        self.stem.extended(self.repeated_call)
    }
}

/// Everything exploration found.
#[derive(Debug, Clone)]
pub struct ExplorationReport {
    pub n: usize,
    /// Nodes with no enabled rule.
    pub leaves: BTreeSet<CallSequence>,
    /// Divergence witnesses, in discovery order.
    pub lassos: Vec<Lasso>,
    pub explored_nodes: usize,
    /// Node or depth budget ran out; leaves and lassos may be incomplete.
    pub truncated: bool,
    /// Some node still had enabled rules at the length bound.
    pub len_capped: bool,
    /// Visited sequences, when requested.
    pub prefixes: Option<BTreeSet<CallSequence>>,
    /// False when the protocol carries permissive guards, putting the
    /// guard-stability reasoning outside the usual assumptions.
    pub restricted_guards: bool,
}

impl ExplorationReport {
    /// True when the reduced tree was explored in full.
    pub fn complete(&self) -> bool {
        !self.truncated && !self.len_capped
    }

    pub fn to_json(&self, agents: &AgentTable) -> serde_json::Value {
        let seq = |s: &CallSequence| render_sequence(s, agents);
        serde_json::json!({
            "agents": self.n,
            "leaves": self.leaves.iter().map(seq).collect::<Vec<_>>(),
            "lasso_count": self.lassos.len(),
            "lassos": self.lassos.iter().take(50).map(|l| {
                serde_json::json!({
                    "stem": seq(&l.stem),
                    "repeated_call": render_sequence(
                        &CallSequence::new(vec![l.repeated_call]), agents),
                    "period": seq(&l.period()),
                    "first_pos": l.first_pos,
                    "second_pos": l.second_pos(),
                })
            }).collect::<Vec<_>>(),
            "explored_nodes": self.explored_nodes,
            "truncated": self.truncated,
            "len_capped": self.len_capped,
            "restricted_guards": self.restricted_guards,
        })
    }
}

/// Renders a sequence using the protocol's agent names.
pub fn render_sequence(seq: &CallSequence, agents: &AgentTable) -> String {
    if seq.is_empty() {
        return "ε".to_string();
    }
    if agents.single_letter() {
        seq.iter()
            .map(|c| format!("{}{}", agents.name(c.caller), agents.name(c.callee)))
            .collect::<Vec<_>>()
            .join(",")
    } else {
        seq.iter()
            .map(|c| format!("{} {}", agents.name(c.caller), agents.name(c.callee)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// All rules whose guards hold after `seq`, in canonical (agent, index)
/// order. Standalone counterpart of the explorer's incremental evaluation.
pub fn enabled_rules(
    p: &Protocol,
    seq: &CallSequence,
    cfg: &ExploreConfig,
) -> Result<Vec<RuleId>, EngineError> {
    let eval_cfg = cfg.eval_config(p)?;
    let evaluator = Evaluator::new(&eval_cfg);
    let mut out = Vec::new();
    for (id, rule) in p.rules() {
        if evaluator.eval(&rule.guard, seq)?.value {
            out.push(id);
        }
    }
    Ok(out)
}

struct Explorer<'p> {
    p: &'p Protocol,
    cfg: &'p ExploreConfig,
    depth_budget: usize,
    // one frontier per agent owning a knowledge guard
    frontiers: Vec<Option<ClassFrontier>>,
    seq: Vec<Call>,
    // trace[i] = situation after the first i calls
    trace: Vec<GossipSituation>,
    leaves: BTreeSet<CallSequence>,
    lassos: Vec<Lasso>,
    prefixes: Option<BTreeSet<CallSequence>>,
    nodes: usize,
    truncated: bool,
    len_capped: bool,
    // enabled-set cache by situation, sound for propositional protocols
    prop_memo: Option<HashMap<GossipSituation, Rc<Vec<RuleId>>>>,
}

fn know_owners(f: &Formula, out: &mut BTreeSet<AgentId>) {
    match f {
        Formula::Atom(..) => {}
        Formula::Not(g) => know_owners(g, out),
        Formula::And(l, r) => {
            know_owners(l, out);
            know_owners(r, out);
        }
        Formula::Know(a, g) => {
            out.insert(*a);
            know_owners(g, out);
        }
        Formula::Common(g, body) => {
            out.extend(g.iter().copied());
            know_owners(body, out);
        }
    }
}

fn eval_guard(
    f: &Formula,
    sit: &GossipSituation,
    frontiers: &[Option<ClassFrontier>],
) -> bool {
    match f {
        Formula::Atom(a, s) => sit.knows(*a, *s),
        Formula::Not(g) => !eval_guard(g, sit, frontiers),
        Formula::And(l, r) => eval_guard(l, sit, frontiers) && eval_guard(r, sit, frontiers),
        Formula::Know(a, body) => frontiers[a.0]
            .as_ref()
            .expect("frontier maintained for every knowledge owner")
            .current()
            .iter()
            .all(|s| eval_propositional(body, s)),
        Formula::Common(..) => unreachable!("guards cannot contain common knowledge"),
    }
}

impl<'p> Explorer<'p> {
    fn new(p: &'p Protocol, cfg: &'p ExploreConfig) -> Result<Self, EngineError> {
        let n = p.agent_count();
        let knowledge_g = cfg.knowledge_digraph(p)?;
        let mut owners = BTreeSet::new();
        for (_, rule) in p.rules() {
            know_owners(&rule.guard, &mut owners);
        }
        let mut frontiers: Vec<Option<ClassFrontier>> = vec![None; n];
        for a in owners {
            frontiers[a.0] = Some(ClassFrontier::new(a, n, &knowledge_g)?);
        }
        let propositional = frontiers.iter().all(|f| f.is_none());
        let root = GossipSituation::initial(n)?;
        Ok(Explorer {
            p,
            cfg,
            depth_budget: cfg.depth_budget.unwrap_or_else(|| n.pow(4)),
            frontiers,
            seq: Vec::new(),
            trace: vec![root],
            leaves: BTreeSet::new(),
            lassos: Vec::new(),
            prefixes: cfg.record_prefixes.then(BTreeSet::new),
            nodes: 0,
            truncated: false,
            len_capped: false,
            prop_memo: propositional.then(HashMap::new),
        })
    }

    fn enabled_here(&mut self) -> Rc<Vec<RuleId>> {
        let sit = self.trace.last().unwrap();
        if let Some(memo) = &self.prop_memo {
            if let Some(hit) = memo.get(sit) {
                return Rc::clone(hit);
            }
        }
        let ids: Vec<RuleId> = self
            .p
            .rules()
            .filter(|(_, rule)| eval_guard(&rule.guard, sit, &self.frontiers))
            .map(|(id, _)| id)
            .collect();
        let ids = Rc::new(ids);
        if let Some(memo) = &mut self.prop_memo {
            memo.insert(self.trace.last().unwrap().clone(), Rc::clone(&ids));
        }
        ids
    }

    fn visit(&mut self) {
        if self.nodes >= self.cfg.node_budget {
            self.truncated = true;
            return;
        }
        self.nodes += 1;
        if let Some(prefixes) = &mut self.prefixes {
            prefixes.insert(CallSequence::new(self.seq.clone()));
        }
        let depth = self.seq.len();
        let enabled = self.enabled_here();
        if enabled.is_empty() {
            self.leaves.insert(CallSequence::new(self.seq.clone()));
            return;
        }
        if let Some(bound) = self.cfg.len_bound {
            if depth >= bound {
                self.len_capped = true;
                return;
            }
        }
        if depth >= self.depth_budget {
            self.truncated = true;
            return;
        }
        // one child per distinct enabled call, attributed to the first rule
        let mut children: Vec<(Call, RuleId)> = Vec::with_capacity(enabled.len());
        for &id in enabled.iter() {
            let call = self.p.rule(id).call;
            if !children.iter().any(|(c, _)| *c == call) {
                children.push((call, id));
            }
        }
        for (call, rule) in children {
            let after = self.trace.last().unwrap().apply_call(call);
            if self.cfg.prune_redundant {
                let repeat = (0..self.seq.len())
                    .find(|&i| self.seq[i] == call && self.trace[i + 1] == after);
                if let Some(first_pos) = repeat {
                    self.lassos.push(Lasso {
                        stem: CallSequence::new(self.seq.clone()),
                        repeated_call: call,
                        rule,
                        first_pos,
                    });
                    continue;
                }
            }
            self.seq.push(call);
            self.trace.push(after.clone());
            for f in self.frontiers.iter_mut().flatten() {
                f.push(call, &after);
            }
            self.visit();
            for f in self.frontiers.iter_mut().flatten() {
                f.pop();
            }
            self.trace.pop();
            self.seq.pop();
            if self.truncated {
                return;
            }
        }
    }

    fn into_report(self) -> ExplorationReport {
        ExplorationReport {
            n: self.p.agent_count(),
            leaves: self.leaves,
            lassos: self.lassos,
            explored_nodes: self.nodes,
            truncated: self.truncated,
            len_capped: self.len_capped,
            prefixes: self.prefixes,
            restricted_guards: self.p.is_restricted(),
        }
    }
}

/// Explores the (reduced) computation tree.
pub fn explore(p: &Protocol, cfg: &ExploreConfig) -> Result<ExplorationReport, EngineError> {
    let mut explorer = Explorer::new(p, cfg)?;
    explorer.visit();
    Ok(explorer.into_report())
}

/// Verdict on termination of every computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TerminationVerdict {
    Terminates,
    /// Some computation runs forever; the lasso is a concrete witness.
    Diverges(Lasso),
    /// Budget ran out with no witness either way.
    Unknown { explored_nodes: usize },
}

impl TerminationVerdict {
    pub fn terminates(&self) -> bool {
        matches!(self, TerminationVerdict::Terminates)
    }
}

/// Reads the termination verdict off an exploration report.
pub fn termination_verdict(report: &ExplorationReport) -> TerminationVerdict {
    if let Some(lasso) = report.lassos.first() {
        return TerminationVerdict::Diverges(lasso.clone());
    }
    if report.complete() {
        TerminationVerdict::Terminates
    } else {
        TerminationVerdict::Unknown {
            explored_nodes: report.explored_nodes,
        }
    }
}

/// Explores and decides termination.
pub fn decide_termination(p: &Protocol, cfg: &ExploreConfig) -> Result<TerminationVerdict, EngineError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = None;
    Ok(termination_verdict(&explore(p, &cfg)?))
}

/// Verdict on a universally quantified leaf condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessVerdict {
    pub correct: bool,
    /// First failing leaf in canonical order, if any.
    pub counterexample: Option<CallSequence>,
    /// Whether every leaf was seen; an incorrectness witness would be
    /// definitive even on a truncated exploration.
    pub complete: bool,
    /// False when a bounded evaluation contributed.
    pub exact: bool,
}

/// Checks that every leaf situation makes all agents experts.
pub fn partial_correctness(report: &ExplorationReport) -> Result<CorrectnessVerdict, EngineError> {
    let mut counterexample = None;
    for leaf in &report.leaves {
        let sit = GossipSituation::initial(report.n)?.apply_sequence(leaf);
        if !sit.all_experts() {
            counterexample = Some(leaf.clone());
            break;
        }
    }
    Ok(CorrectnessVerdict {
        correct: counterexample.is_none(),
        counterexample,
        complete: report.complete(),
        exact: true,
    })
}

/// Explores and checks partial correctness.
pub fn check_partial_correctness(
    p: &Protocol,
    cfg: &ExploreConfig,
) -> Result<CorrectnessVerdict, EngineError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = None;
    partial_correctness(&explore(p, &cfg)?)
}

/// Checks that the formula holds at every leaf. Exact for non-nested
/// formulas; bounded otherwise, which the verdict records.
pub fn phi_correctness(
    p: &Protocol,
    report: &ExplorationReport,
    phi: &Formula,
    cfg: &ExploreConfig,
) -> Result<CorrectnessVerdict, EngineError> {
    let eval_cfg = cfg.eval_config(p)?;
    let evaluator = Evaluator::new(&eval_cfg);
    let mut exact = true;
    let mut counterexample = None;
    for leaf in &report.leaves {
        let verdict: EvalVerdict = evaluator.eval(phi, leaf)?;
        if !verdict.value {
            exact = verdict.exact;
            counterexample = Some(leaf.clone());
            break;
        }
        exact = exact && verdict.exact;
    }
    Ok(CorrectnessVerdict {
        correct: counterexample.is_none(),
        counterexample,
        complete: report.complete(),
        exact,
    })
}

/// Explores and checks the leaf condition `phi`.
pub fn check_phi_correctness(
    p: &Protocol,
    phi: &Formula,
    cfg: &ExploreConfig,
) -> Result<CorrectnessVerdict, EngineError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = None;
    let report = explore(p, &cfg)?;
    phi_correctness(p, &report, phi, &cfg)
}

/// Fairness classification of one lasso's infinite computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoClass {
    pub agent_fair: bool,
    pub rule_fair: bool,
    /// The stationary cycle that is repeated.
    pub period: CallSequence,
}

/// Classifies the infinite computation that enters at the lasso's first
/// occurrence and cycles the stationary segment forever. Enabledness along
/// the limit cycle is periodic because the segment is stationary and
/// guards are insensitive to removing redundant repeats, so one period
/// decides both fairness notions.
pub fn classify_lasso(
    p: &Protocol,
    lasso: &Lasso,
    cfg: &ExploreConfig,
) -> Result<LassoClass, EngineError> {
    let n = p.agent_count();
    let base = lasso.full_prefix();
    let period = lasso.period();
    // the segment between the occurrences must leave the situation fixed
    let mut sit = GossipSituation::initial(n)?.apply_sequence(&lasso.entry());
    let fixed = sit.clone();
    for &c in &base.calls()[lasso.first_pos + 1..] {
        sit.apply_call_mut(c);
        if sit != fixed {
            return Err(EngineError::Internal(
                "lasso cycle is not situation-stationary".into(),
            ));
        }
    }

    let mut enabled_ever: BTreeSet<RuleId> = BTreeSet::new();
    let mut taken: BTreeSet<RuleId> = BTreeSet::new();
    for (m, call) in period.iter().enumerate() {
        let prefix = base.prefix(lasso.first_pos + 1 + m);
        let enabled = enabled_rules(p, &prefix, cfg)?;
        let chosen = enabled
            .iter()
            .copied()
            .find(|id| p.rule(*id).call == call)
            .ok_or_else(|| {
                EngineError::Internal(format!(
                    "no enabled rule licenses period call {}",
                    call.render()
                ))
            })?;
        taken.insert(chosen);
        enabled_ever.extend(enabled);
    }
    let callers: BTreeSet<AgentId> = period.iter().map(|c| c.caller).collect();
    let rule_fair = enabled_ever.iter().all(|id| taken.contains(id));
    let agent_fair = enabled_ever
        .iter()
        .map(|id| id.agent)
        .all(|a| callers.contains(&a));
    Ok(LassoClass {
        agent_fair,
        rule_fair,
        period,
    })
}

/// Extremes of the leaf lengths of the reduced tree; defined only for
/// complete, lasso-free explorations.
pub fn length_bounds(report: &ExplorationReport) -> Result<(usize, usize), EngineError> {
    if !report.lassos.is_empty() {
        return Err(EngineError::Diverging);
    }
    if !report.complete() {
        return Err(EngineError::Truncated);
    }
    let min = report.leaves.iter().map(|l| l.len()).min().unwrap_or(0);
    let max = report.leaves.iter().map(|l| l.len()).max().unwrap_or(0);
    Ok((min, max))
}

/// Explores and reports the leaf-length extremes.
pub fn computation_length_bounds(
    p: &Protocol,
    cfg: &ExploreConfig,
) -> Result<(usize, usize), EngineError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = None;
    length_bounds(&explore(p, &cfg)?)
}

/// Walks the sequence step by step, requiring some enabled rule to license
/// each call. The check is literal: no redundancy reduction is applied.
pub fn is_generable(p: &Protocol, seq: &CallSequence, cfg: &ExploreConfig) -> Result<bool, EngineError> {
    let eval_cfg = cfg.eval_config(p)?;
    let evaluator = Evaluator::new(&eval_cfg);
    for (i, call) in seq.iter().enumerate() {
        let prefix = seq.prefix(i);
        let mut licensed = false;
        for (_, rule) in p.rules() {
            if rule.call == call && evaluator.eval(&rule.guard, &prefix)?.value {
                licensed = true;
                break;
            }
        }
        if !licensed {
            return Ok(false);
        }
    }
    Ok(true)
}
