//! Simulation and bisimulation between protocols.
//!
//! One protocol simulates another when its computation tree contains the
//! other's as a subtree, which over prefix trees is containment of the
//! generated sequence sets. A missing sequence of length at most the
//! fourth power of the agent count always exists when simulation fails,
//! so the check enumerates the simulated protocol's reduced prefixes up to
//! that bound and verifies each against the simulator's rules, stopping
//! early when the simulated frontier is exhausted.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::engine::{explore, EngineError, ExploreConfig};
use crate::logic::Evaluator;
use crate::model::CallSequence;
use crate::protocol::Protocol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("protocols have different agent counts: {0} vs {1}")]
    AgentCountMismatch(usize, usize),
}

/// All redundancy-free sequences of length at most `len_bound` generable by
/// the protocol. Prefix-closed by construction.
pub fn generated_prefixes(
    p: &Protocol,
    len_bound: usize,
    cfg: &ExploreConfig,
) -> Result<BTreeSet<CallSequence>, AnalysisError> {
    let report = generated_prefixes_report(p, len_bound, cfg)?;
    if report.truncated {
        return Err(EngineError::Truncated.into());
    }
    Ok(report.prefixes.expect("prefixes recorded"))
}

/// [`generated_prefixes`] returning the full exploration report, including
/// the truncation flag.
pub fn generated_prefixes_report(
    p: &Protocol,
    len_bound: usize,
    cfg: &ExploreConfig,
) -> Result<crate::engine::ExplorationReport, AnalysisError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = Some(len_bound);
    cfg.record_prefixes = true;
    Ok(explore(p, &cfg)?)
}

/// Generable sequences without redundancy pruning, for cross-checking the
/// reduced enumeration at toy sizes. Always length-bounded.
pub fn generated_prefixes_unreduced(
    p: &Protocol,
    len_bound: usize,
    cfg: &ExploreConfig,
) -> Result<BTreeSet<CallSequence>, AnalysisError> {
    let mut cfg = cfg.clone();
    cfg.len_bound = Some(len_bound);
    cfg.record_prefixes = true;
    cfg.prune_redundant = false;
    let report = explore(p, &cfg)?;
    if report.truncated {
        return Err(EngineError::Truncated.into());
    }
    Ok(report.prefixes.expect("prefixes recorded"))
}

/// Outcome of a simulation check of `simulator` against `simulated`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationVerdict {
    pub simulates: bool,
    /// Shortest (then lexicographically first) sequence generable by the
    /// simulated protocol but not by the simulator.
    pub counterexample: Option<CallSequence>,
    /// Length bound the enumeration ran to.
    pub bound_used: usize,
    /// True when the simulated protocol's reduced frontier was exhausted
    /// within the bound, making a positive verdict unconditional.
    pub exhausted: bool,
}

impl SimulationVerdict {
    /// A positive verdict that additionally covered the whole frontier.
    pub fn definitive(&self) -> bool {
        !self.simulates || self.exhausted
    }
}

/// Checks whether `p` can simulate `q`: every sequence `q` generates must
/// be generable by `p`. Counterexamples are re-verified against both
/// protocols with a literal generability walk before being reported. The
/// default bound, the fourth power of the agent count, is complete: a
/// missing sequence always exists below it when simulation fails.
pub fn simulates(
    p: &Protocol,
    q: &Protocol,
    cfg: &ExploreConfig,
) -> Result<SimulationVerdict, AnalysisError> {
    simulates_bounded(p, q, None, cfg)
}

/// [`simulates`] with an explicit length-bound override.
pub fn simulates_bounded(
    p: &Protocol,
    q: &Protocol,
    bound: Option<usize>,
    cfg: &ExploreConfig,
) -> Result<SimulationVerdict, AnalysisError> {
    let n = p.agent_count();
    if n != q.agent_count() {
        return Err(AnalysisError::AgentCountMismatch(n, q.agent_count()));
    }
    let bound = bound.unwrap_or_else(|| n.pow(4));
    let q_report = generated_prefixes_report(q, bound, cfg)?;
    if q_report.truncated {
        return Err(EngineError::Truncated.into());
    }
    let exhausted = !q_report.len_capped;
    let q_prefixes = q_report.prefixes.expect("prefixes recorded");

    // shortest-first, lexicographic within a length
    let mut ordered: Vec<&CallSequence> = q_prefixes.iter().collect();
    ordered.sort_by_key(|s| (s.len(), (*s).clone()));

    let eval_cfg = ExploreConfig {
        quantify_protocol_graph: cfg.quantify_protocol_graph,
        ..cfg.clone()
    }
    .eval_config_for(p)?;
    let evaluator = Evaluator::new(&eval_cfg);
    // calls p licenses after each already-verified q-prefix
    let mut licensed: HashMap<&CallSequence, BTreeSet<crate::model::Call>> = HashMap::new();
    for seq in &ordered {
        if seq.is_empty() {
            continue;
        }
        let parent = seq.prefix(seq.len() - 1);
        let last = *seq.calls().last().unwrap();
        let parent_ref = q_prefixes.get(&parent).expect("prefix-closed enumeration");
        if !licensed.contains_key(parent_ref) {
            let mut set = BTreeSet::new();
            for (_, rule) in p.rules() {
                if !set.contains(&rule.call)
                    && evaluator
                        .eval(&rule.guard, &parent)
                        .map_err(EngineError::from)?
                        .value
                {
                    set.insert(rule.call);
                }
            }
            licensed.insert(parent_ref, set);
        }
        if !licensed[parent_ref].contains(&last) {
            // verify the witness literally on both sides
            let on_q = crate::engine::is_generable(q, seq, cfg)?;
            let on_p = crate::engine::is_generable(p, seq, cfg)?;
            if !on_q || on_p {
                return Err(EngineError::Internal(format!(
                    "counterexample {} failed re-verification",
                    seq.render()
                ))
                .into());
            }
            return Ok(SimulationVerdict {
                simulates: false,
                counterexample: Some((*seq).clone()),
                bound_used: bound,
                exhausted,
            });
        }
    }
    Ok(SimulationVerdict {
        simulates: true,
        counterexample: None,
        bound_used: bound,
        exhausted,
    })
}

impl ExploreConfig {
    fn eval_config_for(&self, p: &Protocol) -> Result<crate::logic::EvalConfig, EngineError> {
        use crate::model::Digraph;
        let g = if self.quantify_protocol_graph {
            p.digraph().clone()
        } else {
            Digraph::complete(p.agent_count())?
        };
        Ok(crate::logic::EvalConfig::new(p.agent_count())
            .map_err(EngineError::from)?
            .with_quantify(g)
            .with_rep_bound(self.rep_bound))
    }
}

/// Outcome of a bisimulation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimulationVerdict {
    pub bisimilar: bool,
    /// The check of `p` against `q` and the reverse.
    pub forward: SimulationVerdict,
    pub backward: SimulationVerdict,
}

/// Both directions of [`simulates`].
pub fn bisimilar(
    p: &Protocol,
    q: &Protocol,
    cfg: &ExploreConfig,
) -> Result<BisimulationVerdict, AnalysisError> {
    let forward = simulates(p, q, cfg)?;
    let backward = simulates(q, p, cfg)?;
    Ok(BisimulationVerdict {
        bisimilar: forward.simulates && backward.simulates,
        forward,
        backward,
    })
}
