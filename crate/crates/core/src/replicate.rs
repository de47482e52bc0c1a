//! Replication cases: a data-driven battery of known results.
//!
//! Cases are data, not code, so new checks can be added without
//! recompiling: the built-in manifest ships with the crate and the CLI
//! accepts an alternative manifest file. Each case names a scenario, the
//! expected outcome, and the check kind that a small runner interprets.

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::engine::{self, ExploreConfig};
use crate::logic::{self, AxiomKind, EvalConfig};
use crate::model::{centralized_sequence, situation_trace, CallSequence, Digraph};
use crate::parse::AgentTable;
use crate::protocol::{self, Builtin, Protocol};

/// Identifies a protocol in a manifest: a builtin instance or inline
/// source text.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum ProtoSpec {
    Builtin {
        builtin: String,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph: Option<String>,
    },
    Source { source: String },
}

impl ProtoSpec {
    pub fn resolve(&self) -> Result<Protocol, String> {
        match self {
            ProtoSpec::Builtin { builtin, n, graph } => {
                let which = Builtin::parse(builtin)
                    .ok_or_else(|| format!("unknown builtin `{builtin}`"))?;
                let g = match graph.as_deref() {
                    None => None,
                    Some("complete") => Some(Digraph::complete(*n).map_err(|e| e.to_string())?),
                    Some("path") => Some(Digraph::path(*n).map_err(|e| e.to_string())?),
                    Some("star") => Some(Digraph::star(*n).map_err(|e| e.to_string())?),
                    Some(other) => return Err(format!("unknown graph shape `{other}`")),
                };
                protocol::builtin(which, *n, g).map_err(|e| e.to_string())
            }
            ProtoSpec::Source { source } => {
                protocol::parse_protocol(source).map_err(|e| e.to_string())
            }
        }
    }
}

/// The checks a case can request.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    /// Applying the sequence from the initial situation passes through
    /// exactly these renderings (the initial situation included).
    SequenceTrace {
        n: usize,
        sequence: String,
        expect_trace: Vec<String>,
    },
    /// The built-in `2n - 4` centralized sequence makes everyone an expert.
    Centralized { n: usize },
    /// View equivalence of two sequences for an agent.
    Equivalent {
        n: usize,
        left: String,
        right: String,
        agent: String,
        expect: bool,
    },
    /// Formula evaluation after a sequence.
    Eval {
        n: usize,
        formula: String,
        sequence: String,
        expect: bool,
    },
    /// Exact truth of one of the named propositional schemes.
    AxiomTruth { n: usize, axiom: String },
    /// Bounded refutation search comes up empty for the named scheme.
    AxiomBoundedTruth { n: usize, axiom: String, bound: usize },
    /// Exploration-level expectations; absent fields are not checked.
    Explore {
        protocol: ProtoSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terminates: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        partially_correct: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correctness_witness: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leaf_count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leaf_lengths: Option<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leaves_starting: Option<LeavesStarting>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contains_leaf: Option<String>,
    },
    /// Leaf condition holds (or fails at the expected counterexample).
    PhiCorrect {
        protocol: ProtoSpec,
        phi: String,
        expect: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counterexample: Option<String>,
    },
    /// Simulation of the second protocol by the first.
    Simulates {
        simulator: ProtoSpec,
        simulated: ProtoSpec,
        expect: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        counterexample: Option<String>,
    },
    Bisimilar {
        left: ProtoSpec,
        right: ProtoSpec,
        expect: bool,
    },
    /// The protocol diverges; lasso classifications match expectations.
    LassoClass {
        protocol: ProtoSpec,
        /// Some lasso classifies as agent-fair but not rule-fair.
        #[serde(default)]
        expect_agent_fair_not_rule_fair: bool,
        /// Every lasso classifies as rule-unfair.
        #[serde(default)]
        expect_no_rule_fair_lasso: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LeavesStarting {
    pub call: String,
    pub leaves: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReplicationCase {
    pub id: String,
    pub description: String,
    #[serde(flatten)]
    pub check: CheckSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CaseResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub details: String,
}

/// The manifest shipped with the crate.
pub fn builtin_manifest() -> Vec<ReplicationCase> {
    serde_json::from_str(include_str!("replicate_manifest.json"))
        .expect("the built-in manifest is well-formed")
}

pub fn parse_manifest(text: &str) -> Result<Vec<ReplicationCase>, serde_json::Error> {
    serde_json::from_str(text)
}

fn axiom_kind(name: &str) -> Result<AxiomKind, String> {
    match name {
        "chain" => Ok(AxiomKind::Chain),
        "reveal" => Ok(AxiomKind::Reveal),
        "only_caller" => Ok(AxiomKind::OnlyCaller),
        other => Err(format!("unknown axiom `{other}`")),
    }
}

fn check(case: &ReplicationCase) -> Result<String, String> {
    let cfg = ExploreConfig::default();
    match &case.check {
        CheckSpec::SequenceTrace {
            n,
            sequence,
            expect_trace,
        } => {
            let seq = CallSequence::parse(sequence).map_err(|e| e.to_string())?;
            let trace = situation_trace(*n, &seq).map_err(|e| e.to_string())?;
            let got: Vec<String> = trace.iter().map(|s| s.render()).collect();
            if &got == expect_trace {
                Ok(format!("trace {}", got.join(" -> ")))
            } else {
                Err(format!("expected {expect_trace:?}, got {got:?}"))
            }
        }
        CheckSpec::Centralized { n } => {
            let seq = centralized_sequence(*n).map_err(|e| e.to_string())?;
            let len = seq.len();
            if len != 2 * n - 4 {
                return Err(format!("sequence has {len} calls, expected {}", 2 * n - 4));
            }
            let trace = situation_trace(*n, &seq).map_err(|e| e.to_string())?;
            if !trace.last().unwrap().all_experts() {
                return Err("final situation is not all-expert".into());
            }
            Ok(format!("all experts after {len} calls"))
        }
        CheckSpec::Equivalent {
            n,
            left,
            right,
            agent,
            expect,
        } => {
            let table = AgentTable::letters(*n).map_err(|e| e.to_string())?;
            let a = table
                .resolve(agent)
                .ok_or_else(|| format!("unknown agent `{agent}`"))?;
            let l = CallSequence::parse(left).map_err(|e| e.to_string())?;
            let r = CallSequence::parse(right).map_err(|e| e.to_string())?;
            let got = crate::equivalence::equivalent(&l, &r, a, *n).map_err(|e| e.to_string())?;
            if got == *expect {
                Ok(format!("equivalent = {got}"))
            } else {
                Err(format!("expected {expect}, got {got}"))
            }
        }
        CheckSpec::Eval {
            n,
            formula,
            sequence,
            expect,
        } => {
            let table = AgentTable::letters(*n).map_err(|e| e.to_string())?;
            let f = logic::parse_formula(formula, &table).map_err(|e| e.to_string())?;
            let seq = CallSequence::parse(sequence).map_err(|e| e.to_string())?;
            let eval_cfg = EvalConfig::new(*n).map_err(|e| e.to_string())?;
            let v = logic::eval(&f, &seq, &eval_cfg).map_err(|e| e.to_string())?;
            if v.value == *expect {
                Ok(format!("value = {} (exact = {})", v.value, v.exact))
            } else {
                Err(format!("expected {expect}, got {}", v.value))
            }
        }
        CheckSpec::AxiomTruth { n, axiom } => {
            let f = logic::build_axiom(*n, axiom_kind(axiom)?).map_err(|e| e.to_string())?;
            let g = Digraph::complete(*n).map_err(|e| e.to_string())?;
            match logic::is_true_l0(&f, *n, &g).map_err(|e| e.to_string())? {
                logic::L0Truth::Valid => Ok("true at every reachable situation".into()),
                logic::L0Truth::Refuted { situation, witness } => Err(format!(
                    "refuted at {} (via {})",
                    situation.render(),
                    witness.render()
                )),
            }
        }
        CheckSpec::AxiomBoundedTruth { n, axiom, bound } => {
            let f = logic::build_axiom(*n, axiom_kind(axiom)?).map_err(|e| e.to_string())?;
            let g = Digraph::complete(*n).map_err(|e| e.to_string())?;
            let eval_cfg = EvalConfig::new(*n).map_err(|e| e.to_string())?;
            match logic::holds_for_all_bounded(&f, &g, *bound, &eval_cfg)
                .map_err(|e| e.to_string())?
            {
                logic::BoundedTruth::NoCounterexample { bound } => {
                    Ok(format!("no counterexample up to length {bound}"))
                }
                logic::BoundedTruth::Refuted { witness, .. } => {
                    Err(format!("refuted at {}", witness.render()))
                }
            }
        }
        CheckSpec::Explore {
            protocol,
            terminates,
            partially_correct,
            correctness_witness,
            leaf_count,
            leaf_lengths,
            leaves_starting,
            contains_leaf,
        } => {
            let p = protocol.resolve()?;
            let report = engine::explore(&p, &cfg).map_err(|e| e.to_string())?;
            let mut notes = Vec::new();
            if let Some(expect) = terminates {
                let got = engine::termination_verdict(&report).terminates();
                if got != *expect {
                    return Err(format!("terminates: expected {expect}, got {got}"));
                }
                notes.push(format!("terminates = {got}"));
            }
            if let Some(expect) = partially_correct {
                let verdict = engine::partial_correctness(&report).map_err(|e| e.to_string())?;
                if verdict.correct != *expect {
                    return Err(format!(
                        "partial correctness: expected {expect}, got {}",
                        verdict.correct
                    ));
                }
                notes.push(format!("partially correct = {}", verdict.correct));
                if let Some(expect_witness) = correctness_witness {
                    let got = verdict
                        .counterexample
                        .as_ref()
                        .map(|s| s.render())
                        .unwrap_or_default();
                    if &got != expect_witness {
                        return Err(format!(
                            "witness: expected {expect_witness}, got {got}"
                        ));
                    }
                    notes.push(format!("witness = {got}"));
                }
            }
            if let Some(expect) = leaf_count {
                let got = report.leaves.len();
                if got != *expect {
                    return Err(format!("leaf count: expected {expect}, got {got}"));
                }
                notes.push(format!("{got} leaves"));
            }
            if let Some((min, max)) = leaf_lengths {
                let got = engine::length_bounds(&report).map_err(|e| e.to_string())?;
                if got != (*min, *max) {
                    return Err(format!(
                        "leaf lengths: expected ({min}, {max}), got {got:?}"
                    ));
                }
                notes.push(format!("leaf lengths {got:?}"));
            }
            if let Some(starting) = leaves_starting {
                let first = crate::model::Call::parse(&starting.call).map_err(|e| e.to_string())?;
                let got: std::collections::BTreeSet<String> = report
                    .leaves
                    .iter()
                    .filter(|l| l.calls().first() == Some(&first))
                    .map(|l| l.render())
                    .collect();
                let expect: std::collections::BTreeSet<String> =
                    starting.leaves.iter().cloned().collect();
                if got != expect {
                    return Err(format!(
                        "leaves starting {}: expected {expect:?}, got {got:?}",
                        starting.call
                    ));
                }
                notes.push(format!(
                    "{} leaves start with {}",
                    got.len(),
                    starting.call
                ));
            }
            if let Some(leaf) = contains_leaf {
                let want = CallSequence::parse(leaf).map_err(|e| e.to_string())?;
                if !report.leaves.contains(&want) {
                    return Err(format!("missing leaf {leaf}"));
                }
                notes.push(format!("contains leaf {leaf}"));
            }
            Ok(notes.join("; "))
        }
        CheckSpec::PhiCorrect {
            protocol,
            phi,
            expect,
            counterexample,
        } => {
            let p = protocol.resolve()?;
            let table = p.agents().clone();
            let f = logic::parse_formula(phi, &table).map_err(|e| e.to_string())?;
            let verdict =
                engine::check_phi_correctness(&p, &f, &cfg).map_err(|e| e.to_string())?;
            if verdict.correct != *expect {
                return Err(format!(
                    "expected correct = {expect}, got {}",
                    verdict.correct
                ));
            }
            if let Some(expect_cx) = counterexample {
                let got = verdict
                    .counterexample
                    .as_ref()
                    .map(|s| s.render())
                    .unwrap_or_default();
                if &got != expect_cx {
                    return Err(format!("counterexample: expected {expect_cx}, got {got}"));
                }
            }
            Ok(format!("correct = {} (exact = {})", verdict.correct, verdict.exact))
        }
        CheckSpec::Simulates {
            simulator,
            simulated,
            expect,
            counterexample,
        } => {
            let p = simulator.resolve()?;
            let q = simulated.resolve()?;
            let verdict = analysis::simulates(&p, &q, &cfg).map_err(|e| e.to_string())?;
            if verdict.simulates != *expect {
                return Err(format!(
                    "expected simulates = {expect}, got {}",
                    verdict.simulates
                ));
            }
            if let Some(expect_cx) = counterexample {
                let got = verdict
                    .counterexample
                    .as_ref()
                    .map(|s| s.render())
                    .unwrap_or_default();
                if &got != expect_cx {
                    return Err(format!("counterexample: expected {expect_cx}, got {got}"));
                }
            }
            Ok(format!(
                "simulates = {} (bound {}, exhausted = {})",
                verdict.simulates, verdict.bound_used, verdict.exhausted
            ))
        }
        CheckSpec::Bisimilar {
            left,
            right,
            expect,
        } => {
            let p = left.resolve()?;
            let q = right.resolve()?;
            let verdict = analysis::bisimilar(&p, &q, &cfg).map_err(|e| e.to_string())?;
            if verdict.bisimilar == *expect {
                Ok(format!("bisimilar = {}", verdict.bisimilar))
            } else {
                Err(format!("expected {expect}, got {}", verdict.bisimilar))
            }
        }
        CheckSpec::LassoClass {
            protocol,
            expect_agent_fair_not_rule_fair,
            expect_no_rule_fair_lasso,
        } => {
            let p = protocol.resolve()?;
            let report = engine::explore(&p, &cfg).map_err(|e| e.to_string())?;
            if report.lassos.is_empty() {
                return Err("expected divergence witnesses, found none".into());
            }
            let mut agent_fair_not_rule_fair = false;
            let mut rule_fair_count = 0usize;
            for lasso in &report.lassos {
                let class = engine::classify_lasso(&p, lasso, &cfg).map_err(|e| e.to_string())?;
                if class.agent_fair && !class.rule_fair {
                    agent_fair_not_rule_fair = true;
                }
                if class.rule_fair {
                    rule_fair_count += 1;
                }
            }
            if *expect_agent_fair_not_rule_fair && !agent_fair_not_rule_fair {
                return Err("no agent-fair, rule-unfair lasso found".into());
            }
            if *expect_no_rule_fair_lasso && rule_fair_count > 0 {
                return Err(format!("{rule_fair_count} rule-fair lassos found"));
            }
            Ok(format!(
                "{} lassos, agent-fair/rule-unfair witness = {agent_fair_not_rule_fair}",
                report.lassos.len()
            ))
        }
    }
}

pub fn run_case(case: &ReplicationCase) -> CaseResult {
    match check(case) {
        Ok(details) => CaseResult {
            id: case.id.clone(),
            description: case.description.clone(),
            passed: true,
            details,
        },
        Err(details) => CaseResult {
            id: case.id.clone(),
            description: case.description.clone(),
            passed: false,
            details,
        },
    }
}

pub fn run_all(cases: &[ReplicationCase]) -> Vec<CaseResult> {
    cases.iter().map(run_case).collect()
}
