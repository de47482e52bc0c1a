//! `gossip` — evaluate epistemic formulas over call sequences, check
//! gossip protocols for termination and correctness, compare protocols by
//! simulation, and replicate the bundled result battery.
//!
//! Exit codes: 0 success/true, 1 false/fail, 2 usage error, 3 verdict is
//! only bound-relative (a budget or length bound limited the search).

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gossip_core::analysis::{self, SimulationVerdict};
use gossip_core::engine::{
    self, classify_lasso, render_sequence, ExploreConfig, TerminationVerdict,
};
use gossip_core::equivalence::{self, DEFAULT_SEQUENCE_BUDGET};
use gossip_core::logic::{self, BoundedTruth, EvalConfig, Fragment, L0Truth};
use gossip_core::model::{reachable_witnessed, CallSequence, Digraph};
use gossip_core::parse::AgentTable;
use gossip_core::protocol::{self, Builtin, Protocol, ProtocolOptions};
use gossip_core::replicate;

const EXIT_TRUE: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BOUNDED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gossip",
    version,
    about = "Epistemic gossip protocols: evaluation, verification, and comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Number of agents (default: inferred from the inputs, at least 3)
    #[arg(short = 'n', long)]
    agents: Option<usize>,
    /// Permit two-agent universes
    #[arg(long)]
    allow_small: bool,
    /// Emit machine-readable JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct BudgetOpts {
    /// Node budget for exploration
    #[arg(long, env = "GOSSIP_BUDGET_NODES", default_value_t = 10_000_000)]
    budget_nodes: usize,
    /// Depth budget for exploration (default: agent count to the fourth)
    #[arg(long, env = "GOSSIP_BUDGET_DEPTH")]
    budget_depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula after a call sequence
    Eval {
        /// Formula, e.g. "K(a, Exp(b))"
        formula: String,
        /// Comma-separated calls, e.g. "ab,ac,bc" (empty for none)
        sequence: String,
        /// Representative length bound for nested knowledge
        #[arg(long)]
        bound: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check whether a formula holds after every call sequence
    Truth {
        formula: String,
        /// Digraph restricting calls: complete | path | star | edge list
        #[arg(long, default_value = "complete")]
        digraph: String,
        /// Sequence length bound for the refutation search (non-propositional)
        #[arg(long, default_value_t = 6)]
        bound: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide indistinguishability of two call sequences for an agent
    Eqcheck {
        left: String,
        right: String,
        agent: String,
        /// Also run the saturation oracle and report agreement
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Explore a protocol: termination, correctness, lengths, witnesses
    Check {
        /// Protocol file (.gsp) or builtin spec like lns:3, exp:4:path
        protocol: String,
        /// Additionally check this formula at every leaf
        #[arg(long)]
        phi: Option<String>,
        /// Override the protocol's digraph (builtin specs only): complete | path | star
        #[arg(long)]
        digraph: Option<String>,
        /// Quantify knowledge over the protocol digraph instead of the
        /// complete one
        #[arg(long)]
        quantify_protocol_graph: bool,
        /// Accept guards outside the caller-owned fragment
        #[arg(long)]
        permissive: bool,
        #[command(flatten)]
        budget: BudgetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check whether the first protocol can simulate the second
    Simulate {
        simulator: String,
        simulated: String,
        /// Length bound override (default: agent count to the fourth)
        #[arg(long)]
        bound: Option<usize>,
        /// Check both directions
        #[arg(long)]
        bisim: bool,
        #[command(flatten)]
        budget: BudgetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the bundled replication cases (or one case by id)
    Replicate {
        /// Case id, or "all"
        #[arg(default_value = "all")]
        case: String,
        /// Alternative manifest file
        #[arg(long)]
        manifest: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Enumerate every situation reachable over a digraph
    Reachable {
        /// Digraph: complete | path | star | edge list a->b,b->a
        #[arg(long, default_value = "complete")]
        digraph: String,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn fail_usage(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn parse_digraph(spec: &str, n: usize) -> Result<Digraph, String> {
    match spec {
        "complete" => Digraph::complete(n).map_err(|e| e.to_string()),
        "path" => Digraph::path(n).map_err(|e| e.to_string()),
        "star" => Digraph::star(n).map_err(|e| e.to_string()),
        edges => {
            let table = AgentTable::letters(n).map_err(|e| e.to_string())?;
            let mut parsed = Vec::new();
            for part in edges.split(',') {
                let (from, to) = part
                    .trim()
                    .split_once("->")
                    .ok_or_else(|| format!("bad edge `{part}`; expected a->b"))?;
                let resolve = |s: &str| {
                    table
                        .resolve(s.trim())
                        .ok_or_else(|| format!("unknown agent `{}`", s.trim()))
                };
                parsed.push((resolve(from)?, resolve(to)?));
            }
            Digraph::new(n, parsed).map_err(|e| e.to_string())
        }
    }
}

/// Resolves a protocol argument: a builtin spec `name:n[:graph]` or a path
/// to a protocol source file.
fn resolve_protocol(
    spec: &str,
    digraph: Option<&str>,
    permissive: bool,
    allow_small: bool,
) -> Result<Protocol, String> {
    let options = ProtocolOptions {
        permissive_guards: permissive,
        allow_small,
    };
    let parts: Vec<&str> = spec.split(':').collect();
    if let Some(which) = Builtin::parse(parts[0]) {
        if parts.len() > 3 || parts.len() < 2 {
            return Err(format!(
                "builtin spec `{spec}` should be name:n or name:n:graph"
            ));
        }
        let n: usize = parts[1]
            .parse()
            .map_err(|_| format!("bad agent count `{}`", parts[1]))?;
        let graph_name = parts.get(2).copied().or(digraph);
        let g = graph_name.map(|name| parse_digraph(name, n)).transpose()?;
        return protocol::builtin_with(which, n, g, options).map_err(|e| e.to_string());
    }
    let text = fs::read_to_string(spec).map_err(|e| format!("cannot read `{spec}`: {e}"))?;
    if digraph.is_some() {
        return Err("--digraph applies to builtin specs only; declare a graph in the file".into());
    }
    protocol::parse_protocol_with(&text, options).map_err(|e| e.to_string())
}

/// Agent count inferred from single-letter mentions when not given.
fn infer_agents(
    explicit: Option<usize>,
    allow_small: bool,
    formula: Option<&str>,
    sequences: &[&str],
) -> Result<usize, String> {
    if let Some(n) = explicit {
        let min = if allow_small { 2 } else { 3 };
        if n < min {
            return Err(format!("at least {min} agents are required (got {n})"));
        }
        return Ok(n);
    }
    let mut max_index = 0usize;
    for text in sequences {
        let seq = CallSequence::parse(text).map_err(|e| e.to_string())?;
        max_index = max_index.max(seq.min_agents());
    }
    if let Some(text) = formula {
        for ch in text.chars() {
            if ch.is_ascii_alphabetic() {
                let idx = ch.to_ascii_lowercase() as usize - 'a' as usize + 1;
                // skip the grammar's own letters when they stand alone
                if !"FKCExp".contains(ch) {
                    max_index = max_index.max(idx);
                }
            }
        }
    }
    Ok(max_index.max(if allow_small { 2 } else { 3 }))
}

fn verdict_exit(value: bool, exact: bool) -> u8 {
    if !exact {
        EXIT_BOUNDED
    } else if value {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}

fn cmd_eval(
    formula: &str,
    sequence: &str,
    bound: Option<usize>,
    common: &CommonOpts,
) -> Result<u8, String> {
    let n = infer_agents(common.agents, common.allow_small, Some(formula), &[sequence])?;
    let table = AgentTable::letters(n).map_err(|e| e.to_string())?;
    let f = logic::parse_formula(formula, &table).map_err(|e| e.to_string())?;
    let seq = CallSequence::parse(sequence).map_err(|e| e.to_string())?;
    let mut cfg = EvalConfig::new(n).map_err(|e| e.to_string())?;
    if let Some(b) = bound {
        cfg = cfg.with_rep_bound(b);
    }
    let v = logic::eval(&f, &seq, &cfg).map_err(|e| e.to_string())?;
    let mode = if v.exact {
        "exact".to_string()
    } else {
        format!(
            "bounded (representatives up to length {})",
            cfg.rep_bound.max(seq.len())
        )
    };
    if common.json {
        println!(
            "{}",
            json!({
                "n": n,
                "formula": f.render(&table),
                "fragment": logic::fragment_of(&f).to_string(),
                "sequence": seq.render(),
                "value": v.value,
                "exact": v.exact,
                "mode": mode,
            })
        );
    } else {
        println!(
            "{} after {}: {} [{}]",
            f.render(&table),
            seq.render(),
            v.value,
            mode
        );
    }
    Ok(verdict_exit(v.value, v.exact))
}

fn cmd_truth(formula: &str, digraph: &str, bound: usize, common: &CommonOpts) -> Result<u8, String> {
    let n = infer_agents(common.agents, common.allow_small, Some(formula), &[])?;
    let table = AgentTable::letters(n).map_err(|e| e.to_string())?;
    let f = logic::parse_formula(formula, &table).map_err(|e| e.to_string())?;
    let g = parse_digraph(digraph, n)?;
    let fragment = logic::fragment_of(&f);
    if fragment == Fragment::L0 {
        let out = logic::is_true_l0(&f, n, &g).map_err(|e| e.to_string())?;
        match &out {
            L0Truth::Valid => {
                if common.json {
                    println!(
                        "{}",
                        json!({"n": n, "fragment": "L0", "valid": true, "exact": true})
                    );
                } else {
                    println!("valid: holds at every reachable situation (n = {n})");
                }
                Ok(EXIT_TRUE)
            }
            L0Truth::Refuted { situation, witness } => {
                if common.json {
                    println!(
                        "{}",
                        json!({
                            "n": n, "fragment": "L0", "valid": false, "exact": true,
                            "counterexample": {
                                "situation": situation.render(),
                                "witness": witness.render(),
                            },
                        })
                    );
                } else {
                    println!(
                        "refuted at {} (reached via {})",
                        situation.render(),
                        witness.render()
                    );
                }
                Ok(EXIT_FALSE)
            }
        }
    } else {
        let cfg = EvalConfig::new(n).map_err(|e| e.to_string())?;
        match logic::holds_for_all_bounded(&f, &g, bound, &cfg).map_err(|e| e.to_string())? {
            BoundedTruth::Refuted { witness, exact } => {
                if common.json {
                    println!(
                        "{}",
                        json!({
                            "n": n, "fragment": fragment.to_string(), "valid": false,
                            "exact": exact,
                            "counterexample": {"witness": witness.render()},
                        })
                    );
                } else {
                    println!("refuted after {} (exact = {exact})", witness.render());
                }
                Ok(if exact { EXIT_FALSE } else { EXIT_BOUNDED })
            }
            BoundedTruth::NoCounterexample { bound } => {
                if common.json {
                    println!(
                        "{}",
                        json!({
                            "n": n, "fragment": fragment.to_string(), "valid": true,
                            "exact": false, "bound": bound,
                        })
                    );
                } else {
                    println!(
                        "no counterexample among sequences of length <= {bound} (bound-relative)"
                    );
                }
                Ok(EXIT_BOUNDED)
            }
        }
    }
}

fn cmd_eqcheck(
    left: &str,
    right: &str,
    agent: &str,
    oracle: bool,
    common: &CommonOpts,
) -> Result<u8, String> {
    let n = infer_agents(common.agents, common.allow_small, Some(agent), &[left, right])?;
    let table = AgentTable::letters(n).map_err(|e| e.to_string())?;
    let a = table
        .resolve(agent)
        .ok_or_else(|| format!("unknown agent `{agent}`"))?;
    let l = CallSequence::parse(left).map_err(|e| e.to_string())?;
    let r = CallSequence::parse(right).map_err(|e| e.to_string())?;
    let value = equivalence::equivalent(&l, &r, a, n).map_err(|e| e.to_string())?;
    let mut oracle_value = None;
    if oracle {
        let bound = l.len().max(r.len());
        let by_oracle = equivalence::closure_oracle(&l, &r, a, n, bound, DEFAULT_SEQUENCE_BUDGET)
            .map_err(|e| e.to_string())?;
        if by_oracle != value {
            return Err(format!(
                "oracle disagreement: view says {value}, closure says {by_oracle}"
            ));
        }
        oracle_value = Some(by_oracle);
    }
    if common.json {
        println!(
            "{}",
            json!({
                "n": n, "agent": agent, "left": l.render(), "right": r.render(),
                "equivalent": value, "oracle": oracle_value,
            })
        );
    } else {
        let agreement = if oracle { " (oracle agrees)" } else { "" };
        println!("{} ~{agent} {}: {value}{agreement}", l.render(), r.render());
    }
    Ok(if value { EXIT_TRUE } else { EXIT_FALSE })
}

fn cmd_check(
    spec: &str,
    phi: Option<&str>,
    digraph: Option<&str>,
    quantify_protocol_graph: bool,
    permissive: bool,
    budget: &BudgetOpts,
    common: &CommonOpts,
) -> Result<u8, String> {
    let p = resolve_protocol(spec, digraph, permissive, common.allow_small)?;
    let cfg = ExploreConfig {
        node_budget: budget.budget_nodes,
        depth_budget: budget.budget_depth,
        quantify_protocol_graph,
        ..ExploreConfig::default()
    };
    let report = engine::explore(&p, &cfg).map_err(|e| e.to_string())?;
    let termination = engine::termination_verdict(&report);
    let correctness = engine::partial_correctness(&report).map_err(|e| e.to_string())?;
    let phi_result = match phi {
        None => None,
        Some(text) => {
            let f = logic::parse_formula(text, p.agents()).map_err(|e| e.to_string())?;
            let verdict =
                engine::phi_correctness(&p, &report, &f, &cfg).map_err(|e| e.to_string())?;
            Some((f.render(p.agents()), verdict))
        }
    };
    let lengths = engine::length_bounds(&report).ok();

    // classify lassos until an agent-fair, rule-unfair witness appears
    let mut first_class = None;
    let mut fair_witness = None;
    for lasso in report.lassos.iter().take(1000) {
        let class = classify_lasso(&p, lasso, &cfg).map_err(|e| e.to_string())?;
        if first_class.is_none() {
            first_class = Some((lasso.clone(), class.clone()));
        }
        if class.agent_fair && !class.rule_fair {
            fair_witness = Some((lasso.clone(), class));
            break;
        }
    }

    let agents = p.agents();
    let bounded = report.truncated || matches!(termination, TerminationVerdict::Unknown { .. });
    let ok = termination.terminates()
        && correctness.correct
        && phi_result.as_ref().map_or(true, |(_, v)| v.correct);

    if common.json {
        let lasso_json = |pair: &Option<(engine::Lasso, engine::LassoClass)>| {
            pair.as_ref().map(|(lasso, class)| {
                json!({
                    "stem": render_sequence(&lasso.stem, agents),
                    "repeated_call": render_sequence(
                        &CallSequence::new(vec![lasso.repeated_call]),
                        agents
                    ),
                    "period": render_sequence(&class.period, agents),
                    "agent_fair": class.agent_fair,
                    "rule_fair": class.rule_fair,
                })
            })
        };
        println!(
            "{}",
            json!({
                "n": p.agent_count(),
                "protocol": p.dump(),
                "digraph_connected": p.digraph().is_connected(),
                "restricted_guards": p.is_restricted(),
                "quantified_over": if quantify_protocol_graph {
                    "protocol digraph"
                } else {
                    "complete digraph"
                },
                "termination": match &termination {
                    TerminationVerdict::Terminates => json!({"verdict": "terminates"}),
                    TerminationVerdict::Diverges(_) => json!({
                        "verdict": "diverges",
                        "lasso": lasso_json(&first_class),
                        "agent_fair_witness": lasso_json(&fair_witness),
                    }),
                    TerminationVerdict::Unknown { explored_nodes } => json!({
                        "verdict": "unknown",
                        "explored_nodes": explored_nodes,
                    }),
                },
                "partially_correct": correctness.correct,
                "correctness_counterexample": correctness
                    .counterexample
                    .as_ref()
                    .map(|s| render_sequence(s, agents)),
                "phi": phi_result.as_ref().map(|(text, v)| json!({
                    "formula": text,
                    "correct": v.correct,
                    "exact": v.exact,
                    "counterexample": v
                        .counterexample
                        .as_ref()
                        .map(|s| render_sequence(s, agents)),
                })),
                "leaf_lengths": lengths,
                "leaf_count": report.leaves.len(),
                "stats": {
                    "explored_nodes": report.explored_nodes,
                    "lassos": report.lassos.len(),
                    "truncated": report.truncated,
                },
            })
        );
    } else {
        let graph_text = if p.digraph().is_complete() {
            "complete".to_string()
        } else {
            p.digraph()
                .edges()
                .map(|(a, b)| format!("{}->{}", agents.name(a), agents.name(b)))
                .collect::<Vec<_>>()
                .join(",")
        };
        println!("protocol over {} agents ({})", p.agent_count(), graph_text);
        if !p.digraph().is_connected() {
            println!("warning: the digraph is not connected");
        }
        if !p.is_restricted() {
            println!("warning: permissive guards; outside the usual guard assumptions");
        }
        match &termination {
            TerminationVerdict::Terminates => println!("termination: terminates"),
            TerminationVerdict::Diverges(lasso) => {
                println!(
                    "termination: diverges (after {} the call {} repeats forever)",
                    render_sequence(&lasso.stem, agents),
                    lasso.repeated_call.render()
                );
                if let Some((_, class)) = &fair_witness {
                    println!(
                        "  an agent-fair, rule-unfair run cycles {}",
                        render_sequence(&class.period, agents)
                    );
                }
            }
            TerminationVerdict::Unknown { explored_nodes } => {
                println!("termination: unknown (budget exhausted after {explored_nodes} nodes)");
            }
        }
        match &correctness.counterexample {
            None => println!("partial correctness: every leaf is all-expert"),
            Some(cx) => println!(
                "partial correctness: fails at leaf {}",
                render_sequence(cx, agents)
            ),
        }
        if let Some((text, v)) = &phi_result {
            match &v.counterexample {
                None => println!(
                    "phi-correctness of {text}: holds at every leaf (exact = {})",
                    v.exact
                ),
                Some(cx) => println!(
                    "phi-correctness of {text}: fails at leaf {} (exact = {})",
                    render_sequence(cx, agents),
                    v.exact
                ),
            }
        }
        if let Some((min, max)) = lengths {
            println!(
                "leaf lengths: {min}..{max} over {} leaves",
                report.leaves.len()
            );
        }
        println!(
            "explored {} nodes, {} lassos{}",
            report.explored_nodes,
            report.lassos.len(),
            if report.truncated { " (truncated)" } else { "" }
        );
    }
    Ok(if bounded {
        EXIT_BOUNDED
    } else if ok {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    })
}

fn simulation_json(v: &SimulationVerdict, agents: &AgentTable) -> serde_json::Value {
    json!({
        "simulates": v.simulates,
        "counterexample": v.counterexample.as_ref().map(|s| render_sequence(s, agents)),
        "bound": v.bound_used,
        "exhausted": v.exhausted,
        "definitive": v.definitive(),
    })
}

fn cmd_simulate(
    simulator: &str,
    simulated: &str,
    bound: Option<usize>,
    bisim: bool,
    budget: &BudgetOpts,
    common: &CommonOpts,
) -> Result<u8, String> {
    let p = resolve_protocol(simulator, None, false, common.allow_small)?;
    let q = resolve_protocol(simulated, None, false, common.allow_small)?;
    let cfg = ExploreConfig {
        node_budget: budget.budget_nodes,
        depth_budget: budget.budget_depth,
        ..ExploreConfig::default()
    };
    let forward = analysis::simulates_bounded(&p, &q, bound, &cfg).map_err(|e| e.to_string())?;
    let backward = if bisim {
        Some(analysis::simulates_bounded(&q, &p, bound, &cfg).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let agents = p.agents();
    if common.json {
        println!(
            "{}",
            json!({
                "n": p.agent_count(),
                "forward": simulation_json(&forward, agents),
                "backward": backward.as_ref().map(|v| simulation_json(v, agents)),
                "bisimilar": backward
                    .as_ref()
                    .map(|b| b.simulates && forward.simulates),
            })
        );
    } else {
        match &forward.counterexample {
            None => println!(
                "simulates: true (bound {}, exhausted = {})",
                forward.bound_used, forward.exhausted
            ),
            Some(cx) => println!(
                "simulates: false; witness {} is generable by the second protocol only",
                render_sequence(cx, agents)
            ),
        }
        if let Some(b) = &backward {
            println!("bisimilar: {}", b.simulates && forward.simulates);
        }
    }
    let value = forward.simulates && backward.as_ref().map_or(true, |b| b.simulates);
    let definitive = forward.definitive() && backward.as_ref().map_or(true, |b| b.definitive());
    Ok(if !definitive {
        EXIT_BOUNDED
    } else if value {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    })
}

fn cmd_replicate(case: &str, manifest: Option<&str>, common: &CommonOpts) -> Result<u8, String> {
    let cases = match manifest {
        None => replicate::builtin_manifest(),
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("cannot read `{path}`: {e}"))?;
            replicate::parse_manifest(&text).map_err(|e| e.to_string())?
        }
    };
    let selected: Vec<_> = if case == "all" {
        cases
    } else {
        let found: Vec<_> = cases.into_iter().filter(|c| c.id == case).collect();
        if found.is_empty() {
            return Err(format!("unknown case id `{case}`"));
        }
        found
    };
    let results = replicate::run_all(&selected);
    let failures = results.iter().filter(|r| !r.passed).count();
    if common.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&results).map_err(|e| e.to_string())?
        );
    } else {
        for r in &results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            println!("[{status}] {:<24} {}", r.id, r.description);
            if !r.passed {
                println!("       {}", r.details);
            }
        }
        println!("{} cases, {} failures", results.len(), failures);
    }
    Ok(if failures == 0 { EXIT_TRUE } else { EXIT_FALSE })
}

fn cmd_reachable(digraph: &str, common: &CommonOpts) -> Result<u8, String> {
    let n = infer_agents(common.agents, common.allow_small, None, &[])?;
    let g = parse_digraph(digraph, n)?;
    let witnessed = reachable_witnessed(n, &g).map_err(|e| e.to_string())?;
    if common.json {
        let items: Vec<_> = witnessed
            .iter()
            .map(|(s, seq)| json!({"situation": s.render(), "via": seq.render()}))
            .collect();
        println!(
            "{}",
            json!({
                "n": n,
                "digraph": g.render(),
                "count": items.len(),
                "situations": items,
            })
        );
    } else {
        let sorted: BTreeSet<String> = witnessed.iter().map(|(s, _)| s.render()).collect();
        for s in &sorted {
            println!("{s}");
        }
        println!("{} situations over {n} agents ({})", sorted.len(), g.render());
    }
    Ok(EXIT_TRUE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval {
            formula,
            sequence,
            bound,
            common,
        } => cmd_eval(formula, sequence, *bound, common),
        Command::Truth {
            formula,
            digraph,
            bound,
            common,
        } => cmd_truth(formula, digraph, *bound, common),
        Command::Eqcheck {
            left,
            right,
            agent,
            oracle,
            common,
        } => cmd_eqcheck(left, right, agent, *oracle, common),
        Command::Check {
            protocol,
            phi,
            digraph,
            quantify_protocol_graph,
            permissive,
            budget,
            common,
        } => cmd_check(
            protocol,
            phi.as_deref(),
            digraph.as_deref(),
            *quantify_protocol_graph,
            *permissive,
            budget,
            common,
        ),
        Command::Simulate {
            simulator,
            simulated,
            bound,
            bisim,
            budget,
            common,
        } => cmd_simulate(simulator, simulated, *bound, *bisim, budget, common),
        Command::Replicate {
            case,
            manifest,
            common,
        } => cmd_replicate(case, manifest.as_deref(), common),
        Command::Reachable { digraph, common } => cmd_reachable(digraph, common),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => fail_usage(&message),
    }
}
