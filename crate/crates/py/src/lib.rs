//! Python bindings over the gossip toolkit.
//!
//! Exposes sequence application, formula evaluation, sequence
//! indistinguishability, reachability, and a `Protocol` class with
//! exploration and simulation. Structured results come back as JSON
//! strings so Python callers can `json.loads` them.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

use gossip_core::engine::{self, render_sequence, ExploreConfig, TerminationVerdict};
use gossip_core::logic::{self, EvalConfig};
use gossip_core::model::{reachable_witnessed, CallSequence, Digraph};
use gossip_core::parse::AgentTable;
use gossip_core::protocol::{self, Builtin, ProtocolOptions};
use gossip_core::{analysis, equivalence, replicate};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_graph(spec: &str, n: usize) -> PyResult<Digraph> {
    match spec {
        "complete" => Digraph::complete(n).map_err(value_err),
        "path" => Digraph::path(n).map_err(value_err),
        "star" => Digraph::star(n).map_err(value_err),
        other => Err(PyValueError::new_err(format!(
            "unknown graph shape `{other}` (use complete, path, or star)"
        ))),
    }
}

/// Agent count from the inputs when not given: the largest letter
/// mentioned, and at least three.
fn infer_n(n: Option<usize>, sequences: &[&str], formula: Option<&str>) -> PyResult<usize> {
    if let Some(n) = n {
        if n < 2 {
            return Err(PyValueError::new_err("at least 2 agents are required"));
        }
        return Ok(n);
    }
    let mut max_index = 0usize;
    for text in sequences {
        let seq = CallSequence::parse(text).map_err(value_err)?;
        max_index = max_index.max(seq.min_agents());
    }
    if let Some(text) = formula {
        for ch in text.chars() {
            if ch.is_ascii_alphabetic() && !"FKCExp".contains(ch) {
                max_index = max_index.max(ch.to_ascii_lowercase() as usize - 'a' as usize + 1);
            }
        }
    }
    Ok(max_index.max(3))
}

/// Final situation after applying the call sequence, e.g. "ABC.ABC.ABC".
#[pyfunction]
#[pyo3(signature = (sequence, n=None))]
fn apply_sequence(sequence: &str, n: Option<usize>) -> PyResult<String> {
    let n = infer_n(n, &[sequence], None)?;
    let seq = CallSequence::parse(sequence).map_err(value_err)?;
    let trace = gossip_core::model::situation_trace(n, &seq).map_err(value_err)?;
    Ok(trace.last().unwrap().render())
}

/// Every intermediate situation, the initial one first.
#[pyfunction]
#[pyo3(signature = (sequence, n=None))]
fn situation_trace(sequence: &str, n: Option<usize>) -> PyResult<Vec<String>> {
    let n = infer_n(n, &[sequence], None)?;
    let seq = CallSequence::parse(sequence).map_err(value_err)?;
    let trace = gossip_core::model::situation_trace(n, &seq).map_err(value_err)?;
    Ok(trace.iter().map(|s| s.render()).collect())
}

/// Evaluates a formula after a call sequence. Returns (value, exact):
/// an inexact True is only confirmed up to the representative bound.
#[pyfunction]
#[pyo3(signature = (formula, sequence, n=None, bound=None))]
fn evaluate(
    formula: &str,
    sequence: &str,
    n: Option<usize>,
    bound: Option<usize>,
) -> PyResult<(bool, bool)> {
    let n = infer_n(n, &[sequence], Some(formula))?;
    let table = AgentTable::letters(n).map_err(value_err)?;
    let f = logic::parse_formula(formula, &table).map_err(value_err)?;
    let seq = CallSequence::parse(sequence).map_err(value_err)?;
    let mut cfg = EvalConfig::new(n).map_err(value_err)?;
    if let Some(b) = bound {
        cfg = cfg.with_rep_bound(b);
    }
    let v = logic::eval(&f, &seq, &cfg).map_err(value_err)?;
    Ok((v.value, v.exact))
}

/// Whether the two call sequences look the same to the agent.
#[pyfunction]
#[pyo3(signature = (left, right, agent, n=None))]
fn equivalent(left: &str, right: &str, agent: &str, n: Option<usize>) -> PyResult<bool> {
    let n = infer_n(n, &[left, right], Some(agent))?;
    let table = AgentTable::letters(n).map_err(value_err)?;
    let a = table
        .resolve(agent)
        .ok_or_else(|| PyValueError::new_err(format!("unknown agent `{agent}`")))?;
    let l = CallSequence::parse(left).map_err(value_err)?;
    let r = CallSequence::parse(right).map_err(value_err)?;
    equivalence::equivalent(&l, &r, a, n).map_err(value_err)
}

/// All situations reachable over the digraph, rendered and sorted.
#[pyfunction]
#[pyo3(signature = (n, graph=None))]
fn reachable_situations(n: usize, graph: Option<&str>) -> PyResult<Vec<String>> {
    let g = parse_graph(graph.unwrap_or("complete"), n)?;
    let witnessed = reachable_witnessed(n, &g).map_err(value_err)?;
    let mut out: Vec<String> = witnessed.iter().map(|(s, _)| s.render()).collect();
    out.sort();
    Ok(out)
}

/// A guarded-command gossip protocol.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Protocol {
    inner: protocol::Protocol,
}

#[pymethods]
impl Protocol {
    /// Instantiate a named protocol: lns, hms, exp, or two_phase.
    #[staticmethod]
    #[pyo3(signature = (name, n, graph=None))]
    fn builtin(name: &str, n: usize, graph: Option<&str>) -> PyResult<Self> {
        let which = Builtin::parse(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown builtin `{name}`")))?;
        let g = graph.map(|spec| parse_graph(spec, n)).transpose()?;
        let inner = protocol::builtin(which, n, g).map_err(value_err)?;
        Ok(Protocol { inner })
    }

    /// Parse protocol source text.
    #[staticmethod]
    fn from_source(text: &str) -> PyResult<Self> {
        let inner =
            protocol::parse_protocol_with(text, ProtocolOptions::default()).map_err(value_err)?;
        Ok(Protocol { inner })
    }

    fn agent_count(&self) -> usize {
        self.inner.agent_count()
    }

    fn agents(&self) -> Vec<String> {
        self.inner.agents().names().to_vec()
    }

    /// The protocol in its source grammar.
    fn render(&self) -> String {
        self.inner.render()
    }

    /// JSON dump: agents, graph, and per-program rules.
    fn dump_json(&self) -> String {
        self.inner.dump().to_string()
    }

    /// Explore the computation tree and report verdicts as JSON:
    /// termination, partial correctness, optional phi-correctness at the
    /// leaves, leaf statistics, and a divergence witness when one exists.
    #[pyo3(signature = (phi=None, node_budget=None))]
    fn check_json(&self, phi: Option<&str>, node_budget: Option<usize>) -> PyResult<String> {
        let mut cfg = ExploreConfig::default();
        if let Some(b) = node_budget {
            cfg.node_budget = b;
        }
        let p = &self.inner;
        let report = engine::explore(p, &cfg).map_err(value_err)?;
        let termination = engine::termination_verdict(&report);
        let correctness = engine::partial_correctness(&report).map_err(value_err)?;
        let agents = p.agents();
        let phi_result = match phi {
            None => None,
            Some(text) => {
                let f = logic::parse_formula(text, agents).map_err(value_err)?;
                let v = engine::phi_correctness(p, &report, &f, &cfg).map_err(value_err)?;
                Some(json!({
                    "formula": f.render(agents),
                    "correct": v.correct,
                    "exact": v.exact,
                    "counterexample": v.counterexample.map(|s| render_sequence(&s, agents)),
                }))
            }
        };
        let lasso = report.lassos.first().map(|lasso| {
            let class = engine::classify_lasso(p, lasso, &cfg).ok();
            json!({
                "stem": render_sequence(&lasso.stem, agents),
                "repeated_call": render_sequence(
                    &CallSequence::new(vec![lasso.repeated_call]), agents),
                "period": class.as_ref().map(|c| render_sequence(&c.period, agents)),
                "agent_fair": class.as_ref().map(|c| c.agent_fair),
                "rule_fair": class.as_ref().map(|c| c.rule_fair),
            })
        });
        let verdict = json!({
            "n": p.agent_count(),
            "terminates": matches!(termination, TerminationVerdict::Terminates),
            "diverges": matches!(termination, TerminationVerdict::Diverges(_)),
            "truncated": report.truncated,
            "partially_correct": correctness.correct,
            "correctness_counterexample": correctness
                .counterexample
                .map(|s| render_sequence(&s, agents)),
            "phi": phi_result,
            "leaf_count": report.leaves.len(),
            "leaf_lengths": engine::length_bounds(&report).ok(),
            "lasso": lasso,
            "explored_nodes": report.explored_nodes,
        });
        Ok(verdict.to_string())
    }

    /// Whether this protocol can simulate the other. Returns
    /// (simulates, counterexample or None).
    fn simulates(&self, other: &Protocol) -> PyResult<(bool, Option<String>)> {
        let cfg = ExploreConfig::default();
        let v = analysis::simulates(&self.inner, &other.inner, &cfg).map_err(value_err)?;
        let agents = self.inner.agents();
        Ok((
            v.simulates,
            v.counterexample.map(|s| render_sequence(&s, agents)),
        ))
    }

    fn bisimilar(&self, other: &Protocol) -> PyResult<bool> {
        let cfg = ExploreConfig::default();
        Ok(analysis::bisimilar(&self.inner, &other.inner, &cfg)
            .map_err(value_err)?
            .bisimilar)
    }

    /// All generable sequences up to the length bound, rendered.
    fn generated_prefixes(&self, bound: usize) -> PyResult<Vec<String>> {
        let cfg = ExploreConfig::default();
        let prefixes = analysis::generated_prefixes(&self.inner, bound, &cfg).map_err(value_err)?;
        let agents = self.inner.agents();
        Ok(prefixes.iter().map(|s| render_sequence(s, agents)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Protocol(agents={}, rules={})",
            self.inner.agent_count(),
            self.inner.rules().count()
        )
    }
}

/// Run one bundled replication case by id; returns a JSON result.
#[pyfunction]
fn replicate_case_json(id: &str) -> PyResult<String> {
    let cases = replicate::builtin_manifest();
    let case = cases
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown case id `{id}`")))?;
    let result = replicate::run_case(case);
    serde_json::to_string(&result).map_err(value_err)
}

/// Run every bundled replication case; returns a JSON array of results.
#[pyfunction]
fn replicate_all_json() -> PyResult<String> {
    let results = replicate::run_all(&replicate::builtin_manifest());
    serde_json::to_string(&results).map_err(value_err)
}

#[pymodule]
fn gossip_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(apply_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(situation_trace, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(reachable_situations, m)?)?;
    m.add_function(wrap_pyfunction!(replicate_case_json, m)?)?;
    m.add_function(wrap_pyfunction!(replicate_all_json, m)?)?;
    m.add_class::<Protocol>()?;
    Ok(())
}
