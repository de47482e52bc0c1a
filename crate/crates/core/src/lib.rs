//! Epistemic gossip protocols: semantics, verification, and comparison.
//!
//! Agents each hold one secret and exchange everything they know during
//! pairwise calls. This crate implements the call-sequence semantics, the
//! per-agent indistinguishability relations and the knowledge logic built
//! on them, a guarded-command protocol language, exploration of protocol
//! computation trees with termination and correctness verdicts, and the
//! simulation preorder between protocols.

pub mod analysis;
pub mod engine;
pub mod equivalence;
pub mod logic;
pub mod model;
pub mod parse;
pub mod protocol;
pub mod replicate;

pub use analysis::{bisimilar, generated_prefixes, simulates, simulates_bounded, SimulationVerdict};
pub use engine::{
    check_partial_correctness, check_phi_correctness, classify_lasso,
    computation_length_bounds, decide_termination, enabled_rules, explore, ExplorationReport,
    ExploreConfig, Lasso, Node, TerminationVerdict,
};
pub use equivalence::{
    agent_view, class_representatives, class_situations, closure_oracle, equivalent, AgentView,
};
pub use logic::{
    build_axiom, eval, fragment_of, holds_for_all_bounded, is_true_l0, parse_formula, AxiomKind,
    EvalConfig, EvalVerdict, Formula, Fragment,
};
pub use model::{
    initial_situation, reachable_situations, AgentId, Call, CallSequence, Digraph,
    GossipSituation, SecretId, SecretSet,
};
pub use parse::{AgentTable, ParseError};
pub use protocol::{builtin, parse_protocol, Builtin, Program, Protocol, Rule, RuleId};
