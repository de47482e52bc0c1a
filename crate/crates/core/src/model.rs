//! Agents, secrets, calls, gossip situations, and call sequences.
//!
//! A gossip situation assigns to every agent the set of secrets it is
//! familiar with. A call `ab` merges the secret sets of the caller `a` and
//! the callee `b`; nobody else notices. Situations are kept canonical as
//! one bitset per agent so that equality and hashing are cheap, which the
//! exploration engine relies on for memoization.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Rendering uses one letter per agent, which caps the supported size.
pub const MAX_AGENTS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("at least 2 agents are required, got {0}")]
    TooFewAgents(usize),
    #[error("at most {MAX_AGENTS} agents are supported, got {0}")]
    TooManyAgents(usize),
    #[error("agent index {index} is out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("a call must involve two distinct agents")]
    SelfCall,
    #[error("self-loop edge on agent {0}")]
    SelfLoop(AgentId),
    #[error("malformed call token `{0}`: expected two distinct lowercase letters")]
    BadCallToken(String),
    #[error("agent name `{0}` is not declared")]
    UnknownAgent(String),
    #[error("agent name `{0}` is declared twice")]
    DuplicateAgent(String),
}

/// Validates an agent count against the supported range. The stipulated
/// minimum is three agents; `allow_small` relaxes it to two so that the
/// trivial cases can anchor unit and property tests.
pub fn validate_agent_count(n: usize, allow_small: bool) -> Result<(), ModelError> {
    let min = if allow_small { 2 } else { 3 };
    if n < min {
        return Err(ModelError::TooFewAgents(n));
    }
    if n > MAX_AGENTS {
        return Err(ModelError::TooManyAgents(n));
    }
    Ok(())
}

/// One of the `n` agents, identified by its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl AgentId {
    /// The secret initially held by this agent.
    pub fn secret(self) -> SecretId {
        SecretId(self.0)
    }

    /// Default single-letter name: `a`, `b`, `c`, ...
    pub fn letter(self) -> char {
        (b'a' + self.0 as u8) as char
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A secret, identified with the agent that initially holds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SecretId(pub usize);

impl SecretId {
    pub fn owner(self) -> AgentId {
        AgentId(self.0)
    }

    /// Default single-letter name: `A`, `B`, `C`, ...
    pub fn letter(self) -> char {
        (b'A' + self.0 as u8) as char
    }
}

impl fmt::Display for SecretId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A set of secrets, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SecretSet(pub u64);

impl SecretSet {
    pub const EMPTY: SecretSet = SecretSet(0);

    pub fn singleton(s: SecretId) -> Self {
        SecretSet(1 << s.0)
    }

    pub fn full(n: usize) -> Self {
        SecretSet((1u64 << n) - 1)
    }

    pub fn contains(self, s: SecretId) -> bool {
        self.0 >> s.0 & 1 == 1
    }

    pub fn union(self, other: SecretSet) -> Self {
        SecretSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: SecretSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = SecretId> {
        (0..64).filter(move |i| self.0 >> i & 1 == 1).map(SecretId)
    }

    /// Uppercase-letter rendering, e.g. `ABC`.
    pub fn render(self) -> String {
        self.iter().map(|s| s.letter()).collect()
    }
}

impl fmt::Display for SecretSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// A directed call: the caller dials the callee and both end up with the
/// union of their secret sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Call {
    pub caller: AgentId,
    pub callee: AgentId,
}

impl Call {
    /// Panics if caller and callee coincide; parsers validate first.
    pub fn new(caller: AgentId, callee: AgentId) -> Self {
        assert_ne!(caller, callee, "a call must involve two distinct agents");
        Call { caller, callee }
    }

    pub fn involves(self, a: AgentId) -> bool {
        self.caller == a || self.callee == a
    }

    /// The participant other than `a`; panics if `a` is not involved.
    pub fn peer_of(self, a: AgentId) -> AgentId {
        if self.caller == a {
            self.callee
        } else {
            assert_eq!(self.callee, a);
            self.caller
        }
    }

    /// Two-letter lowercase token, e.g. `ac`.
    pub fn render(self) -> String {
        format!("{}{}", self.caller.letter(), self.callee.letter())
    }

    /// Parses a two-letter token such as `ac`.
    pub fn parse(token: &str) -> Result<Self, ModelError> {
        let chars: Vec<char> = token.chars().collect();
        if chars.len() != 2 || !chars.iter().all(|c| c.is_ascii_lowercase()) {
            return Err(ModelError::BadCallToken(token.to_string()));
        }
        let caller = AgentId((chars[0] as u8 - b'a') as usize);
        let callee = AgentId((chars[1] as u8 - b'a') as usize);
        if caller == callee {
            return Err(ModelError::SelfCall);
        }
        Ok(Call { caller, callee })
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// A finite ordered list of calls; the possible worlds of the logic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CallSequence {
    calls: Vec<Call>,
}

impl CallSequence {
    pub fn empty() -> Self {
        CallSequence { calls: Vec::new() }
    }

    pub fn new(calls: Vec<Call>) -> Self {
        CallSequence { calls }
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn calls(&self) -> &[Call] {
        &self.calls
    }

    pub fn iter(&self) -> impl Iterator<Item = Call> + '_ {
        self.calls.iter().copied()
    }

    pub fn push(&mut self, c: Call) {
        self.calls.push(c);
    }

    /// A copy with `c` appended.
    pub fn extended(&self, c: Call) -> Self {
        let mut calls = self.calls.clone();
        calls.push(c);
        CallSequence { calls }
    }

    pub fn prefix(&self, len: usize) -> Self {
        CallSequence {
            calls: self.calls[..len].to_vec(),
        }
    }

    /// A copy with the call at `pos` removed.
    pub fn without(&self, pos: usize) -> Self {
        let mut calls = self.calls.clone();
        calls.remove(pos);
        CallSequence { calls }
    }

    /// Comma-separated token rendering, e.g. `ac,bc,ac`; `ε` when empty.
    pub fn render(&self) -> String {
        if self.calls.is_empty() {
            return "ε".to_string();
        }
        self.calls
            .iter()
            .map(|c| c.render())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses comma-separated call tokens (dots are accepted as separators
    /// too). The empty string and `ε` denote the empty sequence.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "ε" {
            return Ok(CallSequence::empty());
        }
        let calls = trimmed
            .split(|ch| ch == ',' || ch == '.')
            .map(|tok| Call::parse(tok.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CallSequence { calls })
    }

    /// Smallest agent count that makes every mentioned agent valid.
    pub fn min_agents(&self) -> usize {
        self.calls
            .iter()
            .map(|c| c.caller.0.max(c.callee.0) + 1)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for CallSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl FromIterator<Call> for CallSequence {
    fn from_iter<T: IntoIterator<Item = Call>>(iter: T) -> Self {
        CallSequence {
            calls: iter.into_iter().collect(),
        }
    }
}

/// The tuple of all agents' secret sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GossipSituation {
    secrets: Vec<SecretSet>,
}

impl GossipSituation {
    /// The initial situation in which every agent holds exactly its own
    /// secret. Accepts any `n >= 2`.
    pub fn initial(n: usize) -> Result<Self, ModelError> {
        validate_agent_count(n, true)?;
        Ok(GossipSituation {
            secrets: (0..n).map(|i| SecretSet::singleton(SecretId(i))).collect(),
        })
    }

    pub fn agent_count(&self) -> usize {
        self.secrets.len()
    }

    pub fn secrets_of(&self, a: AgentId) -> SecretSet {
        self.secrets[a.0]
    }

    pub fn knows(&self, a: AgentId, s: SecretId) -> bool {
        self.secrets[a.0].contains(s)
    }

    /// True iff `a` is familiar with all the secrets.
    pub fn is_expert(&self, a: AgentId) -> bool {
        self.secrets[a.0] == SecretSet::full(self.agent_count())
    }

    pub fn all_experts(&self) -> bool {
        (0..self.agent_count()).all(|i| self.is_expert(AgentId(i)))
    }

    /// Caller and callee both end up with the union of their former sets;
    /// everyone else is unchanged.
    pub fn apply_call(&self, c: Call) -> Self {
        let mut secrets = self.secrets.clone();
        let merged = secrets[c.caller.0].union(secrets[c.callee.0]);
        secrets[c.caller.0] = merged;
        secrets[c.callee.0] = merged;
        GossipSituation { secrets }
    }

    /// In-place variant of [`apply_call`](Self::apply_call).
    pub fn apply_call_mut(&mut self, c: Call) {
        let merged = self.secrets[c.caller.0].union(self.secrets[c.callee.0]);
        self.secrets[c.caller.0] = merged;
        self.secrets[c.callee.0] = merged;
    }

    /// Left fold of [`apply_call`](Self::apply_call); the empty sequence is
    /// the identity.
    pub fn apply_sequence(&self, seq: &CallSequence) -> Self {
        let mut s = self.clone();
        for c in seq.iter() {
            s.apply_call_mut(c);
        }
        s
    }

    /// Dot-separated secret lists, e.g. `AB.AB.C`.
    pub fn render(&self) -> String {
        self.secrets
            .iter()
            .map(|q| q.render())
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl fmt::Display for GossipSituation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Shorthand for [`GossipSituation::initial`].
pub fn initial_situation(n: usize) -> Result<GossipSituation, ModelError> {
    GossipSituation::initial(n)
}

/// The situation reached from the initial one by `seq` over `n` agents.
pub fn situation_after(n: usize, seq: &CallSequence) -> Result<GossipSituation, ModelError> {
    Ok(GossipSituation::initial(n)?.apply_sequence(seq))
}

/// All intermediate situations: entry `i` is the situation after the first
/// `i` calls, so entry `0` is the initial situation.
pub fn situation_trace(n: usize, seq: &CallSequence) -> Result<Vec<GossipSituation>, ModelError> {
    let mut s = GossipSituation::initial(n)?;
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(s.clone());
    for c in seq.iter() {
        s.apply_call_mut(c);
        out.push(s.clone());
    }
    Ok(out)
}

/// True iff appending `c` after `prefix` changes the situation reached from
/// the initial one.
pub fn is_productive(prefix: &CallSequence, c: Call, n: usize) -> Result<bool, ModelError> {
    let s = situation_after(n, prefix)?;
    Ok(s.apply_call(c) != s)
}

/// Looks for the epistemic-redundancy pattern: a call occurring twice with
/// equal situations right after both occurrences. Returns the earliest such
/// (first occurrence, second occurrence) position pair, scanning second
/// occurrences left to right.
pub fn find_epistemically_redundant(
    seq: &CallSequence,
    n: usize,
) -> Result<Option<(usize, usize)>, ModelError> {
    let trace = situation_trace(n, seq)?;
    for j in 0..seq.len() {
        for i in 0..j {
            if seq.calls()[i] == seq.calls()[j] && trace[i + 1] == trace[j + 1] {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// A directed graph over the agents restricting who may call whom: the call
/// `ab` is allowed only when `a -> b` is an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(AgentId, AgentId)>,
}

impl Digraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (AgentId, AgentId)>) -> Result<Self, ModelError> {
        validate_agent_count(n, true)?;
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(ModelError::SelfLoop(a));
            }
            for x in [a, b] {
                if x.0 >= n {
                    return Err(ModelError::AgentOutOfRange { index: x.0, n });
                }
            }
            set.insert((a, b));
        }
        Ok(Digraph { n, edges: set })
    }

    /// All ordered pairs of distinct agents.
    pub fn complete(n: usize) -> Result<Self, ModelError> {
        let edges = (0..n).flat_map(|a| {
            (0..n)
                .filter(move |b| *b != a)
                .map(move |b| (AgentId(a), AgentId(b)))
        });
        Digraph::new(n, edges)
    }

    /// The path `0 - 1 - ... - n-1` with edges in both directions.
    pub fn path(n: usize) -> Result<Self, ModelError> {
        let edges = (0..n - 1).flat_map(|i| {
            [
                (AgentId(i), AgentId(i + 1)),
                (AgentId(i + 1), AgentId(i)),
            ]
        });
        Digraph::new(n, edges)
    }

    /// A star with hub `0`, edges in both directions.
    pub fn star(n: usize) -> Result<Self, ModelError> {
        let edges = (1..n).flat_map(|i| [(AgentId(0), AgentId(i)), (AgentId(i), AgentId(0))]);
        Digraph::new(n, edges)
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: AgentId, to: AgentId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn allows(&self, c: Call) -> bool {
        self.has_edge(c.caller, c.callee)
    }

    /// Agents that `a` may call.
    pub fn callees_of(&self, a: AgentId) -> Vec<AgentId> {
        self.edges
            .iter()
            .filter(|(x, _)| *x == a)
            .map(|(_, y)| *y)
            .collect()
    }

    /// All allowed calls in lexicographic (caller, callee) order.
    pub fn calls(&self) -> Vec<Call> {
        self.edges
            .iter()
            .map(|&(a, b)| Call::new(a, b))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1)
    }

    /// Connectivity of the underlying undirected graph. The digraph is
    /// expected to be connected for a gossip protocol to make sense; callers
    /// report a warning when it is not.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &(a, b) in &self.edges {
                for (u, v) in [(a.0, b.0), (b.0, a.0)] {
                    if u == x && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Renders as `complete` or a comma-separated edge list `a->b,b->a`.
    pub fn render(&self) -> String {
        if self.is_complete() {
            return "complete".to_string();
        }
        self.edges
            .iter()
            .map(|(a, b)| format!("{}->{}", a.letter(), b.letter()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Every situation reachable from the initial one by finite call sequences
/// respecting `g`. Breadth-first with lexicographic call expansion, so the
/// result is deterministic; finite because secret sets only grow.
pub fn reachable_situations(n: usize, g: &Digraph) -> Result<BTreeSet<GossipSituation>, ModelError> {
    Ok(reachable_witnessed(n, g)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

/// Like [`reachable_situations`], additionally pairing each situation with
/// the first generating sequence in breadth-first order. The initial
/// situation comes first.
pub fn reachable_witnessed(
    n: usize,
    g: &Digraph,
) -> Result<Vec<(GossipSituation, CallSequence)>, ModelError> {
    let root = GossipSituation::initial(n)?;
    let calls = g.calls();
    let mut seen = BTreeSet::from([root.clone()]);
    let mut out = vec![(root.clone(), CallSequence::empty())];
    let mut queue = VecDeque::from([(root, CallSequence::empty())]);
    while let Some((s, seq)) = queue.pop_front() {
        for &c in &calls {
            let t = s.apply_call(c);
            if seen.insert(t.clone()) {
                let tseq = seq.extended(c);
                out.push((t.clone(), tseq.clone()));
                queue.push_back((t, tseq));
            }
        }
    }
    Ok(out)
}

/// The sequence reaching the all-expert situation in `2n - 4` calls for
/// `n >= 4`: the hub `a` polls helper agents, a four-agent exchange makes
/// `a`, `b`, `c`, `d` experts, and the hub polls the helpers again.
pub fn centralized_sequence(n: usize) -> Result<CallSequence, ModelError> {
    if n < 4 {
        return Err(ModelError::TooFewAgents(n));
    }
    validate_agent_count(n, false)?;
    let (a, b, c, d) = (AgentId(0), AgentId(1), AgentId(2), AgentId(3));
    let mut calls = Vec::with_capacity(2 * n - 4);
    for i in 4..n {
        calls.push(Call::new(a, AgentId(i)));
    }
    calls.push(Call::new(a, b));
    calls.push(Call::new(c, d));
    calls.push(Call::new(a, d));
    calls.push(Call::new(b, c));
    for i in 4..n {
        calls.push(Call::new(a, AgentId(i)));
    }
    Ok(CallSequence::new(calls))
}
