//! Indistinguishability of call sequences.
//!
//! Agent `a` cannot tell two call sequences apart when it took part in the
//! same calls, in the same order, observing the same secret sets right
//! after each of them. That view equality is the production predicate
//! here; [`closure_oracle`] independently decides the same relation as the
//! smallest equivalence closed under the generating rules (append a call
//! the agent is not involved in to either side, or extend two related
//! sequences by the same call of the agent when the observed sets agree),
//! by saturating those rules over a bounded universe. The two are checked
//! against each other exhaustively at small scale.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{
    validate_agent_count, AgentId, Call, CallSequence, Digraph, GossipSituation, ModelError,
    SecretSet,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivalenceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("length bound {bound} is below the sequence length {len}")]
    BoundTooSmall { bound: usize, len: usize },
    #[error("universe of {needed} sequences exceeds the budget of {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
}

/// Default cap on the number of sequences materialized by the saturation
/// oracle and by representative enumeration.
pub const DEFAULT_SEQUENCE_BUDGET: usize = 200_000;

/// What an agent remembers of a call sequence: its own calls in order, each
/// paired with the set of secrets it held right after that call.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentView {
    owner: AgentId,
    steps: Vec<(Call, SecretSet)>,
}

impl AgentView {
    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn steps(&self) -> &[(Call, SecretSet)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The owner's final secret set: its own secret when it observed no
    /// call, otherwise the set at the last step.
    pub fn final_secrets(&self) -> SecretSet {
        self.steps
            .last()
            .map(|(_, s)| *s)
            .unwrap_or_else(|| SecretSet::singleton(self.owner.secret()))
    }
}

/// Projects `seq` onto the calls involving `a`, pairing each with `a`'s
/// secret set at that point.
pub fn agent_view(seq: &CallSequence, a: AgentId, n: usize) -> Result<AgentView, ModelError> {
    validate_agent_count(n, true)?;
    if a.0 >= n {
        return Err(ModelError::AgentOutOfRange { index: a.0, n });
    }
    let mut s = GossipSituation::initial(n)?;
    let mut steps = Vec::new();
    for c in seq.iter() {
        s.apply_call_mut(c);
        if c.involves(a) {
            steps.push((c, s.secrets_of(a)));
        }
    }
    Ok(AgentView { owner: a, steps })
}

/// View-based decision of indistinguishability for agent `a`.
pub fn equivalent(
    s1: &CallSequence,
    s2: &CallSequence,
    a: AgentId,
    n: usize,
) -> Result<bool, ModelError> {
    Ok(agent_view(s1, a, n)? == agent_view(s2, a, n)?)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

fn universe(n: usize, len_bound: usize, budget: usize) -> Result<Vec<CallSequence>, EquivalenceError> {
    let call_count = n * (n - 1);
    let mut size: usize = 1;
    let mut layer: usize = 1;
    for _ in 0..len_bound {
        layer = layer.saturating_mul(call_count);
        size = size.saturating_add(layer);
        if size > budget {
            return Err(EquivalenceError::BudgetExceeded {
                needed: size,
                budget,
            });
        }
    }
    let calls = Digraph::complete(n)?.calls();
    let mut seqs = vec![CallSequence::empty()];
    let mut frontier = vec![CallSequence::empty()];
    for _ in 0..len_bound {
        let mut next = Vec::with_capacity(frontier.len() * call_count);
        for s in &frontier {
            for &c in &calls {
                next.push(s.extended(c));
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(seqs)
}

/// Decides indistinguishability as the smallest equivalence relation closed
/// under the generating rules, saturated over all sequences of length at
/// most `len_bound`. Intended for toy sizes; cross-validates [`equivalent`].
pub fn closure_oracle(
    s1: &CallSequence,
    s2: &CallSequence,
    a: AgentId,
    n: usize,
    len_bound: usize,
    budget: usize,
) -> Result<bool, EquivalenceError> {
    let len = s1.len().max(s2.len());
    if len_bound < len {
        return Err(EquivalenceError::BoundTooSmall {
            bound: len_bound,
            len,
        });
    }
    let relation = saturate_relation(a, n, len_bound, budget)?;
    Ok(relation.related(s1, s2))
}

/// The fully saturated relation over the bounded universe, reusable across
/// many queries.
pub struct SaturatedRelation {
    index: HashMap<CallSequence, usize>,
    class: Vec<usize>,
}

impl SaturatedRelation {
    pub fn related(&self, s1: &CallSequence, s2: &CallSequence) -> bool {
        let (Some(&i), Some(&j)) = (self.index.get(s1), self.index.get(s2)) else {
            return false;
        };
        self.class[i] == self.class[j]
    }
}

/// Saturates the generating rules for agent `a` over all sequences of
/// length at most `len_bound`: every extension by a call not involving `a`
/// is merged with its base, and two related sequences are merged after
/// appending the same `a`-call whenever `a` observes the same set in both.
/// Symmetry and transitivity come from the union-find representation.
pub fn saturate_relation(
    a: AgentId,
    n: usize,
    len_bound: usize,
    budget: usize,
) -> Result<SaturatedRelation, EquivalenceError> {
    validate_agent_count(n, true)?;
    let seqs = universe(n, len_bound, budget)?;
    let index: HashMap<CallSequence, usize> =
        seqs.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut uf = UnionFind::new(seqs.len());

    let all_calls = Digraph::complete(n)?.calls();
    let own_calls: Vec<Call> = all_calls.iter().copied().filter(|c| c.involves(a)).collect();
    let other_calls: Vec<Call> = all_calls.iter().copied().filter(|c| !c.involves(a)).collect();

    // Appending a call the agent is unaware of changes nothing for it.
    for (i, s) in seqs.iter().enumerate() {
        if s.len() < len_bound {
            for &c in &other_calls {
                let j = index[&s.extended(c)];
                uf.union(i, j);
            }
        }
    }

    // Observed set after appending each own call, precomputed per sequence.
    let observed: Vec<Option<Vec<SecretSet>>> = seqs
        .iter()
        .map(|s| {
            if s.len() >= len_bound {
                return None;
            }
            let base = GossipSituation::initial(n).unwrap().apply_sequence(s);
            Some(
                own_calls
                    .iter()
                    .map(|&c| base.apply_call(c).secrets_of(a))
                    .collect(),
            )
        })
        .collect();

    // Extending two related sequences by the same own call keeps them
    // related when the observed sets agree. New merges can enable further
    // ones, so iterate to a fixpoint.
    loop {
        let mut changed = false;
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..seqs.len() {
            let root = uf.find(i);
            groups.entry(root).or_default().push(i);
        }
        for members in groups.values() {
            for (x, &i) in members.iter().enumerate() {
                let Some(obs_i) = &observed[i] else { continue };
                for &j in &members[x + 1..] {
                    let Some(obs_j) = &observed[j] else { continue };
                    for (k, &c) in own_calls.iter().enumerate() {
                        if obs_i[k] == obs_j[k] {
                            let ei = index[&seqs[i].extended(c)];
                            let ej = index[&seqs[j].extended(c)];
                            if uf.union(ei, ej) {
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let class = (0..seqs.len()).map(|i| uf.find(i)).collect();
    Ok(SaturatedRelation { index, class })
}

/// The situations reachable by sequences indistinguishable from `seq` for
/// agent `a`, restricted to calls allowed by `g`. The search runs over
/// pairs (situation, number of view steps consumed): calls not involving
/// `a` leave the step index alone, the next view call advances it when the
/// resulting observed set matches, and situations at the full index are
/// collected.
pub fn class_situations(
    seq: &CallSequence,
    a: AgentId,
    n: usize,
    g: &Digraph,
) -> Result<BTreeSet<GossipSituation>, ModelError> {
    let view = agent_view(seq, a, n)?;
    let calls = g.calls();
    let root = GossipSituation::initial(n)?;
    let goal = view.len();
    let mut seen: HashSet<(GossipSituation, usize)> = HashSet::new();
    seen.insert((root.clone(), 0));
    let mut queue = VecDeque::from([(root, 0usize)]);
    let mut out = BTreeSet::new();
    while let Some((s, k)) = queue.pop_front() {
        if k == goal {
            out.insert(s.clone());
        }
        for &c in &calls {
            if c.involves(a) {
                if k < goal && c == view.steps()[k].0 {
                    let t = s.apply_call(c);
                    if t.secrets_of(a) == view.steps()[k].1
                        && seen.insert((t.clone(), k + 1))
                    {
                        queue.push_back((t, k + 1));
                    }
                }
            } else {
                let t = s.apply_call(c);
                if seen.insert((t.clone(), k)) {
                    queue.push_back((t, k));
                }
            }
        }
    }
    Ok(out)
}

/// All sequences of length at most `len_bound` indistinguishable from `seq`
/// for agent `a`, over calls allowed by `g`.
pub fn class_representatives(
    seq: &CallSequence,
    a: AgentId,
    n: usize,
    g: &Digraph,
    len_bound: usize,
    budget: usize,
) -> Result<BTreeSet<CallSequence>, EquivalenceError> {
    if len_bound < seq.len() {
        return Err(EquivalenceError::BoundTooSmall {
            bound: len_bound,
            len: seq.len(),
        });
    }
    let view = agent_view(seq, a, n)?;
    let calls = g.calls();
    let goal = view.len();
    let root = GossipSituation::initial(n)?;
    let mut out = BTreeSet::new();
    let mut count: usize = 0;
    // Depth-first over (sequence, situation, steps consumed).
    let mut stack = vec![(CallSequence::empty(), root, 0usize)];
    while let Some((d, s, k)) = stack.pop() {
        count += 1;
        if count > budget {
            return Err(EquivalenceError::BudgetExceeded {
                needed: count,
                budget,
            });
        }
        if k == goal {
            out.insert(d.clone());
        }
        if d.len() == len_bound {
            continue;
        }
        for &c in &calls {
            if c.involves(a) {
                if k < goal && c == view.steps()[k].0 {
                    let t = s.apply_call(c);
                    if t.secrets_of(a) == view.steps()[k].1 {
                        stack.push((d.extended(c), t, k + 1));
                    }
                }
            } else {
                stack.push((d.extended(c), s.apply_call(c), k));
            }
        }
    }
    Ok(out)
}

/// [`class_situations`] computed incrementally along a growing sequence.
///
/// Layer `k` holds every situation reachable by a sequence whose view for
/// the owner matches the first `k` observed steps, closed under calls the
/// owner is not involved in. Pushing a call that involves the owner applies
/// it to the top layer (keeping outcomes that match the observed set) and
/// re-closes; other calls leave the view, and hence the layer, untouched.
/// The exploration engine keeps one of these per rule-owning agent so that
/// each node's knowledge guards are decided against a precomputed layer.
#[derive(Debug, Clone)]
pub struct ClassFrontier {
    owner: AgentId,
    n: usize,
    closure_calls: Vec<Call>,
    layers: Vec<HashSet<GossipSituation>>,
    // per pushed call: whether it advanced the layer stack
    history: Vec<bool>,
}

impl ClassFrontier {
    pub fn new(owner: AgentId, n: usize, g: &Digraph) -> Result<Self, ModelError> {
        validate_agent_count(n, true)?;
        let closure_calls: Vec<Call> = g
            .calls()
            .into_iter()
            .filter(|c| !c.involves(owner))
            .collect();
        let root = GossipSituation::initial(n)?;
        let mut base = HashSet::new();
        base.insert(root);
        let mut f = ClassFrontier {
            owner,
            n,
            closure_calls,
            layers: Vec::new(),
            history: Vec::new(),
        };
        f.layers.push(f.close(base));
        Ok(f)
    }

    fn close(&self, mut set: HashSet<GossipSituation>) -> HashSet<GossipSituation> {
        let mut queue: Vec<GossipSituation> = set.iter().cloned().collect();
        while let Some(s) = queue.pop() {
            for &c in &self.closure_calls {
                let t = s.apply_call(c);
                if !set.contains(&t) {
                    set.insert(t.clone());
                    queue.push(t);
                }
            }
        }
        set
    }

    /// Extends the tracked sequence by `c`, where `after` is the real
    /// situation reached. Only calls involving the owner advance the layer.
    pub fn push(&mut self, c: Call, after: &GossipSituation) {
        if c.involves(self.owner) {
            let observed = after.secrets_of(self.owner);
            let top = self.layers.last().expect("at least the root layer");
            let mut next = HashSet::new();
            for s in top {
                let t = s.apply_call(c);
                if t.secrets_of(self.owner) == observed {
                    next.insert(t);
                }
            }
            self.layers.push(self.close(next));
            self.history.push(true);
        } else {
            self.history.push(false);
        }
    }

    /// Undoes the most recent [`push`](Self::push).
    pub fn pop(&mut self) {
        if self.history.pop().expect("pop without a matching push") {
            self.layers.pop();
        }
    }

    /// The situations indistinguishable from the current sequence.
    pub fn current(&self) -> &HashSet<GossipSituation> {
        self.layers.last().expect("at least the root layer")
    }

    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }
}
