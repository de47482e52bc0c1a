//! Formulas, fragment classification, and truth evaluation.
//!
//! Atoms state that an agent is familiar with a secret. `K(a, phi)`
//! quantifies over all call sequences agent `a` cannot distinguish from
//! the actual one. Knowledge over a propositional body is decided exactly
//! by enumerating the indistinguishability class's situations; nested
//! knowledge is decided in a bounded mode that quantifies over class
//! representatives up to a length bound, so a `false` backed by an exact
//! witness is definitive while a `true` is only bound-relative.
//!
//! The common-knowledge operator `C(G, phi)` is supported exactly in the
//! cases with a known finite characterization: a singleton group collapses
//! to `K`, a group of three or more holds iff the body is true after every
//! sequence, and a two-agent group over a negation-free body reduces to
//! the fourfold alternation `K_a K_b K_a K_b` as long as the sequence
//! contains no call between the two members. Everything else is an error
//! rather than a silent approximation.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::equivalence::{
    agent_view, class_representatives, class_situations, AgentView, EquivalenceError,
    DEFAULT_SEQUENCE_BUDGET,
};
use crate::model::{
    reachable_witnessed, validate_agent_count, AgentId, CallSequence, Digraph, GossipSituation,
    ModelError, SecretId,
};
use crate::parse::{self, AgentTable, ParseError};

/// Default representative length bound for the bounded evaluation mode.
pub const DEFAULT_REP_BOUND: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equivalence(#[from] EquivalenceError),
    #[error("unsupported common-knowledge case: {0}")]
    UnsupportedCommon(String),
    #[error("expected a formula in fragment {expected}, found {found}")]
    FragmentViolation { expected: Fragment, found: Fragment },
    #[error("formula mentions agent index {index}, but only {n} agents exist")]
    AgentBeyondUniverse { index: usize, n: usize },
}

/// Formulas over the five primitive constructors. Derived connectives
/// (`|`, `=>`, `Exp`) desugar at construction time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// Agent is familiar with the secret.
    Atom(AgentId, SecretId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// The agent knows the body.
    Know(AgentId, Box<Formula>),
    /// The group commonly knows the body.
    Common(BTreeSet<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn atom(a: AgentId, s: SecretId) -> Formula {
        Formula::Atom(a, s)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(l), Formula::not(r)))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::and(l, Formula::not(r)))
    }

    pub fn know(a: AgentId, body: Formula) -> Formula {
        Formula::Know(a, Box::new(body))
    }

    pub fn common(group: impl IntoIterator<Item = AgentId>, body: Formula) -> Formula {
        let set: BTreeSet<AgentId> = group.into_iter().collect();
        assert!(!set.is_empty(), "common-knowledge group must be nonempty");
        Formula::Common(set, Box::new(body))
    }

    /// Left-fold conjunction; panics on an empty iterator.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut iter = parts.into_iter();
        let first = iter.next().expect("conjunction of at least one formula");
        iter.fold(first, Formula::and)
    }

    /// Left-fold disjunction; panics on an empty iterator.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut iter = parts.into_iter();
        let first = iter.next().expect("disjunction of at least one formula");
        iter.fold(first, Formula::or)
    }

    /// `a` is familiar with all `n` secrets.
    pub fn expert(a: AgentId, n: usize) -> Formula {
        Formula::conj((0..n).map(|s| Formula::atom(a, SecretId(s))))
    }

    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Atom(..) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(l, r) => l.is_propositional() && r.is_propositional(),
            Formula::Know(..) | Formula::Common(..) => false,
        }
    }

    pub fn contains_common(&self) -> bool {
        match self {
            Formula::Atom(..) => false,
            Formula::Not(f) => f.contains_common(),
            Formula::And(l, r) => l.contains_common() || r.contains_common(),
            Formula::Know(_, f) => f.contains_common(),
            Formula::Common(..) => true,
        }
    }

    /// True when no negation occurs anywhere in the tree.
    pub fn negation_free(&self) -> bool {
        match self {
            Formula::Atom(..) => true,
            Formula::Not(_) => false,
            Formula::And(l, r) => l.negation_free() && r.negation_free(),
            Formula::Know(_, f) | Formula::Common(_, f) => f.negation_free(),
        }
    }

    fn has_nested_modality(&self) -> bool {
        fn inner(f: &Formula, under: bool) -> bool {
            match f {
                Formula::Atom(..) => false,
                Formula::Not(g) => inner(g, under),
                Formula::And(l, r) => inner(l, under) || inner(r, under),
                Formula::Know(_, g) | Formula::Common(_, g) => under || inner(g, true),
            }
        }
        inner(self, false)
    }

    /// Largest agent index mentioned anywhere, if any.
    pub fn max_agent_index(&self) -> Option<usize> {
        match self {
            Formula::Atom(a, s) => Some(a.0.max(s.0)),
            Formula::Not(f) => f.max_agent_index(),
            Formula::And(l, r) => l.max_agent_index().max(r.max_agent_index()),
            Formula::Know(a, f) => Some(a.0).max(f.max_agent_index()),
            Formula::Common(g, f) => g.iter().map(|a| a.0).max().max(f.max_agent_index()),
        }
    }

    /// Renders in the concrete grammar using the given agent names.
    pub fn render(&self, agents: &AgentTable) -> String {
        match self {
            Formula::Atom(a, s) => {
                format!("F({},{})", agents.name(*a), agents.secret_name(*s))
            }
            Formula::Not(f) => {
                if matches!(**f, Formula::And(..)) {
                    format!("!({})", f.render(agents))
                } else {
                    format!("!{}", f.render(agents))
                }
            }
            Formula::And(l, r) => {
                // keep right-nested conjunctions unambiguous
                let rhs = if matches!(**r, Formula::And(..)) {
                    format!("({})", r.render(agents))
                } else {
                    r.render(agents)
                };
                format!("{} & {}", l.render(agents), rhs)
            }
            Formula::Know(a, f) => format!("K({}, {})", agents.name(*a), f.render(agents)),
            Formula::Common(g, f) => {
                let names: Vec<&str> = g.iter().map(|a| agents.name(*a)).collect();
                format!("C({{{}}}, {})", names.join(","), f.render(agents))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.max_agent_index().map(|i| i + 1).unwrap_or(2).max(2);
        let table = AgentTable::letters(n).map_err(|_| fmt::Error)?;
        write!(f, "{}", self.render(&table))
    }
}

/// Sublanguages of the logic, from propositional to common knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fragment {
    /// No modalities.
    L0,
    /// Non-nested knowledge where the only modality belongs to one agent;
    /// produced by the protocol guard classifier, not by [`fragment_of`].
    L1a(AgentId),
    /// Knowledge operators, none nested.
    L1,
    /// Nested knowledge.
    L,
    /// Common knowledge occurs.
    Lck,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fragment::L0 => write!(f, "L0"),
            Fragment::L1a(a) => write!(f, "L1[{a}]"),
            Fragment::L1 => write!(f, "L1"),
            Fragment::L => write!(f, "L"),
            Fragment::Lck => write!(f, "Lck"),
        }
    }
}

/// The least fragment of the chain L0 < L1 < L < Lck containing the
/// formula.
pub fn fragment_of(f: &Formula) -> Fragment {
    if f.contains_common() {
        Fragment::Lck
    } else if f.is_propositional() {
        Fragment::L0
    } else if f.has_nested_modality() {
        Fragment::L
    } else {
        Fragment::L1
    }
}

/// Parses a formula in the concrete grammar; see [`crate::parse`].
pub fn parse_formula(text: &str, agents: &AgentTable) -> Result<Formula, ParseError> {
    parse::parse_formula(text, agents)
}

/// How knowledge operators are quantified and bounded during evaluation.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Number of agents; recorded in every report.
    pub n: usize,
    /// Digraph restricting the sequences quantified over by knowledge
    /// operators. The default is the complete digraph.
    pub quantify: Digraph,
    /// Length bound for class representatives in bounded mode; the
    /// effective bound is never below the current sequence length.
    pub rep_bound: usize,
    /// Cap on the number of sequences enumerated per quantifier.
    pub rep_budget: usize,
}

impl EvalConfig {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        validate_agent_count(n, true)?;
        Ok(EvalConfig {
            n,
            quantify: Digraph::complete(n)?,
            rep_bound: DEFAULT_REP_BOUND,
            rep_budget: DEFAULT_SEQUENCE_BUDGET,
        })
    }

    pub fn with_quantify(mut self, g: Digraph) -> Self {
        self.quantify = g;
        self
    }

    pub fn with_rep_bound(mut self, bound: usize) -> Self {
        self.rep_bound = bound;
        self
    }
}

/// A truth value plus whether it is definitive or bound-relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalVerdict {
    pub value: bool,
    /// True when no bounded quantifier contributed; a bound-relative
    /// `true` may be overturned by longer representatives.
    pub exact: bool,
}

impl EvalVerdict {
    fn exact(value: bool) -> Self {
        EvalVerdict { value, exact: true }
    }

    fn negate(self) -> Self {
        EvalVerdict {
            value: !self.value,
            exact: self.exact,
        }
    }
}

/// Evaluates formulas after call sequences, memoizing knowledge operators
/// on the owner's view, which fully determines their truth.
pub struct Evaluator<'c> {
    cfg: &'c EvalConfig,
    memo: RefCell<HashMap<(String, AgentId, AgentView, usize), EvalVerdict>>,
}

impl<'c> Evaluator<'c> {
    pub fn new(cfg: &'c EvalConfig) -> Self {
        Evaluator {
            cfg,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &EvalConfig {
        self.cfg
    }

    pub fn eval(&self, f: &Formula, seq: &CallSequence) -> Result<EvalVerdict, EvalError> {
        if let Some(max) = f.max_agent_index() {
            if max >= self.cfg.n {
                return Err(EvalError::AgentBeyondUniverse {
                    index: max,
                    n: self.cfg.n,
                });
            }
        }
        if seq.min_agents() > self.cfg.n {
            return Err(ModelError::AgentOutOfRange {
                index: seq.min_agents() - 1,
                n: self.cfg.n,
            }
            .into());
        }
        let sit = GossipSituation::initial(self.cfg.n)?.apply_sequence(seq);
        self.eval_at(f, seq, &sit)
    }

    fn eval_at(
        &self,
        f: &Formula,
        seq: &CallSequence,
        sit: &GossipSituation,
    ) -> Result<EvalVerdict, EvalError> {
        match f {
            Formula::Atom(a, s) => Ok(EvalVerdict::exact(sit.knows(*a, *s))),
            Formula::Not(g) => Ok(self.eval_at(g, seq, sit)?.negate()),
            Formula::And(l, r) => {
                let lv = self.eval_at(l, seq, sit)?;
                if !lv.value {
                    // false dominates; exactness of the failing side carries
                    return Ok(lv);
                }
                let rv = self.eval_at(r, seq, sit)?;
                if !rv.value {
                    return Ok(rv);
                }
                Ok(EvalVerdict {
                    value: true,
                    exact: lv.exact && rv.exact,
                })
            }
            Formula::Know(a, body) => self.eval_know(*a, body, seq),
            Formula::Common(group, body) => self.eval_common(group, body, seq),
        }
    }

    fn eval_know(
        &self,
        a: AgentId,
        body: &Formula,
        seq: &CallSequence,
    ) -> Result<EvalVerdict, EvalError> {
        let cfg = self.cfg;
        // knowledge is a function of the owner's view; the representative
        // bound also matters for verdicts on the bounded path
        let view = agent_view(seq, a, cfg.n)?;
        let effective_bound = if body.is_propositional() {
            0
        } else {
            cfg.rep_bound.max(seq.len())
        };
        let key = (body.to_string(), a, view, effective_bound);
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(*v);
        }
        let verdict = if body.is_propositional() {
            // Truth of a propositional body depends only on the final
            // situation, so the class's situations decide the quantifier.
            let class = class_situations(seq, a, cfg.n, &cfg.quantify)?;
            let value = class.iter().all(|s| eval_propositional(body, s));
            EvalVerdict::exact(value)
        } else {
            let reps = class_representatives(
                seq, a, cfg.n, &cfg.quantify, effective_bound, cfg.rep_budget)?;
            let mut verdict = EvalVerdict {
                value: true,
                exact: false, // representatives beyond the bound stay unexplored
            };
            for rep in &reps {
                let v = self.eval(body, rep)?;
                if !v.value {
                    verdict = v;
                    if v.exact {
                        break;
                    }
                }
            }
            verdict
        };
        self.memo.borrow_mut().insert(key, verdict);
        Ok(verdict)
    }

    fn eval_common(
        &self,
        group: &BTreeSet<AgentId>,
        body: &Formula,
        seq: &CallSequence,
    ) -> Result<EvalVerdict, EvalError> {
        let cfg = self.cfg;
        match group.len() {
            0 => Err(EvalError::UnsupportedCommon("empty group".into())),
            1 => {
                let a = *group.iter().next().unwrap();
                self.eval_know(a, body, seq)
            }
            2 => {
                let mut iter = group.iter();
                let a = *iter.next().unwrap();
                let b = *iter.next().unwrap();
                if !body.negation_free() {
                    return Err(EvalError::UnsupportedCommon(format!(
                        "two-agent group over a body containing negation: {body}"
                    )));
                }
                if seq
                    .iter()
                    .any(|c| c.involves(a) && c.involves(b))
                {
                    return Err(EvalError::UnsupportedCommon(format!(
                        "two-agent group {{{a},{b}}} after a sequence containing a call \
                         between the members"
                    )));
                }
                // fourfold alternation surrogate
                let nested = Formula::know(
                    a,
                    Formula::know(b, Formula::know(a, Formula::know(b, body.clone()))),
                );
                self.eval(&nested, seq)
            }
            _ => {
                // a group of three or more commonly knows exactly the true
                // formulas, independent of the sequence
                if body.is_propositional() {
                    match is_true_l0(body, cfg.n, &cfg.quantify)? {
                        L0Truth::Valid => Ok(EvalVerdict::exact(true)),
                        L0Truth::Refuted { .. } => Ok(EvalVerdict::exact(false)),
                    }
                } else {
                    match holds_for_all_bounded(body, &cfg.quantify, cfg.rep_bound, cfg)? {
                        BoundedTruth::Refuted { exact, .. } => Ok(EvalVerdict { value: false, exact }),
                        BoundedTruth::NoCounterexample { .. } => Ok(EvalVerdict {
                            value: true,
                            exact: false,
                        }),
                    }
                }
            }
        }
    }
}

/// Truth of a propositional formula at a situation.
pub fn eval_propositional(f: &Formula, sit: &GossipSituation) -> bool {
    match f {
        Formula::Atom(a, s) => sit.knows(*a, *s),
        Formula::Not(g) => !eval_propositional(g, sit),
        Formula::And(l, r) => eval_propositional(l, sit) && eval_propositional(r, sit),
        Formula::Know(..) | Formula::Common(..) => {
            panic!("eval_propositional applied to a modal formula")
        }
    }
}

/// One-shot evaluation; see [`Evaluator`] for reuse across sequences.
pub fn eval(f: &Formula, seq: &CallSequence, cfg: &EvalConfig) -> Result<EvalVerdict, EvalError> {
    Evaluator::new(cfg).eval(f, seq)
}

/// Outcome of exact truth checking for propositional formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum L0Truth {
    Valid,
    Refuted {
        situation: GossipSituation,
        witness: CallSequence,
    },
}

impl L0Truth {
    pub fn is_valid(&self) -> bool {
        matches!(self, L0Truth::Valid)
    }
}

/// Decides whether a propositional formula holds after every call sequence
/// respecting `g`, by checking every reachable situation. The refutation
/// witness is the first failing situation in breadth-first order together
/// with a generating sequence.
pub fn is_true_l0(f: &Formula, n: usize, g: &Digraph) -> Result<L0Truth, EvalError> {
    let frag = fragment_of(f);
    if frag != Fragment::L0 {
        return Err(EvalError::FragmentViolation {
            expected: Fragment::L0,
            found: frag,
        });
    }
    if let Some(max) = f.max_agent_index() {
        if max >= n {
            return Err(EvalError::AgentBeyondUniverse { index: max, n });
        }
    }
    for (sit, witness) in reachable_witnessed(n, g)? {
        if !eval_propositional(f, &sit) {
            return Ok(L0Truth::Refuted {
                situation: sit,
                witness,
            });
        }
    }
    Ok(L0Truth::Valid)
}

/// Outcome of the bounded truth refuter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundedTruth {
    Refuted {
        witness: CallSequence,
        /// Whether the refuting evaluation was itself definitive.
        exact: bool,
    },
    /// No counterexample among sequences of length up to the bound. Never a
    /// claim of unbounded truth for formulas beyond the propositional
    /// fragment.
    NoCounterexample { bound: usize },
}

impl BoundedTruth {
    pub fn refuted(&self) -> bool {
        matches!(self, BoundedTruth::Refuted { .. })
    }
}

/// Searches for a sequence of length at most `len_bound` (over calls
/// allowed by `g`) falsifying the formula. Breadth-first by length,
/// lexicographic within a length, so the reported witness is canonical.
pub fn holds_for_all_bounded(
    f: &Formula,
    g: &Digraph,
    len_bound: usize,
    cfg: &EvalConfig,
) -> Result<BoundedTruth, EvalError> {
    if let Some(max) = f.max_agent_index() {
        if max >= cfg.n {
            return Err(EvalError::AgentBeyondUniverse { index: max, n: cfg.n });
        }
    }
    let propositional = f.is_propositional();
    let evaluator = Evaluator::new(cfg);
    let calls = g.calls();
    let root = GossipSituation::initial(cfg.n)?;
    let mut level = vec![(CallSequence::empty(), root)];
    for _ in 0..=len_bound {
        for (seq, sit) in &level {
            let verdict = if propositional {
                EvalVerdict::exact(eval_propositional(f, sit))
            } else {
                evaluator.eval(f, seq)?
            };
            if !verdict.value {
                return Ok(BoundedTruth::Refuted {
                    witness: seq.clone(),
                    exact: verdict.exact,
                });
            }
        }
        let mut next = Vec::with_capacity(level.len() * calls.len());
        for (seq, sit) in &level {
            for &c in &calls {
                next.push((seq.extended(c), sit.apply_call(c)));
            }
        }
        level = next;
    }
    Ok(BoundedTruth::NoCounterexample { bound: len_bound })
}

/// The three candidate axiom schemes, instantiated over `n` agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomKind {
    /// Familiarity spreads along a chain of bidirectional calls.
    Chain,
    /// An agent learns a new secret only by revealing its own.
    Reveal,
    /// If `a` is the only agent besides `b` familiar with `b`'s secret,
    /// then `b` is familiar with `a`'s.
    OnlyCaller,
}

/// All injective chains `b = x_1, ..., x_k = a` with `2 <= k <= n`, in
/// ascending length then lexicographic order.
fn injective_chains(n: usize, b: AgentId, a: AgentId) -> Vec<Vec<AgentId>> {
    let mut out = Vec::new();
    let middle: Vec<AgentId> = (0..n)
        .map(AgentId)
        .filter(|x| *x != a && *x != b)
        .collect();
    // chains ordered by k; the interior is an ordered selection of middle agents
    fn extend(
        prefix: &mut Vec<AgentId>,
        remaining: usize,
        pool: &[AgentId],
        used: &mut Vec<bool>,
        a: AgentId,
        out: &mut Vec<Vec<AgentId>>,
    ) {
        if remaining == 0 {
            let mut chain = prefix.clone();
            chain.push(a);
            out.push(chain);
            return;
        }
        for (i, &x) in pool.iter().enumerate() {
            if !used[i] {
                used[i] = true;
                prefix.push(x);
                extend(prefix, remaining - 1, pool, used, a, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    for k in 2..=n {
        let mut prefix = vec![b];
        let mut used = vec![false; middle.len()];
        extend(&mut prefix, k - 2, &middle, &mut used, a, &mut out);
    }
    out
}

/// Builds the exact finite instance of the requested scheme over `n`
/// agents; requires `n >= 3`.
pub fn build_axiom(n: usize, kind: AxiomKind) -> Result<Formula, ModelError> {
    validate_agent_count(n, false)?;
    let agents: Vec<AgentId> = (0..n).map(AgentId).collect();
    let pairs = agents
        .iter()
        .flat_map(|&a| agents.iter().filter(move |&&b| b != a).map(move |&b| (a, b)));
    let conjuncts: Vec<Formula> = match kind {
        AxiomKind::Chain => pairs
            .map(|(a, b)| {
                let chains = injective_chains(n, b, a);
                let disjuncts = chains.into_iter().map(|chain| {
                    Formula::conj(chain.windows(2).map(|w| {
                        Formula::and(
                            Formula::atom(w[0], w[1].secret()),
                            Formula::atom(w[1], w[0].secret()),
                        )
                    }))
                });
                Formula::implies(Formula::atom(a, b.secret()), Formula::disj(disjuncts))
            })
            .collect(),
        AxiomKind::Reveal => pairs
            .map(|(a, b)| {
                let disjuncts = agents
                    .iter()
                    .filter(|&&c| c != a)
                    .map(|&c| Formula::atom(c, a.secret()));
                Formula::implies(Formula::atom(a, b.secret()), Formula::disj(disjuncts))
            })
            .collect(),
        AxiomKind::OnlyCaller => pairs
            .map(|(a, b)| {
                let sole = Formula::conj(
                    std::iter::once(Formula::atom(a, b.secret())).chain(
                        agents
                            .iter()
                            .filter(|&&i| i != a && i != b)
                            .map(|&i| Formula::not(Formula::atom(i, b.secret()))),
                    ),
                );
                Formula::implies(sole, Formula::atom(b, a.secret()))
            })
            .collect(),
    };
    Ok(Formula::conj(conjuncts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Call;

    fn seq(text: &str) -> CallSequence {
        CallSequence::parse(text).unwrap()
    }

    fn cfg(n: usize) -> EvalConfig {
        EvalConfig::new(n).unwrap()
    }

    const A: AgentId = AgentId(0);
    const B: AgentId = AgentId(1);
    const C: AgentId = AgentId(2);

    #[test]
    fn fragments() {
        assert_eq!(fragment_of(&Formula::atom(A, SecretId(1))), Fragment::L0);
        assert_eq!(
            fragment_of(&Formula::know(A, Formula::atom(B, SecretId(0)))),
            Fragment::L1
        );
        assert_eq!(
            fragment_of(&Formula::know(
                A,
                Formula::know(B, Formula::atom(A, SecretId(1)))
            )),
            Fragment::L
        );
        assert_eq!(
            fragment_of(&Formula::common([A, B], Formula::atom(A, SecretId(1)))),
            Fragment::Lck
        );
    }

    #[test]
    fn atom_truth_via_final_situation() {
        let cfg = cfg(3);
        let f = Formula::atom(A, SecretId(2));
        assert!(eval(&f, &seq("ac,bc,ac"), &cfg).unwrap().value);
        assert!(!eval(&f, &CallSequence::empty(), &cfg).unwrap().value);
        let own = Formula::atom(A, SecretId(0));
        let v = eval(&own, &CallSequence::empty(), &cfg).unwrap();
        assert!(v.value && v.exact);
    }

    #[test]
    fn knowledge_over_propositional_bodies() {
        let cfg = cfg(3);
        // after ab, in every indistinguishable sequence b received A
        let v = eval(&Formula::know(A, Formula::atom(B, SecretId(0))), &seq("ab"), &cfg).unwrap();
        assert!(v.value && v.exact);

        // a cannot rule out that b is not yet an expert
        let v = eval(&Formula::know(A, Formula::expert(B, 3)), &seq("ab,ac,bc"), &cfg).unwrap();
        assert!(!v.value && v.exact);

        // at the empty sequence a cannot know b holds A
        let v = eval(
            &Formula::know(A, Formula::atom(B, SecretId(0))),
            &CallSequence::empty(),
            &cfg,
        )
        .unwrap();
        assert!(!v.value);
    }

    #[test]
    fn nested_knowledge_is_bounded() {
        let cfg = cfg(3).with_rep_bound(3);
        let f = Formula::know(A, Formula::know(B, Formula::atom(A, SecretId(1))));
        let v = eval(&f, &seq("ab"), &cfg).unwrap();
        // after ab both took part in the same call; bounded mode cannot
        // certify the universal side, so a positive answer is inexact
        assert!(!v.exact || !v.value);

        // refutation at the empty sequence is definitive
        let v = eval(&f, &CallSequence::empty(), &cfg).unwrap();
        assert!(!v.value && v.exact);
    }

    #[test]
    fn common_knowledge_dispatch() {
        let cfg = cfg(3);
        // singleton group behaves as knowledge
        let know = Formula::know(A, Formula::atom(B, SecretId(0)));
        let com = Formula::common([A], Formula::atom(B, SecretId(0)));
        for s in ["", "ab", "ab,bc"] {
            assert_eq!(
                eval(&com, &seq(s), &cfg).unwrap().value,
                eval(&know, &seq(s), &cfg).unwrap().value,
            );
        }

        // groups of three or more commonly know exactly the true formulas
        let always = build_axiom(3, AxiomKind::Reveal).unwrap();
        let v = eval(&Formula::common([A, B, C], always), &seq("ab"), &cfg).unwrap();
        assert!(v.value && v.exact);
        let contingent = Formula::atom(A, SecretId(1));
        let v = eval(&Formula::common([A, B, C], contingent), &seq("ab"), &cfg).unwrap();
        assert!(!v.value && v.exact);

        // two-agent group: negation or a call between the members is refused
        let neg = Formula::common([A, B], Formula::not(Formula::atom(A, SecretId(1))));
        assert!(matches!(
            eval(&neg, &seq("bc"), &cfg),
            Err(EvalError::UnsupportedCommon(_))
        ));
        let ok_body = Formula::common([A, B], Formula::atom(A, SecretId(0)));
        assert!(matches!(
            eval(&ok_body, &seq("ab"), &cfg),
            Err(EvalError::UnsupportedCommon(_))
        ));
        assert!(matches!(
            eval(&ok_body, &seq("ba"), &cfg),
            Err(EvalError::UnsupportedCommon(_))
        ));
        // F(a,A) holds always, so the alternation confirms it
        let v = eval(&ok_body, &seq("bc"), &cfg).unwrap();
        assert!(v.value);
    }

    #[test]
    fn truth_of_the_axioms_at_three_agents() {
        let g = Digraph::complete(3).unwrap();
        for kind in [AxiomKind::Chain, AxiomKind::Reveal, AxiomKind::OnlyCaller] {
            let f = build_axiom(3, kind).unwrap();
            assert!(is_true_l0(&f, 3, &g).unwrap().is_valid(), "{kind:?}");
        }
        // a contingent atom is refuted at the initial situation
        let out = is_true_l0(&Formula::atom(A, SecretId(1)), 3, &g).unwrap();
        match out {
            L0Truth::Refuted { situation, witness } => {
                assert_eq!(situation.render(), "A.B.C");
                assert!(witness.is_empty());
            }
            L0Truth::Valid => panic!("expected a refutation"),
        }
    }

    #[test]
    fn truth_rejects_modal_formulas() {
        let g = Digraph::complete(3).unwrap();
        let f = Formula::know(A, Formula::atom(B, SecretId(0)));
        assert!(matches!(
            is_true_l0(&f, 3, &g),
            Err(EvalError::FragmentViolation { .. })
        ));
    }

    #[test]
    fn bounded_truth_refutations() {
        let cfg = cfg(3);
        let g = Digraph::complete(3).unwrap();
        let f = Formula::know(A, Formula::atom(B, SecretId(0)));
        match holds_for_all_bounded(&f, &g, 2, &cfg).unwrap() {
            BoundedTruth::Refuted { witness, .. } => assert!(witness.is_empty()),
            other => panic!("expected a refutation, got {other:?}"),
        }
        match holds_for_all_bounded(&Formula::expert(A, 3), &g, 3, &cfg).unwrap() {
            BoundedTruth::Refuted { witness, .. } => assert!(witness.is_empty()),
            other => panic!("expected a refutation, got {other:?}"),
        }
        let valid = build_axiom(3, AxiomKind::OnlyCaller).unwrap();
        assert!(matches!(
            holds_for_all_bounded(&valid, &g, 5, &cfg).unwrap(),
            BoundedTruth::NoCounterexample { bound: 5 }
        ));
    }

    #[test]
    fn chain_axiom_structure() {
        // the 3-agent instance pairs a direct exchange with the single
        // two-step chain through the remaining agent
        let chains = injective_chains(3, B, A);
        assert_eq!(chains, vec![vec![B, A], vec![B, C, A]]);
        let chains4 = injective_chains(4, B, A);
        assert_eq!(chains4.len(), 5); // k=2: 1, k=3: 2, k=4: 2

        let direct = Formula::and(Formula::atom(B, A.secret()), Formula::atom(A, B.secret()));
        let via_c = Formula::conj([
            Formula::and(Formula::atom(B, C.secret()), Formula::atom(C, B.secret())),
            Formula::and(Formula::atom(C, A.secret()), Formula::atom(A, C.secret())),
        ]);
        let expected_ab =
            Formula::implies(Formula::atom(A, B.secret()), Formula::disj([direct, via_c]));
        let axiom = build_axiom(3, AxiomKind::Chain).unwrap();
        // the first conjunct covers the pair (a, b)
        fn leftmost_chain(f: &Formula, out: &mut Vec<Formula>) {
            if let Formula::And(l, r) = f {
                leftmost_chain(l, out);
                out.push((**r).clone());
            } else {
                out.push(f.clone());
            }
        }
        let mut parts = Vec::new();
        leftmost_chain(&axiom, &mut parts);
        assert_eq!(parts.len(), 6);
        assert_eq!(parts[0], expected_ab);
    }

    #[test]
    fn stuttering_a_call_preserves_truth() {
        let cfg = cfg(3);
        let f = Formula::know(A, Formula::atom(B, SecretId(0)));
        let base = seq("ab,bc");
        let stuttered = seq("ab,ab,bc");
        assert_eq!(
            eval(&f, &base, &cfg).unwrap().value,
            eval(&f, &stuttered, &cfg).unwrap().value
        );
    }

    #[test]
    fn guard_stability_under_uninvolved_calls() {
        let cfg = cfg(3);
        let f = Formula::know(A, Formula::atom(B, SecretId(0)));
        let before = seq("ab");
        let after = seq("ab,bc");
        assert_eq!(
            eval(&f, &before, &cfg).unwrap().value,
            eval(&f, &after, &cfg).unwrap().value
        );
        let mut extended = before.clone();
        extended.push(Call::parse("cb").unwrap());
        assert_eq!(
            eval(&f, &before, &cfg).unwrap().value,
            eval(&f, &extended, &cfg).unwrap().value
        );
    }
}
