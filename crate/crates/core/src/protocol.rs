//! Guarded-command gossip protocols.
//!
//! Each agent runs a repeated nondeterministic choice among rules
//! `guard ~> call`, where the agent is the caller. Guards live in the
//! fragment with non-nested knowledge whose only modality belongs to the
//! caller, and any atom outside the knowledge operator must be owned by
//! the caller: calls the agent is not involved in then never flip its
//! guards, which the exploration engine depends on. A permissive option
//! lifts the ownership and single-modality restrictions to general
//! non-nested guards, marking every derived report as outside the usual
//! assumptions.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::logic::{Formula, Fragment};
use crate::model::{validate_agent_count, AgentId, Call, Digraph, ModelError};
use crate::parse::{self, AgentTable, ParseError, Tok};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("agent {agent}: {reason}")]
    BadGuard { agent: String, reason: String },
    #[error("agent {agent} cannot be the caller of {call}")]
    CallerMismatch { agent: String, call: String },
    #[error("call {call} is not allowed by the declared graph")]
    CallOutsideGraph { call: String },
    #[error("builtin `{name}` requires at least {min} agents, got {n}")]
    BuiltinTooSmall { name: String, min: usize, n: usize },
    #[error("builtin `{name}` is defined for the complete digraph only")]
    BuiltinFixedGraph { name: String },
    #[error("graph has {graph_agents} agents but the protocol declares {agents}")]
    GraphSizeMismatch { graph_agents: usize, agents: usize },
}

/// A guarded call: when the guard is true the owner may place the call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub guard: Formula,
    pub call: Call,
}

/// One agent's program: a repeated nondeterministic choice among its
/// rules. An empty program never calls anyone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub owner: AgentId,
    pub rules: Vec<Rule>,
}

/// Identifies a rule inside a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId {
    pub agent: AgentId,
    pub index: usize,
}

/// Options controlling protocol validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProtocolOptions {
    /// Accept any non-nested guard, regardless of modal owner and atom
    /// ownership. Reports derived from such a protocol are flagged.
    pub permissive_guards: bool,
    /// Allow two agents (the stipulated minimum is three).
    pub allow_small: bool,
}

/// A parallel composition of component programs over a digraph that every
/// rule's call must respect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    agents: AgentTable,
    programs: Vec<Program>,
    digraph: Digraph,
    /// False when a permissive guard was accepted.
    restricted: bool,
}

impl Protocol {
    /// Validates the programs and assembles a protocol. With no explicit
    /// graph the minimal digraph spanned by the rules is used.
    pub fn new(
        agents: AgentTable,
        programs: Vec<Program>,
        graph: Option<Digraph>,
        options: ProtocolOptions,
    ) -> Result<Self, ProtocolError> {
        let n = agents.len();
        validate_agent_count(n, options.allow_small)?;
        assert_eq!(programs.len(), n, "one program per agent");
        let mut restricted = true;
        for program in &programs {
            for rule in &program.rules {
                if rule.call.caller != program.owner {
                    return Err(ProtocolError::CallerMismatch {
                        agent: agents.name(program.owner).to_string(),
                        call: rule.call.render(),
                    });
                }
                match classify_guard(&rule.guard, program.owner) {
                    Ok(_) => {}
                    Err(reason) => {
                        if options.permissive_guards
                            && matches!(
                                crate::logic::fragment_of(&rule.guard),
                                Fragment::L0 | Fragment::L1
                            )
                        {
                            restricted = false;
                        } else {
                            return Err(ProtocolError::BadGuard {
                                agent: agents.name(program.owner).to_string(),
                                reason,
                            });
                        }
                    }
                }
            }
        }
        let minimal = minimal_digraph(n, &programs)?;
        let digraph = match graph {
            None => minimal,
            Some(g) => {
                if g.agent_count() != n {
                    return Err(ProtocolError::GraphSizeMismatch {
                        graph_agents: g.agent_count(),
                        agents: n,
                    });
                }
                for program in &programs {
                    for rule in &program.rules {
                        if !g.allows(rule.call) {
                            return Err(ProtocolError::CallOutsideGraph {
                                call: rule.call.render(),
                            });
                        }
                    }
                }
                g
            }
        };
        Ok(Protocol {
            agents,
            programs,
            digraph,
            restricted,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &AgentTable {
        &self.agents
    }

    pub fn programs(&self) -> &[Program] {
        &self.programs
    }

    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    /// False when permissive guards are present, in which case analysis
    /// reports are flagged as outside the usual guard assumptions.
    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.programs[id.agent.0].rules[id.index]
    }

    /// All rules in canonical (agent, index) order.
    pub fn rules(&self) -> impl Iterator<Item = (RuleId, &Rule)> {
        self.programs.iter().flat_map(|p| {
            p.rules.iter().enumerate().map(move |(index, rule)| {
                (
                    RuleId {
                        agent: p.owner,
                        index,
                    },
                    rule,
                )
            })
        })
    }

    /// True when every program is empty.
    pub fn is_empty(&self) -> bool {
        self.programs.iter().all(|p| p.rules.is_empty())
    }

    /// The minimal digraph spanned by the rules' calls.
    pub fn inferred_digraph(&self) -> Digraph {
        minimal_digraph(self.agent_count(), &self.programs).expect("validated programs")
    }

    /// Renders back into the protocol grammar.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("agents:");
        for name in self.agents.names() {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
        out.push_str("graph: ");
        if self.digraph.is_complete() {
            out.push_str("complete");
        } else {
            let edges: Vec<String> = self
                .digraph
                .edges()
                .map(|(a, b)| format!("{} -> {}", self.agents.name(a), self.agents.name(b)))
                .collect();
            out.push_str(&edges.join(", "));
        }
        out.push('\n');
        for program in &self.programs {
            out.push_str(&format!("program {}:\n", self.agents.name(program.owner)));
            for rule in &program.rules {
                out.push_str(&format!(
                    "  {} ~> {} {}\n",
                    rule.guard.render(&self.agents),
                    self.agents.name(rule.call.caller),
                    self.agents.name(rule.call.callee),
                ));
            }
        }
        out
    }

    /// Machine-readable dump: one object per program, rules as
    /// guard-string/call pairs.
    pub fn dump(&self) -> serde_json::Value {
        serde_json::json!({
            "agents": self.agents.names(),
            "graph": self
                .digraph
                .edges()
                .map(|(a, b)| format!("{}->{}", self.agents.name(a), self.agents.name(b)))
                .collect::<Vec<_>>(),
            "restricted_guards": self.restricted,
            "programs": self
                .programs
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "agent": self.agents.name(p.owner),
                        "rules": p
                            .rules
                            .iter()
                            .map(|r| {
                                serde_json::json!({
                                    "guard": r.guard.render(&self.agents),
                                    "call": format!(
                                        "{} {}",
                                        self.agents.name(r.call.caller),
                                        self.agents.name(r.call.callee)
                                    ),
                                })
                            })
                            .collect::<Vec<_>>(),
                    })
                })
                .collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

fn minimal_digraph(n: usize, programs: &[Program]) -> Result<Digraph, ModelError> {
    let mut edges = BTreeSet::new();
    for program in programs {
        for rule in &program.rules {
            edges.insert((rule.call.caller, rule.call.callee));
        }
    }
    Digraph::new(n, edges)
}

/// Checks the guard shape for the given owner and returns its fragment:
/// propositional, or single-owner non-nested knowledge. Atoms outside the
/// knowledge operator must be owned by the caller.
pub fn classify_guard(guard: &Formula, owner: AgentId) -> Result<Fragment, String> {
    fn walk(f: &Formula, owner: AgentId, under_know: bool, has_know: &mut bool) -> Result<(), String> {
        match f {
            Formula::Atom(a, _) => {
                if !under_know && *a != owner {
                    return Err(format!(
                        "atom owned by agent {} occurs outside the knowledge operator",
                        a
                    ));
                }
                Ok(())
            }
            Formula::Not(g) => walk(g, owner, under_know, has_know),
            Formula::And(l, r) => {
                walk(l, owner, under_know, has_know)?;
                walk(r, owner, under_know, has_know)
            }
            Formula::Know(a, body) => {
                if under_know {
                    return Err("nested knowledge operators are not allowed in guards".into());
                }
                if *a != owner {
                    return Err(format!("knowledge operator of agent {a} in another program"));
                }
                *has_know = true;
                walk(body, owner, true, has_know)
            }
            Formula::Common(..) => Err("common knowledge is not allowed in guards".into()),
        }
    }
    let mut has_know = false;
    walk(guard, owner, false, &mut has_know)?;
    Ok(if has_know {
        Fragment::L1a(owner)
    } else {
        Fragment::L0
    })
}

/// The named protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Call whoever's secret you do not hold yet.
    Lns,
    /// Call whoever you do not know to hold your secret.
    Hms,
    /// Call neighbours while not an expert.
    Exp,
    /// A hub polls everyone, then re-polls all but the last; everyone
    /// else stays silent. All runs take `2n - 3` calls.
    TwoPhase,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Lns => "lns",
            Builtin::Hms => "hms",
            Builtin::Exp => "exp",
            Builtin::TwoPhase => "two_phase",
        }
    }

    pub fn parse(name: &str) -> Option<Builtin> {
        match name {
            "lns" => Some(Builtin::Lns),
            "hms" => Some(Builtin::Hms),
            "exp" => Some(Builtin::Exp),
            "two_phase" => Some(Builtin::TwoPhase),
            _ => None,
        }
    }
}

/// Instantiates a named protocol for `n` agents. `lns` and `exp` accept an
/// arbitrary connected digraph (each agent calls its out-neighbours);
/// `hms` and `two_phase` are defined over the complete digraph.
pub fn builtin(which: Builtin, n: usize, graph: Option<Digraph>) -> Result<Protocol, ProtocolError> {
    builtin_with(which, n, graph, ProtocolOptions::default())
}

/// [`builtin`] with explicit validation options.
pub fn builtin_with(
    which: Builtin,
    n: usize,
    graph: Option<Digraph>,
    options: ProtocolOptions,
) -> Result<Protocol, ProtocolError> {
    let min = match which {
        Builtin::TwoPhase => 4,
        _ => {
            if options.allow_small {
                2
            } else {
                3
            }
        }
    };
    if n < min {
        return Err(ProtocolError::BuiltinTooSmall {
            name: which.name().to_string(),
            min,
            n,
        });
    }
    if matches!(which, Builtin::Hms | Builtin::TwoPhase) {
        if let Some(g) = &graph {
            if !g.is_complete() {
                return Err(ProtocolError::BuiltinFixedGraph {
                    name: which.name().to_string(),
                });
            }
        }
    }
    let g = match graph {
        Some(g) => {
            if g.agent_count() != n {
                return Err(ProtocolError::GraphSizeMismatch {
                    graph_agents: g.agent_count(),
                    agents: n,
                });
            }
            g
        }
        None => Digraph::complete(n)?,
    };
    let agents = AgentTable::letters(n)?;
    let programs: Vec<Program> = match which {
        Builtin::Lns => (0..n)
            .map(|i| {
                let owner = AgentId(i);
                let rules = g
                    .callees_of(owner)
                    .into_iter()
                    .map(|j| Rule {
                        guard: Formula::not(Formula::atom(owner, j.secret())),
                        call: Call::new(owner, j),
                    })
                    .collect();
                Program { owner, rules }
            })
            .collect(),
        Builtin::Hms => (0..n)
            .map(|i| {
                let owner = AgentId(i);
                let rules = g
                    .callees_of(owner)
                    .into_iter()
                    .map(|j| Rule {
                        guard: Formula::not(Formula::know(
                            owner,
                            Formula::atom(j, owner.secret()),
                        )),
                        call: Call::new(owner, j),
                    })
                    .collect();
                Program { owner, rules }
            })
            .collect(),
        Builtin::Exp => (0..n)
            .map(|i| {
                let owner = AgentId(i);
                let rules = g
                    .callees_of(owner)
                    .into_iter()
                    .map(|j| Rule {
                        guard: Formula::not(Formula::expert(owner, n)),
                        call: Call::new(owner, j),
                    })
                    .collect();
                Program { owner, rules }
            })
            .collect(),
        Builtin::TwoPhase => {
            let hub = AgentId(0);
            let mut rules = Vec::with_capacity(2 * (n - 1));
            for i in 1..n {
                rules.push(Rule {
                    guard: Formula::not(Formula::atom(hub, AgentId(i).secret())),
                    call: Call::new(hub, AgentId(i)),
                });
            }
            for i in 1..n {
                rules.push(Rule {
                    guard: Formula::and(
                        Formula::expert(hub, n),
                        Formula::not(Formula::know(hub, Formula::expert(AgentId(i), n))),
                    ),
                    call: Call::new(hub, AgentId(i)),
                });
            }
            let mut programs = vec![Program {
                owner: hub,
                rules,
            }];
            programs.extend((1..n).map(|i| Program {
                owner: AgentId(i),
                rules: Vec::new(),
            }));
            programs
        }
    };
    Protocol::new(agents, programs, Some(g), options)
}

/// Parses a protocol source file; see [`crate::parse`] for the grammar.
pub fn parse_protocol(text: &str) -> Result<Protocol, ProtocolError> {
    parse_protocol_with(text, ProtocolOptions::default())
}

pub fn parse_protocol_with(
    text: &str,
    options: ProtocolOptions,
) -> Result<Protocol, ProtocolError> {
    let toks = parse::tokenize(text)?;
    let mut cur = parse::Cursor::new(&toks, parse::end_pos(text));

    let err_at = |cur: &parse::Cursor, msg: String| -> ProtocolError {
        let pos = cur.pos();
        ParseError {
            line: pos.line,
            col: pos.col,
            message: msg,
        }
        .into()
    };

    // agents: ident+
    let (kw, _) = cur.expect_ident().map_err(ProtocolError::from)?;
    if kw != "agents" {
        return Err(err_at(&cur, format!("expected `agents`, found `{kw}`")));
    }
    cur.expect(&Tok::Colon).map_err(ProtocolError::from)?;
    let mut names = Vec::new();
    while let Some(Tok::Ident(name)) = cur.peek() {
        if name == "graph" || name == "program" {
            break;
        }
        names.push(name.clone());
        cur.next();
    }
    if names.is_empty() {
        return Err(err_at(&cur, "expected at least one agent name".into()));
    }
    let agents = AgentTable::from_names(names).map_err(ProtocolError::from)?;
    let n = agents.len();

    // optional graph
    let mut graph: Option<Digraph> = None;
    if cur.peek() == Some(&Tok::Ident("graph".into())) {
        cur.next();
        cur.expect(&Tok::Colon).map_err(ProtocolError::from)?;
        if cur.peek() == Some(&Tok::Ident("complete".into())) {
            cur.next();
            graph = Some(Digraph::complete(n).map_err(ProtocolError::from)?);
        } else {
            let mut edges = Vec::new();
            loop {
                let (from, pos) = cur.expect_ident().map_err(ProtocolError::from)?;
                let from = agents.resolve(&from).ok_or_else(|| {
                    ProtocolError::from(ParseError {
                        line: pos.line,
                        col: pos.col,
                        message: format!("unknown agent `{from}`"),
                    })
                })?;
                cur.expect(&Tok::EdgeArrow).map_err(ProtocolError::from)?;
                let (to, pos) = cur.expect_ident().map_err(ProtocolError::from)?;
                let to = agents.resolve(&to).ok_or_else(|| {
                    ProtocolError::from(ParseError {
                        line: pos.line,
                        col: pos.col,
                        message: format!("unknown agent `{to}`"),
                    })
                })?;
                edges.push((from, to));
                if cur.peek() == Some(&Tok::Comma) {
                    cur.next();
                } else {
                    break;
                }
            }
            graph = Some(Digraph::new(n, edges).map_err(ProtocolError::from)?);
        }
    }

    // programs; agents without one get an empty program
    let mut programs: Vec<Program> = (0..n)
        .map(|i| Program {
            owner: AgentId(i),
            rules: Vec::new(),
        })
        .collect();
    let mut declared = vec![false; n];
    while !cur.at_end() {
        let (kw, pos) = cur.expect_ident().map_err(ProtocolError::from)?;
        if kw != "program" {
            return Err(ProtocolError::from(ParseError {
                line: pos.line,
                col: pos.col,
                message: format!("expected `program`, found `{kw}`"),
            }));
        }
        let (name, pos) = cur.expect_ident().map_err(ProtocolError::from)?;
        let owner = agents.resolve(&name).ok_or_else(|| {
            ProtocolError::from(ParseError {
                line: pos.line,
                col: pos.col,
                message: format!("unknown agent `{name}`"),
            })
        })?;
        if declared[owner.0] {
            return Err(ProtocolError::from(ParseError {
                line: pos.line,
                col: pos.col,
                message: format!("duplicate program for agent `{name}`"),
            }));
        }
        declared[owner.0] = true;
        cur.expect(&Tok::Colon).map_err(ProtocolError::from)?;
        let mut rules = Vec::new();
        // a rule starts wherever a formula can; `program` ends the list
        while let Some(tok) = cur.peek() {
            let starts_rule = match tok {
                Tok::Ident(w) => w != "program",
                Tok::Bang | Tok::LParen => true,
                _ => false,
            };
            if !starts_rule {
                break;
            }
            let guard = parse::parse_implies(&mut cur, &agents).map_err(ProtocolError::from)?;
            cur.expect(&Tok::RuleArrow).map_err(ProtocolError::from)?;
            let (cname, cpos) = cur.expect_ident().map_err(ProtocolError::from)?;
            let caller = agents.resolve(&cname).ok_or_else(|| {
                ProtocolError::from(ParseError {
                    line: cpos.line,
                    col: cpos.col,
                    message: format!("unknown agent `{cname}`"),
                })
            })?;
            let (ename, epos) = cur.expect_ident().map_err(ProtocolError::from)?;
            let callee = agents.resolve(&ename).ok_or_else(|| {
                ProtocolError::from(ParseError {
                    line: epos.line,
                    col: epos.col,
                    message: format!("unknown agent `{ename}`"),
                })
            })?;
            if caller == callee {
                return Err(ProtocolError::from(ParseError {
                    line: cpos.line,
                    col: cpos.col,
                    message: "a call must involve two distinct agents".into(),
                }));
            }
            rules.push(Rule {
                guard,
                call: Call::new(caller, callee),
            });
        }
        programs[owner.0] = Program { owner, rules };
    }

    Protocol::new(agents, programs, graph, options)
}
