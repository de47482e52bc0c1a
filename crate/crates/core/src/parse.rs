//! Tokenizer, agent naming, and the parsers for the formula and protocol
//! grammars.
//!
//! Formula grammar (whitespace insignificant, precedence `!` > `&` > `|`
//! > `=>`, all binary operators left-associative):
//!
//! ```text
//! phi ::= "F(" agent "," SECRET ")" | "Exp(" agent ")" | "!" phi
//!       | phi "&" phi | phi "|" phi | phi "=>" phi
//!       | "K(" agent "," phi ")" | "C({" agent-list "}," phi ")" | "(" phi ")"
//! ```
//!
//! Protocol grammar:
//!
//! ```text
//! file    ::= "agents:" ident+ ("graph:" ("complete" | edge ("," edge)*))? program+
//! program ::= "program" ident ":" rule*
//! rule    ::= phi "~>" ident ident
//! edge    ::= ident "->" ident
//! ```
//!
//! Agents are lowercase identifiers; a secret is written as the uppercased
//! name of the agent holding it.

use std::fmt;

use thiserror::Error;

use crate::logic::Formula;
use crate::model::{validate_agent_count, AgentId, ModelError, SecretId, MAX_AGENTS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

/// Maps agent names to indices. Defaults to the letters `a`, `b`, `c`, ...;
/// protocol files may declare other names. Secrets are written as the
/// uppercased agent name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTable {
    names: Vec<String>,
}

impl AgentTable {
    /// The default table over `n` agents named `a`..`z`.
    pub fn letters(n: usize) -> Result<Self, ModelError> {
        validate_agent_count(n, true)?;
        Ok(AgentTable {
            names: (0..n).map(|i| AgentId(i).letter().to_string()).collect(),
        })
    }

    pub fn from_names(names: Vec<String>) -> Result<Self, ModelError> {
        validate_agent_count(names.len(), true)?;
        for name in &names {
            let ok = !name.is_empty()
                && name.chars().next().unwrap().is_ascii_lowercase()
                && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit());
            if !ok {
                return Err(ModelError::UnknownAgent(name.clone()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateAgent(name.clone()));
            }
        }
        Ok(AgentTable { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, a: AgentId) -> &str {
        &self.names[a.0]
    }

    pub fn secret_name(&self, s: SecretId) -> String {
        self.names[s.0].to_uppercase()
    }

    pub fn resolve(&self, name: &str) -> Option<AgentId> {
        self.names.iter().position(|n| n == name).map(AgentId)
    }

    /// Resolves an uppercase secret identifier to the agent holding it.
    pub fn resolve_secret(&self, name: &str) -> Option<SecretId> {
        if !name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
            return None;
        }
        self.resolve(&name.to_lowercase()).map(AgentId::secret)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// True when every name is a single letter, so calls can be rendered as
    /// two-letter tokens.
    pub fn single_letter(&self) -> bool {
        self.names.iter().all(|n| n.len() == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Bang,
    Amp,
    Pipe,
    Implies,   // =>
    RuleArrow, // ~>
    EdgeArrow, // ->
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Implies => write!(f, "`=>`"),
            Tok::RuleArrow => write!(f, "`~>`"),
            Tok::EdgeArrow => write!(f, "`->`"),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let pos = Pos { line, col };
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        if ch.is_whitespace() {
            chars.next();
            bump(ch, &mut line, &mut col);
            continue;
        }
        if ch == '#' {
            // comment to end of line
            while let Some(&c) = chars.peek() {
                chars.next();
                bump(c, &mut line, &mut col);
                if c == '\n' {
                    break;
                }
            }
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let mut ident = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(c);
                    chars.next();
                    bump(c, &mut line, &mut col);
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(ident), pos));
            continue;
        }
        chars.next();
        bump(ch, &mut line, &mut col);
        let tok = match ch {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '=' | '~' | '-' => {
                if chars.peek() == Some(&'>') {
                    chars.next();
                    bump('>', &mut line, &mut col);
                    match ch {
                        '=' => Tok::Implies,
                        '~' => Tok::RuleArrow,
                        _ => Tok::EdgeArrow,
                    }
                } else {
                    return Err(ParseError::new(pos, format!("expected `>` after `{ch}`")));
                }
            }
            other => {
                return Err(ParseError::new(pos, format!("unexpected character `{other}`")));
            }
        };
        out.push((tok, pos));
    }
    Ok(out)
}

/// Token cursor shared by the formula and protocol parsers.
pub(crate) struct Cursor<'a> {
    toks: &'a [(Tok, Pos)],
    pub idx: usize,
    end: Pos,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [(Tok, Pos)], text_end: Pos) -> Self {
        Cursor {
            toks,
            idx: 0,
            end: text_end,
        }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or(self.end)
    }

    pub fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(ParseError::new(pos, format!("expected {tok}, found {t}"))),
            None => Err(ParseError::new(pos, format!("expected {tok}, found end of input"))),
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Ident(s)) => Ok((s.clone(), pos)),
            Some(t) => Err(ParseError::new(pos, format!("expected an identifier, found {t}"))),
            None => Err(ParseError::new(pos, "expected an identifier, found end of input")),
        }
    }

    pub fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }
}

pub(crate) fn end_pos(text: &str) -> Pos {
    let line = text.lines().count().max(1);
    let col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    Pos { line, col }
}

/// Parses a closed formula over the given agent table.
pub fn parse_formula(text: &str, agents: &AgentTable) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks, end_pos(text));
    let f = parse_implies(&mut cur, agents)?;
    if !cur.at_end() {
        return Err(ParseError::new(
            cur.pos(),
            format!("unexpected trailing {}", cur.peek().unwrap()),
        ));
    }
    Ok(f)
}

pub(crate) fn parse_implies(cur: &mut Cursor, agents: &AgentTable) -> Result<Formula, ParseError> {
    let mut f = parse_or(cur, agents)?;
    while cur.peek() == Some(&Tok::Implies) {
        cur.next();
        let rhs = parse_or(cur, agents)?;
        f = Formula::implies(f, rhs);
    }
    Ok(f)
}

fn parse_or(cur: &mut Cursor, agents: &AgentTable) -> Result<Formula, ParseError> {
    let mut f = parse_and(cur, agents)?;
    while cur.peek() == Some(&Tok::Pipe) {
        cur.next();
        let rhs = parse_and(cur, agents)?;
        f = Formula::or(f, rhs);
    }
    Ok(f)
}

fn parse_and(cur: &mut Cursor, agents: &AgentTable) -> Result<Formula, ParseError> {
    let mut f = parse_unary(cur, agents)?;
    while cur.peek() == Some(&Tok::Amp) {
        cur.next();
        let rhs = parse_unary(cur, agents)?;
        f = Formula::and(f, rhs);
    }
    Ok(f)
}

fn parse_unary(cur: &mut Cursor, agents: &AgentTable) -> Result<Formula, ParseError> {
    if cur.peek() == Some(&Tok::Bang) {
        cur.next();
        return Ok(Formula::not(parse_unary(cur, agents)?));
    }
    parse_primary(cur, agents)
}

fn parse_agent(cur: &mut Cursor, agents: &AgentTable) -> Result<AgentId, ParseError> {
    let (name, pos) = cur.expect_ident()?;
    agents
        .resolve(&name)
        .ok_or_else(|| ParseError::new(pos, format!("unknown agent `{name}`")))
}

fn parse_secret(cur: &mut Cursor, agents: &AgentTable) -> Result<SecretId, ParseError> {
    let (name, pos) = cur.expect_ident()?;
    agents
        .resolve_secret(&name)
        .ok_or_else(|| ParseError::new(pos, format!("unknown secret `{name}`")))
}

fn parse_primary(cur: &mut Cursor, agents: &AgentTable) -> Result<Formula, ParseError> {
    let pos = cur.pos();
    match cur.next() {
        Some(Tok::LParen) => {
            let f = parse_implies(cur, agents)?;
            cur.expect(&Tok::RParen)?;
            Ok(f)
        }
        Some(Tok::Ident(head)) => match head.as_str() {
            "F" => {
                cur.expect(&Tok::LParen)?;
                let a = parse_agent(cur, agents)?;
                cur.expect(&Tok::Comma)?;
                let s = parse_secret(cur, agents)?;
                cur.expect(&Tok::RParen)?;
                Ok(Formula::atom(a, s))
            }
            "Exp" => {
                cur.expect(&Tok::LParen)?;
                let a = parse_agent(cur, agents)?;
                cur.expect(&Tok::RParen)?;
                Ok(Formula::expert(a, agents.len()))
            }
            "K" => {
                cur.expect(&Tok::LParen)?;
                let a = parse_agent(cur, agents)?;
                cur.expect(&Tok::Comma)?;
                let body = parse_implies(cur, agents)?;
                cur.expect(&Tok::RParen)?;
                Ok(Formula::know(a, body))
            }
            "C" => {
                cur.expect(&Tok::LParen)?;
                cur.expect(&Tok::LBrace)?;
                let mut group = vec![parse_agent(cur, agents)?];
                while cur.peek() == Some(&Tok::Comma) {
                    cur.next();
                    group.push(parse_agent(cur, agents)?);
                }
                cur.expect(&Tok::RBrace)?;
                cur.expect(&Tok::Comma)?;
                let body = parse_implies(cur, agents)?;
                cur.expect(&Tok::RParen)?;
                Ok(Formula::common(group, body))
            }
            other => Err(ParseError::new(
                pos,
                format!("expected a formula, found identifier `{other}`"),
            )),
        },
        Some(t) => Err(ParseError::new(pos, format!("expected a formula, found {t}"))),
        None => Err(ParseError::new(pos, "expected a formula, found end of input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SecretId;

    fn letters3() -> AgentTable {
        AgentTable::letters(3).unwrap()
    }

    #[test]
    fn atoms_and_connectives() {
        let t = letters3();
        let f = parse_formula("F(a,B)", &t).unwrap();
        assert_eq!(f, Formula::atom(AgentId(0), SecretId(1)));

        let f = parse_formula("F(a,B) & !F(b,C)", &t).unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::atom(AgentId(0), SecretId(1)),
                Formula::not(Formula::atom(AgentId(1), SecretId(2)))
            )
        );
    }

    #[test]
    fn desugaring() {
        let t = letters3();
        let or = parse_formula("F(a,B) | F(a,C)", &t).unwrap();
        let a_b = Formula::atom(AgentId(0), SecretId(1));
        let a_c = Formula::atom(AgentId(0), SecretId(2));
        assert_eq!(or, Formula::or(a_b.clone(), a_c.clone()));
        // or desugars into not/and
        assert_eq!(
            or,
            Formula::not(Formula::and(Formula::not(a_b.clone()), Formula::not(a_c.clone())))
        );
        let imp = parse_formula("F(a,B) => F(a,C)", &t).unwrap();
        assert_eq!(imp, Formula::not(Formula::and(a_b, Formula::not(a_c))));
    }

    #[test]
    fn exp_desugars_to_conjunction() {
        let t = letters3();
        let f = parse_formula("Exp(a)", &t).unwrap();
        assert_eq!(f, Formula::expert(AgentId(0), 3));
        let g = parse_formula("Exp(a) & !K(a, Exp(b))", &t).unwrap();
        assert_eq!(
            g,
            Formula::and(
                Formula::expert(AgentId(0), 3),
                Formula::not(Formula::know(AgentId(0), Formula::expert(AgentId(1), 3)))
            )
        );
    }

    #[test]
    fn common_groups() {
        let t = letters3();
        let f = parse_formula("C({a,b,c}, F(a,B))", &t).unwrap();
        assert_eq!(
            f,
            Formula::common(
                [AgentId(0), AgentId(1), AgentId(2)],
                Formula::atom(AgentId(0), SecretId(1))
            )
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let t = letters3();
        let f = parse_formula("!F(a,B) & F(b,A) | F(c,A) => F(a,C)", &t).unwrap();
        let expect = Formula::implies(
            Formula::or(
                Formula::and(
                    Formula::not(Formula::atom(AgentId(0), SecretId(1))),
                    Formula::atom(AgentId(1), SecretId(0)),
                ),
                Formula::atom(AgentId(2), SecretId(0)),
            ),
            Formula::atom(AgentId(0), SecretId(2)),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn errors_carry_positions() {
        let t = letters3();
        let err = parse_formula("F(a,", &t).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("end of input"));
        let err = parse_formula("F(d,A)", &t).unwrap_err();
        assert!(err.message.contains("unknown agent `d`"));
        let err = parse_formula("F(a,D)", &t).unwrap_err();
        assert!(err.message.contains("unknown secret `D`"));
        let err = parse_formula("F(a,B) F(a,C)", &t).unwrap_err();
        assert!(err.message.contains("trailing"));
    }

    #[test]
    fn custom_names() {
        let t = AgentTable::from_names(vec!["i".into(), "j".into(), "k".into()]).unwrap();
        let f = parse_formula("!F(i,J)", &t).unwrap();
        assert_eq!(f, Formula::not(Formula::atom(AgentId(0), SecretId(1))));
        assert!(AgentTable::from_names(vec!["i".into(), "i".into()]).is_err());
        assert!(AgentTable::from_names(vec!["I".into(), "j".into()]).is_err());
    }
}
