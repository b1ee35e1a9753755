//! CNF stipulations over world vertices.
//!
//! Concrete syntax:
//!
//! ```text
//! formula := clause ('&' clause)*
//! clause  := '(' literal ('|' literal)* ')' | literal ('|' literal)*
//! literal := '!'? symbol
//! ```
//!
//! A symbol is any maximal run of characters other than whitespace and
//! `! | & ( )`. A symbol names a world vertex and is true iff that vertex is
//! in the belief.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::observer::BeliefEngine;
use crate::pgraph::{PGraph, VertexSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    /// Character offset into the input.
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub symbol: String,
    pub negated: bool,
}

impl Literal {
    pub fn pos(symbol: impl Into<String>) -> Self {
        Literal {
            symbol: symbol.into(),
            negated: false,
        }
    }

    pub fn neg(symbol: impl Into<String>) -> Self {
        Literal {
            symbol: symbol.into(),
            negated: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    pub clauses: Vec<Clause>,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "!{}", self.symbol)
        } else {
            f.write_str(&self.symbol)
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<String> = self.literals.iter().map(ToString::to_string).collect();
        if lits.len() == 1 {
            f.write_str(&lits[0])
        } else {
            write!(f, "({})", lits.join(" | "))
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clauses: Vec<String> = self.clauses.iter().map(ToString::to_string).collect();
        f.write_str(&clauses.join(" & "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Not,
    Or,
    And,
    Open,
    Close,
    Sym(String),
}

fn is_special(c: char) -> bool {
    c.is_whitespace() || matches!(c, '!' | '|' | '&' | '(' | ')')
}

fn lex(text: &str) -> Vec<(usize, Tok)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => Tok::Not,
            '|' => Tok::Or,
            '&' => Tok::And,
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => {
                let start = i;
                while i < chars.len() && !is_special(chars[i]) {
                    i += 1;
                }
                out.push((start, Tok::Sym(chars[start..i].iter().collect())));
                continue;
            }
        };
        out.push((i, tok));
        i += 1;
    }
    out
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = if self.peek() == Some(&Tok::Not) {
            self.at += 1;
            true
        } else {
            false
        };
        match self.peek().cloned() {
            Some(Tok::Sym(s)) => {
                self.at += 1;
                Ok(Literal { symbol: s, negated })
            }
            Some(Tok::Not) => self.err("nested negation"),
            Some(Tok::Open) => self.err("parentheses are only allowed around whole clauses"),
            Some(Tok::And) if !negated => self.err("conjunction inside a clause is not CNF"),
            Some(Tok::Close) if !negated => self.err("empty clause"),
            Some(_) => self.err("expected a symbol"),
            None => self.err("unexpected end of input"),
        }
    }

    fn disjunction(&mut self) -> Result<Clause, ParseError> {
        let mut literals = vec![self.literal()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            literals.push(self.literal()?);
        }
        Ok(Clause { literals })
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.at += 1;
                if self.peek() == Some(&Tok::Close) {
                    return self.err("empty clause");
                }
                let c = self.disjunction()?;
                match self.peek() {
                    Some(Tok::Close) => {
                        self.at += 1;
                        Ok(c)
                    }
                    Some(Tok::And) => self.err("conjunction inside a clause is not CNF"),
                    Some(_) => self.err("expected `)`"),
                    None => self.err("unclosed `(`"),
                }
            }
            Some(Tok::And) => self.err("empty clause"),
            _ => self.disjunction(),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if self.peek().is_none() {
            return self.err("empty formula");
        }
        let mut clauses = vec![self.clause()?];
        loop {
            match self.peek() {
                None => return Ok(Formula { clauses }),
                Some(Tok::And) => {
                    self.at += 1;
                    clauses.push(self.clause()?);
                }
                Some(Tok::Close) => return self.err("unbalanced `)`"),
                Some(Tok::Or) => {
                    return self.err("disjunction of a parenthesised clause is not CNF")
                }
                Some(_) => return self.err("expected `&`"),
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text),
        at: 0,
        end: text.chars().count(),
    };
    p.formula()
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

impl Formula {
    pub fn symbols(&self) -> BTreeSet<&str> {
        self.clauses
            .iter()
            .flat_map(|c| c.literals.iter().map(|l| l.symbol.as_str()))
            .collect()
    }

    /// Evaluates against a belief given as a set of vertex ids.
    pub fn eval_names<S: std::borrow::Borrow<str> + Ord>(&self, belief: &BTreeSet<S>) -> bool {
        self.clauses.iter().all(|c| {
            c.literals
                .iter()
                .any(|l| belief.contains(l.symbol.as_str()) != l.negated)
        })
    }

    /// Resolves every symbol to a vertex of `world`.
    pub fn bind(&self, world: &PGraph) -> Result<BoundFormula> {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for c in &self.clauses {
            let mut lits = Vec::with_capacity(c.literals.len());
            for l in &c.literals {
                let v = world
                    .index_of(&l.symbol)
                    .ok_or_else(|| Error::UnboundSymbol(l.symbol.clone()))?;
                lits.push((v, l.negated));
            }
            clauses.push(lits);
        }
        Ok(BoundFormula {
            clauses,
            source: self.clone(),
        })
    }
}

/// A formula whose symbols are vertex indices of a fixed world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundFormula {
    clauses: Vec<Vec<(usize, bool)>>,
    source: Formula,
}

impl BoundFormula {
    /// A formula satisfied by every belief.
    pub fn truth() -> Self {
        BoundFormula {
            clauses: Vec::new(),
            source: Formula {
                clauses: Vec::new(),
            },
        }
    }

    pub fn eval(&self, belief: &VertexSet) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&(v, neg)| belief.contains(&v) != neg))
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }
}

impl fmt::Display for BoundFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            f.write_str("true")
        } else {
            self.source.fmt(f)
        }
    }
}

/// Whether `f` holds of the observer's estimate at I-state set `b`.
pub fn satfd(b: &VertexSet, f: &BoundFormula, engine: &BeliefEngine) -> Result<bool> {
    Ok(f.eval(&engine.estimate(b)?.0))
}
