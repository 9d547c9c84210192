//! CNF probabilistic grammars.

pub mod consistency;

pub use consistency::{check_consistency, expectation_matrix, ConsistencyReport, Verdict};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::logspace::{abs, ln};
use crate::{Error, Result};

/// Tolerance on `Σ_i p(A → α_i) = 1` accepted when a grammar is built.
pub const PROPERNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NonTerminal(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Terminal(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u32);

impl NonTerminal {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Terminal {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RuleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rhs {
    Binary(NonTerminal, NonTerminal),
    Lexical(Terminal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub id: RuleId,
    pub lhs: NonTerminal,
    pub rhs: Rhs,
}

impl Rule {
    /// Number of occurrences of `nt` on the right-hand side.
    pub fn occurrences(&self, nt: NonTerminal) -> usize {
        match self.rhs {
            Rhs::Binary(b, c) => (b == nt) as usize + (c == nt) as usize,
            Rhs::Lexical(_) => 0,
        }
    }
}

/// A proper PCFG in Chomsky Normal Form. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    nt_index: BTreeMap<String, NonTerminal>,
    t_index: BTreeMap<String, Terminal>,
    start: NonTerminal,
    rules: Vec<Rule>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    by_lhs: Vec<Vec<RuleId>>,
    binary_by_lhs: Vec<Vec<RuleId>>,
    lexical_by_terminal: Vec<Vec<RuleId>>,
}

impl Grammar {
    pub fn builder() -> GrammarBuilder {
        GrammarBuilder::default()
    }

    pub fn start(&self) -> NonTerminal {
        self.start
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NonTerminal> + '_ {
        (0..self.nonterminals.len() as u32).map(NonTerminal)
    }

    pub fn terminals(&self) -> impl Iterator<Item = Terminal> + '_ {
        (0..self.terminals.len() as u32).map(Terminal)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.index()]
    }

    pub fn get_rule(&self, id: RuleId) -> Result<&Rule> {
        self.rules
            .get(id.index())
            .ok_or(Error::RuleOutOfRange(id.0))
    }

    pub fn prob(&self, id: RuleId) -> f64 {
        self.probs[id.index()]
    }

    pub fn log_prob(&self, id: RuleId) -> f64 {
        self.log_probs[id.index()]
    }

    /// Rule probabilities indexed by rule id.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// All rules with left-hand side `lhs`, ascending id.
    pub fn rules_of(&self, lhs: NonTerminal) -> &[RuleId] {
        &self.by_lhs[lhs.index()]
    }

    /// Binary rules with left-hand side `lhs`, ascending id.
    pub fn binary_rules_of(&self, lhs: NonTerminal) -> &[RuleId] {
        &self.binary_by_lhs[lhs.index()]
    }

    /// Lexical rules `X → t`, ascending id.
    pub fn lexical_rules_for(&self, t: Terminal) -> &[RuleId] {
        &self.lexical_by_terminal[t.index()]
    }

    pub fn nonterminal_name(&self, nt: NonTerminal) -> &str {
        &self.nonterminals[nt.index()]
    }

    pub fn terminal_name(&self, t: Terminal) -> &str {
        &self.terminals[t.index()]
    }

    pub fn nonterminal(&self, name: &str) -> Option<NonTerminal> {
        self.nt_index.get(name).copied()
    }

    pub fn terminal(&self, name: &str) -> Option<Terminal> {
        self.t_index.get(name).copied()
    }

    /// Look up a binary or lexical rule by its symbols.
    pub fn find_rule(&self, lhs: NonTerminal, rhs: Rhs) -> Option<RuleId> {
        self.rules_of(lhs)
            .iter()
            .copied()
            .find(|&r| self.rule(r).rhs == rhs)
    }

    /// Map a token sequence onto terminal ids.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Terminal>> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        tokens
            .iter()
            .enumerate()
            .map(|(position, tok)| {
                self.terminal(tok.as_ref())
                    .ok_or_else(|| Error::UnknownToken {
                        token: tok.as_ref().to_string(),
                        position,
                    })
            })
            .collect()
    }

    pub fn decode(&self, tokens: &[Terminal]) -> Vec<&str> {
        tokens.iter().map(|&t| self.terminal_name(t)).collect()
    }

    pub(crate) fn check_sentence(&self, tokens: &[Terminal]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        match tokens.iter().find(|t| t.index() >= self.terminals.len()) {
            Some(t) => Err(Error::TerminalOutOfRange(t.0)),
            None => Ok(()),
        }
    }

    /// `A -> B C` / `A -> a`.
    pub fn rule_string(&self, id: RuleId) -> String {
        let rule = self.rule(id);
        let lhs = self.nonterminal_name(rule.lhs);
        match rule.rhs {
            Rhs::Binary(b, c) => format!(
                "{} -> {} {}",
                lhs,
                self.nonterminal_name(b),
                self.nonterminal_name(c)
            ),
            Rhs::Lexical(t) => format!("{} -> {}", lhs, self.terminal_name(t)),
        }
    }

    /// Same symbols and rules, new probabilities (indexed by rule id).
    /// Probabilities are validated and renormalized exactly like at build time.
    pub fn with_probabilities(&self, probs: Vec<f64>) -> Result<Grammar> {
        if probs.len() != self.rules.len() {
            return Err(Error::ProbabilityCount {
                expected: self.rules.len(),
                got: probs.len(),
            });
        }
        let mut g = self.clone();
        g.probs = probs;
        g.finish()?;
        Ok(g)
    }

    fn finish(&mut self) -> Result<()> {
        for (i, &p) in self.probs.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::BadProbability {
                    rule: self.rule_string(RuleId(i as u32)),
                    prob: p,
                });
            }
        }
        for lhs in 0..self.nonterminals.len() {
            let ids = &self.by_lhs[lhs];
            if ids.is_empty() {
                continue;
            }
            let sum: f64 = ids.iter().map(|r| self.probs[r.index()]).sum();
            if abs(sum - 1.0) > PROPERNESS_TOL {
                return Err(Error::Improper {
                    lhs: self.nonterminals[lhs].clone(),
                    sum,
                });
            }
            // Skip when already within rounding of 1 so a second pass is the identity.
            if abs(sum - 1.0) > 4.0 * ids.len() as f64 * f64::EPSILON {
                for r in ids {
                    self.probs[r.index()] /= sum;
                }
            }
        }
        self.log_probs = self.probs.iter().map(|&p| ln(p)).collect();
        Ok(())
    }
}

impl fmt::Display for Grammar {
    /// Grammar-file text: `%start` directive, then one rule per line with the
    /// probability printed in shortest round-trip form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "%start {}", self.nonterminal_name(self.start))?;
        for rule in &self.rules {
            writeln!(
                f,
                "{} {}",
                self.rule_string(rule.id),
                self.probs[rule.id.index()]
            )?;
        }
        Ok(())
    }
}

/// Incremental grammar construction. Symbol classes are fixed by first use.
#[derive(Debug, Default, Clone)]
pub struct GrammarBuilder {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    nt_index: BTreeMap<String, NonTerminal>,
    t_index: BTreeMap<String, Terminal>,
    start: Option<String>,
    rules: Vec<Rule>,
    probs: Vec<f64>,
    seen: BTreeMap<(NonTerminal, Rhs), RuleId>,
}

impl GrammarBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overrides the default start symbol (the first rule's left-hand side).
    pub fn start(&mut self, name: &str) -> &mut Self {
        self.start = Some(name.to_string());
        self
    }

    pub fn nonterminal(&mut self, name: &str) -> Result<NonTerminal> {
        if self.t_index.contains_key(name) {
            return Err(Error::SymbolClash(name.to_string()));
        }
        if let Some(&nt) = self.nt_index.get(name) {
            return Ok(nt);
        }
        let nt = NonTerminal(self.nonterminals.len() as u32);
        self.nonterminals.push(name.to_string());
        self.nt_index.insert(name.to_string(), nt);
        Ok(nt)
    }

    pub fn terminal(&mut self, name: &str) -> Result<Terminal> {
        if self.nt_index.contains_key(name) {
            return Err(Error::SymbolClash(name.to_string()));
        }
        if let Some(&t) = self.t_index.get(name) {
            return Ok(t);
        }
        let t = Terminal(self.terminals.len() as u32);
        self.terminals.push(name.to_string());
        self.t_index.insert(name.to_string(), t);
        Ok(t)
    }

    pub fn binary(&mut self, lhs: &str, left: &str, right: &str, prob: f64) -> Result<RuleId> {
        let a = self.nonterminal(lhs)?;
        let b = self.nonterminal(left)?;
        let c = self.nonterminal(right)?;
        self.push(a, Rhs::Binary(b, c), prob)
    }

    pub fn lexical(&mut self, lhs: &str, terminal: &str, prob: f64) -> Result<RuleId> {
        let a = self.nonterminal(lhs)?;
        let t = self.terminal(terminal)?;
        self.push(a, Rhs::Lexical(t), prob)
    }

    fn push(&mut self, lhs: NonTerminal, rhs: Rhs, prob: f64) -> Result<RuleId> {
        let id = RuleId(self.rules.len() as u32);
        let rule = Rule { id, lhs, rhs };
        if self.seen.contains_key(&(lhs, rhs)) {
            return Err(Error::DuplicateRule(self.describe(&rule)));
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::BadProbability {
                rule: self.describe(&rule),
                prob,
            });
        }
        self.seen.insert((lhs, rhs), id);
        self.rules.push(rule);
        self.probs.push(prob);
        Ok(id)
    }

    fn describe(&self, rule: &Rule) -> String {
        let lhs = &self.nonterminals[rule.lhs.index()];
        match rule.rhs {
            Rhs::Binary(b, c) => format!(
                "{} -> {} {}",
                lhs,
                self.nonterminals[b.index()],
                self.nonterminals[c.index()]
            ),
            Rhs::Lexical(t) => format!("{} -> {}", lhs, self.terminals[t.index()]),
        }
    }

    pub fn build(self) -> Result<Grammar> {
        if self.rules.is_empty() {
            return Err(Error::EmptyGrammar);
        }
        let start = match &self.start {
            Some(name) => *self
                .nt_index
                .get(name.as_str())
                .ok_or_else(|| Error::UnknownNonTerminal(name.clone()))?,
            None => self.rules[0].lhs,
        };
        let n_nt = self.nonterminals.len();
        let mut by_lhs = vec![Vec::new(); n_nt];
        let mut binary_by_lhs = vec![Vec::new(); n_nt];
        let mut lexical_by_terminal = vec![Vec::new(); self.terminals.len()];
        for rule in &self.rules {
            by_lhs[rule.lhs.index()].push(rule.id);
            match rule.rhs {
                Rhs::Binary(..) => binary_by_lhs[rule.lhs.index()].push(rule.id),
                Rhs::Lexical(t) => lexical_by_terminal[t.index()].push(rule.id),
            }
        }
        let mut g = Grammar {
            nonterminals: self.nonterminals,
            terminals: self.terminals,
            nt_index: self.nt_index,
            t_index: self.t_index,
            start,
            rules: self.rules,
            probs: self.probs,
            log_probs: Vec::new(),
            by_lhs,
            binary_by_lhs,
            lexical_by_terminal,
        };
        g.finish()?;
        Ok(g)
    }
}
