//! Left-derivations and their rule statistics.
//!
//! A derivation is stored as its rule sequence in leftmost order, which for a
//! CNF grammar is the pre-order traversal of the parse tree.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use crate::grammar::{Grammar, NonTerminal, Rhs, RuleId, Terminal};
use crate::{Bracketing, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    rules: Vec<RuleId>,
    sentence_len: usize,
    log_prob: f64,
}

/// One constituent of a derivation: span `[start, end)` rewritten by `rule`,
/// with `split` the boundary between its children (0 for lexical rules).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub start: usize,
    pub end: usize,
    pub split: usize,
    pub rule: RuleId,
}

/// `N(A → α, d)` and `N(A, d)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleCounts {
    pub per_rule: BTreeMap<RuleId, u32>,
    pub per_nonterminal: BTreeMap<NonTerminal, u32>,
}

impl RuleCounts {
    pub fn rule(&self, id: RuleId) -> u32 {
        self.per_rule.get(&id).copied().unwrap_or(0)
    }

    pub fn nonterminal(&self, nt: NonTerminal) -> u32 {
        self.per_nonterminal.get(&nt).copied().unwrap_or(0)
    }
}

/// `Σ_r N_r · ln p_r` over `(rule, count)` pairs sorted by rule id.
///
/// Every log-probability of a derivation in this crate goes through here, so
/// derivations with equal rule counts get bit-identical scores and ties are
/// exact.
pub(crate) fn sparse_log_prob(g: &Grammar, counts: &[(u32, u32)]) -> f64 {
    counts
        .iter()
        .fold(0.0, |acc, &(r, n)| acc + n as f64 * g.log_prob(RuleId(r)))
}

/// Merge two sorted sparse count vectors and add one use of `extra`.
pub(crate) fn merge_counts(
    left: &[(u32, u32)],
    right: &[(u32, u32)],
    extra: u32,
) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(left.len() + right.len() + 1);
    let (mut i, mut j) = (0, 0);
    let mut pending = Some(extra);
    loop {
        let next_l = left.get(i).map(|x| x.0);
        let next_r = right.get(j).map(|x| x.0);
        let candidates = [next_l, next_r, pending];
        let Some(r) = candidates.iter().flatten().copied().min() else {
            break;
        };
        let mut n = 0;
        if next_l == Some(r) {
            n += left[i].1;
            i += 1;
        }
        if next_r == Some(r) {
            n += right[j].1;
            j += 1;
        }
        if pending == Some(r) {
            n += 1;
            pending = None;
        }
        out.push((r, n));
    }
    out
}

fn sorted_counts(rules: &[RuleId]) -> Vec<(u32, u32)> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    for r in rules {
        *map.entry(r.0).or_default() += 1;
    }
    map.into_iter().collect()
}

impl Derivation {
    /// Validate `rules` as a leftmost derivation from the start symbol.
    pub fn new(g: &Grammar, rules: Vec<RuleId>) -> Result<Self> {
        let mut pending: Vec<NonTerminal> = alloc::vec![g.start()];
        let mut len = 0;
        for &id in &rules {
            let rule = g.get_rule(id)?;
            let expected = pending.pop().ok_or(Error::InvalidDerivation(
                "rules left after the derivation completed",
            ))?;
            if rule.lhs != expected {
                return Err(Error::InvalidDerivation(
                    "rule does not rewrite the leftmost nonterminal",
                ));
            }
            match rule.rhs {
                Rhs::Binary(b, c) => {
                    pending.push(c);
                    pending.push(b);
                }
                Rhs::Lexical(_) => len += 1,
            }
        }
        if !pending.is_empty() {
            return Err(Error::InvalidDerivation("nonterminals left unexpanded"));
        }
        let log_prob = sparse_log_prob(g, &sorted_counts(&rules));
        Ok(Self {
            rules,
            sentence_len: len,
            log_prob,
        })
    }

    pub(crate) fn from_parts(rules: Vec<RuleId>, sentence_len: usize, log_prob: f64) -> Self {
        Self {
            rules,
            sentence_len,
            log_prob,
        }
    }

    pub fn rules(&self) -> &[RuleId] {
        &self.rules
    }

    pub fn sentence_len(&self) -> usize {
        self.sentence_len
    }

    /// `ln P(x, d)` under the grammar the derivation was built with.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    /// Constituents in pre-order.
    pub fn nodes(&self, g: &Grammar) -> Vec<Node> {
        fn walk(
            g: &Grammar,
            rules: &[RuleId],
            pos: &mut usize,
            start: usize,
            out: &mut Vec<Node>,
        ) -> usize {
            let rule = rules[*pos];
            *pos += 1;
            let slot = out.len();
            out.push(Node {
                start,
                end: start + 1,
                split: 0,
                rule,
            });
            if let Rhs::Binary(..) = g.rule(rule).rhs {
                let split = walk(g, rules, pos, start, out);
                let end = walk(g, rules, pos, split, out);
                out[slot].split = split;
                out[slot].end = end;
            }
            out[slot].end
        }
        let mut out = Vec::with_capacity(self.rules.len());
        let mut pos = 0;
        walk(g, &self.rules, &mut pos, 0, &mut out);
        out
    }

    /// Pre-order `(split, rule)` pairs. Lexicographic order on this key is the
    /// deterministic tie-break among equally probable derivations.
    pub fn order_key(&self, g: &Grammar) -> Vec<(u32, u32)> {
        self.nodes(g)
            .iter()
            .map(|n| (n.split as u32, n.rule.0))
            .collect()
    }

    pub fn yield_terminals(&self, g: &Grammar) -> Vec<Terminal> {
        self.rules
            .iter()
            .filter_map(|&r| match g.rule(r).rhs {
                Rhs::Lexical(t) => Some(t),
                Rhs::Binary(..) => None,
            })
            .collect()
    }

    pub fn is_derivation_of(&self, g: &Grammar, tokens: &[Terminal]) -> bool {
        self.yield_terminals(g) == tokens
    }

    /// True if no constituent span crosses a bracket.
    pub fn compatible_with(&self, g: &Grammar, brackets: &Bracketing) -> bool {
        brackets.is_empty()
            || self
                .nodes(g)
                .iter()
                .all(|n| brackets.compatible(n.start, n.end))
    }

    /// Parenthesized tree with rule ids, e.g. `(S:0 (S:1 a) (S:1 a))`.
    pub fn to_bracketed(&self, g: &Grammar) -> String {
        fn walk(g: &Grammar, rules: &[RuleId], pos: &mut usize, out: &mut String) {
            let id = rules[*pos];
            *pos += 1;
            let rule = g.rule(id);
            let _ = write!(out, "({}:{} ", g.nonterminal_name(rule.lhs), id.0);
            match rule.rhs {
                Rhs::Lexical(t) => out.push_str(g.terminal_name(t)),
                Rhs::Binary(..) => {
                    walk(g, rules, pos, out);
                    out.push(' ');
                    walk(g, rules, pos, out);
                }
            }
            out.push(')');
        }
        let mut out = String::new();
        let mut pos = 0;
        walk(g, &self.rules, &mut pos, &mut out);
        out
    }
}

/// Ranking used by Viterbi and n-best: higher probability first, then the
/// lexicographically smaller [`Derivation::order_key`].
pub fn rank_order(g: &Grammar, a: &Derivation, b: &Derivation) -> Ordering {
    b.log_prob
        .total_cmp(&a.log_prob)
        .then_with(|| a.order_key(g).cmp(&b.order_key(g)))
}

/// `ln P(x, d) = Σ N(A → α, d) · ln p(A → α)` under `g`.
pub fn derivation_probability(g: &Grammar, d: &Derivation) -> Result<f64> {
    if let Some(r) = d.rules.iter().find(|r| r.index() >= g.num_rules()) {
        return Err(Error::RuleOutOfRange(r.0));
    }
    Ok(sparse_log_prob(g, &sorted_counts(&d.rules)))
}

pub fn rule_counts(g: &Grammar, d: &Derivation) -> RuleCounts {
    let mut counts = RuleCounts::default();
    for &r in &d.rules {
        *counts.per_rule.entry(r).or_default() += 1;
        *counts.per_nonterminal.entry(g.rule(r).lhs).or_default() += 1;
    }
    counts
}
