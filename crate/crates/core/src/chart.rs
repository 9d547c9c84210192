//! Span charts over CNF grammars: Inside, Outside-based expected counts,
//! derivation counting and Viterbi.
//!
//! Spans are half-open `[i, j)`. Every routine takes an optional
//! [`Bracketing`]; a chart span that crosses a bracket holds no mass, so the
//! constrained charts range over exactly the bracket-compatible derivations.

use alloc::vec;
use alloc::vec::Vec;

use crate::derivation::{merge_counts, sparse_log_prob};
use crate::grammar::{Grammar, NonTerminal, Rhs, RuleId, Terminal};
use crate::logspace::{exp, log_add, log_sum_exp, LOG_ZERO};
use crate::{Bracketing, Derivation, Result};

/// Flat `(i, j, A)` addressing shared by all charts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    pub n: usize,
    pub nt: usize,
}

impl Geometry {
    pub fn new(n: usize, nt: usize) -> Self {
        Self { n, nt }
    }

    pub fn cells(&self) -> usize {
        (self.n + 1) * (self.n + 1) * self.nt
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, a: usize) -> usize {
        (i * (self.n + 1) + j) * self.nt + a
    }
}

/// `allowed[i * (n + 1) + j]` for every span.
pub(crate) fn allowed_spans(n: usize, brackets: Option<&Bracketing>) -> Vec<bool> {
    let mut allowed = vec![true; (n + 1) * (n + 1)];
    if let Some(b) = brackets.filter(|b| !b.is_empty()) {
        for i in 0..n {
            for j in i + 1..=n {
                allowed[i * (n + 1) + j] = b.compatible(i, j);
            }
        }
    }
    allowed
}

pub(crate) fn validate(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
) -> Result<()> {
    g.check_sentence(tokens)?;
    if let Some(b) = brackets {
        b.check_len(tokens.len())?;
    }
    Ok(())
}

/// Log inside masses `ln β(i, j, A)`.
#[derive(Debug, Clone)]
pub struct InsideChart {
    geo: Geometry,
    table: Vec<f64>,
    sentence: Vec<Terminal>,
    start: NonTerminal,
}

impl InsideChart {
    pub fn get(&self, i: usize, j: usize, a: NonTerminal) -> f64 {
        self.table[self.geo.at(i, j, a.index())]
    }

    pub fn sentence(&self) -> &[Terminal] {
        &self.sentence
    }

    /// `ln P(x)` (or the bracket-restricted mass), `None` if the sentence is
    /// not in the language.
    pub fn log_total(&self) -> Option<f64> {
        let v = self.get(0, self.geo.n, self.start);
        (v != LOG_ZERO).then_some(v)
    }
}

/// Inside pass with arbitrary per-rule log weights (`η · ln p` for scaled masses).
pub(crate) fn inside_weighted(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
    weights: &[f64],
) -> InsideChart {
    let n = tokens.len();
    let geo = Geometry::new(n, g.num_nonterminals());
    let allowed = allowed_spans(n, brackets);
    let mut table = vec![LOG_ZERO; geo.cells()];

    for (i, &t) in tokens.iter().enumerate() {
        for &r in g.lexical_rules_for(t) {
            let cell = &mut table[geo.at(i, i + 1, g.rule(r).lhs.index())];
            *cell = log_add(*cell, weights[r.index()]);
        }
    }

    let mut terms = Vec::new();
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            if !allowed[i * (n + 1) + j] {
                continue;
            }
            for a in g.nonterminals() {
                terms.clear();
                for &r in g.binary_rules_of(a) {
                    let Rhs::Binary(b, c) = g.rule(r).rhs else {
                        unreachable!()
                    };
                    for k in i + 1..j {
                        let left = table[geo.at(i, k, b.index())];
                        let right = table[geo.at(k, j, c.index())];
                        if left != LOG_ZERO && right != LOG_ZERO {
                            terms.push(weights[r.index()] + left + right);
                        }
                    }
                }
                table[geo.at(i, j, a.index())] = log_sum_exp(&terms);
            }
        }
    }

    InsideChart {
        geo,
        table,
        sentence: tokens.to_vec(),
        start: g.start(),
    }
}

/// Inside probabilities. An empty bracketing gives the unconstrained chart.
pub fn inside(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
) -> Result<InsideChart> {
    validate(g, tokens, brackets)?;
    Ok(inside_weighted(g, tokens, brackets, g.log_probs()))
}

/// Posterior-weighted statistics over all (bracket-compatible) derivations:
/// `Σ_d N(·, d) w(d) / Σ_d w(d)` with `w(d) = P(x, d)^η`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    /// `ln Σ_d P(x, d)^η`.
    pub log_mass: f64,
    /// Indexed by rule id.
    pub rules: Vec<f64>,
    /// Indexed by nonterminal, computed from span posteriors independently of `rules`.
    pub nonterminals: Vec<f64>,
}

pub fn expected_counts(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
    eta: f64,
) -> Result<Option<ExpectedCounts>> {
    validate(g, tokens, brackets)?;
    let weights: Vec<f64> = g.log_probs().iter().map(|&w| eta * w).collect();
    let ins = inside_weighted(g, tokens, brackets, &weights);
    let Some(z) = ins.log_total() else {
        return Ok(None);
    };
    let n = tokens.len();
    let geo = ins.geo;
    let inside = &ins.table;

    let mut outside = vec![LOG_ZERO; geo.cells()];
    outside[geo.at(0, n, g.start().index())] = 0.0;
    let mut rules = vec![0.0; g.num_rules()];
    let mut nonterminals = vec![0.0; g.num_nonterminals()];

    for len in (1..=n).rev() {
        for i in 0..=n - len {
            let j = i + len;
            for a in g.nonterminals() {
                let out = outside[geo.at(i, j, a.index())];
                let ins_a = inside[geo.at(i, j, a.index())];
                if out == LOG_ZERO || ins_a == LOG_ZERO {
                    continue;
                }
                nonterminals[a.index()] += exp(out + ins_a - z);
                if len == 1 {
                    for &r in g.rules_of(a) {
                        if g.rule(r).rhs == Rhs::Lexical(tokens[i]) {
                            rules[r.index()] += exp(out + weights[r.index()] - z);
                        }
                    }
                    continue;
                }
                for &r in g.binary_rules_of(a) {
                    let Rhs::Binary(b, c) = g.rule(r).rhs else {
                        unreachable!()
                    };
                    let w = weights[r.index()];
                    for k in i + 1..j {
                        let left = inside[geo.at(i, k, b.index())];
                        let right = inside[geo.at(k, j, c.index())];
                        if left == LOG_ZERO || right == LOG_ZERO {
                            continue;
                        }
                        rules[r.index()] += exp(out + w + left + right - z);
                        let lo = &mut outside[geo.at(i, k, b.index())];
                        *lo = log_add(*lo, out + w + right);
                        let ro = &mut outside[geo.at(k, j, c.index())];
                        *ro = log_add(*ro, out + w + left);
                    }
                }
            }
        }
    }

    Ok(Some(ExpectedCounts {
        log_mass: z,
        rules,
        nonterminals,
    }))
}

/// `|D_x|` (or the number of bracket-compatible derivations) as a float.
pub fn count_derivations(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
) -> Result<f64> {
    validate(g, tokens, brackets)?;
    let n = tokens.len();
    let geo = Geometry::new(n, g.num_nonterminals());
    let allowed = allowed_spans(n, brackets);
    let mut table = vec![0.0f64; geo.cells()];
    for (i, &t) in tokens.iter().enumerate() {
        for &r in g.lexical_rules_for(t) {
            table[geo.at(i, i + 1, g.rule(r).lhs.index())] += 1.0;
        }
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            if !allowed[i * (n + 1) + j] {
                continue;
            }
            for a in g.nonterminals() {
                let mut total = 0.0;
                for &r in g.binary_rules_of(a) {
                    let Rhs::Binary(b, c) = g.rule(r).rhs else {
                        unreachable!()
                    };
                    for k in i + 1..j {
                        total += table[geo.at(i, k, b.index())] * table[geo.at(k, j, c.index())];
                    }
                }
                table[geo.at(i, j, a.index())] = total;
            }
        }
    }
    Ok(table[geo.at(0, n, g.start().index())])
}

#[derive(Debug, Clone)]
struct Best {
    score: f64,
    counts: Vec<(u32, u32)>,
    split: usize,
    rule: RuleId,
}

/// Most probable derivation. Among equally probable candidates in a cell the
/// back-pointer with the smallest `(split, rule id)` wins, which makes the
/// result the first derivation under [`crate::derivation::rank_order`].
/// Returns `None` if the sentence has no (compatible) derivation.
pub fn viterbi(
    g: &Grammar,
    tokens: &[Terminal],
    brackets: Option<&Bracketing>,
) -> Result<Option<Derivation>> {
    validate(g, tokens, brackets)?;
    let n = tokens.len();
    let geo = Geometry::new(n, g.num_nonterminals());
    let allowed = allowed_spans(n, brackets);
    let mut chart: Vec<Option<Best>> = vec![None; geo.cells()];

    for (i, &t) in tokens.iter().enumerate() {
        for &r in g.lexical_rules_for(t) {
            let counts = vec![(r.0, 1)];
            let score = sparse_log_prob(g, &counts);
            chart[geo.at(i, i + 1, g.rule(r).lhs.index())] = Some(Best {
                score,
                counts,
                split: 0,
                rule: r,
            });
        }
    }

    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            if !allowed[i * (n + 1) + j] {
                continue;
            }
            for a in g.nonterminals() {
                let mut best: Option<Best> = None;
                for k in i + 1..j {
                    for &r in g.binary_rules_of(a) {
                        let Rhs::Binary(b, c) = g.rule(r).rhs else {
                            unreachable!()
                        };
                        let (Some(left), Some(right)) = (
                            &chart[geo.at(i, k, b.index())],
                            &chart[geo.at(k, j, c.index())],
                        ) else {
                            continue;
                        };
                        let counts = merge_counts(&left.counts, &right.counts, r.0);
                        let score = sparse_log_prob(g, &counts);
                        if best.as_ref().is_none_or(|cur| score > cur.score) {
                            best = Some(Best {
                                score,
                                counts,
                                split: k,
                                rule: r,
                            });
                        }
                    }
                }
                chart[geo.at(i, j, a.index())] = best;
            }
        }
    }

    let Some(root) = &chart[geo.at(0, n, g.start().index())] else {
        return Ok(None);
    };
    let mut rules = Vec::with_capacity(2 * n - 1);
    let mut stack = vec![(0usize, n, g.start())];
    while let Some((i, j, a)) = stack.pop() {
        let cell = chart[geo.at(i, j, a.index())]
            .as_ref()
            .expect("back-pointer to empty cell");
        rules.push(cell.rule);
        if let Rhs::Binary(b, c) = g.rule(cell.rule).rhs {
            stack.push((cell.split, j, c));
            stack.push((i, cell.split, b));
        }
    }
    Ok(Some(Derivation::from_parts(rules, n, root.score)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::derivation_probability;
    use crate::grammar::tests::toy;
    use crate::logspace::ln;
    use crate::Error;

    fn a(n: usize) -> Vec<Terminal> {
        vec![Terminal(0); n]
    }

    #[test]
    fn inside_on_toy_grammar() {
        let g = toy(0.5);
        let c = inside(&g, &a(4), None).unwrap();
        assert!((c.log_total().unwrap() - ln(5.0 / 128.0)).abs() < 1e-14);
        let c = inside(&g, &a(2), None).unwrap();
        assert!((c.log_total().unwrap() - ln(1.0 / 8.0)).abs() < 1e-14);
    }

    #[test]
    fn bracketed_inside_keeps_compatible_mass() {
        let g = toy(0.5);
        let b = Bracketing::new(4, [(0, 2)]).unwrap();
        let c = inside(&g, &a(4), Some(&b)).unwrap();
        assert!((c.log_total().unwrap() - ln(2.0 / 128.0)).abs() < 1e-14);
        assert_eq!(count_derivations(&g, &a(4), Some(&b)).unwrap(), 2.0);
    }

    #[test]
    fn empty_bracketing_is_bitwise_unconstrained() {
        let g = toy(0.3);
        let free = inside(&g, &a(5), None).unwrap();
        let con = inside(&g, &a(5), Some(&Bracketing::empty(5))).unwrap();
        assert_eq!(free.table, con.table);
    }

    #[test]
    fn not_in_language_is_not_an_error() {
        let mut b = Grammar::builder();
        b.binary("S", "A", "B", 1.0).unwrap();
        b.lexical("A", "a", 1.0).unwrap();
        b.lexical("B", "b", 1.0).unwrap();
        let g = b.build().unwrap();
        let x = g.encode(&["b", "a"]).unwrap();
        assert_eq!(inside(&g, &x, None).unwrap().log_total(), None);
        assert_eq!(viterbi(&g, &x, None).unwrap(), None);
        assert_eq!(expected_counts(&g, &x, None, 1.0).unwrap(), None);
        assert_eq!(
            inside(&g, &[Terminal(7)], None).unwrap_err(),
            Error::TerminalOutOfRange(7)
        );
        assert_eq!(inside(&g, &[], None).unwrap_err(), Error::EmptySentence);
    }

    #[test]
    fn viterbi_on_toy_grammar() {
        let q = 0.3;
        let g = toy(q);
        let d = viterbi(&g, &a(2), None).unwrap().unwrap();
        assert_eq!(d.rules(), &[RuleId(0), RuleId(1), RuleId(1)]);
        assert!((d.log_prob() - ln(q * (1.0 - q) * (1.0 - q))).abs() < 1e-14);

        let g = toy(0.5);
        let d = viterbi(&g, &a(4), None).unwrap().unwrap();
        assert!((d.log_prob() - ln(1.0 / 128.0)).abs() < 1e-14);
        assert_eq!(d.log_prob(), derivation_probability(&g, &d).unwrap());
        // all five tie; the smallest root split (1) wins, then recursively split 2.. : a (a (a a))
        assert_eq!(
            d.to_bracketed(&g),
            "(S:0 (S:1 a) (S:0 (S:1 a) (S:0 (S:1 a) (S:1 a))))"
        );
    }

    #[test]
    fn expected_counts_on_toy_grammar() {
        let g = toy(0.5);
        let e = expected_counts(&g, &a(4), None, 1.0).unwrap().unwrap();
        assert!((e.rules[0] - 3.0).abs() < 1e-12);
        assert!((e.rules[1] - 4.0).abs() < 1e-12);
        assert!((e.nonterminals[0] - 7.0).abs() < 1e-12);
        assert_eq!(count_derivations(&g, &a(4), None).unwrap(), 5.0);
    }

    #[test]
    fn full_binary_bracketing_pins_the_tree() {
        let g = toy(0.5);
        let b = Bracketing::new(4, [(0, 4), (0, 2), (2, 4)]).unwrap();
        assert_eq!(count_derivations(&g, &a(4), Some(&b)).unwrap(), 1.0);
        let d = viterbi(&g, &a(4), Some(&b)).unwrap().unwrap();
        assert_eq!(
            d.to_bracketed(&g),
            "(S:0 (S:0 (S:1 a) (S:1 a)) (S:0 (S:1 a) (S:1 a)))"
        );
        assert!(matches!(
            inside(&g, &a(3), Some(&b)),
            Err(Error::BracketLength { .. })
        ));
    }
}
