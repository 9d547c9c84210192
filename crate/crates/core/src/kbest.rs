//! Exact n-best derivations with per-cell k-best lists (eager merge).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::chart::{allowed_spans, validate, Geometry};
use crate::derivation::{merge_counts, sparse_log_prob};
use crate::grammar::{Grammar, NonTerminal, Rhs, RuleId, Terminal};
use crate::{Bracketing, Derivation, Error, Result};

/// The `n` best derivations, descending probability, ties broken by the
/// smaller pre-order `(split, rule)` key. Shorter than `n` only when the
/// sentence has fewer derivations; empty when it has none.
#[derive(Debug, Clone, PartialEq)]
pub struct KBestList {
    pub derivations: Vec<Derivation>,
    pub n_requested: usize,
}

impl KBestList {
    pub fn len(&self) -> usize {
        self.derivations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivations.is_empty()
    }

    pub fn not_in_language(&self) -> bool {
        self.derivations.is_empty()
    }

    pub fn best(&self) -> Option<&Derivation> {
        self.derivations.first()
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    score: f64,
    counts: Vec<(u32, u32)>,
    split: u32,
    rule: RuleId,
    left: u32,
    right: u32,
}

struct Chart<'g> {
    g: &'g Grammar,
    geo: Geometry,
    cells: Vec<Vec<Hyp>>,
}

impl Chart<'_> {
    fn cell(&self, i: usize, j: usize, a: NonTerminal) -> &[Hyp] {
        &self.cells[self.geo.at(i, j, a.index())]
    }

    /// Order-key comparison of two entries of the same cell.
    fn cmp_key(&self, i: usize, j: usize, a: NonTerminal, x: u32, y: u32) -> Ordering {
        if x == y {
            return Ordering::Equal;
        }
        let cell = self.cell(i, j, a);
        self.cmp_hyp(i, j, &cell[x as usize], &cell[y as usize])
    }

    /// Order-key comparison of two hypotheses for the same `(i, j, A)`.
    fn cmp_hyp(&self, i: usize, j: usize, x: &Hyp, y: &Hyp) -> Ordering {
        (x.split, x.rule)
            .cmp(&(y.split, y.rule))
            .then_with(|| match self.g.rule(x.rule).rhs {
                Rhs::Lexical(_) => Ordering::Equal,
                Rhs::Binary(b, c) => {
                    let k = x.split as usize;
                    self.cmp_key(i, k, b, x.left, y.left)
                        .then_with(|| self.cmp_key(k, j, c, x.right, y.right))
                }
            })
    }

    fn rank(&self, i: usize, j: usize, x: &Hyp, y: &Hyp) -> Ordering {
        y.score
            .total_cmp(&x.score)
            .then_with(|| self.cmp_hyp(i, j, x, y))
    }

    fn collect(&self, i: usize, j: usize, a: NonTerminal, rank: u32, out: &mut Vec<RuleId>) {
        let h = &self.cell(i, j, a)[rank as usize];
        out.push(h.rule);
        if let Rhs::Binary(b, c) = self.g.rule(h.rule).rhs {
            let k = h.split as usize;
            self.collect(i, k, b, h.left, out);
            self.collect(k, j, c, h.right, out);
        }
    }
}

pub fn nbest(
    g: &Grammar,
    tokens: &[Terminal],
    n: usize,
    brackets: Option<&Bracketing>,
) -> Result<KBestList> {
    if n == 0 {
        return Err(Error::ZeroN);
    }
    validate(g, tokens, brackets)?;
    let len = tokens.len();
    let geo = Geometry::new(len, g.num_nonterminals());
    let allowed = allowed_spans(len, brackets);
    let mut chart = Chart {
        g,
        geo,
        cells: vec![Vec::new(); geo.cells()],
    };

    for (i, &t) in tokens.iter().enumerate() {
        for &r in g.lexical_rules_for(t) {
            let counts = vec![(r.0, 1)];
            let score = sparse_log_prob(g, &counts);
            chart.cells[geo.at(i, i + 1, g.rule(r).lhs.index())].push(Hyp {
                score,
                counts,
                split: 0,
                rule: r,
                left: 0,
                right: 0,
            });
        }
    }

    let mut candidates: Vec<Hyp> = Vec::new();
    for span in 2..=len {
        for i in 0..=len - span {
            let j = i + span;
            if !allowed[i * (len + 1) + j] {
                continue;
            }
            for a in g.nonterminals() {
                candidates.clear();
                for k in i + 1..j {
                    for &r in g.binary_rules_of(a) {
                        let Rhs::Binary(b, c) = g.rule(r).rhs else {
                            unreachable!()
                        };
                        let left = chart.cell(i, k, b);
                        let right = chart.cell(k, j, c);
                        // (x, y) is dominated by the (x+1)(y+1) - 1 pairs above-left of it.
                        for (x, lh) in left.iter().enumerate() {
                            if x + 1 > n {
                                break;
                            }
                            for (y, rh) in right.iter().enumerate() {
                                if (x + 1) * (y + 1) > n {
                                    break;
                                }
                                let counts = merge_counts(&lh.counts, &rh.counts, r.0);
                                let score = sparse_log_prob(g, &counts);
                                candidates.push(Hyp {
                                    score,
                                    counts,
                                    split: k as u32,
                                    rule: r,
                                    left: x as u32,
                                    right: y as u32,
                                });
                            }
                        }
                    }
                }
                candidates.sort_by(|x, y| chart.rank(i, j, x, y));
                candidates.truncate(n);
                chart.cells[geo.at(i, j, a.index())] = core::mem::take(&mut candidates);
            }
        }
    }

    let root = chart.cell(0, len, g.start());
    let derivations = (0..root.len() as u32)
        .map(|rank| {
            let mut rules = Vec::with_capacity(2 * len - 1);
            chart.collect(0, len, g.start(), rank, &mut rules);
            Derivation::from_parts(rules, len, root[rank as usize].score)
        })
        .collect();
    Ok(KBestList {
        derivations,
        n_requested: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::viterbi;
    use crate::derivation::rank_order;
    use crate::grammar::tests::toy;
    use crate::logspace::ln;

    fn a(n: usize) -> Vec<Terminal> {
        vec![Terminal(0); n]
    }

    #[test]
    fn five_derivations_of_aaaa() {
        let g = toy(0.5);
        let list = nbest(&g, &a(4), 5, None).unwrap();
        assert_eq!(list.len(), 5);
        for d in &list.derivations {
            assert!((d.log_prob() - ln(1.0 / 128.0)).abs() < 1e-14);
            assert!(d.is_derivation_of(&g, &a(4)));
        }
        for w in list.derivations.windows(2) {
            assert_eq!(rank_order(&g, &w[0], &w[1]), Ordering::Less);
        }
        let more = nbest(&g, &a(4), 50, None).unwrap();
        assert_eq!(more.derivations, list.derivations);
    }

    #[test]
    fn fewer_derivations_than_requested() {
        let g = toy(0.4);
        let list = nbest(&g, &a(2), 3, None).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.n_requested, 3);
    }

    #[test]
    fn n_one_is_viterbi() {
        for q in [0.2, 0.5, 0.7] {
            let g = toy(q);
            for len in 1..7 {
                let best = nbest(&g, &a(len), 1, None).unwrap();
                assert_eq!(
                    best.derivations,
                    vec![viterbi(&g, &a(len), None).unwrap().unwrap()]
                );
            }
        }
    }

    #[test]
    fn zero_n_is_rejected() {
        assert_eq!(nbest(&toy(0.5), &a(2), 0, None), Err(Error::ZeroN));
    }

    #[test]
    fn bracketed_nbest() {
        let g = toy(0.5);
        let b = Bracketing::new(4, [(0, 2)]).unwrap();
        let list = nbest(&g, &a(4), 10, Some(&b)).unwrap();
        assert_eq!(list.len(), 2);
        assert!(list.derivations.iter().all(|d| d.compatible_with(&g, &b)));
    }
}
