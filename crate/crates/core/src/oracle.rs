//! Brute-force reference implementations for small inputs: exhaustive
//! derivation enumeration and literal evaluation of the D-accumulators.
//!
//! Nothing here shares code with the chart algorithms beyond the grammar
//! itself, the canonical derivation score and the ranking order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::derivation::{derivation_probability, rank_order, rule_counts};
use crate::estimator::{Accumulators, CompMode, DeltaSpec, RefMode};
use crate::grammar::{Grammar, NonTerminal, Rhs, RuleId, Terminal};
use crate::logspace::{exp, log_sum_exp};
use crate::{Bracketing, Derivation, Error, Result, Sample};

pub const DEFAULT_CAP: usize = 10;
pub const MAX_DERIVATIONS: usize = 1_000_000;

/// Every derivation of a sentence, in ranking order.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub derivations: Vec<Derivation>,
    /// `ln Σ_d P(x, d)`; `-inf` if there are none.
    pub total_log_prob: f64,
}

impl Enumeration {
    /// Derivations whose spans cross no bracket, in ranking order.
    pub fn compatible(&self, g: &Grammar, brackets: &Bracketing) -> Vec<Derivation> {
        self.derivations
            .iter()
            .filter(|d| d.compatible_with(g, brackets))
            .cloned()
            .collect()
    }
}

struct Enumerator<'a> {
    g: &'a Grammar,
    tokens: &'a [Terminal],
    memo: BTreeMap<(usize, usize, NonTerminal), Vec<Vec<RuleId>>>,
}

impl Enumerator<'_> {
    /// Pre-order rule sequences of all subtrees rooted at `a` spanning `[i, j)`.
    fn expand(&mut self, i: usize, j: usize, a: NonTerminal) -> Result<Vec<Vec<RuleId>>> {
        if let Some(v) = self.memo.get(&(i, j, a)) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        for &r in self.g.rules_of(a) {
            match self.g.rule(r).rhs {
                Rhs::Lexical(t) => {
                    if j == i + 1 && self.tokens[i] == t {
                        out.push(alloc::vec![r]);
                    }
                }
                Rhs::Binary(b, c) => {
                    for k in i + 1..j {
                        let lefts = self.expand(i, k, b)?;
                        if lefts.is_empty() {
                            continue;
                        }
                        let rights = self.expand(k, j, c)?;
                        for l in &lefts {
                            for rt in &rights {
                                let mut seq = Vec::with_capacity(1 + l.len() + rt.len());
                                seq.push(r);
                                seq.extend_from_slice(l);
                                seq.extend_from_slice(rt);
                                out.push(seq);
                                if out.len() > MAX_DERIVATIONS {
                                    return Err(Error::TooManyDerivations(MAX_DERIVATIONS));
                                }
                            }
                        }
                    }
                }
            }
        }
        self.memo.insert((i, j, a), out.clone());
        Ok(out)
    }
}

/// All derivations of `tokens`, each exactly once, sorted by
/// [`rank_order`](crate::derivation::rank_order).
pub fn enumerate_derivations(g: &Grammar, tokens: &[Terminal], cap: usize) -> Result<Enumeration> {
    if tokens.len() > cap {
        return Err(Error::CapExceeded {
            len: tokens.len(),
            cap,
        });
    }
    g.check_sentence(tokens)?;
    let mut e = Enumerator {
        g,
        tokens,
        memo: BTreeMap::new(),
    };
    let seqs = e.expand(0, tokens.len(), g.start())?;
    let mut derivations = seqs
        .into_iter()
        .map(|rules| {
            let d = Derivation::from_parts(rules, tokens.len(), 0.0);
            let lp = derivation_probability(g, &d)?;
            Ok(Derivation::from_parts(d.rules().to_vec(), tokens.len(), lp))
        })
        .collect::<Result<Vec<_>>>()?;
    derivations.sort_by(|a, b| rank_order(g, a, b));
    let logs: Vec<f64> = derivations.iter().map(|d| d.log_prob()).collect();
    Ok(Enumeration {
        derivations,
        total_log_prob: log_sum_exp(&logs),
    })
}

/// D-accumulators by literal summation over enumerated sets.
pub fn oracle_accumulate(
    g: &Grammar,
    samples: &[Sample],
    spec: &DeltaSpec,
    eta: f64,
) -> Result<Accumulators> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut acc = Accumulators::zeros(g);
    for (index, sample) in samples.iter().enumerate() {
        let all = enumerate_derivations(g, &sample.tokens, DEFAULT_CAP)?;
        let brackets = || {
            sample
                .brackets
                .as_ref()
                .ok_or(Error::MissingBrackets(index))
        };
        let reference: Vec<Derivation> = match spec.reference {
            RefMode::Viterbi => all.derivations.iter().take(1).cloned().collect(),
            RefMode::NBest(n) => all.derivations.iter().take(n).cloned().collect(),
            RefMode::BracketedViterbi => {
                all.compatible(g, brackets()?).into_iter().take(1).collect()
            }
        };
        let mut competing: Vec<Derivation> = match spec.competing {
            CompMode::All => all.derivations.clone(),
            CompMode::NBest(n) => all.derivations.iter().take(n).cloned().collect(),
            CompMode::BracketedAll => all.compatible(g, brackets()?),
        };
        if reference.is_empty() || competing.is_empty() {
            acc.skipped += 1;
            continue;
        }
        if spec.enforce_subset {
            for d in &reference {
                if !competing.iter().any(|c| c.rules() == d.rules()) {
                    competing.push(d.clone());
                }
            }
        }
        literal_sums(g, &reference, eta, &mut acc.d_rule_ref, &mut acc.d_nt_ref);
        literal_sums(g, &competing, eta, &mut acc.d_rule_comp, &mut acc.d_nt_comp);
        acc.used += 1;
    }
    if acc.used == 0 {
        return Err(Error::AllSkipped);
    }
    Ok(acc)
}

/// `Σ_d N(·, d) P(x,d)^η / Σ_d P(x,d)^η`, scaled by the largest term.
fn literal_sums(g: &Grammar, set: &[Derivation], eta: f64, rules: &mut [f64], nts: &mut [f64]) {
    let scaled: Vec<f64> = set.iter().map(|d| eta * d.log_prob()).collect();
    let top = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|s| exp(s - top)).collect();
    let norm: f64 = weights.iter().sum();
    for (d, w) in set.iter().zip(&weights) {
        let counts = rule_counts(g, d);
        for (r, n) in &counts.per_rule {
            rules[r.index()] += *n as f64 * w / norm;
        }
        for (a, n) in &counts.per_nonterminal {
            nts[a.index()] += *n as f64 * w / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::toy;
    use crate::logspace::ln;
    use alloc::vec;

    fn catalan(n: u64) -> u64 {
        (0..n).fold(1, |c, k| c * 2 * (2 * k + 1) / (k + 2))
    }

    #[test]
    fn toy_counts_are_catalan() {
        let g = toy(0.5);
        assert_eq!(catalan(3), 5);
        for n in 1..=8 {
            let e = enumerate_derivations(&g, &vec![Terminal(0); n], DEFAULT_CAP).unwrap();
            assert_eq!(e.derivations.len() as u64, catalan(n as u64 - 1), "n = {n}");
        }
    }

    #[test]
    fn aaaa_probabilities() {
        let q: f64 = 0.5;
        let g = toy(q);
        let e = enumerate_derivations(&g, &[Terminal(0); 4], DEFAULT_CAP).unwrap();
        for d in &e.derivations {
            assert!((d.log_prob() - ln(q.powi(3) * (1.0 - q).powi(4))).abs() < 1e-14);
        }
        assert!((e.total_log_prob - ln(5.0 / 128.0)).abs() < 1e-14);
        let sum: f64 = e.derivations.iter().map(|d| exp(d.log_prob())).sum();
        assert!((exp(e.total_log_prob) - sum).abs() < 1e-12 * sum);
    }

    #[test]
    fn cap_and_empty() {
        let g = toy(0.5);
        assert!(matches!(
            enumerate_derivations(&g, &[Terminal(0); 11], DEFAULT_CAP),
            Err(Error::CapExceeded { len: 11, cap: 10 })
        ));
        let mut b = Grammar::builder();
        b.binary("S", "A", "A", 1.0).unwrap();
        b.lexical("A", "a", 1.0).unwrap();
        let g = b.build().unwrap();
        let e = enumerate_derivations(&g, &[Terminal(0)], DEFAULT_CAP).unwrap();
        assert!(e.derivations.is_empty());
        assert_eq!(e.total_log_prob, f64::NEG_INFINITY);
    }

    #[test]
    fn blow_up_guard() {
        let g = toy(0.5);
        // Catalan(13) = 742900, Catalan(14) = 2674440
        let r = enumerate_derivations(&g, &[Terminal(0); 15], 20);
        assert_eq!(r.unwrap_err(), Error::TooManyDerivations(MAX_DERIVATIONS));
    }

    #[test]
    fn oracle_toy_accumulators() {
        let g = toy(0.4);
        let corpus = [
            Sample::new(vec![Terminal(0); 2]),
            Sample::new(vec![Terminal(0); 4]),
        ];
        let acc = oracle_accumulate(&g, &corpus, &DeltaSpec::default(), 1.0).unwrap();
        assert_eq!(acc.d_rule_ref, vec![4.0, 6.0]);
        assert_eq!(acc.d_nt_ref, vec![10.0]);
        assert!((acc.d_rule_comp[0] - 4.0).abs() < 1e-12);
    }
}
