use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::Accumulators;
use crate::derivation::rule_counts;
use crate::logspace::abs;
use crate::{Derivation, Error, Grammar, Result};

/// `C̃ = max{ max_{A→α} −(D_{A→α}(Δʳ) − h D_{A→α}(Δᶜ)) / p(A→α), 0 } + ε`,
/// evaluated at the current probabilities.
pub fn compute_ctilde(acc: &Accumulators, g: &Grammar, h: f64, epsilon: f64) -> f64 {
    let worst = acc
        .d_rule_ref
        .iter()
        .zip(&acc.d_rule_comp)
        .zip(g.probs())
        .map(|((r, c), p)| -(r - h * c) / p)
        .fold(0.0, f64::max);
    worst + epsilon
}

/// Shared update: numerators per rule and denominators per nonterminal are
/// supplied by the caller. Rules of nonterminals whose denominator is not
/// positive are an error.
fn transform(
    g: &Grammar,
    numerator: impl Fn(usize) -> f64,
    denominator: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.num_rules()];
    for a in g.nonterminals() {
        let rules = g.rules_of(a);
        if rules.is_empty() {
            continue;
        }
        let den = denominator(a.index());
        if !(den > 0.0) {
            return Err(Error::NonPositiveDenominator {
                lhs: g.nonterminal_name(a).to_string(),
                value: den,
            });
        }
        for r in rules {
            out[r.index()] = numerator(r.index()) / den;
        }
    }
    Ok(out)
}

/// Raw growth-transformation output, before flooring and renormalization:
/// `(D_{A→α}(Δʳ) − h D_{A→α}(Δᶜ) + p C̃) / (D_A(Δʳ) − h D_A(Δᶜ) + C̃)`.
pub fn growth_step_raw(g: &Grammar, acc: &Accumulators, h: f64, ctilde: f64) -> Result<Vec<f64>> {
    let p = g.probs();
    transform(
        g,
        |r| (acc.d_rule_ref[r] - h * acc.d_rule_comp[r]) + p[r] * ctilde,
        |a| (acc.d_nt_ref[a] - h * acc.d_nt_comp[a]) + ctilde,
    )
}

/// Single-reference H-criterion update, written directly from the best
/// derivations: `Σ_x N(A→α, d̂_x)` replaces `D_{A→α}(Δʳ)`. The competing
/// statistics are read from `competing.d_*_comp`.
pub fn h_criterion_step(
    g: &Grammar,
    best: &[Derivation],
    competing: &Accumulators,
    h: f64,
    ctilde: f64,
) -> Result<Vec<f64>> {
    let mut n_rule = vec![0u64; g.num_rules()];
    let mut n_nt = vec![0u64; g.num_nonterminals()];
    for d in best {
        let counts = rule_counts(g, d);
        for (r, n) in counts.per_rule {
            n_rule[r.index()] += n as u64;
        }
        for (a, n) in counts.per_nonterminal {
            n_nt[a.index()] += n as u64;
        }
    }
    let p = g.probs();
    transform(
        g,
        |r| (n_rule[r] as f64 - h * competing.d_rule_comp[r]) + p[r] * ctilde,
        |a| (n_nt[a] as f64 - h * competing.d_nt_comp[a]) + ctilde,
    )
}

/// Floor at `min_prob`, renormalize each nonterminal, and build the new grammar.
pub(crate) fn finalize(
    g: &Grammar,
    mut probs: Vec<f64>,
    min_prob: f64,
) -> Result<(Grammar, usize)> {
    let mut floored = 0;
    for p in probs.iter_mut() {
        if !(*p >= min_prob) {
            *p = min_prob;
            floored += 1;
        }
    }
    for a in g.nonterminals() {
        let rules = g.rules_of(a);
        let sum: f64 = rules.iter().map(|r| probs[r.index()]).sum();
        for r in rules {
            probs[r.index()] /= sum;
        }
    }
    Ok((g.with_probabilities(probs)?, floored))
}

/// One growth transformation. Rule set unchanged; probabilities floored at
/// `min_prob` and renormalized per nonterminal.
pub fn growth_step(
    g: &Grammar,
    acc: &Accumulators,
    h: f64,
    ctilde: f64,
    min_prob: f64,
) -> Result<Grammar> {
    let raw = growth_step_raw(g, acc, h, ctilde)?;
    finalize(g, raw, min_prob).map(|(g, _)| g)
}

/// `max_r |p_new(r) − p_old(r)|` over grammars with the same rule set.
pub fn max_abs_change(old: &Grammar, new: &Grammar) -> f64 {
    old.probs()
        .iter()
        .zip(new.probs())
        .map(|(a, b)| abs(a - b))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{accumulate, DeltaSpec};
    use crate::grammar::tests::toy;
    use crate::{Sample, Terminal};

    fn toy_acc(q: f64) -> (Grammar, Accumulators) {
        let g = toy(q);
        let corpus = [
            Sample::new(vec![Terminal(0); 2]),
            Sample::new(vec![Terminal(0); 4]),
        ];
        let acc = accumulate(&g, &corpus, &DeltaSpec::default(), 1.0).unwrap();
        (g, acc)
    }

    #[test]
    fn ctilde_examples() {
        let (g, acc) = toy_acc(0.5);
        assert_eq!(compute_ctilde(&acc, &g, 0.0, 1e-3), 1e-3);
        // D_ref − D_comp vanishes up to rounding for both rules
        assert!((compute_ctilde(&acc, &g, 1.0, 1e-3) - 1e-3).abs() < 1e-10);

        let mut b = Grammar::builder();
        b.lexical("S", "a", 0.25).unwrap();
        b.lexical("S", "b", 0.75).unwrap();
        let g = b.build().unwrap();
        let mut acc = Accumulators::zeros(&g);
        acc.d_rule_comp[0] = 2.0;
        assert_eq!(compute_ctilde(&acc, &g, 0.5, 0.01), 4.0 + 0.01);
    }

    #[test]
    fn closed_form_on_toy_grammar() {
        for q in [0.3, 0.5, 0.7] {
            let (g, acc) = toy_acc(q);
            for h in [0.0, 0.5] {
                let c = 2.0;
                let out = growth_step(&g, &acc, h, c, 1e-12).unwrap();
                let den = 10.0 * (1.0 - h) + c;
                assert!((out.probs()[0] - (4.0 * (1.0 - h) + q * c) / den).abs() < 1e-12);
                assert!((out.probs()[1] - (6.0 * (1.0 - h) + (1.0 - q) * c) / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unused_nonterminal_is_unchanged() {
        let mut b = Grammar::builder();
        b.binary("S", "A", "A", 0.5).unwrap();
        b.lexical("S", "a", 0.5).unwrap();
        b.lexical("A", "a", 0.3).unwrap();
        b.lexical("A", "b", 0.7).unwrap();
        let g = b.build().unwrap();
        let mut acc = Accumulators::zeros(&g);
        acc.d_rule_ref[1] = 1.0;
        acc.d_nt_ref[0] = 1.0;
        let raw = growth_step_raw(&g, &acc, 0.0, 0.5).unwrap();
        assert_eq!(raw[2], 0.3);
        assert_eq!(raw[3], 0.7);
    }

    #[test]
    fn too_small_constant_is_an_error() {
        let g = toy(0.5);
        let mut acc = Accumulators::zeros(&g);
        acc.d_rule_comp = vec![3.0, 4.0];
        acc.d_nt_comp = vec![7.0];
        assert!(matches!(
            growth_step(&g, &acc, 0.5, 1.0, 1e-12),
            Err(Error::NonPositiveDenominator { .. })
        ));
    }

    #[test]
    fn negative_numerators_are_floored() {
        let g = toy(0.5);
        let mut acc = Accumulators::zeros(&g);
        acc.d_rule_ref = vec![0.0, 4.0];
        acc.d_rule_comp = vec![2.0, 2.0];
        acc.d_nt_ref = vec![4.0];
        acc.d_nt_comp = vec![4.0];
        // S→SS numerator: -1 + 0.5·0.1 < 0
        let (out, floored) =
            finalize(&g, growth_step_raw(&g, &acc, 0.5, 0.1).unwrap(), 1e-12).unwrap();
        assert_eq!(floored, 1);
        assert!(out.probs()[0] > 0.0 && out.probs()[0] < 1e-11);
    }
}
