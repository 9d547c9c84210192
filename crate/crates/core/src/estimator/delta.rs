//! Realizing Δʳ and Δᶜ for each sentence and evaluating set masses.

use alloc::vec::Vec;

use super::{CompMode, DeltaSpec, RefMode, Warning};
use crate::chart::{count_derivations, expected_counts, inside_weighted, viterbi};
use crate::derivation::derivation_probability;
use crate::kbest::nbest;
use crate::logspace::{exp, log_add, log_sum_exp, LOG_ZERO};
use crate::{Bracketing, Derivation, Error, Grammar, Result, Sample};

/// A finite set of derivations of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivationSet {
    /// An explicit, duplicate-free list.
    Explicit(Vec<Derivation>),
    /// Every derivation compatible with `brackets` (all of `D_x` when `None`),
    /// together with `extra` derivations lying outside that set.
    Chart {
        brackets: Option<Bracketing>,
        extra: Vec<Derivation>,
    },
}

impl DerivationSet {
    /// Does the set contain `d`?
    pub fn contains(&self, g: &Grammar, d: &Derivation) -> bool {
        match self {
            DerivationSet::Explicit(list) => list.iter().any(|e| e.rules() == d.rules()),
            DerivationSet::Chart { brackets, extra } => {
                brackets.as_ref().is_none_or(|b| d.compatible_with(g, b))
                    || extra.iter().any(|e| e.rules() == d.rules())
            }
        }
    }

    /// Number of derivations (as a float; chart sets can be huge).
    pub fn size(&self, g: &Grammar, tokens: &[crate::Terminal]) -> Result<f64> {
        Ok(match self {
            DerivationSet::Explicit(list) => list.len() as f64,
            DerivationSet::Chart { brackets, extra } => {
                count_derivations(g, tokens, brackets.as_ref())? + extra.len() as f64
            }
        })
    }
}

/// The realized sets of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceDeltas {
    pub reference: DerivationSet,
    pub competing: DerivationSet,
}

/// Per-sentence sets; `None` marks a skipped sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub sentences: Vec<Option<SentenceDeltas>>,
    pub warnings: Vec<Warning>,
}

impl Selection {
    pub fn skipped(&self) -> usize {
        self.sentences.iter().filter(|s| s.is_none()).count()
    }
}

fn brackets_of(sample: &Sample, index: usize) -> Result<&Bracketing> {
    sample
        .brackets
        .as_ref()
        .ok_or(Error::MissingBrackets(index))
}

/// Select Δʳ and Δᶜ for every sample under the current grammar.
pub fn select_deltas(g: &Grammar, samples: &[Sample], spec: &DeltaSpec) -> Result<Selection> {
    spec.validate()?;
    let mut sentences = Vec::with_capacity(samples.len());
    let mut warnings = Vec::new();
    for (index, sample) in samples.iter().enumerate() {
        let x = &sample.tokens;
        let reference: Vec<Derivation> = match spec.reference {
            RefMode::Viterbi => viterbi(g, x, None)?.into_iter().collect(),
            RefMode::NBest(n) => nbest(g, x, n, None)?.derivations,
            RefMode::BracketedViterbi => viterbi(g, x, Some(brackets_of(sample, index)?))?
                .into_iter()
                .collect(),
        };
        let mut competing = match spec.competing {
            CompMode::All => DerivationSet::Chart {
                brackets: None,
                extra: Vec::new(),
            },
            CompMode::NBest(n) => DerivationSet::Explicit(nbest(g, x, n, None)?.derivations),
            CompMode::BracketedAll => DerivationSet::Chart {
                brackets: Some(brackets_of(sample, index)?.clone()),
                extra: Vec::new(),
            },
        };
        let comp_size = competing.size(g, x)?;
        if reference.is_empty() || comp_size == 0.0 {
            let reason = if comp_size == 0.0 {
                "empty competing set"
            } else {
                "empty reference set"
            };
            warnings.push(Warning::Skipped {
                sentence: index,
                reason,
            });
            sentences.push(None);
            continue;
        }
        let mut comp_size = comp_size;
        if spec.enforce_subset {
            for d in &reference {
                if !competing.contains(g, d) {
                    match &mut competing {
                        DerivationSet::Explicit(list) => list.push(d.clone()),
                        DerivationSet::Chart { extra, .. } => extra.push(d.clone()),
                    }
                    comp_size += 1.0;
                }
            }
            if comp_size == reference.len() as f64 {
                warnings.push(Warning::Degenerate { sentence: index });
            }
        }
        sentences.push(Some(SentenceDeltas {
            reference: DerivationSet::Explicit(reference),
            competing,
        }));
    }
    Ok(Selection {
        sentences,
        warnings,
    })
}

/// `ln Σ_{d ∈ Δ} P(x, d)^η` under `g`; `-inf` for an empty set.
pub fn set_log_mass(
    g: &Grammar,
    tokens: &[crate::Terminal],
    set: &DerivationSet,
    eta: f64,
) -> Result<f64> {
    let scaled = |d: &Derivation| derivation_probability(g, d).map(|lp| eta * lp);
    match set {
        DerivationSet::Explicit(list) => {
            let terms = list.iter().map(scaled).collect::<Result<Vec<_>>>()?;
            Ok(log_sum_exp(&terms))
        }
        DerivationSet::Chart { brackets, extra } => {
            crate::chart::validate(g, tokens, brackets.as_ref())?;
            let weights: Vec<f64> = g.log_probs().iter().map(|&w| eta * w).collect();
            let chart = inside_weighted(g, tokens, brackets.as_ref(), &weights);
            let mut total = chart.log_total().unwrap_or(LOG_ZERO);
            for d in extra {
                total = log_add(total, scaled(d)?);
            }
            Ok(total)
        }
    }
}

/// `ln P^η(x, Δ) = ln Σ_{d ∈ Δ} P(x, d)^η` for an explicit set.
pub fn scaled_set_logprob(g: &Grammar, delta: &[Derivation], eta: f64) -> Result<f64> {
    if delta.is_empty() {
        return Err(Error::EmptyDerivationSet);
    }
    set_log_mass(g, &[], &DerivationSet::Explicit(delta.to_vec()), eta)
}

/// Add the `P^η`-posterior-weighted counts of `set` into `rules` / `nonterminals`.
/// Returns `false` (adding nothing) if the set has no mass.
pub(crate) fn add_posterior_counts(
    g: &Grammar,
    tokens: &[crate::Terminal],
    set: &DerivationSet,
    eta: f64,
    rules: &mut [f64],
    nonterminals: &mut [f64],
) -> Result<bool> {
    let z = set_log_mass(g, tokens, set, eta)?;
    if z == LOG_ZERO {
        return Ok(false);
    }
    let explicit =
        |list: &[Derivation], rules: &mut [f64], nonterminals: &mut [f64]| -> Result<()> {
            for d in list {
                let w = exp(eta * derivation_probability(g, d)? - z);
                for &r in d.rules() {
                    rules[r.index()] += w;
                    nonterminals[g.rule(r).lhs.index()] += w;
                }
            }
            Ok(())
        };
    match set {
        DerivationSet::Explicit(list) => explicit(list, rules, nonterminals)?,
        DerivationSet::Chart { brackets, extra } => {
            if let Some(e) = expected_counts(g, tokens, brackets.as_ref(), eta)? {
                let share = exp(e.log_mass - z);
                for (acc, v) in rules.iter_mut().zip(&e.rules) {
                    *acc += share * v;
                }
                for (acc, v) in nonterminals.iter_mut().zip(&e.nonterminals) {
                    *acc += share * v;
                }
            }
            explicit(extra, rules, nonterminals)?;
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::toy;
    use crate::logspace::ln;
    use crate::Terminal;
    use alloc::vec;

    fn a(n: usize) -> Sample {
        Sample::new(vec![Terminal(0); n])
    }

    #[test]
    fn scaled_mass_of_all_aaaa_derivations() {
        let g = toy(0.5);
        let all = nbest(&g, &a(4).tokens, 10, None).unwrap().derivations;
        assert_eq!(all.len(), 5);
        let m1 = scaled_set_logprob(&g, &all, 1.0).unwrap();
        assert!((m1 - ln(5.0 / 128.0)).abs() < 1e-14);
        let m2 = scaled_set_logprob(&g, &all, 2.0).unwrap();
        assert!((m2 - ln(5.0 / (128.0 * 128.0))).abs() < 1e-13);
        let single = scaled_set_logprob(&g, &all[..1], 1.7).unwrap();
        assert_eq!(single, 1.7 * all[0].log_prob());
        assert_eq!(
            scaled_set_logprob(&g, &[], 1.0),
            Err(Error::EmptyDerivationSet)
        );
    }

    #[test]
    fn chart_mass_matches_explicit_mass() {
        let g = toy(0.35);
        let x = a(5).tokens;
        let all = nbest(&g, &x, 100, None).unwrap().derivations;
        let chart = DerivationSet::Chart {
            brackets: None,
            extra: Vec::new(),
        };
        for eta in [0.5, 1.0, 2.0] {
            let e = set_log_mass(&g, &x, &DerivationSet::Explicit(all.clone()), eta).unwrap();
            let c = set_log_mass(&g, &x, &chart, eta).unwrap();
            assert!((e - c).abs() < 1e-12);
        }
    }

    #[test]
    fn bracketed_competing_set_gets_viterbi_added() {
        let g = toy(0.5);
        let mut s = a(4);
        s.brackets = Some(Bracketing::new(4, [(0, 2)]).unwrap());
        let spec = DeltaSpec::new(RefMode::Viterbi, CompMode::BracketedAll);
        let sel = select_deltas(&g, &[s.clone()], &spec).unwrap();
        let sd = sel.sentences[0].as_ref().unwrap();
        // Viterbi under ties is a (a (a a)), which crosses (0,2).
        match &sd.competing {
            DerivationSet::Chart { extra, .. } => assert_eq!(extra.len(), 1),
            other => panic!("{other:?}"),
        }
        assert_eq!(sd.competing.size(&g, &s.tokens).unwrap(), 3.0);

        let no_union = DeltaSpec {
            enforce_subset: false,
            ..spec
        };
        let sel = select_deltas(&g, &[s], &no_union).unwrap();
        match &sel.sentences[0].as_ref().unwrap().competing {
            DerivationSet::Chart { extra, .. } => assert!(extra.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn skips_and_degeneracy_are_reported() {
        let mut b = Grammar::builder();
        b.binary("S", "A", "A", 0.5).unwrap();
        b.lexical("S", "b", 0.5).unwrap();
        b.lexical("A", "a", 1.0).unwrap();
        let g = b.build().unwrap();
        let aa = Sample::new(g.encode(&["a", "a"]).unwrap());
        let a1 = Sample::new(g.encode(&["a"]).unwrap());
        let sel = select_deltas(&g, &[aa, a1], &DeltaSpec::default()).unwrap();
        assert!(sel.sentences[0].is_some());
        assert!(sel.sentences[1].is_none());
        assert_eq!(sel.skipped(), 1);
        assert!(sel.warnings.contains(&Warning::Degenerate { sentence: 0 }));
        assert!(matches!(
            sel.warnings[1],
            Warning::Skipped { sentence: 1, .. }
        ));
    }

    #[test]
    fn bracketed_modes_need_brackets() {
        let g = toy(0.5);
        let spec = DeltaSpec::new(RefMode::BracketedViterbi, CompMode::All);
        assert_eq!(
            select_deltas(&g, &[a(3)], &spec),
            Err(Error::MissingBrackets(0))
        );
    }

    #[test]
    fn posterior_counts_of_singleton_are_raw_counts() {
        let g = toy(0.3);
        let d = viterbi(&g, &a(3).tokens, None).unwrap().unwrap();
        let mut rules = vec![0.0; 2];
        let mut nts = vec![0.0; 1];
        let set = DerivationSet::Explicit(vec![d]);
        assert!(add_posterior_counts(&g, &a(3).tokens, &set, 1.0, &mut rules, &mut nts).unwrap());
        assert_eq!(rules, vec![2.0, 3.0]);
        assert_eq!(nts, vec![5.0]);
    }
}
