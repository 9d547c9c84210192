use alloc::vec;
use alloc::vec::Vec;

use super::delta::{add_posterior_counts, select_deltas, Selection};
use super::DeltaSpec;
use crate::{Error, Grammar, Result, Sample};

/// Sufficient statistics of one growth-transformation step:
/// `D_{A→α}(Δʳ)`, `D_{A→α}(Δᶜ)` (indexed by rule id) and `D_A(Δʳ)`, `D_A(Δᶜ)`
/// (indexed by nonterminal).
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulators {
    pub d_rule_ref: Vec<f64>,
    pub d_rule_comp: Vec<f64>,
    pub d_nt_ref: Vec<f64>,
    pub d_nt_comp: Vec<f64>,
    /// Sentences left out because a set was empty.
    pub skipped: usize,
    /// Sentences that contributed.
    pub used: usize,
}

impl Accumulators {
    pub fn zeros(g: &Grammar) -> Self {
        Self {
            d_rule_ref: vec![0.0; g.num_rules()],
            d_rule_comp: vec![0.0; g.num_rules()],
            d_nt_ref: vec![0.0; g.num_nonterminals()],
            d_nt_comp: vec![0.0; g.num_nonterminals()],
            skipped: 0,
            used: 0,
        }
    }

    /// Elementwise sum; commutative and associative up to float rounding.
    pub fn merge(&mut self, other: &Accumulators) {
        fn add(dst: &mut [f64], src: &[f64]) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
        add(&mut self.d_rule_ref, &other.d_rule_ref);
        add(&mut self.d_rule_comp, &other.d_rule_comp);
        add(&mut self.d_nt_ref, &other.d_nt_ref);
        add(&mut self.d_nt_comp, &other.d_nt_comp);
        self.skipped += other.skipped;
        self.used += other.used;
    }
}

/// Accumulate over already selected sets.
pub fn accumulate_selected(
    g: &Grammar,
    samples: &[Sample],
    selection: &Selection,
    eta: f64,
) -> Result<Accumulators> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut acc = Accumulators::zeros(g);
    for (sample, deltas) in samples.iter().zip(&selection.sentences) {
        let Some(deltas) = deltas else {
            acc.skipped += 1;
            continue;
        };
        let mut part = Accumulators::zeros(g);
        let ok_ref = add_posterior_counts(
            g,
            &sample.tokens,
            &deltas.reference,
            eta,
            &mut part.d_rule_ref,
            &mut part.d_nt_ref,
        )?;
        let ok_comp = add_posterior_counts(
            g,
            &sample.tokens,
            &deltas.competing,
            eta,
            &mut part.d_rule_comp,
            &mut part.d_nt_comp,
        )?;
        if ok_ref && ok_comp {
            part.used = 1;
            acc.merge(&part);
        } else {
            acc.skipped += 1;
        }
    }
    if acc.used == 0 {
        return Err(Error::AllSkipped);
    }
    Ok(acc)
}

/// Select Δʳ / Δᶜ under `g` and accumulate their D-statistics.
pub fn accumulate(
    g: &Grammar,
    samples: &[Sample],
    spec: &DeltaSpec,
    eta: f64,
) -> Result<Accumulators> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let selection = select_deltas(g, samples, spec)?;
    accumulate_selected(g, samples, &selection, eta)
}
