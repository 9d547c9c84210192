//! Growth-transformation estimation under the generalized H-criterion
//!
//! ```text
//! F̃_h = Π_x P^η(x, Δʳ_x) / P(x, Δᶜ_x)^h
//! p̄(A → α) = (D_{A→α}(Δʳ) − h D_{A→α}(Δᶜ) + p(A → α) C̃) / (D_A(Δʳ) − h D_A(Δᶜ) + C̃)
//! ```
//!
//! with `P^η(x, Δ) = Σ_{d ∈ Δ} P(x, d)^η` and the D-accumulators the
//! `P^η`-posterior-weighted rule and nonterminal counts over each set. The
//! original H-criterion update (single best reference, η = 1) is the special
//! case `Δʳ = {d̂}`.

mod accumulate;
mod delta;
mod train;
mod transform;

pub use accumulate::{accumulate, accumulate_selected, Accumulators};
pub use delta::{
    scaled_set_logprob, select_deltas, set_log_mass, DerivationSet, Selection, SentenceDeltas,
};
pub use train::{
    guarded_step, objective, objective_selected, train, IterationRecord, Step, TrainReport,
};
pub use transform::{
    compute_ctilde, growth_step, growth_step_raw, h_criterion_step, max_abs_change,
};

use alloc::string::String;

use crate::{Error, Result};

/// How the reference set Δʳ is obtained for each sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMode {
    /// `{d̂}`, the Viterbi derivation.
    Viterbi,
    /// The n most probable derivations.
    NBest(usize),
    /// The best derivation compatible with the sentence's bracketing.
    BracketedViterbi,
}

/// How the competing set Δᶜ is obtained for each sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompMode {
    /// Every derivation (Inside/Outside).
    All,
    /// The n most probable derivations.
    NBest(usize),
    /// Every derivation compatible with the sentence's bracketing.
    BracketedAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaSpec {
    pub reference: RefMode,
    pub competing: CompMode,
    /// Replace Δᶜ by Δᶜ ∪ Δʳ whenever the selectors alone do not nest.
    pub enforce_subset: bool,
}

impl DeltaSpec {
    pub fn new(reference: RefMode, competing: CompMode) -> Self {
        Self {
            reference,
            competing,
            enforce_subset: true,
        }
    }

    pub fn needs_brackets(&self) -> bool {
        self.reference == RefMode::BracketedViterbi || self.competing == CompMode::BracketedAll
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.reference, RefMode::NBest(0))
            || matches!(self.competing, CompMode::NBest(0))
        {
            return Err(Error::ZeroN);
        }
        if let (RefMode::NBest(r), CompMode::NBest(c)) = (self.reference, self.competing) {
            if r > c {
                return Err(Error::InvalidParameter("n_ref must not exceed n_comp"));
            }
        }
        Ok(())
    }
}

impl Default for DeltaSpec {
    fn default() -> Self {
        Self::new(RefMode::Viterbi, CompMode::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HParams {
    /// Weight of the competing-set mass, `0 ≤ h < 1`.
    pub h: f64,
    /// Exponent on per-derivation probabilities, `η > 0`.
    pub eta: f64,
    /// Offset added to the C̃ approximation.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the relative change of the log objective drops below this.
    pub rel_tol: f64,
    /// Probability floor applied before renormalization.
    pub min_prob: f64,
}

impl Default for HParams {
    fn default() -> Self {
        Self {
            h: 0.0,
            eta: 1.0,
            epsilon: 1e-6,
            max_iters: 100,
            rel_tol: 1e-8,
            min_prob: 1e-12,
        }
    }
}

impl HParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.h) {
            return Err(Error::InvalidParameter("h must satisfy 0 <= h < 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("eta must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be nonnegative"));
        }
        if !(self.min_prob > 0.0 && self.min_prob < 1.0) {
            return Err(Error::InvalidParameter("min_prob must lie in ]0,1["));
        }
        Ok(())
    }
}

/// Non-fatal conditions met while selecting derivation sets or training.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Sentence had an empty reference or competing set and was left out.
    Skipped {
        sentence: usize,
        reason: &'static str,
    },
    /// Δʳ and Δᶜ coincide after the union; the sentence contributes `(1 − h)`
    /// times a self-ratio.
    Degenerate {
        sentence: usize,
    },
    /// The C̃ approximation lowered the frozen objective and was doubled.
    CtildeRaised {
        iteration: usize,
        doublings: usize,
    },
    /// Rules floored at `min_prob` during a step.
    Floored {
        iteration: usize,
        rules: usize,
    },
    /// η ≠ 1: the objective's denominator uses η = 1 while the update uses η
    /// on both accumulators.
    ExperimentalEta,
    Other(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(HParams::default().validate().is_ok());
        assert!(HParams {
            h: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HParams {
            h: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HParams {
            eta: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HParams {
            epsilon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HParams {
            min_prob: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(DeltaSpec::new(RefMode::NBest(2), CompMode::NBest(5))
            .validate()
            .is_ok());
        assert!(DeltaSpec::new(RefMode::NBest(6), CompMode::NBest(5))
            .validate()
            .is_err());
        assert_eq!(
            DeltaSpec::new(RefMode::NBest(0), CompMode::All).validate(),
            Err(Error::ZeroN)
        );
        assert!(DeltaSpec::new(RefMode::Viterbi, CompMode::BracketedAll).needs_brackets());
        assert!(!DeltaSpec::default().needs_brackets());
    }
}
