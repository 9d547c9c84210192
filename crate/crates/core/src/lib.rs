//! Discriminative estimation of probabilistic context-free grammars in
//! Chomsky Normal Form.
//!
//! The crate provides the full pipeline used by growth-transformation
//! training under the (generalized) H-criterion:
//!
//! * [`grammar`]: validated CNF grammars, the expectation matrix and the
//!   spectral-radius consistency check.
//! * [`derivation`] and [`bracket`]: left-derivations, rule counts and
//!   bracket constraints.
//! * [`chart`]: Inside, Outside (expected rule counts) and Viterbi over
//!   span charts, optionally bracket-constrained.
//! * [`kbest`]: exact n-best derivation lists.
//! * [`estimator`]: reference/competing derivation sets, D-accumulators,
//!   the growth transformation and the training loop.
//! * [`oracle`]: brute-force enumeration used to cross-check everything
//!   above on small inputs.
//!
//! All probabilities are carried in natural-log space. The crate is
//! `no_std` and only needs `alloc`.
#![no_std]
#![deny(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bracket;
pub mod chart;
pub mod derivation;
mod error;
pub mod estimator;
pub mod grammar;
pub mod kbest;
pub mod logspace;
pub mod oracle;

pub use bracket::Bracketing;
pub use chart::{inside, viterbi, InsideChart};
pub use derivation::{derivation_probability, rule_counts, Derivation, RuleCounts};
pub use error::{Error, Result};
pub use estimator::{
    accumulate, compute_ctilde, growth_step, objective, scaled_set_logprob, train, Accumulators,
    CompMode, DeltaSpec, HParams, RefMode, TrainReport,
};
pub use grammar::{
    check_consistency, expectation_matrix, ConsistencyReport, Grammar, GrammarBuilder, NonTerminal,
    Rhs, Rule, RuleId, Terminal, Verdict,
};
pub use kbest::{nbest, KBestList};
pub use oracle::{enumerate_derivations, oracle_accumulate, Enumeration};

/// A training or parsing input: a tokenized sentence with an optional
/// bracketing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub tokens: alloc::vec::Vec<Terminal>,
    pub brackets: Option<Bracketing>,
}

impl Sample {
    pub fn new(tokens: alloc::vec::Vec<Terminal>) -> Self {
        Self {
            tokens,
            brackets: None,
        }
    }

    pub fn with_brackets(tokens: alloc::vec::Vec<Terminal>, brackets: Bracketing) -> Self {
        Self {
            tokens,
            brackets: Some(brackets),
        }
    }
}
