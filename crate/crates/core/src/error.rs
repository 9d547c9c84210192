use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("symbol `{0}` is declared both as a nonterminal and a terminal")]
    SymbolClash(String),
    #[error("unknown nonterminal `{0}`")]
    UnknownNonTerminal(String),
    #[error("duplicate rule {0}")]
    DuplicateRule(String),
    #[error("probability {prob} of rule {rule} is outside ]0,1]")]
    BadProbability { rule: String, prob: f64 },
    #[error("rule probabilities of `{lhs}` sum to {sum}, expected 1")]
    Improper { lhs: String, sum: f64 },
    #[error("grammar has no rules")]
    EmptyGrammar,
    #[error("expected {expected} probabilities, got {got}")]
    ProbabilityCount { expected: usize, got: usize },
    #[error("token `{token}` at position {position} is not a terminal of the grammar")]
    UnknownToken { token: String, position: usize },
    #[error("terminal id {0} out of range")]
    TerminalOutOfRange(u32),
    #[error("sentence is empty")]
    EmptySentence,
    #[error("rule id {0} out of range")]
    RuleOutOfRange(u32),
    #[error("derivation is not a derivation of the sentence: {0}")]
    InvalidDerivation(&'static str),
    #[error("bracket ({start},{end}) is invalid for a sentence of length {len}")]
    BracketOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("brackets ({0},{1}) and ({2},{3}) cross")]
    CrossingBrackets(usize, usize, usize, usize),
    #[error("bracketing covers {got} tokens but sentence has {expected}")]
    BracketLength { expected: usize, got: usize },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("derivation set is empty")]
    EmptyDerivationSet,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every sentence of the corpus was skipped (no reference or competing derivation)")]
    AllSkipped,
    #[error("sentence {0} needs a bracketing for the selected derivation-set mode")]
    MissingBrackets(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("growth transformation denominator {value} <= 0 for nonterminal `{lhs}` (constant too small)")]
    NonPositiveDenominator { lhs: String, value: f64 },
    #[error("sentence length {len} exceeds the enumeration cap {cap}")]
    CapExceeded { len: usize, cap: usize },
    #[error("more than {0} derivations; enumeration aborted")]
    TooManyDerivations(usize),
    #[error("iteration {iteration}: {source}")]
    InIteration {
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}
