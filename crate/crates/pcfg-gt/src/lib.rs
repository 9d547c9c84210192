//! File formats and the command-line driver around `pcfg-gt-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod grammar_file;
pub mod number;
pub mod report;

pub use corpus::{parse_bracketed_corpus, parse_corpus, CorpusError, Sentence};
pub use grammar_file::{parse_grammar, serialize, GrammarFileError};
pub use report::{report_csv, CSV_HEADER};
