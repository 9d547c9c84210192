//! Plain and bracketed corpora.
//!
//! Plain: one sentence per line, whitespace-separated tokens. Bracketed: one
//! sentence per line in parenthesis notation such as `( ( a a ) ( a a ) )`;
//! parentheses need not be separated by spaces. Blank lines are skipped.

use pcfg_gt_core::{Bracketing, Grammar, Sample};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: unbalanced `)`")]
    UnexpectedClose { line: usize },
    #[error("line {line}: {open} unclosed `(`")]
    Unclosed { line: usize, open: usize },
    #[error("line {line}: empty bracket `( )`")]
    EmptyBracket { line: usize },
    #[error("line {line}: no tokens")]
    NoTokens { line: usize },
    #[error("line {line}: {error}")]
    Encode {
        line: usize,
        error: pcfg_gt_core::Error,
    },
}

/// A corpus sentence with the file line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub line: usize,
    pub tokens: Vec<String>,
    /// Half-open token spans; `None` for plain corpora.
    pub spans: Option<Vec<(usize, usize)>>,
}

impl Sentence {
    /// Encode against `g`, attaching brackets if present.
    pub fn to_sample(&self, g: &Grammar) -> Result<Sample, CorpusError> {
        let line = self.line;
        let tokens = g
            .encode(&self.tokens)
            .map_err(|error| CorpusError::Encode { line, error })?;
        match &self.spans {
            None => Ok(Sample::new(tokens)),
            Some(spans) => {
                let b = Bracketing::new(tokens.len(), spans.iter().copied())
                    .map_err(|error| CorpusError::Encode { line, error })?;
                Ok(Sample::with_brackets(tokens, b))
            }
        }
    }
}

pub fn parse_corpus(text: &str) -> Vec<Sentence> {
    text.lines()
        .enumerate()
        .filter_map(|(idx, raw)| {
            let tokens: Vec<String> = raw.split_whitespace().map(str::to_string).collect();
            (!tokens.is_empty()).then(|| Sentence {
                line: idx + 1,
                tokens,
                spans: None,
            })
        })
        .collect()
}

pub fn parse_bracketed_corpus(text: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        let spaced = raw.replace('(', " ( ").replace(')', " ) ");
        for tok in spaced.split_whitespace() {
            match tok {
                "(" => open.push(tokens.len()),
                ")" => {
                    let start = open.pop().ok_or(CorpusError::UnexpectedClose { line })?;
                    if start == tokens.len() {
                        return Err(CorpusError::EmptyBracket { line });
                    }
                    spans.push((start, tokens.len()));
                }
                _ => tokens.push(tok.to_string()),
            }
        }
        if !open.is_empty() {
            return Err(CorpusError::Unclosed {
                line,
                open: open.len(),
            });
        }
        if tokens.is_empty() {
            return Err(CorpusError::NoTokens { line });
        }
        spans.sort_unstable();
        spans.dedup();
        out.push(Sentence {
            line,
            tokens,
            spans: Some(spans),
        });
    }
    Ok(out)
}
