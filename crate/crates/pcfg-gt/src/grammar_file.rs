//! Grammar text format.
//!
//! One rule per line, `LHS -> RHS1 [RHS2] PROB`. `#` starts a comment, blank
//! lines are ignored. Tokens matching `[A-Z][A-Za-z0-9_]*` are nonterminals,
//! anything else is a terminal. The start symbol is the left-hand side of the
//! first rule unless a `%start X` directive is present.

use std::collections::BTreeMap;

use pcfg_gt_core::{Error as CoreError, Grammar, GrammarBuilder};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrammarFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{symbol}` cannot be a left-hand side (not a nonterminal)")]
    SymbolClass { line: usize, symbol: String },
    #[error("line {line}: rule `{rule}` is not in Chomsky normal form")]
    NotCnf { line: usize, rule: String },
    #[error("line {line}: probability `{value}` is outside ]0,1]")]
    Probability { line: usize, value: String },
    #[error("line {line}: duplicate rule {rule}")]
    Duplicate { line: usize, rule: String },
    #[error("line {line}: rule probabilities of `{lhs}` sum to {sum}, expected 1")]
    Improper { line: usize, lhs: String, sum: f64 },
    #[error("line {line}: start symbol `{symbol}` is not a nonterminal of the grammar")]
    UnknownStart { line: usize, symbol: String },
    #[error("grammar has no rules")]
    Empty,
}

impl GrammarFileError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Syntax { line, .. }
            | Self::SymbolClass { line, .. }
            | Self::NotCnf { line, .. }
            | Self::Probability { line, .. }
            | Self::Duplicate { line, .. }
            | Self::Improper { line, .. }
            | Self::UnknownStart { line, .. } => Some(*line),
            Self::Empty => None,
        }
    }
}

pub fn is_nonterminal(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarFileError> {
    let mut builder = GrammarBuilder::new();
    let mut start: Option<(usize, String)> = None;
    let mut first_line: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens[0] == "%start" {
            if tokens.len() != 2 || !is_nonterminal(tokens[1]) {
                return Err(GrammarFileError::Syntax {
                    line,
                    message: "expected `%start NONTERMINAL`".into(),
                });
            }
            if start.is_some() {
                return Err(GrammarFileError::Syntax {
                    line,
                    message: "repeated %start directive".into(),
                });
            }
            start = Some((line, tokens[1].to_string()));
            continue;
        }
        if tokens.len() < 3 || tokens[1] != "->" {
            return Err(GrammarFileError::Syntax {
                line,
                message: "expected `LHS -> RHS1 [RHS2] PROB`".into(),
            });
        }
        let lhs = tokens[0];
        if !is_nonterminal(lhs) {
            return Err(GrammarFileError::SymbolClass {
                line,
                symbol: lhs.to_string(),
            });
        }
        let value = tokens[tokens.len() - 1];
        let rhs = &tokens[2..tokens.len() - 1];
        let rule = || format!("{lhs} -> {}", rhs.join(" "));
        let prob: f64 = value.parse().map_err(|_| GrammarFileError::Syntax {
            line,
            message: format!("`{value}` is not a probability"),
        })?;
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(GrammarFileError::Probability {
                line,
                value: value.to_string(),
            });
        }
        let added = match rhs {
            [t] if !is_nonterminal(t) => builder.lexical(lhs, t, prob),
            [b, c] if is_nonterminal(b) && is_nonterminal(c) => builder.binary(lhs, b, c, prob),
            _ => return Err(GrammarFileError::NotCnf { line, rule: rule() }),
        };
        added.map_err(|e| match e {
            CoreError::DuplicateRule(rule) => GrammarFileError::Duplicate { line, rule },
            other => GrammarFileError::Syntax {
                line,
                message: other.to_string(),
            },
        })?;
        first_line.entry(lhs.to_string()).or_insert(line);
    }

    if let Some((_, name)) = &start {
        builder.start(name);
    }
    builder.build().map_err(|e| match e {
        CoreError::EmptyGrammar => GrammarFileError::Empty,
        CoreError::Improper { lhs, sum } => GrammarFileError::Improper {
            line: first_line[&lhs],
            lhs,
            sum,
        },
        CoreError::UnknownNonTerminal(symbol) => GrammarFileError::UnknownStart {
            line: start.as_ref().map_or(0, |s| s.0),
            symbol,
        },
        other => GrammarFileError::Syntax {
            line: 0,
            message: other.to_string(),
        },
    })
}

/// Grammar-file text with probabilities in shortest round-trip form, so
/// `parse_grammar(&serialize(g))` reproduces `g` exactly.
pub fn serialize(g: &Grammar) -> String {
    g.to_string()
}
