//! Bracket constraints over token spans.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A set of pairwise non-crossing half-open spans `[start, end)` over a
/// sentence. Spans may nest or coincide with chart spans; they need not form
/// a complete or binary tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bracketing {
    len: usize,
    spans: Vec<(usize, usize)>,
}

#[inline]
fn crosses((i, j): (usize, usize), (a, b): (usize, usize)) -> bool {
    (i < a && a < j && j < b) || (a < i && i < b && b < j)
}

impl Bracketing {
    /// An empty bracketing over a sentence of `len` tokens (no constraint).
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            spans: Vec::new(),
        }
    }

    pub fn new<I>(len: usize, spans: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let set: BTreeSet<(usize, usize)> = spans.into_iter().collect();
        let spans: Vec<_> = set.into_iter().collect();
        for &(start, end) in &spans {
            if start >= end || end > len {
                return Err(Error::BracketOutOfRange { start, end, len });
            }
        }
        for (k, &x) in spans.iter().enumerate() {
            for &y in &spans[k + 1..] {
                if crosses(x, y) {
                    return Err(Error::CrossingBrackets(x.0, x.1, y.0, y.1));
                }
            }
        }
        Ok(Self { len, spans })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Sorted, duplicate-free spans.
    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    /// True if the chart span `[i, j)` crosses no bracket.
    pub fn compatible(&self, i: usize, j: usize) -> bool {
        self.spans.iter().all(|&s| !crosses((i, j), s))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len != n {
            return Err(Error::BracketLength {
                expected: n,
                got: self.len,
            });
        }
        Ok(())
    }
}
