//! Consistency via the spectral radius of the first-moment (expectation)
//! matrix: a CNF PCFG is consistent iff ρ(M) < 1 (ρ = 1 is the critical case).

use alloc::vec;
use alloc::vec::Vec;

use super::{Grammar, Rhs};
use crate::logspace::abs;

pub const DEFAULT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 10_000;
const CONVERGENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Borderline,
    Inconsistent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Borderline => "borderline",
            Verdict::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub spectral_radius: f64,
    pub verdict: Verdict,
    pub iterations: usize,
    /// False when power iteration hit the cap; the verdict is then borderline.
    pub converged: bool,
}

/// `M[A][B] = Σ_{A → α} p(A → α) · #B(α)`, rows and columns in nonterminal order.
pub fn expectation_matrix(g: &Grammar) -> Vec<Vec<f64>> {
    let n = g.num_nonterminals();
    let mut m = vec![vec![0.0; n]; n];
    for rule in g.rules() {
        if let Rhs::Binary(b, c) = rule.rhs {
            let p = g.prob(rule.id);
            m[rule.lhs.index()][b.index()] += p;
            m[rule.lhs.index()][c.index()] += p;
        }
    }
    m
}

/// Power iteration on `M + I` from the all-ones vector. The shift keeps the
/// iteration aperiodic for nonnegative `M`; its dominant eigenvalue is ρ(M) + 1.
pub fn check_consistency(g: &Grammar, tol: f64) -> ConsistencyReport {
    let n = g.num_nonterminals();
    let mut v = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut lambda = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERS {
        iterations += 1;
        next.copy_from_slice(&v);
        for rule in g.rules() {
            if let Rhs::Binary(b, c) = rule.rhs {
                next[rule.lhs.index()] += g.prob(rule.id) * (v[b.index()] + v[c.index()]);
            }
        }
        let norm = next.iter().copied().fold(0.0, f64::max);
        for (dst, src) in v.iter_mut().zip(&next) {
            *dst = src / norm;
        }
        let delta = abs(norm - lambda);
        lambda = norm;
        if iterations > 1 && delta <= CONVERGENCE_TOL * lambda {
            converged = true;
            break;
        }
    }

    let spectral_radius = (lambda - 1.0).max(0.0);
    let verdict = if !converged {
        Verdict::Borderline
    } else if spectral_radius < 1.0 - tol {
        Verdict::Consistent
    } else if spectral_radius > 1.0 + tol {
        Verdict::Inconsistent
    } else {
        Verdict::Borderline
    };
    ConsistencyReport {
        spectral_radius,
        verdict,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::toy;
    use crate::Grammar;

    #[test]
    fn toy_matrix_is_two_q() {
        assert!((expectation_matrix(&toy(0.4))[0][0] - 0.8).abs() < 1e-15);
        assert!((expectation_matrix(&toy(0.6))[0][0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn lexical_only_grammar_has_zero_radius() {
        let mut b = Grammar::builder();
        b.lexical("S", "a", 1.0).unwrap();
        let g = b.build().unwrap();
        assert_eq!(expectation_matrix(&g), vec![vec![0.0]]);
        let r = check_consistency(&g, DEFAULT_TOL);
        assert_eq!(r.spectral_radius, 0.0);
        assert_eq!(r.verdict, Verdict::Consistent);
    }

    #[test]
    fn toy_verdicts() {
        let r = check_consistency(&toy(0.4), DEFAULT_TOL);
        assert!((r.spectral_radius - 0.8).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Consistent);
        let r = check_consistency(&toy(0.6), DEFAULT_TOL);
        assert!((r.spectral_radius - 1.2).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Inconsistent);
        assert_eq!(
            check_consistency(&toy(0.5), DEFAULT_TOL).verdict,
            Verdict::Borderline
        );
    }

    #[test]
    fn periodic_matrix_still_converges() {
        // M = [[0, 2·0.5], [2·0.5, 0]]: period two, ρ = 1 without the shift trick.
        let mut b = Grammar::builder();
        b.binary("A", "B", "B", 0.25).unwrap();
        b.lexical("A", "a", 0.75).unwrap();
        b.binary("B", "A", "A", 0.9).unwrap();
        b.lexical("B", "b", 0.1).unwrap();
        let g = b.build().unwrap();
        // eigenvalues ±sqrt(0.5 · 1.8)
        let r = check_consistency(&g, DEFAULT_TOL);
        assert!(r.converged);
        assert!(
            (r.spectral_radius - (0.5f64 * 1.8).sqrt()).abs() < 1e-9,
            "{r:?}"
        );
    }
}
