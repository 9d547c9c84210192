#![allow(dead_code)]

use pcfg_gt_core::{inside, Grammar, Terminal};
use rand::seq::SliceRandom;
use rand::Rng;

/// `S → S S [q]`, `S → a [1 − q]`.
pub fn toy(q: f64) -> Grammar {
    let mut b = Grammar::builder();
    b.binary("S", "S", "S", q).unwrap();
    b.lexical("S", "a", 1.0 - q).unwrap();
    b.build().unwrap()
}

pub fn a_n(n: usize) -> Vec<Terminal> {
    vec![Terminal(0); n]
}

/// A proper CNF grammar with 1–3 nonterminals, at most 6 rules, terminals
/// `a`/`b`, every nonterminal owning at least one lexical rule.
pub fn random_grammar<R: Rng>(rng: &mut R) -> Grammar {
    random_grammar_sized(rng, 3, 6)
}

/// `(lhs, Ok((left, right)) | Err(terminal))`.
type RawRule<'a> = (usize, Result<(usize, usize), &'a str>);

pub fn random_grammar_sized<R: Rng>(rng: &mut R, max_nt: usize, max_rules: usize) -> Grammar {
    let names = ["S", "A", "B", "C"];
    let k = rng.gen_range(1..=max_nt.min(names.len()));
    let terminals = ["a", "b"];
    let mut rules: Vec<RawRule> = Vec::new();
    for (i, _) in names.iter().enumerate().take(k) {
        rules.push((i, Err(terminals[rng.gen_range(0..2)])));
    }
    let mut binary: Vec<(usize, usize, usize)> = Vec::new();
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                binary.push((a, b, c));
            }
        }
    }
    binary.shuffle(rng);
    // S must be able to branch
    let first = binary.iter().position(|r| r.0 == 0).unwrap();
    binary.swap(0, first);
    let n_binary = rng.gen_range(1..=max_rules - k);
    for &(a, b, c) in binary.iter().take(n_binary) {
        rules.push((a, Ok((b, c))));
    }
    // optional extra lexical rule
    if rules.len() < max_rules && rng.gen_bool(0.5) {
        let a = rng.gen_range(0..k);
        let t = terminals[rng.gen_range(0..2)];
        if !rules.iter().any(|r| r.0 == a && r.1 == Err(t)) {
            rules.push((a, Err(t)));
        }
    }
    let weights: Vec<f64> = rules.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut b = Grammar::builder();
    b.nonterminal("S").unwrap();
    for (i, (lhs, rhs)) in rules.iter().enumerate() {
        let total: f64 = rules
            .iter()
            .zip(&weights)
            .filter(|(r, _)| r.0 == *lhs)
            .map(|(_, w)| w)
            .sum();
        let p = weights[i] / total;
        match rhs {
            Ok((l, r)) => b.binary(names[*lhs], names[*l], names[*r], p).unwrap(),
            Err(t) => b.lexical(names[*lhs], t, p).unwrap(),
        };
    }
    b.build().unwrap()
}

pub fn random_string<R: Rng>(rng: &mut R, g: &Grammar, max_len: usize) -> Vec<Terminal> {
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| Terminal(rng.gen_range(0..g.num_terminals() as u32)))
        .collect()
}

/// Random strings of length ≤ `max_len` that the grammar generates.
pub fn random_sentences<R: Rng>(
    rng: &mut R,
    g: &Grammar,
    count: usize,
    max_len: usize,
) -> Vec<Vec<Terminal>> {
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < 2000 {
        tries += 1;
        let x = random_string(rng, g, max_len);
        if inside(g, &x, None).unwrap().log_total().is_some() {
            out.push(x);
        }
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
