use pcfg_gt::{parse_bracketed_corpus, parse_grammar, serialize, GrammarFileError};
use pcfg_gt_core::{Bracketing, Grammar, Rhs};
use proptest::prelude::*;

const NAMES: [&str; 4] = ["S", "A", "B_1", "Np"];
const TERMINALS: [&str; 3] = ["a", "b", "the"];

/// (lhs, rhs, weight); rhs is `Ok((left, right))` or `Err(terminal)`.
type RawRule = (usize, Result<(usize, usize), usize>, f64);

fn raw_rules() -> impl Strategy<Value = Vec<RawRule>> {
    let rhs = prop_oneof![
        (0..NAMES.len(), 0..NAMES.len()).prop_map(Ok),
        (0..TERMINALS.len()).prop_map(Err),
    ];
    proptest::collection::vec((0..NAMES.len(), rhs, 1e-6f64..1.0), 1..12)
}

fn build(raw: &[RawRule]) -> Option<Grammar> {
    let mut seen = Vec::new();
    let rules: Vec<_> = raw
        .iter()
        .filter(|r| {
            let key = (r.0, r.1);
            let fresh = !seen.contains(&key);
            seen.push(key);
            fresh
        })
        .collect();
    let mut b = Grammar::builder();
    for r in &rules {
        let total: f64 = rules.iter().filter(|s| s.0 == r.0).map(|s| s.2).sum();
        let p = r.2 / total;
        match r.1 {
            Ok((x, y)) => b.binary(NAMES[r.0], NAMES[x], NAMES[y], p).ok()?,
            Err(t) => b.lexical(NAMES[r.0], TERMINALS[t], p).ok()?,
        };
    }
    b.build().ok()
}

proptest! {
    #[test]
    fn serialize_then_parse_is_bit_exact(raw in raw_rules()) {
        let Some(g) = build(&raw) else { return Ok(()) };
        let text = serialize(&g);
        let back = parse_grammar(&text).unwrap();
        prop_assert_eq!(back.num_rules(), g.num_rules());
        prop_assert_eq!(back.start(), g.start());
        for (r, s) in g.rules().iter().zip(back.rules()) {
            prop_assert_eq!(g.rule_string(r.id), back.rule_string(s.id));
            prop_assert_eq!(g.prob(r.id).to_bits(), back.prob(s.id).to_bits());
        }
        prop_assert_eq!(serialize(&back), text);
    }
}

#[test]
fn toy_grammar_text() {
    let g = parse_grammar("S -> S S 0.4\nS -> a 0.6\n").unwrap();
    let s = g.nonterminal("S").unwrap();
    assert_eq!(g.num_rules(), 2);
    assert_eq!(g.rules_of(s).len(), 2);
    let ss = g.find_rule(s, Rhs::Binary(s, s)).unwrap();
    assert_eq!(g.prob(ss), 0.4);
}

#[test]
fn single_rule_grammar() {
    let g = parse_grammar("S -> a 1.0").unwrap();
    assert_eq!(g.num_rules(), 1);
}

#[test]
fn improper_grammar_is_rejected_with_its_line() {
    let e = parse_grammar("# header\nS -> S S 0.3\nS -> a 0.6\n").unwrap_err();
    match e {
        GrammarFileError::Improper { line, ref lhs, sum } => {
            assert_eq!(line, 2);
            assert_eq!(lhs, "S");
            assert!((sum - 0.9).abs() < 1e-12);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn near_proper_input_is_renormalized() {
    let g = parse_grammar("S -> S S 0.4000000001\nS -> a 0.6").unwrap();
    let sum: f64 = g.probs().iter().sum();
    assert!((sum - 1.0).abs() <= 2.0 * f64::EPSILON);
}

#[test]
fn bracketed_corpus_feeds_core_bracketing() {
    let g = parse_grammar("S -> S S 0.4\nS -> a 0.6").unwrap();
    let c = parse_bracketed_corpus("( ( a a ) ( a a ) )\n").unwrap();
    let sample = c[0].to_sample(&g).unwrap();
    let want = Bracketing::new(4, [(0, 4), (0, 2), (2, 4)]).unwrap();
    assert_eq!(sample.brackets, Some(want));
}
