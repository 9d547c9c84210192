//! Command-line driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pcfg_gt_core::estimator::Warning;
use pcfg_gt_core::{
    check_consistency, enumerate_derivations, inside, nbest, train, viterbi, CompMode, DeltaSpec,
    Derivation, Grammar, HParams, RefMode, Rhs, Sample,
};

use crate::corpus::{parse_bracketed_corpus, parse_corpus, Sentence};
use crate::grammar_file::{parse_grammar, serialize};
use crate::number::{exact, sig};
use crate::report::report_csv;

#[derive(Debug, Parser)]
#[command(
    name = "pcfg-gt",
    version,
    about = "Discriminative growth-transformation training for CNF PCFGs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a grammar and report problems.
    Validate {
        #[arg(short, long)]
        grammar: PathBuf,
    },
    /// Spectral radius of the expectation matrix and the consistency verdict.
    Consistency {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(long, default_value_t = pcfg_gt_core::grammar::consistency::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Sentence probabilities.
    Inside {
        #[command(flatten)]
        input: Input,
    },
    /// Most probable derivation per sentence.
    Viterbi {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        no_tree: bool,
    },
    /// The n most probable derivations per sentence.
    Nbest {
        #[command(flatten)]
        input: Input,
        #[arg(short, long, default_value_t = 5)]
        n: usize,
        #[arg(long)]
        no_tree: bool,
    },
    /// Exhaustive derivation enumeration (small inputs only).
    OracleEnum {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = pcfg_gt_core::oracle::DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        no_tree: bool,
    },
    /// Iterate growth transformations.
    Train(TrainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct Input {
    #[arg(short, long)]
    pub grammar: PathBuf,
    /// One sentence per line, whitespace-separated tokens.
    #[arg(
        long,
        required_unless_present = "bracketed",
        conflicts_with = "bracketed"
    )]
    pub corpus: Option<PathBuf>,
    /// One parenthesized sentence per line; brackets constrain parsing.
    #[arg(long)]
    pub bracketed: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub min_prob: f64,
    /// viterbi | nbest:N | bracketed-viterbi
    #[arg(long = "ref", default_value = "viterbi", value_parser = parse_ref)]
    pub reference: RefMode,
    /// all | nbest:N | bracketed-all
    #[arg(long = "comp", default_value = "all", value_parser = parse_comp)]
    pub competing: CompMode,
    /// Do not add the reference derivations to the competing set.
    #[arg(long)]
    pub no_enforce_subset: bool,
    #[arg(long)]
    pub out_grammar: PathBuf,
    /// CSV with one row per iteration.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_n(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("`{s}` is not a positive integer")),
        Ok(n) => Ok(n),
    }
}

pub fn parse_ref(s: &str) -> Result<RefMode, String> {
    match s {
        "viterbi" => Ok(RefMode::Viterbi),
        "bracketed-viterbi" => Ok(RefMode::BracketedViterbi),
        _ => match s.strip_prefix("nbest:") {
            Some(n) => parse_n(n).map(RefMode::NBest),
            None => Err(format!(
                "unknown reference mode `{s}` (viterbi, nbest:N, bracketed-viterbi)"
            )),
        },
    }
}

pub fn parse_comp(s: &str) -> Result<CompMode, String> {
    match s {
        "all" => Ok(CompMode::All),
        "bracketed-all" => Ok(CompMode::BracketedAll),
        _ => match s.strip_prefix("nbest:") {
            Some(n) => parse_n(n).map(CompMode::NBest),
            None => Err(format!(
                "unknown competing mode `{s}` (all, nbest:N, bracketed-all)"
            )),
        },
    }
}

/// The single diagnostic line printed on failure.
pub fn error_line(e: &anyhow::Error) -> String {
    format!("error: {e:#}").replace('\n', " ")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_grammar(path: &Path) -> Result<Grammar> {
    parse_grammar(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load_sentences(input: &Input) -> Result<Vec<Sentence>> {
    match (&input.corpus, &input.bracketed) {
        (Some(path), _) => Ok(parse_corpus(&read(path)?)),
        (None, Some(path)) => {
            parse_bracketed_corpus(&read(path)?).with_context(|| format!("{}", path.display()))
        }
        (None, None) => bail!("no corpus given"),
    }
}

fn load_samples(g: &Grammar, sentences: &[Sentence], source: &Path) -> Result<Vec<Sample>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.to_sample(g)
                .with_context(|| format!("{}: sentence {i}", source.display()))
        })
        .collect()
}

fn corpus_path(input: &Input) -> &Path {
    input
        .corpus
        .as_deref()
        .or(input.bracketed.as_deref())
        .expect("clap requires a corpus")
}

fn load_input(input: &Input) -> Result<(Grammar, Vec<Sample>)> {
    let g = load_grammar(&input.grammar)?;
    let sentences = load_sentences(input)?;
    let samples = load_samples(&g, &sentences, corpus_path(input))?;
    Ok((g, samples))
}

fn tree_column(g: &Grammar, d: &Derivation, no_tree: bool) -> String {
    if no_tree {
        String::new()
    } else {
        format!("\t{}", d.to_bracketed(g))
    }
}

fn warning_text(w: &Warning) -> String {
    match w {
        Warning::Skipped { sentence, reason } => format!("sentence {sentence} skipped: {reason}"),
        Warning::Degenerate { sentence } => {
            format!("sentence {sentence}: reference and competing sets coincide")
        }
        Warning::CtildeRaised {
            iteration,
            doublings,
        } => {
            format!("iteration {iteration}: C~ doubled {doublings} time(s) to keep the objective from decreasing")
        }
        Warning::Floored { iteration, rules } => {
            format!("iteration {iteration}: {rules} rule probabilities floored at min_prob")
        }
        Warning::ExperimentalEta => {
            "eta != 1 is experimental (objective denominator uses eta = 1)".into()
        }
        Warning::Other(s) => s.clone(),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Validate { grammar } => validate(grammar, out),
        Command::Consistency {
            grammar,
            tol,
            format,
        } => {
            if !(*tol > 0.0) {
                bail!("--tol must be positive");
            }
            let g = load_grammar(grammar)?;
            let r = check_consistency(&g, *tol);
            match format {
                Format::Text => {
                    writeln!(out, "spectral_radius\t{}", sig(r.spectral_radius))?;
                    writeln!(out, "verdict\t{}", r.verdict.as_str())?;
                    writeln!(out, "iterations\t{}", r.iterations)?;
                    writeln!(out, "converged\t{}", r.converged)?;
                }
                Format::Csv => {
                    writeln!(out, "spectral_radius,verdict,iterations,converged")?;
                    writeln!(
                        out,
                        "{},{},{},{}",
                        exact(r.spectral_radius),
                        r.verdict.as_str(),
                        r.iterations,
                        r.converged
                    )?;
                }
            }
            if !r.converged {
                writeln!(diag, "warning: power iteration did not converge")?;
            }
            Ok(())
        }
        Command::Inside { input } => {
            let (g, samples) = load_input(input)?;
            for (i, s) in samples.iter().enumerate() {
                let chart = inside(&g, &s.tokens, s.brackets.as_ref())
                    .with_context(|| format!("sentence {i}"))?;
                let lp = chart.log_total().unwrap_or(f64::NEG_INFINITY);
                writeln!(out, "{i}\t{}\t{}", sig(lp), sig(lp.exp()))?;
            }
            Ok(())
        }
        Command::Viterbi { input, no_tree } => {
            let (g, samples) = load_input(input)?;
            for (i, s) in samples.iter().enumerate() {
                match viterbi(&g, &s.tokens, s.brackets.as_ref())
                    .with_context(|| format!("sentence {i}"))?
                {
                    Some(d) => writeln!(
                        out,
                        "{i}\t{}\t{}{}",
                        sig(d.log_prob()),
                        sig(d.log_prob().exp()),
                        tree_column(&g, &d, *no_tree)
                    )?,
                    None => writeln!(out, "{i}\t-inf\t0")?,
                }
            }
            Ok(())
        }
        Command::Nbest { input, n, no_tree } => {
            if *n == 0 {
                bail!("-n must be at least 1");
            }
            let (g, samples) = load_input(input)?;
            for (i, s) in samples.iter().enumerate() {
                let list = nbest(&g, &s.tokens, *n, s.brackets.as_ref())
                    .with_context(|| format!("sentence {i}"))?;
                if list.is_empty() {
                    writeln!(out, "{i}\t-\t-inf\t0")?;
                }
                for (rank, d) in list.derivations.iter().enumerate() {
                    writeln!(
                        out,
                        "{i}\t{}\t{}\t{}{}",
                        rank + 1,
                        sig(d.log_prob()),
                        sig(d.log_prob().exp()),
                        tree_column(&g, d, *no_tree)
                    )?;
                }
            }
            Ok(())
        }
        Command::OracleEnum {
            input,
            cap,
            no_tree,
        } => {
            let (g, samples) = load_input(input)?;
            for (i, s) in samples.iter().enumerate() {
                let all = enumerate_derivations(&g, &s.tokens, *cap)
                    .with_context(|| format!("sentence {i}"))?;
                let derivations = match &s.brackets {
                    Some(b) => all.compatible(&g, b),
                    None => all.derivations.clone(),
                };
                let total = match &s.brackets {
                    Some(_) => pcfg_gt_core::logspace::log_sum_exp(
                        &derivations
                            .iter()
                            .map(Derivation::log_prob)
                            .collect::<Vec<_>>(),
                    ),
                    None => all.total_log_prob,
                };
                for (rank, d) in derivations.iter().enumerate() {
                    writeln!(
                        out,
                        "{i}\t{}\t{}\t{}{}",
                        rank + 1,
                        sig(d.log_prob()),
                        sig(d.log_prob().exp()),
                        tree_column(&g, d, *no_tree)
                    )?;
                }
                writeln!(
                    out,
                    "{i}\ttotal\t{}\t{}\t{}",
                    sig(total),
                    sig(total.exp()),
                    derivations.len()
                )?;
            }
            Ok(())
        }
        Command::Train(args) => train_command(args, out, diag),
    }
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<()> {
    let g = load_grammar(path)?;
    writeln!(
        out,
        "ok\tstart={}\tnonterminals={}\tterminals={}\trules={}",
        g.nonterminal_name(g.start()),
        g.num_nonterminals(),
        g.num_terminals(),
        g.num_rules()
    )?;
    let mut reachable = vec![false; g.num_nonterminals()];
    let mut stack = vec![g.start()];
    reachable[g.start().index()] = true;
    while let Some(a) = stack.pop() {
        for &r in g.rules_of(a) {
            if let Rhs::Binary(b, c) = g.rule(r).rhs {
                for x in [b, c] {
                    if !reachable[x.index()] {
                        reachable[x.index()] = true;
                        stack.push(x);
                    }
                }
            }
        }
    }
    for a in g.nonterminals() {
        let name = g.nonterminal_name(a);
        if g.rules_of(a).is_empty() {
            writeln!(out, "note\tnonterminal {name} has no rules")?;
        }
        if !reachable[a.index()] {
            writeln!(
                out,
                "note\tnonterminal {name} is unreachable from the start symbol"
            )?;
        }
    }
    Ok(())
}

fn train_command(args: &TrainArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    let params = HParams {
        h: args.h,
        eta: args.eta,
        epsilon: args.epsilon,
        max_iters: args.iters,
        rel_tol: args.rel_tol,
        min_prob: args.min_prob,
    };
    let spec = DeltaSpec {
        enforce_subset: !args.no_enforce_subset,
        ..DeltaSpec::new(args.reference, args.competing)
    };
    params.validate()?;
    spec.validate()?;
    if spec.needs_brackets() && args.input.bracketed.is_none() {
        bail!("bracketed reference/competing modes require --bracketed");
    }

    let (g, samples) = load_input(&args.input)?;
    let report = train(&g, &samples, &spec, &params)?;
    for w in &report.warnings {
        writeln!(diag, "warning: {}", warning_text(w))?;
    }
    for r in &report.records {
        writeln!(
            out,
            "iter {}\tlog_objective {}",
            r.iteration,
            sig(r.log_objective)
        )?;
    }
    writeln!(out, "converged {}", report.converged)?;
    fs::write(&args.out_grammar, serialize(&report.grammar))
        .with_context(|| format!("writing {}", args.out_grammar.display()))?;
    if let Some(path) = &args.report {
        fs::write(path, report_csv(&report.records))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
