use alloc::vec::Vec;

use super::accumulate::accumulate_selected;
use super::delta::{select_deltas, set_log_mass, Selection};
use super::transform::{compute_ctilde, finalize, growth_step_raw, max_abs_change};
use super::{DeltaSpec, HParams, Warning};
use crate::grammar::{check_consistency, consistency::DEFAULT_TOL};
use crate::logspace::abs;
use crate::{Error, Grammar, Result, Sample};

/// `ln F̃_h = Σ_x [ln P^η(x, Δʳ_x) − h ln P(x, Δᶜ_x)]` over the non-skipped
/// sentences of an existing selection, evaluated under `g`.
pub fn objective_selected(
    g: &Grammar,
    samples: &[Sample],
    selection: &Selection,
    h: f64,
    eta: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for (sample, deltas) in samples.iter().zip(&selection.sentences) {
        let Some(deltas) = deltas else { continue };
        let num = set_log_mass(g, &sample.tokens, &deltas.reference, eta)?;
        let den = set_log_mass(g, &sample.tokens, &deltas.competing, 1.0)?;
        total += num - h * den;
        used += 1;
    }
    if used == 0 {
        return Err(if samples.is_empty() {
            Error::EmptyCorpus
        } else {
            Error::AllSkipped
        });
    }
    Ok(total)
}

/// Select the sets under `g` and evaluate `ln F̃_h`.
pub fn objective(
    g: &Grammar,
    samples: &[Sample],
    spec: &DeltaSpec,
    params: &HParams,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let selection = select_deltas(g, samples, spec)?;
    objective_selected(g, samples, &selection, params.h, params.eta)
}

/// Relative slack when checking that a step did not lower the frozen objective.
const GROWTH_SLACK: f64 = 1e-12;
/// Upper bound on C̃ doublings in one step.
const MAX_DOUBLINGS: usize = 64;

/// Outcome of one guarded growth transformation.
#[derive(Debug, Clone)]
pub struct Step {
    pub grammar: Grammar,
    /// C̃ actually used.
    pub ctilde: f64,
    /// How often C̃ was doubled beyond the approximation.
    pub doublings: usize,
    pub floored: usize,
    /// `ln F̃_h` before and after the step, on the frozen selection.
    pub before: f64,
    pub after: f64,
}

/// One growth transformation with the sets of `selection` held fixed.
///
/// C̃ starts at [`compute_ctilde`]; the approximation does not always give
/// growth, so C̃ is doubled until the frozen objective does not decrease
/// (a large enough constant always exists).
pub fn guarded_step(
    g: &Grammar,
    samples: &[Sample],
    selection: &Selection,
    params: &HParams,
) -> Result<Step> {
    let acc = accumulate_selected(g, samples, selection, params.eta)?;
    let before = objective_selected(g, samples, selection, params.h, params.eta)?;
    let mut ctilde = compute_ctilde(&acc, g, params.h, params.epsilon);
    let mut doublings = 0;
    loop {
        let raw = growth_step_raw(g, &acc, params.h, ctilde)?;
        let (grammar, floored) = finalize(g, raw, params.min_prob)?;
        let after = objective_selected(&grammar, samples, selection, params.h, params.eta)?;
        if after >= before - GROWTH_SLACK * abs(before).max(1.0) || doublings == MAX_DOUBLINGS {
            return Ok(Step {
                grammar,
                ctilde,
                doublings,
                floored,
                before,
                after,
            });
        }
        ctilde *= 2.0;
        doublings += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 0 is the initial grammar.
    pub iteration: usize,
    pub log_objective: f64,
    pub ctilde: f64,
    pub max_delta_p: f64,
    pub spectral_radius: f64,
    pub skipped: usize,
    /// Rules floored at `min_prob` in this step.
    pub floored: usize,
    /// C̃ doublings needed for growth in this step.
    pub doublings: usize,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub records: Vec<IterationRecord>,
    pub grammar: Grammar,
    pub warnings: Vec<Warning>,
    /// The relative-change criterion fired before `max_iters`.
    pub converged: bool,
}

/// Iterate {select Δ sets → accumulate → C̃ → growth step → evaluate} from `g0`.
pub fn train(
    g0: &Grammar,
    samples: &[Sample],
    spec: &DeltaSpec,
    params: &HParams,
) -> Result<TrainReport> {
    params.validate()?;
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut warnings = Vec::new();
    if params.eta != 1.0 {
        warnings.push(Warning::ExperimentalEta);
    }

    let mut grammar = g0.clone();
    let mut selection = select_deltas(&grammar, samples, spec)?;
    warnings.extend(selection.warnings.iter().cloned());
    let mut current = objective_selected(&grammar, samples, &selection, params.h, params.eta)?;
    let mut records = Vec::with_capacity(params.max_iters + 1);
    records.push(IterationRecord {
        iteration: 0,
        log_objective: current,
        ctilde: 0.0,
        max_delta_p: 0.0,
        spectral_radius: check_consistency(&grammar, DEFAULT_TOL).spectral_radius,
        skipped: selection.skipped(),
        floored: 0,
        doublings: 0,
    });

    let mut converged = false;
    for iteration in 1..=params.max_iters {
        let ctx = |e: Error| Error::InIteration {
            iteration,
            source: alloc::boxed::Box::new(e),
        };
        let step = guarded_step(&grammar, samples, &selection, params).map_err(ctx)?;
        let (next, ctilde, floored) = (step.grammar, step.ctilde, step.floored);
        if floored > 0 {
            warnings.push(Warning::Floored {
                iteration,
                rules: floored,
            });
        }
        if step.doublings > 0 {
            warnings.push(Warning::CtildeRaised {
                iteration,
                doublings: step.doublings,
            });
        }

        selection = select_deltas(&next, samples, spec).map_err(ctx)?;
        let value =
            objective_selected(&next, samples, &selection, params.h, params.eta).map_err(ctx)?;
        records.push(IterationRecord {
            iteration,
            log_objective: value,
            ctilde,
            max_delta_p: max_abs_change(&grammar, &next),
            spectral_radius: check_consistency(&next, DEFAULT_TOL).spectral_radius,
            skipped: selection.skipped(),
            floored,
            doublings: step.doublings,
        });
        grammar = next;

        let change = abs(value - current) / abs(current).max(f64::MIN_POSITIVE);
        current = value;
        if change < params.rel_tol {
            converged = true;
            break;
        }
    }

    for w in &selection.warnings {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    Ok(TrainReport {
        records,
        grammar,
        warnings,
        converged,
    })
}
