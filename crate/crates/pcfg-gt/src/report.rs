//! Training report CSV.

use std::fmt::Write;

use pcfg_gt_core::estimator::IterationRecord;

use crate::number::exact;

pub const CSV_HEADER: &str = "iter,log_objective,ctilde,max_delta_p,spectral_radius,skipped";

/// One row per iteration, values in shortest round-trip form.
pub fn report_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            exact(r.log_objective),
            exact(r.ctilde),
            exact(r.max_delta_p),
            exact(r.spectral_radius),
            r.skipped
        );
    }
    out
}
