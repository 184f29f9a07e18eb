use rayon::prelude::*;

use super::{parse_script, run, RunOptions, RunReport, SweepError};
use crate::dynamics::SWEEP_CSV_HEADER;

/// Replace every `${var}` in `template`.
pub fn substitute(template: &str, var: &str, value: &str) -> Result<String, SweepError> {
    let pattern = format!("${{{var}}}");
    if !template.contains(&pattern) {
        return Err(SweepError::MissingVariable(var.to_string()));
    }
    Ok(template.replace(&pattern, value))
}

/// One grid point: the substituted value and its report.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub report: RunReport,
}

impl SweepRow {
    /// Oracle columns come from the last `oracle` statement and are empty
    /// when the script has none.
    pub fn csv_line(&self) -> String {
        let r = &self.report;
        let oracle = match r.oracle.last() {
            Some(o) => o.point.csv_fields(),
            None => format!("{:e},,,,,,", r.regime.delta_over_omega_r),
        };
        format!(
            "{},{oracle},{},{:e},{}",
            self.value,
            r.regime.status,
            r.regime.interaction_time,
            r.expects_failed()
        )
    }
}

pub fn sweep_csv_header(var: &str) -> String {
    format!("{var},{SWEEP_CSV_HEADER},regime,interaction_time,expects_failed")
}

/// Run the template once per grid value, in parallel. Rows keep grid order.
pub fn sweep(
    template: &str,
    var: &str,
    grid: &[String],
    opts: &RunOptions,
) -> Result<Vec<SweepRow>, SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let pattern = format!("${{{var}}}");
    if !template.contains(&pattern) {
        return Err(SweepError::MissingVariable(var.to_string()));
    }
    grid.par_iter()
        .map(|value| {
            let text = substitute(template, var, value)?;
            let script = parse_script(&text)
                .map_err(|source| SweepError::Parse { value: value.clone(), source })?;
            let report = run(&script, opts)
                .map_err(|source| SweepError::Run { value: value.clone(), source })?;
            Ok(SweepRow { value: value.clone(), report })
        })
        .collect()
}

/// Header plus one line per row.
pub fn to_csv(var: &str, rows: &[SweepRow]) -> String {
    let mut out = sweep_csv_header(var);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}
