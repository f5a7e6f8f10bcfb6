//! Report rendering: JSON envelopes and commented CSV.

use serde::Serialize;

use crate::commands::RocRow;
use crate::error::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema: u32,
    command: &'a str,
    rows: &'a [T],
}

pub fn json<T: Serialize>(command: &str, rows: &[T]) -> Result<String, CliError> {
    let env = Envelope {
        schema: SCHEMA,
        command,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&env)
        .map_err(|e| CliError::Input(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// ROC rows as CSV, preceded by `#` comment lines describing the columns.
/// Simulated columns are empty when no simulation was run.
pub fn roc_csv(rows: &[RocRow], runs: u64, seed: u64) -> Result<String, CliError> {
    let mut out = String::new();
    out.push_str("# tcdkit roc, schema 1\n");
    out.push_str(&format!("# runs = {runs}, seed = {seed}\n"));
    out.push_str("# alpha: false-alarm requirement; h: threshold it implies\n");
    out.push_str("# pfa_bound, pmd_bound: analytic worst-case bounds at h\n");
    out.push_str("# pfa_hat, pmd_hat: Monte-Carlo estimates with their standard errors\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Input(format!("writing csv: {e}")))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Input(format!("writing csv: {e}")))?;
    if rows.is_empty() {
        out.push_str(
            "metric,method,alpha,h,pfa_bound,pmd_bound,pfa_hat,pfa_stderr,pmd_hat,pmd_stderr\n",
        );
    }
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}
