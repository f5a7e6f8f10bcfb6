//! Batch commands. Each returns typed rows; rendering lives in `output`.

use std::path::Path;

use serde::Serialize;
use tcdkit::bounds::{AnalyticBounds, ThresholdRule};
use tcdkit::detectors::{DetectorKind, DetectorState};
use tcdkit::model::ChangeModel;
use tcdkit::montecarlo::{self, SimEstimate, SimScenario};
use tcdkit::sigraim::{self, TcdConfig};

use crate::config::{MetricConfig, RunConfig};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub metric: String,
    pub method: String,
    pub alpha_tilde: f64,
    pub h: f64,
    pub m: usize,
    pub m_alpha: usize,
    pub rule: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub metric: String,
    pub method: String,
    pub alpha_tilde: f64,
    pub h: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
    pub m: usize,
    pub m_alpha: usize,
    pub rule: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocRow {
    pub metric: String,
    pub method: String,
    pub alpha: f64,
    pub h: f64,
    pub pfa_bound: f64,
    pub pmd_bound: f64,
    pub pfa_hat: Option<f64>,
    pub pfa_stderr: Option<f64>,
    pub pmd_hat: Option<f64>,
    pub pmd_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub metric: String,
    pub method: String,
    pub alpha_tilde: f64,
    pub h: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
    pub pfa: SimEstimate,
    pub pmd: SimEstimate,
    /// Onset giving the reported (worst) missed-detection estimate.
    pub onset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvailabilityRow {
    pub metric: String,
    pub method: String,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub h: f64,
    pub beta_bound: f64,
    pub available: bool,
    pub m: usize,
    pub m_alpha: usize,
    pub rule: ThresholdRule,
    pub model: ChangeModel,
    pub tcd: TcdConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionEvent {
    pub stream: String,
    pub metric: String,
    pub method: String,
    pub h: f64,
    /// 1-based position of the alarming sample in the stream.
    pub alarm_index: u64,
    pub statistic: f64,
    /// The `n` column of the alarming row.
    pub sample: f64,
}

/// Settings the command line may override.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub rule: Option<ThresholdRule>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(rule) = self.rule {
            config.threshold_rule = rule;
        }
    }
}

fn for_each_pair<T>(
    config: &RunConfig,
    mut f: impl FnMut(&MetricConfig, DetectorKind) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    for metric in &config.metrics {
        for kind in metric.kinds(&config.methods)? {
            rows.extend(f(metric, kind)?);
        }
    }
    Ok(rows)
}

pub fn cmd_threshold(config: &RunConfig) -> Result<Vec<ThresholdRow>> {
    for_each_pair(config, |metric, kind| {
        let bounds = AnalyticBounds::new(&metric.model, metric.m, metric.m_alpha)?;
        config
            .alpha_levels
            .iter()
            .map(|&alpha_tilde| {
                Ok(ThresholdRow {
                    metric: metric.name.clone(),
                    method: kind.name().into(),
                    alpha_tilde,
                    h: bounds.threshold(kind, alpha_tilde, config.threshold_rule)?,
                    m: metric.m,
                    m_alpha: metric.m_alpha,
                    rule: config.threshold_rule,
                })
            })
            .collect()
    })
}

pub fn cmd_bounds(config: &RunConfig) -> Result<Vec<BoundRow>> {
    for_each_pair(config, |metric, kind| {
        let bounds = AnalyticBounds::new(&metric.model, metric.m, metric.m_alpha)?;
        config
            .alpha_levels
            .iter()
            .map(|&alpha_tilde| {
                let r = bounds.report(kind, alpha_tilde, config.threshold_rule)?;
                Ok(BoundRow {
                    metric: metric.name.clone(),
                    method: kind.name().into(),
                    alpha_tilde,
                    h: r.h,
                    alpha_bound: r.alpha_bound,
                    beta_bound: r.beta_bound,
                    m: r.m,
                    m_alpha: r.m_alpha,
                    rule: r.rule,
                })
            })
            .collect()
    })
}

/// Analytic ROC over the alpha grid, plus simulated probabilities when
/// `runs > 0`.
pub fn cmd_roc(config: &RunConfig) -> Result<Vec<RocRow>> {
    for_each_pair(config, |metric, kind| {
        let tcd = metric.tcd(config.alpha_levels[0], config.beta_tilde);
        let rows = if config.runs > 0 {
            montecarlo::simulate_roc(
                &metric.model,
                kind,
                &config.alpha_grid,
                &tcd,
                config.threshold_rule,
                config.runs,
                config.seed,
            )?
            .into_iter()
            .map(|p| RocRow {
                metric: metric.name.clone(),
                method: kind.name().into(),
                alpha: p.alpha_target,
                h: p.h,
                pfa_bound: p.alpha_bound,
                pmd_bound: p.beta_bound,
                pfa_hat: Some(p.pfa_hat),
                pfa_stderr: Some(p.pfa_stderr),
                pmd_hat: Some(p.pmd_hat),
                pmd_stderr: Some(p.pmd_stderr),
            })
            .collect()
        } else {
            let bounds = AnalyticBounds::new(&metric.model, metric.m, metric.m_alpha)?;
            tcdkit::bounds::bound_roc(
                &metric.model,
                kind,
                &config.alpha_grid,
                &tcd,
                config.threshold_rule,
            )?
            .into_iter()
            .map(|p| {
                Ok(RocRow {
                    metric: metric.name.clone(),
                    method: kind.name().into(),
                    alpha: p.alpha_tilde,
                    h: p.h,
                    pfa_bound: bounds.alpha_bound(kind, p.h)?,
                    pmd_bound: p.beta_bound,
                    pfa_hat: None,
                    pfa_stderr: None,
                    pmd_hat: None,
                    pmd_stderr: None,
                })
            })
            .collect::<Result<Vec<_>>>()?
        };
        Ok(rows)
    })
}

/// Simulated false alarm and worst-case missed detection at the threshold
/// each configured `alpha_tilde` implies.
pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<SimulateRow>> {
    if config.runs == 0 {
        return Err(CliError::Config(
            "montecarlo.runs must be at least 1 for simulate".into(),
        ));
    }
    for_each_pair(config, |metric, kind| {
        let bounds = AnalyticBounds::new(&metric.model, metric.m, metric.m_alpha)?;
        config
            .alpha_levels
            .iter()
            .map(|&alpha_tilde| {
                let h = bounds.threshold(kind, alpha_tilde, config.threshold_rule)?;
                let s = SimScenario {
                    model: metric.model,
                    kind,
                    h,
                    m: metric.m,
                    m_alpha: metric.m_alpha,
                    v: None,
                    runs: config.runs,
                    seed: config.seed,
                };
                let pfa = montecarlo::simulate_pfa(&s)?;
                let onsets = if config.onsets.is_empty() {
                    vec![metric.m + 1]
                } else {
                    config.onsets.clone()
                };
                let (onset, pmd) = montecarlo::simulate_pmd_sweep(
                    &SimScenario {
                        seed: !config.seed,
                        ..s
                    },
                    &onsets,
                )?;
                Ok(SimulateRow {
                    metric: metric.name.clone(),
                    method: kind.name().into(),
                    alpha_tilde,
                    h,
                    alpha_bound: bounds.alpha_bound(kind, h)?,
                    beta_bound: bounds.beta_bound(kind, h)?,
                    pfa,
                    pmd,
                    onset,
                })
            })
            .collect()
    })
}

/// One availability verdict per metric, method and `alpha_tilde`.
pub fn cmd_availability(config: &RunConfig) -> Result<Vec<AvailabilityRow>> {
    for_each_pair(config, |metric, kind| {
        config
            .alpha_levels
            .iter()
            .map(|&alpha_tilde| {
                let tcd = metric.tcd(alpha_tilde, config.beta_tilde);
                let r = sigraim::availability(
                    &metric.name,
                    &metric.model,
                    &tcd,
                    kind,
                    config.threshold_rule,
                )?;
                Ok(AvailabilityRow {
                    metric: r.metric,
                    method: kind.name().into(),
                    alpha_tilde,
                    beta_tilde: config.beta_tilde,
                    h: r.h,
                    beta_bound: r.beta_bound,
                    available: r.available,
                    m: metric.m,
                    m_alpha: metric.m_alpha,
                    rule: r.rule,
                    model: r.model,
                    tcd: r.config,
                })
            })
            .collect()
    })
}

/// Read a `n,value` CSV stream.
pub fn read_stream(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_stream(file, &path.display().to_string())
}

pub fn parse_stream<R: std::io::Read>(reader: R, name: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "n" || &headers[1] != "value" {
        return Err(CliError::Input(format!(
            "{name}: expected header 'n,value'"
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Row 1 is the header.
        let row = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("{name}: row {row}: {e}")))?;
        let field = |k: usize, what: &str| -> Result<f64> {
            let s = record.get(k).unwrap_or("").trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "{name}: row {row}: {what} '{s}' is not a finite number"
                    ))
                })
        };
        let (n, value) = (field(0, "n")?, field(1, "value")?);
        if let Some(&(prev, _)) = rows.last() {
            if n <= prev {
                return Err(CliError::Input(format!(
                    "{name}: row {row}: n = {n} does not increase"
                )));
            }
        }
        rows.push((n, value));
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{name}: no samples")));
    }
    Ok(rows)
}

/// Run every configured detector over one metric stream.
///
/// Thresholds come from `detect.thresholds` when set, otherwise from the
/// analytic rule at the first configured `alpha_tilde`.
pub fn cmd_detect(
    config: &RunConfig,
    metric: &MetricConfig,
    stream: &str,
    samples: &[(f64, f64)],
) -> Result<Vec<DetectionEvent>> {
    let bounds = AnalyticBounds::new(&metric.model, metric.m, metric.m_alpha)?;
    let mut events = Vec::new();
    for kind in metric.kinds(&config.methods)? {
        let h = match config.detect_thresholds.get(kind.name()) {
            Some(&h) => h,
            None => bounds.threshold(kind, config.alpha_levels[0], config.threshold_rule)?,
        };
        let mut det = DetectorState::new(kind, h)?;
        for &(n, x) in samples {
            if let Some(alarm) = det.step(metric.model.llr(x))? {
                events.push(DetectionEvent {
                    stream: stream.to_string(),
                    metric: metric.name.clone(),
                    method: kind.name().into(),
                    h,
                    alarm_index: alarm.stop_index,
                    statistic: alarm.statistic,
                    sample: n,
                });
                break;
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_parsing() {
        let ok = parse_stream("n,value\n1,0.5\n2,-1e-3\n".as_bytes(), "s").unwrap();
        assert_eq!(ok, [(1.0, 0.5), (2.0, -1e-3)]);
        let err = parse_stream("n,value\n1,0.5\n2,abc\n".as_bytes(), "s")
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3") && err.contains("abc"), "{err}");
        let err = parse_stream("n,value\n2,0.5\n1,0.1\n".as_bytes(), "s")
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(parse_stream("".as_bytes(), "s").is_err());
        assert!(parse_stream("n,value\n".as_bytes(), "s").is_err());
        assert!(parse_stream("t,x\n1,2\n".as_bytes(), "s").is_err());
    }
}
