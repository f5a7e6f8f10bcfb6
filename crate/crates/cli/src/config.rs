//! TOML run configuration.
//!
//! ```toml
//! [tcd]
//! fs = 1.0            # Hz
//! t_tta = 6.0         # s, gives m = round(fs * t_tta)
//! t_alpha = 60.0      # s, gives m_alpha
//! alpha_tilde = 0.01  # or a list
//! beta_tilde = 0.01
//!
//! [metric.cn0]
//! kind = "mean"       # mean | variance | general
//! mu0 = 25118.86
//! sigma2 = 6.94e7
//! mu1_tuned = 5011.87
//! mu1_actual = 2511.89
//!
//! [detectors]
//! methods = ["fma", "cusum"]
//! threshold_rule = "corollary"
//!
//! [roc]
//! alpha_grid = [0.001, 0.01, 0.1]
//!
//! [montecarlo]
//! runs = 10000
//! seed = 1
//! ```
//!
//! Any metric may override the windows (`m`, `m_alpha`, `fs`, `t_tta`,
//! `t_alpha`) and may take its tuned change from a tuning table instead of
//! explicit `*_tuned` values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use tcdkit::bounds::ThresholdRule;
use tcdkit::detectors::DetectorKind;
use tcdkit::model::{ChangeModel, GaussianSpec, TuningTable};
use tcdkit::sigraim::TcdConfig;
use tcdkit::stats::Probability;

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    tcd: RawTcd,
    #[serde(default)]
    metric: BTreeMap<String, RawMetric>,
    #[serde(default)]
    detectors: RawDetectors,
    #[serde(default)]
    roc: RawRoc,
    #[serde(default)]
    montecarlo: RawMonteCarlo,
    #[serde(default)]
    detect: RawDetect,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindows {
    fs: Option<f64>,
    t_tta: Option<f64>,
    t_alpha: Option<f64>,
    m: Option<usize>,
    m_alpha: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTcd {
    fs: Option<f64>,
    t_tta: Option<f64>,
    t_alpha: Option<f64>,
    m: Option<usize>,
    m_alpha: Option<usize>,
    alpha_tilde: OneOrMany,
    beta_tilde: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    kind: String,
    mu0: Option<f64>,
    sigma2: Option<f64>,
    mu1_tuned: Option<f64>,
    mu1_actual: Option<f64>,
    sigma2_0: Option<f64>,
    sigma2_1_tuned: Option<f64>,
    sigma2_1_actual: Option<f64>,
    tuning: Option<RawTuning>,
    fs: Option<f64>,
    t_tta: Option<f64>,
    t_alpha: Option<f64>,
    m: Option<usize>,
    m_alpha: Option<usize>,
}

/// Tuned change from a tolerable error: rows are `[epsilon, p1, ...]` with
/// `p = [mu1]` (mean), `[sigma2_1]` (variance) or `[mu1, sigma2_1]` (general).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTuning {
    epsilon: f64,
    table: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectors {
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    #[serde(default)]
    threshold_rule: Option<String>,
}

impl Default for RawDetectors {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            threshold_rule: None,
        }
    }
}

fn default_methods() -> Vec<String> {
    vec!["fma".into(), "cusum".into()]
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoc {
    alpha_grid: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    #[serde(default = "default_runs")]
    runs: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    v: Vec<usize>,
}

impl Default for RawMonteCarlo {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            seed: 0,
            v: Vec::new(),
        }
    }
}

fn default_runs() -> u64 {
    10_000
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetect {
    #[serde(default)]
    thresholds: BTreeMap<String, f64>,
}

/// One monitored metric with its resolved windows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub name: String,
    pub model: ChangeModel,
    pub m: usize,
    pub m_alpha: usize,
    pub fs: Option<f64>,
    pub t_tta: Option<f64>,
    pub t_alpha: Option<f64>,
}

impl MetricConfig {
    pub fn tcd(&self, alpha_tilde: f64, beta_tilde: f64) -> TcdConfig {
        TcdConfig {
            m: self.m,
            m_alpha: self.m_alpha,
            alpha_tilde,
            beta_tilde,
            fs: self.fs,
            t_tta: self.t_tta,
            t_alpha: self.t_alpha,
        }
    }

    /// Detector kinds for the configured method names, windowed with `m`.
    pub fn kinds(&self, methods: &[String]) -> Result<Vec<DetectorKind>> {
        methods
            .iter()
            .map(|name| {
                DetectorKind::from_name(name, self.m)
                    .map_err(|e| CliError::Config(format!("detectors.methods: {e}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub metrics: Vec<MetricConfig>,
    pub alpha_levels: Vec<f64>,
    pub beta_tilde: f64,
    pub methods: Vec<String>,
    pub threshold_rule: ThresholdRule,
    pub alpha_grid: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
    /// Change onsets to sweep for missed detection; empty means `m + 1`.
    pub onsets: Vec<usize>,
    /// Fixed detection thresholds by method name.
    pub detect_thresholds: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let global = RawWindows {
            fs: raw.tcd.fs,
            t_tta: raw.tcd.t_tta,
            t_alpha: raw.tcd.t_alpha,
            m: raw.tcd.m,
            m_alpha: raw.tcd.m_alpha,
        };

        let alpha_levels = raw.tcd.alpha_tilde.into_vec();
        if alpha_levels.is_empty() {
            return Err(CliError::Config("tcd.alpha_tilde: empty list".into()));
        }
        for &a in &alpha_levels {
            open_prob("tcd.alpha_tilde", a)?;
        }
        Probability::new(raw.tcd.beta_tilde)
            .map_err(|e| CliError::Config(format!("tcd.beta_tilde: {e}")))?;

        if raw.metric.is_empty() {
            return Err(CliError::Config(
                "no models: add at least one [metric.<name>] table".into(),
            ));
        }
        let metrics = raw
            .metric
            .into_iter()
            .map(|(name, m)| resolve_metric(name, m, &global))
            .collect::<Result<Vec<_>>>()?;

        let threshold_rule = match raw.detectors.threshold_rule.as_deref() {
            None => ThresholdRule::default(),
            Some(s) => s
                .parse()
                .map_err(|e| CliError::Config(format!("detectors.threshold_rule: {e}")))?,
        };
        if raw.detectors.methods.is_empty() {
            return Err(CliError::Config("detectors.methods: empty list".into()));
        }
        for metric in &metrics {
            metric.kinds(&raw.detectors.methods)?;
        }

        let alpha_grid = raw.roc.alpha_grid.unwrap_or_else(|| alpha_levels.clone());
        for &a in &alpha_grid {
            open_prob("roc.alpha_grid", a)?;
        }
        for name in raw.detect.thresholds.keys() {
            if !raw
                .detectors
                .methods
                .iter()
                .any(|m| m.eq_ignore_ascii_case(name))
            {
                return Err(CliError::Config(format!(
                    "detect.thresholds.{name}: method is not listed in detectors.methods"
                )));
            }
        }
        for metric in &metrics {
            if let Some(&v) = raw.montecarlo.v.iter().find(|&&v| v <= metric.m) {
                return Err(CliError::Config(format!(
                    "montecarlo.v: onset {v} must exceed m = {} of metric '{}'",
                    metric.m, metric.name
                )));
            }
        }

        Ok(Self {
            metrics,
            alpha_levels,
            beta_tilde: raw.tcd.beta_tilde,
            methods: raw
                .detectors
                .methods
                .iter()
                .map(|m| m.to_ascii_lowercase())
                .collect(),
            threshold_rule,
            alpha_grid,
            runs: raw.montecarlo.runs,
            seed: raw.montecarlo.seed,
            onsets: raw.montecarlo.v,
            detect_thresholds: raw
                .detect
                .thresholds
                .into_iter()
                .map(|(k, v)| (k.to_ascii_lowercase(), v))
                .collect(),
        })
    }

    pub fn metric(&self, name: &str) -> Result<&MetricConfig> {
        self.metrics.iter().find(|m| m.name == name).ok_or_else(|| {
            let known: Vec<_> = self.metrics.iter().map(|m| m.name.as_str()).collect();
            CliError::Config(format!(
                "unknown metric '{name}' (configured: {})",
                known.join(", ")
            ))
        })
    }
}

fn open_prob(field: &str, value: f64) -> Result<()> {
    Probability::open(value)
        .map(|_| ())
        .map_err(|e| CliError::Config(format!("{field}: {e}")))
}

/// `(m, m_alpha, fs, t_tta, t_alpha)` with metric values taking precedence.
type Windows = (usize, usize, Option<f64>, Option<f64>, Option<f64>);

fn resolve_windows(field: &str, local: &RawWindows, global: &RawWindows) -> Result<Windows> {
    let fs = local.fs.or(global.fs);
    let t_tta = local.t_tta.or(global.t_tta);
    let t_alpha = local.t_alpha.or(global.t_alpha);
    let from_time = |t: Option<f64>, what: &str| -> Result<Option<usize>> {
        match (fs, t) {
            (Some(fs), Some(t)) => {
                let n = (fs * t).round();
                if !(n >= 1.0 && n.is_finite()) {
                    return Err(CliError::Config(format!(
                        "{field}: fs * {what} = {} rounds below one sample",
                        fs * t
                    )));
                }
                Ok(Some(n as usize))
            }
            _ => Ok(None),
        }
    };
    let m = local.m.or(global.m).or(from_time(t_tta, "t_tta")?);
    let m_alpha = local
        .m_alpha
        .or(global.m_alpha)
        .or(from_time(t_alpha, "t_alpha")?);
    match (m, m_alpha) {
        (Some(m), Some(ma)) if m >= 1 && ma >= 1 => Ok((m, ma, fs, t_tta, t_alpha)),
        (Some(0), _) | (_, Some(0)) => Err(CliError::Config(format!(
            "{field}: m and m_alpha must be at least 1"
        ))),
        _ => Err(CliError::Config(format!(
            "{field}: cannot determine m and m_alpha (give m/m_alpha or fs with t_tta/t_alpha)"
        ))),
    }
}

fn resolve_metric(name: String, raw: RawMetric, global: &RawWindows) -> Result<MetricConfig> {
    let field = format!("metric.{name}");
    let local = RawWindows {
        fs: raw.fs,
        t_tta: raw.t_tta,
        t_alpha: raw.t_alpha,
        m: raw.m,
        m_alpha: raw.m_alpha,
    };
    let (m, m_alpha, fs, t_tta, t_alpha) = resolve_windows(&field, &local, global)?;

    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| CliError::Config(format!("{field}.{key}: missing")))
    };
    let reject = |present: bool, key: &str| {
        if present {
            Err(CliError::Config(format!(
                "{field}.{key}: not a parameter of kind '{}'",
                raw.kind
            )))
        } else {
            Ok(())
        }
    };
    let tuned_from_table = |width: usize, explicit: bool| -> Result<Option<Vec<f64>>> {
        let Some(t) = &raw.tuning else {
            return Ok(None);
        };
        if explicit {
            return Err(CliError::Config(format!(
                "{field}: give either explicit tuned parameters or a tuning table, not both"
            )));
        }
        let points = t
            .table
            .iter()
            .map(|row| match row.split_first() {
                Some((eps, rest)) if rest.len() == width => Ok((*eps, rest.to_vec())),
                _ => Err(CliError::Config(format!(
                    "{field}.tuning.table: each row needs epsilon plus {width} value(s)"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let table = TuningTable::new(points)
            .map_err(|e| CliError::Config(format!("{field}.tuning: {e}")))?;
        table
            .tuned_from_error(t.epsilon)
            .map(Some)
            .map_err(|e| CliError::Config(format!("{field}.tuning.epsilon: {e}")))
    };

    let model = match raw.kind.as_str() {
        "mean" => {
            reject(raw.sigma2_0.is_some(), "sigma2_0")?;
            reject(raw.sigma2_1_tuned.is_some(), "sigma2_1_tuned")?;
            reject(raw.sigma2_1_actual.is_some(), "sigma2_1_actual")?;
            let tuned = match tuned_from_table(1, raw.mu1_tuned.is_some())? {
                Some(p) => p[0],
                None => need(raw.mu1_tuned, "mu1_tuned")?,
            };
            ChangeModel::mean_change(
                need(raw.mu0, "mu0")?,
                need(raw.sigma2, "sigma2")?,
                tuned,
                raw.mu1_actual.unwrap_or(tuned),
            )
        }
        "variance" => {
            reject(raw.mu0.is_some(), "mu0")?;
            reject(raw.sigma2.is_some(), "sigma2")?;
            reject(raw.mu1_tuned.is_some(), "mu1_tuned")?;
            reject(raw.mu1_actual.is_some(), "mu1_actual")?;
            let tuned = match tuned_from_table(1, raw.sigma2_1_tuned.is_some())? {
                Some(p) => p[0],
                None => need(raw.sigma2_1_tuned, "sigma2_1_tuned")?,
            };
            ChangeModel::variance_change(
                need(raw.sigma2_0, "sigma2_0")?,
                tuned,
                raw.sigma2_1_actual.unwrap_or(tuned),
            )
        }
        "general" => {
            reject(raw.sigma2.is_some(), "sigma2")?;
            let explicit = raw.mu1_tuned.is_some() || raw.sigma2_1_tuned.is_some();
            let (mu1, s1) = match tuned_from_table(2, explicit)? {
                Some(p) => (p[0], p[1]),
                None => (
                    need(raw.mu1_tuned, "mu1_tuned")?,
                    need(raw.sigma2_1_tuned, "sigma2_1_tuned")?,
                ),
            };
            let spec = |mu, s2, what: &str| {
                GaussianSpec::new(mu, s2)
                    .map_err(|e| CliError::Config(format!("{field} ({what}): {e}")))
            };
            ChangeModel::general_change(
                spec(
                    need(raw.mu0, "mu0")?,
                    need(raw.sigma2_0, "sigma2_0")?,
                    "pre-change",
                )?,
                spec(mu1, s1, "tuned")?,
                spec(
                    raw.mu1_actual.unwrap_or(mu1),
                    raw.sigma2_1_actual.unwrap_or(s1),
                    "actual",
                )?,
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "{field}.kind: unknown kind '{other}' (expected mean, variance or general)"
            )))
        }
    }
    .map_err(|e| CliError::Config(format!("{field}: {e}")))?;

    Ok(MetricConfig {
        name,
        model,
        m,
        m_alpha,
        fs,
        t_tta,
        t_alpha,
    })
}
