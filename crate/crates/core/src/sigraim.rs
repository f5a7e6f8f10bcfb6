//! Integrity availability: pick the threshold that meets the false-alarm
//! requirement, bound the integrity risk at that threshold and compare it
//! with the allowed risk.

use serde::{Deserialize, Serialize};

use crate::bounds::{AnalyticBounds, ThresholdRule};
use crate::detectors::DetectorKind;
use crate::error::{config, Result};
use crate::model::ChangeModel;
use crate::stats::Probability;

/// Timing and risk requirements of a transient-change monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcdConfig {
    /// Change duration in samples (time to alert times sampling rate).
    pub m: usize,
    /// False-alarm window in samples.
    pub m_alpha: usize,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_tta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_alpha: Option<f64>,
}

impl TcdConfig {
    pub fn new(m: usize, m_alpha: usize, alpha_tilde: f64, beta_tilde: f64) -> Result<Self> {
        let c = Self {
            m,
            m_alpha,
            alpha_tilde,
            beta_tilde,
            fs: None,
            t_tta: None,
            t_alpha: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Windows from sampling rate and durations, rounded to the nearest sample.
    pub fn from_timing(
        fs: f64,
        t_tta: f64,
        t_alpha: f64,
        alpha_tilde: f64,
        beta_tilde: f64,
    ) -> Result<Self> {
        for (name, v) in [("fs", fs), ("t_tta", t_tta), ("t_alpha", t_alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let c = Self {
            m: samples(fs * t_tta)?,
            m_alpha: samples(fs * t_alpha)?,
            alpha_tilde,
            beta_tilde,
            fs: Some(fs),
            t_tta: Some(t_tta),
            t_alpha: Some(t_alpha),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m_alpha == 0 {
            return config(format!(
                "m and m_alpha must be at least 1 (got m = {}, m_alpha = {})",
                self.m, self.m_alpha
            ));
        }
        Probability::open(self.alpha_tilde)?;
        Probability::new(self.beta_tilde)?;
        Ok(())
    }
}

fn samples(x: f64) -> Result<usize> {
    let n = x.round();
    if n < 1.0 || n > u32::MAX as f64 {
        return config(format!("window of {x} samples rounds outside [1, 2^32)"));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub metric: String,
    pub method: DetectorKind,
    pub h: f64,
    pub beta_bound: f64,
    pub available: bool,
    pub model: ChangeModel,
    pub config: TcdConfig,
    pub rule: ThresholdRule,
}

/// Availability of one metric under one detector.
///
/// CUSUM and WLC share the threshold `ln(m_alpha / alpha_tilde)` and the
/// window-sum missed-detection bound.
pub fn availability(
    metric: &str,
    model: &ChangeModel,
    config: &TcdConfig,
    method: DetectorKind,
    rule: ThresholdRule,
) -> Result<AvailabilityReport> {
    config.validate()?;
    let bounds = AnalyticBounds::new(model, config.m, config.m_alpha)?;
    let report = bounds.report(method, config.alpha_tilde, rule)?;
    Ok(AvailabilityReport {
        metric: metric.to_string(),
        method,
        h: report.h,
        beta_bound: report.beta_bound,
        available: report.beta_bound <= config.beta_tilde,
        model: *model,
        config: *config,
        rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianSpec;

    fn case1() -> ChangeModel {
        let mu0 = 10f64.powf(4.4);
        let delta = mu0 * (10f64.powf(0.3) - 1.0);
        ChangeModel::mean_change(mu0, (delta / 3.0).powi(2), 10f64.powf(3.7), 10f64.powf(3.4))
            .unwrap()
    }

    fn case3() -> ChangeModel {
        ChangeModel::general_change(
            GaussianSpec::new(0.1, 1.14e-3).unwrap(),
            GaussianSpec::new(0.2, 2.03e-3).unwrap(),
            GaussianSpec::new(0.2, 2.03e-3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn windows_from_timing() {
        let c = TcdConfig::from_timing(1.0, 6.0, 60.0, 0.01, 0.01).unwrap();
        assert_eq!((c.m, c.m_alpha), (6, 60));
        let c = TcdConfig::from_timing(50.0, 0.129, 6.0, 0.01, 0.01).unwrap();
        assert_eq!((c.m, c.m_alpha), (6, 300));
        assert!(TcdConfig::from_timing(1.0, 0.2, 60.0, 0.01, 0.01).is_err());
        assert!(TcdConfig::new(6, 60, 0.0, 0.01).is_err());
    }

    #[test]
    fn case_verdicts() {
        let rule = ThresholdRule::Quantile;
        let c = TcdConfig::new(6, 60, 0.01, 0.01).unwrap();
        let fma = availability("cn0", &case1(), &c, DetectorKind::Fma { m: 6 }, rule).unwrap();
        let cusum = availability("cn0", &case1(), &c, DetectorKind::Cusum, rule).unwrap();
        assert!(fma.available && !cusum.available);
        assert!((fma.beta_bound - 1.02e-3).abs() / 1.02e-3 < 0.03);

        let dll = ChangeModel::variance_change(1.11e-5, 2.78e-4, 2.78e-4).unwrap();
        let fma = availability("dll", &dll, &c, DetectorKind::Fma { m: 6 }, rule).unwrap();
        let wlc = availability("dll", &dll, &c, DetectorKind::Wlc { m: 6 }, rule).unwrap();
        assert!(!fma.available && !wlc.available);

        let c = TcdConfig::new(6, 300, 0.01, 0.01).unwrap();
        let fma = availability("sam", &case3(), &c, DetectorKind::Fma { m: 6 }, rule).unwrap();
        let cusum = availability("sam", &case3(), &c, DetectorKind::Cusum, rule).unwrap();
        assert!(
            fma.available && !cusum.available,
            "{} {}",
            fma.beta_bound,
            cusum.beta_bound
        );
    }

    #[test]
    fn tightening_beta_never_helps() {
        let models = [
            case1(),
            case3(),
            ChangeModel::variance_change(1.11e-5, 2.78e-4, 5.44e-4).unwrap(),
        ];
        for model in models {
            for kind in [DetectorKind::Fma { m: 6 }, DetectorKind::Cusum] {
                let mut was_available = true;
                for beta in [0.5, 0.1, 0.03, 0.01, 3e-3, 1e-3, 1e-4] {
                    let c = TcdConfig::new(6, 300, 0.01, beta).unwrap();
                    let r = availability("x", &model, &c, kind, ThresholdRule::InverseCdf).unwrap();
                    assert!(was_available || !r.available);
                    was_available = r.available;
                }
            }
        }
    }

    #[test]
    fn larger_actual_change_never_worse() {
        let c = TcdConfig::new(6, 60, 0.01, 0.01).unwrap();
        let tuned = ChangeModel::variance_change(1.11e-5, 2.78e-4, 2.78e-4).unwrap();
        let actual = ChangeModel::variance_change(1.11e-5, 2.78e-4, 5.44e-4).unwrap();
        for kind in [DetectorKind::Fma { m: 6 }, DetectorKind::Cusum] {
            let t = availability("dll", &tuned, &c, kind, ThresholdRule::InverseCdf).unwrap();
            let a = availability("dll", &actual, &c, kind, ThresholdRule::InverseCdf).unwrap();
            assert!(a.beta_bound < t.beta_bound);
            assert!(a.available || !t.available);
        }
    }
}
