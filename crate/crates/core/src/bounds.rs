//! Analytic false-alarm and missed-detection bounds.
//!
//! For the FMA rule with window `m` and window-sum cdfs `F0`, `F1`:
//!
//! * false alarm within `m_alpha` samples: `alpha(h) = 1 - F0(h)^m_alpha`
//! * missed detection within `m` samples:  `beta(h)  = F1(h)`
//! * threshold meeting `alpha_tilde`:      `h = F0^{-1}((1 - alpha_tilde)^{1/m_alpha})`
//!
//! CUSUM and WLC use the classical threshold `h = ln(m_alpha / alpha_tilde)`
//! (false alarm `<= m_alpha e^{-h}`) and share the FMA missed-detection
//! expression `F1(h)`. For a general Gaussian change the FMA threshold and
//! false-alarm bound come from the EVT approximation in [`crate::sam`].

use serde::{Deserialize, Serialize};

use crate::detectors::DetectorKind;
use crate::error::{domain, Error, Result};
use crate::model::{ChangeModel, Hypothesis};
use crate::sam::{self, EdgeworthCdf, EvtParams};
use crate::sigraim::TcdConfig;
use crate::stats::{self, DegreesOfFreedom, Probability};

/// Law of the window sum `S_m` under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SumCdf {
    Normal {
        mean: f64,
        var: f64,
    },
    /// `S = scale * X + shift` with `X ~ chi2(dof)`.
    ScaledChi2 {
        shift: f64,
        scale: f64,
        dof: DegreesOfFreedom,
    },
    Edgeworth(EdgeworthCdf),
}

impl SumCdf {
    pub fn cdf(&self, h: f64) -> f64 {
        if h == f64::INFINITY {
            return 1.0;
        }
        if h == f64::NEG_INFINITY {
            return 0.0;
        }
        match *self {
            Self::Normal { mean, var } => stats::norm_cdf_ext((h - mean) / var.sqrt()),
            Self::ScaledChi2 { shift, scale, dof } => {
                let x = (h - shift) / scale;
                let (below, above) = chi2_pair(x, dof);
                if scale > 0.0 {
                    below
                } else {
                    above
                }
            }
            Self::Edgeworth(d) => d.cdf(h),
        }
    }

    /// `1 - cdf(h)`, computed on the upper tail where the law allows it.
    pub fn sf(&self, h: f64) -> f64 {
        if h == f64::INFINITY {
            return 0.0;
        }
        if h == f64::NEG_INFINITY {
            return 1.0;
        }
        match *self {
            Self::Normal { mean, var } => stats::norm_sf((h - mean) / var.sqrt()),
            Self::ScaledChi2 { shift, scale, dof } => {
                let x = (h - shift) / scale;
                let (below, above) = chi2_pair(x, dof);
                if scale > 0.0 {
                    above
                } else {
                    below
                }
            }
            Self::Edgeworth(d) => 1.0 - d.cdf(h),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile level {p} is outside (0, 1)"));
        }
        match *self {
            Self::Normal { mean, var } => Ok(mean + var.sqrt() * stats::norm_quantile_open(p)),
            Self::ScaledChi2 { shift, scale, dof } => {
                let level = if scale > 0.0 { p } else { 1.0 - p };
                Ok(shift + scale * stats::chi2_quantile(level, dof)?)
            }
            Self::Edgeworth(d) => d.quantile(p),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::ScaledChi2 { shift, scale, dof } => shift + scale * dof.get() as f64,
            Self::Edgeworth(d) => d.mu_z,
        }
    }
}

fn chi2_pair(x: f64, dof: DegreesOfFreedom) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    stats::regularized_gamma(0.5 * dof.get() as f64, 0.5 * x).expect("valid gamma arguments")
}

/// Closed-form law of `S_m` for the mean-change and variance-change models.
///
/// `H1` uses the actual change parameters of the data; the LLR itself always
/// uses the tuned ones.
pub fn llr_sum_stats(model: &ChangeModel, m: usize, hyp: Hypothesis) -> Result<SumCdf> {
    model.validate()?;
    if m == 0 {
        return domain("window length m must be at least 1");
    }
    let mf = m as f64;
    match *model {
        ChangeModel::MeanChange {
            mu0,
            sigma2,
            mu1_tuned,
            mu1_actual,
        } => {
            let d = mu1_tuned - mu0;
            let mean_h0 = -d * d / (2.0 * sigma2);
            let var = -2.0 * mean_h0;
            let mean = match hyp {
                Hypothesis::H0 => mean_h0,
                Hypothesis::H1 => d / sigma2 * (mu1_actual - 0.5 * (mu1_tuned + mu0)),
            };
            Ok(SumCdf::Normal {
                mean: mf * mean,
                var: mf * var,
            })
        }
        ChangeModel::VarianceChange { .. } => {
            let c = model.llr_coeffs();
            let scale = model.metric(hyp).sigma2 * c.a;
            Ok(SumCdf::ScaledChi2 {
                shift: mf * c.c,
                scale,
                dof: DegreesOfFreedom::new(m as u32)?,
            })
        }
        ChangeModel::GeneralChange { .. } => Err(Error::Unsupported(
            "general Gaussian change has no closed-form window-sum law; use the Edgeworth route (sam::window_sum_law)".into(),
        )),
    }
}

/// Law of `S_m` for any model: closed form where available, Edgeworth
/// otherwise.
pub fn sum_law(model: &ChangeModel, m: usize, hyp: Hypothesis) -> Result<SumCdf> {
    match model {
        ChangeModel::GeneralChange { .. } => {
            Ok(SumCdf::Edgeworth(sam::window_sum_law(model, m, hyp)?.1))
        }
        _ => llr_sum_stats(model, m, hyp),
    }
}

/// `1 - F0(h)^m_alpha`.
pub fn fma_pfa_bound(f0: &SumCdf, h: f64, m_alpha: usize) -> Result<f64> {
    if m_alpha == 0 {
        return domain("m_alpha must be at least 1");
    }
    let tail = f0.sf(h).clamp(0.0, 1.0);
    Ok(-(m_alpha as f64 * (-tail).ln_1p()).exp_m1())
}

/// `F1(h)`.
pub fn fma_pmd_bound(f1: &SumCdf, h: f64) -> f64 {
    f1.cdf(h)
}

/// `F0^{-1}((1 - alpha_tilde)^{1/m_alpha})`.
pub fn fma_threshold(f0: &SumCdf, alpha_tilde: f64, m_alpha: usize) -> Result<f64> {
    let level = per_sum_level(alpha_tilde, m_alpha)?;
    f0.quantile(level).map_err(|e| match e {
        Error::Domain(msg) => Error::Numerical(format!("cannot invert F0: {msg}")),
        other => other,
    })
}

fn per_sum_level(alpha_tilde: f64, m_alpha: usize) -> Result<f64> {
    Probability::open(alpha_tilde)?;
    if m_alpha == 0 {
        return domain("m_alpha must be at least 1");
    }
    Ok(((-alpha_tilde).ln_1p() / m_alpha as f64).exp())
}

/// `ln(m_alpha / alpha_tilde)`, shared by CUSUM and WLC.
pub fn cusum_threshold(alpha_tilde: f64, m_alpha: usize) -> Result<f64> {
    Probability::open(alpha_tilde)?;
    if m_alpha == 0 {
        return domain("m_alpha must be at least 1");
    }
    Ok((m_alpha as f64 / alpha_tilde).ln())
}

/// How the FMA threshold is derived from the false-alarm requirement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Invert the window-sum law `F0` (the generic threshold rule).
    #[default]
    #[serde(rename = "corollary")]
    InverseCdf,
    /// For normal window sums, use the bare standard-normal quantile
    /// `Phi^{-1}((1 - alpha_tilde)^{1/m_alpha})` without scaling by the sum's
    /// mean and deviation. Other laws are unaffected.
    Quantile,
}

impl std::str::FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corollary" => Ok(Self::InverseCdf),
            "quantile" => Ok(Self::Quantile),
            other => Err(Error::Config(format!(
                "unknown threshold rule '{other}' (expected corollary or quantile)"
            ))),
        }
    }
}

/// Analytic bounds for one detector at one requirement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: DetectorKind,
    pub h: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
    pub m: usize,
    pub m_alpha: usize,
    pub alpha_tilde: f64,
    pub rule: ThresholdRule,
}

/// One point of an analytic ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub alpha_tilde: f64,
    pub h: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
}

/// Window-sum laws of a model, precomputed for repeated bound queries.
#[derive(Debug, Clone)]
pub struct AnalyticBounds {
    model: ChangeModel,
    m: usize,
    m_alpha: usize,
    f0: SumCdf,
    f1: SumCdf,
    evt: Option<EvtParams>,
}

impl AnalyticBounds {
    pub fn new(model: &ChangeModel, m: usize, m_alpha: usize) -> Result<Self> {
        if m_alpha == 0 {
            return domain("m_alpha must be at least 1");
        }
        let f0 = sum_law(model, m, Hypothesis::H0)?;
        let f1 = sum_law(model, m, Hypothesis::H1)?;
        let evt = match f0 {
            SumCdf::Edgeworth(d) => Some(sam::evt_params(&d, m_alpha)?),
            _ => None,
        };
        Ok(Self {
            model: *model,
            m,
            m_alpha,
            f0,
            f1,
            evt,
        })
    }

    pub fn h0_law(&self) -> &SumCdf {
        &self.f0
    }

    pub fn h1_law(&self) -> &SumCdf {
        &self.f1
    }

    pub fn evt(&self) -> Option<EvtParams> {
        self.evt
    }

    fn check_kind(&self, kind: DetectorKind) -> Result<()> {
        kind.validate()?;
        match kind {
            DetectorKind::Fma { m } | DetectorKind::Wlc { m } if m != self.m => domain(format!(
                "detector window {m} does not match the bound window {}",
                self.m
            )),
            _ => Ok(()),
        }
    }

    /// Single-sample laws for the Shewhart rule.
    fn single_laws(&self) -> Result<(SumCdf, SumCdf)> {
        Ok((
            sum_law(&self.model, 1, Hypothesis::H0)?,
            sum_law(&self.model, 1, Hypothesis::H1)?,
        ))
    }

    /// Threshold meeting false-alarm level `alpha_tilde`.
    pub fn threshold(
        &self,
        kind: DetectorKind,
        alpha_tilde: f64,
        rule: ThresholdRule,
    ) -> Result<f64> {
        self.check_kind(kind)?;
        match kind {
            DetectorKind::Cusum | DetectorKind::Wlc { .. } => {
                cusum_threshold(alpha_tilde, self.m_alpha)
            }
            DetectorKind::Fma { .. } => match (self.f0, self.evt, rule) {
                (_, Some(evt), _) => sam::sam_threshold(evt, alpha_tilde),
                (SumCdf::Normal { .. }, _, ThresholdRule::Quantile) => Ok(
                    stats::norm_quantile_open(per_sum_level(alpha_tilde, self.m_alpha)?),
                ),
                (f0, _, _) => fma_threshold(&f0, alpha_tilde, self.m_alpha),
            },
            DetectorKind::Shewhart => {
                let (g0, _) = self.single_laws()?;
                fma_threshold(&g0, alpha_tilde, self.m_alpha)
            }
        }
    }

    /// Upper bound on the worst-case false-alarm probability at threshold `h`.
    pub fn alpha_bound(&self, kind: DetectorKind, h: f64) -> Result<f64> {
        self.check_kind(kind)?;
        match kind {
            DetectorKind::Cusum | DetectorKind::Wlc { .. } => {
                Ok((self.m_alpha as f64 * (-h).exp()).min(1.0))
            }
            DetectorKind::Fma { .. } => match self.evt {
                Some(evt) => Ok(sam::sam_pfa_bound(evt, h)),
                None => fma_pfa_bound(&self.f0, h, self.m_alpha),
            },
            DetectorKind::Shewhart => {
                let (g0, _) = self.single_laws()?;
                fma_pfa_bound(&g0, h, self.m_alpha)
            }
        }
    }

    /// Upper bound on the worst-case missed-detection probability at `h`.
    pub fn beta_bound(&self, kind: DetectorKind, h: f64) -> Result<f64> {
        self.check_kind(kind)?;
        match kind {
            DetectorKind::Shewhart => {
                // No exceedance among m independent changed samples.
                let (_, g1) = self.single_laws()?;
                Ok(g1.cdf(h).powi(self.m as i32))
            }
            _ => Ok(fma_pmd_bound(&self.f1, h)),
        }
    }

    pub fn report(
        &self,
        kind: DetectorKind,
        alpha_tilde: f64,
        rule: ThresholdRule,
    ) -> Result<BoundReport> {
        let h = self.threshold(kind, alpha_tilde, rule)?;
        Ok(BoundReport {
            method: kind,
            h,
            alpha_bound: self.alpha_bound(kind, h)?,
            beta_bound: self.beta_bound(kind, h)?,
            m: self.m,
            m_alpha: self.m_alpha,
            alpha_tilde,
            rule,
        })
    }
}

/// Analytic ROC: the bound pair at the threshold each `alpha_tilde` implies,
/// sorted by `alpha_tilde`.
pub fn bound_roc(
    model: &ChangeModel,
    kind: DetectorKind,
    alpha_grid: &[f64],
    config: &TcdConfig,
    rule: ThresholdRule,
) -> Result<Vec<BoundPoint>> {
    let bounds = AnalyticBounds::new(model, config.m, config.m_alpha)?;
    let mut grid = alpha_grid.to_vec();
    for &a in &grid {
        Probability::open(a)?;
    }
    grid.sort_by(f64::total_cmp);
    grid.into_iter()
        .map(|alpha_tilde| {
            let r = bounds.report(kind, alpha_tilde, rule)?;
            Ok(BoundPoint {
                alpha_tilde,
                h: r.h,
                alpha_bound: r.alpha_bound,
                beta_bound: r.beta_bound,
            })
        })
        .collect()
}
