//! Distribution of the windowed LLR sum for a general Gaussian change.
//!
//! With a simultaneous mean and variance change the LLR is a quadratic in a
//! Gaussian sample and the window sum `Z = S_m` has no convenient closed
//! form. Its cdf is approximated by a one-term Edgeworth expansion built from
//! the exact first four raw moments of `Z`, and the false-alarm bound over a
//! window of `m_alpha` sums uses the Gumbel (EVT) approximation of the
//! maximum.
//!
//! Pipeline: LLR raw moments -> moments of the iid sum -> standardized
//! skewness/excess kurtosis -> Edgeworth cdf/pdf -> EVT location and rate.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ChangeModel, GaussianSpec, Hypothesis, LlrCoeffs};
use crate::stats::{self, gaussian_moments, hermite_unchecked, norm_cdf_ext, norm_pdf};

/// Binomial coefficient for the small orders used here.
fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw moment `E[Y^n]` of one LLR sample `Y = a X^2 + b X + c`,
/// `X ~ metric`, by the double binomial expansion over Gaussian moments.
pub fn llr_raw_moment(coeffs: LlrCoeffs, metric: GaussianSpec, n: u32) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return domain(format!("LLR moment order {n} is outside 1..=4"));
    }
    let xi_x = gaussian_moments(metric.mu, metric.sigma2, 2 * n as usize);
    let LlrCoeffs { a, b, c } = coeffs;
    let mut total = 0.0;
    for i in 0..=n {
        for j in 0..=i {
            let w = binom(n, i) * binom(i, j);
            total += w
                * a.powi((n - i) as i32)
                * b.powi((i - j) as i32)
                * c.powi(j as i32)
                * xi_x[(2 * n - i - j) as usize];
        }
    }
    Ok(total)
}

/// Raw LLR moments `[1, E[Y], .., E[Y^4]]`, evaluated after rewriting the
/// quadratic in the standardized variable `(X - mu) / sigma`. Same
/// expansion, far less cancellation for metrics with large means.
pub fn llr_moments(coeffs: LlrCoeffs, metric: GaussianSpec) -> [f64; 5] {
    let s = metric.sigma();
    let mu = metric.mu;
    let standardized = LlrCoeffs {
        a: coeffs.a * s * s,
        b: (2.0 * coeffs.a * mu + coeffs.b) * s,
        c: (coeffs.a * mu + coeffs.b) * mu + coeffs.c,
    };
    let unit = GaussianSpec {
        mu: 0.0,
        sigma2: 1.0,
    };
    let mut out = [1.0; 5];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = llr_raw_moment(standardized, unit, n as u32).expect("order in range");
    }
    out
}

/// Moments of the window sum `Z = Y_1 + .. + Y_m` of iid LLR samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrMoments {
    /// `[1, E[Y], .., E[Y^4]]` for one sample.
    pub xi_y: [f64; 5],
    pub m: usize,
    pub mu_z: f64,
    pub sigma2_z: f64,
    /// `[1, E[Z], .., E[Z^4]]`.
    pub xi_z: [f64; 5],
}

/// Raw moments of the iid sum from those of one sample.
pub fn sum_moments(xi_y: [f64; 5], m: usize) -> Result<LlrMoments> {
    if m == 0 {
        return domain("window length m must be at least 1");
    }
    let mf = m as f64;
    let mu = xi_y[1];
    let (y2, y3, y4) = (xi_y[2], xi_y[3], xi_y[4]);
    let mu_z = mf * mu;
    let sigma2_z = mf * (y2 - mu * mu);
    if sigma2_z.is_nan() || sigma2_z <= 0.0 {
        return domain(format!("window-sum variance {sigma2_z} is not positive"));
    }
    let xi_z2 = mu_z * mu_z + sigma2_z;
    let xi_z3 = mf * (y3 + (mf - 1.0) * (3.0 * mu * y2 + (mf - 2.0) * mu.powi(3)));
    let omega = 4.0 * mu * y3 + 3.0 * y2 * y2;
    let gamma = 6.0 * mu * mu * y2;
    let lambda = (mf - 3.0) * mu.powi(4);
    let xi_z4 = mf * (y4 + (mf - 1.0) * (omega + (mf - 2.0) * (gamma + lambda)));
    Ok(LlrMoments {
        xi_y,
        m,
        mu_z,
        sigma2_z,
        xi_z: [1.0, mu_z, xi_z2, xi_z3, xi_z4],
    })
}

/// Edgeworth coefficients: `C3` is the skewness, `C4` the excess kurtosis and
/// `C6 = 10 C3^2`.
pub fn edgeworth_coefficients(moments: &LlrMoments) -> Result<(f64, f64, f64)> {
    let [_, mu, x2, x3, x4] = moments.xi_z;
    let var = x2 - mu * mu;
    if var.is_nan() || var <= 0.0 {
        return domain("zero variance in Edgeworth coefficients");
    }
    let sd = var.sqrt();
    let c3 = (x3 - 3.0 * mu * x2 + 2.0 * mu.powi(3)) / (sd * var);
    let c4 = (x4 - 4.0 * mu * x3 + 6.0 * mu * mu * x2 - 3.0 * mu.powi(4)) / (var * var) - 3.0;
    Ok((c3, c4, 10.0 * c3 * c3))
}

/// One-term Edgeworth approximation of the law of `Z`.
///
/// Correction weights are `1/k!` for `C_k`, k in {3, 4, 6}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthCdf {
    pub mu_z: f64,
    pub sigma_z: f64,
    pub c3: f64,
    pub c4: f64,
    pub c6: f64,
}

impl EdgeworthCdf {
    pub fn from_moments(moments: &LlrMoments) -> Result<Self> {
        let (c3, c4, c6) = edgeworth_coefficients(moments)?;
        Ok(Self {
            mu_z: moments.mu_z,
            sigma_z: moments.sigma2_z.sqrt(),
            c3,
            c4,
            c6,
        })
    }

    /// Plain normal law (all corrections zero).
    pub fn gaussian(mu_z: f64, sigma_z: f64) -> Self {
        Self {
            mu_z,
            sigma_z,
            c3: 0.0,
            c4: 0.0,
            c6: 0.0,
        }
    }

    fn standardize(&self, z: f64) -> f64 {
        (z - self.mu_z) / self.sigma_z
    }

    /// Unclamped series value at standardized point `t`.
    fn raw_cdf_std(&self, t: f64) -> f64 {
        if !t.is_finite() {
            return norm_cdf_ext(t);
        }
        let corr = self.c3 / 6.0 * hermite_unchecked(2, t)
            + self.c4 / 24.0 * hermite_unchecked(3, t)
            + self.c6 / 720.0 * hermite_unchecked(5, t);
        norm_cdf_ext(t) - norm_pdf(t) * corr
    }

    /// Edgeworth cdf, clamped to `[0, 1]`.
    pub fn cdf(&self, z: f64) -> f64 {
        self.raw_cdf_std(self.standardize(z)).clamp(0.0, 1.0)
    }

    /// Edgeworth density in `z` units, clamped at zero.
    pub fn pdf(&self, z: f64) -> f64 {
        let t = self.standardize(z);
        if !t.is_finite() {
            return 0.0;
        }
        let corr = 1.0
            + self.c3 / 6.0 * hermite_unchecked(3, t)
            + self.c4 / 24.0 * hermite_unchecked(4, t)
            + self.c6 / 720.0 * hermite_unchecked(6, t);
        (norm_pdf(t) * corr / self.sigma_z).max(0.0)
    }

    /// Quantile of the clamped, monotone-rectified cdf.
    ///
    /// A running maximum over a grid on `mu_z +- 12 sigma_z` finds the first
    /// cell whose rectified value reaches `p`; bisection then refines inside
    /// that cell to 1e-10 (relative to `sigma_z`).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("Edgeworth quantile level {p} is outside (0, 1)"));
        }
        const CELLS: usize = 4800;
        const SPAN: f64 = 12.0;
        let step = 2.0 * SPAN / CELLS as f64;
        let grid_t = |i: usize| -SPAN + i as f64 * step;
        let mut running = 0.0_f64;
        let mut prev_running = 0.0_f64;
        let mut hit = None;
        for i in 0..=CELLS {
            prev_running = running;
            running = running.max(self.raw_cdf_std(grid_t(i)).clamp(0.0, 1.0));
            if running >= p {
                hit = Some(i);
                break;
            }
        }
        let i = hit.ok_or_else(|| {
            Error::Numerical(format!("Edgeworth cdf never reaches {p} within 12 sigma"))
        })?;
        if i == 0 {
            return Ok(self.mu_z + grid_t(0) * self.sigma_z);
        }
        let (mut lo, mut hi) = (grid_t(i - 1), grid_t(i));
        let rectified = |t: f64| self.raw_cdf_std(t).clamp(0.0, 1.0).max(prev_running);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if rectified(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(self.mu_z + 0.5 * (lo + hi) * self.sigma_z)
    }
}

/// Moments and Edgeworth law of `S_m` under `hyp` for `model`.
pub fn window_sum_law(
    model: &ChangeModel,
    m: usize,
    hyp: Hypothesis,
) -> Result<(LlrMoments, EdgeworthCdf)> {
    model.validate()?;
    let xi_y = llr_moments(model.llr_coeffs(), model.metric(hyp));
    let moments = sum_moments(xi_y, m)?;
    let law = EdgeworthCdf::from_moments(&moments)?;
    Ok((moments, law))
}

/// Gumbel location/rate of the maximum of `m_alpha` window sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvtParams {
    pub delta: f64,
    pub gamma: f64,
}

/// `delta = F0^{-1}(1 - 1/m_alpha)`, `gamma = m_alpha f0(delta)`.
pub fn evt_params(f0: &EdgeworthCdf, m_alpha: usize) -> Result<EvtParams> {
    if m_alpha < 2 {
        return domain("EVT approximation needs m_alpha >= 2");
    }
    let delta = f0.quantile(1.0 - 1.0 / m_alpha as f64)?;
    let gamma = m_alpha as f64 * f0.pdf(delta);
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Numerical(format!(
            "EVT rate is not positive at delta = {delta}"
        )));
    }
    Ok(EvtParams { delta, gamma })
}

/// Threshold meeting a false-alarm level `alpha_tilde` under the EVT law.
pub fn sam_threshold(p: EvtParams, alpha_tilde: f64) -> Result<f64> {
    stats::Probability::open(alpha_tilde)?;
    Ok(p.delta - (-(1.0 - alpha_tilde).ln()).ln() / p.gamma)
}

/// `1 - exp(-exp(-gamma (h - delta)))`.
pub fn sam_pfa_bound(p: EvtParams, h: f64) -> f64 {
    // -expm1(-x) keeps precision when x is tiny.
    let x = (-p.gamma * (h - p.delta)).exp();
    -(-x).exp_m1()
}

/// `F_1(h)`.
pub fn sam_pmd_bound(f1: &EdgeworthCdf, h: f64) -> f64 {
    f1.cdf(h)
}
