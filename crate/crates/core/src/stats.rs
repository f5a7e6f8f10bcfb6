//! Special functions used by the bound formulas: normal and chi-squared
//! distribution functions and quantiles, probabilists' Hermite polynomials
//! and raw moments of a Gaussian variable.
//!
//! Every function here is pure. The normal cdf uses Hart's double-precision
//! rational approximation (with a continued fraction in the far tail), the
//! normal quantile is Acklam's rational approximation polished by a Halley
//! step, and the incomplete gamma function switches between its power series
//! and Lentz's continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A probability value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            domain(format!("probability {value} is outside [0, 1]"))
        }
    }

    /// Like [`Probability::new`] but additionally rejects the endpoints.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            domain(format!("probability {value} is outside (0, 1)"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Degrees of freedom of a chi-squared law, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct DegreesOfFreedom(u32);

impl DegreesOfFreedom {
    pub fn new(k: u32) -> Result<Self> {
        if k >= 1 {
            Ok(Self(k))
        } else {
            domain("degrees of freedom must be at least 1")
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        Self::new(k)
    }
}

impl From<DegreesOfFreedom> for u32 {
    fn from(k: DegreesOfFreedom) -> u32 {
        k.0
    }
}

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Lower tail `Phi(-|x|)` for finite `x`.
fn norm_lower_tail(x_abs: f64) -> f64 {
    if x_abs > 38.5 {
        return 0.0;
    }
    let e = (-0.5 * x_abs * x_abs).exp();
    if x_abs < 3.0 {
        let num = ((((((3.526_249_659_989_11e-2 * x_abs + 0.700_383_064_443_688) * x_abs
            + 6.373_962_203_531_65)
            * x_abs
            + 33.912_866_078_383)
            * x_abs
            + 112.079_291_497_871)
            * x_abs
            + 221.213_596_169_931)
            * x_abs
            + 220.206_867_912_376)
            * e;
        let den = ((((((8.838_834_764_831_84e-2 * x_abs + 1.755_667_163_182_64) * x_abs
            + 16.064_177_579_207)
            * x_abs
            + 86.780_732_202_946_1)
            * x_abs
            + 296.564_248_779_674)
            * x_abs
            + 637.333_633_378_831)
            * x_abs
            + 793.826_512_519_948)
            * x_abs
            + 440.413_735_824_752;
        num / den
    } else {
        // Mills-ratio continued fraction.
        let mut cf = x_abs;
        for k in (1..=80).rev() {
            cf = x_abs + k as f64 / cf;
        }
        e / cf / SQRT_2PI
    }
}

/// Standard normal cdf `Phi(x)`.
///
/// Non-finite input is a domain error; use [`norm_cdf_ext`] where infinite
/// arguments are meaningful.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("norm_cdf argument {x} is not finite"));
    }
    Ok(norm_cdf_ext(x))
}

/// `Phi(x)` extended to the closed real line (`Phi(-inf) = 0`, `Phi(inf) = 1`).
/// NaN propagates.
pub fn norm_cdf_ext(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let tail = norm_lower_tail(x.abs());
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf_ext(-x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Standard normal quantile `Phi^{-1}(p)`.
///
/// `p = 0` and `p = 1` map to `-inf` and `+inf`; anything else outside
/// `(0, 1)` is a domain error.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return domain(format!("norm_quantile argument {p} is outside [0, 1]"));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(norm_quantile_open(p))
}

/// Quantile for `p` strictly inside `(0, 1)`; no validation.
pub(crate) fn norm_quantile_open(p: f64) -> f64 {
    let x = acklam(p);
    // One Halley step against the residual on the smaller tail.
    let e = if x <= 0.0 {
        norm_cdf_ext(x) - p
    } else {
        (1.0 - p) - norm_sf(x)
    };
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Natural log of the gamma function for `a > 0` (Lanczos, g = 7).
pub fn ln_gamma(a: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if a < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (a + i as f64);
    }
    let t = a + G + 0.5;
    LN_SQRT_2PI + (a + 0.5) * t.ln() - t + sum.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn lower_gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            return Ok(sum * gamma_prefactor(a, x));
        }
    }
    Err(Error::Numerical(format!(
        "incomplete gamma series did not converge (a = {a}, x = {x})"
    )))
}

fn upper_gamma_cf(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            return Ok(h * gamma_prefactor(a, x));
        }
    }
    Err(Error::Numerical(format!(
        "incomplete gamma continued fraction did not converge (a = {a}, x = {x})"
    )))
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))`.
pub fn regularized_gamma(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return domain(format!("incomplete gamma shape {a} must be positive"));
    }
    if x.is_nan() || x < 0.0 {
        return domain(format!("incomplete gamma argument {x} must be >= 0"));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x == f64::INFINITY {
        return Ok((1.0, 0.0));
    }
    if x < a + 1.0 {
        let p = lower_gamma_series(a, x)?.min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let q = upper_gamma_cf(a, x)?.min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Chi-squared cdf with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: DegreesOfFreedom) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("chi2_cdf argument {x} must be >= 0"));
    }
    Ok(regularized_gamma(0.5 * k.get() as f64, 0.5 * x)?.0)
}

/// Chi-squared survival function `1 - cdf`, accurate in the upper tail.
pub fn chi2_sf(x: f64, k: DegreesOfFreedom) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("chi2_sf argument {x} must be >= 0"));
    }
    Ok(regularized_gamma(0.5 * k.get() as f64, 0.5 * x)?.1)
}

/// Chi-squared density.
pub fn chi2_pdf(x: f64, k: DegreesOfFreedom) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let half_k = 0.5 * k.get() as f64;
    if x == 0.0 {
        return match k.get() {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    ((half_k - 1.0) * x.ln() - 0.5 * x - half_k * std::f64::consts::LN_2 - ln_gamma(half_k)).exp()
}

/// Chi-squared quantile, solved by safeguarded Newton iteration on the
/// smaller tail from a Wilson-Hilferty start.
pub fn chi2_quantile(p: f64, k: DegreesOfFreedom) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        if p == 0.0 {
            return Ok(0.0);
        }
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        return domain(format!("chi2_quantile argument {p} is outside (0, 1)"));
    }
    let kf = k.get() as f64;
    let z = norm_quantile_open(p);
    let v = 2.0 / (9.0 * kf);
    let mut x = (kf * (1.0 - v + z * v.sqrt()).powi(3)).max(1e-8);

    // Residual in whichever tail keeps precision.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let residual = |x: f64| -> Result<f64> {
        let (lo, hi) = regularized_gamma(0.5 * kf, 0.5 * x)?;
        Ok(if upper { target - hi } else { lo - target })
    };

    // Bracket then Newton with bisection fallback.
    let mut lo = 0.0_f64;
    let mut hi = x.max(1.0);
    while residual(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical(format!(
                "chi2_quantile could not bracket p = {p}"
            )));
        }
    }
    for _ in 0..200 {
        let r = residual(x)?;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let pdf = chi2_pdf(x, k);
        let mut next = x - r / pdf;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x || (hi - lo) <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Probabilists' Hermite polynomial `He_k(z)` for `0 <= k <= 6`.
pub fn hermite_poly(k: usize, z: f64) -> Result<f64> {
    if k > 6 {
        return domain(format!("Hermite degree {k} is outside 0..=6"));
    }
    Ok(hermite_unchecked(k, z))
}

pub(crate) fn hermite_unchecked(k: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, z);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = z * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Raw moment `E[X^k]` of `X ~ Normal(mu, sigma2)`.
pub fn gaussian_raw_moment(mu: f64, sigma2: f64, k: u32) -> Result<f64> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return domain(format!("variance {sigma2} must be >= 0"));
    }
    Ok(gaussian_moments(mu, sigma2, k as usize)[k as usize])
}

/// All raw moments `E[X^0] ..= E[X^max_k]`.
pub(crate) fn gaussian_moments(mu: f64, sigma2: f64, max_k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_k + 1);
    out.push(1.0);
    if max_k >= 1 {
        out.push(mu);
    }
    for k in 2..=max_k {
        let next = mu * out[k - 1] + (k - 1) as f64 * sigma2 * out[k - 2];
        out.push(next);
    }
    out
}
