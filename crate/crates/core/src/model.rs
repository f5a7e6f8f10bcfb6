//! Gaussian change models for the integrity metrics and their LLRs.
//!
//! Three families cover the metrics: a mean change with shared variance
//! (C/N0), a zero-mean variance change (DLL discriminator output) and a
//! general mean-and-variance change (SAM). Every model carries two
//! post-change parameter sets: the *tuned* one, which defines the LLR and
//! therefore the detector, and the *actual* one, which describes the data
//! when a change really happens. Only the actual set enters missed-detection
//! evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Mean and variance of a Gaussian metric, in metric units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianSpec {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() {
            return config(format!("mean {mu} is not finite"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return config(format!("variance {sigma2} must be positive and finite"));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Log density at `x`.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mu;
        -0.5 * (2.0 * std::f64::consts::PI * self.sigma2).ln() - d * d / (2.0 * self.sigma2)
    }
}

/// Which regime generates the samples: nominal (`H0`) or changed (`H1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Quadratic LLR coefficients: `LLR(x) = a x^2 + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LlrCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }
}

/// Pre/post-change description of a metric.
///
/// Build through the checked constructors; the fields are public for pattern
/// matching, and [`ChangeModel::validate`] re-checks hand-built values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeModel {
    /// Mean shift with a common variance.
    MeanChange {
        mu0: f64,
        sigma2: f64,
        mu1_tuned: f64,
        mu1_actual: f64,
    },
    /// Zero-mean variance change.
    VarianceChange {
        sigma2_0: f64,
        sigma2_1_tuned: f64,
        sigma2_1_actual: f64,
    },
    /// Simultaneous mean and variance change.
    GeneralChange {
        pre: GaussianSpec,
        tuned: GaussianSpec,
        actual: GaussianSpec,
    },
}

impl ChangeModel {
    pub fn mean_change(mu0: f64, sigma2: f64, mu1_tuned: f64, mu1_actual: f64) -> Result<Self> {
        let m = Self::MeanChange {
            mu0,
            sigma2,
            mu1_tuned,
            mu1_actual,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn variance_change(
        sigma2_0: f64,
        sigma2_1_tuned: f64,
        sigma2_1_actual: f64,
    ) -> Result<Self> {
        let m = Self::VarianceChange {
            sigma2_0,
            sigma2_1_tuned,
            sigma2_1_actual,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn general_change(
        pre: GaussianSpec,
        tuned: GaussianSpec,
        actual: GaussianSpec,
    ) -> Result<Self> {
        let m = Self::GeneralChange { pre, tuned, actual };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MeanChange {
                mu0,
                sigma2,
                mu1_tuned,
                mu1_actual,
            } => {
                GaussianSpec::new(mu0, sigma2)?;
                GaussianSpec::new(mu1_tuned, sigma2)?;
                GaussianSpec::new(mu1_actual, sigma2)?;
                if mu1_tuned == mu0 {
                    return config("tuned post-change mean equals the pre-change mean");
                }
            }
            Self::VarianceChange {
                sigma2_0,
                sigma2_1_tuned,
                sigma2_1_actual,
            } => {
                GaussianSpec::new(0.0, sigma2_0)?;
                GaussianSpec::new(0.0, sigma2_1_tuned)?;
                GaussianSpec::new(0.0, sigma2_1_actual)?;
                if sigma2_1_tuned == sigma2_0 {
                    return config("tuned post-change variance equals the pre-change variance");
                }
            }
            Self::GeneralChange { pre, tuned, actual } => {
                for g in [pre, tuned, actual] {
                    GaussianSpec::new(g.mu, g.sigma2)?;
                }
                if pre == tuned {
                    return config(
                        "tuned post-change distribution equals the pre-change distribution",
                    );
                }
            }
        }
        Ok(())
    }

    /// Short family name used in reports.
    pub fn family(&self) -> &'static str {
        match self {
            Self::MeanChange { .. } => "mean",
            Self::VarianceChange { .. } => "variance",
            Self::GeneralChange { .. } => "general",
        }
    }

    /// Pre-change distribution of the metric.
    pub fn pre(&self) -> GaussianSpec {
        match *self {
            Self::MeanChange { mu0, sigma2, .. } => GaussianSpec { mu: mu0, sigma2 },
            Self::VarianceChange { sigma2_0, .. } => GaussianSpec {
                mu: 0.0,
                sigma2: sigma2_0,
            },
            Self::GeneralChange { pre, .. } => pre,
        }
    }

    /// Tuned post-change distribution (defines the LLR).
    pub fn tuned(&self) -> GaussianSpec {
        match *self {
            Self::MeanChange {
                mu1_tuned, sigma2, ..
            } => GaussianSpec {
                mu: mu1_tuned,
                sigma2,
            },
            Self::VarianceChange { sigma2_1_tuned, .. } => GaussianSpec {
                mu: 0.0,
                sigma2: sigma2_1_tuned,
            },
            Self::GeneralChange { tuned, .. } => tuned,
        }
    }

    /// Actual post-change distribution of the data.
    pub fn actual(&self) -> GaussianSpec {
        match *self {
            Self::MeanChange {
                mu1_actual, sigma2, ..
            } => GaussianSpec {
                mu: mu1_actual,
                sigma2,
            },
            Self::VarianceChange {
                sigma2_1_actual, ..
            } => GaussianSpec {
                mu: 0.0,
                sigma2: sigma2_1_actual,
            },
            Self::GeneralChange { actual, .. } => actual,
        }
    }

    /// Distribution of the metric under `hyp` (actual parameters for `H1`).
    pub fn metric(&self, hyp: Hypothesis) -> GaussianSpec {
        match hyp {
            Hypothesis::H0 => self.pre(),
            Hypothesis::H1 => self.actual(),
        }
    }

    /// The same model with the actual change replaced by the tuned one.
    pub fn tuned_only(&self) -> Self {
        match *self {
            Self::MeanChange {
                mu0,
                sigma2,
                mu1_tuned,
                ..
            } => Self::MeanChange {
                mu0,
                sigma2,
                mu1_tuned,
                mu1_actual: mu1_tuned,
            },
            Self::VarianceChange {
                sigma2_0,
                sigma2_1_tuned,
                ..
            } => Self::VarianceChange {
                sigma2_0,
                sigma2_1_tuned,
                sigma2_1_actual: sigma2_1_tuned,
            },
            Self::GeneralChange { pre, tuned, .. } => Self::GeneralChange {
                pre,
                tuned,
                actual: tuned,
            },
        }
    }

    /// LLR coefficients, always built from the tuned parameters.
    pub fn llr_coeffs(&self) -> LlrCoeffs {
        match *self {
            Self::MeanChange {
                mu0,
                sigma2,
                mu1_tuned,
                ..
            } => LlrCoeffs {
                a: 0.0,
                b: (mu1_tuned - mu0) / sigma2,
                c: -(mu1_tuned * mu1_tuned - mu0 * mu0) / (2.0 * sigma2),
            },
            Self::VarianceChange {
                sigma2_0,
                sigma2_1_tuned,
                ..
            } => LlrCoeffs {
                a: (sigma2_1_tuned - sigma2_0) / (2.0 * sigma2_0 * sigma2_1_tuned),
                b: 0.0,
                c: 0.5 * (sigma2_0 / sigma2_1_tuned).ln(),
            },
            Self::GeneralChange { pre, tuned, .. } => {
                let (m0, s0) = (pre.mu, pre.sigma2);
                let (m1, s1) = (tuned.mu, tuned.sigma2);
                let prod = s0 * s1;
                LlrCoeffs {
                    a: (s1 - s0) / (2.0 * prod),
                    b: (s0 * m1 - s1 * m0) / prod,
                    c: 0.5 * (s0 / s1).ln() + (s1 * m0 * m0 - s0 * m1 * m1) / (2.0 * prod),
                }
            }
        }
    }

    /// `ln(f1(x) / f0(x))` with the tuned post-change density.
    pub fn llr(&self, x: f64) -> f64 {
        self.llr_coeffs().eval(x)
    }
}

/// Monotone map from a tolerable positioning error to tuned change
/// parameters, interpolated piecewise-linearly and clamped at the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningTable {
    points: Vec<(f64, Vec<f64>)>,
}

impl TuningTable {
    pub fn new(points: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let Some(first) = points.first() else {
            return config("tuning table is empty");
        };
        let width = first.1.len();
        if width == 0 {
            return config("tuning table rows carry no parameters");
        }
        for (i, (eps, params)) in points.iter().enumerate() {
            if !eps.is_finite() || params.iter().any(|v| !v.is_finite()) {
                return config(format!("tuning table row {i} is not finite"));
            }
            if params.len() != width {
                return config(format!(
                    "tuning table row {i} has {} parameters, expected {width}",
                    params.len()
                ));
            }
            if i > 0 && *eps <= points[i - 1].0 {
                return config("tuning table keys must be strictly increasing");
            }
        }
        Ok(Self { points })
    }

    pub fn width(&self) -> usize {
        self.points[0].1.len()
    }

    /// Tuned parameters for maximum tolerable error `epsilon`.
    pub fn tuned_from_error(&self, epsilon: f64) -> Result<Vec<f64>> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("tolerable error {epsilon} must be positive"));
        }
        let pts = &self.points;
        let last = pts.len() - 1;
        if epsilon <= pts[0].0 {
            return Ok(pts[0].1.clone());
        }
        if epsilon >= pts[last].0 {
            return Ok(pts[last].1.clone());
        }
        let i = pts.partition_point(|(e, _)| *e <= epsilon);
        let (e0, p0) = &pts[i - 1];
        let (e1, p1) = &pts[i];
        let t = (epsilon - e0) / (e1 - e0);
        Ok(p0.iter().zip(p1).map(|(a, b)| a + t * (b - a)).collect())
    }
}
