//! Seeded Monte-Carlo estimates of worst-case false-alarm and
//! missed-detection probabilities.
//!
//! Every run draws from its own ChaCha8 stream: the generator is seeded with
//! the scenario seed and the stream number is the run index, so any run can be
//! replayed alone and the result does not depend on how runs are spread over
//! threads. Normal variates use the inverse-cdf transform of a 53-bit uniform
//! on the open unit interval. Workers only add integer event counts.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{AnalyticBounds, ThresholdRule};
use crate::detectors::{DetectorKind, DetectorState};
use crate::error::{domain, Error, Result};
use crate::model::{ChangeModel, GaussianSpec, Hypothesis};
use crate::sigraim::TcdConfig;
use crate::stats::{norm_quantile_open, Probability};

/// Generator for run `run` of an experiment seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Uniform on `(0, 1)`, never exactly 0 or 1.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    norm_quantile_open(open_uniform(rng))
}

/// Draws metric samples under one hypothesis and returns their LLR.
///
/// The LLR is evaluated from the offsets to the pre-change and tuned means
/// rather than from the expanded quadratic, which cancels badly when the
/// means are large compared with the spread (C/N0 in dB-Hz linear units).
#[derive(Debug, Clone, Copy)]
pub struct LlrSampler {
    sigma: f64,
    d0: f64,
    d1: f64,
    s0: f64,
    s1: f64,
    offset: f64,
}

impl LlrSampler {
    pub fn new(model: &ChangeModel, hyp: Hypothesis) -> Result<Self> {
        model.validate()?;
        let GaussianSpec { mu, sigma2 } = model.metric(hyp);
        let (pre, tuned) = (model.pre(), model.tuned());
        Ok(Self {
            sigma: sigma2.sqrt(),
            d0: mu - pre.mu,
            d1: mu - tuned.mu,
            s0: pre.sigma2,
            s1: tuned.sigma2,
            offset: 0.5 * (pre.sigma2 / tuned.sigma2).ln(),
        })
    }

    /// LLR of the metric value `mu + sigma z`.
    pub fn llr_at(&self, z: f64) -> f64 {
        let e0 = self.d0 + self.sigma * z;
        let e1 = self.d1 + self.sigma * z;
        e0 * e0 / (2.0 * self.s0) - e1 * e1 / (2.0 * self.s1) + self.offset
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.llr_at(standard_normal(rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub model: ChangeModel,
    pub kind: DetectorKind,
    pub h: f64,
    pub m: usize,
    pub m_alpha: usize,
    /// 1-based change onset; `None` simulates pure pre-change data.
    pub v: Option<usize>,
    pub runs: u64,
    pub seed: u64,
}

impl SimScenario {
    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.kind.validate()?;
        if self.runs == 0 {
            return domain("runs must be at least 1");
        }
        if self.m == 0 || self.m_alpha == 0 {
            return domain("m and m_alpha must be at least 1");
        }
        if self.h.is_nan() {
            return domain("threshold is NaN");
        }
        if let Some(v) = self.v {
            if v <= self.m {
                return domain(format!("change onset v = {v} must exceed m = {}", self.m));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    /// Number of runs in the denominator.
    pub runs: u64,
    pub events: u64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn from_counts(events: u64, runs: u64, seed: u64) -> Self {
        let p = events as f64 / runs as f64;
        Self {
            p_hat: p,
            stderr: (p * (1.0 - p) / runs as f64).sqrt(),
            runs,
            events,
            seed,
        }
    }
}

/// Index of the first alarm among the first `horizon` samples of `stream`.
fn first_alarm<F>(kind: DetectorKind, h: f64, horizon: usize, mut next: F) -> Option<usize>
where
    F: FnMut(usize) -> f64,
{
    let mut det = DetectorState::new(kind, h).expect("scenario validated");
    (1..=horizon).find(|&n| det.step(next(n)).expect("fresh detector").is_some())
}

/// Sum an integer outcome over all runs in parallel.
fn count_runs<F>(runs: u64, outcome: F) -> (u64, u64)
where
    F: Fn(u64) -> (u64, u64) + Sync + Send,
{
    (0..runs)
        .into_par_iter()
        .map(outcome)
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Worst-case false-alarm probability: the chance of an alarm within the
/// first `m_alpha` operational samples of a pure pre-change stream.
pub fn simulate_pfa(s: &SimScenario) -> Result<SimEstimate> {
    s.validate()?;
    if s.v.is_some() {
        return domain("false-alarm simulation needs a pure pre-change scenario (v = none)");
    }
    let f0 = LlrSampler::new(&s.model, Hypothesis::H0)?;
    // Windowed rules alarm no earlier than n = m; count T in [m, m + m_alpha).
    let horizon = s.kind.warm_up() + s.m_alpha - 1;
    let (events, _) = count_runs(s.runs, |r| {
        let mut rng = run_rng(s.seed, r);
        let hit = first_alarm(s.kind, s.h, horizon, |_| f0.sample(&mut rng)).is_some();
        (hit as u64, 0)
    });
    Ok(SimEstimate::from_counts(events, s.runs, s.seed))
}

/// Worst-case missed detection at onset `v` (default `m + 1`): among runs
/// that have not alarmed before `v`, the fraction still silent at `v + m - 1`.
/// Post-change samples use the actual change parameters.
pub fn simulate_pmd(s: &SimScenario) -> Result<SimEstimate> {
    let v = s.v.unwrap_or(s.m + 1);
    let s = SimScenario { v: Some(v), ..*s };
    s.validate()?;
    let f0 = LlrSampler::new(&s.model, Hypothesis::H0)?;
    let f1 = LlrSampler::new(&s.model, Hypothesis::H1)?;
    let horizon = v + s.m - 1;
    let (survivors, missed) = count_runs(s.runs, |r| {
        let mut rng = run_rng(s.seed, r);
        let sampler = |n: usize| if n < v { f0 } else { f1 };
        match first_alarm(s.kind, s.h, horizon, |n| sampler(n).sample(&mut rng)) {
            Some(t) if t < v => (0, 0),
            Some(_) => (1, 0),
            None => (1, 1),
        }
    });
    if survivors == 0 {
        return Err(Error::UndefinedConditional {
            runs: s.runs,
            alarmed_early: s.runs,
            onset: v,
        });
    }
    Ok(SimEstimate::from_counts(missed, survivors, s.seed))
}

/// Missed detection at each onset in `onsets`, returning the worst one.
pub fn simulate_pmd_sweep(s: &SimScenario, onsets: &[usize]) -> Result<(usize, SimEstimate)> {
    let mut worst: Option<(usize, SimEstimate)> = None;
    for &v in onsets {
        let est = simulate_pmd(&SimScenario { v: Some(v), ..*s })?;
        if worst.is_none_or(|(_, w)| est.p_hat > w.p_hat) {
            worst = Some((v, est));
        }
    }
    worst.ok_or_else(|| Error::Domain("empty onset list".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub alpha_target: f64,
    pub h: f64,
    pub pfa_hat: f64,
    pub pfa_stderr: f64,
    pub pmd_hat: f64,
    pub pmd_stderr: f64,
    pub alpha_bound: f64,
    pub beta_bound: f64,
}

/// Simulated ROC: thresholds from the analytic rules, both error
/// probabilities simulated, rows sorted by `alpha_target`.
///
/// Grid point `i` uses seed `seed + i` for the false-alarm runs and the
/// bitwise complement of that for the missed-detection runs.
pub fn simulate_roc(
    model: &ChangeModel,
    kind: DetectorKind,
    alpha_grid: &[f64],
    config: &TcdConfig,
    rule: ThresholdRule,
    runs: u64,
    seed: u64,
) -> Result<Vec<RocPoint>> {
    let bounds = AnalyticBounds::new(model, config.m, config.m_alpha)?;
    let mut grid = alpha_grid.to_vec();
    for &a in &grid {
        Probability::open(a)?;
    }
    grid.sort_by(f64::total_cmp);
    grid.iter()
        .enumerate()
        .map(|(i, &alpha_target)| {
            let h = bounds.threshold(kind, alpha_target, rule)?;
            let point_seed = seed.wrapping_add(i as u64);
            let base = SimScenario {
                model: *model,
                kind,
                h,
                m: config.m,
                m_alpha: config.m_alpha,
                v: None,
                runs,
                seed: point_seed,
            };
            let pfa = simulate_pfa(&base)?;
            let pmd = simulate_pmd(&SimScenario {
                seed: !point_seed,
                ..base
            })?;
            Ok(RocPoint {
                alpha_target,
                h,
                pfa_hat: pfa.p_hat,
                pfa_stderr: pfa.stderr,
                pmd_hat: pmd.p_hat,
                pmd_stderr: pmd.stderr,
                alpha_bound: bounds.alpha_bound(kind, h)?,
                beta_bound: bounds.beta_bound(kind, h)?,
            })
        })
        .collect()
}

/// Both sides of the window-sum association inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationCheck {
    /// `P(S_i < h for all i in m..m+N-1)`.
    pub lhs: SimEstimate,
    /// `P(S_m < h)^N`, stderr by the delta method.
    pub rhs: SimEstimate,
    pub n_windows: usize,
}

/// Estimate the joint probability that `n_windows` consecutive pre-change
/// window sums stay below `h` and the product of their marginals.
pub fn check_association(
    model: &ChangeModel,
    m: usize,
    h: f64,
    n_windows: usize,
    runs: u64,
    seed: u64,
) -> Result<AssociationCheck> {
    if m == 0 || n_windows == 0 || runs == 0 {
        return domain("m, N and runs must all be at least 1");
    }
    let f0 = LlrSampler::new(model, Hypothesis::H0)?;
    let kind = DetectorKind::Fma { m };
    let (all_below, first_below) = count_runs(runs, |r| {
        let mut rng = run_rng(seed, r);
        let mut det = DetectorState::new(kind, h).expect("valid kind");
        let mut first = 0;
        for n in 1..m + n_windows {
            let alarmed = det
                .step(f0.sample(&mut rng))
                .expect("fresh detector")
                .is_some();
            if n == m && !alarmed {
                first = 1;
            }
            if alarmed {
                return (0, first);
            }
        }
        (1, first)
    });
    let lhs = SimEstimate::from_counts(all_below, runs, seed);
    let p = first_below as f64 / runs as f64;
    let nf = n_windows as f64;
    let se_p = (p * (1.0 - p) / runs as f64).sqrt();
    let rhs = SimEstimate {
        p_hat: p.powf(nf),
        stderr: nf * p.powf(nf - 1.0) * se_p,
        runs,
        events: first_below,
        seed,
    };
    Ok(AssociationCheck {
        lhs,
        rhs,
        n_windows,
    })
}

/// `P(l <= T < l + m_alpha)` under pure pre-change data for each `l` in
/// `first..=last`, from one shared set of runs.
pub fn window_alarm_profile(
    s: &SimScenario,
    first: usize,
    last: usize,
) -> Result<Vec<(usize, SimEstimate)>> {
    s.validate()?;
    if first == 0 || last < first {
        return domain("window start range must satisfy 1 <= first <= last");
    }
    let f0 = LlrSampler::new(&s.model, Hypothesis::H0)?;
    let horizon = last + s.m_alpha - 1;
    let alarms: Vec<Option<usize>> = (0..s.runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = run_rng(s.seed, r);
            first_alarm(s.kind, s.h, horizon, |_| f0.sample(&mut rng))
        })
        .collect();
    Ok((first..=last)
        .map(|l| {
            let hits = alarms
                .iter()
                .filter(|t| matches!(t, Some(t) if *t >= l && *t < l + s.m_alpha))
                .count() as u64;
            (l, SimEstimate::from_counts(hits, s.runs, s.seed))
        })
        .collect())
}

/// `runs` independent draws of the window sum `S_m` under `hyp`.
pub fn sample_window_sums(
    model: &ChangeModel,
    m: usize,
    hyp: Hypothesis,
    runs: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if m == 0 {
        return domain("window length m must be at least 1");
    }
    let f = LlrSampler::new(model, hyp)?;
    Ok((0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = run_rng(seed, r);
            (0..m).map(|_| f.sample(&mut rng)).sum()
        })
        .collect())
}
