//! Streaming stopping rules over a sequence of LLR values.
//!
//! All four rules alarm when their statistic reaches the threshold (`>= h`):
//!
//! * Shewhart: the current LLR alone.
//! * CUSUM: `W_n = max(W_{n-1}, 0) + LLR(n)`, i.e. the largest suffix sum of
//!   the whole history.
//! * WLC (window-limited CUSUM): the largest suffix sum of the last `m` values.
//! * FMA (finite moving average): the sum of the last `m` values.
//!
//! The windowed rules are silent for the first `m - 1` samples. Sample
//! indices are 1-based.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Exact window-sum recomputation period, in steps.
const RESUM_PERIOD: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorKind {
    Shewhart,
    Cusum,
    Wlc { m: usize },
    Fma { m: usize },
}

impl DetectorKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Wlc { m } | Self::Fma { m } if *m == 0 => {
                config("window length m must be at least 1")
            }
            _ => Ok(()),
        }
    }

    /// Number of samples before the rule becomes operational, plus one.
    pub fn warm_up(&self) -> usize {
        match self {
            Self::Shewhart | Self::Cusum => 1,
            Self::Wlc { m } | Self::Fma { m } => *m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Shewhart => "shewhart",
            Self::Cusum => "cusum",
            Self::Wlc { .. } => "wlc",
            Self::Fma { .. } => "fma",
        }
    }

    /// Parse a method name, attaching window `m` where needed.
    pub fn from_name(name: &str, m: usize) -> Result<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "shewhart" => Self::Shewhart,
            "cusum" => Self::Cusum,
            "wlc" => Self::Wlc { m },
            "fma" => Self::Fma { m },
            other => return config(format!("unknown detector method '{other}'")),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shewhart | Self::Cusum => f.write_str(self.name()),
            Self::Wlc { m } | Self::Fma { m } => write!(f, "{}(m={m})", self.name()),
        }
    }
}

/// First alarm of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    /// 1-based stopping index `T`.
    pub stop_index: u64,
    /// Statistic value at `T` (at least `h`).
    pub statistic: f64,
}

#[derive(Debug, Clone)]
pub struct DetectorState {
    kind: DetectorKind,
    h: f64,
    n: u64,
    window: VecDeque<f64>,
    window_sum: f64,
    cusum_acc: f64,
    stopped: bool,
}

impl DetectorState {
    pub fn new(kind: DetectorKind, h: f64) -> Result<Self> {
        kind.validate()?;
        if h.is_nan() {
            return config("threshold is NaN");
        }
        let cap = match kind {
            DetectorKind::Wlc { m } | DetectorKind::Fma { m } => m,
            _ => 0,
        };
        Ok(Self {
            kind,
            h,
            n: 0,
            window: VecDeque::with_capacity(cap),
            window_sum: 0.0,
            cusum_acc: 0.0,
            stopped: false,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    /// Number of samples consumed so far.
    pub fn samples_seen(&self) -> u64 {
        self.n
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    /// Running sum of the buffered window.
    pub fn window_sum(&self) -> f64 {
        self.window_sum
    }

    /// CUSUM accumulator `W_n`.
    pub fn cusum_statistic(&self) -> f64 {
        self.cusum_acc
    }

    fn wlc_statistic(&self) -> f64 {
        let mut acc = 0.0;
        let mut best = f64::NEG_INFINITY;
        for v in self.window.iter().rev() {
            acc += v;
            best = best.max(acc);
        }
        best
    }

    fn push_window(&mut self, m: usize, llr: f64) {
        if self.window.len() == m {
            let old = self.window.pop_front().unwrap_or(0.0);
            self.window_sum -= old;
        }
        self.window.push_back(llr);
        self.window_sum += llr;
        if self.n.is_multiple_of(RESUM_PERIOD) {
            self.window_sum = self.window.iter().sum();
        }
    }

    /// Consume one LLR value; returns the alarm if this sample stops the rule.
    pub fn step(&mut self, llr: f64) -> Result<Option<Alarm>> {
        if self.stopped {
            return Err(Error::Usage(format!(
                "{} detector already alarmed at n = {}",
                self.kind, self.n
            )));
        }
        self.n += 1;
        let statistic = match self.kind {
            DetectorKind::Shewhart => Some(llr),
            DetectorKind::Cusum => {
                self.cusum_acc = self.cusum_acc.max(0.0) + llr;
                Some(self.cusum_acc)
            }
            DetectorKind::Fma { m } => {
                self.push_window(m, llr);
                (self.n >= m as u64).then_some(self.window_sum)
            }
            DetectorKind::Wlc { m } => {
                self.push_window(m, llr);
                (self.n >= m as u64).then(|| self.wlc_statistic())
            }
        };
        match statistic {
            Some(s) if s >= self.h => {
                self.stopped = true;
                Ok(Some(Alarm {
                    stop_index: self.n,
                    statistic: s,
                }))
            }
            _ => Ok(None),
        }
    }
}

/// Run a fresh detector over `stream`, returning its first alarm.
pub fn run<I>(kind: DetectorKind, h: f64, stream: I) -> Result<Option<Alarm>>
where
    I: IntoIterator<Item = f64>,
{
    let mut state = DetectorState::new(kind, h)?;
    for llr in stream {
        if let Some(alarm) = state.step(llr)? {
            return Ok(Some(alarm));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fma_hand_trace() {
        let a = run(DetectorKind::Fma { m: 2 }, 1.0, [0.3, 0.8, 0.4])
            .unwrap()
            .unwrap();
        assert_eq!(a.stop_index, 2);
        assert!((a.statistic - 1.1).abs() < 1e-12);
    }

    #[test]
    fn cusum_hand_trace() {
        let a = run(DetectorKind::Cusum, 1.4, [0.5, -2.0, 0.8, 0.7])
            .unwrap()
            .unwrap();
        assert_eq!(a.stop_index, 4);
        assert!((a.statistic - 1.5).abs() < 1e-12);
    }

    #[test]
    fn shewhart_first_exceedance() {
        let a = run(DetectorKind::Shewhart, 0.7, [0.3, 0.8])
            .unwrap()
            .unwrap();
        assert_eq!(a.stop_index, 2);
    }

    #[test]
    fn wlc_window_suffix_sums() {
        let a = run(DetectorKind::Wlc { m: 2 }, 1.4, [0.5, -2.0, 0.8, 0.7])
            .unwrap()
            .unwrap();
        assert_eq!(a.stop_index, 4);
        assert!((a.statistic - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ties_alarm() {
        let a = run(DetectorKind::Shewhart, 0.5, [0.5]).unwrap().unwrap();
        assert_eq!(a.stop_index, 1);
        let a = run(DetectorKind::Fma { m: 2 }, 1.0, [0.5, 0.5])
            .unwrap()
            .unwrap();
        assert_eq!(a.stop_index, 2);
    }

    #[test]
    fn windowed_rules_wait_for_full_window() {
        // A huge first value cannot stop FMA or WLC before n = m.
        for kind in [DetectorKind::Fma { m: 3 }, DetectorKind::Wlc { m: 3 }] {
            let a = run(kind, 5.0, [100.0, -1.0, -1.0]).unwrap().unwrap();
            assert_eq!(a.stop_index, 3, "{kind}");
        }
    }

    #[test]
    fn negative_stream_never_alarms() {
        let stream = vec![-0.1; 50];
        for kind in [
            DetectorKind::Shewhart,
            DetectorKind::Cusum,
            DetectorKind::Wlc { m: 4 },
            DetectorKind::Fma { m: 4 },
        ] {
            assert!(run(kind, 0.1, stream.iter().copied()).unwrap().is_none());
        }
        assert!(run(DetectorKind::Cusum, 1.0, std::iter::empty())
            .unwrap()
            .is_none());
    }

    #[test]
    fn step_after_alarm_is_usage_error() {
        let mut s = DetectorState::new(DetectorKind::Shewhart, 0.0).unwrap();
        assert!(s.step(1.0).unwrap().is_some());
        assert!(matches!(s.step(1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn invalid_construction() {
        assert!(DetectorState::new(DetectorKind::Fma { m: 0 }, 1.0).is_err());
        assert!(DetectorState::new(DetectorKind::Cusum, f64::NAN).is_err());
        assert!(DetectorKind::from_name("glr", 3).is_err());
        assert_eq!(
            DetectorKind::from_name("FMA", 6).unwrap(),
            DetectorKind::Fma { m: 6 }
        );
    }

    #[test]
    fn resum_keeps_window_sum_exact() {
        let mut s = DetectorState::new(DetectorKind::Fma { m: 3 }, f64::INFINITY).unwrap();
        let mut tail = VecDeque::new();
        for i in 0..(RESUM_PERIOD + 10) {
            let v = ((i * 7919) % 1000) as f64 * 1e-3 - 0.5;
            s.step(v).unwrap();
            tail.push_back(v);
            if tail.len() > 3 {
                tail.pop_front();
            }
        }
        let exact: f64 = tail.iter().sum();
        assert!((s.window_sum() - exact).abs() < 1e-9);
    }
}
