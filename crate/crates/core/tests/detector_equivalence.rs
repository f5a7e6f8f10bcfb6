use proptest::prelude::*;
use tcdkit::detectors::{run, DetectorKind};

/// First n with max over k in 1..=n of sum(x[n-k..n]) >= h.
fn brute_cusum(xs: &[f64], h: f64) -> Option<u64> {
    (1..=xs.len())
        .find(|&n| {
            (0..n)
                .map(|j| xs[j..n].iter().sum::<f64>())
                .fold(f64::MIN, f64::max)
                >= h
        })
        .map(|n| n as u64)
}

/// First n >= m with max over k in 1..=m of sum(x[n-k..n]) >= h.
fn brute_wlc(xs: &[f64], m: usize, h: f64) -> Option<u64> {
    (m..=xs.len())
        .find(|&n| {
            (n - m..n)
                .map(|j| xs[j..n].iter().sum::<f64>())
                .fold(f64::MIN, f64::max)
                >= h
        })
        .map(|n| n as u64)
}

fn brute_fma(xs: &[f64], m: usize, h: f64) -> Option<u64> {
    (m..=xs.len())
        .find(|&n| xs[n - m..n].iter().sum::<f64>() >= h)
        .map(|n| n as u64)
}

fn stream() -> impl Strategy<Value = Vec<f64>> {
    // Dyadic values keep every partial sum exact, so ties compare equal in
    // both the streaming and brute-force forms.
    prop::collection::vec((-64i32..48).prop_map(|k| k as f64 / 16.0), 0..60)
}

fn stop(kind: DetectorKind, h: f64, xs: &[f64]) -> Option<u64> {
    run(kind, h, xs.iter().copied())
        .unwrap()
        .map(|a| a.stop_index)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cusum_recursion_is_max_suffix_sum(xs in stream(), h in (0i32..64).prop_map(|k| k as f64 / 8.0)) {
        prop_assert_eq!(stop(DetectorKind::Cusum, h, &xs), brute_cusum(&xs, h));
    }

    #[test]
    fn wlc_is_windowed_max_suffix_sum(xs in stream(), m in 1usize..8, h in (0i32..64).prop_map(|k| k as f64 / 8.0)) {
        prop_assert_eq!(stop(DetectorKind::Wlc { m }, h, &xs), brute_wlc(&xs, m, h));
    }

    #[test]
    fn fma_is_window_sum(xs in stream(), m in 1usize..8, h in (-32i32..64).prop_map(|k| k as f64 / 8.0)) {
        prop_assert_eq!(stop(DetectorKind::Fma { m }, h, &xs), brute_fma(&xs, m, h));
    }

    #[test]
    fn fma_one_is_shewhart(xs in prop::collection::vec(-4.0f64..4.0, 0..60), h in -2.0f64..3.0) {
        prop_assert_eq!(stop(DetectorKind::Fma { m: 1 }, h, &xs), stop(DetectorKind::Shewhart, h, &xs));
    }

    #[test]
    fn wlc_with_long_window_matches_cusum_early(xs in stream(), h in (0i32..64).prop_map(|k| k as f64 / 8.0)) {
        // With m >= stream length, the only difference is the warm-up.
        let m = xs.len().max(1);
        let wlc = stop(DetectorKind::Wlc { m }, h, &xs);
        let cusum = stop(DetectorKind::Cusum, h, &xs);
        if let Some(t) = wlc {
            prop_assert!(cusum.is_some_and(|c| c <= t));
        }
    }
}
