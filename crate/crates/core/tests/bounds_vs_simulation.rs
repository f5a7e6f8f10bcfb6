use tcdkit::bounds::{AnalyticBounds, ThresholdRule};
use tcdkit::detectors::DetectorKind;
use tcdkit::model::{ChangeModel, GaussianSpec};
use tcdkit::montecarlo::{simulate_pfa, simulate_pmd, SimScenario};

fn models() -> Vec<ChangeModel> {
    vec![
        ChangeModel::mean_change(0.0, 1.0, 0.8, 1.0).unwrap(),
        ChangeModel::variance_change(1.0, 3.0, 3.0).unwrap(),
        ChangeModel::general_change(
            GaussianSpec::new(0.0, 1.0).unwrap(),
            GaussianSpec::new(1.0, 1.5).unwrap(),
            GaussianSpec::new(1.0, 1.5).unwrap(),
        )
        .unwrap(),
    ]
}

#[test]
fn simulated_errors_respect_window_bounds() {
    let (m, m_alpha) = (4, 20);
    for model in models() {
        let bounds = AnalyticBounds::new(&model, m, m_alpha).unwrap();
        let kind = DetectorKind::Fma { m };
        for alpha in [0.02, 0.1, 0.3] {
            let h = bounds
                .threshold(kind, alpha, ThresholdRule::InverseCdf)
                .unwrap();
            let s = SimScenario {
                model,
                kind,
                h,
                m,
                m_alpha,
                v: None,
                runs: 20_000,
                seed: 99,
            };
            let pfa = simulate_pfa(&s).unwrap();
            let pmd = simulate_pmd(&s).unwrap();
            let (a, b) = (
                bounds.alpha_bound(kind, h).unwrap(),
                bounds.beta_bound(kind, h).unwrap(),
            );
            if !matches!(model, ChangeModel::GeneralChange { .. }) {
                assert!(
                    pfa.p_hat <= a + 3.0 * pfa.stderr,
                    "{model:?} pfa {} > {a}",
                    pfa.p_hat
                );
            }
            // The window-sum cdf bounds missed detection for every family.
            let slack = 3.0 * pmd.stderr
                + if matches!(model, ChangeModel::GeneralChange { .. }) {
                    0.01
                } else {
                    0.0
                };
            assert!(pmd.p_hat <= b + slack, "{model:?} pmd {} > {b}", pmd.p_hat);
        }
    }
}

#[test]
fn cusum_and_wlc_false_alarms_below_exponential_bound() {
    let (m, m_alpha) = (4, 20);
    let model = ChangeModel::mean_change(0.0, 1.0, 1.0, 1.0).unwrap();
    let bounds = AnalyticBounds::new(&model, m, m_alpha).unwrap();
    for kind in [DetectorKind::Cusum, DetectorKind::Wlc { m }] {
        let h = bounds
            .threshold(kind, 0.1, ThresholdRule::InverseCdf)
            .unwrap();
        let s = SimScenario {
            model,
            kind,
            h,
            m,
            m_alpha,
            v: None,
            runs: 20_000,
            seed: 3,
        };
        let pfa = simulate_pfa(&s).unwrap();
        assert!(pfa.p_hat <= 0.1 + 3.0 * pfa.stderr);
    }
}
