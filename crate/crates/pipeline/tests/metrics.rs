use eegdd::metrics::ConfusionMatrix;
use eegdd::report::{EvalReport, ReportRow};
use eegdd::{compute_metrics, Metrics, ModelName};
use eegdd_core::State;
use proptest::prelude::*;

fn states(bits: &[bool]) -> Vec<State> {
    bits.iter().map(|&b| if b { State::Distracted } else { State::Focused }).collect()
}

fn swap(s: &[State]) -> Vec<State> {
    s.iter()
        .map(|&x| if x == State::Distracted { State::Focused } else { State::Distracted })
        .collect()
}

proptest! {
    #[test]
    fn identities_hold(truth in proptest::collection::vec(any::<bool>(), 1..200), seed in any::<u64>()) {
        let pred: Vec<bool> = truth.iter().enumerate().map(|(i, &t)| t ^ ((seed >> (i % 64)) & 1 == 1)).collect();
        let (t, p) = (states(&truth), states(&pred));
        let cm = ConfusionMatrix::from_predictions(&t, &p).unwrap();
        prop_assert_eq!(cm.total(), truth.len() as u64);
        let m = cm.metrics();
        prop_assert!((m.accuracy - cm.trace() as f64 / cm.total() as f64).abs() < 1e-15);
        for k in 0..2 {
            let (pr, rc) = (m.precision[k], m.recall[k]);
            if pr + rc > 0.0 {
                prop_assert!((m.f1[k] - 2.0 * pr * rc / (pr + rc)).abs() < 1e-12);
            }
        }
        prop_assert!(m.as_row().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn renaming_classes_swaps_blocks(truth in proptest::collection::vec(any::<bool>(), 1..100),
                                     pred in proptest::collection::vec(any::<bool>(), 100)) {
        let t = states(&truth);
        let p = states(&pred[..truth.len()]);
        let a = compute_metrics(&t, &p).unwrap();
        let b = compute_metrics(&swap(&t), &swap(&p)).unwrap();
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert_eq!(a.precision, [b.precision[1], b.precision[0]]);
        prop_assert_eq!(a.recall, [b.recall[1], b.recall[0]]);
        prop_assert_eq!(a.f1, [b.f1[1], b.f1[0]]);
        let cm = ConfusionMatrix::from_predictions(&t, &p).unwrap();
        prop_assert_eq!(cm.swapped(), ConfusionMatrix::from_predictions(&swap(&t), &swap(&p)).unwrap());
    }

    #[test]
    fn aggregates_recompute_from_rows(values in proptest::collection::vec(proptest::array::uniform7(0.0f64..1.0), 1..8)) {
        let report = EvalReport {
            rows: values
                .iter()
                .enumerate()
                .map(|(rep, v)| ReportRow { model: ModelName::Fcn, rep, seed: rep as u64, metrics: Metrics::from_row(*v) })
                .collect(),
        };
        let a = report.aggregate(ModelName::Fcn).unwrap();
        let n = values.len() as f64;
        for k in 0..7 {
            let mean = values.iter().map(|v| v[k]).sum::<f64>() / n;
            prop_assert!((a.mean[k] - mean).abs() < 1e-12);
            let sd = if values.len() > 1 {
                (values.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            prop_assert!((a.std[k] - sd).abs() < 1e-12);
        }
        // The CSV carries the aggregates at full precision.
        let csv = report.to_csv();
        let mean_row = csv.lines().find(|l| l.starts_with("fcn,mean,")).unwrap();
        let parsed: Vec<f64> = mean_row.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        prop_assert_eq!(parsed, a.mean.to_vec());
    }
}

#[test]
fn reference_rocket_row_renders_at_its_heights() {
    // Accuracy 0.63 and F1 0.45 (distracted) / 0.72 (driving); the other
    // columns are placeholders.
    let row = [0.63, 0.5, 0.4, 0.45, 0.7, 0.74, 0.72];
    let report = EvalReport {
        rows: vec![ReportRow {
            model: ModelName::Rocket,
            rep: 0,
            seed: 0,
            metrics: Metrics::from_row(row),
        }],
    };
    let svg = report.to_svg();
    for (metric, v) in [("accuracy", 0.63), ("f1_distracted", 0.45), ("f1_driving", 0.72)] {
        let tag = format!("data-metric=\"{metric}\"");
        let line = svg.lines().find(|l| l.contains(&tag)).unwrap();
        assert!(line.contains(&format!("height=\"{:.3}\"", v * 300.0)), "{line}");
    }
    assert!(svg.lines().filter(|l| l.contains("class=\"whisker\"")).all(|l| {
        let y = |k: &str| l.split(&format!("{k}=\"")).nth(1).unwrap().split('"').next().unwrap().to_string();
        y("y1") == y("y2")
    }));
}
