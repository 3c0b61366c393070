//! Confusion matrices and per-class precision, recall and F1.

use eegdd_core::State;

use crate::error::{PipelineError, Result};

/// Rows are the true state, columns the prediction, both ordered
/// (DISTRACTED, FOCUSED).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[State], pred: &[State]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(PipelineError::data(
                "metrics",
                format!("{} truths vs {} predictions", truth.len(), pred.len()),
            ));
        }
        if truth.is_empty() {
            return Err(PipelineError::data("metrics", "no predictions to score"));
        }
        let mut m = Self::default();
        for (t, p) in truth.iter().zip(pred) {
            m.counts[t.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// The same matrix with the class names exchanged.
    pub fn swapped(&self) -> Self {
        let c = self.counts;
        Self {
            counts: [[c[1][1], c[1][0]], [c[0][1], c[0][0]]],
        }
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let mut precision = [0.0; 2];
        let mut recall = [0.0; 2];
        let mut f1 = [0.0; 2];
        for k in 0..2 {
            let tp = self.counts[k][k];
            let predicted = self.counts[0][k] + self.counts[1][k];
            let actual = self.counts[k][0] + self.counts[k][1];
            precision[k] = ratio(tp, predicted);
            recall[k] = ratio(tp, actual);
            let (p, r) = (precision[k], recall[k]);
            f1[k] = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        }
        Metrics {
            accuracy: ratio(self.trace(), self.total()),
            precision,
            recall,
            f1,
        }
    }
}

/// Accuracy plus per-class scores indexed by [`State::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
}

impl Metrics {
    /// Values in report column order: accuracy, then precision, recall and
    /// F1 for DISTRACTED, then for FOCUSED ("driving").
    pub fn as_row(&self) -> [f64; 7] {
        let d = State::Distracted.index();
        let f = State::Focused.index();
        [
            self.accuracy,
            self.precision[d],
            self.recall[d],
            self.f1[d],
            self.precision[f],
            self.recall[f],
            self.f1[f],
        ]
    }

    pub fn from_row(row: [f64; 7]) -> Self {
        let mut m = Metrics {
            accuracy: row[0],
            precision: [0.0; 2],
            recall: [0.0; 2],
            f1: [0.0; 2],
        };
        for (k, s) in State::ALL.iter().enumerate() {
            m.precision[s.index()] = row[1 + 3 * k];
            m.recall[s.index()] = row[2 + 3 * k];
            m.f1[s.index()] = row[3 + 3 * k];
        }
        m
    }
}

/// Zero denominators score 0.
pub fn compute_metrics(truth: &[State], pred: &[State]) -> Result<Metrics> {
    Ok(ConfusionMatrix::from_predictions(truth, pred)?.metrics())
}

#[cfg(test)]
mod tests {
    use super::*;
    use State::{Distracted as D, Focused as F};

    #[test]
    fn perfect() {
        let m = compute_metrics(&[D, F, F, D], &[D, F, F, D]).unwrap();
        assert_eq!(m.as_row(), [1.0; 7]);
    }

    #[test]
    fn worked_example() {
        // TP=3, FP=1, FN=2, TN=4 with DISTRACTED positive.
        let mut truth = vec![D; 3];
        let mut pred = vec![D; 3];
        truth.push(F);
        pred.push(D);
        truth.extend([D, D]);
        pred.extend([F, F]);
        truth.extend([F; 4]);
        pred.extend([F; 4]);
        let m = compute_metrics(&truth, &pred).unwrap();
        assert!((m.precision[0] - 0.75).abs() < 1e-12);
        assert!((m.recall[0] - 0.6).abs() < 1e-12);
        assert!((m.f1[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.accuracy - 0.7).abs() < 1e-12);
    }

    #[test]
    fn no_positives_convention() {
        let m = compute_metrics(&[F, F, F], &[F, F, F]).unwrap();
        assert_eq!((m.precision[0], m.recall[0], m.f1[0]), (0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn errors() {
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[D], &[D, F]).is_err());
    }

    #[test]
    fn row_round_trip() {
        let m = compute_metrics(&[D, F, F, D, F], &[D, D, F, F, F]).unwrap();
        assert_eq!(Metrics::from_row(m.as_row()), m);
    }
}
