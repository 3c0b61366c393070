//! The repetition harness: every model trained with seed `base + r` and
//! scored on one shared set of test windows.

use std::fmt::Write as _;

use eegdd_core::{ParticipantId, State, Window};

use crate::config::{ModelName, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::metrics::compute_metrics;
use crate::models::{SessionWindows, TrainedModel};
use crate::report::{EvalReport, ReportRow};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentData {
    pub train: Vec<SessionWindows>,
    pub val: Vec<SessionWindows>,
    pub test: Vec<SessionWindows>,
}

/// Identity of one scored window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowId {
    pub participant_id: ParticipantId,
    pub index: usize,
    pub start_frame: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub model: ModelName,
    pub rep: usize,
    pub window: WindowId,
    pub truth: State,
    pub pred: State,
    pub prob_distracted: f64,
}

pub const PREDICTIONS_HEADER: &str =
    "model,rep,participant_id,window_index,start_frame,truth,pred,prob_distracted";

/// Windows with in-session index at least `seq_len - 1`, sessions in
/// participant order. Every model is scored on exactly these.
pub fn scored_items(test: &[SessionWindows], seq_len: usize) -> Vec<(&[Window], usize, WindowId)> {
    let mut sessions: Vec<&SessionWindows> = test.iter().collect();
    sessions.sort_by_key(|s| s.participant_id);
    let mut out = Vec::new();
    for s in sessions {
        for i in seq_len.saturating_sub(1)..s.windows.len() {
            out.push((
                s.windows.as_slice(),
                i,
                WindowId {
                    participant_id: s.participant_id,
                    index: i,
                    start_frame: s.windows[i].start_frame,
                },
            ));
        }
    }
    out
}

/// Score one trained model on the shared test set.
pub fn evaluate_model(
    model: &mut TrainedModel,
    name: ModelName,
    rep: usize,
    seed: u64,
    test: &[SessionWindows],
    seq_len: usize,
) -> Result<(ReportRow, Vec<Prediction>)> {
    let items = scored_items(test, seq_len);
    if items.is_empty() {
        return Err(PipelineError::data("evaluate", "no test windows to score"));
    }
    let refs: Vec<(&[Window], usize)> = items.iter().map(|&(p, i, _)| (p, i)).collect();
    let scored = model.score(&refs)?;
    let truth: Vec<State> = items.iter().map(|&(p, i, _)| p[i].state).collect();
    let pred: Vec<State> = scored.iter().map(|s| s.state).collect();
    let metrics = compute_metrics(&truth, &pred)?;
    let predictions = items
        .iter()
        .zip(&scored)
        .map(|(&(p, i, id), s)| Prediction {
            model: name,
            rep,
            window: id,
            truth: p[i].state,
            pred: s.state,
            prob_distracted: s.prob_distracted,
        })
        .collect();
    Ok((
        ReportRow {
            model: name,
            rep,
            seed,
            metrics,
        },
        predictions,
    ))
}

/// Train and score every configured model for every repetition, in memory.
pub fn run_experiment(data: &ExperimentData, config: &PipelineConfig) -> Result<(EvalReport, Vec<Prediction>)> {
    if data.train.iter().all(|s| s.windows.is_empty()) || data.test.iter().all(|s| s.windows.is_empty()) {
        return Err(PipelineError::data("experiment", "train and test sets must be non-empty"));
    }
    if config.repetitions == 0 {
        return Err(PipelineError::config("experiment", "repetitions must be at least 1"));
    }
    let mut report = EvalReport::default();
    let mut predictions = Vec::new();
    for name in &config.models {
        for rep in 0..config.repetitions {
            let seed = config.rep_seed(rep);
            let tag = format!("{name}/rep{rep}");
            let mut model = TrainedModel::train(*name, config, &data.train, &data.val, seed)
                .map_err(|e| e.within(&tag))?;
            let (row, preds) = evaluate_model(&mut model, *name, rep, seed, &data.test, config.sequence_len)
                .map_err(|e| e.within(&tag))?;
            log::info!("{tag}: accuracy {:.4}", row.metrics.accuracy);
            report.rows.push(row);
            predictions.extend(preds);
        }
    }
    Ok((report, predictions))
}

pub fn predictions_csv(predictions: &[Prediction]) -> String {
    let mut s = String::from(PREDICTIONS_HEADER);
    s.push('\n');
    for p in predictions {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.model,
            p.rep,
            p.window.participant_id,
            p.window.index,
            p.window.start_frame,
            p.truth,
            p.pred,
            p.prob_distracted
        );
    }
    s
}
