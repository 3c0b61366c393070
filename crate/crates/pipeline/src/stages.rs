//! File-based pipeline stages. Each reads the previous stage's artifacts
//! under the output directory, so `run-all` is the stages in sequence.
//!
//! ```text
//! <out>/corpus.csv  raw/Pxx.csv  labels.txt        synth
//! <out>/features/Pxx.csv                           extract
//! <out>/windows/Pxx.edw  split.csv                 segment
//! <out>/models/<model>_rep<r>.bin                  train
//! <out>/report.csv  report.svg  predictions.csv    evaluate
//! ```

use std::path::{Path, PathBuf};

use eegdd_core::data::{load_raw_csv, DatasetSplit, Role};
use eegdd_core::dsp::features::{load_feature_csv, write_feature_csv};
use eegdd_core::segment::{load_windows, save_windows};
use eegdd_core::synth::{generate_corpus, read_manifest, write_corpus, ManifestRow};
use eegdd_core::{
    extract_feature_series, segment_series, split_by_participant, ChannelLayout, LabelMap, ParticipantId,
};

use crate::config::{ModelName, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::experiment::{evaluate_model, predictions_csv, ExperimentData};
use crate::models::{SessionWindows, TrainedModel};
use crate::report::{emit_report, EvalReport};

pub fn features_path(out: &Path, id: ParticipantId) -> PathBuf {
    out.join("features").join(format!("P{id:02}.csv"))
}

pub fn windows_path(out: &Path, id: ParticipantId) -> PathBuf {
    out.join("windows").join(format!("P{id:02}.edw"))
}

pub fn model_path(out: &Path, model: ModelName, rep: usize) -> PathBuf {
    out.join("models").join(format!("{model}_rep{rep}.bin"))
}

fn mkdir(stage: &str, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(stage, dir, e))
}

pub fn label_map(config: &PipelineConfig) -> Result<LabelMap> {
    match &config.label_map {
        Some(p) => LabelMap::load(p).map_err(|e| PipelineError::config("config", e.to_string())),
        None => Ok(LabelMap::default()),
    }
}

fn manifest(stage: &str, out: &Path) -> Result<Vec<ManifestRow>> {
    let rows = read_manifest(&out.join("corpus.csv")).map_err(|e| PipelineError::from_core(stage, e))?;
    if rows.is_empty() {
        return Err(PipelineError::data(stage, "corpus manifest lists no sessions"));
    }
    Ok(rows)
}

/// Generate the synthetic corpus and write it with its manifest and the
/// label map in use.
pub fn synth(config: &PipelineConfig) -> Result<Vec<ManifestRow>> {
    let out = &config.out_dir;
    mkdir("synth", out)?;
    let entries = generate_corpus(&config.generator, config.seed).map_err(|e| PipelineError::from_core("synth", e))?;
    let rows = write_corpus(&entries, out).map_err(|e| PipelineError::from_core("synth", e))?;
    let labels = out.join("labels.txt");
    std::fs::write(&labels, label_map(config)?.to_text()).map_err(|e| PipelineError::io("synth", &labels, e))?;
    log::info!("synth: {} sessions", rows.len());
    Ok(rows)
}

/// Feature series for every session in the manifest. Returns frame counts.
pub fn extract(config: &PipelineConfig) -> Result<Vec<(ParticipantId, usize)>> {
    let out = &config.out_dir;
    mkdir("extract", &out.join("features"))?;
    let layout = ChannelLayout::default();
    let mut counts = Vec::new();
    for row in manifest("extract", out)? {
        let id = row.participant_id;
        let err = |e| PipelineError::from_core("extract", e).within(format!("P{id:02}"));
        let session = load_raw_csv(&out.join(&row.path), id).map_err(err)?;
        let series = extract_feature_series(&session, &config.features, &layout).map_err(err)?;
        write_feature_csv(&series, &features_path(out, id)).map_err(err)?;
        counts.push((id, series.len()));
    }
    Ok(counts)
}

/// Windows per session, plus the participant split. Returns window counts.
pub fn segment(config: &PipelineConfig) -> Result<Vec<(ParticipantId, usize)>> {
    let out = &config.out_dir;
    mkdir("segment", &out.join("windows"))?;
    let map = label_map(config)?;
    let rows = manifest("segment", out)?;
    let mut counts = Vec::new();
    for row in &rows {
        let id = row.participant_id;
        let err = |e| PipelineError::from_core("segment", e).within(format!("P{id:02}"));
        let series = load_feature_csv(&features_path(out, id), id).map_err(err)?;
        let seg = segment_series(&series, &map, config.window).map_err(err)?;
        save_windows(&seg.windows, &windows_path(out, id)).map_err(err)?;
        counts.push((id, seg.windows.len()));
    }
    let ids: Vec<ParticipantId> = rows.iter().map(|r| r.participant_id).collect();
    let split = split_by_participant(&ids, config.split, config.seed).map_err(|e| PipelineError::from_core("segment", e))?;
    split
        .save(&out.join("split.csv"))
        .map_err(|e| PipelineError::from_core("segment", e))?;
    Ok(counts)
}

/// Windows of every participant, grouped by split role.
pub fn load_data(config: &PipelineConfig, stage: &str) -> Result<ExperimentData> {
    let out = &config.out_dir;
    let split = DatasetSplit::load(&out.join("split.csv")).map_err(|e| PipelineError::from_core(stage, e))?;
    let load = |role: Role| -> Result<Vec<SessionWindows>> {
        split
            .participants(role)
            .iter()
            .map(|&id| {
                let windows = load_windows(&windows_path(out, id)).map_err(|e| PipelineError::from_core(stage, e))?;
                Ok(SessionWindows {
                    participant_id: id,
                    windows,
                })
            })
            .collect()
    };
    Ok(ExperimentData {
        train: load(Role::Train)?,
        val: load(Role::Validation)?,
        test: load(Role::Test)?,
    })
}

/// Fit every configured model and repetition and save it.
pub fn train(config: &PipelineConfig) -> Result<()> {
    let data = load_data(config, "train")?;
    mkdir("train", &config.out_dir.join("models"))?;
    for &name in &config.models {
        for rep in 0..config.repetitions {
            let tag = format!("{name}/rep{rep}");
            let mut model = TrainedModel::train(name, config, &data.train, &data.val, config.rep_seed(rep))
                .map_err(|e| e.within(&tag))?;
            model
                .save(&model_path(&config.out_dir, name, rep))
                .map_err(|e| e.within(&tag))?;
            log::info!("train: {tag} saved");
        }
    }
    Ok(())
}

/// Score the saved models on the test split and write the report.
pub fn evaluate(config: &PipelineConfig) -> Result<EvalReport> {
    let data = load_data(config, "evaluate")?;
    let mut report = EvalReport::default();
    let mut predictions = Vec::new();
    for &name in &config.models {
        for rep in 0..config.repetitions {
            let tag = format!("{name}/rep{rep}");
            let mut model = TrainedModel::load(&model_path(&config.out_dir, name, rep)).map_err(|e| e.within(&tag))?;
            let (row, preds) = evaluate_model(&mut model, name, rep, config.rep_seed(rep), &data.test, config.sequence_len)
                .map_err(|e| e.within(&tag))?;
            log::info!("evaluate: {tag} accuracy {:.4}", row.metrics.accuracy);
            report.rows.push(row);
            predictions.extend(preds);
        }
    }
    let out = &config.out_dir;
    emit_report(&report, &out.join("report.csv"), &out.join("report.svg"))?;
    let p = out.join("predictions.csv");
    std::fs::write(&p, predictions_csv(&predictions)).map_err(|e| PipelineError::io("evaluate", &p, e))?;
    Ok(report)
}

pub fn run_all(config: &PipelineConfig) -> Result<EvalReport> {
    synth(config)?;
    extract(config)?;
    segment(config)?;
    train(config)?;
    evaluate(config)
}
