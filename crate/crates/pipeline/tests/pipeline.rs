use std::path::Path;
use std::process::Command;

use eegdd::experiment::{predictions_csv, scored_items};
use eegdd::stages::{self, model_path, windows_path};
use eegdd::{run_experiment, ModelName, OnlinePredictor, PipelineConfig, TrainedModel};
use eegdd_core::{load_raw_csv, LabelMap};

/// Three one-minute sessions, one per split role; ten windows each.
fn small_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    let set = [
        "synth.participants=3",
        "synth.duration_s=60",
        "synth.block_min_s=8",
        "synth.block_max_s=12",
        "split.train=1",
        "split.val=1",
        "split.test=1",
        "experiment.repetitions=2",
        "rocket.kernels=40",
        "train.max_epochs=2",
        "train.batch_size=4",
    ];
    c.apply_overrides(&set.map(String::from)).unwrap();
    c.validate().unwrap();
    c.out_dir = out.to_path_buf();
    c
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn stages_compose_and_match_in_memory_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small_config(a.path());
    let cb = small_config(b.path());

    stages::run_all(&ca).unwrap();
    stages::synth(&cb).unwrap();
    let frames = stages::extract(&cb).unwrap();
    assert!(frames.iter().all(|&(_, n)| n == (60 * 128 - 256) / 32 + 1));
    let windows = stages::segment(&cb).unwrap();
    assert!(windows.iter().all(|&(_, n)| n == 10));
    stages::train(&cb).unwrap();
    stages::evaluate(&cb).unwrap();

    for f in ["report.csv", "report.svg", "predictions.csv", "split.csv", "corpus.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    for m in ModelName::ALL {
        for rep in 0..2 {
            assert_eq!(read(&model_path(a.path(), m, rep)), read(&model_path(b.path(), m, rep)));
        }
    }

    // Training and scoring in memory gives the same report bytes as the
    // file-based stages.
    let data = stages::load_data(&ca, "test").unwrap();
    let (report, preds) = run_experiment(&data, &ca).unwrap();
    assert_eq!(report.to_csv().into_bytes(), read(&a.path().join("report.csv")));
    assert_eq!(predictions_csv(&preds).into_bytes(), read(&a.path().join("predictions.csv")));
    assert_eq!(report.rows.len(), 10);
}

#[test]
fn every_model_scores_the_same_windows() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_config(dir.path());
    stages::run_all(&c).unwrap();
    let data = stages::load_data(&c, "test").unwrap();
    let (_, preds) = run_experiment(&data, &c).unwrap();
    let expected: Vec<_> = scored_items(&data.test, 4).iter().map(|&(_, _, id)| id).collect();
    assert_eq!(expected.len(), 7);
    for m in ModelName::ALL {
        for rep in 0..2 {
            let ids: Vec<_> = preds
                .iter()
                .filter(|p| p.model == m && p.rep == rep)
                .map(|p| p.window)
                .collect();
            assert_eq!(ids, expected, "{m} rep {rep}");
        }
    }
}

#[test]
fn stream_matches_batch_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_config(dir.path());
    stages::run_all(&c).unwrap();
    let data = stages::load_data(&c, "test").unwrap();
    let test = &data.test[0];
    let raw = load_raw_csv(&dir.path().join(format!("raw/P{:02}.csv", test.participant_id)), test.participant_id).unwrap();
    assert_eq!(eegdd_core::segment::load_windows(&windows_path(dir.path(), test.participant_id)).unwrap(), test.windows);
    for m in ModelName::ALL {
        let mut batch_model = TrainedModel::load(&model_path(dir.path(), m, 0)).unwrap();
        let ctx = batch_model.context();
        let items: Vec<_> = (ctx - 1..test.windows.len()).map(|i| (test.windows.as_slice(), i)).collect();
        let batch = batch_model.score(&items).unwrap();

        let model = TrainedModel::load(&model_path(dir.path(), m, 0)).unwrap();
        let mut online =
            OnlinePredictor::new(model, c.features.clone(), c.window, LabelMap::default(), test.participant_id).unwrap();
        let streamed = online.replay(&raw).unwrap();
        assert_eq!(streamed.len(), batch.len(), "{m}");
        for (k, (s, b)) in streamed.iter().zip(&batch).enumerate() {
            assert_eq!((s.state, s.prob_distracted), (b.state, b.prob_distracted), "{m} item {k}");
            assert_eq!(s.start_frame, test.windows[ctx - 1 + k].start_frame);
        }
        // First line after one window span, then one per 5 s hop.
        let first = 11.75 + 5.0 * (ctx - 1) as f64;
        assert_eq!(streamed[0].t_end, first);
        for pair in streamed.windows(2) {
            assert_eq!(pair[1].t_end - pair[0].t_end, 5.0);
        }
    }
}

fn eegdd(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eegdd")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "seed = 1\nstft.bogus = 3\n").unwrap();
    let (code, err) = eegdd(&["--config", conf.to_str().unwrap(), "synth"]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.conf:2"), "{err}");

    let (code, _) = eegdd(&["--set", "window.len=0", "--out", out, "synth"]);
    assert_eq!(code, 2);

    // Nothing has been generated yet.
    let (code, err) = eegdd(&["--out", out, "evaluate"]);
    assert_eq!(code, 3);
    assert!(err.contains("[evaluate]"), "{err}");

    let (code, _) = eegdd(&["--out", out, "frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn cli_stream_prints_header_and_lines() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_config(dir.path());
    stages::run_all(&c).unwrap();
    let lines = dir.path().join("stream.csv");
    let set: Vec<String> = [
        "synth.participants=3",
        "split.train=1",
        "split.val=1",
        "split.test=1",
    ]
    .iter()
    .flat_map(|s| ["--set".to_string(), s.to_string()])
    .collect();
    let mut args: Vec<&str> = set.iter().map(String::as_str).collect();
    let session = dir.path().join("raw/P01.csv");
    let model = model_path(dir.path(), ModelName::Rocket, 0);
    args.extend([
        "stream",
        "--session",
        session.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--participant",
        "1",
        "--output",
        lines.to_str().unwrap(),
    ]);
    let (code, err) = eegdd(&args);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&lines).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "t_end,state,prob_distracted");
    assert_eq!(rows.len(), 1 + 10);
    assert!(rows[1].starts_with("11.75,"));
}
