//! One interface over the five classifiers: training, scoring and the
//! on-disk model files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use eegdd_core::classic::rocket::fit_rocket;
use eegdd_core::classic::{nn1_classify, RocketModel};
use eegdd_core::segment::{load_windows, save_windows};
use eegdd_core::{build_sequences, ParticipantId, State, Window};
use eegdd_neural::{build_model, train_model, ModelSpec, NeuralModel, Sample};

use crate::config::{ModelName, PipelineConfig};
use crate::error::{PipelineError, Result};

/// All windows of one session, in start-frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionWindows {
    pub participant_id: ParticipantId,
    pub windows: Vec<Window>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum TrainedModel {
    /// The training windows themselves.
    Nn1(Vec<Window>),
    Rocket(RocketModel),
    Neural(NeuralModel),
}

/// One scored item: a prediction and the model's DISTRACTED probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub state: State,
    pub prob_distracted: f64,
}

fn flatten(sessions: &[SessionWindows]) -> Vec<Window> {
    sessions.iter().flat_map(|s| s.windows.iter().cloned()).collect()
}

fn sequence_pool<'a>(sessions: &'a [SessionWindows], seq_len: usize) -> Result<Vec<Sample<'a>>> {
    let mut out = Vec::new();
    for s in sessions {
        let seqs = build_sequences(&s.windows, seq_len)
            .map_err(|e| PipelineError::from_core("train", e))?;
        for q in &seqs {
            out.push(Sample::sequence(&s.windows, q).map_err(|e| PipelineError::from_neural("train", e))?);
        }
    }
    Ok(out)
}

pub fn neural_spec(name: ModelName, config: &PipelineConfig) -> Option<ModelSpec> {
    let kind = name.neural_kind()?;
    let mut spec = ModelSpec::for_kind(kind).with_length(config.window.len);
    if spec.seq_len > 1 {
        spec.seq_len = config.sequence_len;
    }
    Some(spec)
}

impl TrainedModel {
    /// Fit `name` on the training sessions; validation sessions drive λ
    /// selection and early stopping.
    pub fn train(
        name: ModelName,
        config: &PipelineConfig,
        train: &[SessionWindows],
        val: &[SessionWindows],
        seed: u64,
    ) -> Result<Self> {
        let train_w = flatten(train);
        if train_w.is_empty() {
            return Err(PipelineError::data("train", "no training windows"));
        }
        match name {
            ModelName::Euclidean1nn => Ok(TrainedModel::Nn1(train_w)),
            ModelName::Rocket => {
                let (model, _) = fit_rocket(&train_w, &flatten(val), config.rocket_kernels, seed, &config.ridge_lambdas)
                    .map_err(|e| PipelineError::from_core("train", e))?;
                Ok(TrainedModel::Rocket(model))
            }
            _ => {
                let spec = neural_spec(name, config).expect("neural model");
                let neural = |e| PipelineError::from_neural("train", e);
                let mut model = build_model(&spec, seed).map_err(neural)?;
                let mut tc = config.train.clone();
                tc.seed = seed;
                let val_w = flatten(val);
                let (ts, vs) = if spec.seq_len > 1 {
                    (sequence_pool(train, spec.seq_len)?, sequence_pool(val, spec.seq_len)?)
                } else {
                    (
                        train_w.iter().map(Sample::window).collect(),
                        val_w.iter().map(Sample::window).collect(),
                    )
                };
                if ts.is_empty() {
                    return Err(PipelineError::data("train", "no training sequences"));
                }
                train_model(&mut model, &ts, &vs, &tc).map_err(neural)?;
                Ok(TrainedModel::Neural(model))
            }
        }
    }

    /// Windows of context a prediction needs, counting the scored one.
    pub fn context(&self) -> usize {
        match self {
            TrainedModel::Neural(m) => m.spec().seq_len,
            _ => 1,
        }
    }

    /// Score window `i` of each entry, given the session's windows. Entries
    /// are `(session windows, index)`; the index must leave enough context.
    pub fn score(&mut self, items: &[(&[Window], usize)]) -> Result<Vec<Scored>> {
        let ctx = self.context();
        for &(pool, i) in items {
            if i >= pool.len() || i + 1 < ctx {
                return Err(PipelineError::data(
                    "evaluate",
                    format!("window {i} of {} lacks {ctx} windows of context", pool.len()),
                ));
            }
        }
        match self {
            TrainedModel::Nn1(train) => items
                .iter()
                .map(|&(pool, i)| {
                    let n = nn1_classify(train, &pool[i]).map_err(|e| PipelineError::from_core("evaluate", e))?;
                    Ok(Scored {
                        state: n.state,
                        prob_distracted: if n.state == State::Distracted { 1.0 } else { 0.0 },
                    })
                })
                .collect(),
            TrainedModel::Rocket(m) => {
                let windows: Vec<Window> = items.iter().map(|&(pool, i)| pool[i].clone()).collect();
                let scores = m
                    .decision_scores(&windows)
                    .map_err(|e| PipelineError::from_core("evaluate", e))?;
                Ok(scores
                    .into_iter()
                    .map(|s| Scored {
                        state: eegdd_core::classic::ridge::state_from_score(s),
                        prob_distracted: 1.0 / (1.0 + (-s).exp()),
                    })
                    .collect())
            }
            TrainedModel::Neural(m) => {
                let samples: Vec<Sample<'_>> = items
                    .iter()
                    .map(|&(pool, i)| Sample {
                        windows: pool[i + 1 - ctx..=i].iter().collect(),
                        state: pool[i].state,
                    })
                    .collect();
                let probs = m
                    .predict_proba(&samples)
                    .map_err(|e| PipelineError::from_neural("evaluate", e))?;
                Ok(probs
                    .into_iter()
                    .map(|p| Scored {
                        state: if p[0] >= p[1] { State::Distracted } else { State::Focused },
                        prob_distracted: p[0],
                    })
                    .collect())
            }
        }
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        match self {
            TrainedModel::Nn1(w) => save_windows(w, path).map_err(|e| PipelineError::from_core("train", e)),
            TrainedModel::Rocket(m) => {
                let file = File::create(path).map_err(|e| PipelineError::io("train", path, e))?;
                let mut out = BufWriter::new(file);
                m.write_to(&mut out)
                    .and_then(|_| std::io::Write::flush(&mut out))
                    .map_err(|e| PipelineError::io("train", path, e))
            }
            TrainedModel::Neural(m) => m.save(path).map_err(|e| PipelineError::from_neural("train", e)),
        }
    }

    /// Load any model file, dispatching on its magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let mut magic = [0u8; 4];
        File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .map_err(|e| PipelineError::io("load", path, e))?;
        match &magic {
            b"EDW1" => load_windows(path)
                .map(TrainedModel::Nn1)
                .map_err(|e| PipelineError::from_core("load", e)),
            b"EDR1" => {
                let f = File::open(path).map_err(|e| PipelineError::io("load", path, e))?;
                RocketModel::read_from(&mut BufReader::new(f))
                    .map(TrainedModel::Rocket)
                    .map_err(|e| PipelineError::from_core("load", e))
            }
            b"EDN1" => NeuralModel::load(path)
                .map(TrainedModel::Neural)
                .map_err(|e| PipelineError::from_neural("load", e)),
            _ => Err(PipelineError::data(
                "load",
                format!("{}: not a model file", path.display()),
            )),
        }
    }
}
