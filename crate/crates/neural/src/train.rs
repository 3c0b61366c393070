//! Mini-batch Adam training with seeded shuffling and early stopping.

use eegdd_core::{FeatureScaler, Window};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NeuralError, Result};
use crate::layers::{softmax_xent, Param};
use crate::model::{NeuralModel, Sample, PREDICT_BATCH};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub restore_best: bool,
    /// Loss weights for (DISTRACTED, FOCUSED); `None` weighs both as 1.
    pub class_weights: Option<[f64; 2]>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            batch_size: 32,
            max_epochs: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 20,
            restore_best: true,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("Adam epsilon must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max epochs must be at least 1");
        }
        if let Some(w) = self.class_weights {
            if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return bad("class weights must be positive");
            }
        }
        Ok(())
    }

    fn weights(&self) -> [f64; 2] {
        self.class_weights.unwrap_or([1.0, 1.0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept, when validation drove selection.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: &TrainConfig) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over parameters supplied in a fixed order.
    pub fn step(&mut self, visit: impl FnOnce(&mut dyn FnMut(&mut Param))) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.epsilon);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut k = 0;
        visit(&mut |p: &mut Param| {
            if ms.len() <= k {
                ms.push(vec![0.0; p.len()]);
                vs.push(vec![0.0; p.len()]);
            }
            let (m, v) = (&mut ms[k], &mut vs[k]);
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                p.value[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
            k += 1;
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Inference-mode loss and accuracy.
pub fn evaluate(model: &mut NeuralModel, samples: &[Sample<'_>], class_weights: [f64; 2]) -> Result<Evaluation> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in samples.chunks(PREDICT_BATCH) {
        let logits = model.logits(chunk, false)?;
        let targets: Vec<usize> = chunk.iter().map(|s| s.state.index()).collect();
        let out = softmax_xent(&logits, 2, &targets, &class_weights);
        loss += out.loss * chunk.len() as f64;
        correct += count_correct(&out.probs, &targets);
    }
    model.net.clear_caches();
    Ok(Evaluation {
        loss: loss / samples.len() as f64,
        accuracy: correct as f64 / samples.len() as f64,
    })
}

fn count_correct(probs: &[f64], targets: &[usize]) -> usize {
    let b = targets.len();
    targets
        .iter()
        .enumerate()
        .filter(|&(i, &t)| {
            let pred = if probs[i] >= probs[b + i] { 0 } else { 1 };
            pred == t
        })
        .count()
}

struct Snapshot {
    params: Vec<Vec<f64>>,
    norms: Vec<(Vec<f64>, Vec<f64>, bool)>,
}

fn snapshot(model: &mut NeuralModel) -> Snapshot {
    let mut params = Vec::new();
    model.net.visit_params(&mut |p| params.push(p.value.clone()));
    let mut norms = Vec::new();
    model
        .net
        .visit_norms(&mut |bn| norms.push((bn.running_mean.clone(), bn.running_var.clone(), bn.tracked)));
    Snapshot { params, norms }
}

fn restore(model: &mut NeuralModel, snap: Snapshot) {
    let mut params = snap.params.into_iter();
    model
        .net
        .visit_params(&mut |p| p.value = params.next().expect("same architecture"));
    let mut norms = snap.norms.into_iter();
    model.net.visit_norms(&mut |bn| {
        let (m, v, t) = norms.next().expect("same architecture");
        bn.running_mean = m;
        bn.running_var = v;
        bn.tracked = t;
    });
}

/// Standardization statistics from the distinct windows behind `samples`.
fn fit_scaler(samples: &[Sample<'_>]) -> Result<FeatureScaler> {
    let mut seen = std::collections::HashSet::new();
    let mut windows: Vec<Window> = Vec::new();
    for s in samples {
        for &w in &s.windows {
            if seen.insert(w as *const Window) {
                windows.push(w.clone());
            }
        }
    }
    Ok(FeatureScaler::fit(&windows)?)
}

/// Train in place. The input scaler is refitted on the training windows;
/// an empty validation set disables early stopping and weight restore.
pub fn train_model(
    model: &mut NeuralModel,
    train: &[Sample<'_>],
    val: &[Sample<'_>],
    config: &TrainConfig,
) -> Result<TrainingHistory> {
    config.validate()?;
    if train.is_empty() {
        return Err(NeuralError::Config("training set is empty".into()));
    }
    if model.spec.channels == eegdd_core::NUM_FEATURES {
        model.set_scaler(fit_scaler(train)?)?;
    }
    let weights = config.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = Adam::new(config);
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, usize, Snapshot)> = None;
    let mut since_best = 0usize;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<Sample<'_>> = idx.iter().map(|&i| train[i].clone()).collect();
            model.net.visit_params(&mut |p| p.zero_grad());
            let logits = model.logits(&batch, true)?;
            let targets: Vec<usize> = batch.iter().map(|s| s.state.index()).collect();
            let out = softmax_xent(&logits, 2, &targets, &weights);
            if !out.loss.is_finite() {
                return Err(NeuralError::Divergence { epoch, loss: out.loss });
            }
            loss_sum += out.loss * batch.len() as f64;
            correct += count_correct(&out.probs, &targets);
            model.net.backward(&out.dlogits);
            let mut finite = true;
            model
                .net
                .visit_params(&mut |p| finite &= p.grad.iter().all(|g| g.is_finite()));
            if !finite {
                return Err(NeuralError::Divergence { epoch, loss: f64::NAN });
            }
            adam.step(|f| model.net.visit_params(f));
        }
        model.net.clear_caches();
        let mut record = EpochRecord {
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_loss: None,
            val_accuracy: None,
        };
        if !val.is_empty() {
            let e = evaluate(model, val, weights)?;
            if !e.loss.is_finite() {
                return Err(NeuralError::Divergence { epoch, loss: e.loss });
            }
            record.val_loss = Some(e.loss);
            record.val_accuracy = Some(e.accuracy);
        }
        log::debug!(
            "{} epoch {epoch}: train loss {:.4} acc {:.3} val {:?}",
            model.spec.kind,
            record.train_loss,
            record.train_accuracy,
            record.val_loss
        );
        let val_loss = record.val_loss;
        history.epochs.push(record);
        if let Some(vl) = val_loss {
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                let snap = if config.restore_best {
                    snapshot(model)
                } else {
                    Snapshot {
                        params: Vec::new(),
                        norms: Vec::new(),
                    }
                };
                best = Some((vl, epoch, snap));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    if let Some((_, epoch, snap)) = best {
        history.best_epoch = Some(epoch);
        if config.restore_best {
            restore(model, snap);
        }
    }
    model.history = history.clone();
    Ok(history)
}
