//! The three architectures and the model wrapper that feeds them windows.

use std::fmt;
use std::str::FromStr;

use eegdd_core::{FeatureScaler, State, Window, WindowSequence, NUM_FEATURES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NeuralError, Result};
use crate::layers::{
    gap_backward, gap_forward, relu_backward, softmax, BatchNorm, Conv1d, Dense, Lstm, Param,
};
use crate::train::TrainingHistory;

/// Samples per forward pass at inference time.
pub const PREDICT_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Fcn,
    Resnet,
    FcnLstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Fcn, ModelKind::Resnet, ModelKind::FcnLstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Fcn => "fcn",
            ModelKind::Resnet => "resnet",
            ModelKind::FcnLstm => "fcn_lstm",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelKind::Fcn => 0,
            ModelKind::Resnet => 1,
            ModelKind::FcnLstm => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = NeuralError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fcn" => Ok(ModelKind::Fcn),
            "resnet" => Ok(ModelKind::Resnet),
            "fcn_lstm" | "lrcn" => Ok(ModelKind::FcnLstm),
            other => Err(NeuralError::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Everything needed to reproduce parameter shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub channels: usize,
    pub length: usize,
    /// Windows per sample: 1 except for FCN_LSTM.
    pub seq_len: usize,
    /// Conv filters (FCN) or block widths (ResNet).
    pub filters: Vec<usize>,
    pub kernels: Vec<usize>,
    pub lstm_hidden: Vec<usize>,
    pub classes: usize,
}

impl ModelSpec {
    pub fn fcn() -> Self {
        Self {
            kind: ModelKind::Fcn,
            channels: NUM_FEATURES,
            length: 40,
            seq_len: 1,
            filters: vec![128, 256, 128],
            kernels: vec![8, 5, 3],
            lstm_hidden: Vec::new(),
            classes: 2,
        }
    }

    pub fn resnet() -> Self {
        Self {
            kind: ModelKind::Resnet,
            filters: vec![64, 128, 128],
            ..Self::fcn()
        }
    }

    pub fn fcn_lstm() -> Self {
        Self {
            kind: ModelKind::FcnLstm,
            seq_len: 4,
            lstm_hidden: vec![128, 128],
            ..Self::fcn()
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Fcn => Self::fcn(),
            ModelKind::Resnet => Self::resnet(),
            ModelKind::FcnLstm => Self::fcn_lstm(),
        }
    }

    /// Same architecture with every width replaced, for toy-scale runs.
    pub fn scaled(mut self, filters: usize, hidden: usize) -> Self {
        self.filters.iter_mut().for_each(|f| *f = filters);
        self.lstm_hidden.iter_mut().for_each(|h| *h = hidden);
        self
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.length = length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.channels == 0 || self.length == 0 {
            return bad("input channels and length must be positive");
        }
        if self.filters.len() != 3 || self.filters.contains(&0) {
            return bad("exactly three positive filter counts are required");
        }
        if self.kernels.len() != 3 || self.kernels.contains(&0) {
            return bad("exactly three positive kernel sizes are required");
        }
        if self.classes != 2 {
            return bad("only binary classification is supported");
        }
        match self.kind {
            ModelKind::FcnLstm => {
                if self.seq_len == 0 || self.lstm_hidden.is_empty() || self.lstm_hidden.contains(&0) {
                    return bad("FCN_LSTM needs a positive sequence length and hidden sizes");
                }
            }
            _ => {
                if self.seq_len != 1 || !self.lstm_hidden.is_empty() {
                    return bad("only FCN_LSTM takes sequences or LSTM layers");
                }
            }
        }
        Ok(())
    }
}

/// One training or inference example: a single window, or the ordered
/// windows of a sequence.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub windows: Vec<&'a Window>,
    pub state: State,
}

impl<'a> Sample<'a> {
    pub fn window(w: &'a Window) -> Self {
        Self {
            windows: vec![w],
            state: w.state,
        }
    }

    pub fn sequence(pool: &'a [Window], seq: &WindowSequence) -> Result<Self> {
        let windows = seq
            .indices
            .iter()
            .map(|&i| {
                pool.get(i).ok_or_else(|| {
                    NeuralError::Shape(format!("sequence index {i} outside {} windows", pool.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            windows,
            state: seq.state,
        })
    }
}

pub fn window_samples(windows: &[Window]) -> Vec<Sample<'_>> {
    windows.iter().map(Sample::window).collect()
}

pub fn sequence_samples<'a>(pool: &'a [Window], seqs: &[WindowSequence]) -> Result<Vec<Sample<'a>>> {
    seqs.iter().map(|s| Sample::sequence(pool, s)).collect()
}

// ── Network internals ────────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct ConvBlock {
    conv: Conv1d,
    bn: BatchNorm,
    out: Vec<f64>,
}

impl ConvBlock {
    fn new(cin: usize, cout: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            conv: Conv1d::new(cin, cout, k, rng),
            bn: BatchNorm::new(cout),
            out: Vec::new(),
        }
    }

    fn forward(&mut self, x: &[f64], batch: usize, len: usize, train: bool) -> Result<Vec<f64>> {
        let y = self.conv.forward(x, batch, len)?;
        let mut z = self.bn.forward(&y, train)?;
        z.iter_mut().for_each(|v| *v = v.max(0.0));
        if train {
            self.out = z.clone();
        }
        Ok(z)
    }

    fn backward(&mut self, mut dy: Vec<f64>, need_dx: bool) -> Option<Vec<f64>> {
        relu_backward(&mut dy, &self.out);
        let d = self.bn.backward(&dy);
        self.conv.backward(&d, need_dx)
    }

    fn visit(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for p in self.conv.params_mut() {
            f(p);
        }
        for p in self.bn.params_mut() {
            f(p);
        }
    }

    fn clear(&mut self) {
        self.conv.clear_cache();
        self.bn.clear_cache();
        self.out = Vec::new();
    }
}

/// Three conv layers and a residual connection, ReLU after the sum.
#[derive(Debug, Clone)]
struct ResBlock {
    a: ConvBlock,
    b: ConvBlock,
    conv: Conv1d,
    bn: BatchNorm,
    shortcut: Option<(Conv1d, BatchNorm)>,
    out: Vec<f64>,
}

impl ResBlock {
    fn new(cin: usize, cout: usize, kernels: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let a = ConvBlock::new(cin, cout, kernels[0], rng);
        let b = ConvBlock::new(cout, cout, kernels[1], rng);
        let conv = Conv1d::new(cout, cout, kernels[2], rng);
        let shortcut = (cin != cout).then(|| (Conv1d::new(cin, cout, 1, rng), BatchNorm::new(cout)));
        Self {
            a,
            b,
            conv,
            bn: BatchNorm::new(cout),
            shortcut,
            out: Vec::new(),
        }
    }

    fn forward(&mut self, x: &[f64], batch: usize, len: usize, train: bool) -> Result<Vec<f64>> {
        let h = self.a.forward(x, batch, len, train)?;
        let h = self.b.forward(&h, batch, len, train)?;
        let h = self.conv.forward(&h, batch, len)?;
        let mut y = self.bn.forward(&h, train)?;
        match &mut self.shortcut {
            Some((conv, bn)) => {
                let s = bn.forward(&conv.forward(x, batch, len)?, train)?;
                y.iter_mut().zip(&s).for_each(|(v, s)| *v += s);
            }
            None => y.iter_mut().zip(x).for_each(|(v, s)| *v += s),
        }
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        if train {
            self.out = y.clone();
        }
        Ok(y)
    }

    fn backward(&mut self, mut dy: Vec<f64>, need_dx: bool) -> Option<Vec<f64>> {
        relu_backward(&mut dy, &self.out);
        let d = self.bn.backward(&dy);
        let d = self.conv.backward(&d, true).expect("requested");
        let d = self.b.backward(d, true).expect("requested");
        let main = self.a.backward(d, need_dx);
        let side = match &mut self.shortcut {
            Some((conv, bn)) => {
                let d = bn.backward(&dy);
                conv.backward(&d, need_dx)
            }
            None => need_dx.then_some(dy),
        };
        match (main, side) {
            (Some(mut m), Some(s)) => {
                m.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
                Some(m)
            }
            _ => None,
        }
    }

    fn visit(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.a.visit(f);
        self.b.visit(f);
        for p in self.conv.params_mut() {
            f(p);
        }
        for p in self.bn.params_mut() {
            f(p);
        }
        if let Some((conv, bn)) = &mut self.shortcut {
            for p in conv.params_mut() {
                f(p);
            }
            for p in bn.params_mut() {
                f(p);
            }
        }
    }

    fn visit_norms(&mut self, f: &mut dyn FnMut(&mut BatchNorm)) {
        f(&mut self.a.bn);
        f(&mut self.b.bn);
        f(&mut self.bn);
        if let Some((_, bn)) = &mut self.shortcut {
            f(bn);
        }
    }

    fn clear(&mut self) {
        self.a.clear();
        self.b.clear();
        self.conv.clear_cache();
        self.bn.clear_cache();
        if let Some((conv, bn)) = &mut self.shortcut {
            conv.clear_cache();
            bn.clear_cache();
        }
        self.out = Vec::new();
    }
}

#[derive(Debug, Clone)]
enum Body {
    Fcn(Vec<ConvBlock>),
    Resnet(Vec<ResBlock>),
}

#[derive(Debug, Clone)]
pub(crate) struct Network {
    body: Body,
    lstm: Vec<Lstm>,
    dense: Dense,
    features: usize,
    // Shape of the last forward pass.
    batch: usize,
    seq: usize,
    len: usize,
}

impl Network {
    fn new(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Self {
        let body = match spec.kind {
            ModelKind::Fcn | ModelKind::FcnLstm => {
                let mut cin = spec.channels;
                Body::Fcn(
                    spec.filters
                        .iter()
                        .zip(&spec.kernels)
                        .map(|(&f, &k)| {
                            let b = ConvBlock::new(cin, f, k, rng);
                            cin = f;
                            b
                        })
                        .collect(),
                )
            }
            ModelKind::Resnet => {
                let mut cin = spec.channels;
                Body::Resnet(
                    spec.filters
                        .iter()
                        .map(|&f| {
                            let b = ResBlock::new(cin, f, &spec.kernels, rng);
                            cin = f;
                            b
                        })
                        .collect(),
                )
            }
        };
        let features = *spec.filters.last().expect("validated");
        let mut width = features;
        let lstm = spec
            .lstm_hidden
            .iter()
            .map(|&h| {
                let l = Lstm::new(width, h, rng);
                width = h;
                l
            })
            .collect();
        let dense = Dense::new(width, spec.classes, rng);
        Self {
            body,
            lstm,
            dense,
            features,
            batch: 0,
            seq: 0,
            len: 0,
        }
    }

    /// `x` is `channels × (batch · seq · len)` with window `b · seq + s` in
    /// column block `b · seq + s`. Returns `classes × batch` logits.
    pub(crate) fn forward(&mut self, x: &[f64], batch: usize, seq: usize, len: usize, train: bool) -> Result<Vec<f64>> {
        let windows = batch * seq;
        let mut h = x.to_vec();
        match &mut self.body {
            Body::Fcn(blocks) => {
                for b in blocks {
                    h = b.forward(&h, windows, len, train)?;
                }
            }
            Body::Resnet(blocks) => {
                for b in blocks {
                    h = b.forward(&h, windows, len, train)?;
                }
            }
        }
        let emb = gap_forward(&h, self.features, windows, len);
        self.batch = batch;
        self.seq = seq;
        self.len = len;
        if self.lstm.is_empty() {
            return self.dense.forward(&emb);
        }
        // F × (batch · seq) → [seq][F][batch]
        let f = self.features;
        let mut xs = vec![0.0; seq * f * batch];
        for s in 0..seq {
            for c in 0..f {
                for b in 0..batch {
                    xs[(s * f + c) * batch + b] = emb[c * windows + b * seq + s];
                }
            }
        }
        for l in &mut self.lstm {
            xs = l.forward(&xs, seq, batch)?;
        }
        let hidden = self.lstm.last().expect("non-empty").hidden;
        let last = &xs[(seq - 1) * hidden * batch..];
        self.dense.forward(last)
    }

    pub(crate) fn backward(&mut self, dlogits: &[f64]) {
        let (batch, seq, len) = (self.batch, self.seq, self.len);
        let windows = batch * seq;
        let dfeat = self.dense.backward(dlogits);
        let demb = if self.lstm.is_empty() {
            dfeat
        } else {
            let hidden = self.lstm.last().expect("non-empty").hidden;
            let mut dh = vec![0.0; seq * hidden * batch];
            dh[(seq - 1) * hidden * batch..].copy_from_slice(&dfeat);
            for l in self.lstm.iter_mut().rev() {
                dh = l.backward(&dh);
            }
            let f = self.features;
            let mut demb = vec![0.0; f * windows];
            for s in 0..seq {
                for c in 0..f {
                    for b in 0..batch {
                        demb[c * windows + b * seq + s] = dh[(s * f + c) * batch + b];
                    }
                }
            }
            demb
        };
        let mut d = Some(gap_backward(&demb, len));
        match &mut self.body {
            Body::Fcn(blocks) => {
                for (i, b) in blocks.iter_mut().enumerate().rev() {
                    d = b.backward(d.expect("inner layers return gradients"), i > 0);
                }
            }
            Body::Resnet(blocks) => {
                for (i, b) in blocks.iter_mut().enumerate().rev() {
                    d = b.backward(d.expect("inner layers return gradients"), i > 0);
                }
            }
        }
    }

    /// Parameters in serialization order.
    pub(crate) fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        match &mut self.body {
            Body::Fcn(blocks) => blocks.iter_mut().for_each(|b| b.visit(f)),
            Body::Resnet(blocks) => blocks.iter_mut().for_each(|b| b.visit(f)),
        }
        for l in &mut self.lstm {
            for p in l.params_mut() {
                f(p);
            }
        }
        for p in self.dense.params_mut() {
            f(p);
        }
    }

    pub(crate) fn visit_norms(&mut self, f: &mut dyn FnMut(&mut BatchNorm)) {
        match &mut self.body {
            Body::Fcn(blocks) => blocks.iter_mut().for_each(|b| f(&mut b.bn)),
            Body::Resnet(blocks) => blocks.iter_mut().for_each(|b| b.visit_norms(f)),
        }
    }

    /// Sign pattern of every ReLU output from the last training forward.
    pub(crate) fn relu_pattern(&self) -> Vec<bool> {
        let outs: Vec<&Vec<f64>> = match &self.body {
            Body::Fcn(blocks) => blocks.iter().map(|b| &b.out).collect(),
            Body::Resnet(blocks) => blocks
                .iter()
                .flat_map(|b| [&b.a.out, &b.b.out, &b.out])
                .collect(),
        };
        outs.into_iter().flatten().map(|&v| v > 0.0).collect()
    }

    pub(crate) fn clear_caches(&mut self) {
        match &mut self.body {
            Body::Fcn(blocks) => blocks.iter_mut().for_each(ConvBlock::clear),
            Body::Resnet(blocks) => blocks.iter_mut().for_each(ResBlock::clear),
        }
        self.lstm.iter_mut().for_each(Lstm::clear_cache);
        self.dense.clear_cache();
    }
}

// ── Public model ─────────────────────────────────────────────────────────

/// A network with its input scaler and training history.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub(crate) spec: ModelSpec,
    pub(crate) scaler: FeatureScaler,
    pub(crate) net: Network,
    pub(crate) history: TrainingHistory,
}

/// Seeded Glorot-uniform initialization; the scaler starts as identity.
pub fn build_model(spec: &ModelSpec, seed: u64) -> Result<NeuralModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(NeuralModel {
        spec: spec.clone(),
        scaler: FeatureScaler::identity(spec.channels),
        net: Network::new(spec, &mut rng),
        history: TrainingHistory::default(),
    })
}

impl NeuralModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    pub fn set_scaler(&mut self, scaler: FeatureScaler) -> Result<()> {
        if scaler.dim() != self.spec.channels {
            return Err(NeuralError::Shape(format!(
                "scaler has {} features, model expects {}",
                scaler.dim(),
                self.spec.channels
            )));
        }
        self.scaler = scaler;
        Ok(())
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    /// Copies of every parameter array in serialization order.
    pub fn parameters(&mut self) -> Vec<Param> {
        let mut out = Vec::new();
        self.net.visit_params(&mut |p| out.push(p.clone()));
        out
    }

    pub fn parameter_count(&mut self) -> usize {
        let mut n = 0;
        self.net.visit_params(&mut |p| n += p.len());
        n
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param)) {
        self.net.visit_params(f);
    }

    /// Standardized `channels × (samples · seq · len)` input matrix.
    pub(crate) fn assemble(&self, samples: &[Sample<'_>]) -> Result<Vec<f64>> {
        let (c, l, s) = (self.spec.channels, self.spec.length, self.spec.seq_len);
        let n = samples.len() * s * l;
        let mut x = vec![0.0; c * n];
        for (b, sample) in samples.iter().enumerate() {
            if sample.windows.len() != s {
                return Err(NeuralError::Shape(format!(
                    "{} model takes {s} window(s) per sample, got {}",
                    self.spec.kind,
                    sample.windows.len()
                )));
            }
            for (si, w) in sample.windows.iter().enumerate() {
                if w.values.len() != c * l {
                    return Err(NeuralError::Shape(format!(
                        "window has {} values, model expects {l} × {c}",
                        w.values.len()
                    )));
                }
                let col = (b * s + si) * l;
                for (t, frame) in w.values.chunks_exact(c).enumerate() {
                    for (f, v) in frame.iter().enumerate() {
                        x[f * n + col + t] = (v - self.scaler.means[f]) / self.scaler.stds[f];
                    }
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::Shape("non-finite input".into()));
        }
        Ok(x)
    }

    pub(crate) fn logits(&mut self, samples: &[Sample<'_>], train: bool) -> Result<Vec<f64>> {
        let x = self.assemble(samples)?;
        self.net
            .forward(&x, samples.len(), self.spec.seq_len, self.spec.length, train)
    }

    /// Class probabilities `[p_distracted, p_focused]` per sample.
    pub fn predict_proba(&mut self, samples: &[Sample<'_>]) -> Result<Vec<[f64; 2]>> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(PREDICT_BATCH) {
            let logits = self.logits(chunk, false)?;
            let p = softmax(&logits, 2);
            let b = chunk.len();
            out.extend((0..b).map(|i| [p[i], p[b + i]]));
        }
        self.net.clear_caches();
        Ok(out)
    }

    /// Arg-max state; an exact tie goes to DISTRACTED.
    pub fn predict(&mut self, samples: &[Sample<'_>]) -> Result<Vec<State>> {
        Ok(self
            .predict_proba(samples)?
            .into_iter()
            .map(|p| if p[0] >= p[1] { State::Distracted } else { State::Focused })
            .collect())
    }
}
