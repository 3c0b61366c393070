//! Binary model files: magic `EDN1`, then version, spec, scaler, parameter
//! blobs in visiting order, batch-norm running statistics and training
//! history. All numbers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use eegdd_core::FeatureScaler;

use crate::error::{NeuralError, Result};
use crate::model::{build_model, ModelKind, ModelSpec, NeuralModel};
use crate::train::{EpochRecord, TrainingHistory};

const MAGIC: &[u8; 4] = b"EDN1";
const VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| NeuralError::Format(format!("{v} does not fit u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s<W: Write>(w: &mut W, vs: &[f64]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn put_list<W: Write>(w: &mut W, vs: &[usize]) -> Result<()> {
    put_u32(w, vs.len())?;
    vs.iter().try_for_each(|&v| put_u32(w, v))
}

fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn get_list<R: Read>(r: &mut R) -> Result<Vec<usize>> {
    let n = get_u32(r)?;
    if n > 64 {
        return Err(NeuralError::Format(format!("implausible list length {n}")));
    }
    (0..n).map(|_| get_u32(r)).collect()
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn unopt(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

impl NeuralModel {
    pub fn write_to<W: Write>(&mut self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION as usize)?;

        let s = &self.spec;
        w.write_all(&[s.kind.code()])?;
        put_u32(w, s.channels)?;
        put_u32(w, s.length)?;
        put_u32(w, s.seq_len)?;
        put_u32(w, s.classes)?;
        put_list(w, &s.filters)?;
        put_list(w, &s.kernels)?;
        put_list(w, &s.lstm_hidden)?;

        put_u32(w, self.scaler.dim())?;
        put_f64s(w, &self.scaler.means)?;
        put_f64s(w, &self.scaler.stds)?;

        let params = self.parameters();
        put_u32(w, params.len())?;
        for p in &params {
            put_u32(w, p.len())?;
            put_f64s(w, &p.value)?;
        }

        let mut norms = Vec::new();
        self.net
            .visit_norms(&mut |bn| norms.push((bn.running_mean.clone(), bn.running_var.clone(), bn.tracked)));
        put_u32(w, norms.len())?;
        for (mean, var, tracked) in &norms {
            put_u32(w, mean.len())?;
            w.write_all(&[*tracked as u8])?;
            put_f64s(w, mean)?;
            put_f64s(w, var)?;
        }

        let h = &self.history;
        put_u32(w, h.epochs.len())?;
        for e in &h.epochs {
            put_f64s(
                w,
                &[e.train_loss, e.train_accuracy, opt(e.val_loss), opt(e.val_accuracy)],
            )?;
        }
        w.write_all(&h.best_epoch.map_or(u32::MAX, |e| e as u32).to_le_bytes())?;
        w.write_all(&[h.stopped_early as u8])?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NeuralError::Format("missing EDN1 magic".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION as usize {
            return Err(NeuralError::Format(format!("unsupported version {version}")));
        }
        let code = get_u8(r)?;
        let kind = ModelKind::from_code(code)
            .ok_or_else(|| NeuralError::Format(format!("unknown model kind code {code}")))?;
        let spec = ModelSpec {
            kind,
            channels: get_u32(r)?,
            length: get_u32(r)?,
            seq_len: get_u32(r)?,
            classes: get_u32(r)?,
            filters: get_list(r)?,
            kernels: get_list(r)?,
            lstm_hidden: get_list(r)?,
        };
        let mut model = build_model(&spec, 0).map_err(|e| NeuralError::Format(e.to_string()))?;

        let dim = get_u32(r)?;
        if dim != spec.channels {
            return Err(NeuralError::Format(format!("scaler dim {dim} vs {} channels", spec.channels)));
        }
        let means = get_f64s(r, dim)?;
        let stds = get_f64s(r, dim)?;
        model.scaler = FeatureScaler { means, stds };

        let expected: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
        if get_u32(r)? != expected.len() {
            return Err(NeuralError::Format("parameter count does not match spec".into()));
        }
        let mut blobs = Vec::with_capacity(expected.len());
        for &len in &expected {
            if get_u32(r)? != len {
                return Err(NeuralError::Format("parameter shape does not match spec".into()));
            }
            blobs.push(get_f64s(r, len)?);
        }
        let mut it = blobs.into_iter();
        model.net.visit_params(&mut |p| p.value = it.next().expect("counted"));

        let mut channels = Vec::new();
        model.net.visit_norms(&mut |bn| channels.push(bn.channels));
        if get_u32(r)? != channels.len() {
            return Err(NeuralError::Format("batch norm count does not match spec".into()));
        }
        let mut stats = Vec::with_capacity(channels.len());
        for &c in &channels {
            if get_u32(r)? != c {
                return Err(NeuralError::Format("batch norm width does not match spec".into()));
            }
            let tracked = get_u8(r)? != 0;
            stats.push((get_f64s(r, c)?, get_f64s(r, c)?, tracked));
        }
        let mut it = stats.into_iter();
        model.net.visit_norms(&mut |bn| {
            let (m, v, t) = it.next().expect("counted");
            bn.running_mean = m;
            bn.running_var = v;
            bn.tracked = t;
        });

        let n = get_u32(r)?;
        let mut epochs = Vec::with_capacity(n.min(100_000));
        for _ in 0..n {
            let v = get_f64s(r, 4)?;
            epochs.push(EpochRecord {
                train_loss: v[0],
                train_accuracy: v[1],
                val_loss: unopt(v[2]),
                val_accuracy: unopt(v[3]),
            });
        }
        let best = get_u32(r)?;
        let stopped_early = get_u8(r)? != 0;
        model.history = TrainingHistory {
            epochs,
            best_epoch: (best != u32::MAX as usize).then_some(best),
            stopped_early,
        };
        Ok(model)
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
