//! Multivariate Rocket: random dilated kernels over channel subsets,
//! summarized by PPV and max, followed by a ridge classifier.

use std::io::{Read, Write};

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classic::ridge::{ridge_fit, state_from_score, RidgeFit, RidgeModel};
use crate::classic::DenseMatrix;
use crate::data::State;
use crate::error::{Error, Result};
use crate::scaler::FeatureScaler;
use crate::segment::Window;

pub const KERNEL_LENGTHS: [usize; 3] = [7, 9, 11];
pub const DEFAULT_KERNELS: usize = 10_000;
const MODEL_MAGIC: &[u8; 4] = b"EDR1";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RocketKernel {
    pub length: usize,
    /// Sorted channel (feature) indices the kernel reads.
    pub channels: Vec<usize>,
    /// `channels.len() × length`, each channel's taps mean-centered.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dilation: usize,
    pub padding: bool,
}

impl RocketKernel {
    pub fn padding_amount(&self) -> usize {
        if self.padding {
            (self.length - 1) * self.dilation / 2
        } else {
            0
        }
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len + 2 * self.padding_amount()).saturating_sub((self.length - 1) * self.dilation)
    }

    /// `(ppv, max)` of the kernel over a time-major `input_len × dim` series.
    pub fn apply(&self, series: &[f64], input_len: usize, dim: usize) -> (f64, f64) {
        let pad = self.padding_amount() as isize;
        let out_len = self.output_len(input_len);
        let mut positive = 0usize;
        let mut max = f64::NEG_INFINITY;
        for i in 0..out_len {
            let mut sum = self.bias;
            for j in 0..self.length {
                let t = i as isize + (j * self.dilation) as isize - pad;
                if t < 0 || t >= input_len as isize {
                    continue;
                }
                let row = &series[t as usize * dim..(t as usize + 1) * dim];
                for (c, &ch) in self.channels.iter().enumerate() {
                    sum += self.weights[c * self.length + j] * row[ch];
                }
            }
            if sum > 0.0 {
                positive += 1;
            }
            if sum > max {
                max = sum;
            }
        }
        (positive as f64 / out_len as f64, max)
    }
}

/// Draw `count` kernels for series of `input_len` steps over `channels`
/// dimensions.
pub fn rocket_generate(count: usize, input_len: usize, channels: usize, seed: u64) -> Vec<RocketKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_exponent = (channels as f64).log2().floor() as u32;
    (0..count)
        .map(|_| {
            let length = KERNEL_LENGTHS[rng.random_range(0..KERNEL_LENGTHS.len())];
            let subset = (1usize << rng.random_range(0..=max_exponent)).min(channels);
            let mut chosen = index::sample(&mut rng, channels, subset).into_vec();
            chosen.sort_unstable();
            let mut weights = Vec::with_capacity(subset * length);
            for _ in 0..subset {
                let taps: Vec<f64> = (0..length).map(|_| StandardNormal.sample(&mut rng)).collect();
                let mean = taps.iter().sum::<f64>() / length as f64;
                weights.extend(taps.iter().map(|w| w - mean));
            }
            let bias = rng.random_range(-1.0..=1.0);
            let span = (input_len.max(2) - 1) as f64 / (length - 1) as f64;
            let exponent = rng.random_range(0.0..=span.log2().max(0.0));
            let dilation = (2f64.powf(exponent) as usize).max(1);
            let padding = rng.random_bool(0.5);
            RocketKernel {
                length,
                channels: chosen,
                weights,
                bias,
                dilation,
                padding,
            }
        })
        .collect()
}

/// `n × 2K` matrix of `(ppv, max)` pairs in kernel order. Each series is
/// time-major `input_len × dim`.
pub fn rocket_transform(
    series: &[Vec<f64>],
    input_len: usize,
    dim: usize,
    kernels: &[RocketKernel],
) -> Result<DenseMatrix> {
    if let Some(k) = kernels.iter().find(|k| k.channels.iter().any(|&c| c >= dim)) {
        return Err(Error::InvalidArgument(format!(
            "kernel references channel {} of {dim}",
            k.channels.iter().max().expect("non-empty")
        )));
    }
    let mut data = vec![0.0; series.len() * 2 * kernels.len()];
    for (row, s) in data.chunks_exact_mut(2 * kernels.len().max(1)).zip(series) {
        if s.len() != input_len * dim {
            return Err(Error::ShapeMismatch(format!(
                "series has {} values, expected {input_len}×{dim}",
                s.len()
            )));
        }
        for (slot, k) in row.chunks_exact_mut(2).zip(kernels) {
            let (ppv, max) = k.apply(s, input_len, dim);
            slot[0] = ppv;
            slot[1] = max;
        }
    }
    DenseMatrix::new(series.len(), 2 * kernels.len(), data)
}

/// Trained Rocket pipeline: input standardization, kernels and ridge head.
#[derive(Debug, Clone, PartialEq)]
pub struct RocketModel {
    pub seed: u64,
    pub input_len: usize,
    pub scaler: FeatureScaler,
    pub kernels: Vec<RocketKernel>,
    pub ridge: RidgeModel,
}

pub fn windows_to_series(windows: &[Window], scaler: &FeatureScaler) -> Vec<Vec<f64>> {
    windows.iter().map(|w| scaler.transform(&w.values)).collect()
}

fn targets(windows: &[Window]) -> Vec<f64> {
    windows.iter().map(|w| w.state.sign()).collect()
}

/// Fit kernels, transform and ridge head. Features are standardized with
/// statistics of the training windows.
pub fn fit_rocket(
    train: &[Window],
    validation: &[Window],
    kernel_count: usize,
    seed: u64,
    lambdas: &[f64],
) -> Result<(RocketModel, RidgeFit)> {
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("Rocket needs training windows".into()))?;
    if kernel_count == 0 {
        return Err(Error::InvalidArgument("Rocket needs at least one kernel".into()));
    }
    let input_len = first.len();
    let scaler = FeatureScaler::fit(train)?;
    let dim = scaler.dim();
    let kernels = rocket_generate(kernel_count, input_len, dim, seed);
    let x = rocket_transform(&windows_to_series(train, &scaler), input_len, dim, &kernels)?;
    let y = targets(train);
    let fit = if validation.is_empty() {
        ridge_fit(&x, &y, lambdas, None)?
    } else {
        let vx = rocket_transform(&windows_to_series(validation, &scaler), input_len, dim, &kernels)?;
        let vy = targets(validation);
        ridge_fit(&x, &y, lambdas, Some((&vx, &vy)))?
    };
    Ok((
        RocketModel {
            seed,
            input_len,
            scaler,
            kernels,
            ridge: fit.model.clone(),
        },
        fit,
    ))
}

impl RocketModel {
    /// Ridge scores for each window.
    pub fn decision_scores(&self, windows: &[Window]) -> Result<Vec<f64>> {
        let x = rocket_transform(
            &windows_to_series(windows, &self.scaler),
            self.input_len,
            self.scaler.dim(),
            &self.kernels,
        )?;
        (0..x.rows).map(|i| self.ridge.decision(x.row(i))).collect()
    }

    pub fn predict(&self, windows: &[Window]) -> Result<Vec<State>> {
        Ok(self.decision_scores(windows)?.into_iter().map(state_from_score).collect())
    }

    /// `EDR1` container: version, K, seed, input length, per-kernel records,
    /// the ridge block (means, stds, weights, intercept, λ) and the input
    /// scaler. All little-endian, floats as f64.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let u32le = |v: usize| (v as u32).to_le_bytes();
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&MODEL_VERSION.to_le_bytes())?;
        out.write_all(&u32le(self.kernels.len()))?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&u32le(self.input_len))?;
        for k in &self.kernels {
            out.write_all(&u32le(k.length))?;
            out.write_all(&u32le(k.dilation))?;
            out.write_all(&[u8::from(k.padding)])?;
            out.write_all(&k.bias.to_le_bytes())?;
            out.write_all(&u32le(k.channels.len()))?;
            for &c in &k.channels {
                out.write_all(&u32le(c))?;
            }
            write_f64s(out, &k.weights)?;
        }
        let r = &self.ridge;
        out.write_all(&u32le(r.dim()))?;
        write_f64s(out, &r.feature_means)?;
        write_f64s(out, &r.feature_stds)?;
        write_f64s(out, &r.weights)?;
        out.write_all(&r.intercept.to_le_bytes())?;
        out.write_all(&r.lambda.to_le_bytes())?;
        out.write_all(&u32le(self.scaler.dim()))?;
        write_f64s(out, &self.scaler.means)?;
        write_f64s(out, &self.scaler.stds)
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut r = Reader(input);
        if &r.bytes::<4>()? != MODEL_MAGIC {
            return Err(Error::Format("not a Rocket model (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported Rocket model version {version}")));
        }
        let count = r.u32()? as usize;
        let seed = u64::from_le_bytes(r.bytes::<8>()?);
        let input_len = r.u32()? as usize;
        let mut kernels = Vec::with_capacity(count);
        for _ in 0..count {
            let length = r.u32()? as usize;
            let dilation = r.u32()? as usize;
            let padding = r.bytes::<1>()?[0] != 0;
            let bias = r.f64()?;
            let n = r.u32()? as usize;
            let channels = (0..n).map(|_| r.u32().map(|c| c as usize)).collect::<Result<_>>()?;
            let weights = r.f64s(n * length)?;
            kernels.push(RocketKernel {
                length,
                channels,
                weights,
                bias,
                dilation,
                padding,
            });
        }
        let dim = r.u32()? as usize;
        let ridge = RidgeModel {
            feature_means: r.f64s(dim)?,
            feature_stds: r.f64s(dim)?,
            weights: r.f64s(dim)?,
            intercept: r.f64()?,
            lambda: r.f64()?,
        };
        let sdim = r.u32()? as usize;
        let scaler = FeatureScaler {
            means: r.f64s(sdim)?,
            stds: r.f64s(sdim)?,
        };
        Ok(Self {
            seed,
            input_len,
            scaler,
            kernels,
            ridge,
        })
    }
}

fn write_f64s<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<'a, R>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated Rocket model: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        self.bytes::<4>().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.bytes::<8>().map(f64::from_le_bytes)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_kernel(bias: f64) -> RocketKernel {
        RocketKernel {
            length: 9,
            channels: vec![0, 3],
            weights: vec![0.0; 18],
            bias,
            dilation: 2,
            padding: false,
        }
    }

    #[test]
    fn constant_output() {
        let x = vec![0.5; 40 * 4];
        let (ppv, max) = constant_kernel(-1.0).apply(&x, 40, 4);
        assert_eq!((ppv, max), (0.0, -1.0));
        let (ppv, _) = constant_kernel(0.25).apply(&x, 40, 4);
        assert_eq!(ppv, 1.0);
    }

    #[test]
    fn generation_contract() {
        let a = rocket_generate(300, 40, 266, 7);
        assert_eq!(a, rocket_generate(300, 40, 266, 7));
        for k in &a {
            assert!(KERNEL_LENGTHS.contains(&k.length));
            assert!((k.length - 1) * k.dilation <= 39 || k.padding);
            assert!((-1.0..=1.0).contains(&k.bias));
            assert!(k.channels.len().is_power_of_two() && k.channels.len() <= 256);
            assert!(k.channels.windows(2).all(|p| p[0] < p[1]));
            for taps in k.weights.chunks_exact(k.length) {
                assert!(taps.iter().sum::<f64>().abs() < 1e-9);
            }
        }
        assert!(a.iter().any(|k| k.padding) && a.iter().any(|k| !k.padding));
        assert!(a.iter().any(|k| k.dilation > 1));
    }

    #[test]
    fn transform_shape_and_bounds() {
        let kernels = rocket_generate(20, 40, 6, 1);
        let series: Vec<Vec<f64>> = (0..3)
            .map(|s| (0..240).map(|i| ((i * (s + 3)) as f64).sin()).collect())
            .collect();
        let x = rocket_transform(&series, 40, 6, &kernels).unwrap();
        assert_eq!((x.rows, x.cols), (3, 40));
        for i in 0..3 {
            for k in 0..20 {
                assert!((0.0..=1.0).contains(&x.get(i, 2 * k)));
            }
        }
        let bad = rocket_generate(5, 40, 300, 1);
        assert!(rocket_transform(&series, 40, 6, &bad).is_err());
    }
}
