use rand::Rng;

use super::{Param, ParamKind};
use crate::error::{NeuralError, Result};
use crate::tensor::{gemm, Mat};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// LSTM over a `[step][feature][batch]` sequence with gate order
/// input, forget, candidate, output. Initial state is zero; the forget
/// bias starts at 1.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub inputs: usize,
    pub hidden: usize,
    /// `4H × D`.
    pub w: Param,
    /// `4H × H`.
    pub u: Param,
    pub b: Param,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    steps: usize,
    batch: usize,
    x: Vec<f64>,
    /// Activated gates per step, `4H × batch`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

impl Lstm {
    pub fn new<R: Rng>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let g = 4 * hidden;
        let mut b = vec![0.0; g];
        b[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
        Self {
            inputs,
            hidden,
            w: Param::glorot(ParamKind::Lstm, g * inputs, inputs, g, rng),
            u: Param::glorot(ParamKind::Lstm, g * hidden, hidden, g, rng),
            b: Param::new(ParamKind::Lstm, b),
            cache: None,
        }
    }

    /// Returns every hidden state, `[step][H][batch]`.
    pub fn forward(&mut self, x: &[f64], steps: usize, batch: usize) -> Result<Vec<f64>> {
        let (d, hd) = (self.inputs, self.hidden);
        if x.len() != steps * d * batch {
            return Err(NeuralError::Shape(format!(
                "lstm expects {steps} steps × {d} features × {batch}, got {} values",
                x.len()
            )));
        }
        let hb = hd * batch;
        let mut gates = vec![0.0; steps * 4 * hb];
        let mut c = vec![0.0; steps * hb];
        let mut tanh_c = vec![0.0; steps * hb];
        let mut h = vec![0.0; steps * hb];
        for t in 0..steps {
            let z = &mut gates[t * 4 * hb..(t + 1) * 4 * hb];
            for (row, &bias) in z.chunks_exact_mut(batch).zip(&self.b.value) {
                row.iter_mut().for_each(|v| *v = bias);
            }
            gemm(
                Mat::new(&self.w.value, 4 * hd, d),
                Mat::new(&x[t * d * batch..(t + 1) * d * batch], d, batch),
                z,
                1.0,
            );
            if t > 0 {
                gemm(
                    Mat::new(&self.u.value, 4 * hd, hd),
                    Mat::new(&h[(t - 1) * hb..t * hb], hd, batch),
                    z,
                    1.0,
                );
            }
            for (k, v) in z.iter_mut().enumerate() {
                *v = if (2 * hb..3 * hb).contains(&k) { v.tanh() } else { sigmoid(*v) };
            }
            for k in 0..hb {
                let (i, f, g, o) = (z[k], z[hb + k], z[2 * hb + k], z[3 * hb + k]);
                let prev = if t > 0 { c[(t - 1) * hb + k] } else { 0.0 };
                let ct = f * prev + i * g;
                let th = ct.tanh();
                c[t * hb + k] = ct;
                tanh_c[t * hb + k] = th;
                h[t * hb + k] = o * th;
            }
        }
        self.cache = Some(Cache {
            steps,
            batch,
            x: x.to_vec(),
            gates,
            c,
            tanh_c,
            h: h.clone(),
        });
        Ok(h)
    }

    /// Backpropagation through time. `dh` holds the loss gradient for every
    /// emitted hidden state; returns the input gradient.
    pub fn backward(&mut self, dh: &[f64]) -> Vec<f64> {
        let cache = self.cache.as_ref().expect("lstm backward before forward");
        let (d, hd, steps, batch) = (self.inputs, self.hidden, cache.steps, cache.batch);
        let hb = hd * batch;
        assert_eq!(dh.len(), steps * hb);
        let mut dx = vec![0.0; steps * d * batch];
        let mut dh_next = vec![0.0; hb];
        let mut dc_next = vec![0.0; hb];
        let mut dz = vec![0.0; 4 * hb];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * 4 * hb..(t + 1) * 4 * hb];
            for k in 0..hb {
                let (i, f, g, o) = (gates[k], gates[hb + k], gates[2 * hb + k], gates[3 * hb + k]);
                let th = cache.tanh_c[t * hb + k];
                let dht = dh[t * hb + k] + dh_next[k];
                let dc = dc_next[k] + dht * o * (1.0 - th * th);
                let prev = if t > 0 { cache.c[(t - 1) * hb + k] } else { 0.0 };
                dz[k] = dc * g * i * (1.0 - i);
                dz[hb + k] = dc * prev * f * (1.0 - f);
                dz[2 * hb + k] = dc * i * (1.0 - g * g);
                dz[3 * hb + k] = dht * th * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            gemm(
                Mat::new(&dz, 4 * hd, batch),
                Mat::t(&cache.x[t * d * batch..(t + 1) * d * batch], batch, d),
                &mut self.w.grad,
                1.0,
            );
            for (gb, row) in self.b.grad.iter_mut().zip(dz.chunks_exact(batch)) {
                *gb += row.iter().sum::<f64>();
            }
            gemm(
                Mat::t(&self.w.value, d, 4 * hd),
                Mat::new(&dz, 4 * hd, batch),
                &mut dx[t * d * batch..(t + 1) * d * batch],
                0.0,
            );
            if t > 0 {
                gemm(
                    Mat::new(&dz, 4 * hd, batch),
                    Mat::t(&cache.h[(t - 1) * hb..t * hb], batch, hd),
                    &mut self.u.grad,
                    1.0,
                );
                gemm(
                    Mat::t(&self.u.value, hd, 4 * hd),
                    Mat::new(&dz, 4 * hd, batch),
                    &mut dh_next,
                    0.0,
                );
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> [&mut Param; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn zero_parameters_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = Lstm::new(3, 4, &mut rng);
        for p in l.params_mut() {
            p.value.iter_mut().for_each(|v| *v = 0.0);
        }
        let h = l.forward(&random(5 * 3 * 2, &mut rng), 5, 2).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hidden_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut l = Lstm::new(3, 6, &mut rng);
        for p in l.params_mut() {
            p.value.iter_mut().for_each(|v| *v *= 20.0);
        }
        let x: Vec<f64> = random(10 * 3 * 4, &mut rng).iter().map(|v| v * 100.0).collect();
        let h = l.forward(&x, 10, 4).unwrap();
        assert!(h.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn bptt_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (steps, d, hd, batch) = (3, 2, 4, 2);
        let mut l = Lstm::new(d, hd, &mut rng);
        let x = random(steps * d * batch, &mut rng);
        let r = random(steps * hd * batch, &mut rng);
        let loss = |l: &mut Lstm, x: &[f64]| -> f64 {
            l.forward(x, steps, batch).unwrap().iter().zip(&r).map(|(a, b)| a * b).sum()
        };
        loss(&mut l, &x);
        let dx = l.backward(&r);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        let mut worst: f64 = 0.0;
        for pi in 0..3 {
            let grad = l.params_mut()[pi].grad.clone();
            for i in 0..grad.len() {
                let v = l.params_mut()[pi].value[i];
                l.params_mut()[pi].value[i] = v + h;
                let lp = loss(&mut l, &x);
                l.params_mut()[pi].value[i] = v - h;
                let lm = loss(&mut l, &x);
                l.params_mut()[pi].value[i] = v;
                worst = worst.max(rel(grad[i], (lp - lm) / (2.0 * h)));
            }
        }
        let mut xp = x.clone();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let lp = loss(&mut l, &xp);
            xp[i] = x[i] - h;
            let lm = loss(&mut l, &xp);
            xp[i] = x[i];
            worst = worst.max(rel(dx[i], (lp - lm) / (2.0 * h)));
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }
}
