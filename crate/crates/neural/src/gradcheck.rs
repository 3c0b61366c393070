//! Analytic gradients against central finite differences.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layers::{softmax_xent, Param, ParamKind};
use crate::model::{NeuralModel, Sample};

/// Denominator floor for the relative error. Conv biases feeding batch norm
/// have an exact zero gradient, where central differences leave only
/// rounding noise of order 1e-11.
pub const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindReport {
    pub kind: ParamKind,
    pub checked: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub per_kind: Vec<KindReport>,
    /// Coordinates left out because a perturbation flipped a ReLU.
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn checked(&self) -> usize {
        self.per_kind.iter().map(|k| k.checked).sum()
    }
}

fn with_param(model: &mut NeuralModel, index: usize, f: impl FnOnce(&mut Param)) {
    let mut f = Some(f);
    let mut k = 0;
    model.net.visit_params(&mut |p| {
        if k == index {
            (f.take().expect("visited once"))(p);
        }
        k += 1;
    });
}

fn loss(model: &mut NeuralModel, samples: &[Sample<'_>], targets: &[usize]) -> Result<(f64, Vec<bool>)> {
    let logits = model.logits(samples, true)?;
    let out = softmax_xent(&logits, 2, targets, &[1.0, 1.0]);
    Ok((out.loss, model.net.relu_pattern()))
}

/// Check up to `per_kind` randomly chosen coordinates of every parameter
/// family (all of them when a family is smaller). The loss is the
/// training-mode mean cross-entropy over `samples`.
pub fn grad_check(
    model: &NeuralModel,
    samples: &[Sample<'_>],
    step: f64,
    per_kind: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut m = model.clone();
    let targets: Vec<usize> = samples.iter().map(|s| s.state.index()).collect();
    m.net.visit_params(&mut |p| p.zero_grad());
    let logits = m.logits(samples, true)?;
    let out = softmax_xent(&logits, 2, &targets, &[1.0, 1.0]);
    let base_pattern = m.net.relu_pattern();
    m.net.backward(&out.dlogits);

    let mut groups: BTreeMap<ParamKind, Vec<(usize, usize, f64)>> = BTreeMap::new();
    let mut pi = 0;
    m.net.visit_params(&mut |p| {
        let g = groups.entry(p.kind).or_default();
        g.extend(p.grad.iter().enumerate().map(|(i, &gr)| (pi, i, gr)));
        pi += 1;
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per = Vec::new();
    let mut skipped = 0;
    for (kind, mut coords) in groups {
        coords.shuffle(&mut rng);
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        for &(p, i, analytic) in &coords {
            if checked == per_kind {
                break;
            }
            let mut orig = 0.0;
            with_param(&mut m, p, |q| {
                orig = q.value[i];
                q.value[i] = orig + step;
            });
            let (lp, pat_p) = loss(&mut m, samples, &targets)?;
            with_param(&mut m, p, |q| q.value[i] = orig - step);
            let (lm, pat_m) = loss(&mut m, samples, &targets)?;
            with_param(&mut m, p, |q| q.value[i] = orig);
            if pat_p != base_pattern || pat_m != base_pattern {
                skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * step);
            worst = worst.max(relative_error(analytic, numeric));
            checked += 1;
        }
        per.push(KindReport {
            kind,
            checked,
            max_relative_error: worst,
        });
    }
    Ok(GradCheckReport {
        max_relative_error: per.iter().map(|k| k.max_relative_error).fold(0.0, f64::max),
        per_kind: per,
        skipped_kinks: skipped,
    })
}
