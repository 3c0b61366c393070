//! Wall-clock cost of one training epoch per architecture on random
//! windows of the default input shape.
//!
//! `cargo run --release -p eegdd-neural --example epoch_timing [windows]`

use std::time::Instant;

use eegdd_core::{State, Window, NUM_FEATURES};
use eegdd_neural::{build_model, train_model, ModelKind, ModelSpec, Sample, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(232);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let windows: Vec<Window> = (0..n)
        .map(|i| Window {
            values: (0..40 * NUM_FEATURES).map(|_| rng.random_range(-1.0..1.0)).collect(),
            state: if i % 3 == 0 { State::Distracted } else { State::Focused },
            participant_id: 1,
            start_frame: (i * 20) as u32,
        })
        .collect();
    let config = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    for kind in ModelKind::ALL {
        let spec = ModelSpec::for_kind(kind);
        let samples: Vec<Sample<'_>> = if spec.seq_len == 1 {
            windows.iter().map(Sample::window).collect()
        } else {
            (0..n - spec.seq_len + 1)
                .map(|i| Sample {
                    windows: windows[i..i + spec.seq_len].iter().collect(),
                    state: windows[i + spec.seq_len - 1].state,
                })
                .collect()
        };
        let mut model = build_model(&spec, 0).expect("valid spec");
        let start = Instant::now();
        train_model(&mut model, &samples, &[], &config).expect("training");
        println!("{kind}: {:.2} s per epoch over {} samples", start.elapsed().as_secs_f64(), samples.len());
    }
}
