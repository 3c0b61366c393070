//! Seeded synthetic EEG corpus.
//!
//! Every channel is a sum of one sinusoid per band plus white noise. The
//! amplitude of each band depends on the current driver state through
//! per-region multipliers, so band-power features separate the two states
//! by a controllable margin. Task schedules alternate focused and
//! distracted blocks; each focused/distracted cycle spends exactly the
//! target fraction of its time distracted.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{
    write_raw_csv, ChannelLayout, ParticipantId, RawSession, State, TaskId, NUM_CHANNELS,
    NUM_TASKS, SAMPLE_RATE,
};
use crate::dsp::features::{NUM_BANDS, NUM_REGIONS};
use crate::error::{Error, Result};

/// Frequency range the sinusoid of each band is drawn from.
const SOURCE_BANDS: [(f64, f64); NUM_BANDS] =
    [(4.5, 7.5), (8.5, 11.5), (12.5, 15.5), (16.5, 24.5), (25.5, 39.5)];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorProfile {
    /// Sinusoid amplitude per band in µV before state scaling.
    pub base_amplitudes: [f64; NUM_BANDS],
    /// `[state][region][band]` amplitude multipliers; a channel takes the
    /// product over the regions it belongs to.
    pub multipliers: [[[f64; NUM_BANDS]; NUM_REGIONS]; 2],
    pub noise_sigma: f64,
    /// Range of the mean block length in seconds; a cycle of one distracted
    /// and one focused block lasts twice this.
    pub block_duration_s: (f64, f64),
    pub distracted_fraction: f64,
    pub duration_s: f64,
    pub participants: usize,
}

impl Default for GeneratorProfile {
    /// Desk-scale profile: 6 participants × 300 s, distracted sessions show
    /// raised frontal theta (×1.8) and alpha (×1.4).
    fn default() -> Self {
        let mut multipliers = [[[1.0; NUM_BANDS]; NUM_REGIONS]; 2];
        for region in [0, 1] {
            multipliers[State::Distracted.index()][region][0] = 1.8;
            multipliers[State::Distracted.index()][region][1] = 1.4;
        }
        Self {
            base_amplitudes: [10.0, 8.0, 5.0, 4.0, 3.0],
            multipliers,
            noise_sigma: 3.0,
            block_duration_s: (40.0, 80.0),
            distracted_fraction: 0.36,
            duration_s: 300.0,
            participants: 6,
        }
    }
}

impl GeneratorProfile {
    /// Full-scale corpus: 18 participants × 40 minutes.
    pub fn full_scale() -> Self {
        Self {
            duration_s: 2400.0,
            participants: 18,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("generator profile: {msg}")));
        if self.multipliers.iter().flatten().flatten().any(|&m| !(m > 0.0 && m.is_finite())) {
            return bad("multipliers must be positive".into());
        }
        if self.base_amplitudes.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return bad("base amplitudes must be non-negative".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be non-negative".into());
        }
        if !(self.duration_s >= 4.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} s is shorter than 4 s", self.duration_s));
        }
        if !(self.distracted_fraction > 0.0 && self.distracted_fraction < 1.0) {
            return bad("distracted fraction must lie in (0, 1)".into());
        }
        let (lo, hi) = self.block_duration_s;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("block duration range ({lo}, {hi}) is invalid"));
        }
        Ok(())
    }

    pub fn samples_per_session(&self) -> usize {
        (self.duration_s * SAMPLE_RATE).round() as usize
    }

    /// Amplitude multiplier of `band` on `channel` in `state`.
    fn channel_multiplier(
        &self,
        layout: &ChannelLayout,
        state: State,
        channel: usize,
        band: usize,
    ) -> f64 {
        layout
            .regions()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.channels.contains(&channel))
            .map(|(r, _)| self.multipliers[state.index()][r][band])
            .product()
    }
}

/// Seed of one participant's session, derived from the corpus seed.
pub fn participant_seed(corpus_seed: u64, participant_id: ParticipantId) -> u64 {
    // SplitMix64 finalizer over the combined value.
    let mut z = corpus_seed ^ (participant_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample task ids: alternating focused (task 0) and distracted (tasks
/// 1..15) blocks.
fn task_schedule(profile: &GeneratorProfile, samples: usize, rng: &mut ChaCha8Rng) -> Vec<TaskId> {
    let (lo, hi) = profile.block_duration_s;
    let mean_cycle = lo + hi;
    let cycles = ((profile.duration_s / mean_cycle).round() as usize).max(1);
    let lengths: Vec<f64> = (0..cycles).map(|_| 2.0 * rng.random_range(lo..=hi)).collect();
    let scale = samples as f64 / lengths.iter().sum::<f64>();
    let distracted_first = rng.random_bool(profile.distracted_fraction);
    let f = profile.distracted_fraction;

    let mut tasks = Vec::with_capacity(samples);
    let mut boundary = 0.0;
    for len in lengths {
        let cycle = len * scale;
        let distracted_task = rng.random_range(1..NUM_TASKS as TaskId);
        let blocks = if distracted_first {
            [(distracted_task, cycle * f), (0, cycle * (1.0 - f))]
        } else {
            [(0, cycle * (1.0 - f)), (distracted_task, cycle * f)]
        };
        for (task, span) in blocks {
            boundary += span;
            let end = (boundary.round() as usize).min(samples);
            tasks.resize(end.max(tasks.len()), task);
        }
    }
    let last = *tasks.last().unwrap_or(&0);
    tasks.resize(samples, last);
    tasks
}

fn state_of_task(task: TaskId) -> State {
    if task == 0 {
        State::Focused
    } else {
        State::Distracted
    }
}

/// One participant's recording; identical for identical arguments.
pub fn generate_session(
    profile: &GeneratorProfile,
    participant_id: ParticipantId,
    seed: u64,
) -> Result<RawSession> {
    profile.validate()?;
    let layout = ChannelLayout::emotiv_epoc();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(participant_id as u64);
    let samples = profile.samples_per_session();
    let tasks = task_schedule(profile, samples, &mut rng);

    let mut omega = [[0.0; NUM_BANDS]; NUM_CHANNELS];
    let mut phase = [[0.0; NUM_BANDS]; NUM_CHANNELS];
    for ch in 0..NUM_CHANNELS {
        for (b, &(lo, hi)) in SOURCE_BANDS.iter().enumerate() {
            omega[ch][b] = 2.0 * PI * rng.random_range(lo..hi) / SAMPLE_RATE;
            phase[ch][b] = rng.random_range(0.0..2.0 * PI);
        }
    }
    let mut amplitude = [[[0.0; NUM_BANDS]; NUM_CHANNELS]; 2];
    for state in State::ALL {
        for ch in 0..NUM_CHANNELS {
            for b in 0..NUM_BANDS {
                amplitude[state.index()][ch][b] = profile.base_amplitudes[b]
                    * profile.channel_multiplier(&layout, state, ch, b);
            }
        }
    }

    let mut data = Vec::with_capacity(samples * NUM_CHANNELS);
    for (n, &task) in tasks.iter().enumerate() {
        let amp = &amplitude[state_of_task(task).index()];
        for ch in 0..NUM_CHANNELS {
            let mut v = 0.0;
            for b in 0..NUM_BANDS {
                v += amp[ch][b] * (omega[ch][b] * n as f64 + phase[ch][b]).sin();
            }
            let noise: f64 = StandardNormal.sample(&mut rng);
            data.push(v + profile.noise_sigma * noise);
        }
    }
    RawSession::new(participant_id, data, tasks)
}

/// A generated session with the seed it was produced from.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub session: RawSession,
    pub seed: u64,
}

/// Sessions for participants `1..=profile.participants`.
pub fn generate_corpus(profile: &GeneratorProfile, seed: u64) -> Result<Vec<CorpusEntry>> {
    profile.validate()?;
    if profile.participants < 3 {
        return Err(Error::Config(format!(
            "corpus needs at least 3 participants, got {}",
            profile.participants
        )));
    }
    (1..=profile.participants as ParticipantId)
        .map(|id| {
            let seed = participant_seed(seed, id);
            Ok(CorpusEntry {
                session: generate_session(profile, id, seed)?,
                seed,
            })
        })
        .collect()
}

/// One row of `corpus.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub participant_id: ParticipantId,
    pub path: PathBuf,
    pub seed: u64,
    pub duration_s: f64,
}

pub fn raw_file_name(participant_id: ParticipantId) -> String {
    format!("P{participant_id:02}.csv")
}

/// Write each session to `dir/raw/` and the manifest to `dir/corpus.csv`.
pub fn write_corpus(entries: &[CorpusEntry], dir: &Path) -> Result<Vec<ManifestRow>> {
    let raw_dir = dir.join("raw");
    std::fs::create_dir_all(&raw_dir).map_err(|e| Error::io(&raw_dir, e))?;
    let mut rows = Vec::with_capacity(entries.len());
    let mut manifest = String::from("participant_id,path,seed,duration_s\n");
    for entry in entries {
        let id = entry.session.participant_id;
        let rel = PathBuf::from("raw").join(raw_file_name(id));
        write_raw_csv(&entry.session, &dir.join(&rel))?;
        let row = ManifestRow {
            participant_id: id,
            path: rel,
            seed: entry.seed,
            duration_s: entry.session.duration_s(),
        };
        let _ = writeln!(
            manifest,
            "{},{},{},{}",
            row.participant_id,
            row.path.display(),
            row.seed,
            row.duration_s
        );
        rows.push(row);
    }
    let path = dir.join("corpus.csv");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Read a manifest; paths are returned relative to the manifest directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: &str| Error::Parse {
            context: context.clone(),
            line: i + 1,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err("expected participant_id,path,seed,duration_s"));
        }
        rows.push(ManifestRow {
            participant_id: fields[0].parse().map_err(|_| err("bad participant id"))?,
            path: PathBuf::from(fields[1]),
            seed: fields[2].parse().map_err(|_| err("bad seed"))?,
            duration_s: fields[3].parse().map_err(|_| err("bad duration"))?,
        });
    }
    Ok(rows)
}
