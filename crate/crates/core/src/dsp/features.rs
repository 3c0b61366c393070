//! Raw EEG to the 266-dimensional, 4 Hz feature stream.
//!
//! Each frame covers the last 256 filtered samples of all 14 channels and
//! is laid out as:
//!
//! | indices   | content                                                        |
//! |-----------|----------------------------------------------------------------|
//! | 0..210    | channel-major: 14 channels × 5 bands × (avg, peak, peak freq)  |
//! | 210..245  | region-major: 7 regions × 5 bands, summed average power        |
//! | 245..266  | region-major: 7 regions × cumulative high-band accumulations   |
//!
//! The last block holds, per region, the accumulated average power over
//! low-beta, over low-beta + high-beta, and over low-beta + high-beta +
//! gamma.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{
    ChannelLayout, ParticipantId, RawSession, TaskId, MIN_SESSION_SAMPLES, NUM_CHANNELS,
    NUM_TASKS, SAMPLE_RATE,
};
use crate::dsp::fft::{
    PowerSpectrum, SpectrumAnalyzer, WindowFunction, BIN_HZ, FRAME_LEN, NUM_BINS,
};
use crate::dsp::filter::BandpassFilter;
use crate::error::{Error, Result};

pub const NUM_BANDS: usize = 5;
pub const NUM_REGIONS: usize = 7;
pub const STATS_PER_BAND: usize = 3;
/// Per-channel block size: 14 × 5 × 3.
pub const CHANNEL_BLOCK: usize = NUM_CHANNELS * NUM_BANDS * STATS_PER_BAND;
/// Regional band-power block size: 7 × 5.
pub const REGION_BLOCK: usize = NUM_REGIONS * NUM_BANDS;
/// Number of cumulative high-band accumulations per region.
pub const MAIN_BANDS: usize = 3;
pub const MAIN_BAND_BLOCK: usize = NUM_REGIONS * MAIN_BANDS;
pub const NUM_FEATURES: usize = CHANNEL_BLOCK + REGION_BLOCK + MAIN_BAND_BLOCK;
/// Raw samples between consecutive frames (0.25 s).
pub const DEFAULT_STRIDE: usize = 32;

pub const BAND_NAMES: [&str; NUM_BANDS] = ["theta", "alpha", "low-beta", "high-beta", "gamma"];
pub const STAT_NAMES: [&str; STATS_PER_BAND] = ["avg_power", "peak_power", "peak_freq"];
const MAIN_BAND_NAMES: [&str; MAIN_BANDS] =
    ["low-beta", "low-beta+high-beta", "low-beta+high-beta+gamma"];

// ── Bands ────────────────────────────────────────────────────────────────

/// A named band covering bin centers in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDefinition {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl BandDefinition {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
        }
    }

    /// Indices of the spectrum bins whose center frequency lies in the band.
    pub fn bins(&self) -> std::ops::Range<usize> {
        let first = (0..NUM_BINS)
            .find(|&k| PowerSpectrum::frequency(k) >= self.lo)
            .unwrap_or(NUM_BINS);
        let end = (first..NUM_BINS)
            .find(|&k| PowerSpectrum::frequency(k) >= self.hi)
            .unwrap_or(NUM_BINS);
        first..end
    }
}

/// The five bands in theta, alpha, low-beta, high-beta, gamma order.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTable {
    bands: Vec<BandDefinition>,
}

impl BandTable {
    /// Bands must appear in canonical order, tile a contiguous range inside
    /// `[4, 40.5]` and each cover at least one bin.
    pub fn new(bands: Vec<BandDefinition>) -> Result<Self> {
        if bands.len() != NUM_BANDS {
            return Err(Error::Config(format!("expected {NUM_BANDS} bands, got {}", bands.len())));
        }
        for (i, band) in bands.iter().enumerate() {
            if band.name != BAND_NAMES[i] {
                return Err(Error::Config(format!(
                    "band {i} is `{}`, expected `{}`",
                    band.name, BAND_NAMES[i]
                )));
            }
            if !(band.lo >= 4.0 && band.lo < band.hi && band.hi <= 40.5) {
                return Err(Error::Config(format!(
                    "band `{}` [{}, {}) must satisfy 4 <= lo < hi <= 40.5",
                    band.name, band.lo, band.hi
                )));
            }
            if band.bins().is_empty() {
                return Err(Error::Config(format!("band `{}` contains no bins", band.name)));
            }
            if i > 0 && bands[i - 1].hi != band.lo {
                return Err(Error::Config(format!(
                    "band `{}` does not start where `{}` ends",
                    band.name,
                    bands[i - 1].name
                )));
            }
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[BandDefinition] {
        &self.bands
    }
}

impl Default for BandTable {
    fn default() -> Self {
        Self::new(vec![
            BandDefinition::new("theta", 4.0, 8.0),
            BandDefinition::new("alpha", 8.0, 12.0),
            BandDefinition::new("low-beta", 12.0, 16.0),
            BandDefinition::new("high-beta", 16.0, 25.0),
            BandDefinition::new("gamma", 25.0, 40.5),
        ])
        .expect("default band table is valid")
    }
}

/// Average and peak power of a band, plus the frequency of the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFeatures {
    pub avg_power: f64,
    pub peak_power: f64,
    pub peak_freq: f64,
}

/// Mean and maximum power over the band's bins. Ties for the maximum go to
/// the lowest frequency; an all-zero band reports its lower edge.
pub fn band_features(spectrum: &PowerSpectrum, band: &BandDefinition) -> Result<BandFeatures> {
    let bins = band.bins();
    if bins.is_empty() {
        return Err(Error::InvalidArgument(format!("band `{}` contains no bins", band.name)));
    }
    let count = bins.len() as f64;
    let mut sum = 0.0;
    let mut peak_power = f64::NEG_INFINITY;
    let mut peak_bin = bins.start;
    for k in bins {
        let p = spectrum.bins[k];
        sum += p;
        if p > peak_power {
            peak_power = p;
            peak_bin = k;
        }
    }
    let peak_freq = if peak_power == 0.0 {
        band.lo
    } else {
        peak_bin as f64 * BIN_HZ
    };
    Ok(BandFeatures {
        avg_power: sum / count,
        peak_power,
        peak_freq,
    })
}

// ── Regional accumulation ────────────────────────────────────────────────

/// Region sums of per-channel average band power: 35 region × band values
/// followed by 21 cumulative high-band accumulations.
pub fn regional_aggregate(
    channel_band_avg: &[[f64; NUM_BANDS]; NUM_CHANNELS],
    layout: &ChannelLayout,
) -> Result<[f64; REGION_BLOCK + MAIN_BAND_BLOCK]> {
    if layout.regions().len() != NUM_REGIONS {
        return Err(Error::InvalidArgument(format!(
            "layout has {} regions, expected {NUM_REGIONS}",
            layout.regions().len()
        )));
    }
    let mut out = [0.0; REGION_BLOCK + MAIN_BAND_BLOCK];
    for (r, region) in layout.regions().iter().enumerate() {
        let mut band_sum = [0.0; NUM_BANDS];
        for &ch in &region.channels {
            for (b, acc) in band_sum.iter_mut().enumerate() {
                *acc += channel_band_avg[ch][b];
            }
        }
        out[r * NUM_BANDS..(r + 1) * NUM_BANDS].copy_from_slice(&band_sum);
        let mut cumulative = 0.0;
        for j in 0..MAIN_BANDS {
            cumulative += band_sum[2 + j];
            out[REGION_BLOCK + r * MAIN_BANDS + j] = cumulative;
        }
    }
    Ok(out)
}

// ── Feature indexing ─────────────────────────────────────────────────────

pub fn channel_feature_index(channel: usize, band: usize, stat: usize) -> usize {
    (channel * NUM_BANDS + band) * STATS_PER_BAND + stat
}

pub fn region_feature_index(region: usize, band: usize) -> usize {
    CHANNEL_BLOCK + region * NUM_BANDS + band
}

pub fn main_band_feature_index(region: usize, level: usize) -> usize {
    CHANNEL_BLOCK + REGION_BLOCK + region * MAIN_BANDS + level
}

/// True for the 70 peak-frequency features; every other feature is a power.
pub fn is_peak_freq_feature(index: usize) -> bool {
    index < CHANNEL_BLOCK && index % STATS_PER_BAND == 2
}

/// One row per feature: `index,name,block,source,band,statistic`.
pub fn feature_map_csv(layout: &ChannelLayout) -> String {
    let mut out = String::from("index,name,block,source,band,statistic\n");
    for (ch, name) in layout.names().iter().enumerate() {
        for (b, band) in BAND_NAMES.iter().enumerate() {
            for (s, stat) in STAT_NAMES.iter().enumerate() {
                let i = channel_feature_index(ch, b, s);
                out.push_str(&format!("{i},{name}_{band}_{stat},channel,{name},{band},{stat}\n"));
            }
        }
    }
    for (r, region) in layout.regions().iter().enumerate() {
        for (b, band) in BAND_NAMES.iter().enumerate() {
            let i = region_feature_index(r, b);
            let name = &region.name;
            out.push_str(&format!("{i},{name}_{band}_power,region,{name},{band},sum_avg_power\n"));
        }
    }
    for (r, region) in layout.regions().iter().enumerate() {
        for (j, bands) in MAIN_BAND_NAMES.iter().enumerate() {
            let i = main_band_feature_index(r, j);
            let name = &region.name;
            out.push_str(&format!(
                "{i},{name}_acc{j}_power,main-band,{name},{bands},cumulative_avg_power\n"
            ));
        }
    }
    out
}

// ── Frames and series ────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    /// Start of the 2 s raw window, seconds.
    pub t: f64,
    pub values: Vec<f64>,
    pub task: TaskId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub participant_id: ParticipantId,
    pub frames: Vec<FeatureFrame>,
}

impl FeatureSeries {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Filter and STFT settings for feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub bands: BandTable,
    pub window: WindowFunction,
    pub stride: usize,
    pub filter_lo: f64,
    pub filter_hi: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            bands: BandTable::default(),
            window: WindowFunction::Rectangular,
            stride: DEFAULT_STRIDE,
            filter_lo: 4.0,
            filter_hi: 40.0,
        }
    }
}

/// Frames produced from `samples` raw samples.
pub fn frame_count(samples: usize, stride: usize) -> usize {
    if samples < FRAME_LEN {
        0
    } else {
        (samples - FRAME_LEN) / stride + 1
    }
}

/// Most frequent task in a frame; among tied tasks the one seen most
/// recently wins.
fn majority_task(tasks: impl Iterator<Item = TaskId>) -> TaskId {
    let mut counts = [0usize; NUM_TASKS];
    let mut last_seen = [0usize; NUM_TASKS];
    for (i, t) in tasks.enumerate() {
        counts[t as usize] += 1;
        last_seen[t as usize] = i;
    }
    (0..NUM_TASKS)
        .max_by_key(|&t| (counts[t], last_seen[t]))
        .expect("non-empty") as TaskId
}

/// Sample-by-sample extractor. Filters each channel causally and emits a
/// frame every `stride` samples once 256 samples have been seen. Batch
/// extraction runs through the same path, so streamed and batch features
/// are bit-identical.
#[derive(Debug, Clone)]
pub struct StreamingExtractor {
    config: FeatureConfig,
    layout: ChannelLayout,
    filters: Vec<BandpassFilter>,
    analyzer: SpectrumAnalyzer,
    history: Vec<[f64; FRAME_LEN]>,
    tasks: [TaskId; FRAME_LEN],
    head: usize,
    seen: usize,
    frame: Vec<f64>,
}

impl StreamingExtractor {
    pub fn new(config: FeatureConfig, layout: ChannelLayout) -> Result<Self> {
        if config.stride == 0 {
            return Err(Error::Config("stft stride must be positive".into()));
        }
        let filter = BandpassFilter::new(config.filter_lo, config.filter_hi, SAMPLE_RATE)?;
        Ok(Self {
            analyzer: SpectrumAnalyzer::new(config.window),
            filters: vec![filter; NUM_CHANNELS],
            history: vec![[0.0; FRAME_LEN]; NUM_CHANNELS],
            tasks: [0; FRAME_LEN],
            head: 0,
            seen: 0,
            frame: vec![0.0; FRAME_LEN],
            config,
            layout,
        })
    }

    pub fn samples_seen(&self) -> usize {
        self.seen
    }

    /// Feed one 14-channel sample; returns a frame when one completes.
    pub fn push(&mut self, sample: &[f64], task: TaskId) -> Result<Option<FeatureFrame>> {
        if sample.len() != NUM_CHANNELS {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} channels, expected {NUM_CHANNELS}",
                sample.len()
            )));
        }
        for (ch, &x) in sample.iter().enumerate() {
            self.history[ch][self.head] = self.filters[ch].process(x);
        }
        self.tasks[self.head] = task;
        self.head = (self.head + 1) % FRAME_LEN;
        self.seen += 1;
        if self.seen < FRAME_LEN || !(self.seen - FRAME_LEN).is_multiple_of(self.config.stride) {
            return Ok(None);
        }
        self.emit().map(Some)
    }

    fn emit(&mut self) -> Result<FeatureFrame> {
        let start = self.seen - FRAME_LEN;
        let mut values = vec![0.0; NUM_FEATURES];
        let mut band_avg = [[0.0; NUM_BANDS]; NUM_CHANNELS];
        for ch in 0..NUM_CHANNELS {
            // Oldest sample sits at `head` in the ring.
            let ring = &self.history[ch];
            let (newer, older) = ring.split_at(self.head);
            self.frame[..older.len()].copy_from_slice(older);
            self.frame[older.len()..].copy_from_slice(newer);
            let spectrum = self.analyzer.power_spectrum(&self.frame)?;
            for (b, band) in self.config.bands.bands().iter().enumerate() {
                let f = band_features(&spectrum, band)?;
                band_avg[ch][b] = f.avg_power;
                values[channel_feature_index(ch, b, 0)] = f.avg_power;
                values[channel_feature_index(ch, b, 1)] = f.peak_power;
                values[channel_feature_index(ch, b, 2)] = f.peak_freq;
            }
        }
        let regional = regional_aggregate(&band_avg, &self.layout)?;
        values[CHANNEL_BLOCK..].copy_from_slice(&regional);
        let (newer, older) = self.tasks.split_at(self.head);
        let task = majority_task(older.iter().chain(newer).copied());
        Ok(FeatureFrame {
            t: start as f64 / SAMPLE_RATE,
            values,
            task,
        })
    }
}

/// Run the full extraction over a recorded session.
pub fn extract_feature_series(
    session: &RawSession,
    config: &FeatureConfig,
    layout: &ChannelLayout,
) -> Result<FeatureSeries> {
    if session.len() < MIN_SESSION_SAMPLES {
        return Err(Error::SessionTooShort {
            found: session.len(),
            needed: MIN_SESSION_SAMPLES,
        });
    }
    let mut extractor = StreamingExtractor::new(config.clone(), layout.clone())?;
    let mut frames = Vec::with_capacity(frame_count(session.len(), config.stride));
    for (t, &task) in session.tasks().iter().enumerate() {
        if let Some(frame) = extractor.push(session.sample(t), task)? {
            frames.push(frame);
        }
    }
    Ok(FeatureSeries {
        participant_id: session.participant_id,
        frames,
    })
}

// ── Feature CSV ──────────────────────────────────────────────────────────

pub fn feature_csv_header() -> String {
    let mut header = String::from("t");
    for i in 0..NUM_FEATURES {
        header.push_str(&format!(",f{i:03}"));
    }
    header.push_str(",task");
    header
}

pub fn write_feature_csv(series: &FeatureSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", feature_csv_header()).map_err(io)?;
    for frame in &series.frames {
        write!(out, "{}", frame.t).map_err(io)?;
        for v in &frame.values {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out, ",{}", frame.task).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn load_feature_csv(path: &Path, participant_id: ParticipantId) -> Result<FeatureSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        context: context.clone(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.len() != NUM_FEATURES + 2 {
        return Err(parse_err(
            1,
            format!("expected {} columns, found {}", NUM_FEATURES + 2, header.len()),
        ));
    }
    let mut frames = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| parse_err(line, format!("bad number `{}`", &record[i])))
        };
        let t = num(0)?;
        let values = (1..=NUM_FEATURES).map(num).collect::<Result<Vec<_>>>()?;
        let task: i64 = record[NUM_FEATURES + 1]
            .parse()
            .map_err(|_| parse_err(line, "bad task".into()))?;
        if !(0..NUM_TASKS as i64).contains(&task) {
            return Err(Error::TaskOutOfRange(task));
        }
        frames.push(FeatureFrame {
            t,
            values,
            task: task as TaskId,
        });
    }
    Ok(FeatureSeries {
        participant_id,
        frames,
    })
}
