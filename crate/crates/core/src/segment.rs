//! Overlapping fixed-length windows over a feature series, weakly labelled
//! by majority vote, and the consecutive-window sequences fed to the
//! recurrent model.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{LabelMap, ParticipantId, State, SAMPLE_RATE};
use crate::dsp::features::{FeatureFrame, FeatureSeries, NUM_FEATURES};
use crate::dsp::fft::FRAME_LEN;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_LEN: usize = 40;
pub const DEFAULT_HOP: usize = 20;
pub const DEFAULT_SEQUENCE_LEN: usize = 4;

const WINDOWS_MAGIC: &[u8; 4] = b"EDW1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowParams {
    pub len: usize,
    pub hop: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self {
            len: DEFAULT_WINDOW_LEN,
            hop: DEFAULT_HOP,
        }
    }
}

impl WindowParams {
    /// Windows cut from a series of `frames` frames.
    pub fn count(&self, frames: usize) -> usize {
        if frames < self.len {
            0
        } else {
            (frames - self.len) / self.hop + 1
        }
    }

    /// Seconds of raw signal behind one window given the frame stride in
    /// samples.
    pub fn raw_span_seconds(&self, stride: usize) -> f64 {
        (FRAME_LEN + (self.len - 1) * stride) as f64 / SAMPLE_RATE
    }
}

/// `len × 266` feature matrix (time-major) with its weak label.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Vec<f64>,
    pub state: State,
    pub participant_id: ParticipantId,
    pub start_frame: u32,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len() / NUM_FEATURES
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * NUM_FEATURES..(t + 1) * NUM_FEATURES]
    }
}

/// Output of [`segment_series`]. `too_short` flags a series with fewer
/// frames than one window; that is not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub windows: Vec<Window>,
    pub too_short: bool,
}

/// Majority state of a window; an even split resolves to DISTRACTED.
pub fn majority_state(states: impl Iterator<Item = State>) -> State {
    let (mut distracted, mut focused) = (0usize, 0usize);
    for s in states {
        match s {
            State::Distracted => distracted += 1,
            State::Focused => focused += 1,
        }
    }
    if distracted >= focused {
        State::Distracted
    } else {
        State::Focused
    }
}

pub fn segment_series(
    series: &FeatureSeries,
    map: &LabelMap,
    params: WindowParams,
) -> Result<Segmentation> {
    if params.len == 0 || params.hop == 0 {
        return Err(Error::Config("window length and hop must be positive".into()));
    }
    let frames = &series.frames;
    if let Some(bad) = frames.iter().find(|f| f.values.len() != NUM_FEATURES) {
        return Err(Error::ShapeMismatch(format!(
            "frame at t={} has {} values",
            bad.t,
            bad.values.len()
        )));
    }
    let states = frames
        .iter()
        .map(|f| map.state_of(f.task))
        .collect::<Result<Vec<_>>>()?;
    let count = params.count(frames.len());
    if count == 0 {
        log::warn!(
            "participant {}: {} frames is shorter than one window of {}",
            series.participant_id,
            frames.len(),
            params.len
        );
        return Ok(Segmentation {
            windows: Vec::new(),
            too_short: true,
        });
    }
    let windows = (0..count)
        .map(|w| {
            let start = w * params.hop;
            let span = start..start + params.len;
            let mut values = Vec::with_capacity(params.len * NUM_FEATURES);
            for f in &frames[span.clone()] {
                values.extend_from_slice(&f.values);
            }
            Window {
                values,
                state: majority_state(states[span].iter().copied()),
                participant_id: series.participant_id,
                start_frame: start as u32,
            }
        })
        .collect();
    Ok(Segmentation {
        windows,
        too_short: false,
    })
}

/// Frame-by-frame counterpart of [`segment_series`]: emits each window as
/// soon as its last frame arrives, identical to the batch result.
#[derive(Debug, Clone)]
pub struct StreamingSegmenter {
    params: WindowParams,
    map: LabelMap,
    participant_id: ParticipantId,
    recent: std::collections::VecDeque<(Vec<f64>, State)>,
    seen: usize,
}

impl StreamingSegmenter {
    pub fn new(params: WindowParams, map: LabelMap, participant_id: ParticipantId) -> Result<Self> {
        if params.len == 0 || params.hop == 0 {
            return Err(Error::Config("window length and hop must be positive".into()));
        }
        Ok(Self {
            params,
            map,
            participant_id,
            recent: std::collections::VecDeque::with_capacity(params.len),
            seen: 0,
        })
    }

    pub fn push(&mut self, frame: &FeatureFrame) -> Result<Option<Window>> {
        if frame.values.len() != NUM_FEATURES {
            return Err(Error::ShapeMismatch(format!(
                "frame at t={} has {} values",
                frame.t,
                frame.values.len()
            )));
        }
        let state = self.map.state_of(frame.task)?;
        if self.recent.len() == self.params.len {
            self.recent.pop_front();
        }
        self.recent.push_back((frame.values.clone(), state));
        self.seen += 1;
        if self.seen < self.params.len || !(self.seen - self.params.len).is_multiple_of(self.params.hop) {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(self.params.len * NUM_FEATURES);
        for (v, _) in &self.recent {
            values.extend_from_slice(v);
        }
        Ok(Some(Window {
            values,
            state: majority_state(self.recent.iter().map(|(_, s)| *s)),
            participant_id: self.participant_id,
            start_frame: (self.seen - self.params.len) as u32,
        }))
    }
}

/// Indices of `seq_len` consecutive windows from one session, labelled by
/// the last of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSequence {
    pub indices: Vec<usize>,
    pub state: State,
}

impl WindowSequence {
    pub fn last(&self) -> usize {
        *self.indices.last().expect("non-empty sequence")
    }
}

/// Sequences ending at every window index `i >= seq_len - 1` of one
/// session's windows. Indices refer into `windows`.
pub fn build_sequences(windows: &[Window], seq_len: usize) -> Result<Vec<WindowSequence>> {
    if seq_len == 0 {
        return Err(Error::Config("sequence length must be positive".into()));
    }
    if windows.len() < 2 {
        return Ok(if windows.len() >= seq_len {
            vec![WindowSequence {
                indices: vec![0],
                state: windows[0].state,
            }]
        } else {
            Vec::new()
        });
    }
    let hop = windows[1].start_frame as i64 - windows[0].start_frame as i64;
    for pair in windows.windows(2) {
        let delta = pair[1].start_frame as i64 - pair[0].start_frame as i64;
        if delta != hop || hop <= 0 {
            return Err(Error::InvalidArgument(format!(
                "non-uniform hop between windows at frames {} and {}",
                pair[0].start_frame, pair[1].start_frame
            )));
        }
        if pair[1].participant_id != pair[0].participant_id {
            return Err(Error::InvalidArgument(
                "sequence input mixes participants".into(),
            ));
        }
    }
    Ok((seq_len - 1..windows.len())
        .map(|i| WindowSequence {
            indices: (i + 1 - seq_len..=i).collect(),
            state: windows[i].state,
        })
        .collect())
}

// ── Windows file ─────────────────────────────────────────────────────────

/// Little-endian `EDW1` container: frame dim, window length and count as
/// u32, then per window participant (u32), start frame (u32), state (u8,
/// 1 = DISTRACTED) and the f64 payload.
pub fn write_windows<W: Write>(windows: &[Window], out: &mut W) -> std::io::Result<()> {
    let len = windows.first().map_or(DEFAULT_WINDOW_LEN, Window::len);
    out.write_all(WINDOWS_MAGIC)?;
    out.write_all(&(NUM_FEATURES as u32).to_le_bytes())?;
    out.write_all(&(len as u32).to_le_bytes())?;
    out.write_all(&(windows.len() as u32).to_le_bytes())?;
    for w in windows {
        out.write_all(&w.participant_id.to_le_bytes())?;
        out.write_all(&w.start_frame.to_le_bytes())?;
        out.write_all(&[u8::from(w.state == State::Distracted)])?;
        for v in &w.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_windows<R: Read>(input: &mut R) -> Result<Vec<Window>> {
    let fmt = |e: std::io::Error| Error::Format(format!("truncated windows file: {e}"));
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(fmt)?;
    if &magic != WINDOWS_MAGIC {
        return Err(Error::Format("not a windows file (bad magic)".into()));
    }
    let dim = read_u32(input).map_err(fmt)? as usize;
    let len = read_u32(input).map_err(fmt)? as usize;
    let count = read_u32(input).map_err(fmt)? as usize;
    if dim != NUM_FEATURES {
        return Err(Error::Format(format!("windows file has frame dim {dim}")));
    }
    let mut windows = Vec::with_capacity(count);
    let mut payload = vec![0u8; len * dim * 8];
    for _ in 0..count {
        let participant_id = read_u32(input).map_err(fmt)?;
        let start_frame = read_u32(input).map_err(fmt)?;
        let mut state = [0u8; 1];
        input.read_exact(&mut state).map_err(fmt)?;
        let state = match state[0] {
            1 => State::Distracted,
            0 => State::Focused,
            other => return Err(Error::Format(format!("bad state byte {other}"))),
        };
        input.read_exact(&mut payload).map_err(fmt)?;
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        windows.push(Window {
            values,
            state,
            participant_id,
            start_frame,
        });
    }
    Ok(windows)
}

pub fn save_windows(windows: &[Window], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_windows(windows, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_windows(path: &Path) -> Result<Vec<Window>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_windows(&mut BufReader::new(file))
}
