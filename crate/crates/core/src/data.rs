//! Domain types shared by every stage: electrode layout, raw recordings,
//! task-to-state labelling and participant-level dataset splits.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sampling rate of the headset, Hz.
pub const SAMPLE_RATE: f64 = 128.0;
/// Number of EEG electrodes.
pub const NUM_CHANNELS: usize = 14;
/// Number of distinct task ids recorded per sample.
pub const NUM_TASKS: usize = 16;
/// Shortest session that still yields one spectral frame.
pub const MIN_SESSION_SAMPLES: usize = 256;

pub type ParticipantId = u32;
pub type TaskId = u8;

/// Electrode order used by every matrix in the crate.
pub const CHANNEL_NAMES: [&str; NUM_CHANNELS] = [
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
];

// ── State ────────────────────────────────────────────────────────────────

/// Binary driver state. `Focused` is reported as "driving" in evaluation
/// reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Distracted,
    Focused,
}

impl State {
    pub const ALL: [State; 2] = [State::Distracted, State::Focused];

    /// Class index used by confusion matrices and softmax heads.
    pub fn index(self) -> usize {
        match self {
            State::Distracted => 0,
            State::Focused => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<State> {
        match index {
            0 => Some(State::Distracted),
            1 => Some(State::Focused),
            _ => None,
        }
    }

    /// Ridge target encoding: DISTRACTED is the positive class.
    pub fn sign(self) -> f64 {
        match self {
            State::Distracted => 1.0,
            State::Focused => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            State::Distracted => "DISTRACTED",
            State::Focused => "FOCUSED",
        }
    }

    /// Label used in reports.
    pub fn report_label(self) -> &'static str {
        match self {
            State::Distracted => "distracted",
            State::Focused => "driving",
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DISTRACTED" => Ok(State::Distracted),
            "FOCUSED" | "DRIVING" => Ok(State::Focused),
            other => Err(Error::InvalidArgument(format!("unknown state `{other}`"))),
        }
    }
}

// ── ChannelLayout ────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub channels: Vec<usize>,
}

/// Electrode names plus the scalp regions whose band power is accumulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLayout {
    names: Vec<String>,
    regions: Vec<Region>,
}

impl ChannelLayout {
    pub fn new(names: Vec<String>, regions: Vec<Region>) -> Result<Self> {
        if names.len() != NUM_CHANNELS {
            return Err(Error::InvalidArgument(format!(
                "layout needs {NUM_CHANNELS} channels, got {}",
                names.len()
            )));
        }
        for region in &regions {
            if region.channels.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "region `{}` has no channels",
                    region.name
                )));
            }
            if let Some(&bad) = region.channels.iter().find(|&&c| c >= NUM_CHANNELS) {
                return Err(Error::InvalidArgument(format!(
                    "region `{}` references channel {bad}",
                    region.name
                )));
            }
        }
        Ok(Self { names, regions })
    }

    /// The Emotiv EPOC montage with its seven accumulation regions.
    pub fn emotiv_epoc() -> Self {
        let region = |name: &str, channels: &[usize]| Region {
            name: name.to_string(),
            channels: channels.to_vec(),
        };
        let regions = vec![
            region("left-frontal", &[0, 1, 2, 3]),
            region("right-frontal", &[10, 11, 12, 13]),
            region("left-hemisphere", &[0, 1, 2, 3, 4, 5, 6]),
            region("right-hemisphere", &[7, 8, 9, 10, 11, 12, 13]),
            region("left-temporal-parietal", &[4, 5]),
            region("right-temporal-parietal", &[8, 9]),
            region("occipital", &[6, 7]),
        ];
        Self::new(CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(), regions)
            .expect("built-in layout is valid")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for ChannelLayout {
    fn default() -> Self {
        Self::emotiv_epoc()
    }
}

// ── RawSession ───────────────────────────────────────────────────────────

/// One participant's recording: `T × 14` microvolt samples at 128 Hz with a
/// task id per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSession {
    pub participant_id: ParticipantId,
    samples: Vec<f64>,
    tasks: Vec<TaskId>,
}

impl RawSession {
    /// `samples` is row-major `T × 14`.
    pub fn new(participant_id: ParticipantId, samples: Vec<f64>, tasks: Vec<TaskId>) -> Result<Self> {
        if samples.len() != tasks.len() * NUM_CHANNELS {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for {} task labels",
                samples.len(),
                tasks.len()
            )));
        }
        if tasks.len() < MIN_SESSION_SAMPLES {
            return Err(Error::SessionTooShort {
                found: tasks.len(),
                needed: MIN_SESSION_SAMPLES,
            });
        }
        if let Some(&bad) = tasks.iter().find(|&&t| t as usize >= NUM_TASKS) {
            return Err(Error::TaskOutOfRange(bad as i64));
        }
        Ok(Self {
            participant_id,
            samples,
            tasks,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        SAMPLE_RATE
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / SAMPLE_RATE
    }

    /// All 14 channel values at sample `t`.
    pub fn sample(&self, t: usize) -> &[f64] {
        &self.samples[t * NUM_CHANNELS..(t + 1) * NUM_CHANNELS]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    /// Copy of one channel as a contiguous signal.
    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.samples
            .iter()
            .skip(ch)
            .step_by(NUM_CHANNELS)
            .copied()
            .collect()
    }
}

/// Header of the raw CSV format.
pub fn raw_csv_header() -> String {
    let mut header = String::from("t");
    for name in CHANNEL_NAMES {
        header.push(',');
        header.push_str(name);
    }
    header.push_str(",task");
    header
}

/// Parse a raw CSV recording (`t,AF3,…,AF4,task`).
pub fn load_raw_csv(path: &Path, participant_id: ParticipantId) -> Result<RawSession> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_raw_csv(BufReader::new(file), participant_id, &path.display().to_string())
}

pub fn read_raw_csv<R: std::io::Read>(
    reader: R,
    participant_id: ParticipantId,
    context: &str,
) -> Result<RawSession> {
    let parse_err = |line: usize, message: String| Error::Parse {
        context: context.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let columns: Vec<&str> = header.iter().collect();
    if columns.len() < 2 || columns[0] != "t" || columns[columns.len() - 1] != "task" {
        return Err(parse_err(1, "header must start with `t` and end with `task`".into()));
    }
    let channel_cols = &columns[1..columns.len() - 1];
    if channel_cols.len() != NUM_CHANNELS {
        return Err(Error::ChannelCountMismatch {
            context: context.to_string(),
            expected: NUM_CHANNELS,
            found: channel_cols.len(),
        });
    }
    if let Some((i, name)) = channel_cols
        .iter()
        .enumerate()
        .find(|(i, name)| **name != CHANNEL_NAMES[*i])
    {
        return Err(parse_err(
            1,
            format!("column {} is `{name}`, expected `{}`", i + 2, CHANNEL_NAMES[i]),
        ));
    }

    let mut samples = Vec::new();
    let mut tasks = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != NUM_CHANNELS + 2 {
            return Err(Error::ChannelCountMismatch {
                context: format!("{context}: line {line}"),
                expected: NUM_CHANNELS,
                found: record.len().saturating_sub(2),
            });
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad time `{}`", &record[0])))?;
        if !t.is_finite() || t <= last_t {
            return Err(Error::NonMonotonicTime {
                context: context.to_string(),
                row: row + 1,
            });
        }
        last_t = t;
        for field in record.iter().skip(1).take(NUM_CHANNELS) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("bad sample `{field}`")))?;
            samples.push(v);
        }
        let task: i64 = record[NUM_CHANNELS + 1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad task `{}`", &record[NUM_CHANNELS + 1])))?;
        if !(0..NUM_TASKS as i64).contains(&task) {
            return Err(Error::TaskOutOfRange(task));
        }
        tasks.push(task as TaskId);
    }
    RawSession::new(participant_id, samples, tasks)
}

/// Write a session in the raw CSV format; `t` is the sample index over 128 Hz.
pub fn write_raw_csv(session: &RawSession, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_raw_csv_to(session, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_raw_csv_to<W: Write>(session: &RawSession, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", raw_csv_header())?;
    for t in 0..session.len() {
        write!(out, "{}", t as f64 / SAMPLE_RATE)?;
        for v in session.sample(t) {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{}", session.tasks[t])?;
    }
    Ok(())
}

// ── LabelMap ─────────────────────────────────────────────────────────────

/// Total map from the 16 task ids to a driver state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelMap {
    entries: [State; NUM_TASKS],
}

impl LabelMap {
    pub fn new(entries: [State; NUM_TASKS]) -> Self {
        Self { entries }
    }

    /// Task 0 is plain driving; every other task is a distraction.
    pub fn synthetic_default() -> Self {
        let mut entries = [State::Distracted; NUM_TASKS];
        entries[0] = State::Focused;
        Self { entries }
    }

    pub fn state_of(&self, task: TaskId) -> Result<State> {
        map_task_to_state(task as i64, self)
    }

    pub fn entries(&self) -> &[State; NUM_TASKS] {
        &self.entries
    }

    /// Parse `task_id=STATE` lines. Blank lines and `#` comments are skipped;
    /// every task id must be assigned exactly once.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries: [Option<State>; NUM_TASKS] = [None; NUM_TASKS];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                context: context.to_string(),
                line: i + 1,
                message,
            };
            let (task, state) = line
                .split_once('=')
                .ok_or_else(|| err("expected `task_id=STATE`".into()))?;
            let task: usize = task
                .trim()
                .parse()
                .map_err(|_| err(format!("bad task id `{}`", task.trim())))?;
            if task >= NUM_TASKS {
                return Err(err(format!("task id {task} outside 0..15")));
            }
            let state: State = state.parse().map_err(|e: Error| err(e.to_string()))?;
            if entries[task].replace(state).is_some() {
                return Err(err(format!("task id {task} assigned twice")));
            }
        }
        let mut out = [State::Focused; NUM_TASKS];
        for (task, entry) in entries.iter().enumerate() {
            out[task] = entry.ok_or_else(|| {
                Error::Config(format!("{context}: label map has no entry for task {task}"))
            })?;
        }
        Ok(Self { entries: out })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .enumerate()
            .map(|(task, state)| format!("{task}={state}\n"))
            .collect()
    }
}

impl Default for LabelMap {
    fn default() -> Self {
        Self::synthetic_default()
    }
}

/// Look up the state of a task id; ids outside the map are a configuration
/// error.
pub fn map_task_to_state(task: i64, map: &LabelMap) -> Result<State> {
    usize::try_from(task)
        .ok()
        .and_then(|t| map.entries.get(t).copied())
        .ok_or_else(|| Error::Config(format!("task id {task} is not in the label map")))
}

// ── DatasetSplit ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Validation => "val",
            Role::Test => "test",
        }
    }
}

/// Disjoint participant sets. Each set is kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<ParticipantId>,
    pub validation: Vec<ParticipantId>,
    pub test: Vec<ParticipantId>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn role_of(&self, id: ParticipantId) -> Option<Role> {
        if self.train.contains(&id) {
            Some(Role::Train)
        } else if self.validation.contains(&id) {
            Some(Role::Validation)
        } else if self.test.contains(&id) {
            Some(Role::Test)
        } else {
            None
        }
    }

    pub fn participants(&self, role: Role) -> &[ParticipantId] {
        match role {
            Role::Train => &self.train,
            Role::Validation => &self.validation,
            Role::Test => &self.test,
        }
    }

    /// Split file: a `# seed=N` comment followed by `participant_id,role` lines.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(ParticipantId, Role)> = Vec::new();
        for role in [Role::Train, Role::Validation, Role::Test] {
            rows.extend(self.participants(role).iter().map(|&id| (id, role)));
        }
        rows.sort_by_key(|&(id, _)| id);
        let mut text = format!("# seed={}\n", self.seed);
        for (id, role) in rows {
            text.push_str(&format!("{id},{}\n", role.as_str()));
        }
        text
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut split = DatasetSplit {
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
            seed: 0,
        };
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| Error::Parse {
                context: context.to_string(),
                line: i + 1,
                message,
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed=") {
                    split.seed = seed.trim().parse().map_err(|_| err("bad seed".into()))?;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (id, role) = line
                .split_once(',')
                .ok_or_else(|| err("expected `participant_id,role`".into()))?;
            let id: ParticipantId = id
                .trim()
                .parse()
                .map_err(|_| err(format!("bad participant id `{}`", id.trim())))?;
            if !seen.insert(id) {
                return Err(err(format!("participant {id} listed twice")));
            }
            match role.trim() {
                "train" => split.train.push(id),
                "val" => split.validation.push(id),
                "test" => split.test.push(id),
                other => return Err(err(format!("unknown role `{other}`"))),
            }
        }
        split.train.sort_unstable();
        split.validation.sort_unstable();
        split.test.sort_unstable();
        Ok(split)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            text.push_str(&line.map_err(|e| Error::io(path, e))?);
            text.push('\n');
        }
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Randomly assign participants to train/validation/test sets of the given
/// sizes. The result depends only on the set of ids, the counts and the seed.
pub fn split_by_participant(
    participants: &[ParticipantId],
    counts: (usize, usize, usize),
    seed: u64,
) -> Result<DatasetSplit> {
    let (n_train, n_val, n_test) = counts;
    let mut ids = participants.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != participants.len() {
        return Err(Error::InvalidArgument("duplicate participant ids".into()));
    }
    if n_train + n_val + n_test != ids.len() {
        return Err(Error::InvalidArgument(format!(
            "split counts {n_train}+{n_val}+{n_test} do not sum to {} participants",
            ids.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let sorted = |range: std::ops::Range<usize>| {
        let mut v = ids[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(DatasetSplit {
        train: sorted(0..n_train),
        validation: sorted(n_train..n_train + n_val),
        test: sorted(n_train + n_val..ids.len()),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(t: usize) -> RawSession {
        let samples = (0..t * NUM_CHANNELS).map(|i| (i as f64 * 0.37).sin() * 20.0).collect();
        let tasks = (0..t).map(|i| (i / 40 % 16) as u8).collect();
        RawSession::new(3, samples, tasks).unwrap()
    }

    fn csv_text(rows: usize, channels: usize, repeat_at: Option<usize>) -> String {
        let mut text = String::from("t");
        for name in CHANNEL_NAMES.iter().take(channels) {
            text.push(',');
            text.push_str(name);
        }
        text.push_str(",task\n");
        for r in 0..rows {
            let t = match repeat_at {
                Some(k) if r == k => (r - 1) as f64 / 128.0,
                _ => r as f64 / 128.0,
            };
            text.push_str(&t.to_string());
            for c in 0..channels {
                text.push_str(&format!(",{}", (r * 7 + c) as f64 * 0.5));
            }
            text.push_str(&format!(",{}\n", r % 16));
        }
        text
    }

    #[test]
    fn layout_invariants() {
        let layout = ChannelLayout::emotiv_epoc();
        assert_eq!(layout.names().len(), 14);
        assert_eq!(layout.regions().len(), 7);
        for r in layout.regions() {
            assert!(!r.channels.is_empty());
            assert!(r.channels.iter().all(|&c| c < 14));
        }
        let ltp = layout.region("left-temporal-parietal").unwrap();
        let names: Vec<&str> = ltp.channels.iter().map(|&c| CHANNEL_NAMES[c]).collect();
        assert_eq!(names, ["T7", "P7"]);
    }

    #[test]
    fn parse_well_formed_csv() {
        let s = read_raw_csv(csv_text(512, 14, None).as_bytes(), 1, "mem").unwrap();
        assert_eq!(s.len(), 512);
        assert_eq!(s.tasks().len(), 512);
        assert_eq!(s.sample(1)[2], (7 + 2) as f64 * 0.5);
    }

    #[test]
    fn thirteen_channels_rejected() {
        let err = read_raw_csv(csv_text(512, 13, None).as_bytes(), 1, "mem").unwrap_err();
        assert!(err.to_string().contains("channel count mismatch"), "{err}");
    }

    #[test]
    fn repeated_timestamp_rejected() {
        // Data row 10 (index 9) repeats the timestamp of row 9.
        let err = read_raw_csv(csv_text(512, 14, Some(9)).as_bytes(), 1, "mem").unwrap_err();
        assert!(err.to_string().contains("non-monotonic time"), "{err}");
        assert!(matches!(err, Error::NonMonotonicTime { row: 10, .. }));
    }

    #[test]
    fn short_and_bad_task_rejected() {
        let err = read_raw_csv(csv_text(255, 14, None).as_bytes(), 1, "mem").unwrap_err();
        assert!(matches!(err, Error::SessionTooShort { found: 255, .. }));
        let text = csv_text(300, 14, None).replace(",15\n", ",16\n");
        let err = read_raw_csv(text.as_bytes(), 1, "mem").unwrap_err();
        assert!(matches!(err, Error::TaskOutOfRange(16)));
    }

    #[test]
    fn raw_csv_round_trip() {
        let s = session(300);
        let mut buf = Vec::new();
        write_raw_csv_to(&s, &mut buf).unwrap();
        let back = read_raw_csv(buf.as_slice(), 3, "mem").unwrap();
        assert_eq!(back.tasks(), s.tasks());
        for (a, b) in back.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn task_lookup() {
        let map = LabelMap::synthetic_default();
        assert_eq!(map_task_to_state(0, &map).unwrap(), State::Focused);
        assert_eq!(map_task_to_state(7, &map).unwrap(), State::Distracted);
        assert!(map_task_to_state(16, &map).unwrap_err().is_config());
        assert!(map_task_to_state(-1, &map).is_err());
    }

    #[test]
    fn label_map_file() {
        let map = LabelMap::synthetic_default();
        assert_eq!(LabelMap::parse(&map.to_text(), "m").unwrap(), map);
        let aliased = map.to_text().replace("0=FOCUSED", "0=driving");
        assert_eq!(LabelMap::parse(&aliased, "m").unwrap(), map);
        let missing: String = map.to_text().lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(LabelMap::parse(&missing, "m").is_err());
        let dup = format!("{}3=FOCUSED\n", map.to_text());
        let err = LabelMap::parse(&dup, "m").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 17, .. }));
    }

    #[test]
    fn full_split_sizes() {
        let ids: Vec<u32> = (1..=18).collect();
        let s = split_by_participant(&ids, (12, 2, 4), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (12, 2, 4));
        let all: BTreeSet<u32> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        assert_eq!(all.len(), 18);
        assert_eq!(s, split_by_participant(&ids, (12, 2, 4), 1).unwrap());
    }

    #[test]
    fn singleton_split() {
        let s = split_by_participant(&[4, 5, 6], (1, 1, 1), 9).unwrap();
        let mut all = [s.train[0], s.validation[0], s.test[0]];
        all.sort_unstable();
        assert_eq!(all, [4, 5, 6]);
    }

    #[test]
    fn bad_counts_rejected() {
        assert!(split_by_participant(&[1, 2, 3], (1, 1, 2), 0).is_err());
        assert!(split_by_participant(&[1, 1, 3], (1, 1, 1), 0).is_err());
    }

    #[test]
    fn split_file_round_trip() {
        let ids: Vec<u32> = (1..=6).collect();
        let s = split_by_participant(&ids, (4, 1, 1), 42).unwrap();
        assert_eq!(DatasetSplit::parse(&s.to_text(), "split").unwrap(), s);
        assert_eq!(s.role_of(s.test[0]), Some(Role::Test));
        assert_eq!(s.role_of(99), None);
    }
}
