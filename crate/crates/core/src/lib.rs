//! Driver-distraction detection from 14-channel EEG.
//!
//! The crate covers everything up to and including the non-neural
//! classifiers:
//!
//! ```text
//! RawSession ──dsp──▶ FeatureSeries (4 Hz × 266) ──segment──▶ Window (40 × 266)
//!                                                      │
//!                                    classic::{nn1, rocket} ◀──┘
//! ```
//!
//! plus a seeded synthetic corpus generator ([`synth`]) standing in for
//! recorded sessions.

pub mod classic;
pub mod data;
pub mod dsp;
pub mod error;
pub mod scaler;
pub mod segment;
pub mod synth;

pub use data::{
    load_raw_csv, map_task_to_state, split_by_participant, ChannelLayout, DatasetSplit, LabelMap,
    ParticipantId, RawSession, Role, State,
};
pub use dsp::{extract_feature_series, FeatureConfig, FeatureFrame, FeatureSeries, NUM_FEATURES};
pub use error::{Error, Result};
pub use scaler::FeatureScaler;
pub use segment::{
    build_sequences, segment_series, StreamingSegmenter, Window, WindowParams, WindowSequence,
};
