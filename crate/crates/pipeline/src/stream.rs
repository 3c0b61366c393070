//! Sample-by-sample replay of a session through extraction, segmentation
//! and a trained model.

use std::collections::VecDeque;

use eegdd_core::dsp::features::StreamingExtractor;
use eegdd_core::dsp::fft::FRAME_LEN;
use eegdd_core::{ChannelLayout, FeatureConfig, LabelMap, ParticipantId, RawSession, State, StreamingSegmenter, Window, WindowParams};

use crate::error::{PipelineError, Result};
use crate::models::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPrediction {
    /// Signal time at the end of the window's raw span, seconds.
    pub t_end: f64,
    pub start_frame: u32,
    pub state: State,
    pub prob_distracted: f64,
}

impl StreamPrediction {
    pub fn to_line(&self) -> String {
        format!("{},{},{}", self.t_end, self.state, self.prob_distracted)
    }
}

pub struct OnlinePredictor {
    extractor: StreamingExtractor,
    segmenter: StreamingSegmenter,
    model: TrainedModel,
    recent: VecDeque<Window>,
    stride: usize,
    window_len: usize,
    sample_rate: f64,
}

impl OnlinePredictor {
    pub fn new(
        model: TrainedModel,
        features: FeatureConfig,
        window: WindowParams,
        map: LabelMap,
        participant_id: ParticipantId,
    ) -> Result<Self> {
        let err = |e| PipelineError::from_core("stream", e);
        Ok(Self {
            stride: features.stride,
            extractor: StreamingExtractor::new(features, ChannelLayout::default()).map_err(err)?,
            segmenter: StreamingSegmenter::new(window, map, participant_id).map_err(err)?,
            recent: VecDeque::with_capacity(model.context()),
            model,
            window_len: window.len,
            sample_rate: eegdd_core::data::SAMPLE_RATE,
        })
    }

    /// Feed one raw sample; returns a prediction when a window completes and
    /// enough windows of context have been seen.
    pub fn push(&mut self, sample: &[f64], task: u8) -> Result<Option<StreamPrediction>> {
        let err = |e| PipelineError::from_core("stream", e);
        let Some(frame) = self.extractor.push(sample, task).map_err(err)? else {
            return Ok(None);
        };
        let Some(window) = self.segmenter.push(&frame).map_err(err)? else {
            return Ok(None);
        };
        let ctx = self.model.context();
        if self.recent.len() == ctx {
            self.recent.pop_front();
        }
        self.recent.push_back(window);
        if self.recent.len() < ctx {
            return Ok(None);
        }
        let pool = self.recent.make_contiguous();
        let last = pool.len() - 1;
        let start_frame = pool[last].start_frame;
        let scored = self.model.score(&[(&*pool, last)])?[0];
        let end_sample = start_frame as usize * self.stride + FRAME_LEN + (self.window_len - 1) * self.stride;
        Ok(Some(StreamPrediction {
            t_end: end_sample as f64 / self.sample_rate,
            start_frame,
            state: scored.state,
            prob_distracted: scored.prob_distracted,
        }))
    }

    /// Replay a whole session.
    pub fn replay(&mut self, session: &RawSession) -> Result<Vec<StreamPrediction>> {
        let mut out = Vec::new();
        for (t, &task) in session.tasks().iter().enumerate() {
            if let Some(p) = self.push(session.sample(t), task)? {
                out.push(p);
            }
        }
        Ok(out)
    }
}
