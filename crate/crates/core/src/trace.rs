//! Per-frame query relevance traces.

use thiserror::Error;

use crate::scalar::{min_max, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace must contain at least one frame")]
    Empty,
    #[error("scores has {scores} entries but frame_indices has {frames}")]
    LengthMismatch { scores: usize, frames: usize },
    #[error("frame_indices must be strictly increasing (position {position})")]
    NotIncreasing { position: usize },
    #[error("fps must be positive and finite, got {0}")]
    InvalidFps(f64),
    #[error("score at position {position} is not finite")]
    NonFiniteScore { position: usize },
}

/// Relevance score of every candidate frame against a single query.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceTrace<T = f64> {
    scores: Vec<T>,
    frame_indices: Vec<u64>,
    fps: f64,
    video_id: String,
}

impl<T: Scalar> RelevanceTrace<T> {
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        frame_indices: Vec<u64>,
        scores: Vec<T>,
    ) -> Result<Self, TraceError> {
        if scores.len() != frame_indices.len() {
            return Err(TraceError::LengthMismatch {
                scores: scores.len(),
                frames: frame_indices.len(),
            });
        }
        if scores.is_empty() {
            return Err(TraceError::Empty);
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(TraceError::InvalidFps(fps));
        }
        if let Some(position) = frame_indices.windows(2).position(|w| w[0] >= w[1]) {
            return Err(TraceError::NotIncreasing {
                position: position + 1,
            });
        }
        if let Some(position) = scores.iter().position(|s| !s.is_finite()) {
            return Err(TraceError::NonFiniteScore { position });
        }
        Ok(Self {
            scores,
            frame_indices,
            fps,
            video_id: video_id.into(),
        })
    }

    /// Builds a trace sampled at 1 fps with frame indices `0..n`.
    pub fn from_scores(video_id: impl Into<String>, scores: Vec<T>) -> Result<Self, TraceError> {
        let frames = (0..scores.len() as u64).collect();
        Self::new(video_id, 1.0, frames, scores)
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn frame_indices(&self) -> &[u64] {
        &self.frame_indices
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores min-max normalized to `[0, 1]`; a constant trace maps to 0.5 everywhere.
    pub fn normalized_scores(&self) -> Vec<T> {
        normalize_min_max(&self.scores)
    }
}

/// Min-max normalization onto `[0, 1]`. Constant input maps to 0.5.
pub fn normalize_min_max<T: Scalar>(values: &[T]) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = min_max(values);
    let range = hi - lo;
    if range <= T::zero() {
        return vec![T::lit(0.5); values.len()];
    }
    values.iter().map(|&v| (v - lo) / range).collect()
}
