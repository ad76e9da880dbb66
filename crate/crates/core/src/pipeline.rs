//! End-to-end keyframe selection: trace → boundaries → segments → budget → frames.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    allocate_average, allocate_budget, filter_segments, filter_threshold, score_segments, AllocationError,
    BudgetAllocation, BudgetEntry, ImportanceWeights, SegmentScore,
};
use crate::boundary::{
    change_intensity, detect_boundaries, detect_boundaries_baseline, peak_thresholds, segment_timeline,
    BaselineDetector, BoundaryError, BoundarySet, PeakParams, PeakThresholds, Segment,
};
use crate::mmr::{
    anchor, select_frames, EmbeddingMatrix, SegmentSelection, SelectionError, SelectionResult,
    SelectionStrategy,
};
use crate::scalar::Scalar;
use crate::trace::{normalize_min_max, RelevanceTrace};
use crate::wavelet::{adaptive_level, decompose, reconstruct_detail_only, WaveletError, WaveletFamily};

/// Detail-band samples below this fraction of the largest |score| are treated as
/// zero before peak detection, so transform round-off on flat stretches never
/// registers as change.
pub const DETAIL_FLUSH_RELATIVE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("embedding matrix has {rows} rows but the trace has {frames} frames")]
    Alignment { rows: usize, frames: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStrategy {
    #[default]
    Wavelet,
    RawLocalMinima,
    RawGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AllocationStrategy {
    #[default]
    Adaptive,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub wavelet: WaveletFamily,
    pub drift: usize,
    pub peak: PeakParams,
    pub weights: ImportanceWeights,
    pub eta: f64,
    pub lambda: f64,
    pub k_total: usize,
    pub boundary_strategy: BoundaryStrategy,
    pub selection_strategy: SelectionStrategy,
    pub allocation_strategy: AllocationStrategy,
    /// Keep the detail reconstruction and change intensity in the report.
    pub export_signals: bool,
}

impl PipelineConfig {
    /// Default method settings (db4, drift 3, α 0.5, β 0.05, weights 0.4/0.2/0.3/0.1,
    /// η 1.2, λ 0.5) with a frame budget of `k_total`.
    pub fn new(k_total: usize) -> Self {
        Self {
            wavelet: WaveletFamily::Db4,
            drift: 3,
            peak: PeakParams::default(),
            weights: ImportanceWeights::default(),
            eta: 1.2,
            lambda: 0.5,
            k_total,
            boundary_strategy: BoundaryStrategy::Wavelet,
            selection_strategy: SelectionStrategy::Mmr,
            allocation_strategy: AllocationStrategy::Adaptive,
            export_signals: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.peak.validate()?;
        self.weights.validate()?;
        if !self.eta.is_finite() {
            return Err(PipelineError::Config(format!(
                "eta must be finite, got {}",
                self.eta
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(PipelineError::Config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Intermediate signals of the wavelet boundary stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSignals<T> {
    /// Reconstruction from the coarsest detail band, after flushing round-off.
    pub detail: Vec<T>,
    pub intensity: Vec<T>,
}

/// Every stage decision of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport<T = f64> {
    pub video_id: String,
    pub config: PipelineConfig,
    pub n_frames: usize,
    /// Decomposition depth; `None` when the wavelet stage did not run.
    pub decomposition_level: Option<usize>,
    pub thresholds: Option<PeakThresholds<T>>,
    pub boundaries: BoundarySet,
    /// All segments with their importance breakdown, in timeline order.
    pub segments: Vec<SegmentScore<T>>,
    pub filter_threshold: T,
    /// Ids of segments that received a budget entry.
    pub retained: Vec<usize>,
    /// Ids dropped by the importance filter but restored so the budget fits.
    pub restored: Vec<usize>,
    pub allocation: BudgetAllocation,
    pub selection: SelectionResult,
    /// `K ≥ N`: every frame is selected.
    pub budget_saturated: bool,
    pub signals: Option<StageSignals<T>>,
}

impl<T: Scalar> PipelineReport<T> {
    pub fn selected(&self) -> &[usize] {
        &self.selection.selected
    }
}

fn wavelet_boundaries<T: Scalar>(
    scores: &[T],
    config: &PipelineConfig,
) -> Result<(usize, StageSignals<T>, BoundarySet, PeakThresholds<T>), PipelineError> {
    let n = scores.len();
    let level = adaptive_level(n, config.drift, config.wavelet);
    let bank = config.wavelet.filter_bank::<T>();
    let coeffs = decompose(scores, &bank, level)?;
    let scale = scores.iter().fold(T::zero(), |m, s| m.max(s.abs()));
    let floor = T::lit(DETAIL_FLUSH_RELATIVE) * scale;
    let detail: Vec<T> = reconstruct_detail_only(&coeffs)?
        .into_iter()
        .map(|v| if v.abs() < floor { T::zero() } else { v })
        .collect();
    let intensity = change_intensity(&detail);
    let boundaries = detect_boundaries(&intensity, &config.peak);
    let thresholds = peak_thresholds(&intensity, &config.peak);
    Ok((level, StageSignals { detail, intensity }, boundaries, thresholds))
}

/// Runs the full pipeline on one trace.
pub fn run<T: Scalar>(
    trace: &RelevanceTrace<T>,
    embeddings: Option<&EmbeddingMatrix<T>>,
    config: &PipelineConfig,
) -> Result<PipelineReport<T>, PipelineError> {
    config.validate()?;
    let n = trace.len();
    if let Some(emb) = embeddings {
        if emb.rows() != n {
            return Err(PipelineError::Alignment {
                rows: emb.rows(),
                frames: n,
            });
        }
    }

    let scores = trace.scores();
    let mut decomposition_level = None;
    let mut thresholds = None;
    let mut signals = None;
    let boundaries = if n < 3 {
        BoundarySet::empty(n)
    } else {
        match config.boundary_strategy {
            BoundaryStrategy::Wavelet => {
                let (level, stage, found, th) = wavelet_boundaries(scores, config)?;
                decomposition_level = Some(level);
                thresholds = Some(th);
                signals = config.export_signals.then_some(stage);
                found
            }
            BoundaryStrategy::RawLocalMinima => {
                detect_boundaries_baseline(scores, BaselineDetector::RawLocalMinima, &config.peak)
            }
            BoundaryStrategy::RawGradient => {
                detect_boundaries_baseline(scores, BaselineDetector::RawGradient, &config.peak)
            }
        }
    };

    let segments = segment_timeline(&boundaries);
    let scored = score_segments(trace, &segments, &config.weights)?;
    let tau = filter_threshold(&scored, config.eta);

    if config.k_total >= n {
        return Ok(saturated_report(
            trace,
            embeddings,
            config,
            decomposition_level,
            thresholds,
            boundaries,
            scored,
            tau,
            signals,
        ));
    }

    let mut kept = filter_segments(&scored, config.eta);
    let restored = restore_capacity(&scored, &mut kept, config.k_total);

    let allocation = match config.allocation_strategy {
        AllocationStrategy::Adaptive => allocate_budget(&kept, config.k_total)?,
        AllocationStrategy::Average => allocate_average(&kept, config.k_total)?,
    };
    let selection = select_frames(
        trace,
        &allocation,
        embeddings,
        config.lambda,
        config.selection_strategy,
    )?;

    Ok(PipelineReport {
        video_id: trace.video_id().to_owned(),
        config: *config,
        n_frames: n,
        decomposition_level,
        thresholds,
        boundaries,
        retained: kept.iter().map(|s| s.segment.id).collect(),
        restored,
        segments: scored,
        filter_threshold: tau,
        allocation,
        selection,
        budget_saturated: false,
        signals,
    })
}

/// Re-admits filtered segments, most important first, until the retained
/// segments can hold `k_total` frames. Returns the restored ids.
fn restore_capacity<T: Scalar>(
    all: &[SegmentScore<T>],
    kept: &mut Vec<SegmentScore<T>>,
    k_total: usize,
) -> Vec<usize> {
    let mut capacity: usize = kept.iter().map(|s| s.segment.len()).sum();
    if capacity >= k_total {
        return Vec::new();
    }
    let mut dropped: Vec<&SegmentScore<T>> = all
        .iter()
        .filter(|s| !kept.iter().any(|k| k.segment.id == s.segment.id))
        .collect();
    dropped.sort_by(|a, b| {
        b.importance
            .partial_cmp(&a.importance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.segment.id.cmp(&b.segment.id))
    });
    let mut restored = Vec::new();
    for s in dropped {
        if capacity >= k_total {
            break;
        }
        capacity += s.segment.len();
        restored.push(s.segment.id);
        kept.push(*s);
    }
    kept.sort_by_key(|s| s.segment.id);
    restored.sort_unstable();
    restored
}

#[allow(clippy::too_many_arguments)]
fn saturated_report<T: Scalar>(
    trace: &RelevanceTrace<T>,
    embeddings: Option<&EmbeddingMatrix<T>>,
    config: &PipelineConfig,
    decomposition_level: Option<usize>,
    thresholds: Option<PeakThresholds<T>>,
    boundaries: BoundarySet,
    scored: Vec<SegmentScore<T>>,
    tau: T,
    signals: Option<StageSignals<T>>,
) -> PipelineReport<T> {
    let strategy = match (config.selection_strategy, embeddings) {
        (SelectionStrategy::Mmr, None) => SelectionStrategy::TopK,
        (s, _) => s,
    };
    let relevance = normalize_min_max(trace.scores());
    let segments: Vec<Segment> = scored.iter().map(|s| s.segment).collect();
    let per_segment = segments
        .iter()
        .map(|seg| SegmentSelection {
            segment_id: seg.id,
            indices: seg.range().collect(),
            anchor: (strategy != SelectionStrategy::Uniform).then(|| anchor(&relevance, seg)),
        })
        .collect();
    PipelineReport {
        video_id: trace.video_id().to_owned(),
        config: *config,
        n_frames: trace.len(),
        decomposition_level,
        thresholds,
        boundaries,
        retained: segments.iter().map(|s| s.id).collect(),
        restored: Vec::new(),
        allocation: BudgetAllocation {
            entries: segments
                .iter()
                .map(|&segment| BudgetEntry {
                    segment,
                    budget: segment.len(),
                })
                .collect(),
            total: config.k_total,
        },
        segments: scored,
        filter_threshold: tau,
        selection: SelectionResult {
            selected: (0..trace.len()).collect(),
            per_segment,
            strategy,
        },
        budget_saturated: true,
        signals,
    }
}

impl fmt::Display for BoundaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryStrategy::Wavelet => "wavelet",
            BoundaryStrategy::RawLocalMinima => "raw_local_minima",
            BoundaryStrategy::RawGradient => "raw_gradient",
        })
    }
}

impl FromStr for BoundaryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wavelet" => Ok(Self::Wavelet),
            "minima" | "raw_local_minima" => Ok(Self::RawLocalMinima),
            "gradient" | "raw_gradient" => Ok(Self::RawGradient),
            other => Err(format!("unknown boundary strategy `{other}`")),
        }
    }
}

impl fmt::Display for AllocationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationStrategy::Adaptive => "adaptive",
            AllocationStrategy::Average => "average",
        })
    }
}

impl FromStr for AllocationStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(Self::Adaptive),
            "average" => Ok(Self::Average),
            other => Err(format!("unknown allocation strategy `{other}`")),
        }
    }
}
