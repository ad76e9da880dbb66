//! Per-segment frame selection.
//!
//! The default selector takes the segment's most relevant frame as an anchor and
//! then adds frames by maximal marginal relevance:
//!
//! ```text
//! t* = argmax_t  λ·s_t − (1 − λ)·max_{t' ∈ selected} cos(f_t, f_t')
//! ```
//!
//! Ties always go to the lowest frame index.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::BudgetAllocation;
use crate::boundary::Segment;
use crate::scalar::Scalar;
use crate::trace::RelevanceTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("cosine similarity of a zero vector (frame {index})")]
    ZeroVector { index: usize },
    #[error("vectors differ in length ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("budget {budget} exceeds the {len} frames of segment {segment}")]
    BudgetExceedsSegment {
        segment: usize,
        budget: usize,
        len: usize,
    },
    #[error("segment {segment} [{start}, {end}] lies outside the {len}-frame trace")]
    SegmentOutOfRange {
        segment: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("embedding matrix has {rows} rows but the trace has {frames} frames")]
    Alignment { rows: usize, frames: usize },
    #[error("invalid embedding matrix: {0}")]
    InvalidEmbeddings(String),
}

/// Row-major `N × D` matrix of per-frame visual embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T = f64> {
    data: Vec<T>,
    rows: usize,
    dim: usize,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(rows: usize, dim: usize, data: Vec<T>) -> Result<Self, SelectionError> {
        if rows == 0 || dim == 0 {
            return Err(SelectionError::InvalidEmbeddings(format!(
                "shape {rows}x{dim} has no entries"
            )));
        }
        if data.len() != rows * dim {
            return Err(SelectionError::InvalidEmbeddings(format!(
                "{} values for shape {rows}x{dim}",
                data.len()
            )));
        }
        Ok(Self { data, rows, dim })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, SelectionError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(SelectionError::DimensionMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            data: self.data.iter().map(|&v| v * factor).collect(),
            rows: self.rows,
            dim: self.dim,
        }
    }
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[−1, 1]`.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T, SelectionError> {
    if u.len() != v.len() {
        return Err(SelectionError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() {
        return Err(SelectionError::ZeroVector { index: 0 });
    }
    if nv == T::zero() {
        return Err(SelectionError::ZeroVector { index: 1 });
    }
    Ok((dot(u, v) / (nu * nv)).max(-T::one()).min(T::one()))
}

/// Per-segment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    #[default]
    Mmr,
    #[serde(rename = "topk")]
    TopK,
    Uniform,
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionStrategy::Mmr => "mmr",
            SelectionStrategy::TopK => "topk",
            SelectionStrategy::Uniform => "uniform",
        })
    }
}

impl FromStr for SelectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mmr" => Ok(Self::Mmr),
            "topk" => Ok(Self::TopK),
            "uniform" => Ok(Self::Uniform),
            other => Err(format!("unknown selection strategy `{other}`")),
        }
    }
}

/// Selectors that need no embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineSelector {
    TopK,
    Uniform,
}

fn check_segment<T>(relevance: &[T], segment: &Segment, budget: usize) -> Result<(), SelectionError> {
    if segment.start > segment.end || segment.end >= relevance.len() {
        return Err(SelectionError::SegmentOutOfRange {
            segment: segment.id,
            start: segment.start,
            end: segment.end,
            len: relevance.len(),
        });
    }
    if budget > segment.len() {
        return Err(SelectionError::BudgetExceedsSegment {
            segment: segment.id,
            budget,
            len: segment.len(),
        });
    }
    Ok(())
}

/// Most relevant frame in the segment; ties go to the lowest index.
pub fn anchor<T: Scalar>(relevance: &[T], segment: &Segment) -> usize {
    segment.range().fold(segment.start, |best, t| {
        if relevance[t] > relevance[best] {
            t
        } else {
            best
        }
    })
}

/// Anchor plus greedy MMR inside one segment. Indices come back in selection order.
pub fn select_in_segment<T: Scalar>(
    relevance: &[T],
    segment: &Segment,
    budget: usize,
    embeddings: &EmbeddingMatrix<T>,
    lambda: f64,
) -> Result<Vec<usize>, SelectionError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SelectionError::InvalidLambda(lambda));
    }
    check_segment(relevance, segment, budget)?;
    if embeddings.rows() != relevance.len() {
        return Err(SelectionError::Alignment {
            rows: embeddings.rows(),
            frames: relevance.len(),
        });
    }
    if budget == 0 {
        return Ok(Vec::new());
    }

    let first = anchor(relevance, segment);
    let mut chosen = vec![first];
    if budget == 1 {
        return Ok(chosen);
    }

    let norms: Vec<T> = segment.range().map(|t| norm(embeddings.row(t))).collect();
    if let Some(offset) = norms.iter().position(|&n| n == T::zero()) {
        return Err(SelectionError::ZeroVector {
            index: segment.start + offset,
        });
    }
    let similarity = |a: usize, b: usize| {
        let s =
            dot(embeddings.row(a), embeddings.row(b)) / (norms[a - segment.start] * norms[b - segment.start]);
        s.max(-T::one()).min(T::one())
    };

    let relevance_weight = T::lit(lambda);
    let diversity_weight = T::lit(1.0 - lambda);
    // Running max similarity of every frame to the selected set.
    let mut max_sim: Vec<T> = segment.range().map(|t| similarity(t, first)).collect();
    let mut taken = vec![false; segment.len()];
    taken[first - segment.start] = true;

    while chosen.len() < budget {
        let mut best: Option<(usize, T)> = None;
        for t in segment.range() {
            let offset = t - segment.start;
            if taken[offset] {
                continue;
            }
            let value = relevance_weight * relevance[t] - diversity_weight * max_sim[offset];
            if best.is_none_or(|(_, v)| value > v) {
                best = Some((t, value));
            }
        }
        let Some((next, _)) = best else { break };
        taken[next - segment.start] = true;
        chosen.push(next);
        for t in segment.range() {
            let offset = t - segment.start;
            if !taken[offset] {
                max_sim[offset] = max_sim[offset].max(similarity(t, next));
            }
        }
    }
    Ok(chosen)
}

/// Top-k by relevance or evenly spaced frames; indices come back ascending.
pub fn select_in_segment_baseline<T: Scalar>(
    relevance: &[T],
    segment: &Segment,
    budget: usize,
    selector: BaselineSelector,
) -> Result<Vec<usize>, SelectionError> {
    check_segment(relevance, segment, budget)?;
    if budget == 0 {
        return Ok(Vec::new());
    }
    let mut picked = match selector {
        BaselineSelector::TopK => {
            let mut ranked: Vec<usize> = segment.range().collect();
            ranked.sort_by(|&a, &b| {
                relevance[b]
                    .partial_cmp(&relevance[a])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            ranked.truncate(budget);
            ranked
        }
        BaselineSelector::Uniform => uniform_offsets(segment.len(), budget)
            .into_iter()
            .map(|o| segment.start + o)
            .collect(),
    };
    picked.sort_unstable();
    Ok(picked)
}

/// `k` offsets into `0..len` at `round(j·(len−1)/(k−1))`, deduplicated and
/// back-filled with the smallest unused offsets.
fn uniform_offsets(len: usize, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![len / 2];
    }
    let span = len - 1;
    let steps = k - 1;
    let mut offsets: Vec<usize> = (0..k).map(|j| (2 * j * span + steps) / (2 * steps)).collect();
    offsets.dedup();
    let mut fill = 0;
    while offsets.len() < k {
        if !offsets.contains(&fill) {
            offsets.push(fill);
        }
        fill += 1;
    }
    offsets.sort_unstable();
    offsets
}

/// Frames chosen inside one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSelection {
    pub segment_id: usize,
    /// In selection order (anchor first for MMR).
    pub indices: Vec<usize>,
    /// Relevance argmax of the segment, when the selector uses one.
    pub anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Union of all per-segment picks, ascending.
    pub selected: Vec<usize>,
    pub per_segment: Vec<SegmentSelection>,
    /// Strategy actually applied (MMR falls back to top-k without embeddings).
    pub strategy: SelectionStrategy,
}

/// Runs the per-segment selector for every allocation entry and merges the picks.
///
/// Relevance is the min-max normalized trace, the same scale used for importance.
pub fn select_frames<T: Scalar>(
    trace: &RelevanceTrace<T>,
    allocation: &BudgetAllocation,
    embeddings: Option<&EmbeddingMatrix<T>>,
    lambda: f64,
    strategy: SelectionStrategy,
) -> Result<SelectionResult, SelectionError> {
    let relevance = trace.normalized_scores();
    let strategy = match (strategy, embeddings) {
        (SelectionStrategy::Mmr, None) => {
            log::warn!(
                "no embeddings for `{}`: falling back to top-k selection",
                trace.video_id()
            );
            SelectionStrategy::TopK
        }
        (s, _) => s,
    };

    let mut per_segment = Vec::with_capacity(allocation.entries.len());
    for entry in &allocation.entries {
        let segment = &entry.segment;
        let indices = match (strategy, embeddings) {
            (SelectionStrategy::Mmr, Some(emb)) => {
                select_in_segment(&relevance, segment, entry.budget, emb, lambda)?
            }
            (SelectionStrategy::Uniform, _) => {
                select_in_segment_baseline(&relevance, segment, entry.budget, BaselineSelector::Uniform)?
            }
            _ => select_in_segment_baseline(&relevance, segment, entry.budget, BaselineSelector::TopK)?,
        };
        let anchor =
            (entry.budget > 0 && strategy != SelectionStrategy::Uniform).then(|| anchor(&relevance, segment));
        per_segment.push(SegmentSelection {
            segment_id: segment.id,
            indices,
            anchor,
        });
    }
    per_segment.sort_by_key(|s| s.segment_id);

    let mut selected: Vec<usize> = per_segment
        .iter()
        .flat_map(|s| s.indices.iter().copied())
        .collect();
    selected.sort_unstable();
    selected.dedup();
    Ok(SelectionResult {
        selected,
        per_segment,
        strategy,
    })
}
