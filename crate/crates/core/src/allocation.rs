//! Segment importance, low-importance filtering and frame budget allocation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::Segment;
use crate::scalar::{mean, min_max, population_variance, Scalar};
use crate::trace::{normalize_min_max, RelevanceTrace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AllocationError {
    #[error("segmentation is empty")]
    EmptySegmentation,
    #[error("segments do not partition the {len}-frame trace: {reason}")]
    NotAPartition { len: usize, reason: String },
    #[error("invalid importance weights: {0}")]
    InvalidWeights(String),
}

/// Weights of the duration, mean-score, max-score and variance-ratio terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceWeights {
    pub duration: f64,
    pub mean: f64,
    pub max: f64,
    pub variance: f64,
}

impl Default for ImportanceWeights {
    fn default() -> Self {
        Self {
            duration: 0.4,
            mean: 0.2,
            max: 0.3,
            variance: 0.1,
        }
    }
}

impl ImportanceWeights {
    pub fn new(duration: f64, mean: f64, max: f64, variance: f64) -> Result<Self, AllocationError> {
        let w = Self {
            duration,
            mean,
            max,
            variance,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        let all = [self.duration, self.mean, self.max, self.variance];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(AllocationError::InvalidWeights(format!(
                "weights must be finite and non-negative, got {all:?}"
            )))
        }
    }
}

/// Importance of one segment with its additive breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentScore<T = f64> {
    pub segment: Segment,
    pub importance: T,
    /// `|G_i| / N`
    pub duration_term: T,
    /// Mean normalized score inside the segment.
    pub mean_term: T,
    /// Max normalized score inside the segment.
    pub max_term: T,
    /// Segment variance over global variance; zero when the trace is constant.
    pub variance_term: T,
}

impl<T: Scalar> SegmentScore<T> {
    /// Recombines the terms under `weights`.
    pub fn weighted(&self, weights: &ImportanceWeights) -> T {
        T::lit(weights.duration) * self.duration_term
            + T::lit(weights.mean) * self.mean_term
            + T::lit(weights.max) * self.max_term
            + T::lit(weights.variance) * self.variance_term
    }
}

fn check_partition(segments: &[Segment], n: usize) -> Result<(), AllocationError> {
    let fail = |reason: String| Err(AllocationError::NotAPartition { len: n, reason });
    let mut next = 0;
    for seg in segments {
        if seg.start != next || seg.end < seg.start {
            return fail(format!(
                "segment {} spans [{}, {}] but frame {next} is next",
                seg.id, seg.start, seg.end
            ));
        }
        next = seg.end + 1;
    }
    if next != n {
        return fail(format!("coverage ends at frame {next}"));
    }
    Ok(())
}

/// Scores every segment over the min-max normalized trace.
pub fn score_segments<T: Scalar>(
    trace: &RelevanceTrace<T>,
    segments: &[Segment],
    weights: &ImportanceWeights,
) -> Result<Vec<SegmentScore<T>>, AllocationError> {
    if segments.is_empty() {
        return Err(AllocationError::EmptySegmentation);
    }
    let n = trace.len();
    check_partition(segments, n)?;
    weights.validate()?;

    let normalized = normalize_min_max(trace.scores());
    let global_var = population_variance(&normalized);
    let total = T::from_count(n);
    Ok(segments
        .iter()
        .map(|&segment| {
            let values = &normalized[segment.range()];
            let variance_term = if global_var > T::zero() {
                population_variance(values) / global_var
            } else {
                T::zero()
            };
            let mut score = SegmentScore {
                segment,
                importance: T::zero(),
                duration_term: T::from_count(segment.len()) / total,
                mean_term: mean(values),
                max_term: min_max(values).1,
                variance_term,
            };
            score.importance = score.weighted(weights);
            score
        })
        .collect())
}

/// `mean(Imp) − η·std(Imp)` with the population standard deviation.
pub fn filter_threshold<T: Scalar>(scores: &[SegmentScore<T>], eta: f64) -> T {
    let values: Vec<T> = scores.iter().map(|s| s.importance).collect();
    if values.is_empty() {
        return T::zero();
    }
    let (lo, hi) = min_max(&values);
    if lo == hi {
        return lo;
    }
    mean(&values) - T::lit(eta) * population_variance(&values).sqrt()
}

/// Keeps segments with importance at or above the adaptive threshold, and always
/// the most important one.
pub fn filter_segments<T: Scalar>(scores: &[SegmentScore<T>], eta: f64) -> Vec<SegmentScore<T>> {
    let Some(best) = argmax_importance(scores) else {
        return Vec::new();
    };
    let tau = filter_threshold(scores, eta);
    scores
        .iter()
        .enumerate()
        .filter(|&(i, s)| i == best || s.importance >= tau)
        .map(|(_, s)| *s)
        .collect()
}

/// Position of the highest importance; ties go to the earliest.
fn argmax_importance<T: Scalar>(scores: &[SegmentScore<T>]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, T)>, (i, s)| match best {
            Some((_, v)) if v >= s.importance => best,
            _ => Some((i, s.importance)),
        })
        .map(|(i, _)| i)
}

/// Frames granted to one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub segment: Segment,
    pub budget: usize,
}

/// Per-segment budgets for a requested total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    pub entries: Vec<BudgetEntry>,
    /// Requested total `K`.
    pub total: usize,
}

impl BudgetAllocation {
    /// Frames actually granted: `min(K, capacity)`.
    pub fn allocated(&self) -> usize {
        self.entries.iter().map(|e| e.budget).sum()
    }

    pub fn capacity(&self) -> usize {
        self.entries.iter().map(|e| e.segment.len()).sum()
    }

    pub fn budget_of(&self, segment_id: usize) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.segment.id == segment_id)
            .map(|e| e.budget)
    }
}

/// Hands out `remaining` single frames cycling through `order`, skipping full segments.
fn grant_round_robin(budgets: &mut [usize], caps: &[usize], order: &[usize], mut remaining: usize) {
    while remaining > 0 {
        let mut granted = false;
        for &i in order {
            if remaining == 0 {
                break;
            }
            if budgets[i] < caps[i] {
                budgets[i] += 1;
                remaining -= 1;
                granted = true;
            }
        }
        if !granted {
            break;
        }
    }
}

fn build_allocation<T>(scores: &[SegmentScore<T>], budgets: Vec<usize>, total: usize) -> BudgetAllocation {
    BudgetAllocation {
        entries: scores
            .iter()
            .zip(budgets)
            .map(|(s, budget)| BudgetEntry {
                segment: s.segment,
                budget,
            })
            .collect(),
        total,
    }
}

/// Softmax probabilities with max-subtraction.
pub fn softmax<T: Scalar>(values: &[T]) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let top = min_max(values).1;
    let exps: Vec<T> = values.iter().map(|&v| (v - top).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax-proportional budget with largest-remainder rounding.
///
/// Floors of `K·softmax(Imp)` are granted first; leftover frames go one at a time
/// by fractional part (descending), then importance (descending), then segment id.
/// Budgets never exceed segment length; overflow moves on in the same order.
pub fn allocate_budget<T: Scalar>(
    scores: &[SegmentScore<T>],
    k_total: usize,
) -> Result<BudgetAllocation, AllocationError> {
    if scores.is_empty() {
        return Err(AllocationError::EmptySegmentation);
    }
    let caps: Vec<usize> = scores.iter().map(|s| s.segment.len()).collect();
    let capacity: usize = caps.iter().sum();
    let target = k_total.min(capacity);

    let importances: Vec<T> = scores.iter().map(|s| s.importance).collect();
    let k = T::from_count(k_total);
    let ideal: Vec<T> = softmax(&importances).into_iter().map(|p| k * p).collect();
    let floors: Vec<usize> = ideal.iter().map(|q| q.floor().to_usize().unwrap_or(0)).collect();
    let fractions: Vec<T> = ideal
        .iter()
        .zip(&floors)
        .map(|(&q, &f)| q - T::from_count(f))
        .collect();

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        fractions[b]
            .partial_cmp(&fractions[a])
            .unwrap_or(Ordering::Equal)
            .then(
                scores[b]
                    .importance
                    .partial_cmp(&scores[a].importance)
                    .unwrap_or(Ordering::Equal),
            )
            .then(scores[a].segment.id.cmp(&scores[b].segment.id))
    });

    let mut budgets: Vec<usize> = floors.iter().zip(&caps).map(|(&f, &c)| f.min(c)).collect();
    let granted: usize = budgets.iter().sum();
    grant_round_robin(&mut budgets, &caps, &order, target.saturating_sub(granted));
    Ok(build_allocation(scores, budgets, k_total))
}

/// Even split across segments, remainder to the lowest segment ids, capped at
/// segment length.
pub fn allocate_average<T: Scalar>(
    scores: &[SegmentScore<T>],
    k_total: usize,
) -> Result<BudgetAllocation, AllocationError> {
    if scores.is_empty() {
        return Err(AllocationError::EmptySegmentation);
    }
    let caps: Vec<usize> = scores.iter().map(|s| s.segment.len()).collect();
    let target = k_total.min(caps.iter().sum());
    let share = k_total / scores.len();
    let mut budgets: Vec<usize> = caps.iter().map(|&c| share.min(c)).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by_key(|&i| scores[i].segment.id);
    let granted: usize = budgets.iter().sum();
    grant_round_robin(&mut budgets, &caps, &order, target.saturating_sub(granted));
    Ok(build_allocation(scores, budgets, k_total))
}
