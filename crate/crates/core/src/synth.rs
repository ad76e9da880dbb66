//! Synthetic piecewise-constant relevance traces with known boundaries, and
//! boundary-detection scoring against them.
//!
//! # Random stream
//!
//! All draws come from `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha), in this order:
//!
//! 1. `num_segments − 1` slack offsets, each uniform on `0..=slack`, then sorted;
//! 2. one level per segment (see [`generate`]);
//! 3. `n` standard-normal noise samples scaled by `noise_sigma`, only when `noise_sigma > 0`.
//!
//! The stream is therefore fixed by the seed and the configuration alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::RelevanceTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("infeasible synthetic configuration: {0}")]
    InfeasibleConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub num_segments: usize,
    /// Inclusive `(low, high)` range of segment levels.
    pub level_range: (f64, f64),
    /// Minimum |level difference| between consecutive segments.
    pub min_step: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn min_segment_len(&self) -> usize {
        if self.num_segments == 0 {
            return 0;
        }
        self.n.div_ceil(4 * self.num_segments)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InfeasibleConfig(m));
        let (low, high) = self.level_range;
        if self.num_segments == 0 {
            return fail("num_segments must be at least 1".into());
        }
        if self.n < self.num_segments {
            return fail(format!(
                "n = {} is below num_segments = {}",
                self.n, self.num_segments
            ));
        }
        if self.num_segments * self.min_segment_len() > self.n {
            return fail(format!(
                "{} segments of at least {} frames exceed n = {}",
                self.num_segments,
                self.min_segment_len(),
                self.n
            ));
        }
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return fail(format!(
                "level range ({low}, {high}) is not an ordered finite interval"
            ));
        }
        if !(self.min_step >= 0.0 && self.min_step <= high - low) {
            return fail(format!(
                "min_step {} must lie in [0, {}] for this level range",
                self.min_step,
                high - low
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            ));
        }
        Ok(())
    }
}

/// A generated trace with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace {
    pub trace: RelevanceTrace<f64>,
    /// Last index of every segment but the final one.
    pub boundaries: Vec<usize>,
    pub levels: Vec<f64>,
}

/// Ground-truth sidecar written next to a synthetic trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub version: u32,
    pub config: SynthConfig,
    pub boundaries: Vec<usize>,
    pub levels: Vec<f64>,
}

impl SynthTrace {
    pub fn truth(&self, config: &SynthConfig) -> SynthTruth {
        SynthTruth {
            version: 1,
            config: *config,
            boundaries: self.boundaries.clone(),
            levels: self.levels.clone(),
        }
    }
}

/// Closed intervals `[a, b]` of admissible levels.
fn admissible(low: f64, high: f64, step: f64, prev: Option<f64>) -> Vec<(f64, f64)> {
    // Every point of this set has a partner at distance ≥ step inside it.
    let base = [(low, high - step), (low + step, high)];
    let Some(p) = prev else {
        return base.to_vec();
    };
    let mut out = Vec::new();
    for (a, b) in base {
        for (lo, hi) in [(a, b.min(p - step)), (a.max(p + step), b)] {
            if lo <= hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

fn draw_level(rng: &mut ChaCha8Rng, intervals: &[(f64, f64)]) -> f64 {
    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    if total <= 0.0 {
        return intervals[rng.random_range(0..intervals.len())].0;
    }
    let mut u = rng.random::<f64>() * total;
    for &(a, b) in intervals {
        if u <= b - a {
            return a + u;
        }
        u -= b - a;
    }
    intervals[intervals.len() - 1].1
}

/// Piecewise-constant trace plus i.i.d. Gaussian noise.
///
/// Segment lengths are at least `⌈n / (4·num_segments)⌉`; the remaining frames are
/// spread by sorted uniform offsets. The first level is uniform on
/// `[low, high − min_step] ∪ [low + min_step, high]`; each later level is uniform
/// on the part of that set at distance ≥ `min_step` from its predecessor.
pub fn generate(config: &SynthConfig) -> Result<SynthTrace, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = config.num_segments;
    let m = config.min_segment_len();
    let slack = config.n - s * m;

    let mut offsets: Vec<usize> = (1..s).map(|_| rng.random_range(0..=slack)).collect();
    offsets.sort_unstable();
    let boundaries: Vec<usize> = offsets
        .iter()
        .enumerate()
        .map(|(i, &o)| (i + 1) * m + o - 1)
        .collect();

    let (low, high) = config.level_range;
    let mut levels = Vec::with_capacity(s);
    for i in 0..s {
        let prev = (i > 0).then(|| levels[i - 1]);
        let intervals = admissible(low, high, config.min_step, prev);
        levels.push(draw_level(&mut rng, &intervals));
    }

    let mut scores = Vec::with_capacity(config.n);
    let mut segment = 0;
    for t in 0..config.n {
        scores.push(levels[segment]);
        if boundaries.get(segment) == Some(&t) {
            segment += 1;
        }
    }
    if config.noise_sigma > 0.0 {
        for v in &mut scores {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += config.noise_sigma * z;
        }
    }

    let trace = RelevanceTrace::from_scores(format!("synth-{}", config.seed), scores)
        .expect("synthetic scores are finite and non-empty");
    Ok(SynthTrace {
        trace,
        boundaries,
        levels,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn truth_to_string(truth: &SynthTruth) -> String {
    let mut text = serde_json::to_string_pretty(truth).expect("truth documents always serialize");
    text.push('\n');
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: usize,
    pub tolerance_window: usize,
}

/// Scoring window `max(5, ⌈n/50⌉)` used for synthetic recall checks.
pub fn default_window(n: usize) -> usize {
    5.max(n.div_ceil(50))
}

fn ratio(matches: usize, denom: usize, other_empty: bool) -> f64 {
    if denom == 0 {
        if other_empty {
            1.0
        } else {
            0.0
        }
    } else {
        matches as f64 / denom as f64
    }
}

/// Greedy one-to-one matching within `±window`, closest pairs first.
pub fn eval_boundaries(detected: &[usize], truth: &[usize], window: usize) -> BoundaryEvalResult {
    let mut pairs: Vec<(usize, usize, bool, usize, usize)> = Vec::new();
    for (i, &d) in detected.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            let dist = d.abs_diff(t);
            if dist <= window {
                pairs.push((dist, d.min(t), d > t, i, j));
            }
        }
    }
    // Pairs sharing a sort key are mirror images and never compete for a frame.
    pairs.sort_unstable_by_key(|&(dist, lo, flip, _, _)| (dist, lo, flip));
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.len()];
    let mut matches = 0;
    for (_, _, _, i, j) in pairs {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            matches += 1;
        }
    }
    let precision = ratio(matches, detected.len(), truth.is_empty());
    let recall = ratio(matches, truth.len(), detected.is_empty());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    BoundaryEvalResult {
        precision,
        recall,
        f1,
        matches,
        tolerance_window: window,
    }
}
