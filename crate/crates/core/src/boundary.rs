//! Semantic boundary detection and timeline segmentation.
//!
//! Boundaries are peaks of the change intensity `|s̃_t|` that clear an adaptive
//! height threshold (`mean + α·std`) and an adaptive prominence threshold
//! (`β·range`), thinned by greedy non-maximum suppression with a minimum
//! separation `max(floor, ⌊N·fraction⌋)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{mean, min_max, population_variance, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("index {index} is not a strict local maximum")]
    NotAPeak { index: usize },
    #[error("invalid peak parameters: {0}")]
    InvalidParams(String),
}

/// Thresholding and spacing parameters for peak detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    /// α: height threshold is `mean + α·std`.
    pub height_factor: f64,
    /// β: prominence threshold is `β·(max − min)`.
    pub prominence_factor: f64,
    pub min_distance_floor: usize,
    pub min_distance_fraction: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            height_factor: 0.5,
            prominence_factor: 0.05,
            min_distance_floor: 5,
            min_distance_fraction: 0.02,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<(), BoundaryError> {
        let bad = |m: &str| Err(BoundaryError::InvalidParams(m.to_owned()));
        if !(self.height_factor >= 0.0 && self.height_factor.is_finite()) {
            return bad("height factor must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.prominence_factor) {
            return bad("prominence factor must lie in [0, 1]");
        }
        if self.min_distance_floor < 1 {
            return bad("minimum distance floor must be >= 1");
        }
        if !(0.0..1.0).contains(&self.min_distance_fraction) {
            return bad("minimum distance fraction must lie in [0, 1)");
        }
        Ok(())
    }

    /// Effective minimum separation for a signal of `n` samples.
    pub fn min_distance(&self, n: usize) -> usize {
        let proportional = (n as f64 * self.min_distance_fraction).floor() as usize;
        self.min_distance_floor.max(proportional)
    }
}

/// Interior boundary indices; each boundary is the last index of its segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySet {
    boundaries: Vec<usize>,
    signal_length: usize,
}

impl BoundarySet {
    pub fn empty(signal_length: usize) -> Self {
        Self {
            boundaries: Vec::new(),
            signal_length,
        }
    }

    /// Validates that `boundaries` is strictly increasing and interior.
    pub fn new(boundaries: Vec<usize>, signal_length: usize) -> Result<Self, BoundaryError> {
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BoundaryError::InvalidParams(
                "boundaries must be strictly increasing".into(),
            ));
        }
        if let Some(&b) = boundaries.iter().find(|&&b| b < 1 || b + 2 > signal_length) {
            return Err(BoundaryError::InvalidParams(format!(
                "boundary {b} outside the interior of a {signal_length}-sample signal"
            )));
        }
        Ok(Self {
            boundaries,
            signal_length,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }
}

/// Contiguous inclusive frame range `[start, end]` of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Thresholds derived from one intensity signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakThresholds<T> {
    pub height: T,
    pub prominence: T,
    pub min_distance: usize,
}

pub fn change_intensity<T: Scalar>(detail: &[T]) -> Vec<T> {
    detail.iter().map(|v| v.abs()).collect()
}

/// A local maximum, possibly flat-topped over `left..=right`.
#[derive(Debug, Clone, Copy)]
struct Peak<T> {
    left: usize,
    right: usize,
    height: T,
}

/// Strict local maxima and flat-topped plateaus (rising into the left edge,
/// falling after the right edge). Endpoints never qualify.
fn local_maxima<T: Scalar>(signal: &[T]) -> Vec<Peak<T>> {
    let n = signal.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if signal[i] > signal[i - 1] {
            let mut j = i;
            while j + 1 < n && signal[j + 1] == signal[i] {
                j += 1;
            }
            if j + 1 < n && signal[j + 1] < signal[i] {
                peaks.push(Peak {
                    left: i,
                    right: j,
                    height: signal[i],
                });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence of the (plateau) peak spanning `left..=right`.
fn plateau_prominence<T: Scalar>(signal: &[T], left: usize, right: usize) -> T {
    let height = signal[left];
    let mut left_base = height;
    for &v in signal[..left].iter().rev() {
        if v > height {
            break;
        }
        left_base = left_base.min(v);
    }
    let mut right_base = height;
    for &v in &signal[right + 1..] {
        if v > height {
            break;
        }
        right_base = right_base.min(v);
    }
    height - left_base.max(right_base)
}

/// Prominence of the strict local maximum at `peak_index`.
pub fn peak_prominence<T: Scalar>(signal: &[T], peak_index: usize) -> Result<T, BoundaryError> {
    let is_peak = peak_index >= 1
        && peak_index + 1 < signal.len()
        && signal[peak_index] > signal[peak_index - 1]
        && signal[peak_index] > signal[peak_index + 1];
    if !is_peak {
        return Err(BoundaryError::NotAPeak { index: peak_index });
    }
    Ok(plateau_prominence(signal, peak_index, peak_index))
}

pub fn peak_thresholds<T: Scalar>(intensity: &[T], params: &PeakParams) -> PeakThresholds<T> {
    let n = intensity.len();
    let (lo, hi) = if n == 0 {
        (T::zero(), T::zero())
    } else {
        min_max(intensity)
    };
    PeakThresholds {
        height: mean(intensity) + T::lit(params.height_factor) * population_variance(intensity).sqrt(),
        prominence: T::lit(params.prominence_factor) * (hi - lo),
        min_distance: params.min_distance(n),
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    index: usize,
    prominence: T,
    height: T,
}

/// Greedy suppression: strongest candidate first (prominence, then height, then
/// lowest index), kept only when at least `min_distance` from every kept index.
fn suppress<T: Scalar>(mut candidates: Vec<Candidate<T>>, min_distance: usize) -> Vec<usize> {
    candidates.sort_by(|a, b| {
        b.prominence
            .partial_cmp(&a.prominence)
            .unwrap_or(Ordering::Equal)
            .then(b.height.partial_cmp(&a.height).unwrap_or(Ordering::Equal))
            .then(a.index.cmp(&b.index))
    });
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c.index) >= min_distance) {
            kept.push(c.index);
        }
    }
    kept.sort_unstable();
    kept
}

/// Adaptive height/prominence peak detection with non-maximum suppression.
///
/// Signals shorter than three samples, or with zero dynamic range, have no boundaries.
pub fn detect_boundaries<T: Scalar>(intensity: &[T], params: &PeakParams) -> BoundarySet {
    let n = intensity.len();
    if n < 3 {
        return BoundarySet::empty(n);
    }
    let (lo, hi) = min_max(intensity);
    if hi - lo <= T::zero() {
        return BoundarySet::empty(n);
    }
    let th = peak_thresholds(intensity, params);
    let candidates = local_maxima(intensity)
        .into_iter()
        .filter(|p| p.height >= th.height)
        .filter_map(|p| {
            let prominence = plateau_prominence(intensity, p.left, p.right);
            (prominence >= th.prominence).then_some(Candidate {
                index: p.left,
                prominence,
                height: p.height,
            })
        })
        .collect();
    BoundarySet {
        boundaries: suppress(candidates, th.min_distance),
        signal_length: n,
    }
}

/// Boundary detectors that bypass the wavelet stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineDetector {
    /// Strict local minima of the raw scores, thinned by the same spacing rule.
    RawLocalMinima,
    /// Peaks of `|s[t+1] − s[t]|` under the adaptive thresholds.
    RawGradient,
}

pub fn detect_boundaries_baseline<T: Scalar>(
    scores: &[T],
    detector: BaselineDetector,
    params: &PeakParams,
) -> BoundarySet {
    let n = scores.len();
    if n < 3 {
        return BoundarySet::empty(n);
    }
    match detector {
        BaselineDetector::RawLocalMinima => {
            let negated: Vec<T> = scores.iter().map(|&s| -s).collect();
            let candidates = local_maxima(&negated)
                .into_iter()
                .map(|p| Candidate {
                    index: p.left,
                    prominence: plateau_prominence(&negated, p.left, p.right),
                    height: p.height,
                })
                .collect();
            BoundarySet {
                boundaries: suppress(candidates, params.min_distance(n)),
                signal_length: n,
            }
        }
        BaselineDetector::RawGradient => {
            // Gradient index t sits between samples t and t+1, so t closes its segment.
            let gradient: Vec<T> = scores.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let found = detect_boundaries(&gradient, params);
            BoundarySet {
                boundaries: found.boundaries,
                signal_length: n,
            }
        }
    }
}

/// Splits `[0, N−1]` into `|boundaries| + 1` contiguous segments.
pub fn segment_timeline(boundaries: &BoundarySet) -> Vec<Segment> {
    let n = boundaries.signal_length();
    if n == 0 {
        return Vec::new();
    }
    let mut segments = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for &b in boundaries.indices() {
        segments.push(Segment {
            id: segments.len(),
            start,
            end: b,
        });
        start = b + 1;
    }
    segments.push(Segment {
        id: segments.len(),
        start,
        end: n - 1,
    });
    segments
}

impl fmt::Display for BaselineDetector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineDetector::RawLocalMinima => "raw_local_minima",
            BaselineDetector::RawGradient => "raw_gradient",
        })
    }
}

impl FromStr for BaselineDetector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw_local_minima" | "minima" => Ok(Self::RawLocalMinima),
            "raw_gradient" | "gradient" => Ok(Self::RawGradient),
            other => Err(format!("unknown baseline detector `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PeakParams {
        PeakParams::default()
    }

    #[test]
    fn intensity_is_absolute_value() {
        assert_eq!(change_intensity(&[-0.3, 0.0, 0.7]), vec![0.3, 0.0, 0.7]);
        let once = change_intensity(&[-1.5, 2.0, -0.25]);
        assert_eq!(change_intensity(&once), once);
        assert_eq!(change_intensity(&[0.0_f32; 4]), vec![0.0; 4]);
    }

    #[test]
    fn prominence_examples() {
        assert_eq!(peak_prominence(&[0.0, 0.0, 5.0, 0.0, 0.0], 2), Ok(5.0));
        assert_eq!(peak_prominence(&[0.0, 3.0, 1.0, 5.0, 0.0], 1), Ok(2.0));
        assert_eq!(peak_prominence(&[0.0, 3.0, 1.0, 5.0, 0.0], 3), Ok(5.0));
        assert_eq!(
            peak_prominence(&[0.0, 3.0, 1.0, 5.0, 0.0], 2),
            Err(BoundaryError::NotAPeak { index: 2 })
        );
        assert!(peak_prominence(&[1.0, 2.0], 1).is_err());
        assert!(peak_prominence(&[1.0, 2.0, 2.0, 1.0], 1).is_err());
    }

    #[test]
    fn detection_examples() {
        assert!(detect_boundaries(&[1.0; 5], &params()).is_empty());
        let found = detect_boundaries(&[0.0, 0.0, 5.0, 0.0, 0.0], &params());
        assert_eq!(found.indices(), &[2]);
        // Two equal spikes three apart: only the lower index survives suppression.
        let spikes = [0.0, 0.0, 4.0, 0.0, 0.0, 4.0, 0.0, 0.0];
        assert_eq!(detect_boundaries(&spikes, &params()).indices(), &[2]);
        // Prominence breaks ties before index.
        let uneven = [0.0, 0.0, 3.0, 2.0, 2.0, 4.0, 0.0, 0.0];
        assert_eq!(detect_boundaries(&uneven, &params()).indices(), &[5]);
    }

    #[test]
    fn thresholds_follow_population_statistics() {
        let th = peak_thresholds(&[0.0_f64, 0.0, 5.0, 0.0, 0.0], &params());
        assert!((th.height - 2.0).abs() < 1e-12);
        assert!((th.prominence - 0.25).abs() < 1e-12);
        assert_eq!(th.min_distance, 5);
        assert_eq!(params().min_distance(1000), 20);
    }

    #[test]
    fn plateau_registers_leftmost_sample() {
        let plateau = [0.0, 1.0, 3.0, 3.0, 3.0, 1.0, 0.0];
        assert_eq!(detect_boundaries(&plateau, &params()).indices(), &[2]);
        // A shoulder that keeps rising is not a plateau peak.
        assert!(local_maxima(&[0.0, 2.0, 2.0, 3.0, 1.0])
            .iter()
            .all(|p| p.left == 3));
    }

    #[test]
    fn short_signals_have_no_boundaries() {
        assert!(detect_boundaries(&[1.0, 2.0], &params()).is_empty());
        assert!(detect_boundaries::<f64>(&[], &params()).is_empty());
    }

    #[test]
    fn baselines() {
        let increasing: Vec<f64> = (0..20).map(f64::from).collect();
        let minima = detect_boundaries_baseline(&increasing, BaselineDetector::RawLocalMinima, &params());
        assert!(minima.is_empty());
        let step = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let grad = detect_boundaries_baseline(&step, BaselineDetector::RawGradient, &params());
        assert_eq!(grad.indices(), &[2]);
        assert_eq!(grad.signal_length(), 6);
        for detector in [BaselineDetector::RawLocalMinima, BaselineDetector::RawGradient] {
            assert!(detect_boundaries_baseline(&[0.4; 9], detector, &params()).is_empty());
        }
        let dips = [1.0, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0];
        let found = detect_boundaries_baseline(&dips, BaselineDetector::RawLocalMinima, &params());
        assert_eq!(found.indices(), &[1, 7]);
    }

    #[test]
    fn segmentation() {
        let segs = segment_timeline(&BoundarySet::new(vec![3], 10).unwrap());
        assert_eq!(
            segs,
            vec![
                Segment {
                    id: 0,
                    start: 0,
                    end: 3
                },
                Segment {
                    id: 1,
                    start: 4,
                    end: 9
                }
            ]
        );
        let whole = segment_timeline(&BoundarySet::empty(7));
        assert_eq!(
            whole,
            vec![Segment {
                id: 0,
                start: 0,
                end: 6
            }]
        );
        let three = segment_timeline(&BoundarySet::new(vec![1, 3], 6).unwrap());
        let ranges: Vec<_> = three.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(ranges, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn boundary_set_validation() {
        assert!(BoundarySet::new(vec![0], 5).is_err());
        assert!(BoundarySet::new(vec![4], 5).is_err());
        assert!(BoundarySet::new(vec![2, 2], 5).is_err());
        assert!(BoundarySet::new(vec![1, 3], 5).is_ok());
    }

    #[test]
    fn param_validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.prominence_factor = 1.5;
        assert!(p.validate().is_err());
        let mut p = params();
        p.min_distance_floor = 0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.height_factor = -0.1;
        assert!(p.validate().is_err());
    }
}
