use thiserror::Error;

use super::filters::{Filter, FilterBank, WaveletFamily};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WaveletError {
    #[error("cannot transform an empty signal")]
    EmptySignal,
    #[error("decomposition level must be at least 1")]
    ZeroLevel,
    #[error("level {requested} too deep for {len} samples with {family} (maximum {max})")]
    LevelTooDeep {
        requested: usize,
        max: usize,
        len: usize,
        family: WaveletFamily,
    },
    #[error("inconsistent coefficients: {0}")]
    InconsistentCoefficients(String),
}

/// `floor(log2 n)` for `n >= 1`.
fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// Length-driven decomposition depth `max(1, floor(log2 n) - drift)`, without any family cap.
pub fn drift_level(n: usize, drift: usize) -> usize {
    assert!(n >= 1, "signal length must be positive");
    floor_log2(n).saturating_sub(drift).max(1)
}

/// Deepest level whose bands are still at least as long as the filter:
/// `floor(log2(n / (filter_len - 1)))`, floored at 1.
pub fn max_level(n: usize, filter_len: usize) -> usize {
    let span = filter_len.saturating_sub(1).max(1);
    if n < span {
        return 1;
    }
    floor_log2(n / span).max(1)
}

/// Decomposition depth for a signal of length `n`: the drift rule capped by the
/// family's feasible maximum.
pub fn adaptive_level(n: usize, drift: usize, family: WaveletFamily) -> usize {
    drift_level(n, drift).min(max_level(n, family.filter_len()))
}

/// Multi-level approximation and detail bands of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients<T = f64> {
    approx: Vec<T>,
    /// Coarsest first: `details[0]` is `d_J`, the last entry is `d_1`.
    details: Vec<Vec<T>>,
    family: WaveletFamily,
    /// `lengths[j]` is the length of the approximation at level `j`; `lengths[0]` is the signal length.
    lengths: Vec<usize>,
}

/// Selects one band of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Approx,
    /// Detail band at level `j` (1 = finest).
    Detail(usize),
}

impl<T: Scalar> WaveletCoefficients<T> {
    /// Assembles coefficients from raw parts. Consistency is checked on reconstruction.
    pub fn from_parts(
        family: WaveletFamily,
        approx: Vec<T>,
        details: Vec<Vec<T>>,
        lengths: Vec<usize>,
    ) -> Self {
        Self {
            approx,
            details,
            family,
            lengths,
        }
    }

    pub fn approx(&self) -> &[T] {
        &self.approx
    }

    /// Detail bands, coarsest (`d_J`) first.
    pub fn details(&self) -> &[Vec<T>] {
        &self.details
    }

    /// Detail band `d_j`, with `j = 1` the finest scale.
    pub fn detail(&self, j: usize) -> Option<&[T]> {
        if j == 0 || j > self.details.len() {
            return None;
        }
        Some(&self.details[self.details.len() - j])
    }

    pub fn level(&self) -> usize {
        self.details.len()
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn original_length(&self) -> usize {
        self.lengths.first().copied().unwrap_or(0)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    /// Multiplies every band by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.for_each_band_mut(|_, band| band.iter_mut().for_each(|c| *c *= factor));
        out
    }

    /// A copy in which every band except `keep` is zeroed.
    pub fn isolate(&self, keep: Band) -> Self {
        let level = self.level();
        let mut out = self.clone();
        out.for_each_band_mut(|band, values| {
            if band != keep {
                values.iter_mut().for_each(|c| *c = T::zero());
            }
        });
        debug_assert_eq!(out.level(), level);
        out
    }

    /// Sum of squares over all bands.
    pub fn energy(&self) -> T {
        let sq = |band: &[T]| band.iter().map(|&c| c * c).sum::<T>();
        sq(&self.approx) + self.details.iter().map(|d| sq(d)).sum::<T>()
    }

    fn for_each_band_mut(&mut self, mut f: impl FnMut(Band, &mut [T])) {
        f(Band::Approx, &mut self.approx);
        let level = self.details.len();
        for (i, d) in self.details.iter_mut().enumerate() {
            f(Band::Detail(level - i), d);
        }
    }

    fn check_consistency(&self, frame_len: usize) -> Result<(), WaveletError> {
        let bad = |msg: String| Err(WaveletError::InconsistentCoefficients(msg));
        let level = self.details.len();
        if level == 0 {
            return bad("no detail bands".into());
        }
        if self.lengths.len() != level + 1 {
            return bad(format!(
                "{} recorded lengths for {} levels",
                self.lengths.len(),
                level
            ));
        }
        if self.lengths[0] == 0 {
            return bad("original length is zero".into());
        }
        for j in 1..=level {
            let expected = band_len(self.lengths[j - 1], frame_len);
            if self.lengths[j] != expected {
                return bad(format!(
                    "level {j} length {} but {} expected from {}",
                    self.lengths[j],
                    expected,
                    self.lengths[j - 1]
                ));
            }
            let d = &self.details[level - j];
            if d.len() != self.lengths[j] {
                return bad(format!(
                    "detail band {j} has {} coefficients, expected {}",
                    d.len(),
                    self.lengths[j]
                ));
            }
        }
        if self.approx.len() != self.lengths[level] {
            return bad(format!(
                "approximation has {} coefficients, expected {}",
                self.approx.len(),
                self.lengths[level]
            ));
        }
        Ok(())
    }
}

/// Coefficient count after filtering `n` samples with a `frame_len`-tap filter and
/// downsampling by two.
pub fn band_len(n: usize, frame_len: usize) -> usize {
    (n + frame_len - 1) / 2
}

/// Half-point symmetric extension: `... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

/// Filters `signal` and keeps odd-indexed outputs of the full convolution.
fn analyze<T: Scalar>(signal: &[T], filter: &Filter<T>, frame_len: usize) -> Vec<T> {
    let n = signal.len();
    let out_len = band_len(n, frame_len);
    let interior = frame_len..n;
    (0..out_len)
        .map(|k| {
            let centre = 2 * k + 1;
            if interior.contains(&centre) {
                filter.placed().map(|(p, c)| c * signal[centre - p]).sum::<T>()
            } else {
                filter
                    .placed()
                    .map(|(p, c)| c * signal[reflect(centre as isize - p as isize, n)])
                    .sum::<T>()
            }
        })
        .collect()
}

/// Adds the upsampled band `coeffs` filtered by `filter` into `out`.
fn synthesize_into<T: Scalar>(coeffs: &[T], filter: &Filter<T>, frame_len: usize, out: &mut [T]) {
    let m = coeffs.len() as isize;
    for (n, y) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (p, c) in filter.placed() {
            // out[n] += g[p] * coeffs[k] where n + frame_len - 2 - p = 2k
            let t = n as isize + frame_len as isize - 2 - p as isize;
            if t >= 0 && t % 2 == 0 && t / 2 < m {
                acc += c * coeffs[(t / 2) as usize];
            }
        }
        *y += acc;
    }
}

/// Multi-level discrete wavelet transform.
pub fn decompose<T: Scalar>(
    signal: &[T],
    bank: &FilterBank<T>,
    level: usize,
) -> Result<WaveletCoefficients<T>, WaveletError> {
    if signal.is_empty() {
        return Err(WaveletError::EmptySignal);
    }
    if level == 0 {
        return Err(WaveletError::ZeroLevel);
    }
    let max = max_level(signal.len(), bank.frame_len());
    if level > max {
        return Err(WaveletError::LevelTooDeep {
            requested: level,
            max,
            len: signal.len(),
            family: bank.family(),
        });
    }

    let mut lengths = Vec::with_capacity(level + 1);
    lengths.push(signal.len());
    let mut details = Vec::with_capacity(level);
    let mut approx = signal.to_vec();
    for _ in 0..level {
        let detail = analyze(&approx, bank.dec_hi(), bank.frame_len());
        approx = analyze(&approx, bank.dec_lo(), bank.frame_len());
        lengths.push(approx.len());
        details.push(detail);
    }
    details.reverse();
    Ok(WaveletCoefficients {
        approx,
        details,
        family: bank.family(),
        lengths,
    })
}

/// Inverse transform back to the original signal length.
pub fn reconstruct<T: Scalar>(coeffs: &WaveletCoefficients<T>) -> Result<Vec<T>, WaveletError> {
    let bank = coeffs.family().filter_bank::<T>();
    coeffs.check_consistency(bank.frame_len())?;
    let level = coeffs.level();
    let mut approx = coeffs.approx.clone();
    for j in (1..=level).rev() {
        let detail = &coeffs.details[level - j];
        let mut next = vec![T::zero(); coeffs.lengths[j - 1]];
        synthesize_into(&approx, bank.rec_lo(), bank.frame_len(), &mut next);
        synthesize_into(detail, bank.rec_hi(), bank.frame_len(), &mut next);
        approx = next;
    }
    Ok(approx)
}

/// Reconstructs a single band with all others zeroed.
pub fn reconstruct_band<T: Scalar>(
    coeffs: &WaveletCoefficients<T>,
    band: Band,
) -> Result<Vec<T>, WaveletError> {
    reconstruct(&coeffs.isolate(band))
}

/// Reconstruction from the coarsest detail band `d_J` alone.
pub fn reconstruct_detail_only<T: Scalar>(coeffs: &WaveletCoefficients<T>) -> Result<Vec<T>, WaveletError> {
    let level = coeffs.level();
    if level == 0 {
        return Err(WaveletError::InconsistentCoefficients("no detail bands".into()));
    }
    reconstruct_band(coeffs, Band::Detail(level))
}
