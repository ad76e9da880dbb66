use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Supported wavelet filter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    #[default]
    Db4,
    Db8,
    Haar,
    Sym4,
    #[serde(rename = "bior3_3")]
    Bior3_3,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 5] = [
        WaveletFamily::Db4,
        WaveletFamily::Db8,
        WaveletFamily::Haar,
        WaveletFamily::Sym4,
        WaveletFamily::Bior3_3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Db4 => "db4",
            WaveletFamily::Db8 => "db8",
            WaveletFamily::Haar => "haar",
            WaveletFamily::Sym4 => "sym4",
            WaveletFamily::Bior3_3 => "bior3_3",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, WaveletFamily::Bior3_3)
    }

    /// Length of the decomposition lowpass filter.
    pub fn filter_len(self) -> usize {
        match self {
            WaveletFamily::Haar => 2,
            WaveletFamily::Db4 | WaveletFamily::Sym4 | WaveletFamily::Bior3_3 => 8,
            WaveletFamily::Db8 => 16,
        }
    }

    pub fn filter_bank<T: Scalar>(self) -> FilterBank<T> {
        FilterBank::new(self)
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownWavelet(pub String);

impl fmt::Display for UnknownWavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown wavelet `{}` (expected one of db4, db8, haar, sym4, bior3_3)",
            self.0
        )
    }
}

impl std::error::Error for UnknownWavelet {}

impl FromStr for WaveletFamily {
    type Err = UnknownWavelet;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "db4" => Ok(WaveletFamily::Db4),
            "db8" => Ok(WaveletFamily::Db8),
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "sym4" => Ok(WaveletFamily::Sym4),
            "bior3_3" | "bior3.3" => Ok(WaveletFamily::Bior3_3),
            _ => Err(UnknownWavelet(s.to_owned())),
        }
    }
}

const HAAR_DEC_LO: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

const DB8_DEC_LO: [f64; 16] = [
    -0.00011747678412476953,
    0.0006754494064505693,
    -0.00039174037337694705,
    -0.004870352993451574,
    0.008746094047405777,
    0.013981027917398282,
    -0.044088253930794755,
    -0.017369301001807547,
    0.12874742662047847,
    0.0004724845739132828,
    -0.2840155429615469,
    -0.015829105256349306,
    0.5853546836542067,
    0.6756307362972898,
    0.31287159091429995,
    0.05441584224310401,
];

const SYM4_DEC_LO: [f64; 8] = [
    -0.07576571478927333,
    -0.02963552764599851,
    0.49761866763201545,
    0.8037387518059161,
    0.29785779560527736,
    -0.09921954357684722,
    -0.012603967262037833,
    0.0322231006040427,
];

// Biorthogonal 3.3: sqrt(2) * [3, -9, -7, 45, 45, -7, -9, 3] / 64 for analysis,
// sqrt(2) * [1, 3, 3, 1] / 8 for synthesis.
const BIOR33_DEC_LO: [f64; 8] = [
    0.06629126073623882,
    -0.1988737822087165,
    -0.15467960838455727,
    0.9943689110435825,
    0.9943689110435825,
    -0.15467960838455727,
    -0.1988737822087165,
    0.06629126073623882,
];
const BIOR33_REC_LO: [f64; 4] = [
    0.1767766952966369,
    0.5303300858899106,
    0.5303300858899106,
    0.1767766952966369,
];
/// Position of the short bior3.3 filters inside the 8-tap frame.
const BIOR33_SHORT_OFFSET: usize = 2;

/// A finite filter placed at `offset` inside a frame of the bank's common length.
///
/// Taps outside `offset..offset + taps.len()` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter<T> {
    taps: Vec<T>,
    offset: usize,
}

impl<T: Scalar> Filter<T> {
    fn from_f64(taps: &[f64], offset: usize) -> Self {
        Self {
            taps: taps.iter().map(|&c| T::lit(c)).collect(),
            offset,
        }
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// The filter expanded to `frame_len` taps with explicit zeros.
    pub fn padded(&self, frame_len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); frame_len];
        out[self.offset..self.offset + self.taps.len()].copy_from_slice(&self.taps);
        out
    }

    /// Iterates `(frame position, tap)` over the non-zero support.
    pub(crate) fn placed(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.taps
            .iter()
            .enumerate()
            .map(move |(j, &c)| (self.offset + j, c))
    }
}

/// Analysis and synthesis filters of one wavelet family.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T> {
    family: WaveletFamily,
    frame_len: usize,
    dec_lo: Filter<T>,
    dec_hi: Filter<T>,
    rec_lo: Filter<T>,
    rec_hi: Filter<T>,
}

impl<T: Scalar> FilterBank<T> {
    pub fn new(family: WaveletFamily) -> Self {
        match family {
            WaveletFamily::Haar => Self::orthogonal(family, &HAAR_DEC_LO),
            WaveletFamily::Db4 => Self::orthogonal(family, &DB4_DEC_LO),
            WaveletFamily::Db8 => Self::orthogonal(family, &DB8_DEC_LO),
            WaveletFamily::Sym4 => Self::orthogonal(family, &SYM4_DEC_LO),
            WaveletFamily::Bior3_3 => Self::bior3_3(),
        }
    }

    /// Quadrature-mirror construction from the decomposition lowpass filter.
    fn orthogonal(family: WaveletFamily, dec_lo: &[f64]) -> Self {
        let len = dec_lo.len();
        let rec_lo: Vec<f64> = dec_lo.iter().rev().copied().collect();
        let rec_hi: Vec<f64> = dec_lo
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
            .collect();
        let dec_hi: Vec<f64> = rec_hi.iter().rev().copied().collect();
        Self {
            family,
            frame_len: len,
            dec_lo: Filter::from_f64(dec_lo, 0),
            dec_hi: Filter::from_f64(&dec_hi, 0),
            rec_lo: Filter::from_f64(&rec_lo, 0),
            rec_hi: Filter::from_f64(&rec_hi, 0),
        }
    }

    fn bior3_3() -> Self {
        let dec_hi: Vec<f64> = BIOR33_REC_LO
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { -c } else { c })
            .collect();
        let rec_hi: Vec<f64> = BIOR33_DEC_LO
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
            .collect();
        Self {
            family: WaveletFamily::Bior3_3,
            frame_len: BIOR33_DEC_LO.len(),
            dec_lo: Filter::from_f64(&BIOR33_DEC_LO, 0),
            dec_hi: Filter::from_f64(&dec_hi, BIOR33_SHORT_OFFSET),
            rec_lo: Filter::from_f64(&BIOR33_REC_LO, BIOR33_SHORT_OFFSET),
            rec_hi: Filter::from_f64(&rec_hi, 0),
        }
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    /// Common frame length of all four filters (the decomposition lowpass length).
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn dec_lo(&self) -> &Filter<T> {
        &self.dec_lo
    }

    pub fn dec_hi(&self) -> &Filter<T> {
        &self.dec_hi
    }

    pub fn rec_lo(&self) -> &Filter<T> {
        &self.rec_lo
    }

    pub fn rec_hi(&self) -> &Filter<T> {
        &self.rec_hi
    }
}
