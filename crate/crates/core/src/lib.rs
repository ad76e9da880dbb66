//! Keyframe selection over per-frame query relevance traces.
//!
//! The pipeline finds semantic boundaries in the relevance signal from the
//! coarsest detail band of a multi-level wavelet decomposition, splits the
//! timeline into segments, spreads the frame budget across segments by a
//! softmax over their importance, and picks diverse, relevant frames inside
//! every segment with maximal marginal relevance.
//!
//! Numeric stages are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which every tolerance in the test
//! suite assumes.

pub mod allocation;
pub mod boundary;
pub mod io;
pub mod mmr;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod trace;
pub mod wavelet;

pub use allocation::{AllocationError, BudgetAllocation, ImportanceWeights, SegmentScore};
pub use boundary::{BoundaryError, BoundarySet, PeakParams, Segment};
pub use io::IoError;
pub use mmr::{EmbeddingMatrix, SelectionError, SelectionResult, SelectionStrategy};
pub use pipeline::{
    run, AllocationStrategy, BoundaryStrategy, PipelineConfig, PipelineError, PipelineReport,
};
pub use scalar::Scalar;
pub use synth::{eval_boundaries, generate, BoundaryEvalResult, SynthConfig, SynthError};
pub use trace::{normalize_min_max, RelevanceTrace, TraceError};
pub use wavelet::{FilterBank, WaveletCoefficients, WaveletError, WaveletFamily};

pub type Trace = RelevanceTrace<f64>;
pub type Embeddings = EmbeddingMatrix<f64>;
pub type Coefficients = WaveletCoefficients<f64>;
pub type Bank = FilterBank<f64>;
pub type Scores = SegmentScore<f64>;
pub type Report = PipelineReport<f64>;
