use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wfs_core::boundary::PeakParams;
use wfs_core::{
    AllocationStrategy, BoundaryStrategy, ImportanceWeights, PipelineConfig, SelectionStrategy, WaveletFamily,
};

#[derive(Debug, Parser)]
#[command(
    name = "wfs",
    version,
    about = "Query-aware keyframe selection from relevance traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select keyframes and write a JSON report.
    Select(SelectArgs),
    /// Print boundaries, segments and importances for one trace.
    Inspect(InspectArgs),
    /// Generate a synthetic trace with a ground-truth sidecar.
    Synth(SynthArgs),
}

/// Method parameters shared by `select` and `inspect`.
#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Wavelet family: haar, db4, db8, sym4, bior3.3.
    #[arg(long, default_value = "db4")]
    pub wavelet: WaveletFamily,
    /// Drift l in J = floor(log2 N) - l.
    #[arg(long, default_value_t = 3)]
    pub drift: usize,
    /// Height factor α.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Prominence factor β.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub beta: f64,
    /// Filtering aggressiveness η.
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
    pub eta: f64,
    /// MMR relevance weight λ.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Importance weights as duration,mean,max,variance.
    #[arg(long, default_value = "0.4,0.2,0.3,0.1", value_parser = parse_weights, allow_hyphen_values = true)]
    pub weights: ImportanceWeights,
    /// Boundary detector: wavelet, minima, gradient.
    #[arg(long, default_value = "wavelet")]
    pub boundary: BoundaryStrategy,
    /// Per-segment selector: mmr, topk, uniform.
    #[arg(long, default_value = "mmr")]
    pub selection: SelectionStrategy,
    /// Budget split: adaptive, average.
    #[arg(long, default_value = "adaptive")]
    pub allocation: AllocationStrategy,
}

impl MethodArgs {
    pub fn config(&self, k_total: usize) -> PipelineConfig {
        PipelineConfig {
            wavelet: self.wavelet,
            drift: self.drift,
            peak: PeakParams {
                height_factor: self.alpha,
                prominence_factor: self.beta,
                ..PeakParams::default()
            },
            weights: self.weights,
            eta: self.eta,
            lambda: self.lambda,
            k_total,
            boundary_strategy: self.boundary,
            selection_strategy: self.selection,
            allocation_strategy: self.allocation,
            export_signals: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Trace document (JSON).
    #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
    pub scores: Option<PathBuf>,
    /// Embedding matrix (WFSE binary), row-aligned with the trace.
    #[arg(long, conflicts_with = "batch")]
    pub embeddings: Option<PathBuf>,
    /// Total frame budget K.
    #[arg(long, allow_negative_numbers = true)]
    pub k: i64,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Report path; standard output when omitted. A directory in batch mode.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV dump of score, detail reconstruction and change intensity. A directory in batch mode.
    #[arg(long)]
    pub export_signals: Option<PathBuf>,
    /// Process every `<name>.trace.json` in this directory; `<name>.wfse` embeddings are used when present.
    #[arg(long, requires = "out")]
    pub batch: Option<PathBuf>,
    /// Worker threads for batch mode (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Trace document (JSON).
    #[arg(long)]
    pub scores: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Trace length.
    #[arg(long)]
    pub n: usize,
    /// Number of piecewise-constant segments.
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub high: f64,
    /// Minimum level change at every true boundary.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub min_step: f64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output trace document.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar (default: `<name>.truth.json` next to a `<name>.trace.json` output).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

fn parse_weights(text: &str) -> Result<ImportanceWeights, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [d, a, m, v] = parts[..] else {
        return Err(format!(
            "expected four comma-separated weights, got {}",
            parts.len()
        ));
    };
    ImportanceWeights::new(d, a, m, v).map_err(|e| e.to_string())
}
