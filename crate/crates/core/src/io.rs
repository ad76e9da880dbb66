//! File formats: JSON trace documents, binary `WFSE` embeddings, JSON reports
//! and CSV signal dumps.
//!
//! Report numbers are written with exactly six decimals so that reports are
//! byte-identical across runs and platforms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mmr::{EmbeddingMatrix, SelectionError};
use crate::pipeline::{PipelineReport, StageSignals};
use crate::scalar::Scalar;
use crate::trace::{RelevanceTrace, TraceError};

pub const TRACE_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;
pub const EMBEDDING_MAGIC: [u8; 4] = *b"WFSE";
const EMBEDDING_HEADER: usize = 12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("bad magic bytes {found:?}, expected \"WFSE\"")]
    MagicMismatch { found: Vec<u8> },
    #[error("embedding file is {actual} bytes, header implies {expected}")]
    TruncatedFile { expected: u64, actual: u64 },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// True for failures of the underlying file system rather than of the content.
    pub fn is_io(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(cut) => full[..cut].to_owned(),
            None => full,
        };
        IoError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

impl From<TraceError> for IoError {
    fn from(e: TraceError) -> Self {
        IoError::Validation(e.to_string())
    }
}

impl From<SelectionError> for IoError {
    fn from(e: SelectionError) -> Self {
        IoError::Validation(e.to_string())
    }
}

/// Format tag; only [`TRACE_VERSION`] is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Version;

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u64::deserialize(d)?;
        if v == u64::from(TRACE_VERSION) {
            Ok(Version)
        } else {
            Err(de::Error::custom(format!(
                "unsupported trace version {v} (supported: {TRACE_VERSION})"
            )))
        }
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(TRACE_VERSION)
    }
}

/// On-disk trace document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    version: Version,
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub fps: f64,
    pub frame_indices: Vec<u64>,
    pub scores: Vec<f64>,
    /// Free-form producer notes (scoring model, score definition, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl TraceDocument {
    pub fn from_trace<T: Scalar>(trace: &RelevanceTrace<T>, query: Option<String>) -> Self {
        Self {
            version: Version,
            video_id: trace.video_id().to_owned(),
            query,
            fps: trace.fps(),
            frame_indices: trace.frame_indices().to_vec(),
            scores: trace.scores().iter().map(|s| s.as_f64()).collect(),
            metadata: None,
        }
    }

    pub fn to_trace<T: Scalar>(&self) -> Result<RelevanceTrace<T>, IoError> {
        let scores = self.scores.iter().map(|&s| T::lit(s)).collect();
        Ok(RelevanceTrace::new(
            self.video_id.clone(),
            self.fps,
            self.frame_indices.clone(),
            scores,
        )?)
    }
}

pub fn parse_trace_document(text: &str) -> Result<TraceDocument, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_trace<T: Scalar>(text: &str) -> Result<RelevanceTrace<T>, IoError> {
    parse_trace_document(text)?.to_trace()
}

pub fn read_trace<T: Scalar>(path: impl AsRef<Path>) -> Result<RelevanceTrace<T>, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_trace(&text)
}

pub fn trace_document_to_string(doc: &TraceDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("trace documents always serialize");
    text.push('\n');
    text
}

pub fn write_trace_document(path: impl AsRef<Path>, doc: &TraceDocument) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, trace_document_to_string(doc)).map_err(|e| IoError::io(path, e))
}

pub fn write_trace<T: Scalar>(
    path: impl AsRef<Path>,
    trace: &RelevanceTrace<T>,
    query: Option<String>,
) -> Result<(), IoError> {
    write_trace_document(path, &TraceDocument::from_trace(trace, query))
}

/// Decodes a `WFSE` payload: magic, `u32` rows, `u32` dim, then `f32` values, all little-endian.
pub fn decode_embeddings<T: Scalar>(bytes: &[u8]) -> Result<EmbeddingMatrix<T>, IoError> {
    if bytes.len() < 4 || bytes[..4] != EMBEDDING_MAGIC {
        return Err(IoError::MagicMismatch {
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < EMBEDDING_HEADER {
        return Err(IoError::TruncatedFile {
            expected: EMBEDDING_HEADER as u64,
            actual: bytes.len() as u64,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"));
    let (rows, dim) = (word(4) as usize, word(8) as usize);
    let expected = EMBEDDING_HEADER as u64 + 4 * rows as u64 * dim as u64;
    if bytes.len() as u64 != expected {
        return Err(IoError::TruncatedFile {
            expected,
            actual: bytes.len() as u64,
        });
    }
    if rows == 0 || dim == 0 {
        return Err(IoError::Validation(format!(
            "embedding matrix shape {rows}x{dim} has no entries"
        )));
    }
    let data: Vec<T> = bytes[EMBEDDING_HEADER..]
        .chunks_exact(4)
        .map(|c| T::lit(f64::from(f32::from_le_bytes(c.try_into().expect("4-byte chunk")))))
        .collect();
    if let Some(at) = data.iter().position(|v| !v.is_finite()) {
        return Err(IoError::Validation(format!(
            "embedding value at row {}, column {} is not finite",
            at / dim,
            at % dim
        )));
    }
    Ok(EmbeddingMatrix::new(rows, dim, data)?)
}

/// Entries are stored as `f32`; `f64` values are rounded to nearest.
pub fn encode_embeddings<T: Scalar>(matrix: &EmbeddingMatrix<T>) -> Result<Vec<u8>, IoError> {
    let shape = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| IoError::Validation(format!("{what} {v} exceeds u32")))
    };
    let (rows, dim) = (
        shape(matrix.rows(), "row count")?,
        shape(matrix.dim(), "dimension")?,
    );
    let mut out = Vec::with_capacity(EMBEDDING_HEADER + 4 * matrix.as_slice().len());
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in matrix.as_slice() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn read_embeddings<T: Scalar>(path: impl AsRef<Path>) -> Result<EmbeddingMatrix<T>, IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn write_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    matrix: &EmbeddingMatrix<T>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let bytes = encode_embeddings(matrix)?;
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

/// Real number written with six decimals; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed6(pub f64);

impl Fixed6 {
    pub fn text(self) -> Option<String> {
        if !self.0.is_finite() {
            return None;
        }
        let s = format!("{:.6}", self.0);
        Some(if s == "-0.000000" {
            "0.000000".to_owned()
        } else {
            s
        })
    }
}

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.text() {
            Some(text) => serde_json::Number::from_str(&text)
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
            None => s.serialize_none(),
        }
    }
}

fn fx<T: Scalar>(v: T) -> Fixed6 {
    Fixed6(v.as_f64())
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    version: u32,
    video_id: &'a str,
    n_frames: usize,
    config: ConfigDoc,
    decomposition_level: Option<usize>,
    thresholds: Option<ThresholdDoc>,
    boundaries: &'a [usize],
    segments: Vec<SegmentDoc>,
    filter_threshold: Fixed6,
    budget_saturated: bool,
    allocation: AllocationDoc,
    selection: SelectionDoc<'a>,
}

#[derive(Serialize)]
struct ConfigDoc {
    wavelet: String,
    drift: usize,
    alpha: Fixed6,
    beta: Fixed6,
    min_distance_floor: usize,
    min_distance_fraction: Fixed6,
    weights: WeightsDoc,
    eta: Fixed6,
    lambda: Fixed6,
    k_total: usize,
    boundary_strategy: String,
    selection_strategy: String,
    allocation_strategy: String,
}

#[derive(Serialize)]
struct WeightsDoc {
    duration: Fixed6,
    mean: Fixed6,
    max: Fixed6,
    variance: Fixed6,
}

#[derive(Serialize)]
struct ThresholdDoc {
    height: Fixed6,
    prominence: Fixed6,
    min_distance: usize,
}

#[derive(Serialize)]
struct SegmentDoc {
    id: usize,
    start: usize,
    end: usize,
    length: usize,
    importance: Fixed6,
    terms: WeightsDoc,
    retained: bool,
    restored: bool,
    budget: usize,
}

#[derive(Serialize)]
struct AllocationDoc {
    total: usize,
    allocated: usize,
}

#[derive(Serialize)]
struct SelectionDoc<'a> {
    strategy: String,
    count: usize,
    selected: &'a [usize],
    selected_frame_indices: Vec<u64>,
    per_segment: Vec<PerSegmentDoc<'a>>,
}

#[derive(Serialize)]
struct PerSegmentDoc<'a> {
    segment_id: usize,
    anchor: Option<usize>,
    indices: &'a [usize],
}

/// Pretty-printed JSON report. `frame_indices` maps trace positions to source frames.
pub fn report_to_string<T: Scalar>(report: &PipelineReport<T>, frame_indices: &[u64]) -> String {
    let c = &report.config;
    let doc = ReportDocument {
        version: REPORT_VERSION,
        video_id: &report.video_id,
        n_frames: report.n_frames,
        config: ConfigDoc {
            wavelet: c.wavelet.to_string(),
            drift: c.drift,
            alpha: Fixed6(c.peak.height_factor),
            beta: Fixed6(c.peak.prominence_factor),
            min_distance_floor: c.peak.min_distance_floor,
            min_distance_fraction: Fixed6(c.peak.min_distance_fraction),
            weights: WeightsDoc {
                duration: Fixed6(c.weights.duration),
                mean: Fixed6(c.weights.mean),
                max: Fixed6(c.weights.max),
                variance: Fixed6(c.weights.variance),
            },
            eta: Fixed6(c.eta),
            lambda: Fixed6(c.lambda),
            k_total: c.k_total,
            boundary_strategy: c.boundary_strategy.to_string(),
            selection_strategy: c.selection_strategy.to_string(),
            allocation_strategy: c.allocation_strategy.to_string(),
        },
        decomposition_level: report.decomposition_level,
        thresholds: report.thresholds.map(|t| ThresholdDoc {
            height: fx(t.height),
            prominence: fx(t.prominence),
            min_distance: t.min_distance,
        }),
        boundaries: report.boundaries.indices(),
        segments: report
            .segments
            .iter()
            .map(|s| {
                let id = s.segment.id;
                SegmentDoc {
                    id,
                    start: s.segment.start,
                    end: s.segment.end,
                    length: s.segment.len(),
                    importance: fx(s.importance),
                    terms: WeightsDoc {
                        duration: fx(s.duration_term),
                        mean: fx(s.mean_term),
                        max: fx(s.max_term),
                        variance: fx(s.variance_term),
                    },
                    retained: report.retained.contains(&id),
                    restored: report.restored.contains(&id),
                    budget: report.allocation.budget_of(id).unwrap_or(0),
                }
            })
            .collect(),
        filter_threshold: fx(report.filter_threshold),
        budget_saturated: report.budget_saturated,
        allocation: AllocationDoc {
            total: report.allocation.total,
            allocated: report.allocation.allocated(),
        },
        selection: SelectionDoc {
            strategy: report.selection.strategy.to_string(),
            count: report.selection.selected.len(),
            selected: &report.selection.selected,
            selected_frame_indices: report
                .selection
                .selected
                .iter()
                .map(|&i| frame_indices.get(i).copied().unwrap_or(i as u64))
                .collect(),
            per_segment: report
                .selection
                .per_segment
                .iter()
                .map(|s| PerSegmentDoc {
                    segment_id: s.segment_id,
                    anchor: s.anchor,
                    indices: &s.indices,
                })
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report documents always serialize");
    text.push('\n');
    text
}

pub fn write_report<T: Scalar>(
    path: impl AsRef<Path>,
    report: &PipelineReport<T>,
    frame_indices: &[u64],
) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, report_to_string(report, frame_indices)).map_err(|e| IoError::io(path, e))
}

/// CSV with columns `t,frame_index,score,detail,intensity`.
pub fn signals_to_csv<T: Scalar>(trace: &RelevanceTrace<T>, signals: &StageSignals<T>) -> String {
    let mut out = String::from("t,frame_index,score,detail,intensity\n");
    for (t, ((&frame, &score), (&detail, &intensity))) in trace
        .frame_indices()
        .iter()
        .zip(trace.scores())
        .zip(signals.detail.iter().zip(&signals.intensity))
        .enumerate()
    {
        let cell = |v: T| fx(v).text().unwrap_or_else(|| "nan".to_owned());
        writeln!(
            out,
            "{t},{frame},{},{},{}",
            cell(score),
            cell(detail),
            cell(intensity)
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_signals_csv<T: Scalar>(
    path: impl AsRef<Path>,
    trace: &RelevanceTrace<T>,
    signals: &StageSignals<T>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, signals_to_csv(trace, signals)).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{run, PipelineConfig};

    #[test]
    fn minimal_trace_document() {
        let text = r#"{"version": 1, "video_id": "v", "fps": 1.0, "frame_indices": [0], "scores": [0.5]}"#;
        let t: RelevanceTrace = parse_trace(text).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.video_id(), "v");
    }

    #[test]
    fn mismatched_arrays_fail_validation() {
        let text = r#"{"version": 1, "video_id": "v", "fps": 1.0, "frame_indices": [0, 1], "scores": [0.5]}"#;
        assert!(matches!(parse_trace::<f64>(text), Err(IoError::Validation(_))));
    }

    #[test]
    fn unknown_version_names_the_version() {
        let text = "{\n  \"version\": 7,\n  \"video_id\": \"v\",\n  \"fps\": 1.0,\n  \"frame_indices\": [0],\n  \"scores\": [0.5]\n}";
        match parse_trace::<f64>(text) {
            Err(IoError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("version 7"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\n  \"version\": 1,\n  \"video_id\": \"v\",\n  \"fps\": oops\n}";
        match parse_trace::<f64>(text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let text = r#"{"version": 1, "video_id": "v", "frame_indices": [0], "scores": [0.5]}"#;
        match parse_trace::<f64>(text) {
            Err(IoError::Parse { message, .. }) => assert!(message.contains("fps")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_fps_fails_validation() {
        let text = r#"{"version": 1, "video_id": "v", "fps": 0.0, "frame_indices": [0], "scores": [0.5]}"#;
        assert!(matches!(parse_trace::<f64>(text), Err(IoError::Validation(_))));
    }

    #[test]
    fn trace_round_trip() {
        let t = RelevanceTrace::new("clip", 0.5, vec![0, 60, 120], vec![0.1, 0.25, 0.9]).unwrap();
        let doc = TraceDocument::from_trace(&t, Some("a dog".into()));
        let back: RelevanceTrace = parse_trace(&trace_document_to_string(&doc)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn embedding_round_trip_is_bit_exact() {
        let data: Vec<f32> = (0..21).map(|i| (i as f32 * 0.37).sin() / 3.0).collect();
        let m = EmbeddingMatrix::new(7, 3, data).unwrap();
        let bytes = encode_embeddings(&m).unwrap();
        assert_eq!(bytes.len(), 12 + 4 * 21);
        let back: EmbeddingMatrix<f32> = decode_embeddings(&bytes).unwrap();
        let bits = |m: &EmbeddingMatrix<f32>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        let wide: EmbeddingMatrix<f64> = decode_embeddings(&bytes).unwrap();
        assert_eq!(encode_embeddings(&wide).unwrap(), bytes);
    }

    #[test]
    fn embedding_errors() {
        let m = EmbeddingMatrix::new(2, 2, vec![1.0_f32, 0.0, 0.0, 1.0]).unwrap();
        let bytes = encode_embeddings(&m).unwrap();
        assert!(matches!(
            decode_embeddings::<f64>(&bytes[..bytes.len() - 1]),
            Err(IoError::TruncatedFile {
                expected: 28,
                actual: 27
            })
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            decode_embeddings::<f64>(&longer),
            Err(IoError::TruncatedFile { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_embeddings::<f64>(&bad),
            Err(IoError::MagicMismatch { .. })
        ));
        let empty = [b'W', b'F', b'S', b'E', 0, 0, 0, 0, 3, 0, 0, 0];
        assert!(matches!(
            decode_embeddings::<f64>(&empty),
            Err(IoError::Validation(_))
        ));
        assert!(matches!(
            decode_embeddings::<f64>(b"WFSE"),
            Err(IoError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn fixed6_formatting() {
        assert_eq!(Fixed6(0.1234567).text().as_deref(), Some("0.123457"));
        assert_eq!(Fixed6(-1e-9).text().as_deref(), Some("0.000000"));
        assert_eq!(Fixed6(f64::NAN).text(), None);
        assert_eq!(serde_json::to_string(&Fixed6(2.0)).unwrap(), "2.000000");
        assert_eq!(serde_json::to_string(&Fixed6(f64::INFINITY)).unwrap(), "null");
    }

    #[test]
    fn report_is_stable_text() {
        let scores: Vec<f64> = (0..40).map(|i| if i < 20 { 0.2 } else { 0.7 }).collect();
        let t = RelevanceTrace::from_scores("step", scores).unwrap();
        let r = run(&t, None, &PipelineConfig::new(4)).unwrap();
        let a = report_to_string(&r, t.frame_indices());
        let b = report_to_string(
            &run(&t, None, &PipelineConfig::new(4)).unwrap(),
            t.frame_indices(),
        );
        assert_eq!(a, b);
        assert!(a.contains("\"eta\": 1.200000"));
        assert!(a.contains("\"strategy\": \"topk\""));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["selection"]["count"], 4);
    }

    #[test]
    fn signals_csv_has_one_row_per_frame() {
        let t = RelevanceTrace::from_scores("s", vec![0.0, 1.0, 0.5]).unwrap();
        let s = StageSignals {
            detail: vec![0.0, 0.5, -0.25],
            intensity: vec![0.0, 0.5, 0.25],
        };
        let csv = signals_to_csv(&t, &s);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().nth(3), Some("2,2,0.500000,-0.250000,0.250000"));
    }
}
