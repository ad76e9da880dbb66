use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wfs_core::io::{self, IoError, TraceDocument};
use wfs_core::synth::{generate, truth_to_string, SynthConfig};
use wfs_core::{run, Embeddings, PipelineConfig, PipelineError, Report, Trace};

use crate::args::{InspectArgs, SelectArgs, SynthArgs};

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or invalid input content (exit 1).
    Validation(String),
    /// File system failure (exit 2).
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Io(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn with_context(path: &Path, e: IoError) -> Failure {
    match Failure::from(e) {
        Failure::Validation(m) => Failure::Validation(format!("{}: {m}", path.display())),
        io => io,
    }
}

fn budget(k: i64) -> Result<usize, Failure> {
    usize::try_from(k)
        .map_err(|_| Failure::Validation(format!("--k must be a non-negative integer, got {k}")))
}

struct Outcome {
    trace: Trace,
    report: Report,
}

fn process(scores: &Path, embeddings: Option<&Path>, config: &PipelineConfig) -> Result<Outcome, Failure> {
    let trace: Trace = io::read_trace(scores).map_err(|e| with_context(scores, e))?;
    let matrix: Option<Embeddings> = embeddings
        .map(|p| io::read_embeddings(p).map_err(|e| with_context(p, e)))
        .transpose()?;
    let report = run(&trace, matrix.as_ref(), config)
        .map_err(|e| Failure::Validation(format!("{}: {e}", scores.display())))?;
    Ok(Outcome { trace, report })
}

fn export_signals(outcome: &Outcome, path: &Path) -> Result<(), Failure> {
    match &outcome.report.signals {
        Some(signals) => write_file(path, &io::signals_to_csv(&outcome.trace, signals)),
        None => {
            log::warn!(
                "`{}`: the wavelet stage did not run, no signals exported",
                outcome.trace.video_id()
            );
            Ok(())
        }
    }
}

pub fn select(args: &SelectArgs) -> Result<(), Failure> {
    let mut config = args.method.config(budget(args.k)?);
    config.export_signals = args.export_signals.is_some();
    config.validate()?;
    if let Some(dir) = &args.batch {
        return select_batch(args, dir, &config);
    }
    let scores = args
        .scores
        .as_deref()
        .expect("clap requires --scores without --batch");
    let outcome = process(scores, args.embeddings.as_deref(), &config)?;
    let text = io::report_to_string(&outcome.report, outcome.trace.frame_indices());
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("standard output: {e}")))?,
    }
    if let Some(path) = &args.export_signals {
        export_signals(&outcome, path)?;
    }
    Ok(())
}

/// `*.trace.json` documents in `dir`, sorted by file name.
fn batch_inputs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let mut traces = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?
            .path();
        let is_trace = path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().ends_with(TRACE_SUFFIX));
        if is_trace && path.is_file() {
            traces.push(path);
        }
    }
    traces.sort();
    Ok(traces)
}

const TRACE_SUFFIX: &str = ".trace.json";

/// File name without a `.trace.json` or `.json` suffix.
fn base_name(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in [TRACE_SUFFIX, ".json"] {
        if let Some(base) = name.strip_suffix(suffix) {
            return base.to_owned();
        }
    }
    name
}

fn select_batch(args: &SelectArgs, dir: &Path, config: &PipelineConfig) -> Result<(), Failure> {
    let out_dir = args.out.as_deref().expect("clap requires --out with --batch");
    let create = |d: &Path| fs::create_dir_all(d).map_err(|e| Failure::Io(format!("{}: {e}", d.display())));
    create(out_dir)?;
    if let Some(d) = &args.export_signals {
        create(d)?;
    }
    let inputs = batch_inputs(dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Failure::Validation("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))?;

    let results: Vec<(PathBuf, Result<(), Failure>)> = pool.install(|| {
        inputs
            .par_iter()
            .map(|scores| {
                let name = base_name(scores);
                let sidecar = scores.with_file_name(format!("{name}.wfse"));
                let result = process(scores, sidecar.is_file().then_some(sidecar.as_path()), config)
                    .and_then(|outcome| {
                        let text = io::report_to_string(&outcome.report, outcome.trace.frame_indices());
                        write_file(&out_dir.join(format!("{name}.report.json")), &text)?;
                        if let Some(d) = &args.export_signals {
                            export_signals(&outcome, &d.join(format!("{name}.signals.csv")))?;
                        }
                        Ok(())
                    });
                (scores.clone(), result)
            })
            .collect()
    });

    let mut worst: Option<Failure> = None;
    for (path, result) in results {
        match result {
            Ok(()) => log::info!("{}: done", path.display()),
            Err(f) => {
                eprintln!("error: {}", f.message());
                if worst.as_ref().is_none_or(|w| f.exit_code() > w.exit_code()) {
                    worst = Some(f);
                }
            }
        }
    }
    match worst {
        Some(f) => Err(match f {
            Failure::Io(_) => Failure::Io("batch finished with I/O errors".into()),
            Failure::Validation(_) => Failure::Validation("batch finished with invalid inputs".into()),
        }),
        None => Ok(()),
    }
}

pub fn inspect(args: &InspectArgs) -> Result<String, Failure> {
    let config = args.method.config(0);
    config.validate()?;
    let outcome = process(&args.scores, None, &config)?;
    Ok(render_inspection(&outcome.report))
}

fn render_inspection(r: &Report) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(s, "video      {}", r.video_id);
    let _ = writeln!(s, "frames     {}", r.n_frames);
    let _ = writeln!(s, "detector   {}", c.boundary_strategy);
    match r.decomposition_level {
        Some(j) => {
            let _ = writeln!(s, "level      {j} ({}, drift {})", c.wavelet, c.drift);
        }
        None => {
            let _ = writeln!(s, "level      -");
        }
    }
    if let Some(t) = r.thresholds {
        let _ = writeln!(
            s,
            "thresholds height {:.6}  prominence {:.6}  min distance {}",
            t.height, t.prominence, t.min_distance
        );
    }
    let _ = writeln!(s, "boundaries {:?}", r.boundaries.indices());
    let _ = writeln!(s, "filter τ   {:.6}", r.filter_threshold);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4} {:>7} {:>7} {:>6} {:>10} {:>9} {:>9} {:>9} {:>9}  kept",
        "id", "start", "end", "len", "importance", "duration", "mean", "max", "variance"
    );
    for seg in &r.segments {
        let id = seg.segment.id;
        let kept = if r.restored.contains(&id) {
            "restored"
        } else if r.retained.contains(&id) {
            "yes"
        } else {
            "no"
        };
        let _ = writeln!(
            s,
            "{:>4} {:>7} {:>7} {:>6} {:>10.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}  {kept}",
            id,
            seg.segment.start,
            seg.segment.end,
            seg.segment.len(),
            seg.importance,
            seg.duration_term,
            seg.mean_term,
            seg.max_term,
            seg.variance_term,
        );
    }
    s
}

pub fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let config = SynthConfig {
        n: args.n,
        num_segments: args.segments,
        level_range: (args.low, args.high),
        min_step: args.min_step,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let generated = generate(&config).map_err(|e| Failure::Validation(e.to_string()))?;
    let truth_path = args.truth.clone().unwrap_or_else(|| {
        let name = format!("{}.truth.json", base_name(&args.out));
        args.out.with_file_name(name)
    });
    let doc = TraceDocument::from_trace(&generated.trace, None);
    write_file(&args.out, &io::trace_document_to_string(&doc))?;
    write_file(&truth_path, &truth_to_string(&generated.truth(&config)))
}
