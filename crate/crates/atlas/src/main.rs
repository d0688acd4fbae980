use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use atlas::config::AtlasConfig;
use atlas::service::{self, ApiError, AppState, ErrorCode};
use atlas::{fixture, ingest, snapshot};
use atlas_core::corpus::describe_store;
use atlas_core::segmentation::segment;
use atlas_core::{CorpusStore, Millis, Pipeline, QuerySession, SegmentationParams, Taxonomy, VideoMeta};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "atlas", version, about = "Question answering over segmented traffic video")]
struct Cli {
    /// TOML config file; ATLAS_CONFIG when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus snapshot file, overriding the config.
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the clip windows of a video of the given duration.
    Segment {
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        clip_len: Option<u64>,
        #[arg(long)]
        overlap: Option<u64>,
    },
    /// Ingest an artifact file into the snapshot.
    Ingest {
        #[arg(value_parser = ["videos", "captions", "detections", "masks"])]
        kind: String,
        path: PathBuf,
    },
    /// Caption and embed every clip of a registered video.
    Preprocess { video: String },
    /// Pick the layout reference frame of a video from its detections.
    ReferenceFrame {
        video: String,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Replace the snapshot with the bundled demonstration corpus.
    LoadFixture,
    /// Summarize the snapshot.
    Status,
    /// Answer one question; `--session` carries the conversation across runs.
    Query {
        question: String,
        #[arg(long)]
        session: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Print the full answer document as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

struct Failure {
    code: ErrorCode,
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: ErrorCode::BadRequest, message: e.to_string() }
    }
}

fn api(e: ApiError) -> Failure {
    let message = match &e.reason {
        Some(r) if e.code == ErrorCode::Refused => format!("refused: {r}"),
        _ => e.message,
    };
    Failure { code: e.code, message }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error ({}): {}", serde_json::to_value(f.code).unwrap().as_str().unwrap_or_default(), f.message);
            ExitCode::from(f.code.exit_code() as u8)
        }
    }
}

struct Env {
    config: AtlasConfig,
    taxonomy: Taxonomy,
    snapshot: PathBuf,
}

impl Env {
    fn load(cli: &Cli) -> Result<Env, Failure> {
        let mut config = AtlasConfig::load(cli.config.as_deref())?;
        if let Some(s) = &cli.snapshot {
            config.service.snapshot = s.clone();
        }
        let taxonomy = config.taxonomy()?;
        let snapshot = config.service.snapshot.clone();
        Ok(Env { config, taxonomy, snapshot })
    }

    fn store(&self) -> Result<CorpusStore, Failure> {
        match std::fs::read(&self.snapshot) {
            Ok(blob) => snapshot::restore(&blob, &self.taxonomy)
                .map_err(|e| Failure { code: ErrorCode::Conflict, message: format!("{}: {e}", self.snapshot.display()) }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(CorpusStore::new(self.config.segmentation_params()?)),
            Err(e) => Err(e.into()),
        }
    }

    fn save(&self, store: &CorpusStore) -> Result<(), Failure> {
        write_atomic(&self.snapshot, &snapshot::snapshot(store))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Segment { duration, clip_len, overlap } => {
            let base = SegmentationParams::default();
            let params = SegmentationParams::new(
                clip_len.map(|s| Millis(s * 1000)).unwrap_or(base.clip_len()),
                overlap.map(|s| Millis(s * 1000)).unwrap_or(base.overlap()),
            )?;
            let d = Millis::from_secs_f64(*duration).ok_or_else(|| Failure::from("duration must be a finite, non-negative number"))?;
            let video = VideoMeta::new("video", d, 25.0, "")?;
            println!("{:>5}  {:>9}  {:>9}", "clip", "start", "end");
            for w in segment(&video, &params)? {
                println!("{:>5}  {:>9}  {:>9}", w.index, w.start.clock(), w.end().clock());
            }
            Ok(())
        }
        Command::Ingest { kind, path } => {
            let env = Env::load(&cli)?;
            let gateway = env.config.gateway(&env.taxonomy)?;
            let text = std::fs::read_to_string(path)?;
            let mut store = env.store()?;
            let report = match kind.as_str() {
                "videos" => ingest::ingest_videos(&mut store, &text),
                "captions" => ingest::ingest_captions(&mut store, &text, &gateway),
                "detections" => ingest::ingest_detections(&mut store, &text),
                _ => ingest::ingest_masks(&mut store, &text, &env.taxonomy),
            }
            .map_err(|e| Failure::from(format!("{}: {e}", path.display())))?;
            env.save(&store)?;
            println!("{} {kind} record(s) ingested, {} rejected", report.count, report.rejected.len());
            for r in &report.rejected {
                println!("  line {}: {}", r.line, r.message);
            }
            Ok(())
        }
        Command::Preprocess { video } => {
            let env = Env::load(&cli)?;
            let gateway = env.config.gateway(&env.taxonomy)?;
            let mut store = env.store()?;
            if store.video(video).is_none() {
                return Err(api(ApiError::not_found(format!("unknown video `{video}`"))));
            }
            let report = store.run_preprocessing(video, &gateway)?;
            env.save(&store)?;
            println!("{video}: {} clip(s) indexed, {} failed", report.indexed.len(), report.failures.len());
            for f in &report.failures {
                println!("  clip {}: {}", f.clip_index, f.error);
            }
            if report.indexed.is_empty() && !report.failures.is_empty() {
                return Err(Failure { code: ErrorCode::BackendFailure, message: "no clip could be processed".into() });
            }
            Ok(())
        }
        Command::ReferenceFrame { video, samples } => {
            let env = Env::load(&cli)?;
            let store = env.store()?;
            let g = &env.config.grounding;
            let frame = store.reference_frame(video, samples.unwrap_or(g.layout_samples), g.confidence_threshold).map_err(|e| match e {
                atlas_core::CorpusError::UnknownVideo(_) => api(ApiError::not_found(e.to_string())),
                other => other.into(),
            })?;
            let fps = store.video(video).map(|v| v.fps).unwrap_or(1.0);
            println!("{frame} ({})", Millis((frame as f64 * 1000.0 / fps) as u64).clock());
            Ok(())
        }
        Command::LoadFixture => {
            let env = Env::load(&cli)?;
            let gateway = env.config.gateway(&env.taxonomy)?;
            let store = fixture::fixture_corpus(&env.taxonomy, &gateway)?;
            env.save(&store)?;
            println!("{}", describe_store(&store));
            Ok(())
        }
        Command::Status => {
            let env = Env::load(&cli)?;
            println!("{}", describe_store(&env.store()?));
            Ok(())
        }
        Command::Query { question, session, k, json } => {
            let env = Env::load(&cli)?;
            let gateway = env.config.gateway(&env.taxonomy)?;
            let store = env.store()?;
            let mut sess = match session.as_deref().map(std::fs::read_to_string) {
                Some(Ok(text)) => serde_json::from_str(&text)?,
                Some(Err(e)) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                _ => QuerySession::new(uuid::Uuid::new_v4().simple().to_string()),
            };
            let pipeline = Pipeline::new(&env.taxonomy, &gateway, &store, env.config.pipeline_config());
            let mut quiet = |_: &atlas_core::Stage| {};
            let answer = if sess.turns().is_empty() {
                pipeline.answer_query(&mut sess, question, *k, &mut quiet)
            } else {
                pipeline.follow_up(&mut sess, question, *k, &mut quiet)
            }
            .map_err(|e| api(e.into()))?;
            if let Some(path) = session {
                write_atomic(path, serde_json::to_string_pretty(&sess)?.as_bytes())?;
            }
            if *json {
                let doc = service::AnswerDoc {
                    session_id: sess.session_id.clone(),
                    timeline: atlas_core::pipeline::related_for_timeline(&answer),
                    answer,
                };
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("{}", mark_annotations(&answer));
                println!();
                println!("chosen clip: {} ({:?} confidence)", answer.chosen, answer.confidence_band);
                for e in &answer.graph.edges {
                    let label = |id: &str| answer.graph.node(id).map(|n| n.canonical_label.clone()).unwrap_or_default();
                    println!("  {} --{}--> {}", label(&e.subject), e.label, label(&e.object));
                }
                println!();
                println!("{:>4}  {:<24}  {:>5}  {:>6}  {:>6}  {:>6}", "rank", "video", "clip", "start", "end", "score");
                for h in &answer.related {
                    let d = &h.descriptor;
                    println!("{:>4}  {:<24}  {:>5}  {:>6}  {:>6}  {:>6.3}", h.rank, d.video_id, d.clip_index, d.start.clock(), d.end.clock(), h.score);
                }
            }
            Ok(())
        }
        Command::Serve { bind } => {
            let env = Env::load(&cli)?;
            let gateway = env.config.gateway(&env.taxonomy)?;
            let store = env.store()?;
            let addr = bind.clone().unwrap_or_else(|| env.config.service.bind.clone()).parse()?;
            let mut state = AppState::new(env.taxonomy.clone(), gateway, store, env.config.pipeline_config());
            state.media_dir = env.config.service.media_dir.clone();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(Arc::new(state), addr))?;
            Ok(())
        }
    }
}

/// Narrative with each annotated span written as `[text]{class}`.
fn mark_annotations(answer: &atlas_core::AugmentedAnswer) -> String {
    let text = &answer.narrative;
    let mut out = String::with_capacity(text.len() * 2);
    let mut at = 0;
    for a in &answer.annotations {
        let (Some(span), Some(node)) = (a.span.slice(text), answer.graph.node(&a.node_id)) else { continue };
        if a.span.start < at {
            continue;
        }
        out.push_str(&text[at..a.span.start]);
        out.push_str(&format!("[{span}]{{{}}}", node.class_id));
        at = a.span.end;
    }
    out.push_str(&text[at..]);
    out
}
